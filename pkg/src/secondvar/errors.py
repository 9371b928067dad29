"""Exception hierarchy shared by every module of the package."""


class SecondVarError(Exception):
    """Base class for all errors raised by ``secondvar``."""


class NotPositiveDefinite(SecondVarError):
    pass


class ConvergenceError(SecondVarError):
    pass


class NoSignChange(SecondVarError):
    pass


class DomainMismatch(SecondVarError):
    pass


class BasisNotOrthonormal(SecondVarError):
    pass


class InvalidModuli(SecondVarError):
    pass


class MultiplicityNotTwo(SecondVarError):
    pass


class NotBelowT1(SecondVarError):
    pass


class NotAdmissible(SecondVarError):
    pass


class IncompleteSpectrum(SecondVarError):
    pass


class DegenerateGap(SecondVarError):
    pass


class InsufficientSamples(SecondVarError):
    pass


class SpecError(SecondVarError):
    """Malformed perturbation or sweep specification file."""
