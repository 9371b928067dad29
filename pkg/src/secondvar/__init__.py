"""Second variation of normalized Laplace and Steklov eigenvalues at flat tori
and cylinders, with a Galerkin cross-check of the predicted coefficients."""

__version__ = "0.1.0"

from .cylinder import (CylinderModuli, alpha_of_a, b2, b4, find_T1, mu1, mu2, omega_family,
                       sigma1_critical_data, sigma1_eigenspace, steklov_spectrum)
from .engine import (CriticalData, Eigenspace, QFormResult, SecondVariation, assemble_Q,
                     check_admissibility, eigenfunction_first_variation, second_variation)
from .fourier import TrigPoly, inner, multiply, parse_perturbation, project
from .galerkin import (VariationReport, VerificationConfig, cylinder_perturbed_spectrum,
                       measure_second_derivative, torus_perturbed_spectrum, verify)
from .torus import (TorusModuli, default_perturbation, enumerate_spectrum, lambda1_critical_data,
                    lambda1_eigenspace, normalized_eigenvalue)
