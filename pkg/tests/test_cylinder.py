import math

import numpy as np
import pytest

from conftest import steklov_by_extension
from secondvar.cylinder import (CylinderModuli, alpha_of_a, b2, b4, branch_eigenvalue, find_T1,
                                mu1, mu2, sigma1_eigenspace, steklov_spectrum)
from secondvar.errors import InvalidModuli, NotBelowT1
from secondvar.fourier import COS, EVEN, ODD, SIN, BoundaryFreq, check_orthonormal

# root of coth T = T from mpmath.findroot at 30 digits
T1_REFERENCE = 1.1996786402577338


class TestSteklovSpectrum:
    def test_first_nonzero_at_T_one(self):
        spec = steklov_spectrum(CylinderModuli(1.0), 4)
        assert spec[0].eigenvalue == 0.0
        assert spec[1].eigenvalue == spec[2].eigenvalue == pytest.approx(0.7615941559557649, rel=1e-15)
        assert {spec[1].freq, spec[2].freq} == {BoundaryFreq(1, SIN, EVEN), BoundaryFreq(1, COS, EVEN)}
        assert spec[1].eigenvalue == pytest.approx(steklov_by_extension(1, "even", 1.0), rel=1e-9)

    def test_odd_constant_branch(self):
        spec = steklov_spectrum(CylinderModuli(1.0), 4)
        odd0 = [br for br in spec if br.freq == BoundaryFreq(0, COS, ODD)]
        assert odd0[0].eigenvalue == pytest.approx(1.0)
        assert steklov_by_extension(0, "odd", 1.0) == pytest.approx(1.0, rel=1e-9)

    def test_large_T_asymptotics(self):
        assert branch_eigenvalue(1, EVEN, 30.0) == pytest.approx(1.0, rel=1e-15)
        assert branch_eigenvalue(1, ODD, 30.0) == pytest.approx(1.0, rel=1e-15)

    @pytest.mark.parametrize("T", [0.3, 1.0, 1.19])
    @pytest.mark.parametrize("n", [0, 1, 2, 5])
    @pytest.mark.parametrize("parity", [EVEN, ODD])
    def test_harmonic_extension(self, T, n, parity):
        # the profile cosh/sinh(n t) makes cos(n theta) * profile harmonic:
        # d^2/dt^2 profile = n^2 profile; check via finite differences, and the
        # Steklov quotient at the boundary circle
        profile = {EVEN: math.cosh, ODD: math.sinh}[parity]
        if n > 0:
            h = 1e-4
            f = [profile(n * (T + j * h)) for j in (-1, 0, 1)]
            assert (f[0] - 2 * f[1] + f[2]) / h ** 2 == pytest.approx(n * n * f[1], rel=1e-6)
        assert branch_eigenvalue(n, parity, T) == pytest.approx(
            steklov_by_extension(n, parity, T), rel=1e-8, abs=1e-12)

    def test_each_branch_counted_twice(self):
        spec = steklov_spectrum(CylinderModuli(0.8), 3)
        assert len(spec) == 2 * (1 + 2 * 3)
        assert sum(1 for br in spec if br.eigenvalue == 0.0) == 1
        assert all(np.diff([br.eigenvalue for br in spec]) >= 0)

    def test_n_max_must_be_positive(self):
        with pytest.raises(ValueError):
            steklov_spectrum(CylinderModuli(1.0), 0)

    def test_invalid_T(self):
        with pytest.raises(InvalidModuli):
            CylinderModuli(0.0)

    @pytest.mark.parametrize("T", np.linspace(0.02, T1_REFERENCE - 1e-6, 60))
    def test_branch_ordering_below_T1(self, T):
        s1 = math.tanh(T)
        assert 0 < s1 < min(1 / T, 2 * math.tanh(2 * T))
        spec = steklov_spectrum(CylinderModuli(T), 6)
        assert spec[1].eigenvalue == spec[2].eigenvalue < spec[3].eigenvalue


class TestSigma1:
    def test_T_one(self):
        e = sigma1_eigenspace(CylinderModuli(1.0))
        spec = steklov_spectrum(CylinderModuli(1.0), 5)
        assert e.dim == 2
        assert e.eigenvalue == min(br.eigenvalue for br in spec if br.eigenvalue > 0)
        check_orthonormal(list(e.basis))
        for u in e.basis:
            (k, c), = u.terms.items()
            assert k.n == 1 and k.parity == EVEN
            assert c == pytest.approx(1 / math.sqrt(2 * math.pi))

    def test_close_to_T1(self):
        e = sigma1_eigenspace(CylinderModuli(1.19))
        assert e.dim == 2
        assert e.eigenvalue == pytest.approx(math.tanh(1.19)) and e.eigenvalue < 1 / 1.19

    @pytest.mark.parametrize("T", [1.3, 2.0, T1_REFERENCE + 1e-9])
    def test_above_T1_rejected(self, T):
        with pytest.raises(NotBelowT1):
            sigma1_eigenspace(CylinderModuli(T))


class TestT1:
    def test_value(self):
        assert find_T1() == pytest.approx(1.19968, abs=1e-4)
        assert find_T1() == pytest.approx(T1_REFERENCE, abs=1e-10)

    def test_defining_equation(self):
        t1 = find_T1()
        assert 1 / math.tanh(t1) - t1 == pytest.approx(0.0, abs=1e-9)
        assert math.tanh(t1) * t1 == pytest.approx(1.0, abs=1e-9)

    def test_tanh_meets_inverse(self):
        # at T1 the even n = 1 branch meets the odd n = 0 branch
        t1 = find_T1()
        assert branch_eigenvalue(1, EVEN, t1) == pytest.approx(branch_eigenvalue(0, ODD, t1), rel=1e-10)


class TestClosedForms:
    def test_reference_values(self):
        assert b2(1.2) == pytest.approx(2.47069, abs=1e-4)
        assert b4(1.2) == pytest.approx(1.52666, abs=1e-4)

    @pytest.mark.parametrize("T", [0.2, 0.7, 1.0, 1.15])
    def test_from_spectrum(self, T):
        spec = {(br.freq.n, br.freq.parity): br.eigenvalue
                for br in steklov_spectrum(CylinderModuli(T), 4)}
        s1 = spec[(1, EVEN)]
        assert b2(T) == pytest.approx((spec[(2, EVEN)] + s1) / (spec[(2, EVEN)] - s1), rel=1e-14)
        assert b4(T) == pytest.approx((spec[(4, EVEN)] + s1) / (spec[(4, EVEN)] - s1), rel=1e-14)

    def test_positivity_margins_at_1_2(self):
        v1 = 1 + 0.04 + 2 * mu1(0.2, 1.2)
        v2 = 1 + 0.04 + 2 * mu2(0.2, 1.2)
        assert v1 > 0.2238 and v1 == pytest.approx(0.2306, abs=1e-4)
        assert v2 > 0.2158

    @pytest.mark.parametrize("T", [0.3, 1.0])
    def test_mu2_at_zero(self, T):
        assert mu2(0.0, T) == pytest.approx(-b2(T) / 4, rel=1e-15)

    def test_alpha_uses_the_smaller_mu(self):
        for a in (0.0, 0.2, 0.5):
            mu = min(mu1(a, 1.0), mu2(a, 1.0))
            assert alpha_of_a(a, 1.0) == pytest.approx(
                2 * math.pi * math.tanh(1.0) * ((1 + a * a) + 2 * mu), rel=1e-15)

    def test_alpha_at_zero(self):
        assert alpha_of_a(0.0, 1.0) == pytest.approx(
            2 * math.pi * math.tanh(1.0) * (1 - b2(1.0) / 2), rel=1e-14)
        assert alpha_of_a(0.0, 1.0) < 0 < alpha_of_a(0.2, 1.0)

    def test_monotone(self):
        ts = np.linspace(0.01, T1_REFERENCE, 2000)
        assert np.all(np.diff([b2(t) for t in ts]) > 0)
        assert np.all(np.diff([b4(t) for t in ts]) > 0)
