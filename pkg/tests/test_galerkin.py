import math

import numpy as np
import pytest

from secondvar.cylinder import CylinderModuli, omega_family, sigma1_critical_data, steklov_spectrum
from secondvar.engine import second_variation
from secondvar.errors import InsufficientSamples
from secondvar.fourier import COS, EVEN, ODD, SIN, TrigPoly
from secondvar.galerkin import (VerificationConfig, cylinder_galerkin_matrices,
                                cylinder_perturbed_spectrum, default_config, fit_quadratic,
                                measure_second_derivative, torus_perturbed_spectrum, verify)
from secondvar.torus import TorusModuli, enumerate_spectrum, lambda1_critical_data

FOUR_PI_SQ = 4 * math.pi ** 2


class TestConfig:
    def test_cutoff_must_cover_three_bandwidths(self):
        c = CylinderModuli(1.0)
        with pytest.raises(ValueError, match="bandwidth"):
            VerificationConfig(cutoff=8).checked(omega_family(c, 0.2))

    def test_quadrature_must_cover_four_bandwidths(self):
        c = CylinderModuli(1.0)
        with pytest.raises(ValueError, match="quad_points"):
            VerificationConfig(cutoff=12, quad_points=40).checked(omega_family(c, 0.2))

    def test_default_quadrature(self):
        cfg = VerificationConfig(cutoff=12).checked(omega_family(CylinderModuli(1.0), 0.2))
        assert cfg.quad_points == 4 * (2 * 12 + 3)

    @pytest.mark.parametrize("kwargs", [{"cutoff": 0}, {"cutoff": 8, "step": 0.0},
                                        {"cutoff": 8, "half_width": 1}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            VerificationConfig(**kwargs)

    def test_steps(self):
        levels = VerificationConfig(cutoff=8, step=0.1).steps()
        assert levels[0] == pytest.approx((-0.2, -0.1, 0.0, 0.1, 0.2))
        assert levels[1] == pytest.approx((-0.1, -0.05, 0.0, 0.05, 0.1))


class TestTorusSpectrum:
    def test_unperturbed(self, square_torus):
        m, omega, _ = square_torus
        sp = torus_perturbed_spectrum(m, omega, 0.0, VerificationConfig(cutoff=6))
        exact = enumerate_spectrum(m, 6)
        values = np.repeat([e.eigenvalue for e in exact], [e.dim for e in exact])
        assert np.allclose(sp.eigenvalues[:len(values)], values, rtol=1e-10, atol=1e-10)
        assert sp.eigenvalues[1] == pytest.approx(FOUR_PI_SQ, rel=1e-10)
        assert sp.eigenvalues[2] == pytest.approx(FOUR_PI_SQ, rel=1e-10)
        assert sp.eigenvalues[3] > FOUR_PI_SQ * 1.1
        assert sp.normalizer == pytest.approx(1.0, rel=1e-14)

    def test_small_t_matches_half_alpha(self, square_torus):
        m, omega, data = square_torus
        alpha = second_variation(omega, data).alpha
        cfg = VerificationConfig(cutoff=8)
        base = torus_perturbed_spectrum(m, omega, 0.0, cfg)
        sp = torus_perturbed_spectrum(m, omega, 0.1, cfg)
        change = sp.eigenvalues[1] * sp.normalizer - base.eigenvalues[1] * base.normalizer
        # alpha is the second derivative, so the t^2 coefficient is alpha / 2
        assert change / 0.01 == pytest.approx(alpha / 2, rel=0.02)

    def test_sign_symmetry(self):
        m = TorusModuli(0.3, 1.2)
        omega = TrigPoly.from_terms(m.domain(), [((1, 0), COS, 1.0), ((0, 1), SIN, 0.7)])
        cfg = VerificationConfig(cutoff=6)
        a = torus_perturbed_spectrum(m, omega, -0.2, cfg)
        b = torus_perturbed_spectrum(m, -omega, 0.2, cfg)
        assert np.allclose(a.eigenvalues, b.eigenvalues, rtol=1e-12)
        assert a.normalizer == pytest.approx(b.normalizer, rel=1e-14)

    def test_area_of_perturbed_metric(self):
        # area of e^{t sqrt2 sin(2 pi y)} g_{0.5,1} is I_0(sqrt2 t)
        from scipy.special import i0
        m = TorusModuli(0.5, 1.0)
        omega = TrigPoly.from_terms(m.domain(), [((0, 1), SIN, math.sqrt(2))])
        sp = torus_perturbed_spectrum(m, omega, 0.3, VerificationConfig(cutoff=4))
        assert sp.normalizer == pytest.approx(i0(math.sqrt(2) * 0.3), rel=1e-14)

    def test_wrong_torus(self, square_torus):
        _, omega, _ = square_torus
        with pytest.raises(ValueError):
            torus_perturbed_spectrum(TorusModuli(0.3, 1.2), omega, 0.1, VerificationConfig(cutoff=6))


class TestCylinderSpectrum:
    def test_unperturbed(self, cylinder_one):
        c, omega, _ = cylinder_one
        sp = cylinder_perturbed_spectrum(c, omega, 0.0, VerificationConfig(cutoff=12))
        t1 = math.tanh(1.0)
        assert np.allclose(sp.eigenvalues[:4], [0.0, t1, t1, 1.0], atol=1e-10)
        exact = np.sort([br.eigenvalue for br in steklov_spectrum(c, 12)])
        assert np.allclose(sp.eigenvalues, exact, rtol=1e-10, atol=1e-12)
        assert sp.normalizer == pytest.approx(4 * math.pi, rel=1e-14)

    def test_small_t_matches_half_alpha(self, cylinder_one):
        c, omega, data = cylinder_one
        alpha = second_variation(omega, data).alpha
        cfg = VerificationConfig(cutoff=24)
        base = cylinder_perturbed_spectrum(c, omega, 0.0, cfg)
        sp = cylinder_perturbed_spectrum(c, omega, 0.05, cfg)
        change = sp.eigenvalues[1] * sp.normalizer - base.eigenvalues[1] * base.normalizer
        assert change / 0.05 ** 2 == pytest.approx(alpha / 2, rel=0.02)

    def test_odd_parity_couples_blocks(self):
        c = CylinderModuli(0.8)
        omega = TrigPoly.from_terms(c.domain(), [(1, SIN, EVEN, 1.0), (2, COS, ODD, 0.5)])
        cfg = VerificationConfig(cutoff=8)
        even = np.array([p == EVEN for _, _, p in cylinder_galerkin_matrices(c, omega, 0.0, cfg).labels])
        at0 = cylinder_galerkin_matrices(c, omega, 0.0, cfg).mass
        at1 = cylinder_galerkin_matrices(c, omega, 0.1, cfg).mass
        assert np.max(np.abs(at0[np.ix_(even, ~even)])) < 1e-14
        assert np.max(np.abs(at1[np.ix_(even, ~even)])) > 1e-3
        even_only = omega.parity_part(EVEN)
        m2 = cylinder_galerkin_matrices(c, even_only, 0.1, cfg).mass
        assert np.max(np.abs(m2[np.ix_(even, ~even)])) < 1e-14

    def test_sign_symmetry(self, cylinder_one):
        c, omega, _ = cylinder_one
        cfg = VerificationConfig(cutoff=12)
        a = cylinder_perturbed_spectrum(c, omega, -0.1, cfg)
        b = cylinder_perturbed_spectrum(c, -omega, 0.1, cfg)
        assert np.allclose(a.eigenvalues, b.eigenvalues, rtol=1e-12, atol=1e-14)


class TestFit:
    def test_parabola(self):
        samples = [(t, 3 + 5 * t * t) for t in (-0.2, -0.1, 0.0, 0.1, 0.2)]
        d2, d1 = fit_quadratic(samples)
        assert d2 == pytest.approx(10.0, rel=1e-12) and d1 == pytest.approx(0.0, abs=1e-12)

    def test_first_derivative_flags_non_criticality(self):
        samples = [(t, 3 + 2 * t + 5 * t * t) for t in (-0.2, -0.1, 0.0, 0.1, 0.2)]
        assert fit_quadratic(samples)[1] == pytest.approx(2.0, rel=1e-12)

    def test_richardson_removes_quartic_term(self):
        def f(t):
            return 1 + 4 * t * t + 7 * t ** 4

        coarse = [(j * 0.1, f(j * 0.1)) for j in range(-2, 3)]
        fine = [(j * 0.05, f(j * 0.05)) for j in range(-2, 3)]
        plain, _ = measure_second_derivative(coarse)
        extrapolated, _ = measure_second_derivative(coarse, fine)
        assert abs(extrapolated - 8.0) < abs(plain - 8.0) / 10

    @pytest.mark.parametrize("ts", [(-0.1, 0.0, 0.1), (-0.2, -0.1, 0.1, 0.2, 0.3),
                                    (-0.2, -0.1, 0.0, 0.1, 0.3)])
    def test_insufficient(self, ts):
        with pytest.raises(InsufficientSamples):
            fit_quadratic([(t, t * t) for t in ts])


class TestVerify:
    def test_torus_example(self, square_torus):
        _, omega, data = square_torus
        report = verify(data, omega, default_config(data))
        assert report.predicted_alpha == pytest.approx(FOUR_PI_SQ / 6, rel=1e-12)
        assert report.relative_error <= 1e-2
        assert report.first_derivative_residual <= 1e-6 * data.eigenvalue
        assert np.all(report.branch_relative_errors <= 2e-2)
        assert np.allclose(report.normalized_branch_curvatures / FOUR_PI_SQ, [1 / 6, 7 / 6], rtol=2e-2)
        assert report.csv_rows()[0] == ["t", "lambda_k", "normalizer", "normalized"]
        assert len(report.csv_rows()) == 1 + 7

    def test_generic_torus_perturbation(self):
        m = TorusModuli(0.3, 1.2)
        omega = TrigPoly.from_terms(m.domain(), [
            ((1, 0), COS, 0.6), ((1, 1), SIN, 0.3), ((0, 1), SIN, 0.8)])
        data = lambda1_critical_data(m, omega)
        report = verify(data, omega, VerificationConfig(cutoff=8))
        assert report.relative_error <= 1e-2
        assert np.all(report.branch_relative_errors <= 2e-2)

    def test_cylinder_example(self, cylinder_one):
        _, omega, data = cylinder_one
        report = verify(data, omega, default_config(data))
        assert report.relative_error <= 1e-2
        assert report.first_derivative_residual <= 1e-6 * data.eigenvalue
        assert np.all(report.branch_relative_errors <= 2e-2)
        assert np.all(report.normalized_branch_curvatures > 0)

    def test_cylinder_with_odd_part(self):
        c = CylinderModuli(0.7)
        omega = omega_family(c, 0.3) + TrigPoly.from_terms(c.domain(), [(1, COS, ODD, 0.4)])
        data = sigma1_critical_data(c, omega)
        report = verify(data, omega, VerificationConfig(cutoff=24))
        assert report.relative_error <= 1e-2
        assert np.all(report.branch_relative_errors <= 2e-2)

    def test_zero_perturbation(self, cylinder_one):
        c, _, _ = cylinder_one
        zero = TrigPoly.zero(c.domain())
        data = sigma1_critical_data(c, zero)
        report = verify(data, zero, VerificationConfig(cutoff=6))
        assert report.measured_alpha == pytest.approx(0.0, abs=1e-9)

    def test_cutoff_doubling_cylinder(self, cylinder_one):
        _, omega, data = cylinder_one
        a = verify(data, omega, VerificationConfig(cutoff=24)).measured_alpha
        b = verify(data, omega, VerificationConfig(cutoff=48)).measured_alpha
        assert abs(a - b) / abs(b) < 1e-3
