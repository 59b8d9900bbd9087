import numpy as np

from unittest import TestCase

from nlrabi.errors import ConvergenceError, DegenerateSteadyStateError
from nlrabi.hilbert import basis_state, make_space, number_op, expectation, GROUND
from nlrabi.model import liouvillian
from nlrabi.solvers import (converge_cutoff, evolve_vector, manifold_populations, observables, propagate,
                            steady_state, steady_observables)
from nlrabi.weak_excitation import closed_form_observables, limit_results

from tests.test_utils import DEFAULT_PARAMS, SMALL_PARAMS


class TestSteadyState(TestCase):

    @classmethod
    def setUpClass(cls) -> None:
        cls.space = make_space(5)
        cls.result = steady_state(liouvillian(SMALL_PARAMS, cls.space))

    def test_residual_and_validity(self):
        assert self.result.converged, f"Residual {self.result.residual:.3e} too large."
        assert self.result.n_max_used == 5
        assert np.min(self.result.rho.eigenvalues()) > -1e-10
        assert self.result.gap_ratio > 1e6

    def test_field_amplitude_vanishes(self):
        assert observables(self.result.rho).field_amplitude < 1e-10

    def test_agrees_with_closed_form_at_resonance(self):
        numeric = observables(self.result.rho)
        analytic = closed_form_observables(SMALL_PARAMS)
        relative = abs(numeric.photon_number - analytic.photon_number) / analytic.photon_number
        assert relative < 0.05, f"<a+a> deviates by {relative:.3f} from the closed form."
        assert abs(numeric.inversion) < 0.02, f"<sigma_z> should vanish at U = -2 w0, got {numeric.inversion}."
        assert numeric.g2_zero < 0.2, f"Expected antibunching, got g2(0) = {numeric.g2_zero}."

    def test_manifold_populations(self):
        p1, p2 = manifold_populations(self.result.rho)
        assert np.isclose(p1 + p2, 1.0)
        # Both manifolds are equally stable at U = -2 w0.
        assert abs(p1 - 0.5) < 0.05, f"p1 = {p1}"

    def test_degenerate_without_coupling(self):
        with self.assertRaises(DegenerateSteadyStateError):
            steady_state(liouvillian(SMALL_PARAMS.replace(g=0.0), self.space))

    def test_steady_observables(self):
        result, values = steady_observables(SMALL_PARAMS, n_max=5)
        assert np.isclose(values.photon_number, observables(result.rho).photon_number)


class TestPropagation(TestCase):

    def test_cavity_decay_without_coupling(self):
        params = SMALL_PARAMS.replace(g=0.0)
        space = make_space(3)
        times = np.linspace(0.0, 5.0, 11)
        states = propagate(liouvillian(params, space), basis_state(space, 1, GROUND).projector(), times)
        photons = np.array([expectation(number_op(space), rho).real for rho in states])
        assert np.allclose(photons, np.exp(-2 * params.kappa * times), atol=1e-8)

    def test_steady_state_is_stationary(self):
        space = make_space(4)
        generator = liouvillian(SMALL_PARAMS, space)
        rho = steady_state(generator).rho
        later = propagate(generator, rho, [0.0, 10.0])[-1]
        assert rho.trace_distance(later) < 1e-8

    def test_grid_validation(self):
        space = make_space(2)
        generator = liouvillian(SMALL_PARAMS, space)
        rho = basis_state(space, 0, GROUND).projector()
        with self.assertRaises(ValueError):
            propagate(generator, rho, [0.5, 1.0])
        with self.assertRaises(ValueError):
            propagate(generator, rho, [0.0, 1.0, 1.0])

    def test_evolve_vector_single_point(self):
        space = make_space(2)
        vec = np.arange(space.dim ** 2, dtype=complex)
        out = evolve_vector(liouvillian(SMALL_PARAMS, space), vec, [2.0])
        assert out.shape == (1, space.dim ** 2) and np.array_equal(out[0], vec)


class TestCutoff(TestCase):

    def test_converges_in_weak_excitation(self):
        result = converge_cutoff(SMALL_PARAMS, tol=1e-8, n_max_start=3)
        assert result.n_max_used >= 3
        reference = observables(steady_state(liouvillian(SMALL_PARAMS, make_space(result.n_max_used + 8))).rho)
        assert abs(observables(result.rho).photon_number - reference.photon_number) < 1e-7

    def test_cap_reached(self):
        with self.assertRaises(ConvergenceError):
            converge_cutoff(SMALL_PARAMS, tol=1e-30, n_max_start=2, n_max_cap=6)

    def test_invalid_request(self):
        with self.assertRaises(ValueError):
            converge_cutoff(SMALL_PARAMS, observable_request=('entropy',))
        with self.assertRaises(ValueError):
            converge_cutoff(SMALL_PARAMS, tol=0.0)


class TestResonanceScan(TestCase):

    def test_lorentzian_half_width(self):
        params = DEFAULT_PARAMS.replace(g=0.04)
        space = make_space(5)
        grid = -2 * params.omega0 + np.arange(-40, 41) * 0.1
        photons = np.array([observables(steady_state(liouvillian(params.replace(U=u), space)).rho).photon_number
                            for u in grid])
        peak = int(np.argmax(photons))
        assert np.isclose(grid[peak], -2 * params.omega0)
        expected_peak = params.g ** 2 / (params.omega ** 2 + params.kappa ** 2)
        assert abs(photons[peak] - expected_peak) / expected_peak < 0.05

        half = photons[peak] / 2
        above = np.nonzero(photons >= half)[0]
        lo, hi = above[0], above[-1]
        left = np.interp(half, photons[lo - 1:lo + 1], grid[lo - 1:lo + 1])
        right = np.interp(half, photons[hi:hi + 2][::-1], grid[hi:hi + 2][::-1])
        expected = 2 * np.sqrt(params.omega ** 2 + params.kappa ** 2)
        hwhm = (right - left) / 2
        assert np.isclose(limit_results(params).half_width, expected)
        assert abs(hwhm - expected) / expected < 0.10, f"HWHM {hwhm:.4f}, expected {expected:.4f}."
