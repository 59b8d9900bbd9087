import numpy as np

from unittest import TestCase

from nlrabi.hilbert import basis_state, make_space, EXCITED, GROUND
from nlrabi.model import (ModelParams, at_special_point, bare_energy, effective_hamiltonian, hamiltonian,
                          liouvillian, master_equation_rhs)

from tests.test_utils import SMALL_PARAMS


class TestModelParams(TestCase):

    def test_from_ratios(self):
        params = ModelParams.from_ratios(omega=2.0, omega0=10, g=0.1, U=-20, kappa=0.2)
        assert params.omega0 == 20.0 and params.U == -40.0 and np.isclose(params.kappa, 0.4)

    def test_invalid_values(self):
        with self.assertRaises(ValueError):
            ModelParams(omega0=1.0, omega=-1.0, g=0.1, U=0.0, kappa=0.1)
        with self.assertRaises(ValueError):
            ModelParams(omega0=1.0, omega=1.0, g=0.1, U=float('nan'), kappa=0.1)
        with self.assertRaises(ValueError):
            ModelParams(omega0=1.0, omega=1.0, g=0.1, U=0.0, kappa=-0.1)

    def test_special_points(self):
        params = SMALL_PARAMS
        assert at_special_point(params, 'antibunching').U == -2 * params.omega0
        assert at_special_point(params, 'cycle_upper').U == -2 * params.omega0 + 2 * params.omega
        with self.assertRaises(ValueError):
            at_special_point(params, 'nowhere')


class TestHamiltonian(TestCase):

    def setUp(self) -> None:
        self.space = make_space(6)

    def test_hermitian(self):
        assert hamiltonian(SMALL_PARAMS, self.space).is_hermitian(tol=0.0)

    def test_uncoupled_diagonal_matches_bare_energies(self):
        params = SMALL_PARAMS.replace(g=0.0, U=-3.0)
        diagonal = np.diag(hamiltonian(params, self.space).matrix()).real
        for n in range(self.space.n_max + 1):
            for qubit in (GROUND, EXCITED):
                expected = bare_energy(params, n, qubit)
                assert np.isclose(diagonal[self.space.index(n, qubit)], expected), f"Mismatch at |{n},{qubit}>."

    def test_bunching_excited_point_makes_excited_ladder_flat(self):
        params = at_special_point(SMALL_PARAMS, 'bunching_excited')
        energies = [bare_energy(params, n, EXCITED) for n in range(4)]
        assert np.allclose(energies, energies[0])

    def test_coupling_preserves_parity(self):
        h = hamiltonian(SMALL_PARAMS, self.space).matrix()
        parity = np.array([(i // 2 + i % 2) % 2 for i in range(self.space.dim)])
        mixed = h[np.ix_(parity == 0, parity == 1)]
        assert np.max(np.abs(mixed)) == 0.0, "H must not couple states of different excitation parity."

    def test_effective_hamiltonian_damping(self):
        h_eff = effective_hamiltonian(SMALL_PARAMS, self.space).matrix()
        state = basis_state(self.space, 2, GROUND).vector()
        assert np.isclose(np.vdot(state, h_eff @ state).imag, -2 * SMALL_PARAMS.kappa)


class TestLiouvillian(TestCase):

    def setUp(self) -> None:
        self.space = make_space(4)
        self.generator = liouvillian(SMALL_PARAMS, self.space)
        rng = np.random.default_rng(3)
        x = rng.normal(size=(self.space.dim, self.space.dim)) + 1j * rng.normal(size=(self.space.dim, self.space.dim))
        rho = x @ x.conj().T
        self.rho = rho / np.trace(rho)

    def test_matches_direct_evaluation(self):
        expected = master_equation_rhs(SMALL_PARAMS, self.space, self.rho)
        assert np.allclose(self.generator.apply(self.rho), expected, atol=1e-12)

    def test_trace_preserving(self):
        dim = self.space.dim
        trace_row = np.eye(dim).reshape(-1, order='F')
        assert np.max(np.abs(trace_row @ self.generator.dense())) < 1e-12

    def test_hermiticity_preserving(self):
        drho = self.generator.apply(self.rho)
        assert np.allclose(drho, drho.conj().T, atol=1e-12)

    def test_size(self):
        assert self.generator.size == self.space.dim ** 2
        assert self.generator.superop.shape == (self.generator.size, self.generator.size)
