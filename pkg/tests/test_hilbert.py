import numpy as np

from unittest import TestCase

from nlrabi.errors import SpaceMismatchError, UndefinedObservableError
from nlrabi.hilbert import (DensityMatrix, StateVector, annihilation, basis_state, creation, expectation, g2_of,
                            identity, make_space, mixture, number_op, pauli, EXCITED, GROUND)


class TestSpace(TestCase):

    def test_dimension_and_index(self):
        space = make_space(4)
        assert space.dim == 10, f"Expected dim 10, found {space.dim}."
        assert space.index(3, EXCITED) == 7
        assert space.label(7) == '|3,e>'

    def test_cutoff_below_two_rejected(self):
        with self.assertRaises(ValueError):
            make_space(1)

    def test_index_out_of_range(self):
        space = make_space(3)
        with self.assertRaises(ValueError):
            space.index(4, GROUND)
        with self.assertRaises(ValueError):
            space.index(0, 2)


class TestOperators(TestCase):

    def setUp(self) -> None:
        self.space = make_space(5)

    def test_commutator_off_truncation_edge(self):
        a = annihilation(self.space).matrix()
        ad = creation(self.space).matrix()
        commutator = a @ ad - ad @ a
        # [a, a+] = 1 everywhere except the last Fock level.
        inner = commutator[:-2, :-2]
        assert np.allclose(inner, np.eye(inner.shape[0])), "[a, a+] should be the identity below n_max."
        assert np.allclose(np.diag(commutator)[-2:], -self.space.n_max)

    def test_sigma_z_signs(self):
        sz = pauli(self.space, 'z')
        assert expectation(sz, basis_state(self.space, 2, EXCITED)).real == 1.0
        assert expectation(sz, basis_state(self.space, 2, GROUND)).real == -1.0

    def test_sigma_plus_raises_qubit(self):
        raised = pauli(self.space, 'plus') @ basis_state(self.space, 1, GROUND)
        assert abs(raised.inner(basis_state(self.space, 1, EXCITED)) - 1.0) < 1e-15

    def test_number_operator_diagonal(self):
        diagonal = np.diag(number_op(self.space).matrix()).real
        expected = np.repeat(np.arange(self.space.n_max + 1), 2)
        assert np.allclose(diagonal, expected)

    def test_unknown_pauli(self):
        with self.assertRaises(ValueError):
            pauli(self.space, 'y')

    def test_operators_are_immutable(self):
        a = annihilation(self.space)
        with self.assertRaises(ValueError):
            a.entries[0, 1] = 5.0

    def test_space_mismatch(self):
        with self.assertRaises(SpaceMismatchError):
            identity(self.space) + identity(make_space(4))


class TestStates(TestCase):

    def setUp(self) -> None:
        self.space = make_space(3)

    def test_density_matrix_validation(self):
        matrix = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        matrix[0, 0] = 0.5
        with self.assertRaises(ValueError):
            DensityMatrix(self.space, matrix)
        matrix[1, 1] = 0.5
        matrix[0, 1] = 1.0
        with self.assertRaises(ValueError):
            DensityMatrix(self.space, matrix)

    def test_negative_eigenvalue_rejected(self):
        matrix = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        matrix[0, 0], matrix[1, 1] = 1.2, -0.2
        with self.assertRaises(ValueError):
            DensityMatrix(self.space, matrix)

    def test_mixture_and_trace_distance(self):
        first = basis_state(self.space, 0, GROUND)
        second = basis_state(self.space, 1, EXCITED)
        rho = mixture([0.25, 0.75], [first, second])
        assert np.isclose(expectation(number_op(self.space), rho).real, 0.75)
        assert np.isclose(rho.trace_distance(first.projector()), 0.75)

    def test_vectorization_is_column_stacked(self):
        state = StateVector(self.space, np.arange(self.space.dim) + 1.0).normalized()
        rho = state.projector()
        vec = rho.vectorized()
        assert np.isclose(vec[1], rho.matrix()[1, 0])
        assert np.isclose(vec[self.space.dim], rho.matrix()[0, 1])

    def test_g2_of_fock_state(self):
        rho = basis_state(self.space, 2, GROUND).projector()
        assert np.isclose(g2_of(rho), 0.5), "A two-photon Fock state has g2(0) = 1/2."

    def test_g2_of_vacuum_undefined(self):
        with self.assertRaises(UndefinedObservableError):
            g2_of(basis_state(self.space, 0, EXCITED).projector())

    def test_normalize_zero_vector(self):
        with self.assertRaises(ValueError):
            StateVector(self.space, np.zeros(self.space.dim)).normalized()
