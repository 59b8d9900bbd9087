"""
Truncated Fock (x) qubit space and its elementary operators.

Composite basis index is ``i = 2 * n + s`` with ``s = 0`` for the qubit ground state ``|g>`` and ``s = 1`` for the
excited state ``|e>``, so each Fock level keeps its two qubit states contiguous. ``|e>`` is the +1 eigenstate of
sigma_z.
"""
from dataclasses import dataclass

from typing import Union

import numpy as np

from nlrabi.errors import SpaceMismatchError, UndefinedObservableError

DEFAULT_N_MAX = 15

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10

GROUND = 0
EXCITED = 1


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class SpaceSpec:
    """
    Truncated composite space: oscillator levels 0..n_max times a qubit.

    Args:
        n_max: The highest retained photon number.
    """
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2 so that two-photon states exist, got {self.n_max}.")

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)

    def index(self, n: int, qubit: int) -> int:
        if not 0 <= n <= self.n_max:
            raise ValueError(f"Photon number {n} outside 0..{self.n_max}.")
        if qubit not in (GROUND, EXCITED):
            raise ValueError(f"Qubit label must be 0 (g) or 1 (e), got {qubit}.")
        return 2 * n + qubit

    def label(self, i: int) -> str:
        n, s = divmod(i, 2)
        return f"|{n},{'e' if s else 'g'}>"


def make_space(n_max: int = DEFAULT_N_MAX) -> SpaceSpec:
    """
    This function builds the truncated space.

    Args:
        n_max: Fock cutoff, at least 2.

    Returns:
        A SpaceSpec with dim = 2 (n_max + 1).
    """
    return SpaceSpec(n_max=n_max)


def _check_same_space(first: SpaceSpec, second: SpaceSpec) -> None:
    if first != second:
        raise SpaceMismatchError(f"Objects live on different spaces: n_max={first.n_max} vs n_max={second.n_max}.")


@dataclass(frozen=True, eq=False)
class QuantumOperator:
    """An immutable operator on a SpaceSpec. Storage is an implementation detail; use matrix() for a dense copy."""
    space: SpaceSpec
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"Operator shape {entries.shape} does not match dim {self.space.dim}.")
        object.__setattr__(self, 'entries', entries)

    def matrix(self) -> np.ndarray:
        return np.array(self.entries)

    def dag(self) -> 'QuantumOperator':
        return QuantumOperator(self.space, self.entries.conj().T)

    def is_hermitian(self, tol: float = 1e-14) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def __matmul__(self, other):
        if isinstance(other, QuantumOperator):
            _check_same_space(self.space, other.space)
            return QuantumOperator(self.space, self.entries @ other.entries)
        if isinstance(other, StateVector):
            return apply(self, other)
        return NotImplemented

    def __add__(self, other: 'QuantumOperator') -> 'QuantumOperator':
        _check_same_space(self.space, other.space)
        return QuantumOperator(self.space, self.entries + other.entries)

    def __sub__(self, other: 'QuantumOperator') -> 'QuantumOperator':
        _check_same_space(self.space, other.space)
        return QuantumOperator(self.space, self.entries - other.entries)

    def __mul__(self, scalar: complex) -> 'QuantumOperator':
        return QuantumOperator(self.space, scalar * self.entries)

    __rmul__ = __mul__

    def __neg__(self) -> 'QuantumOperator':
        return QuantumOperator(self.space, -self.entries)


@dataclass(frozen=True, eq=False)
class StateVector:
    """An immutable ket on a SpaceSpec."""
    space: SpaceSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = _frozen(self.amplitudes).reshape(-1)
        if amplitudes.shape != (self.space.dim,):
            raise ValueError(f"State length {amplitudes.shape[0]} does not match dim {self.space.dim}.")
        object.__setattr__(self, 'amplitudes', amplitudes)

    def vector(self) -> np.ndarray:
        return np.array(self.amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> 'StateVector':
        norm = self.norm()
        if norm == 0.0:
            raise ValueError("Cannot normalize the zero vector.")
        return StateVector(self.space, self.amplitudes / norm)

    def inner(self, other: 'StateVector') -> complex:
        _check_same_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> 'DensityMatrix':
        state = self.normalized().amplitudes
        return DensityMatrix(self.space, np.outer(state, state.conj()))


def basis_state(space: SpaceSpec, n: int, qubit: int) -> StateVector:
    """
    This function builds the bare state |n, qubit>.

    Args:
        space: The truncated space.
        n: Photon number.
        qubit: 0 for g, 1 for e.

    Returns:
        The normalized basis ket.
    """
    amplitudes = np.zeros(space.dim, dtype=complex)
    amplitudes[space.index(n, qubit)] = 1.0
    return StateVector(space, amplitudes)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    A validated density matrix: Hermitian (relative Frobenius 1e-12), unit trace (1e-10) and positive semidefinite
    (smallest eigenvalue >= -1e-10).
    """
    space: SpaceSpec
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"Density matrix shape {entries.shape} does not match dim {self.space.dim}.")
        scale = max(np.linalg.norm(entries), 1.0)
        asymmetry = np.linalg.norm(entries - entries.conj().T)
        if asymmetry > HERMITIAN_TOL * scale:
            raise ValueError(f"Density matrix is not Hermitian (deviation {asymmetry:.3e}).")
        trace = np.trace(entries)
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"Density matrix trace is {trace:.12g}, expected 1.")
        smallest = float(np.linalg.eigvalsh(0.5 * (entries + entries.conj().T))[0])
        if smallest < -PSD_TOL:
            raise ValueError(f"Density matrix has negative eigenvalue {smallest:.3e}.")
        object.__setattr__(self, 'entries', entries)

    @classmethod
    def from_array(cls, space: SpaceSpec, array: np.ndarray) -> 'DensityMatrix':
        """Hermitize and trace-normalize a numerically computed matrix, then validate it."""
        array = np.asarray(array, dtype=complex)
        array = 0.5 * (array + array.conj().T)
        return cls(space, array / np.trace(array).real)

    def matrix(self) -> np.ndarray:
        return np.array(self.entries)

    def vectorized(self) -> np.ndarray:
        """Column-stacked vec(rho), the convention used by every superoperator in the package."""
        return self.entries.reshape(-1, order='F').copy()

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def trace_distance(self, other: 'DensityMatrix') -> float:
        _check_same_space(self.space, other.space)
        return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(self.entries - other.entries))))


def mixture(weights, states) -> DensityMatrix:
    """
    This function builds sum_k w_k |psi_k><psi_k| from normalized kets.

    Args:
        weights: Probabilities summing to one.
        states: StateVectors on a common space.

    Returns:
        The mixed DensityMatrix.
    """
    states = list(states)
    space = states[0].space
    total = np.zeros((space.dim, space.dim), dtype=complex)
    for weight, state in zip(weights, states):
        _check_same_space(space, state.space)
        total += weight * state.projector().entries
    return DensityMatrix(space, total)


def _field_annihilation(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)


def _qubit_matrix(which: str) -> np.ndarray:
    # Qubit basis order (g, e); sigma_z |e> = +|e>.
    if which == 'z':
        return np.diag([-1.0, 1.0]).astype(complex)
    if which == 'plus':
        return np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
    if which == 'minus':
        return np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    if which == 'x':
        return np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    raise ValueError(f"Unknown Pauli operator '{which}', expected one of z, plus, minus, x.")


def tensor(space: SpaceSpec, field_part: np.ndarray, qubit_part: np.ndarray) -> QuantumOperator:
    """
    This function builds field_part (x) qubit_part in the package's basis ordering.

    Args:
        space: The truncated space.
        field_part: (n_max + 1) x (n_max + 1) matrix on the oscillator.
        qubit_part: 2 x 2 matrix on the qubit.

    Returns:
        The composite QuantumOperator.
    """
    return QuantumOperator(space, np.kron(field_part, qubit_part))


def identity(space: SpaceSpec) -> QuantumOperator:
    return QuantumOperator(space, np.eye(space.dim, dtype=complex))


def annihilation(space: SpaceSpec) -> QuantumOperator:
    """Cavity annihilation operator a (x) 1, truncated at n_max."""
    return tensor(space, _field_annihilation(space.n_max), np.eye(2))


def creation(space: SpaceSpec) -> QuantumOperator:
    return annihilation(space).dag()


def pauli(space: SpaceSpec, which: str) -> QuantumOperator:
    """
    This function builds 1 (x) sigma for which in {z, plus, minus, x}.

    Args:
        space: The truncated space.
        which: Operator name.

    Returns:
        The qubit operator embedded in the composite space.
    """
    return tensor(space, np.eye(space.n_max + 1), _qubit_matrix(which))


def number_op(space: SpaceSpec) -> QuantumOperator:
    a = annihilation(space)
    return a.dag() @ a


def apply(op: QuantumOperator, state: StateVector) -> StateVector:
    _check_same_space(op.space, state.space)
    return StateVector(state.space, op.entries @ state.amplitudes)


def expectation(op: QuantumOperator, rho: Union[DensityMatrix, StateVector]) -> complex:
    """
    This function evaluates Tr(op rho), or <psi|op|psi> for a ket.

    Args:
        op: The operator.
        rho: A DensityMatrix or a StateVector (the latter is normalized first).

    Returns:
        The complex expectation value.
    """
    _check_same_space(op.space, rho.space)
    if isinstance(rho, StateVector):
        state = rho.normalized().amplitudes
        return complex(np.vdot(state, op.entries @ state))
    return complex(np.trace(op.entries @ rho.entries))


def g2_of(rho: DensityMatrix) -> float:
    """
    This function evaluates the equal-time intensity correlation <a+a+aa>/<a+a>^2.

    Args:
        rho: The state.

    Returns:
        g2(0) as a real number.

    Raises:
        UndefinedObservableError: If <a+a> < 1e-14.
    """
    a = annihilation(rho.space)
    photons = expectation(a.dag() @ a, rho).real
    if photons < 1e-14:
        raise UndefinedObservableError(f"g2(0) is undefined for <a+a> = {photons:.3e}.")
    pairs = expectation(a.dag() @ a.dag() @ a @ a, rho).real
    return pairs / photons ** 2
