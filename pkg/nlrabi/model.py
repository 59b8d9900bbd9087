"""
Generalized Rabi model with nonlinear dispersive coupling and cavity decay.

    H     = (w0/2) sz + w a+a + g sx (a + a+) + (U/2) sz a+a
    H_eff = H - i kappa a+a
    drho/dt = -i[H, rho] + kappa (2 a rho a+ - a+a rho - rho a+a)

Superoperators act on column-stacked density matrices, vec(A X B) = (B^T (x) A) vec(X).
"""
import dataclasses

from dataclasses import dataclass

import numpy as np

from scipy import sparse

from nlrabi.hilbert import SpaceSpec, QuantumOperator, annihilation, pauli, number_op, EXCITED

SPECIAL_POINTS = ('bunching_ground', 'bunching_excited', 'antibunching', 'cycle_upper', 'cycle_lower')


@dataclass(frozen=True)
class ModelParams:
    """
    The five physical rates of the model, in any common angular-frequency unit.

    Args:
        omega0: Qubit splitting.
        omega: Oscillator frequency.
        g: Linear dipole coupling.
        U: Nonlinear dispersive coupling, may be negative.
        kappa: Cavity field decay rate.
    """
    omega0: float
    omega: float
    g: float
    U: float
    kappa: float

    def __post_init__(self):
        for name in ('omega0', 'omega', 'g', 'U', 'kappa'):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}.")
            object.__setattr__(self, name, float(value))
        if self.omega <= 0 or self.omega0 <= 0:
            raise ValueError(f"omega and omega0 must be positive, got omega={self.omega}, omega0={self.omega0}.")
        if self.g < 0:
            raise ValueError(f"g must be non-negative, got {self.g}.")
        if self.kappa < 0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa}.")

    @classmethod
    def from_ratios(cls, omega: float = 1.0, omega0: float = 10.0, g: float = 0.1, U: float = -20.0,
                    kappa: float = 0.2) -> 'ModelParams':
        """Build parameters from ratios to omega plus the absolute scale omega."""
        return cls(omega0=omega0 * omega, omega=omega, g=g * omega, U=U * omega, kappa=kappa * omega)

    def replace(self, **changes) -> 'ModelParams':
        return dataclasses.replace(self, **changes)

    def scaled(self, factor: float) -> 'ModelParams':
        return ModelParams(self.omega0 * factor, self.omega * factor, self.g * factor, self.U * factor,
                           self.kappa * factor)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def at_special_point(params: ModelParams, point: str) -> ModelParams:
    """
    This function moves U to one of the model's special couplings.

    Args:
        params: Base parameters.
        point: 'bunching_ground' (U = 2w, all |n,g> degenerate), 'bunching_excited' (U = -2w, all |n,e>
            degenerate), 'antibunching' (U = -2w0), 'cycle_upper' (U = -2w0 + 2w, |0,e> ~ |1,g>) or 'cycle_lower'
            (U = -2w0 - 2w, |0,g> ~ |1,e>).

    Returns:
        A copy of params with U replaced.
    """
    values = {
        'bunching_ground': 2 * params.omega,
        'bunching_excited': -2 * params.omega,
        'antibunching': -2 * params.omega0,
        'cycle_upper': -2 * params.omega0 + 2 * params.omega,
        'cycle_lower': -2 * params.omega0 - 2 * params.omega,
    }
    if point not in values:
        raise ValueError(f"Unknown special point '{point}', expected one of {', '.join(SPECIAL_POINTS)}.")
    return params.replace(U=values[point])


def bare_energy(params: ModelParams, n: int, qubit: int) -> float:
    """Energy of |n, qubit> at g = 0: +-w0/2 + w n +- U n / 2 (upper signs for e)."""
    sign = 1.0 if qubit == EXCITED else -1.0
    return sign * params.omega0 / 2 + params.omega * n + sign * params.U * n / 2


def hamiltonian(params: ModelParams, space: SpaceSpec) -> QuantumOperator:
    """
    This function builds the full (non rotating-wave) Hamiltonian H_R + H_NL.

    Args:
        params: Model parameters.
        space: Truncated space.

    Returns:
        The Hermitian Hamiltonian.
    """
    a = annihilation(space)
    n = number_op(space)
    sz = pauli(space, 'z')
    sx = pauli(space, 'x')
    h = (params.omega0 / 2) * sz + params.omega * n + params.g * (sx @ (a + a.dag())) + (params.U / 2) * (sz @ n)
    # sx commutes with the field operators, so the product is Hermitian up to rounding; symmetrize exactly.
    entries = h.entries
    return QuantumOperator(space, 0.5 * (entries + entries.conj().T))


def effective_hamiltonian(params: ModelParams, space: SpaceSpec) -> QuantumOperator:
    """Non-Hermitian H_eff = H - i kappa a+a generating evolution between photon emissions."""
    return hamiltonian(params, space) - (1j * params.kappa) * number_op(space)


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """
    The master-equation generator as a sparse dim^2 x dim^2 matrix on column-stacked density matrices.

    Args:
        space: The truncated space.
        superop: The sparse superoperator.
        params: Parameters it was built from.
    """
    space: SpaceSpec
    superop: sparse.csr_matrix
    params: ModelParams

    @property
    def size(self) -> int:
        return self.space.dim ** 2

    def dense(self) -> np.ndarray:
        return self.superop.toarray()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """L[rho] for a dim x dim array."""
        dim = self.space.dim
        vec = np.asarray(rho, dtype=complex).reshape(-1, order='F')
        return (self.superop @ vec).reshape((dim, dim), order='F')


def _spre(op: np.ndarray) -> sparse.csr_matrix:
    return sparse.kron(sparse.identity(op.shape[0], format='csr'), sparse.csr_matrix(op), format='csr')


def _spost(op: np.ndarray) -> sparse.csr_matrix:
    return sparse.kron(sparse.csr_matrix(op.T), sparse.identity(op.shape[0], format='csr'), format='csr')


def liouvillian(params: ModelParams, space: SpaceSpec) -> Liouvillian:
    """
    This function assembles the Lindblad superoperator of the cavity-decay master equation.

    Args:
        params: Model parameters.
        space: Truncated space.

    Returns:
        A Liouvillian whose matrix maps vec(rho) to vec(drho/dt).
    """
    h = hamiltonian(params, space).entries
    a = annihilation(space).entries
    ada = a.conj().T @ a
    unitary = -1j * (_spre(h) - _spost(h))
    # vec(a rho a+) = (conj(a) (x) a) vec(rho)
    jump = sparse.kron(sparse.csr_matrix(a.conj()), sparse.csr_matrix(a), format='csr')
    dissipator = params.kappa * (2 * jump - _spre(ada) - _spost(ada))
    superop = (unitary + dissipator).tocsr()
    superop.eliminate_zeros()
    return Liouvillian(space=space, superop=superop, params=params)


def master_equation_rhs(params: ModelParams, space: SpaceSpec, rho: np.ndarray) -> np.ndarray:
    """Direct matrix evaluation of -i[H, rho] + kappa (2 a rho a+ - a+a rho - rho a+a)."""
    h = hamiltonian(params, space).entries
    a = annihilation(space).entries
    ad = a.conj().T
    ada = ad @ a
    return -1j * (h @ rho - rho @ h) + params.kappa * (2 * a @ rho @ ad - ada @ rho - rho @ ada)
