"""
Steady states, time propagation and Fock-cutoff control for the master equation.
"""
from dataclasses import dataclass

from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from scipy import linalg, sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import spsolve, eigs, norm as sparse_norm

from nlrabi.log_setup import get_logger
from nlrabi.model import ModelParams, Liouvillian, liouvillian
from nlrabi.errors import ConvergenceError, DegenerateSteadyStateError, IntegrationError, UndefinedObservableError
from nlrabi.hilbert import (DensityMatrix, DEFAULT_N_MAX, annihilation, pauli, number_op, expectation, g2_of,
                            make_space)

logger = get_logger(__name__)

RESIDUAL_TOL = 1e-10
NULL_SPACE_RATIO = 1e6
DENSE_SVD_LIMIT = 4096
HERMITICITY_DRIFT_TOL = 1e-9

RTOL = 1e-9
ATOL = 1e-12

N_MAX_STEP = 4
N_MAX_CAP = 63

OBSERVABLE_NAMES = ('photon_number', 'inversion', 'g2_zero')


@dataclass(frozen=True)
class SteadyStateResult:
    """
    Outcome of a steady-state solve.

    Args:
        rho: The steady state.
        residual: Frobenius norm of L[rho].
        n_max_used: Fock cutoff of the space it was solved on.
        converged: True when residual < 1e-10.
        gap_ratio: Second-smallest over smallest singular value (or eigenvalue modulus) of L.
    """
    rho: DensityMatrix
    residual: float
    n_max_used: int
    converged: bool
    gap_ratio: float


@dataclass(frozen=True)
class Observables:
    """
    Single-time expectation values. g2_zero is None when <a+a> is below 1e-14.
    """
    photon_number: float
    inversion: float
    g2_zero: Optional[float]
    field_amplitude: float = 0.0

    def get(self, name: str) -> Optional[float]:
        if name not in OBSERVABLE_NAMES + ('field_amplitude',):
            raise ValueError(f"Unknown observable '{name}', expected one of {', '.join(OBSERVABLE_NAMES)}.")
        return getattr(self, name)


def _trace_row(dim: int) -> np.ndarray:
    row = np.zeros(dim * dim, dtype=complex)
    # Column stacking puts rho[k, k] at k * dim + k.
    row[np.arange(dim) * (dim + 1)] = 1.0
    return row


def _null_space_ratio(superop: sparse.csr_matrix) -> float:
    """
    This function estimates how well separated the null space of L is from the rest of its spectrum.

    Args:
        superop: The Liouvillian matrix.

    Returns:
        sigma_2 / sigma_1 for the two smallest singular values (dense) or |lambda_2| / |lambda_1| for the two
        eigenvalues nearest zero (sparse, large sizes).
    """
    size = superop.shape[0]
    tiny = np.finfo(float).tiny
    if size <= DENSE_SVD_LIMIT:
        singular = linalg.svdvals(superop.toarray())
        return float(singular[-2] / max(singular[-1], tiny))
    scale = sparse_norm(superop, ord=1)
    values = eigs(superop.tocsc(), k=2, sigma=1e-9 * scale, which='LM', return_eigenvectors=False)
    moduli = np.sort(np.abs(values))
    return float(moduli[1] / max(moduli[0], tiny))


def steady_state(liouvillian_: Liouvillian) -> SteadyStateResult:
    """
    This function solves L[rho] = 0 with Tr(rho) = 1 by replacing the first row of L with the trace functional.

    Args:
        liouvillian_: The Liouvillian (needs kappa > 0 and g > 0 for a unique answer).

    Returns:
        A SteadyStateResult; converged is False (and a warning is logged) when the residual stays above 1e-10.

    Raises:
        DegenerateSteadyStateError: If the null space of L is more than one dimensional (e.g. g = 0, where
            sigma_z is conserved).
    """
    space = liouvillian_.space
    dim = space.dim
    superop = liouvillian_.superop

    gap_ratio = _null_space_ratio(superop)
    if gap_ratio < NULL_SPACE_RATIO:
        raise DegenerateSteadyStateError(
            f"Liouvillian null space is degenerate (singular value ratio {gap_ratio:.3e} < {NULL_SPACE_RATIO:.0e}) "
            f"for {liouvillian_.params}; the steady state is not unique.")

    bordered = superop.tolil(copy=True)
    bordered[0, :] = _trace_row(dim)
    bordered = bordered.tocsc()
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = 1.0
    vec = spsolve(bordered, rhs)
    # One step of iterative refinement on the bordered system.
    vec = vec + spsolve(bordered, rhs - bordered @ vec)

    rho_array = vec.reshape((dim, dim), order='F')
    rho = DensityMatrix.from_array(space, rho_array)
    residual = float(np.linalg.norm(superop @ rho.vectorized()))
    converged = residual < RESIDUAL_TOL
    if not converged:
        logger.warning(f'Steady state residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e} at n_max={space.n_max}.')
    return SteadyStateResult(rho=rho, residual=residual, n_max_used=space.n_max, converged=converged,
                             gap_ratio=gap_ratio)


def observables(rho: DensityMatrix) -> Observables:
    """
    This function evaluates <a+a>, <sigma_z>, g2(0) and |<a>|.

    Args:
        rho: The state.

    Returns:
        Observables, with g2_zero None if the photon number is below 1e-14.
    """
    space = rho.space
    photons = expectation(number_op(space), rho).real
    inversion = expectation(pauli(space, 'z'), rho).real
    field = abs(expectation(annihilation(space), rho))
    try:
        g2 = g2_of(rho)
    except UndefinedObservableError:
        g2 = None
    return Observables(photon_number=photons, inversion=inversion, g2_zero=g2, field_amplitude=field)


def _check_grid(t_grid: Sequence[float], start_at_zero: bool) -> np.ndarray:
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("Time grid must be a non-empty one-dimensional sequence.")
    if start_at_zero and grid[0] != 0.0:
        raise ValueError(f"Time grid must start at 0, got {grid[0]}.")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("Time grid must be strictly increasing.")
    return grid


def evolve_vector(liouvillian_: Liouvillian, vec0: np.ndarray, t_grid: Sequence[float],
                  rtol: float = RTOL, atol: float = ATOL) -> np.ndarray:
    """
    This function integrates d vec/dt = L vec with adaptive 8th-order Runge-Kutta.

    Args:
        liouvillian_: The generator.
        vec0: Column-stacked initial operator (need not be a density matrix).
        t_grid: Increasing output times; vec0 is taken at t_grid[0].
        rtol: Relative tolerance.
        atol: Absolute tolerance.

    Returns:
        Array of shape (len(t_grid), dim^2).

    Raises:
        IntegrationError: If the integrator reports failure.
    """
    grid = _check_grid(t_grid, start_at_zero=False)
    vec0 = np.asarray(vec0, dtype=complex)
    if grid.size == 1:
        return vec0[np.newaxis, :].copy()
    superop = liouvillian_.superop

    solution = solve_ivp(lambda _, y: superop @ y, t_span=(grid[0], grid[-1]), y0=vec0, t_eval=grid,
                         method='DOP853', rtol=rtol, atol=atol)
    if not solution.success:
        raise IntegrationError(f"Master-equation integration failed: {solution.message}")
    return solution.y.T


def propagate(liouvillian_: Liouvillian, rho0: DensityMatrix, t_grid: Sequence[float]) -> List[DensityMatrix]:
    """
    This function propagates a density matrix through the master equation.

    Each output is re-symmetrized to (rho + rho+)/2; a warning is logged whenever the discarded anti-Hermitian part or
    the trace error exceeds 1e-9.

    Args:
        liouvillian_: The generator.
        rho0: Initial state.
        t_grid: Increasing times starting at 0.

    Returns:
        One DensityMatrix per time point.
    """
    grid = _check_grid(t_grid, start_at_zero=True)
    space = rho0.space
    dim = space.dim
    vectors = evolve_vector(liouvillian_, rho0.vectorized(), grid)

    states = []
    for t, vec in zip(grid, vectors):
        rho = vec.reshape((dim, dim), order='F')
        drift = np.linalg.norm(rho - rho.conj().T) / 2
        trace_error = abs(np.trace(rho) - 1.0)
        if drift > HERMITICITY_DRIFT_TOL or trace_error > HERMITICITY_DRIFT_TOL:
            logger.warning(f'Propagation drift at t={t:.6g}: anti-Hermitian {drift:.3e}, trace {trace_error:.3e}.')
        states.append(DensityMatrix.from_array(space, rho))
    return states


def _requested_values(values: Observables, request: Iterable[str]) -> Tuple[Optional[float], ...]:
    return tuple(values.get(name) for name in request)


def _changed_by(previous: Tuple[Optional[float], ...], current: Tuple[Optional[float], ...]) -> float:
    change = 0.0
    for old, new in zip(previous, current):
        if old is None or new is None:
            if old is not new:
                return float('inf')
            continue
        change = max(change, abs(new - old))
    return change


def converge_cutoff(params: ModelParams, observable_request: Sequence[str] = OBSERVABLE_NAMES, tol: float = 1e-8,
                    n_max_start: int = DEFAULT_N_MAX, n_max_step: int = N_MAX_STEP,
                    n_max_cap: int = N_MAX_CAP) -> SteadyStateResult:
    """
    This function raises the Fock cutoff until the requested observables stop changing.

    Args:
        params: Model parameters.
        observable_request: Names from photon_number, inversion, g2_zero.
        tol: Largest accepted change between consecutive cutoffs.
        n_max_start: First cutoff tried.
        n_max_step: Cutoff increment.
        n_max_cap: Hard cap; exceeding it is an error.

    Returns:
        The SteadyStateResult at the smallest cutoff whose observables agree with the next cutoff to within tol.

    Raises:
        ConvergenceError: If the cap is reached first.
    """
    if not tol > 0:
        raise ValueError(f"Cutoff tolerance must be positive, got {tol}.")
    request = tuple(observable_request)
    unknown = [name for name in request if name not in OBSERVABLE_NAMES]
    if unknown:
        raise ValueError(f"Unknown observables {unknown}, expected names from {', '.join(OBSERVABLE_NAMES)}.")

    previous_result, previous_values = None, None
    n_max = n_max_start
    while n_max <= n_max_cap:
        result = steady_state(liouvillian(params, make_space(n_max)))
        values = _requested_values(observables(result.rho), request)
        if previous_result is not None:
            change = _changed_by(previous_values, values)
            logger.debug(f'Cutoff {previous_result.n_max_used} -> {n_max}: change {change:.3e}.')
            if change < tol:
                return previous_result
        previous_result, previous_values = result, values
        n_max += n_max_step
    raise ConvergenceError(f"Observables {request} did not converge to {tol:.1e} below n_max={n_max_cap} for "
                           f"{params}.")


def steady_observables(params: ModelParams, n_max: int = DEFAULT_N_MAX) -> Tuple[SteadyStateResult, Observables]:
    """Convenience wrapper: steady state and its observables at a fixed cutoff."""
    result = steady_state(liouvillian(params, make_space(n_max)))
    return result, observables(result.rho)


def manifold_populations(rho: DensityMatrix) -> Tuple[float, float]:
    """
    This function splits the population of rho between the two parity classes: manifold 1 holds |n,e> with n even
    and |n,g> with n odd, manifold 2 the rest.

    Args:
        rho: The state.

    Returns:
        (p1, p2), summing to one.
    """
    n, s = np.divmod(np.arange(rho.space.dim), 2)
    populations = np.real(np.diag(rho.entries))
    p1 = float(populations[(n + s) % 2 == 1].sum())
    return p1, float(populations.sum()) - p1
