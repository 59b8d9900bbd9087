"""
Closed-form weak-excitation theory of the model.

Between photon emissions the system sits in one of two orthogonal manifolds,

    manifold 1:  |0,e> + beta1 |1,g> + mu1 |2,e>
    manifold 2:  |0,g> + beta2 |1,e> + mu2 |2,g>

and every emission swaps them. The amplitudes, the manifold populations, the steady-state observables and the
post-emission g2(tau) below follow from that picture to leading order in g. This module is also the oracle the master
equation results are checked against.
"""
from dataclasses import dataclass

from typing import Dict, Sequence, Tuple

import numpy as np

from scipy import linalg
from scipy.integrate import solve_ivp

from nlrabi.log_setup import get_logger
from nlrabi.model import ModelParams
from nlrabi.solvers import Observables, RTOL, ATOL
from nlrabi.spectral import CorrelationTrace
from nlrabi.errors import IntegrationError, UndefinedObservableError

logger = get_logger(__name__)

REGIME_THRESHOLD = 0.3

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class ManifoldAmplitudes:
    """Quasi-steady amplitudes of |1,g>, |2,e> (manifold 1) and |1,e>, |2,g> (manifold 2)."""
    beta1: complex
    mu1: complex
    beta2: complex
    mu2: complex


@dataclass(frozen=True)
class ManifoldPopulations:
    """Time-averaged occupation of the two manifolds; xi = p1 / p2."""
    xi: float
    p1: float
    p2: float


@dataclass(frozen=True)
class LimitResults:
    """
    Exact consequences of the closed-form observables.

    Args:
        peak_photon_number: g^2 / (w^2 + kappa^2), the maximum of <a+a> over U, reached at U = -2 w0.
        half_width: 2 sqrt(w^2 + kappa^2), the half width at half maximum of <a+a> as a function of U.
        inversion_extrema: U -> <sigma_z> at U = -2 w0 +- 2 w.
        g2_minimum: g2(0) at U = -2 w0.
        g2_minimum_far_detuned: (w^2 + kappa^2) / (w0^2 + kappa^2), its w0 >> w form.
        g2_minimum_limit: w^2 / w0^2, its w0 >> w >> kappa form.
    """
    peak_photon_number: float
    half_width: float
    inversion_extrema: Dict[float, float]
    g2_minimum: float
    g2_minimum_far_detuned: float
    g2_minimum_limit: float


@dataclass(frozen=True)
class PostJumpAmplitudes:
    """Normalized amplitudes right after an emission (alpha: vacuum component, beta: one-photon component)."""
    alpha1: complex
    beta1: complex
    alpha2: complex
    beta2: complex
    norm: float


@dataclass(frozen=True)
class AmplitudeTraces:
    t: np.ndarray
    beta1: np.ndarray
    mu1: np.ndarray
    beta2: np.ndarray
    mu2: np.ndarray


def _detunings(params: ModelParams) -> Tuple[complex, complex, complex, complex]:
    w0, w, u, k = params.omega0, params.omega, params.U, params.kappa
    return (w - w0 - u / 2 - 1j * k,
            w + u / 2 - 1j * k,
            w + w0 + u / 2 - 1j * k,
            w - u / 2 - 1j * k)


def _require_decay(params: ModelParams) -> None:
    if not params.kappa > 0:
        raise ValueError(f"The weak-excitation formulas need kappa > 0, got {params.kappa}.")


def amplitudes(params: ModelParams) -> ManifoldAmplitudes:
    """
    This function evaluates the quasi-steady amplitudes
    beta1 = -g / (w - w0 - U/2 - i k), mu1 = g^2 / [sqrt2 (w + U/2 - i k)(w - w0 - U/2 - i k)] and their manifold-2
    counterparts with w0 + U/2 -> -(w0 + U/2).

    Args:
        params: Model parameters, kappa > 0.

    Returns:
        The four amplitudes. A warning is logged when |beta| or |mu/beta| exceed 0.3.
    """
    _require_decay(params)
    g = params.g
    d1, e1, d2, e2 = _detunings(params)
    result = ManifoldAmplitudes(beta1=-g / d1,
                                mu1=g ** 2 / (SQRT2 * e1 * d1),
                                beta2=-g / d2,
                                mu2=g ** 2 / (SQRT2 * e2 * d2))
    for beta, mu, label in ((result.beta1, result.mu1, 1), (result.beta2, result.mu2, 2)):
        if abs(beta) > REGIME_THRESHOLD or (beta != 0 and abs(mu / beta) > REGIME_THRESHOLD):
            logger.warning(f'Weak-excitation theory outside its regime in manifold {label}: |beta|={abs(beta):.3g}, '
                           f'|mu/beta|={abs(mu / beta) if beta != 0 else float("nan"):.3g} for {params}.')
    return result


def populations(amps: ManifoldAmplitudes) -> ManifoldPopulations:
    """
    This function gives the manifold populations from their relative stability against emission.

    Args:
        amps: Quasi-steady amplitudes.

    Returns:
        xi = |beta2|^2 / |beta1|^2, p1 = xi / (1 + xi), p2 = 1 / (1 + xi).

    Raises:
        UndefinedObservableError: If both beta amplitudes vanish (g = 0).
    """
    b1 = abs(amps.beta1) ** 2
    b2 = abs(amps.beta2) ** 2
    if b1 == 0.0 or b2 == 0.0:
        raise UndefinedObservableError("Manifold populations are undefined without emission (g = 0).")
    xi = b2 / b1
    return ManifoldPopulations(xi=xi, p1=xi / (1 + xi), p2=1 / (1 + xi))


def closed_form_observables(params: ModelParams) -> Observables:
    """
    This function evaluates the closed-form steady-state observables

        <a+a>     = g^2 / [(w0 + U/2)^2 + w^2 + k^2]
        <sigma_z> = -2 w (w0 + U/2) / [(w0 + U/2)^2 + w^2 + k^2]
        g2(0)     = 1/2 [w^2 + (w0 + U/2)^2 + k^2] [1 / ((w + U/2)^2 + k^2) + 1 / ((w - U/2)^2 + k^2)]

    Args:
        params: Model parameters, kappa > 0.

    Returns:
        Observables (the field amplitude is zero by symmetry).
    """
    _require_decay(params)
    w, k = params.omega, params.kappa
    shift = params.omega0 + params.U / 2
    denominator = shift ** 2 + w ** 2 + k ** 2
    g2 = 0.5 * denominator * (1 / ((w + params.U / 2) ** 2 + k ** 2) + 1 / ((w - params.U / 2) ** 2 + k ** 2))
    return Observables(photon_number=params.g ** 2 / denominator,
                       inversion=-2 * w * shift / denominator,
                       g2_zero=g2,
                       field_amplitude=0.0)


def limit_results(params: ModelParams) -> LimitResults:
    """
    This function evaluates the peak, width and extremum values implied by the closed-form observables.

    Args:
        params: Model parameters (U is ignored).

    Returns:
        LimitResults.
    """
    _require_decay(params)
    w0, w, k = params.omega0, params.omega, params.kappa
    extremum = 2 * w ** 2 / (2 * w ** 2 + k ** 2)
    g2_min = 0.5 * ((w ** 2 + k ** 2) / ((w - w0) ** 2 + k ** 2) + (w ** 2 + k ** 2) / ((w + w0) ** 2 + k ** 2))
    return LimitResults(peak_photon_number=params.g ** 2 / (w ** 2 + k ** 2),
                        half_width=2 * np.sqrt(w ** 2 + k ** 2),
                        inversion_extrema={-2 * w0 + 2 * w: -extremum, -2 * w0 - 2 * w: extremum},
                        g2_minimum=g2_min,
                        g2_minimum_far_detuned=(w ** 2 + k ** 2) / (w0 ** 2 + k ** 2),
                        g2_minimum_limit=w ** 2 / w0 ** 2)


def post_jump_amplitudes(params: ModelParams) -> PostJumpAmplitudes:
    """
    This function gives the state right after an emission from the mixed steady state. An emission from manifold 2
    lands in manifold 1 with alpha1 = beta2_ss / N, beta1 = sqrt2 mu2_ss / N and vice versa, where
    N = sqrt(p1 |beta1_ss|^2 + p2 |beta2_ss|^2). The two kets are normalized jointly, not individually.

    Args:
        params: Model parameters.

    Returns:
        PostJumpAmplitudes.
    """
    amps = amplitudes(params)
    pops = populations(amps)
    norm = float(np.sqrt(pops.p1 * abs(amps.beta1) ** 2 + pops.p2 * abs(amps.beta2) ** 2))
    return PostJumpAmplitudes(alpha1=amps.beta2 / norm, beta1=SQRT2 * amps.mu2 / norm,
                              alpha2=amps.beta1 / norm, beta2=SQRT2 * amps.mu1 / norm, norm=norm)


def beta_tilde(params: ModelParams, tau: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    This function evaluates the post-emission one-photon amplitudes in closed form, with the vacuum amplitudes held
    at their post-jump values:

        beta1(tau) = sqrt2 mu2 / N e^{-i d1 tau} - beta2 beta1 / N (e^{-i d1 tau} - 1),  d1 = w - w0 - U/2 - i k

    and the same for manifold 2 with d2 = w + w0 + U/2 - i k.

    Args:
        params: Model parameters.
        tau: Delays.

    Returns:
        (beta1(tau), beta2(tau)) as complex arrays.
    """
    tau = np.asarray(tau, dtype=float)
    amps = amplitudes(params)
    jump = post_jump_amplitudes(params)
    d1, _, d2, _ = _detunings(params)
    phase1 = np.exp(-1j * d1 * tau)
    phase2 = np.exp(-1j * d2 * tau)
    beta1 = jump.beta1 * phase1 - amps.beta2 * amps.beta1 / jump.norm * (phase1 - 1)
    beta2 = jump.beta2 * phase2 - amps.beta1 * amps.beta2 / jump.norm * (phase2 - 1)
    return beta1, beta2


def _g2_from_betas(params: ModelParams, beta1: np.ndarray, beta2: np.ndarray) -> np.ndarray:
    pops = populations(amplitudes(params))
    norm_sq = post_jump_amplitudes(params).norm ** 2
    return (pops.p2 * np.abs(beta1) ** 2 + pops.p1 * np.abs(beta2) ** 2) / norm_sq


def g2_tau_approx(params: ModelParams, tau_grid: Sequence[float]) -> CorrelationTrace:
    """
    This function evaluates the weak-excitation intensity correlation

        g2(tau) = [p2 |beta1(tau)|^2 + p1 |beta2(tau)|^2] / [p1 |beta1_ss|^2 + p2 |beta2_ss|^2]

    with the closed-form post-emission amplitudes of beta_tilde(). At tau = 0 it equals the closed-form g2(0).

    Args:
        params: Model parameters.
        tau_grid: Increasing non-negative delays.

    Returns:
        A real CorrelationTrace.
    """
    tau = np.asarray(tau_grid, dtype=float)
    beta1, beta2 = beta_tilde(params, tau)
    return CorrelationTrace(tau_grid=tau, values=_g2_from_betas(params, beta1, beta2))


def _manifold_generators(params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    # H_eff restricted to (|0,e>, |1,g>, |2,e>) and (|0,g>, |1,e>, |2,g>), relative to the vacuum-state energy.
    g = params.g
    d1, e1, d2, e2 = _detunings(params)
    coupling = np.array([[0, g, 0], [g, 0, SQRT2 * g], [0, SQRT2 * g, 0]], dtype=complex)
    return np.diag([0, d1, 2 * e1]) + coupling, np.diag([0, d2, 2 * e2]) + coupling


def g2_tau_numeric_ansatz(params: ModelParams, tau_grid: Sequence[float]) -> CorrelationTrace:
    """
    This function evaluates the same g2(tau) expression, but propagates the post-emission states with the full
    three-level effective Hamiltonian of each manifold, letting the vacuum amplitude evolve. It stays accurate for
    longer delays near the degeneracies U = -2 w0 +- 2 w.

    Args:
        params: Model parameters.
        tau_grid: Increasing non-negative delays.

    Returns:
        A real CorrelationTrace.
    """
    tau = np.asarray(tau_grid, dtype=float)
    jump = post_jump_amplitudes(params)
    h1, h2 = _manifold_generators(params)
    start1 = np.array([jump.alpha1, jump.beta1, 0.0], dtype=complex)
    start2 = np.array([jump.alpha2, jump.beta2, 0.0], dtype=complex)
    beta1 = np.array([(linalg.expm(-1j * h1 * t) @ start1)[1] for t in tau])
    beta2 = np.array([(linalg.expm(-1j * h2 * t) @ start2)[1] for t in tau])
    return CorrelationTrace(tau_grid=tau, values=_g2_from_betas(params, beta1, beta2))


def transient_amplitudes(params: ModelParams, t_grid: Sequence[float], initial: ManifoldAmplitudes,
                         alpha: Tuple[complex, complex] = (1.0, 1.0), back_action: bool = False) -> AmplitudeTraces:
    """
    This function integrates the amplitude equations of both manifolds with the vacuum amplitudes pinned to alpha:

        d beta1/dt = -i g alpha1 - i (w - w0 - U/2 - i k) beta1 [- i sqrt2 g mu1]
        d mu1/dt   = -i sqrt2 g beta1 - i (2 w + U - 2 i k) mu1
        d beta2/dt = -i g alpha2 - i (w + w0 + U/2 - i k) beta2 [- i sqrt2 g mu2]
        d mu2/dt   = -i sqrt2 g beta2 - i (2 w - U - 2 i k) mu2

    Two variants are available. The default is the decoupled approximation: the bracketed terms are dropped, so beta
    is driven by alpha alone and mu follows beta, which is exact to leading order in g. Its fixed point is exactly
    amplitudes() and post-jump initial conditions reproduce beta_tilde(). back_action=True integrates the full coupled
    equations, bracketed terms included.

    Args:
        params: Model parameters.
        t_grid: Increasing times starting at 0.
        initial: Initial beta and mu amplitudes.
        alpha: Vacuum amplitudes (alpha1, alpha2).
        back_action: False for the decoupled approximation, True for the full coupled equations.

    Returns:
        AmplitudeTraces on t_grid.
    """
    grid = np.asarray(t_grid, dtype=float)
    if grid.size == 0 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("t_grid must be strictly increasing and start at 0.")
    g = params.g
    d1, e1, d2, e2 = _detunings(params)
    feedback = SQRT2 * g if back_action else 0.0
    generator = -1j * np.array([
        [d1, feedback, 0, 0],
        [SQRT2 * g, 2 * e1, 0, 0],
        [0, 0, d2, feedback],
        [0, 0, SQRT2 * g, 2 * e2],
    ], dtype=complex)
    drive = -1j * g * np.array([alpha[0], 0, alpha[1], 0], dtype=complex)
    y0 = np.array([initial.beta1, initial.mu1, initial.beta2, initial.mu2], dtype=complex)

    if grid.size == 1:
        y = y0[:, np.newaxis]
    else:
        solution = solve_ivp(lambda _, y: generator @ y + drive, t_span=(grid[0], grid[-1]), y0=y0, t_eval=grid,
                             method='DOP853', rtol=RTOL, atol=ATOL)
        if not solution.success:
            raise IntegrationError(f"Amplitude integration failed: {solution.message}")
        y = solution.y
    return AmplitudeTraces(t=grid, beta1=y[0], mu1=y[1], beta2=y[2], mu2=y[3])
