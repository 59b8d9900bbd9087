"""
Two-time correlations through the quantum regression theorem, the cavity emission spectrum, and the dressed-state
picture used to assign its lines.

    g2(tau) = Tr[a+a e^{L tau}(a rho a+)] / <a+a>^2
    C(tau)  = Tr[a+ e^{L tau}(a rho)]                 (<a> = 0 in the steady state)
    S(nu)   = int C(tau) e^{-i nu tau} dtau = 2 Re int_0^inf C(tau) e^{-i nu tau} dtau
"""
from dataclasses import dataclass, field

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from scipy import linalg
from scipy.fft import fft, fftfreq, fftshift, next_fast_len
from scipy.integrate import trapezoid
from scipy.optimize import brentq
from scipy.signal import find_peaks, peak_prominences, peak_widths
from scipy.sparse.linalg import expm_multiply

from nlrabi.log_setup import get_logger
from nlrabi.model import ModelParams, Liouvillian, hamiltonian, liouvillian
from nlrabi.solvers import steady_state, evolve_vector
from nlrabi.errors import SpectrumError, UndefinedObservableError
from nlrabi.hilbert import (SpaceSpec, StateVector, DensityMatrix, DEFAULT_N_MAX, annihilation, number_op,
                            expectation, make_space)

logger = get_logger(__name__)

# Default window: |C| envelope below this fraction of C(0); user windows must reach at least REQUIRED_DECAY.
DECAY_FRACTION = 1e-4
REQUIRED_DECAY = 1e-2
DENSE_EIGEN_LIMIT = 4096
MODE_CUTOFF = 1e-14
SUM_RULE_TOL = 0.01
SYMMETRY_TOL = 1e-9

DEFAULT_REL_HEIGHT = 0.01
PEAK_LOG_PROMINENCE = np.log10(2.0)

DOUBLET_TOL = 1e-3
DEGENERACY_TOL = 1e-10
PAIR_SUBSPACES = {
    1: ((0, 1), (1, 0)),  # |0,e>, |1,g>
    2: ((0, 0), (1, 1)),  # |0,g>, |1,e>
}


@dataclass(frozen=True, eq=False)
class CorrelationTrace:
    """Correlation values on an increasing grid of non-negative delays; complex for C(tau), real for g2(tau)."""
    tau_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau_grid, dtype=float)
        values = np.asarray(self.values)
        if tau.shape != values.shape:
            raise ValueError(f"tau_grid {tau.shape} and values {values.shape} differ in shape.")
        object.__setattr__(self, 'tau_grid', tau)
        object.__setattr__(self, 'values', values)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Emission spectrum samples.

    Args:
        nu_grid: Increasing frequencies, same units and frame as H.
        s_values: S(nu).
        tau_window: Length of the correlation window that was transformed.
        photon_number: Steady-state <a+a> = C(0).
        lorentzian: The same spectrum summed from Liouvillian eigenmodes, when available.
    """
    nu_grid: np.ndarray
    s_values: np.ndarray
    tau_window: Optional[float] = None
    photon_number: Optional[float] = None
    lorentzian: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        nu = np.asarray(self.nu_grid, dtype=float)
        values = np.asarray(self.s_values, dtype=float)
        if nu.shape != values.shape:
            raise ValueError(f"nu_grid {nu.shape} and s_values {values.shape} differ in shape.")
        object.__setattr__(self, 'nu_grid', nu)
        object.__setattr__(self, 's_values', values)

    def sum_rule(self) -> float:
        """(1 / 2 pi) int S dnu over the grid; equals <a+a> when the grid covers every line."""
        return float(trapezoid(self.s_values, self.nu_grid) / (2 * np.pi))


@dataclass(frozen=True)
class SpectralPeak:
    nu: float
    height: float
    fwhm: float
    index: int


@dataclass(frozen=True, eq=False)
class DressedStateSet:
    """
    Eigenstates of H sorted by energy.

    Args:
        params: Parameters they were built from.
        energies: Eigenvalues, ascending.
        states: Normalized eigenkets, phase fixed so the largest component is real and positive.
        labels: Dominant bare state ('|0,e>'), a doublet ('|0,g>+|1,e>'), or None.
        transition_amplitudes: |<psi_i|a|psi_j>| for all i, j.
        named: 'psi1-', 'psi1+', 'psi2-', 'psi2+' -> index into states.
        degenerate_pairs: Index pairs whose energies agree to 1e-10 w0.
    """
    params: ModelParams
    energies: np.ndarray
    states: Tuple[StateVector, ...]
    labels: Tuple[Optional[str], ...]
    transition_amplitudes: np.ndarray
    named: Dict[str, int]
    degenerate_pairs: Tuple[Tuple[int, int], ...] = ()

    def dominant_photon_number(self, index: int) -> int:
        return int(np.argmax(np.abs(self.states[index].amplitudes) ** 2)) // 2

    def name_of(self, index: int) -> str:
        for name, named_index in self.named.items():
            if named_index == index:
                return name
        return self.labels[index] or f'state{index}'

    def named_amplitude(self, final: str, initial: str) -> float:
        """|<psi_final|a|psi_initial>| between two named states."""
        return float(self.transition_amplitudes[self.named[final], self.named[initial]])


@dataclass(frozen=True)
class LineAssignment:
    nu: float
    height: float
    fwhm: float
    initial: Optional[str]
    final: Optional[str]
    transition_frequency: Optional[float]
    amplitude: Optional[float]
    matched: bool


def _steady_rho(params: ModelParams, space: SpaceSpec) -> Tuple[Liouvillian, DensityMatrix, float]:
    generator = liouvillian(params, space)
    rho = steady_state(generator).rho
    photons = expectation(number_op(space), rho).real
    if photons < 1e-14:
        raise UndefinedObservableError(f"Correlations are undefined for <a+a> = {photons:.3e}.")
    return generator, rho, photons


def _delay_grid(tau_grid: Sequence[float]) -> Tuple[np.ndarray, bool]:
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size == 0 or tau[0] < 0 or np.any(np.diff(tau) <= 0):
        raise ValueError("tau_grid must be a strictly increasing sequence of non-negative delays.")
    if tau[0] == 0.0:
        return tau, False
    return np.concatenate(([0.0], tau)), True


def g2_tau(params: ModelParams, tau_grid: Sequence[float], space: Optional[SpaceSpec] = None) -> CorrelationTrace:
    """
    This function computes g2(tau) from the steady state with the quantum regression theorem.

    Args:
        params: Model parameters (g > 0 so the steady state is unique).
        tau_grid: Increasing non-negative delays.
        space: Truncated space, n_max = 15 by default.

    Returns:
        A real CorrelationTrace; its value at tau = 0 is the static g2(0).
    """
    space = space or make_space(DEFAULT_N_MAX)
    generator, rho, photons = _steady_rho(params, space)
    a = annihilation(space).entries
    dim = space.dim
    tau, prepended = _delay_grid(tau_grid)

    start = (a @ rho.entries @ a.conj().T).reshape(-1, order='F')
    vectors = evolve_vector(generator, start, tau)
    # Tr(a+a X) = sum over entries of (a+a)^T * X
    weights = number_op(space).entries.T.reshape(-1, order='F')
    values = (vectors @ weights).real / photons ** 2
    if prepended:
        tau, values = tau[1:], values[1:]
    return CorrelationTrace(tau_grid=tau, values=values)


def field_correlation(params: ModelParams, tau_grid: Sequence[float],
                      space: Optional[SpaceSpec] = None) -> CorrelationTrace:
    """
    This function computes C(tau) = <a+(tau) a> from the steady state with the quantum regression theorem.

    Args:
        params: Model parameters (g > 0).
        tau_grid: Increasing non-negative delays.
        space: Truncated space, n_max = 15 by default.

    Returns:
        A complex CorrelationTrace with C(0) = <a+a>.
    """
    space = space or make_space(DEFAULT_N_MAX)
    generator, rho, _ = _steady_rho(params, space)
    a = annihilation(space).entries
    tau, prepended = _delay_grid(tau_grid)

    start = (a @ rho.entries).reshape(-1, order='F')
    vectors = evolve_vector(generator, start, tau)
    values = vectors @ a.conj().reshape(-1, order='F')
    if prepended:
        tau, values = tau[1:], values[1:]
    return CorrelationTrace(tau_grid=tau, values=values)


@dataclass(frozen=True, eq=False)
class _CorrelationModes:
    rates: np.ndarray
    weights: np.ndarray

    def at(self, tau: np.ndarray) -> np.ndarray:
        values = np.empty(tau.size, dtype=complex)
        for start in range(0, tau.size, 2048):
            chunk = tau[start:start + 2048]
            values[start:start + 2048] = np.exp(np.outer(chunk, self.rates)) @ self.weights
        return values

    def lorentzian(self, nu: np.ndarray) -> np.ndarray:
        """2 Re sum_k c_k / (i nu - lambda_k), the exact transform of the expansion."""
        total = np.zeros(nu.size)
        for weight, rate in zip(self.weights, self.rates):
            total += 2 * (weight / (1j * nu - rate)).real
        return total

    def line_extent(self, photons: float) -> float:
        significant = np.abs(self.weights) > 1e-8 * photons
        return float(np.max(np.abs(self.rates[significant].imag))) if np.any(significant) else 0.0

    def envelope(self, tau: float) -> float:
        return float(np.sum(np.abs(self.weights) * np.exp(self.rates.real * tau)))


def _correlation_modes(generator: Liouvillian, rho: DensityMatrix, photons: float) -> Optional[_CorrelationModes]:
    """
    This function expands C(tau) = sum_k c_k exp(lambda_k tau) over the Liouvillian eigenmodes.

    Returns:
        The modes, or None when the eigenbasis is too large or too ill-conditioned to reproduce C(tau).
    """
    if generator.size > DENSE_EIGEN_LIMIT:
        return None
    space = generator.space
    a = annihilation(space).entries
    start = (a @ rho.entries).reshape(-1, order='F')
    observable = a.conj().reshape(-1, order='F')

    rates, right = linalg.eig(generator.dense())
    try:
        coefficients = linalg.solve(right, start)
    except linalg.LinAlgError:
        return None
    weights = (observable @ right) * coefficients
    keep = np.abs(weights) > MODE_CUTOFF * photons
    modes = _CorrelationModes(rates=rates[keep], weights=weights[keep])

    check_tau = 1.0 / generator.params.kappa
    expected = observable @ expm_multiply(generator.superop * check_tau, start)
    error_zero = abs(modes.weights.sum() - photons)
    error_check = abs(modes.at(np.array([check_tau]))[0] - expected)
    if error_zero > 1e-8 * photons or error_check > 1e-6 * photons:
        logger.warning(f'Liouvillian eigenmodes reproduce C(tau) poorly (errors {error_zero:.2e}, '
                       f'{error_check:.2e}); falling back to direct propagation.')
        return None
    return modes


def _window_from_modes(modes: _CorrelationModes, photons: float, fraction: float) -> float:
    if np.any(modes.rates.real >= 0):
        raise SpectrumError("C(tau) has a non-decaying component; the steady state is not unique.")
    target = fraction * photons
    upper = 1.0 / np.min(-modes.rates.real)
    while modes.envelope(upper) > target:
        upper *= 2
    return brentq(lambda t: modes.envelope(t) - target, 0.0, upper, xtol=1e-6 * upper)


def _propagated_samples(generator: Liouvillian, rho: DensityMatrix, photons: float, dtau: float,
                        fraction: float, tau_max: Optional[float]) -> Tuple[np.ndarray, np.ndarray]:
    a = annihilation(generator.space).entries
    vec = (a @ rho.entries).reshape(-1, order='F')
    observable = a.conj().reshape(-1, order='F')
    chunk = max(int(np.ceil(10.0 / (generator.params.kappa * dtau))), 2)
    samples = [observable @ vec]
    while True:
        block = expm_multiply(generator.superop, vec, start=0.0, stop=chunk * dtau, num=chunk + 1, endpoint=True)
        values = block[1:] @ observable
        samples.extend(values)
        vec = block[-1]
        elapsed = (len(samples) - 1) * dtau
        if tau_max is not None:
            if elapsed >= tau_max:
                break
        elif np.max(np.abs(values)) < fraction * photons:
            break
    correlation = np.asarray(samples)
    if tau_max is not None:
        correlation = correlation[:int(round(tau_max / dtau)) + 1]
    return np.arange(correlation.size) * dtau, correlation


def _transition_frequencies(dressed: DressedStateSet, max_photons: int, min_amplitude: float = 1e-6):
    """(initial, final, E_initial - E_final, |<final|a|initial>|) for emissions among low-photon dressed states."""
    candidates = [i for i in range(len(dressed.states)) if dressed.dominant_photon_number(i) <= max_photons]
    lines = []
    for initial in candidates:
        for final in candidates:
            amplitude = dressed.transition_amplitudes[final, initial]
            if initial != final and amplitude > min_amplitude:
                lines.append((initial, final, dressed.energies[initial] - dressed.energies[final], amplitude))
    return lines


def default_nu_grid(params: ModelParams, space: Optional[SpaceSpec] = None, coarse_step: Optional[float] = None,
                    patch_halfwidth: Optional[float] = None, patch_step: Optional[float] = None) -> np.ndarray:
    """
    This function builds a frequency grid that resolves every line: a uniform coarse grid over all low-photon
    emission frequencies plus dense patches around each of them.

    Args:
        params: Model parameters.
        space: Truncated space for the dressed states.
        coarse_step: Uniform spacing, 0.005 w by default.
        patch_halfwidth: Half width of each dense patch, 0.05 w by default.
        patch_step: Spacing inside patches, 2e-4 w by default.

    Returns:
        Sorted unique frequencies.
    """
    space = space or make_space(DEFAULT_N_MAX)
    w = params.omega
    coarse_step = coarse_step or 0.005 * w
    patch_halfwidth = patch_halfwidth or 0.05 * w
    patch_step = patch_step or 2e-4 * w

    dressed = dressed_states(params, space)
    frequencies = np.array([line[2] for line in _transition_frequencies(dressed, max_photons=2)])
    extent = (np.max(np.abs(frequencies)) if frequencies.size else params.omega0) + 4 * w + 10 * params.kappa
    parts = [np.arange(-extent, extent + coarse_step / 2, coarse_step)]
    for centre in frequencies:
        parts.append(np.arange(centre - patch_halfwidth, centre + patch_halfwidth + patch_step / 2, patch_step))
    return np.unique(np.round(np.concatenate(parts), 12))


def emission_spectrum(params: ModelParams, nu_grid: Optional[Sequence[float]] = None,
                      space: Optional[SpaceSpec] = None, tau_max: Optional[float] = None,
                      dtau: Optional[float] = None) -> Spectrum:
    """
    This function computes S(nu) = 2 Re int_0^T C(tau) e^{-i nu tau} dtau by trapezoidal quadrature, evaluated with a
    zero-padded FFT and interpolated onto nu_grid. No window function is applied.

    The window T is chosen so the |C(tau)| envelope has fallen below 1e-4 C(0), unless tau_max is given, in which case
    C must have fallen below 1% of C(0) by tau_max. The two-sided transform (using C(-tau) = C(tau)*) is checked
    against the one-sided form.

    Args:
        params: Model parameters (g > 0).
        nu_grid: Increasing frequencies; default_nu_grid() when omitted.
        space: Truncated space, n_max = 15 by default.
        tau_max: Optional fixed correlation window.
        dtau: Optional sampling step; chosen from the highest line frequency and grid extent otherwise.

    Returns:
        The Spectrum, with the Liouvillian-eigenmode Lorentzian sum attached as a cross-check when available.

    Raises:
        SpectrumError: If C has not decayed within tau_max, or the symmetry cross-check fails.
    """
    space = space or make_space(DEFAULT_N_MAX)
    nu = np.asarray(nu_grid if nu_grid is not None else default_nu_grid(params, space), dtype=float)
    if nu.ndim != 1 or nu.size < 3 or np.any(np.diff(nu) <= 0):
        raise ValueError("nu_grid must be strictly increasing with at least three points.")

    generator, rho, photons = _steady_rho(params, space)
    modes = _correlation_modes(generator, rho, photons)

    nu_extent = np.max(np.abs(nu))
    line_extent = modes.line_extent(photons) if modes is not None else nu_extent
    if dtau is None:
        dtau = np.pi / (4 * (nu_extent + line_extent))

    if modes is not None:
        if tau_max is None:
            window = _window_from_modes(modes, photons, DECAY_FRACTION)
        else:
            window = tau_max
            if modes.envelope(tau_max) > REQUIRED_DECAY * photons:
                raise SpectrumError(f"C(tau) has not decayed below {REQUIRED_DECAY:.0%} of C(0) by "
                                    f"tau_max={tau_max:.6g}; the spectrum would be biased.")
        tau = np.arange(int(np.ceil(window / dtau)) + 1) * dtau
        correlation = modes.at(tau)
    else:
        tau, correlation = _propagated_samples(generator, rho, photons, dtau, DECAY_FRACTION, tau_max)
        if tau_max is not None and np.max(np.abs(correlation[-10:])) > REQUIRED_DECAY * photons:
            raise SpectrumError(f"C(tau) has not decayed below {REQUIRED_DECAY:.0%} of C(0) by tau_max={tau_max:.6g}.")
    logger.info(f'Spectrum window {tau[-1]:.6g} with {tau.size} samples (dtau={dtau:.3g}) for {params}.')

    weights = np.full(tau.size, dtau)
    weights[0] = weights[-1] = dtau / 2

    min_spacing = np.min(np.diff(nu))
    size = next_fast_len(int(max(2 * tau.size, np.ceil(4 * np.pi / (dtau * min_spacing)))))
    frequencies = fftshift(2 * np.pi * fftfreq(size, d=dtau))
    one_sided = 2 * fftshift(fft(weights * correlation, n=size)).real

    # Two-sided transform over [-T, T]; tau = 0 is interior there, so it carries a full weight.
    two_sided_input = np.zeros(size, dtype=complex)
    two_sided_input[:tau.size] = weights * correlation
    two_sided_input[0] = dtau * correlation[0]
    two_sided_input[size - tau.size + 1:] = (weights[1:] * correlation[1:].conj())[::-1]
    two_sided = fftshift(fft(two_sided_input))
    scale = np.max(np.abs(one_sided))
    mismatch = max(np.max(np.abs(two_sided.real - one_sided)), np.max(np.abs(two_sided.imag)))
    if mismatch > SYMMETRY_TOL * scale:
        raise SpectrumError(f"Two-sided and one-sided spectra disagree by {mismatch / scale:.2e} (relative).")

    if nu_extent >= np.pi / dtau:
        raise ValueError(f"nu_grid extends beyond the Nyquist frequency {np.pi / dtau:.6g}.")
    values = np.interp(nu, frequencies, one_sided)

    lorentzian = modes.lorentzian(nu) if modes is not None else None

    spectrum = Spectrum(nu_grid=nu, s_values=values, tau_window=float(tau[-1]), photon_number=photons,
                        lorentzian=lorentzian)
    ratio = spectrum.sum_rule() / photons
    if abs(ratio - 1) > SUM_RULE_TOL:
        logger.warning(f'Spectrum sum rule off by {abs(ratio - 1):.2%}; nu_grid may not cover every line.')
    return spectrum


def _refine_vertex(nu: np.ndarray, values: np.ndarray, index: int) -> Tuple[float, float]:
    if index == 0 or index == nu.size - 1:
        return float(nu[index]), float(values[index])
    x = nu[index - 1:index + 2]
    y = values[index - 1:index + 2]
    curvature, slope, offset = np.polyfit(x - x[1], y, 2)
    if curvature >= 0:
        return float(nu[index]), float(values[index])
    shift = float(np.clip(-slope / (2 * curvature), x[0] - x[1], x[2] - x[1]))
    return float(x[1] + shift), float(offset + slope * shift + curvature * shift ** 2)


def find_spectral_peaks(spectrum: Spectrum, rel_height: float = DEFAULT_REL_HEIGHT) -> List[SpectralPeak]:
    """
    This function detects spectral lines: local maxima above rel_height times the global maximum that also stand a
    factor of two above their surroundings, refined by a parabola through the three nearest samples.

    Args:
        spectrum: The spectrum.
        rel_height: Detection threshold relative to the global maximum.

    Returns:
        Peaks ordered by frequency.
    """
    values = spectrum.s_values
    nu = spectrum.nu_grid
    top = np.max(values) if values.size else 0.0
    if not top > 0:
        return []
    indices, _ = find_peaks(values, height=rel_height * top)
    if indices.size == 0:
        return []
    log_values = np.log10(np.maximum(values, np.finfo(float).tiny))
    prominences = peak_prominences(log_values, indices)[0]
    indices = indices[prominences >= PEAK_LOG_PROMINENCE]
    if indices.size == 0:
        return []
    _, _, left, right = peak_widths(values, indices, rel_height=0.5)
    positions = np.arange(nu.size)
    peaks = []
    for index, lo, hi in zip(indices, left, right):
        centre, height = _refine_vertex(nu, values, int(index))
        fwhm = float(np.interp(hi, positions, nu) - np.interp(lo, positions, nu))
        peaks.append(SpectralPeak(nu=centre, height=height, fwhm=fwhm, index=int(index)))
    return peaks


def _bare_label(index: int) -> str:
    n, s = divmod(index, 2)
    return f"|{n},{'e' if s else 'g'}>"


def dressed_states(params: ModelParams, space: Optional[SpaceSpec] = None) -> DressedStateSet:
    """
    This function diagonalizes H and labels its eigenstates by their dominant bare component.

    A state is labeled when one bare overlap squared exceeds 0.5, or as a doublet when its two largest overlaps agree
    to 1e-3; states in an exactly degenerate pair (1e-10 w0) are left unlabeled. The names psi1-/psi1+ go
    to the two states with the largest weight on {|0,e>, |1,g>}, psi2-/psi2+ to those on {|0,g>, |1,e>}, '+' being
    the higher energy of each pair.

    Args:
        params: Model parameters.
        space: Truncated space, n_max = 15 by default.

    Returns:
        DressedStateSet.
    """
    space = space or make_space(DEFAULT_N_MAX)
    energies, vectors = linalg.eigh(hamiltonian(params, space).entries)
    for column in range(vectors.shape[1]):
        vector = vectors[:, column]
        largest = vector[np.argmax(np.abs(vector))]
        vectors[:, column] = vector * (abs(largest) / largest)

    degenerate = tuple((i, i + 1) for i in range(len(energies) - 1)
                       if energies[i + 1] - energies[i] < DEGENERACY_TOL * params.omega0)
    unresolved = {i for pair in degenerate for i in pair}
    if degenerate:
        logger.warning(f'Degenerate dressed states {degenerate} for {params}; their labels are skipped.')

    labels = []
    for column in range(vectors.shape[1]):
        overlaps = np.abs(vectors[:, column]) ** 2
        order = np.argsort(overlaps)[::-1]
        first, second = order[0], order[1]
        if column in unresolved:
            labels.append(None)
        elif overlaps[first] - overlaps[second] < DOUBLET_TOL and overlaps[first] + overlaps[second] > 0.5:
            low, high = sorted((first, second))
            sign = '+' if (vectors[low, column] * vectors[high, column].conj()).real >= 0 else '-'
            labels.append(f'{_bare_label(low)}{sign}{_bare_label(high)}')
        elif overlaps[first] > 0.5:
            labels.append(_bare_label(first))
        else:
            labels.append(None)

    named = {}
    for manifold, members in PAIR_SUBSPACES.items():
        rows = [space.index(n, s) for n, s in members]
        weight = np.sum(np.abs(vectors[rows, :]) ** 2, axis=0)
        pair = sorted(np.argsort(weight)[-2:], key=lambda i: energies[i])
        named[f'psi{manifold}-'], named[f'psi{manifold}+'] = int(pair[0]), int(pair[1])

    a = annihilation(space).entries
    amplitudes = np.abs(vectors.conj().T @ a @ vectors)
    states = tuple(StateVector(space, vectors[:, column]) for column in range(vectors.shape[1]))
    return DressedStateSet(params=params, energies=energies, states=states, labels=tuple(labels),
                           transition_amplitudes=amplitudes, named=named, degenerate_pairs=degenerate)


def assign_lines(dressed: DressedStateSet, spectrum: Spectrum, rel_height: float = DEFAULT_REL_HEIGHT,
                 max_photons: int = 1, tolerance: Optional[float] = None) -> List[LineAssignment]:
    """
    This function pairs each detected spectral line with the emission psi_i -> psi_f whose frequency E_i - E_f is
    nearest, among dressed states whose dominant photon number is at most max_photons.

    Args:
        dressed: Dressed states for the spectrum's parameters.
        spectrum: The spectrum.
        rel_height: Peak detection threshold relative to the global maximum.
        max_photons: Largest dominant photon number of candidate states.
        tolerance: Largest accepted |nu - (E_i - E_f)|, 5 kappa by default. Farther peaks are reported unmatched.

    Returns:
        One LineAssignment per detected peak, ordered by frequency.
    """
    tolerance = tolerance if tolerance is not None else 5 * dressed.params.kappa
    lines = _transition_frequencies(dressed, max_photons=max_photons)
    table = []
    for peak in find_spectral_peaks(spectrum, rel_height=rel_height):
        if not lines:
            table.append(LineAssignment(peak.nu, peak.height, peak.fwhm, None, None, None, None, False))
            continue
        initial, final, frequency, amplitude = min(lines, key=lambda line: abs(line[2] - peak.nu))
        matched = abs(frequency - peak.nu) <= tolerance
        if not matched:
            logger.warning(f'Spectral peak at {peak.nu:.6g} has no emission line within {tolerance:.3g}.')
        table.append(LineAssignment(nu=peak.nu, height=peak.height, fwhm=peak.fwhm,
                                    initial=dressed.name_of(initial), final=dressed.name_of(final),
                                    transition_frequency=float(frequency), amplitude=float(amplitude),
                                    matched=matched))
    return table
