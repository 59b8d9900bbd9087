"""
Quantum-jump unraveling of the master equation.

Between emissions a trajectory evolves under H_eff, so its squared norm decays monotonically at rate
2 kappa <a+a>. A uniform variate r is drawn at the start of every segment and the emission happens when the squared
norm first reaches r; the state then collapses to a|psi> / ||a|psi>||. Segments are propagated with the exact
exponential of H_eff and the crossing time is located by bracketing plus Brent's method.
"""
import csv
import math

from dataclasses import dataclass, field

from functools import partial

from multiprocessing import Pool, Queue

from pathlib import Path

from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from numpy.random import Generator, PCG64, SeedSequence

from scipy import linalg
from scipy.optimize import brentq

import nlrabi.globals

from nlrabi.log_setup import get_logger
from nlrabi.model import ModelParams, effective_hamiltonian
from nlrabi.solvers import Observables
from nlrabi.weak_excitation import amplitudes
from nlrabi.errors import IntegrationError, InsufficientStatisticsError
from nlrabi.hilbert import SpaceSpec, StateVector, annihilation, number_op, pauli

logger = get_logger(__name__)

MANIFOLD_1 = 1
MANIFOLD_2 = 2
MIXED = 'mixed'
MANIFOLD_PURITY = 0.999

CROSSING_RTOL = 1e-10
OVERSHOOT_TOL = 1e-6
MIN_STEP = 1e-14
STEPS_PER_CHUNK = 256
CONDITION_LIMIT = 1e8

MIN_JUMPS = 100
DEFAULT_BIN_WIDTH = 0.05
BURN_IN_JUMPS = 20.0

ManifoldLabel = Union[int, str]


@dataclass(frozen=True)
class TrajectoryConfig:
    """
    Trajectory settings; times are absolute (same unit as 1 / omega in ModelParams).

    Args:
        seed: Root seed; trajectory i uses the stream SeedSequence(seed, spawn_key=(i,)) with PCG64.
        t_total: End of each trajectory.
        t_burn: Start of the estimation window; None selects 20 / (kappa |beta|^2_max).
        dt_max: Bracketing step for the norm-crossing search.
        n_trajectories: Number of independent trajectories.
        dt_sample: Interval of the stored <a+a>, <sigma_z> and manifold samples.
        n_batches: Batches for the batch-means standard errors.
        bin_widths: Coincidence bin widths for g2(0), in units of 1 / omega.
    """
    seed: int
    t_total: float
    t_burn: Optional[float] = None
    dt_max: float = 1.0
    n_trajectories: int = 1
    dt_sample: float = 0.5
    n_batches: int = 20
    bin_widths: Tuple[float, ...] = (0.025, 0.05, 0.1)

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError(f"n_trajectories must be at least 1, got {self.n_trajectories}.")
        if self.t_burn is not None and not self.t_total > self.t_burn >= 0:
            raise ValueError(f"Need t_total > t_burn >= 0, got t_total={self.t_total}, t_burn={self.t_burn}.")
        if not self.t_total > 0:
            raise ValueError(f"t_total must be positive, got {self.t_total}.")
        if not self.dt_max > 0 or not self.dt_sample > 0:
            raise ValueError(f"dt_max and dt_sample must be positive, got {self.dt_max} and {self.dt_sample}.")
        if self.n_batches < 2:
            raise ValueError(f"n_batches must be at least 2, got {self.n_batches}.")
        object.__setattr__(self, 'bin_widths', tuple(float(b) for b in self.bin_widths))
        if not self.bin_widths or min(self.bin_widths) <= 0:
            raise ValueError(f"bin_widths must be positive, got {self.bin_widths}.")

    def burn_in(self, params: ModelParams) -> float:
        """The configured burn-in, or 20 mean inter-jump intervals of the weak-excitation picture."""
        if self.t_burn is not None:
            return self.t_burn
        amps = amplitudes(params)
        rate = params.kappa * max(abs(amps.beta1) ** 2, abs(amps.beta2) ** 2)
        burn = BURN_IN_JUMPS / rate if rate > 0 else 0.0
        if burn >= self.t_total:
            raise ValueError(f"Automatic burn-in {burn:.6g} is not shorter than t_total={self.t_total:.6g}; "
                             f"set t_burn explicitly.")
        return burn


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """
    One trajectory. manifold_labels[k] is the label of the interval that starts at t_start (k = 0) or at
    jump_times[k - 1]; sample_labels use 1, 2 and 0 for mixed.
    """
    trajectory_id: int
    t_start: float
    t_end: float
    jump_times: np.ndarray
    manifold_labels: Tuple[ManifoldLabel, ...]
    final_state: StateVector
    sample_times: np.ndarray = field(repr=False)
    photon_number_samples: np.ndarray = field(repr=False)
    inversion_samples: np.ndarray = field(repr=False)
    sample_labels: np.ndarray = field(repr=False)

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)

    def intervals(self) -> Tuple[np.ndarray, np.ndarray]:
        starts = np.concatenate(([self.t_start], self.jump_times))
        ends = np.concatenate((self.jump_times, [self.t_end]))
        return starts, ends


@dataclass(frozen=True)
class TrajectoryEstimate:
    """
    Post-burn-in estimates with batch-means standard errors. g2_by_bin maps a bin width (1 / omega units) to
    (estimate, standard error); g2 entries are None when no emissions were seen.
    """
    photon_number: float
    photon_number_se: float
    flux: float
    flux_se: float
    inversion: float
    inversion_se: float
    p1: float
    p1_se: float
    p2: float
    p2_se: float
    g2_zero: Optional[float]
    g2_zero_se: Optional[float]
    g2_by_bin: Dict[float, Tuple[Optional[float], Optional[float]]]
    n_jumps: int
    elapsed: float
    insufficient: bool

    def as_observables(self) -> Observables:
        return Observables(photon_number=self.photon_number, inversion=self.inversion, g2_zero=self.g2_zero)


def _class_one_mask(dim: int) -> np.ndarray:
    index = np.arange(dim)
    n, s = np.divmod(index, 2)
    return (n + s) % 2 == 1


def _classify_amplitudes(amplitudes_: np.ndarray) -> np.ndarray:
    """Manifold label per row of a (k, dim) array: 1, 2, or 0 for mixed."""
    weights = np.abs(amplitudes_) ** 2
    fraction = weights[:, _class_one_mask(amplitudes_.shape[1])].sum(axis=1) / weights.sum(axis=1)
    labels = np.zeros(fraction.size, dtype=np.int8)
    labels[fraction >= MANIFOLD_PURITY] = MANIFOLD_1
    labels[fraction <= 1 - MANIFOLD_PURITY] = MANIFOLD_2
    return labels


def manifold_classify(state: StateVector) -> ManifoldLabel:
    """
    This function classifies a state by the parity of n + s.

    Args:
        state: The state; it is normalized internally.

    Returns:
        1 when at least 99.9% of the population lies on {|n,e>: n even} and {|n,g>: n odd}, 2 for the complementary
        span, 'mixed' otherwise.
    """
    label = int(_classify_amplitudes(state.amplitudes[np.newaxis, :])[0])
    return label if label else MIXED


class _Propagator:

    def __init__(self, h_eff: np.ndarray):
        """
        This class evolves kets under H_eff, through its eigen-decomposition when that is well conditioned and with
        the matrix exponential otherwise.

        Args:
            h_eff: The non-Hermitian effective Hamiltonian.

        Returns:

        """
        self.h_eff = h_eff
        values, vectors = linalg.eig(h_eff)
        self.exact = np.linalg.cond(vectors) < CONDITION_LIMIT
        if self.exact:
            self.values, self.vectors = values, vectors
        else:
            logger.warning('H_eff eigenbasis is ill-conditioned; using matrix exponentials for trajectory segments.')

    def coefficients(self, psi: np.ndarray) -> np.ndarray:
        return linalg.solve(self.vectors, psi) if self.exact else psi

    def states(self, coefficients: np.ndarray, taus: np.ndarray) -> np.ndarray:
        """Rows are the unnormalized kets at the given times after the segment start."""
        taus = np.atleast_1d(taus)
        if self.exact:
            return (np.exp(-1j * np.outer(taus, self.values)) * coefficients) @ self.vectors.T
        return np.array([linalg.expm(-1j * self.h_eff * tau) @ coefficients for tau in taus])

    def norms(self, coefficients: np.ndarray, taus: np.ndarray) -> np.ndarray:
        return np.sum(np.abs(self.states(coefficients, taus)) ** 2, axis=1)


def _crossing_time(propagator: _Propagator, coefficients: np.ndarray, target: float, lo: float, hi: float) -> float:
    """
    This function locates the time in (lo, hi] where the squared norm reaches target, subdividing the bracket
    whenever the refined time misses the target by more than 1e-6.

    Raises:
        IntegrationError: If the bracket shrinks below 1e-14 without a clean crossing.
    """
    def excess(tau):
        return propagator.norms(coefficients, tau)[0] - target

    while True:
        if hi - lo < MIN_STEP * max(1.0, hi):
            raise IntegrationError(f"Norm crossing could not be resolved near tau={hi:.16g}: step underflow.")
        if excess(hi) == 0.0:
            return hi
        tau = brentq(excess, lo, hi, xtol=MIN_STEP, rtol=CROSSING_RTOL)
        if abs(excess(tau)) <= OVERSHOOT_TOL * target:
            return tau
        logger.debug(f'Norm overshoot at tau={tau:.6g}; refining bracket [{lo:.6g}, {hi:.6g}].')
        grid = np.linspace(lo, hi, 17)
        below = np.nonzero(propagator.norms(coefficients, grid[1:]) <= target)[0]
        first = int(below[0]) if below.size else 15
        lo, hi = grid[first], grid[first + 1]


def _run(params: ModelParams, space: SpaceSpec, config: TrajectoryConfig, initial: StateVector,
         propagator: _Propagator, trajectory_id: int) -> TrajectoryRecord:
    rng = Generator(PCG64(SeedSequence(config.seed, spawn_key=(trajectory_id,))))
    a = annihilation(space).entries
    n_op = number_op(space).entries
    sz = pauli(space, 'z').entries

    t_end = float(config.t_total)
    sample_times = config.dt_sample * np.arange(int(math.floor(t_end / config.dt_sample + 1e-9)) + 1)
    photon_samples = np.empty(sample_times.size)
    inversion_samples = np.empty(sample_times.size)
    sample_labels = np.empty(sample_times.size, dtype=np.int8)

    psi = initial.vector()
    t0 = 0.0
    jump_times = []
    labels = [manifold_classify(initial)]
    next_sample = 0

    while True:
        coefficients = propagator.coefficients(psi)
        target = rng.random()
        jump_tau = None
        offset = 0.0
        while offset < t_end - t0:
            grid = offset + config.dt_max * np.arange(1, STEPS_PER_CHUNK + 1)
            grid = np.minimum(grid, t_end - t0)
            grid = grid[np.concatenate(([True], np.diff(grid) > 0))]
            crossed = np.nonzero(propagator.norms(coefficients, grid) <= target)[0]
            if crossed.size:
                hi = grid[crossed[0]]
                lo = grid[crossed[0] - 1] if crossed[0] > 0 else offset
                jump_tau = _crossing_time(propagator, coefficients, target, lo, hi)
                break
            offset = grid[-1]

        segment_end = t0 + jump_tau if jump_tau is not None else t_end
        last_sample = np.searchsorted(sample_times, segment_end, side='left' if jump_tau is not None else 'right')
        if last_sample > next_sample:
            kets = propagator.states(coefficients, sample_times[next_sample:last_sample] - t0)
            weights = np.sum(np.abs(kets) ** 2, axis=1)
            photon_samples[next_sample:last_sample] = np.einsum('ki,ij,kj->k', kets.conj(), n_op, kets).real / weights
            inversion_samples[next_sample:last_sample] = np.einsum('ki,ij,kj->k', kets.conj(), sz, kets).real / weights
            sample_labels[next_sample:last_sample] = _classify_amplitudes(kets)
            next_sample = last_sample

        if jump_tau is None:
            final = propagator.states(coefficients, np.array([t_end - t0]))[0]
            break
        collapsed = a @ propagator.states(coefficients, np.array([jump_tau]))[0]
        norm = np.linalg.norm(collapsed)
        if norm == 0.0:
            raise IntegrationError(f"Emission at t={segment_end:.16g} from a state with no photons.")
        psi = collapsed / norm
        t0 = segment_end
        jump_times.append(t0)
        labels.append(manifold_classify(StateVector(space, psi)))

    final_state = StateVector(space, final).normalized()
    logger.debug(f'Trajectory {trajectory_id}: {len(jump_times)} jumps in {t_end:.6g}.')
    return TrajectoryRecord(trajectory_id=trajectory_id, t_start=0.0, t_end=t_end,
                            jump_times=np.asarray(jump_times, dtype=float), manifold_labels=tuple(labels),
                            final_state=final_state, sample_times=sample_times,
                            photon_number_samples=photon_samples, inversion_samples=inversion_samples,
                            sample_labels=sample_labels)


def _check_initial(space: SpaceSpec, initial: StateVector) -> None:
    if initial.space != space:
        raise ValueError(f"Initial state lives on n_max={initial.space.n_max}, expected {space.n_max}.")
    if abs(initial.norm() - 1.0) > 1e-10:
        raise ValueError(f"Initial state must be normalized, got norm {initial.norm():.12g}.")


def run_trajectory(params: ModelParams, space: SpaceSpec, config: TrajectoryConfig, initial: StateVector,
                   trajectory_id: int = 0) -> TrajectoryRecord:
    """
    This function runs one quantum-jump trajectory from t = 0 to config.t_total.

    Args:
        params: Model parameters.
        space: Truncated space.
        config: Trajectory settings.
        initial: Normalized initial ket.
        trajectory_id: Index of the random stream.

    Returns:
        The TrajectoryRecord; identical inputs give bit-identical jump times.
    """
    _check_initial(space, initial)
    propagator = _Propagator(effective_hamiltonian(params, space).entries)
    return _run(params, space, config, initial, propagator, trajectory_id)


def _trajectory_worker(trajectory_id: int, params: ModelParams, space: SpaceSpec, config: TrajectoryConfig,
                       initial: StateVector, queue: Optional[Queue] = None) -> TrajectoryRecord:
    worker_logger = get_logger(__name__, queue=queue)
    worker_logger.debug(f'Starting trajectory {trajectory_id}.')
    return run_trajectory(params, space, config, initial, trajectory_id=trajectory_id)


def run_ensemble(params: ModelParams, space: SpaceSpec, config: TrajectoryConfig, initial: StateVector,
                 jobs: int = 1) -> List[TrajectoryRecord]:
    """
    This function runs config.n_trajectories independent trajectories.

    Args:
        params: Model parameters.
        space: Truncated space.
        config: Trajectory settings.
        initial: Normalized initial ket, shared by all trajectories.
        jobs: Worker processes; 1 runs in this process.

    Returns:
        Records ordered by trajectory id.
    """
    _check_initial(space, initial)
    ids = range(config.n_trajectories)
    if jobs <= 1:
        propagator = _Propagator(effective_hamiltonian(params, space).entries)
        return [_run(params, space, config, initial, propagator, i) for i in ids]

    with Pool(processes=jobs) as pool:
        records = list(pool.imap(partial(_trajectory_worker, params=params, space=space, config=config,
                                         initial=initial, queue=nlrabi.globals.logger_queue), ids))
    return records


def _batch_windows(records: Sequence[TrajectoryRecord], burn: float, n_batches: int):
    per_record = max(1, math.ceil(n_batches / len(records)))
    for record in records:
        start = max(burn, record.t_start)
        if record.t_end <= start:
            continue
        edges = np.linspace(start, record.t_end, per_record + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            yield record, lo, hi


def _pair_count(times: np.ndarray, width: float) -> int:
    """Ordered pairs i < j with 0 < t_j - t_i <= width."""
    if times.size < 2:
        return 0
    partners = np.searchsorted(times, times + width, side='right') - np.arange(1, times.size + 1)
    return int(partners.sum())


def _mean_and_error(values: np.ndarray) -> Tuple[float, float]:
    values = values[np.isfinite(values)]
    if values.size < 2:
        return float('nan'), float('nan')
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def estimate_observables(records: Sequence[TrajectoryRecord], params: ModelParams,
                         config: TrajectoryConfig) -> TrajectoryEstimate:
    """
    This function estimates steady-state quantities from the post-burn-in part of the records.

    The photon number follows from the emission flux, <a+a> = flux / (2 kappa); <sigma_z> is the time average of the
    stored samples; p1 and p2 are the fractions of time spent in each manifold; g2(0) is the coincidence estimator
    N_pairs / (R^2 T b) for every configured bin width b. Standard errors are batch means over config.n_batches
    windows.

    Args:
        records: Trajectories.
        params: Their model parameters.
        config: Their settings (burn-in, batches, bin widths).

    Returns:
        TrajectoryEstimate; insufficient is True (and a warning is logged) with fewer than 100 emissions.

    Raises:
        InsufficientStatisticsError: If no record extends past the burn-in.
    """
    if not records:
        raise InsufficientStatisticsError("No trajectories to estimate from.")
    burn = config.burn_in(params)
    widths = [b / params.omega for b in config.bin_widths]

    durations, jumps, class_one, class_two, inversions = [], [], [], [], []
    pairs = {b: [] for b in widths}
    for record, lo, hi in _batch_windows(records, burn, config.n_batches):
        times = record.jump_times[(record.jump_times > lo) & (record.jump_times <= hi)]
        starts, ends = record.intervals()
        overlap = np.clip(np.minimum(ends, hi) - np.maximum(starts, lo), 0.0, None)
        labels = np.array([label if label != MIXED else 0 for label in record.manifold_labels])
        in_window = (record.sample_times >= lo) & (record.sample_times <= hi)

        durations.append(hi - lo)
        jumps.append(times.size)
        class_one.append(overlap[labels == MANIFOLD_1].sum())
        class_two.append(overlap[labels == MANIFOLD_2].sum())
        inversions.append(record.inversion_samples[in_window].mean() if np.any(in_window) else np.nan)
        for b in widths:
            pairs[b].append(_pair_count(times, b))

    if not durations:
        raise InsufficientStatisticsError(f"No record extends past the burn-in t={burn:.6g}.")
    durations = np.asarray(durations)
    jumps = np.asarray(jumps, dtype=float)
    elapsed = float(durations.sum())
    n_jumps = int(jumps.sum())
    insufficient = n_jumps < MIN_JUMPS
    if insufficient:
        logger.warning(f'Only {n_jumps} emissions after burn-in; trajectory estimates are unreliable.')

    flux = n_jumps / elapsed
    _, flux_se = _mean_and_error(jumps / durations)
    _, inversion_se = _mean_and_error(np.asarray(inversions))
    inversion = float(np.nanmean(inversions))
    p1 = float(np.sum(class_one) / elapsed)
    p2 = float(np.sum(class_two) / elapsed)
    _, p1_se = _mean_and_error(np.asarray(class_one) / durations)
    _, p2_se = _mean_and_error(np.asarray(class_two) / durations)

    g2_by_bin = {}
    for b, width in zip(config.bin_widths, widths):
        counts = np.asarray(pairs[width], dtype=float)
        if n_jumps == 0:
            g2_by_bin[b] = (None, None)
            continue
        value = float(counts.sum() / (flux ** 2 * elapsed * width))
        with np.errstate(divide='ignore', invalid='ignore'):
            per_batch = counts / ((jumps / durations) ** 2 * durations * width)
        _, error = _mean_and_error(per_batch)
        g2_by_bin[b] = (value, error)
    default_bin = DEFAULT_BIN_WIDTH if DEFAULT_BIN_WIDTH in g2_by_bin else config.bin_widths[0]
    g2_zero, g2_zero_se = g2_by_bin[default_bin]

    return TrajectoryEstimate(photon_number=flux / (2 * params.kappa), photon_number_se=flux_se / (2 * params.kappa),
                              flux=flux, flux_se=flux_se, inversion=inversion, inversion_se=inversion_se,
                              p1=p1, p1_se=p1_se, p2=p2, p2_se=p2_se, g2_zero=g2_zero, g2_zero_se=g2_zero_se,
                              g2_by_bin=g2_by_bin, n_jumps=n_jumps, elapsed=elapsed, insufficient=insufficient)


def alternation_rate(record: TrajectoryRecord) -> Optional[float]:
    """Fraction of consecutive pure-manifold interval pairs whose labels differ; None without such pairs."""
    pairs = [(first, second) for first, second in zip(record.manifold_labels[:-1], record.manifold_labels[1:])
             if first != MIXED and second != MIXED]
    if not pairs:
        return None
    return sum(first != second for first, second in pairs) / len(pairs)


def write_jump_times(records: Sequence[TrajectoryRecord], path: Union[Path, str]) -> Path:
    """
    This function dumps the jump times of every record as CSV with columns trajectory_id, jump_time.

    Args:
        records: Trajectories.
        path: Output file.

    Returns:
        The path written.
    """
    path = Path(path)
    with open(path, 'w', newline='') as csv_file:
        writer = csv.writer(csv_file)
        writer.writerow(['trajectory_id', 'jump_time'])
        for record in records:
            for jump_time in record.jump_times:
                writer.writerow([record.trajectory_id, format(jump_time, '.17g')])
    return path
