"""
One-parameter sweeps evaluated by up to three independent engines: the master equation, the weak-excitation closed
forms and quantum-jump trajectories.
"""
from dataclasses import dataclass, field

from functools import partial

from multiprocessing import Pool, Queue

from typing import Dict, List, Optional, Tuple

import numpy as np

import nlrabi.globals

from nlrabi.errors import NlrabiError
from nlrabi.log_setup import get_logger
from nlrabi.hilbert import DEFAULT_N_MAX, basis_state, make_space, EXCITED
from nlrabi.model import ModelParams, liouvillian
from nlrabi.solvers import converge_cutoff, observables, manifold_populations, steady_state, OBSERVABLE_NAMES
from nlrabi.trajectory import TrajectoryConfig, run_ensemble, estimate_observables
from nlrabi.weak_excitation import amplitudes, populations, closed_form_observables

logger = get_logger(__name__)

AXES = ('U', 'g', 'omega0', 'omega', 'kappa')
ENGINES = ('master', 'analytic', 'trajectory')
OUTPUTS = OBSERVABLE_NAMES + ('p1', 'p2')


@dataclass(frozen=True, eq=False)
class SweepSpec:
    """
    A one-parameter sweep.

    Args:
        base: Parameters of every point except the swept one.
        axis: One of U, g, omega0, omega, kappa.
        grid: Strictly monotone axis values, same units as base.
        outputs: Quantities per engine, from photon_number, inversion, g2_zero, p1, p2.
        engines: Subset of master, analytic, trajectory.
        n_max: First Fock cutoff of the master engine.
        cutoff_tol: Convergence tolerance of the cutoff ladder; None solves at n_max only.
        trajectory: Settings of the trajectory engine.
    """
    base: ModelParams
    axis: str
    grid: np.ndarray
    outputs: Tuple[str, ...] = OBSERVABLE_NAMES
    engines: Tuple[str, ...] = ('master', 'analytic')
    n_max: int = DEFAULT_N_MAX
    cutoff_tol: Optional[float] = 1e-8
    trajectory: Optional[TrajectoryConfig] = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"Unknown sweep axis '{self.axis}', expected one of {', '.join(AXES)}.")
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        if grid.size == 0:
            raise ValueError("Sweep grid is empty.")
        steps = np.diff(grid)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("Sweep grid must be strictly monotone.")
        object.__setattr__(self, 'grid', grid)
        object.__setattr__(self, 'outputs', tuple(self.outputs))
        object.__setattr__(self, 'engines', tuple(self.engines))
        unknown = [name for name in self.outputs if name not in OUTPUTS]
        if unknown or not self.outputs:
            raise ValueError(f"Unknown outputs {unknown}, expected names from {', '.join(OUTPUTS)}.")
        unknown = [name for name in self.engines if name not in ENGINES]
        if unknown or not self.engines:
            raise ValueError(f"Unknown engines {unknown}, expected names from {', '.join(ENGINES)}.")
        if 'trajectory' in self.engines and self.trajectory is None:
            raise ValueError("The trajectory engine needs a TrajectoryConfig.")

    def params_at(self, value: float) -> ModelParams:
        return self.base.replace(**{self.axis: float(value)})


@dataclass(frozen=True)
class SweepRow:
    """
    One grid point. values and standard_errors are keyed '<engine>.<output>'; errors maps a failed engine to its
    message.
    """
    index: int
    axis_value: float
    params: ModelParams
    values: Dict[str, Optional[float]]
    n_max_used: int
    residual: Optional[float] = None
    standard_errors: Dict[str, Optional[float]] = field(default_factory=dict)
    errors: Dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: Tuple[SweepRow, ...]

    def column(self, key: str) -> np.ndarray:
        """Values of '<engine>.<output>' along the grid, NaN where missing."""
        return np.array([np.nan if row.values.get(key) is None else row.values[key] for row in self.rows])

    @property
    def failed_rows(self) -> List[SweepRow]:
        return [row for row in self.rows if row.errors]


def _master_point(spec: SweepSpec, params: ModelParams) -> Tuple[Dict[str, Optional[float]], int, float]:
    request = [name for name in spec.outputs if name in OBSERVABLE_NAMES] or list(OBSERVABLE_NAMES)
    if spec.cutoff_tol is None:
        result = steady_state(liouvillian(params, make_space(spec.n_max)))
    else:
        result = converge_cutoff(params, observable_request=request, tol=spec.cutoff_tol, n_max_start=spec.n_max)
    single = observables(result.rho)
    p1, p2 = manifold_populations(result.rho)
    available = {'photon_number': single.photon_number, 'inversion': single.inversion, 'g2_zero': single.g2_zero,
                 'p1': p1, 'p2': p2}
    return {name: available[name] for name in spec.outputs}, result.n_max_used, result.residual


def _analytic_point(spec: SweepSpec, params: ModelParams) -> Dict[str, Optional[float]]:
    single = closed_form_observables(params)
    available = {'photon_number': single.photon_number, 'inversion': single.inversion, 'g2_zero': single.g2_zero}
    if 'p1' in spec.outputs or 'p2' in spec.outputs:
        manifolds = populations(amplitudes(params))
        available.update(p1=manifolds.p1, p2=manifolds.p2)
    return {name: available[name] for name in spec.outputs}


def _trajectory_point(spec: SweepSpec, params: ModelParams) -> Tuple[Dict[str, Optional[float]], Dict[str, float]]:
    space = make_space(spec.n_max)
    records = run_ensemble(params, space, spec.trajectory, basis_state(space, 0, EXCITED))
    estimate = estimate_observables(records, params, spec.trajectory)
    available = {
        'photon_number': (estimate.photon_number, estimate.photon_number_se),
        'inversion': (estimate.inversion, estimate.inversion_se),
        'g2_zero': (estimate.g2_zero, estimate.g2_zero_se),
        'p1': (estimate.p1, estimate.p1_se),
        'p2': (estimate.p2, estimate.p2_se),
    }
    values = {name: available[name][0] for name in spec.outputs}
    errors = {name: available[name][1] for name in spec.outputs}
    return values, errors


def _sweep_point(indexed_value: Tuple[int, float], spec: SweepSpec, run_name: Optional[str] = None,
                 queue: Optional[Queue] = None) -> SweepRow:
    """
    This function evaluates every requested engine at one grid point. Engine failures are recorded in the row.

    Args:
        indexed_value: (grid index, axis value).
        spec: The sweep.
        run_name: Log segment of the run.
        queue: Logger queue of the parent process, for pool workers.

    Returns:
        The SweepRow.
    """
    point_logger = get_logger(__name__, queue=queue)
    tag = f'RUN({run_name}) ' if run_name else ''
    index, value = indexed_value
    params = spec.params_at(value)

    values, standard_errors, errors = {}, {}, {}
    n_max_used, residual = spec.n_max, None
    for engine in spec.engines:
        try:
            if engine == 'master':
                engine_values, n_max_used, residual = _master_point(spec, params)
            elif engine == 'analytic':
                engine_values = _analytic_point(spec, params)
            else:
                engine_values, engine_errors = _trajectory_point(spec, params)
                standard_errors.update({f'{engine}.{name}': se for name, se in engine_errors.items()})
        except (NlrabiError, ValueError) as e:
            point_logger.warning(f'{tag}{engine} engine failed at {spec.axis}={value:.6g}: {e}')
            errors[engine] = f'{type(e).__name__}: {e}'
            engine_values = {name: None for name in spec.outputs}
        values.update({f'{engine}.{name}': result for name, result in engine_values.items()})

    point_logger.info(f'{tag}Point {index}: {spec.axis}={value:.6g}, n_max={n_max_used}.')
    return SweepRow(index=index, axis_value=float(value), params=params, values=values, n_max_used=n_max_used,
                    residual=residual, standard_errors=standard_errors, errors=errors)


def run_sweep(spec: SweepSpec, jobs: int = 1, run_name: Optional[str] = None) -> SweepResult:
    """
    This function evaluates a sweep, optionally on a process pool. Rows come back in grid order regardless of
    completion order.

    Args:
        spec: The sweep.
        jobs: Worker processes; 1 runs in this process.
        run_name: Optional log segment; tagged records also go to log_dir/<run_name>/logs.log.

    Returns:
        The SweepResult.
    """
    tag = f'RUN({run_name}) ' if run_name else ''
    logger.info(f'{tag}Sweeping {spec.axis} over {spec.grid.size} points with engines {", ".join(spec.engines)}.')
    points = list(enumerate(spec.grid))
    if jobs <= 1:
        rows = [_sweep_point(point, spec=spec, run_name=run_name) for point in points]
    else:
        with Pool(processes=jobs) as pool:
            rows = list(pool.imap(partial(_sweep_point, spec=spec, run_name=run_name,
                                          queue=nlrabi.globals.logger_queue), points))
    failed = sum(1 for row in rows if row.errors)
    if failed:
        logger.warning(f'{tag}{failed} of {len(rows)} sweep points had engine failures.')
    return SweepResult(spec=spec, rows=tuple(rows))


def linear_grid(start: float, stop: float, num: int) -> np.ndarray:
    if num < 1:
        raise ValueError(f"Grid needs at least one point, got num={num}.")
    return np.linspace(start, stop, num)
