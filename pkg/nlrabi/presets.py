"""
Runs that turn a configuration into files: the figure presets and the single-purpose verbs of the command line.
Every run writes its tables plus a manifest into <out_dir>/<run name>/ and tags its log records RUN(<run name>).
"""
from dataclasses import dataclass

from pathlib import Path

from configparser import ConfigParser

from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from nlrabi.log_setup import get_logger
from nlrabi.utils import create_dir_if_not_exists
from nlrabi.errors import ConfigError
from nlrabi.hilbert import basis_state, make_space, EXCITED, GROUND
from nlrabi.model import ModelParams, at_special_point
from nlrabi.spectral import assign_lines, default_nu_grid, dressed_states, emission_spectrum, g2_tau
from nlrabi.sweep import SweepSpec, SweepResult, run_sweep, linear_grid, AXES
from nlrabi.trajectory import (TrajectoryConfig, run_ensemble, estimate_observables, alternation_rate,
                               write_jump_times)
from nlrabi.weak_excitation import g2_tau_approx, g2_tau_numeric_ansatz
from nlrabi.output import (write_lines, write_levels, write_manifest, write_spectrum, write_sweep, write_table,
                           write_traces)
from nlrabi.configurations.config import (get_float, get_float_list, get_int, get_name_list,
                                          model_params_from_config)

logger = get_logger(__name__)

FIG1_OMEGA0 = (2.0, 5.0, 10.0)
LARGE_G = (0.2, 0.5, 1.0)
U_RANGE = (-24.0, 6.0, 121)
SATURATION_G = (0.05, 2.0, 40)
G2TAU_OMEGA = (5.0, 2.5)
G2TAU_OFFSETS = (2.0, 4.0, 10.0)


@dataclass(frozen=True)
class RunOutput:
    name: str
    out_dir: Path
    files: Tuple[Path, ...]
    manifest: Path


@dataclass(frozen=True)
class _Settings:
    """The NUMERICS, SPECTRUM and CORRELATION values shared by every run."""
    omega: float
    n_max: int
    cutoff_tol: Optional[float]
    jobs: int
    rel_height: float
    tau_max: float
    tau_num: int


def _settings(config: ConfigParser, jobs: Optional[int] = None) -> _Settings:
    settings = _Settings(omega=get_float(config, 'MODEL', 'omega'),
                         n_max=get_int(config, 'NUMERICS', 'n_max'),
                         cutoff_tol=get_float(config, 'NUMERICS', 'cutoff_tol'),
                         jobs=jobs if jobs is not None else get_int(config, 'NUMERICS', 'jobs'),
                         rel_height=get_float(config, 'SPECTRUM', 'rel_height'),
                         tau_max=get_float(config, 'CORRELATION', 'tau_max'),
                         tau_num=get_int(config, 'CORRELATION', 'tau_num'))
    if settings.n_max < 2:
        raise ConfigError(f"[NUMERICS] n_max must be at least 2, got {settings.n_max}.")
    if settings.jobs < 1:
        raise ConfigError(f"[NUMERICS] jobs must be at least 1, got {settings.jobs}.")
    return settings


def trajectory_config_from_config(config: ConfigParser) -> TrajectoryConfig:
    """
    This function reads the TRAJECTORY section; its times are in units of 1 / omega.

    Args:
        config: The loaded configuration.

    Returns:
        TrajectoryConfig in absolute time units.
    """
    scale = 1.0 / get_float(config, 'MODEL', 'omega')
    t_burn = get_float(config, 'TRAJECTORY', 't_burn')
    try:
        return TrajectoryConfig(seed=get_int(config, 'NUMERICS', 'seed'),
                                t_total=get_float(config, 'TRAJECTORY', 't_total') * scale,
                                t_burn=t_burn * scale if t_burn is not None else None,
                                dt_max=get_float(config, 'TRAJECTORY', 'dt_max') * scale,
                                n_trajectories=get_int(config, 'TRAJECTORY', 'n_trajectories'),
                                dt_sample=get_float(config, 'TRAJECTORY', 'dt_sample') * scale,
                                n_batches=get_int(config, 'TRAJECTORY', 'n_batches'),
                                bin_widths=tuple(get_float_list(config, 'TRAJECTORY', 'bin_widths')))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[TRAJECTORY] {e}")


def sweep_spec_from_config(config: ConfigParser) -> SweepSpec:
    """
    This function reads the SWEEP section: axis values are ratios to omega, given as an explicit comma separated grid
    or as start, stop and num.

    Args:
        config: The loaded configuration.

    Returns:
        SweepSpec.
    """
    settings = _settings(config)
    axis = config.get('SWEEP', 'axis').strip()
    if axis not in AXES:
        raise ConfigError(f"[SWEEP] axis '{axis}' must be one of {', '.join(AXES)}.")
    grid = get_float_list(config, 'SWEEP', 'grid')
    if not grid:
        start, stop = get_float(config, 'SWEEP', 'start'), get_float(config, 'SWEEP', 'stop')
        num = get_int(config, 'SWEEP', 'num')
        if start is None or stop is None or num < 1:
            raise ConfigError("[SWEEP] needs a grid or start, stop and num >= 1.")
        grid = linear_grid(start, stop, num)
    engines = get_name_list(config, 'SWEEP', 'engines')
    try:
        return SweepSpec(base=model_params_from_config(config), axis=axis, grid=np.asarray(grid) * settings.omega,
                         outputs=tuple(get_name_list(config, 'SWEEP', 'outputs')), engines=tuple(engines),
                         n_max=settings.n_max, cutoff_tol=settings.cutoff_tol,
                         trajectory=trajectory_config_from_config(config) if 'trajectory' in engines else None)
    except ValueError as e:
        raise ConfigError(f"[SWEEP] {e}")


def _out_dir(config: ConfigParser, name: str, out_dir: Optional[str]) -> Path:
    return Path(out_dir or config.get('NUMERICS', 'out_dir')) / name


def _sweep_details(result: SweepResult) -> Dict[str, object]:
    return {'axis': result.spec.axis, 'grid': result.spec.grid, 'base': result.spec.base.as_dict(),
            'n_max_used': [row.n_max_used for row in result.rows],
            'failed_points': [row.index for row in result.failed_rows]}


def _ratios(settings: _Settings, **ratios) -> ModelParams:
    return ModelParams.from_ratios(omega=settings.omega, **ratios)


def _u_sweep(settings: _Settings, base: ModelParams, outputs, run_name: str) -> SweepResult:
    start, stop, num = U_RANGE
    spec = SweepSpec(base=base, axis='U', grid=linear_grid(start, stop, num) * settings.omega, outputs=outputs,
                     engines=('master', 'analytic'), n_max=settings.n_max, cutoff_tol=settings.cutoff_tol)
    return run_sweep(spec, jobs=settings.jobs, run_name=run_name)


def _fig1(settings: _Settings, out: Path, name: str):
    files, details = [], {}
    for omega0 in FIG1_OMEGA0:
        base = _ratios(settings, omega0=omega0, g=0.1, U=-2 * omega0, kappa=0.2)
        result = _u_sweep(settings, base, ('photon_number', 'inversion', 'g2_zero'), name)
        files.append(write_sweep(result, out / f'{name}_omega0_{omega0:g}.csv'))
        details[files[-1].name] = _sweep_details(result)
    return files, details


def _fig2_p1p2(settings: _Settings, out: Path, name: str):
    result = _u_sweep(settings, _ratios(settings, omega0=10, g=0.1, U=-20, kappa=0.2), ('p1', 'p2'), name)
    path = write_sweep(result, out / f'{name}.csv')
    return [path], {path.name: _sweep_details(result)}


def _fig8_large_g_sweep(settings: _Settings, out: Path, name: str):
    files, details = [], {}
    for g in LARGE_G:
        result = _u_sweep(settings, _ratios(settings, omega0=10, g=g, U=-20, kappa=0.2),
                          ('photon_number', 'inversion', 'g2_zero'), name)
        files.append(write_sweep(result, out / f'{name}_g_{g:g}.csv'))
        details[files[-1].name] = _sweep_details(result)
    return files, details


def _fig9_saturation(settings: _Settings, out: Path, name: str):
    start, stop, num = SATURATION_G
    spec = SweepSpec(base=_ratios(settings, omega0=10, g=start, U=-20, kappa=0.2), axis='g',
                     grid=linear_grid(start, stop, num) * settings.omega, outputs=('photon_number', 'inversion',
                                                                                    'g2_zero'),
                     engines=('master', 'analytic'), n_max=settings.n_max, cutoff_tol=settings.cutoff_tol)
    result = run_sweep(spec, jobs=settings.jobs, run_name=name)
    path = write_sweep(result, out / f'{name}.csv')
    return [path], {path.name: _sweep_details(result)}


def _tau_grid(settings: _Settings, kappa: float) -> np.ndarray:
    return np.linspace(0.0, settings.tau_max / kappa, settings.tau_num)


def _g2_traces(settings: _Settings, params: ModelParams, path: Path) -> Path:
    """QRT, closed-form and integrated-ansatz g2(tau) side by side."""
    tau = _tau_grid(settings, params.kappa)
    space = make_space(settings.n_max)
    columns = {'qrt': g2_tau(params, tau, space).values,
               'analytic': g2_tau_approx(params, tau).values,
               'ansatz': g2_tau_numeric_ansatz(params, tau).values}
    metadata = {f'params.{key}': value for key, value in params.as_dict().items()}
    return write_traces(tau, columns, path, metadata)


def _fig4_g2tau(settings: _Settings, out: Path, name: str):
    kappa = settings.omega / G2TAU_OMEGA[0]
    files = []
    for omega_ratio in G2TAU_OMEGA:
        params = ModelParams(omega0=50 * kappa, omega=omega_ratio * kappa, g=0.5 * kappa, U=-100 * kappa,
                             kappa=kappa)
        files.append(_g2_traces(settings, params, out / f'{name}_omega_{omega_ratio:g}kappa.csv'))
    return files, {'tau_grid_kappa_units': [0.0, settings.tau_max, settings.tau_num]}


def _fig5_g2tau_offsets(settings: _Settings, out: Path, name: str):
    kappa = settings.omega / 5
    files = []
    for offset in G2TAU_OFFSETS:
        params = ModelParams(omega0=50 * kappa, omega=5 * kappa, g=0.5 * kappa, U=-100 * kappa + offset * 5 * kappa,
                             kappa=kappa)
        files.append(_g2_traces(settings, params, out / f'{name}_U_plus_{offset:g}omega.csv'))
    return files, {'tau_grid_kappa_units': [0.0, settings.tau_max, settings.tau_num]}


def _spectrum_files(settings: _Settings, params: ModelParams, out: Path, stem: str):
    space = make_space(settings.n_max)
    spectrum = emission_spectrum(params, default_nu_grid(params, space), space)
    lines = assign_lines(dressed_states(params, space), spectrum, rel_height=settings.rel_height)
    metadata = {f'params.{key}': value for key, value in params.as_dict().items()}
    files = [write_spectrum(spectrum, out / f'{stem}.csv', metadata),
             write_lines(lines, out / f'{stem}_lines.csv', metadata)]
    return files, {files[0].name: {'params': params.as_dict(), 'nu_points': spectrum.nu_grid.size,
                                   'tau_window': spectrum.tau_window}}


def _fig6_spectrum(settings: _Settings, out: Path, name: str):
    return _spectrum_files(settings, _ratios(settings, omega0=10, g=0.1, U=-20, kappa=0.1), out, name)


def _fig7_spectrum(settings: _Settings, out: Path, name: str):
    files, details = _spectrum_files(settings, _ratios(settings, omega0=10, g=0.1, U=-22, kappa=0.1), out, name)
    closeup, closeup_details = _spectrum_files(settings, _ratios(settings, omega0=10, g=0.1, U=-22, kappa=0.05), out,
                                               f'{name}_kappa_0.05')
    details.update(closeup_details)
    return files + closeup, details


def _fig_spec_large_g(settings: _Settings, out: Path, name: str):
    files, details = [], {}
    for point in ('antibunching', 'cycle_lower'):
        params = at_special_point(_ratios(settings, omega0=10, g=1.0, U=-20, kappa=0.1), point)
        point_files, point_details = _spectrum_files(settings, params, out, f'{name}_{point}')
        files.extend(point_files)
        details.update(point_details)
    return files, details


def _fig_levels(settings: _Settings, out: Path, name: str):
    params = _ratios(settings, omega0=10, g=0.1, U=-20, kappa=0.2)
    dressed = dressed_states(params, make_space(settings.n_max))
    path = write_levels(dressed, out / f'{name}.csv', {f'params.{k}': v for k, v in params.as_dict().items()})
    return [path], {'named': dressed.named}


PRESETS: Dict[str, Callable] = {
    'fig1': _fig1,
    'fig2_p1p2': _fig2_p1p2,
    'fig4_g2tau': _fig4_g2tau,
    'fig5_g2tau_offsets': _fig5_g2tau_offsets,
    'fig6_spectrum': _fig6_spectrum,
    'fig7_spectrum': _fig7_spectrum,
    'fig8_large_g_sweep': _fig8_large_g_sweep,
    'fig9_saturation': _fig9_saturation,
    'fig_spec_large_g': _fig_spec_large_g,
    'fig_levels': _fig_levels,
}


def _finish(name: str, out: Path, files: List[Path], config: ConfigParser, details: Dict[str, object]) -> RunOutput:
    manifest = write_manifest(out, name, files, config=config, details=details)
    logger.info(f'RUN({name}) Wrote {len(files)} files and {manifest}.')
    return RunOutput(name=name, out_dir=out, files=tuple(files), manifest=manifest)


def run_figure(preset_name: str, config: ConfigParser, out_dir: Optional[str] = None,
               jobs: Optional[int] = None) -> RunOutput:
    """
    This function runs a figure preset. Preset parameters are fixed ratios to the configured omega; the numerical
    settings (n_max, cutoff tolerance, jobs, correlation grid, peak threshold) come from the configuration.

    Args:
        preset_name: One of PRESETS.
        config: The loaded configuration.
        out_dir: Overrides [NUMERICS] out_dir.
        jobs: Overrides [NUMERICS] jobs.

    Returns:
        RunOutput listing the CSV files and the manifest.

    Raises:
        ConfigError: For an unknown preset.
    """
    if preset_name not in PRESETS:
        raise ConfigError(f"Unknown preset '{preset_name}'. Available presets: {', '.join(PRESETS)}.")
    settings = _settings(config, jobs)
    out = _out_dir(config, preset_name, out_dir)
    logger.info(f'RUN({preset_name}) Running preset {preset_name} into {out}.')
    files, details = PRESETS[preset_name](settings, out, preset_name)
    return _finish(preset_name, out, files, config, details)


def sweep_run(config: ConfigParser, out_dir: Optional[str] = None, jobs: Optional[int] = None) -> RunOutput:
    settings = _settings(config, jobs)
    spec = sweep_spec_from_config(config)
    out = _out_dir(config, 'sweep', out_dir)
    result = run_sweep(spec, jobs=settings.jobs, run_name='sweep')
    path = write_sweep(result, out / 'sweep.csv')
    return _finish('sweep', out, [path], config, {path.name: _sweep_details(result)})


def spectrum_run(config: ConfigParser, out_dir: Optional[str] = None) -> RunOutput:
    """Spectrum and line table of the configured parameters; [SPECTRUM] nu_min/nu_max select a uniform grid."""
    settings = _settings(config)
    params = model_params_from_config(config)
    space = make_space(settings.n_max)
    nu_min, nu_max = get_float(config, 'SPECTRUM', 'nu_min'), get_float(config, 'SPECTRUM', 'nu_max')
    if (nu_min is None) != (nu_max is None):
        raise ConfigError("[SPECTRUM] set both nu_min and nu_max, or neither.")
    if nu_min is not None:
        step = get_float(config, 'SPECTRUM', 'nu_step') * settings.omega
        nu_grid = np.arange(nu_min * settings.omega, nu_max * settings.omega + step / 2, step)
    else:
        nu_grid = default_nu_grid(params, space)
    spectrum = emission_spectrum(params, nu_grid, space)
    lines = assign_lines(dressed_states(params, space), spectrum, rel_height=settings.rel_height)
    out = _out_dir(config, 'spectrum', out_dir)
    metadata = {f'params.{key}': value for key, value in params.as_dict().items()}
    files = [write_spectrum(spectrum, out / 'spectrum.csv', metadata),
             write_lines(lines, out / 'spectrum_lines.csv', metadata)]
    return _finish('spectrum', out, files, config, {'tau_window': spectrum.tau_window})


def g2tau_run(config: ConfigParser, out_dir: Optional[str] = None) -> RunOutput:
    settings = _settings(config)
    params = model_params_from_config(config)
    out = _out_dir(config, 'g2tau', out_dir)
    path = _g2_traces(settings, params, out / 'g2tau.csv')
    return _finish('g2tau', out, [path], config, {'tau_grid_kappa_units': [0.0, settings.tau_max, settings.tau_num]})


def trajectory_run(config: ConfigParser, out_dir: Optional[str] = None, jobs: Optional[int] = None) -> RunOutput:
    """Trajectories from |0,e> (or |0,g> when qubit = g is configured); writes jump times and the estimates."""
    settings = _settings(config, jobs)
    params = model_params_from_config(config)
    trajectory_config = trajectory_config_from_config(config)
    space = make_space(settings.n_max)
    qubit = GROUND if config.get('TRAJECTORY', 'initial_qubit', fallback='e').strip() == 'g' else EXCITED
    records = run_ensemble(params, space, trajectory_config, basis_state(space, 0, qubit), jobs=settings.jobs)
    estimate = estimate_observables(records, params, trajectory_config)
    out = _out_dir(config, 'trajectory', out_dir)
    create_dir_if_not_exists(out)
    jumps = write_jump_times(records, out / 'jump_times.csv')
    rates = [rate for rate in (alternation_rate(record) for record in records) if rate is not None]
    rows = [['photon_number', estimate.photon_number, estimate.photon_number_se],
            ['flux', estimate.flux, estimate.flux_se],
            ['inversion', estimate.inversion, estimate.inversion_se],
            ['p1', estimate.p1, estimate.p1_se],
            ['p2', estimate.p2, estimate.p2_se]]
    rows += [[f'g2_zero_bin_{width:g}', value, error] for width, (value, error) in estimate.g2_by_bin.items()]
    rows.append(['alternation_rate', float(np.mean(rates)) if rates else None, None])
    estimates = write_table(out / 'estimates.csv', ['quantity', 'value', 'standard_error'], rows,
                            {'n_jumps': estimate.n_jumps, 'elapsed': estimate.elapsed,
                             'insufficient': estimate.insufficient})
    return _finish('trajectory', out, [jumps, estimates], config, {'burn_in': trajectory_config.burn_in(params)})
