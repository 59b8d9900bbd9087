"""
Tabular output and the run manifest.

CSV files start with a header line, followed by '#' metadata lines and the data rows; floats are written with 17
significant digits so tables round-trip exactly. The manifest is the only place a timestamp is written.
"""
import csv
import json
import platform

from datetime import datetime, timezone

from pathlib import Path

from configparser import ConfigParser

from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import scipy

from nlrabi.model import bare_energy
from nlrabi.project_metadata import NAME, VERSION
from nlrabi.sweep import SweepResult
from nlrabi.spectral import CorrelationTrace, DressedStateSet, LineAssignment, Spectrum
from nlrabi.utils import create_dir_if_not_exists, sha256_of_file

MANIFEST_NAME = 'manifest.json'


def format_value(value) -> str:
    """Cell text: '' for None, 17 significant digits for reals, str() otherwise."""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def write_table(path: Union[Path, str], header: Sequence[str], rows: Iterable[Sequence],
                metadata: Optional[Dict[str, object]] = None) -> Path:
    """
    This function writes a CSV table.

    Args:
        path: Output file; its directory is created when missing.
        header: Column names.
        rows: Row values, formatted with format_value().
        metadata: Written as '# key: value' lines between the header and the data.

    Returns:
        The path written.
    """
    path = Path(path)
    create_dir_if_not_exists(path.parent)
    with open(path, 'w', newline='') as csv_file:
        writer = csv.writer(csv_file, lineterminator='\n')
        writer.writerow(header)
        for key, value in (metadata or {}).items():
            csv_file.write(f'# {key}: {format_value(value)}\n')
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"Row has {len(row)} cells, header has {len(header)}.")
            writer.writerow([format_value(value) for value in row])
    return path


def read_table(path: Union[Path, str]) -> Dict[str, object]:
    """
    This function reads a table written by write_table().

    Returns:
        {'header': [...], 'metadata': {...}, 'rows': [[...], ...]} with cells left as strings.
    """
    with open(path, newline='') as csv_file:
        lines = csv_file.read().splitlines()
    header = next(csv.reader(lines[:1]))
    metadata = {}
    data = []
    for line in lines[1:]:
        if line.startswith('#'):
            key, _, value = line[1:].partition(':')
            metadata[key.strip()] = value.strip()
        elif line:
            data.append(line)
    return {'header': header, 'metadata': metadata, 'rows': list(csv.reader(data))}


def sweep_table(result: SweepResult) -> Dict[str, object]:
    """
    This function lays out a SweepResult as a table: the axis value, every '<engine>.<output>' column, standard
    errors of statistical engines, n_max_used, the steady-state residual and per-engine errors.
    """
    spec = result.spec
    value_keys = [f'{engine}.{name}' for engine in spec.engines for name in spec.outputs]
    error_keys = [f'trajectory.{name}' for name in spec.outputs] if 'trajectory' in spec.engines else []
    header = [spec.axis] + value_keys + [f'{key}_se' for key in error_keys] + ['n_max_used', 'residual', 'errors']
    rows = []
    for row in result.rows:
        rows.append([row.axis_value]
                    + [row.values.get(key) for key in value_keys]
                    + [row.standard_errors.get(key) for key in error_keys]
                    + [row.n_max_used, row.residual,
                       '; '.join(f'{engine}: {message}' for engine, message in sorted(row.errors.items()))])
    metadata = {'axis': spec.axis, 'engines': ' '.join(spec.engines)}
    metadata.update({f'base.{key}': value for key, value in spec.base.as_dict().items()})
    return {'header': header, 'rows': rows, 'metadata': metadata}


def write_sweep(result: SweepResult, path: Union[Path, str]) -> Path:
    table = sweep_table(result)
    return write_table(path, table['header'], table['rows'], table['metadata'])


def write_trace(trace: CorrelationTrace, path: Union[Path, str], name: str = 'g2',
                metadata: Optional[Dict[str, object]] = None) -> Path:
    """Write tau and the trace values; complex traces get real and imaginary columns."""
    if np.iscomplexobj(trace.values):
        header = ['tau', f'{name}_real', f'{name}_imag']
        rows = zip(trace.tau_grid, trace.values.real, trace.values.imag)
    else:
        header = ['tau', name]
        rows = zip(trace.tau_grid, trace.values)
    return write_table(path, header, rows, metadata)


def write_traces(tau_grid: np.ndarray, columns: Dict[str, np.ndarray], path: Union[Path, str],
                 metadata: Optional[Dict[str, object]] = None) -> Path:
    header = ['tau'] + list(columns)
    rows = zip(tau_grid, *columns.values())
    return write_table(path, header, rows, metadata)


def write_spectrum(spectrum: Spectrum, path: Union[Path, str], metadata: Optional[Dict[str, object]] = None) -> Path:
    metadata = dict(metadata or {})
    metadata.update(tau_window=spectrum.tau_window, photon_number=spectrum.photon_number,
                    sum_rule=spectrum.sum_rule())
    if spectrum.lorentzian is not None:
        return write_table(path, ['nu', 'S', 'S_eigenmodes'], zip(spectrum.nu_grid, spectrum.s_values,
                                                                  spectrum.lorentzian), metadata)
    return write_table(path, ['nu', 'S'], zip(spectrum.nu_grid, spectrum.s_values), metadata)


def write_lines(lines: List[LineAssignment], path: Union[Path, str],
                metadata: Optional[Dict[str, object]] = None) -> Path:
    header = ['nu', 'height', 'fwhm', 'initial', 'final', 'transition_frequency', 'amplitude', 'matched']
    rows = [[line.nu, line.height, line.fwhm, line.initial, line.final, line.transition_frequency, line.amplitude,
             line.matched] for line in lines]
    return write_table(path, header, rows, metadata)


def write_levels(dressed: DressedStateSet, path: Union[Path, str],
                 metadata: Optional[Dict[str, object]] = None) -> Path:
    """Dressed energies with their labels and names, next to the bare energy of the dominant component."""
    header = ['index', 'energy', 'label', 'name', 'dominant_bare_energy']
    rows = []
    for index, energy in enumerate(dressed.energies):
        n, qubit = divmod(int(np.argmax(np.abs(dressed.states[index].amplitudes))), 2)
        name = dressed.name_of(index)
        rows.append([index, energy, dressed.labels[index], name if name.startswith('psi') else None,
                     bare_energy(dressed.params, n, qubit)])
    return write_table(path, header, rows, metadata)


def config_as_dict(config: ConfigParser) -> Dict[str, Dict[str, str]]:
    return {section: dict(config[section]) for section in config.sections()}


def write_manifest(out_dir: Union[Path, str], run_name: str, files: Sequence[Path],
                   config: Optional[ConfigParser] = None, details: Optional[Dict[str, object]] = None) -> Path:
    """
    This function writes out_dir/manifest.json listing every output file with its SHA-256 digest.

    Args:
        out_dir: Output directory.
        run_name: Preset or verb that produced the files.
        files: Output files.
        config: The run configuration.
        details: Grids, parameters and convergence metadata.

    Returns:
        The manifest path.
    """
    out_dir = Path(out_dir)
    create_dir_if_not_exists(out_dir)
    manifest = {
        'run': run_name,
        'created_utc': datetime.now(timezone.utc).isoformat(),
        'versions': {NAME: VERSION, 'numpy': np.__version__, 'scipy': scipy.__version__,
                     'python': platform.python_version()},
        'config': config_as_dict(config) if config is not None else {},
        'details': details or {},
        'files': [{'path': Path(f).name, 'sha256': sha256_of_file(f)} for f in files],
    }
    path = out_dir / MANIFEST_NAME
    with open(path, 'w') as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=_json_default)
    return path


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"Cannot serialize {type(value).__name__}.")
