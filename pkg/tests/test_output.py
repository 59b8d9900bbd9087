import json
import hashlib

import numpy as np

from unittest import TestCase

from nlrabi.configurations.config import get_config
from nlrabi.hilbert import make_space
from nlrabi.output import (format_value, read_table, write_levels, write_manifest, write_sweep, write_table,
                           write_trace)
from nlrabi.spectral import CorrelationTrace, dressed_states
from nlrabi.sweep import SweepSpec, run_sweep

from tests.test_utils import SMALL_PARAMS, common_test_setup, common_test_teardown


class TestFormatting(TestCase):

    def test_format_value(self):
        assert format_value(None) == ''
        assert format_value(True) == 'true'
        assert format_value(np.int64(3)) == '3'
        assert float(format_value(0.1)) == 0.1
        assert format_value(1 / 3) == '0.33333333333333331'
        assert format_value('psi1+') == 'psi1+'


class TestTables(TestCase):

    def setUp(self) -> None:
        common_test_setup()

    def tearDown(self) -> None:
        common_test_teardown()

    def test_table_layout(self):
        path = write_table('tests/data/out/table.csv', ['x', 'y'], [[1.0, None], [2.5, 0.5]],
                           {'axis': 'U', 'kappa': 0.2})
        with open(path) as f:
            lines = f.read().splitlines()
        assert lines[0] == 'x,y'
        assert lines[1:3] == ['# axis: U', '# kappa: 0.20000000000000001']
        table = read_table(path)
        assert table['metadata'] == {'axis': 'U', 'kappa': '0.20000000000000001'}
        assert table['rows'] == [['1', ''], ['2.5', '0.5']]

    def test_row_length_checked(self):
        with self.assertRaises(ValueError):
            write_table('tests/data/bad.csv', ['x', 'y'], [[1.0]])

    def test_identical_runs_write_identical_bytes(self):
        spec = SweepSpec(base=SMALL_PARAMS, axis='U', grid=[-10.5, -10.0], n_max=3, cutoff_tol=None)
        first = write_sweep(run_sweep(spec), 'tests/data/first.csv')
        second = write_sweep(run_sweep(spec), 'tests/data/second.csv')
        with open(first, 'rb') as a, open(second, 'rb') as b:
            assert a.read() == b.read()
        table = read_table(first)
        assert table['header'][:3] == ['U', 'master.photon_number', 'master.inversion']
        assert table['header'][-3:] == ['n_max_used', 'residual', 'errors']
        assert table['metadata']['axis'] == 'U'

    def test_complex_trace(self):
        trace = CorrelationTrace(np.array([0.0, 1.0]), np.array([1.0 + 0.5j, 0.25 - 0.5j]))
        table = read_table(write_trace(trace, 'tests/data/c.csv', name='C'))
        assert table['header'] == ['tau', 'C_real', 'C_imag']
        assert table['rows'][1] == ['1', '0.25', '-0.5']

    def test_levels(self):
        dressed = dressed_states(SMALL_PARAMS, make_space(3))
        table = read_table(write_levels(dressed, 'tests/data/levels.csv'))
        assert len(table['rows']) == make_space(3).dim
        names = {row[3] for row in table['rows']} - {''}
        assert names == {'psi1-', 'psi1+', 'psi2-', 'psi2+'}

    def test_manifest(self):
        path = write_table('tests/data/run/a.csv', ['x'], [[1.0]])
        manifest_path = write_manifest('tests/data/run', 'demo', [path], config=get_config(),
                                       details={'grid': np.array([1.0, 2.0]), 'n_max': np.int64(4)})
        with open(manifest_path) as f:
            manifest = json.load(f)
        with open(path, 'rb') as f:
            digest = hashlib.sha256(f.read()).hexdigest()
        assert manifest['run'] == 'demo'
        assert manifest['files'] == [{'path': 'a.csv', 'sha256': digest}]
        assert manifest['details'] == {'grid': [1.0, 2.0], 'n_max': 4}
        assert manifest['config']['MODEL']['U'] == '-20'
        assert set(manifest['versions']) == {'nlrabi', 'numpy', 'scipy', 'python'}
