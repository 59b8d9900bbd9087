import numpy as np

from unittest import TestCase

from nlrabi.errors import ConfigError
from nlrabi.output import read_table
from nlrabi.presets import PRESETS, run_figure, sweep_spec_from_config, trajectory_config_from_config
from nlrabi.configurations.config import get_config, apply_overrides

from tests.test_utils import common_test_setup, common_test_teardown


class TestPresets(TestCase):

    def setUp(self) -> None:
        common_test_setup()

    def tearDown(self) -> None:
        common_test_teardown()

    def test_unknown_preset_lists_names(self):
        with self.assertRaises(ConfigError) as context:
            run_figure('fig3', get_config(), out_dir='tests/data/out')
        for name in PRESETS:
            assert name in str(context.exception)

    def test_sweep_spec_units(self):
        config = apply_overrides(get_config(), {
            'MODEL': {'omega': '2.0'},
            'SWEEP': {'axis': 'g', 'grid': '0.05, 0.1, 0.2', 'engines': 'analytic'},
        })
        spec = sweep_spec_from_config(config)
        assert spec.axis == 'g'
        assert np.allclose(spec.grid, [0.1, 0.2, 0.4])
        assert spec.base.omega0 == 20.0
        assert spec.engines == ('analytic',)
        assert spec.trajectory is None

    def test_sweep_spec_linear_grid(self):
        config = apply_overrides(get_config(), {'SWEEP': {'start': '-22', 'stop': '-18', 'num': '5'}})
        assert np.allclose(sweep_spec_from_config(config).grid, [-22, -21, -20, -19, -18])

    def test_sweep_spec_errors(self):
        with self.assertRaises(ConfigError):
            sweep_spec_from_config(apply_overrides(get_config(), {'SWEEP': {'axis': 'theta'}}))
        with self.assertRaises(ConfigError):
            sweep_spec_from_config(apply_overrides(get_config(), {'SWEEP': {'grid': '1, 1'}}))
        with self.assertRaises(ConfigError):
            sweep_spec_from_config(apply_overrides(get_config(), {'SWEEP': {'engines': 'master, oracle'}}))

    def test_trajectory_config_units(self):
        config = apply_overrides(get_config(), {'MODEL': {'omega': '2.0'},
                                                'TRAJECTORY': {'t_total': '1000', 't_burn': '100'}})
        trajectory = trajectory_config_from_config(config)
        assert trajectory.t_total == 500.0
        assert trajectory.t_burn == 50.0
        assert trajectory.seed == 1234
        assert trajectory.bin_widths == (0.025, 0.05, 0.1)

    def test_levels_preset(self):
        config = apply_overrides(get_config(), {'NUMERICS': {'n_max': '3'}})
        output = run_figure('fig_levels', config, out_dir='tests/data/out')
        assert output.out_dir.as_posix() == 'tests/data/out/fig_levels'
        assert output.manifest.exists()
        table = read_table(output.files[0])
        assert table['metadata']['params.U'] == '-20'
