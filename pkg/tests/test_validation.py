import json

from unittest import TestCase

from nlrabi.errors import ConfigError
from nlrabi.validation import CHECKS, validate
from nlrabi.configurations.config import get_config, apply_overrides

from tests.test_utils import common_test_setup, common_test_teardown

CHEAP_CHECKS = ['liouvillian_properties', 'steady_state_properties', 'manifold_closure', 'g2tau_consistency']


def _config(n_max: int = 6, **model):
    config = apply_overrides(get_config(), {'NUMERICS': {'n_max': n_max}})
    return apply_overrides(config, {'MODEL': model})


class TestValidation(TestCase):

    def setUp(self) -> None:
        common_test_setup()

    def tearDown(self) -> None:
        common_test_teardown()

    def test_invariant_checks_pass(self):
        report = validate(_config(), CHEAP_CHECKS)
        assert [check.name for check in report.checks] == CHEAP_CHECKS
        assert report.passed, report.as_dict()
        assert report.n_max == 6
        assert report.params['U'] == -20.0

    def test_unknown_check(self):
        with self.assertRaises(ConfigError):
            validate(_config(), ['liouvillian_properties', 'flux_capacitor'])

    def test_failures_are_reported(self):
        report = validate(_config(n_max=2), ['cutoff_convergence'])
        assert not report.passed
        assert report.failed() == ['cutoff_convergence']

    def test_exceptions_become_failures(self):
        report = validate(_config(g='0'), ['steady_state_properties', 'manifold_closure'])
        assert report.failed() == ['steady_state_properties', 'manifold_closure']
        assert 'DegenerateSteadyStateError' in report.checks[0].detail
        assert 'UndefinedObservableError' in report.checks[1].detail

    def test_report_json(self):
        report = validate(_config(), ['manifold_closure'])
        path = report.write('tests/data/validate/report.json')
        with open(path) as f:
            written = json.load(f)
        assert written['passed'] is True
        assert written['checks'][0]['name'] == 'manifold_closure'
        assert set(written['checks'][0]) == {'name', 'passed', 'detail', 'seconds'}

    def test_analytic_agreement_covers_every_ratio(self):
        report = validate(_config(n_max=4), ['analytic_agreement'])
        detail = report.checks[0].detail
        for ratio in ('w0/w=2:', 'w0/w=5:', 'w0/w=10:'):
            assert ratio in detail, f"{ratio} missing from '{detail}'."
        assert 'Error' not in detail

    def test_check_names(self):
        assert len(CHECKS) == 16
        assert 'trajectory_determinism' in CHECKS
