import os

import numpy as np

from unittest import TestCase

from numpy.random import Generator, PCG64, SeedSequence

from scipy import stats

from nlrabi.errors import InsufficientStatisticsError
from nlrabi.hilbert import StateVector, basis_state, make_space, EXCITED, GROUND
from nlrabi.model import liouvillian
from nlrabi.output import read_table
from nlrabi.solvers import manifold_populations, observables, propagate, steady_state
from nlrabi.trajectory import (TrajectoryConfig, alternation_rate, estimate_observables, manifold_classify,
                               run_ensemble, run_trajectory, write_jump_times, MIXED, _pair_count)

from tests.test_utils import SMALL_PARAMS, common_test_setup, common_test_teardown

# Brighter than SMALL_PARAMS so a short trajectory sees many emissions.
BRIGHT_PARAMS = SMALL_PARAMS.replace(g=0.3)


class TestClassification(TestCase):

    def setUp(self) -> None:
        self.space = make_space(3)

    def test_basis_states(self):
        assert manifold_classify(basis_state(self.space, 0, EXCITED)) == 1
        assert manifold_classify(basis_state(self.space, 1, GROUND)) == 1
        assert manifold_classify(basis_state(self.space, 0, GROUND)) == 2
        assert manifold_classify(basis_state(self.space, 2, GROUND)) == 2

    def test_superposition_is_mixed(self):
        amplitudes = basis_state(self.space, 0, EXCITED).vector() + basis_state(self.space, 0, GROUND).vector()
        assert manifold_classify(StateVector(self.space, amplitudes)) == MIXED


class TestConfig(TestCase):

    def test_validation(self):
        with self.assertRaises(ValueError):
            TrajectoryConfig(seed=1, t_total=10.0, t_burn=10.0)
        with self.assertRaises(ValueError):
            TrajectoryConfig(seed=1, t_total=-1.0)
        with self.assertRaises(ValueError):
            TrajectoryConfig(seed=1, t_total=10.0, n_batches=1)
        with self.assertRaises(ValueError):
            TrajectoryConfig(seed=1, t_total=10.0, bin_widths=(0.0,))

    def test_automatic_burn_in_too_long(self):
        with self.assertRaises(ValueError):
            TrajectoryConfig(seed=1, t_total=1.0).burn_in(SMALL_PARAMS)

    def test_explicit_burn_in(self):
        assert TrajectoryConfig(seed=1, t_total=10.0, t_burn=2.0).burn_in(SMALL_PARAMS) == 2.0


class TestFreeDecay(TestCase):
    """Without coupling |1,g> emits exactly once, after an exponential waiting time of rate 2 kappa."""

    def setUp(self) -> None:
        self.params = SMALL_PARAMS.replace(g=0.0)
        self.space = make_space(2)
        self.initial = basis_state(self.space, 1, GROUND)

    def test_jump_time_matches_drawn_variate(self):
        config = TrajectoryConfig(seed=11, t_total=200.0, t_burn=0.0)
        record = run_trajectory(self.params, self.space, config, self.initial, trajectory_id=4)
        variate = Generator(PCG64(SeedSequence(11, spawn_key=(4,)))).random()
        expected = -np.log(variate) / (2 * self.params.kappa)
        assert record.n_jumps == 1
        assert abs(record.jump_times[0] - expected) < 1e-8 * expected
        assert record.manifold_labels == (1, 2)

    def test_waiting_times_are_exponential(self):
        config = TrajectoryConfig(seed=2024, t_total=200.0, t_burn=0.0, n_trajectories=400, dt_sample=50.0)
        records = run_ensemble(self.params, self.space, config, self.initial)
        waits = np.array([record.jump_times[0] for record in records])
        result = stats.kstest(waits, stats.expon(scale=1 / (2 * self.params.kappa)).cdf)
        assert result.pvalue > 1e-3, f"KS p-value {result.pvalue:.2e} rejects exponential waiting times."

    def test_unnormalized_initial_state(self):
        config = TrajectoryConfig(seed=1, t_total=10.0, t_burn=0.0)
        with self.assertRaises(ValueError):
            run_trajectory(self.params, self.space, config, StateVector(self.space, 2 * self.initial.vector()))


class TestWeakExcitation(TestCase):

    @classmethod
    def setUpClass(cls) -> None:
        cls.space = make_space(3)
        cls.config = TrajectoryConfig(seed=5, t_total=40000.0, dt_sample=2.0)
        cls.record = run_trajectory(BRIGHT_PARAMS, cls.space, cls.config, basis_state(cls.space, 0, EXCITED))

    def test_emissions_alternate_between_manifolds(self):
        assert self.record.n_jumps > 100, f"Only {self.record.n_jumps} emissions."
        assert alternation_rate(self.record) == 1.0

    def test_deterministic(self):
        config = TrajectoryConfig(seed=5, t_total=2000.0, t_burn=0.0)
        initial = basis_state(self.space, 0, EXCITED)
        first = run_trajectory(BRIGHT_PARAMS, self.space, config, initial)
        second = run_trajectory(BRIGHT_PARAMS, self.space, config, initial)
        other = run_trajectory(BRIGHT_PARAMS, self.space, config, initial, trajectory_id=1)
        assert np.array_equal(first.jump_times, second.jump_times)
        assert not np.array_equal(first.jump_times, other.jump_times)

    def test_estimates_agree_with_master_equation(self):
        estimate = estimate_observables([self.record], BRIGHT_PARAMS, self.config)
        rho = steady_state(liouvillian(BRIGHT_PARAMS, self.space)).rho
        expected = observables(rho)
        expected_p1, _ = manifold_populations(rho)
        assert not estimate.insufficient
        tolerance = max(4 * estimate.photon_number_se, 0.15 * expected.photon_number)
        assert abs(estimate.photon_number - expected.photon_number) < tolerance, \
            f"<a+a> {estimate.photon_number} +- {estimate.photon_number_se} vs {expected.photon_number}"
        assert abs(estimate.p1 - expected_p1) < max(4 * estimate.p1_se, 0.1)
        assert np.isclose(estimate.p1 + estimate.p2, 1.0)
        assert abs(estimate.inversion - expected.inversion) < 0.2
        assert set(estimate.g2_by_bin) == set(self.config.bin_widths)

    def test_samples_cover_the_run(self):
        assert self.record.sample_times[0] == 0.0
        assert self.record.sample_times[-1] <= self.config.t_total
        assert np.all(np.isfinite(self.record.photon_number_samples))
        assert set(np.unique(self.record.sample_labels)) <= {1, 2}

    def test_no_records(self):
        with self.assertRaises(InsufficientStatisticsError):
            estimate_observables([], BRIGHT_PARAMS, self.config)


class TestUnraveling(TestCase):

    def test_ensemble_matches_master_equation(self):
        space = make_space(5)
        initial = basis_state(space, 1, GROUND)
        config = TrajectoryConfig(seed=11, t_total=10.0, t_burn=0.0, dt_sample=1.0, n_trajectories=1000)
        records = run_ensemble(BRIGHT_PARAMS, space, config, initial)
        times = records[0].sample_times
        states = propagate(liouvillian(BRIGHT_PARAMS, space), initial.projector(), times)
        reference = [observables(rho) for rho in states]
        for name, samples in (('photon_number', 'photon_number_samples'), ('inversion', 'inversion_samples')):
            stacked = np.stack([getattr(record, samples) for record in records])
            mean = stacked.mean(axis=0)
            se = stacked.std(axis=0, ddof=1) / np.sqrt(len(records))
            expected = np.array([getattr(values, name) for values in reference])
            error = np.abs(mean - expected)
            assert np.all(error <= 5 * se + 1e-5), \
                f"{name}: worst deviation {np.max(error / (se + 1e-12)):.2f} standard errors"


class TestEstimatorHelpers(TestCase):

    def test_pair_count(self):
        times = np.array([0.0, 0.01, 0.03, 1.0])
        assert _pair_count(times, 0.02) == 2
        assert _pair_count(times, 0.03) == 3
        assert _pair_count(times[:1], 1.0) == 0


class TestJumpTimesFile(TestCase):

    def setUp(self) -> None:
        common_test_setup()

    def tearDown(self) -> None:
        common_test_teardown()

    def test_write_jump_times(self):
        space = make_space(2)
        config = TrajectoryConfig(seed=3, t_total=200.0, t_burn=0.0, n_trajectories=3)
        records = run_ensemble(SMALL_PARAMS.replace(g=0.0), space, config, basis_state(space, 1, GROUND))
        path = write_jump_times(records, os.path.join('tests/data', 'jumps.csv'))
        table = read_table(path)
        assert table['header'] == ['trajectory_id', 'jump_time']
        assert [row[0] for row in table['rows']] == ['0', '1', '2']
        assert float(table['rows'][1][1]) == records[1].jump_times[0]
