import numpy as np

from unittest import TestCase

from nlrabi.errors import SpectrumError
from nlrabi.hilbert import make_space, EXCITED, GROUND
from nlrabi.model import at_special_point
from nlrabi.solvers import observables, steady_state
from nlrabi.model import liouvillian
from nlrabi.spectral import (Spectrum, assign_lines, default_nu_grid, dressed_states, emission_spectrum,
                             field_correlation, find_spectral_peaks, g2_tau)

from tests.test_utils import DEFAULT_PARAMS, SMALL_PARAMS


def _lorentzians(nu, centres, heights, half_width):
    return sum(h / (1 + ((nu - c) / half_width) ** 2) for c, h in zip(centres, heights))


class TestCorrelations(TestCase):

    def setUp(self) -> None:
        self.space = make_space(4)

    def test_g2_tau_starts_at_static_value(self):
        static = observables(steady_state(liouvillian(SMALL_PARAMS, self.space)).rho).g2_zero
        trace = g2_tau(SMALL_PARAMS, [0.0, 1.0, 5.0], self.space)
        assert abs(trace.values[0] - static) / static < 1e-10

    def test_g2_tau_without_zero_delay(self):
        full = g2_tau(SMALL_PARAMS, [0.0, 1.0, 5.0], self.space)
        partial = g2_tau(SMALL_PARAMS, [1.0, 5.0], self.space)
        assert partial.tau_grid.tolist() == [1.0, 5.0]
        assert np.allclose(partial.values, full.values[1:], rtol=1e-7)

    def test_invalid_delay_grid(self):
        with self.assertRaises(ValueError):
            g2_tau(SMALL_PARAMS, [-1.0, 1.0], self.space)
        with self.assertRaises(ValueError):
            g2_tau(SMALL_PARAMS, [2.0, 1.0], self.space)

    def test_field_correlation(self):
        tau = np.linspace(0.0, 200.0, 5)
        trace = field_correlation(SMALL_PARAMS, tau, self.space)
        photons = observables(steady_state(liouvillian(SMALL_PARAMS, self.space)).rho).photon_number
        assert np.iscomplexobj(trace.values)
        assert np.isclose(trace.values[0].real, photons, rtol=1e-10) and abs(trace.values[0].imag) < 1e-14
        assert abs(trace.values[-1]) < abs(trace.values[0])


class TestEmissionSpectrum(TestCase):

    @classmethod
    def setUpClass(cls) -> None:
        cls.space = make_space(3)
        cls.nu = np.linspace(-12.0, 12.0, 2401)
        cls.spectrum = emission_spectrum(SMALL_PARAMS, cls.nu, cls.space)

    def test_shape_and_metadata(self):
        assert self.spectrum.s_values.shape == self.nu.shape
        assert self.spectrum.tau_window > 0
        assert self.spectrum.lorentzian is not None, "Small spaces use the eigenmode expansion."
        photons = observables(steady_state(liouvillian(SMALL_PARAMS, self.space)).rho).photon_number
        assert np.isclose(self.spectrum.photon_number, photons)

    def test_agrees_with_eigenmode_sum_on_cavity_line(self):
        reference = self.spectrum.lorentzian
        # |1,g> -> |0,g> emission near w0 + w, a line of width ~kappa.
        window = np.nonzero(np.abs(self.nu - (SMALL_PARAMS.omega0 + SMALL_PARAMS.omega)) < 0.5)[0]
        top = int(window[np.argmax(reference[window])])
        error = abs(self.spectrum.s_values[top] - reference[top]) / reference[top]
        assert error < 0.05, f"FFT spectrum and Lorentzian sum differ by {error:.3f} at the cavity line."

    def test_lines_are_assigned(self):
        lines = assign_lines(dressed_states(SMALL_PARAMS, self.space), self.spectrum)
        assert lines, "Expected at least one detected line."
        strongest = max(lines, key=lambda line: line.height)
        assert strongest.matched, f"Strongest line at {strongest.nu} has no dressed-state transition."
        assert strongest.initial is not None and strongest.final is not None

    def test_short_window_rejected(self):
        with self.assertRaises(SpectrumError):
            emission_spectrum(SMALL_PARAMS, self.nu, self.space, tau_max=1.0)

    def test_invalid_grid(self):
        with self.assertRaises(ValueError):
            emission_spectrum(SMALL_PARAMS, [0.0, 1.0], self.space)

    def test_default_grid_covers_transitions(self):
        grid = default_nu_grid(SMALL_PARAMS, self.space)
        assert np.all(np.diff(grid) > 0)
        # Emission |1,g> -> |0,g> sits near w0 + w at U = -2 w0.
        target = SMALL_PARAMS.omega0 + SMALL_PARAMS.omega
        assert np.min(np.abs(grid - target)) < 1e-3
        assert grid[0] < -target and grid[-1] > target


class TestPeaks(TestCase):

    def setUp(self) -> None:
        self.nu = np.linspace(-5.0, 5.0, 20001)

    def test_positions_and_widths(self):
        values = _lorentzians(self.nu, [-1.0, 2.0], [1.0, 0.5], 0.05)
        peaks = find_spectral_peaks(Spectrum(self.nu, values))
        assert [round(p.nu, 3) for p in peaks] == [-1.0, 2.0]
        for peak in peaks:
            assert abs(peak.fwhm - 0.1) < 1e-3, f"FWHM {peak.fwhm} should be 0.1."
        assert np.isclose(peaks[1].height, 0.5, rtol=1e-3)

    def test_threshold(self):
        values = _lorentzians(self.nu, [-1.0, 2.0], [1.0, 0.005], 0.05)
        assert len(find_spectral_peaks(Spectrum(self.nu, values))) == 1
        assert len(find_spectral_peaks(Spectrum(self.nu, values), rel_height=1e-3)) == 2

    def test_flat_spectrum_has_no_peaks(self):
        assert find_spectral_peaks(Spectrum(self.nu, np.zeros_like(self.nu))) == []

    def test_sum_rule_of_lorentzian(self):
        nu = np.linspace(-200.0, 200.0, 400001)
        half_width = 0.1
        values = 2 * half_width / (half_width ** 2 + nu ** 2)
        # A unit-weight line integrates to 2 pi.
        assert abs(Spectrum(nu, values).sum_rule() - 1.0) < 1e-3


class TestDressedStates(TestCase):

    def setUp(self) -> None:
        self.space = make_space(4)

    def test_named_states_at_antibunching_point(self):
        dressed = dressed_states(SMALL_PARAMS, self.space)
        assert np.all(np.diff(dressed.energies) >= 0)
        assert dressed.labels[dressed.named['psi1-']] == '|0,e>'
        assert dressed.labels[dressed.named['psi1+']] == '|1,g>'
        assert dressed.labels[dressed.named['psi2-']] == '|0,g>'
        assert abs(dressed.energies[dressed.named['psi2-']] + SMALL_PARAMS.omega0 / 2) < 0.05
        assert dressed.named_amplitude('psi2-', 'psi1+') > 0.9, "|1,g> should emit into |0,g>."

    def test_phase_convention(self):
        dressed = dressed_states(SMALL_PARAMS, self.space)
        for state in dressed.states:
            amplitudes = state.amplitudes
            largest = amplitudes[np.argmax(np.abs(amplitudes))]
            assert abs(largest.imag) < 1e-12 and largest.real > 0

    def test_degenerate_states_unlabeled(self):
        params = at_special_point(SMALL_PARAMS.replace(g=0.0), 'bunching_ground')
        dressed = dressed_states(params, self.space)
        assert dressed.degenerate_pairs, "All |n,g> are degenerate at U = 2 w with g = 0."
        for first, second in dressed.degenerate_pairs:
            assert dressed.labels[first] is None and dressed.labels[second] is None

    def test_cycle_degeneracy_splits_by_coupling(self):
        params = at_special_point(SMALL_PARAMS, 'cycle_lower')
        dressed = dressed_states(params, self.space)
        splitting = dressed.energies[dressed.named['psi2+']] - dressed.energies[dressed.named['psi2-']]
        assert abs(splitting - 2 * params.g) < 0.1 * params.g, f"|0,g>, |1,e> splitting {splitting}, expected 2 g."

    def test_admixture_grows_linearly_with_coupling(self):
        space = make_space(4)
        rows = [space.index(0, EXCITED), space.index(1, GROUND)]
        couplings = DEFAULT_PARAMS.omega * np.logspace(-2, -1, 5)
        for name in ('psi1-', 'psi1+'):
            admixtures = []
            for g in couplings:
                dressed = dressed_states(DEFAULT_PARAMS.replace(g=g), space)
                weights = np.abs(dressed.states[dressed.named[name]].amplitudes[rows])
                admixtures.append(np.min(weights))
            slope = np.polyfit(np.log(couplings), np.log(admixtures), 1)[0]
            assert abs(slope - 1) < 0.05, f"{name} admixture scales as g^{slope:.3f}."


class TestAntibunchingSpectrum(TestCase):
    """Emission spectrum at U = -2 w0, w0 = 10 w, kappa = 0.1 w."""

    @classmethod
    def setUpClass(cls) -> None:
        cls.params = DEFAULT_PARAMS.replace(kappa=0.1)
        cls.space = make_space(5)
        cls.spectrum = emission_spectrum(cls.params, default_nu_grid(cls.params, cls.space), cls.space)
        cls.dressed = dressed_states(cls.params, cls.space)
        cls.spacing = np.max(np.diff(cls.spectrum.nu_grid))
        # Bare line positions move by the second-order dressing shifts, about g^2 / w per state.
        cls.tolerance = cls.spacing + 3 * cls.params.g ** 2 / cls.params.omega

    def _peak_near(self, target: float):
        peaks = [p for p in find_spectral_peaks(self.spectrum, rel_height=1e-5) if abs(p.nu - target) < self.tolerance]
        assert peaks, f"No line within {self.tolerance:.3g} of {target}."
        return max(peaks, key=lambda p: p.height)

    def test_sum_rule(self):
        ratio = self.spectrum.sum_rule() / self.spectrum.photon_number
        assert abs(ratio - 1) < 0.01, f"Spectrum integrates to {ratio:.4f} <a+a>."

    def test_sideband_widths(self):
        w0, w = self.params.omega0, self.params.omega
        for target in (w0 + w, -(w0 - w)):
            peak = self._peak_near(target)
            error = abs(peak.fwhm - 2 * self.params.kappa) / (2 * self.params.kappa)
            assert error < 0.2, f"Sideband at {peak.nu:.4f} has FWHM {peak.fwhm:.4f}, expected {2 * self.params.kappa}."

    def test_lines_assigned_to_named_transitions(self):
        w0, w = self.params.omega0, self.params.omega
        expected = {w0: ('psi1-', 'psi2-'), -w0: ('psi2-', 'psi1-'),
                    w0 + w: ('psi1+', 'psi2-'), -(w0 - w): ('psi2+', 'psi1-'),
                    w0 - w: ('psi1-', 'psi2+'), -(w0 + w): ('psi2-', 'psi1+')}
        lines = assign_lines(self.dressed, self.spectrum, rel_height=1e-5)
        found = set()
        for line in lines:
            assert line.matched, f"Line at {line.nu:.4f} has no emission within 5 kappa."
            for target, names in expected.items():
                if abs(line.nu - target) < self.tolerance:
                    found.add(target)
                    assert (line.initial, line.final) == names, \
                        f"Line at {line.nu:.4f} assigned to {line.initial} -> {line.final}, expected {names}."
        assert {w0, -w0} <= found, f"Lines at +-w0 missing; found {sorted(found)}."
