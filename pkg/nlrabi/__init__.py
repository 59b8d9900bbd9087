from nlrabi.log_setup import logger_init
from nlrabi.log_setup import get_logger
from nlrabi.log_setup import LoggerManager

from nlrabi.hilbert import make_space, basis_state
from nlrabi.model import ModelParams, hamiltonian, liouvillian
from nlrabi.solvers import steady_state, observables, converge_cutoff, propagate
from nlrabi.weak_excitation import amplitudes, populations, closed_form_observables, g2_tau_approx
from nlrabi.spectral import g2_tau, emission_spectrum, find_spectral_peaks, dressed_states, assign_lines
from nlrabi.trajectory import TrajectoryConfig, run_trajectory, run_ensemble, estimate_observables
from nlrabi.sweep import SweepSpec, run_sweep
