NAME = "nlrabi"

AUTHOR = "Garett MacGowan"

VERSION = "0.2.0"

DESCRIPTION = (
    "Simulation toolkit for the dissipative generalized Rabi model with nonlinear dispersive coupling."
)

LONG_DESCRIPTION = (
    "Steady states, photon antibunching, two-time correlations, emission spectra and quantum trajectories of a "
    "qubit-oscillator Rabi model with an added (U/2) sigma_z a^dagger a coupling and cavity decay, together with the "
    "closed-form weak-excitation theory used to cross-check the numerics."
)
