"""Numerical laboratory for the defocusing cubic Schrodinger equation
i u_t + Lap u = |u|^2 u on a periodic box: pseudospectral solver, norm
functionals, linear/nonlinear decompositions and decay-rate verification."""

from .decomposition import (
    DuhamelSplit,
    EnergyLedger,
    duhamel_integral,
    ledger_series,
    modified_energy,
    split_v_w,
    tilde_v,
    w_global,
)
from .norms import (
    NormDescriptor,
    NormSeries,
    energy,
    lp_norm,
    mass,
    morawetz_check,
    sobolev_norm,
    spacetime_norm,
)
from .solver import (
    BlowupSuspected,
    SolverConfig,
    Trajectory,
    default_dt,
    evolve,
    gaussian_data,
    nonlinearity,
    random_phase_data,
    rescale_initial_data,
    strang_step,
)
from .spectral import (
    Field,
    Grid,
    LPBand,
    field_from_fourier,
    field_from_physical,
    fractional_derivative,
    free_propagate,
    lp_bands,
    lp_project,
    make_grid,
    read_snapshot,
    upsampled_abs_max,
    write_snapshot,
)
from .verification import CheckReport, DecayFit, fit_decay_rate

__version__ = "0.1.0"
