"""Radiative friction on an excited two-level atom moving in vacuum.

Closed-form force law (:mod:`radfriction.analytic`) plus a brute-force
mode-sum evolution (:mod:`radfriction.dynamics`) that checks it.
"""
from .params import (
    AtomParams,
    ParameterError,
    SimScales,
    ValidationReport,
    derive_gamma0,
    dimensionless_groups,
    dipole_from_gamma0,
    toy_atom,
    validate_params,
)
from .wavepacket import MomentumWavepacket, gaussian_wavepacket, single_momentum
from .analytic import (
    WITH_SHIFT,
    ZERO_SHIFT,
    ForceSample,
    LevelShift,
    band_self_energy,
    band_shift,
    friction_force,
    friction_force_vec,
    level_shift,
    lineshape,
    mean_acceleration,
    pole_amplitudes,
    total_impulse,
)
from .modegrid import (
    ISOTROPIC,
    Couplings,
    ModeGrid,
    build_grid,
    couple_dipole,
    default_window,
    golden_rule_rate,
)
from .dynamics import (
    AmplitudeState,
    DtPolicy,
    ForceSeries,
    ObservableSeries,
    StepSizeError,
    Trajectory,
    evolve,
    force_from_trajectory,
    observables,
    rotating_frame_rhs,
    simulate,
)

__version__ = "0.1.0"
