"""ergolab: a workbench for finite-data experiments in ergodic theory.

Twisted (Wiener-Wintner style) averages and frequency scans of orbits of
concrete dynamical systems, Besicovitch-type pseudometrics between orbits,
exact and bracketed joining distances between invariant measures, and
B-free / Mirsky spectrum experiments.  Every limit quantity is reported as
a finite-checkpoint surrogate with explicit thresholds.
"""

from .besicovitch import (
    LOOKAHEAD,
    AuditReport,
    DensityTrace,
    PseudometricTrace,
    TildeResult,
    besicovitch_estimate,
    dbar_estimate,
    default_delta_grid,
    equivalence_audit,
    tilde_besicovitch,
    upper_density,
)
from .bfree import (
    DavenportErdosReport,
    EtaWindow,
    GeneratorSet,
    MirskyReport,
    davenport_erdos_trace,
    eta_origin,
    eta_window,
    exact_period_dft,
    mirsky_spectrum_experiment,
)
from .dynsys import (
    BFreePoint,
    FullShift,
    Observable,
    OrbitWindow,
    PeriodicOrbit,
    Product,
    Rotation,
    RotationState,
    SymbolicState,
    SystemSpec,
    character,
    constant,
    eval_series,
    generate_orbit,
    indicator,
    orbit_from_labels,
    pm_one,
    state_metric,
    symbol_map,
)
from .errors import (
    ArgumentError,
    CapacityError,
    DataQualityError,
    DomainError,
    ErgolabError,
)
from .measures import (
    EmpiricalBlockMeasure,
    PeriodicMeasure,
    block_entropy,
    empirical_measure,
    periodic_from_word,
    weakstar_distance,
)
from .rhobar import (
    CouplingPlan,
    ExactDistance,
    RhoBarBracket,
    SequenceAuditReport,
    dbar_periodic_exact,
    rhobar_bracket,
    rhobar_periodic_exact,
    rhobar_sequence_audit,
    transport_lp,
)
from .schedule import CheckpointSchedule
from .wiener_wintner import (
    AveragesTrace,
    ContainmentReport,
    FrequencyProbe,
    FrequencySpectrum,
    RegularityReport,
    frequency_scan,
    regularity_check,
    shift_invariance_check,
    spectrum_containment,
    tau_conv_default,
    ww_average,
    ww_trace,
)
from . import kernels

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "kernels",
    # errors
    "ErgolabError",
    "ArgumentError",
    "DomainError",
    "CapacityError",
    "DataQualityError",
    # schedules
    "CheckpointSchedule",
    # systems and orbits
    "SystemSpec",
    "FullShift",
    "Rotation",
    "PeriodicOrbit",
    "BFreePoint",
    "Product",
    "SymbolicState",
    "RotationState",
    "OrbitWindow",
    "Observable",
    "generate_orbit",
    "orbit_from_labels",
    "eval_series",
    "state_metric",
    "constant",
    "indicator",
    "pm_one",
    "character",
    "symbol_map",
    # twisted averages
    "FrequencyProbe",
    "AveragesTrace",
    "FrequencySpectrum",
    "RegularityReport",
    "ContainmentReport",
    "ww_average",
    "ww_trace",
    "frequency_scan",
    "regularity_check",
    "shift_invariance_check",
    "spectrum_containment",
    "tau_conv_default",
    # orbit pseudometrics
    "LOOKAHEAD",
    "DensityTrace",
    "PseudometricTrace",
    "TildeResult",
    "AuditReport",
    "upper_density",
    "dbar_estimate",
    "besicovitch_estimate",
    "tilde_besicovitch",
    "default_delta_grid",
    "equivalence_audit",
    # measures
    "PeriodicMeasure",
    "EmpiricalBlockMeasure",
    "periodic_from_word",
    "empirical_measure",
    "block_entropy",
    "weakstar_distance",
    # joining distances
    "CouplingPlan",
    "ExactDistance",
    "RhoBarBracket",
    "SequenceAuditReport",
    "transport_lp",
    "dbar_periodic_exact",
    "rhobar_periodic_exact",
    "rhobar_bracket",
    "rhobar_sequence_audit",
    # b-free
    "GeneratorSet",
    "EtaWindow",
    "DavenportErdosReport",
    "MirskyReport",
    "eta_window",
    "eta_origin",
    "davenport_erdos_trace",
    "mirsky_spectrum_experiment",
    "exact_period_dft",
]
