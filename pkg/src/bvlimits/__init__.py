"""Return-time limit laws for Bratteli-Vershik systems."""

__version__ = "0.1.0"

from .diagram import (Edge, LevelSpec, OrderedBratteliDiagram, PathPrefix, ValidationReport, contract,
                      heights, incidence, relabel_normalize, stationary, validate)
from .dynamics import (AdicState, ExcursionProfile, TowerSystem, adic_successor, brute_force_returns,
                       excursion_walk, kth_return_state, max_path, min_path, return_spectrum, return_time,
                       towers)
from .errors import (BratteliError, DiagramError, InconclusiveOracle, LevelRangeError, MeasureUnavailable,
                     NeedsDeeperSuffix, NormalizationError, NumericError, PreconditionError)
from .generators import (SturmianSpec, convergents, example1, gauss_map, left_to_right, odometer_beta,
                         odometer_classic, sturmian, sturmian_limits)
from .limitlaw import (BreakpointTable, DiscreteCDF, EntranceCDF, FddSpec, PiecewiseLinearCDF,
                       breakpoint_table, convergence_report, finite_F1, finite_Fk, finite_fdd,
                       left_right_closed_form, limit_F1, limit_fdd, limit_Fk, sup_distance)
from .spectral import (MeasureVector, PerronData, StationaryMeasure, nonstationary_measure_estimate, perron,
                       stationary_cylinder_measure, subdominant_rate)

__all__ = [
    "AdicState",
    "BratteliError",
    "BreakpointTable",
    "DiagramError",
    "DiscreteCDF",
    "Edge",
    "EntranceCDF",
    "ExcursionProfile",
    "FddSpec",
    "InconclusiveOracle",
    "LevelRangeError",
    "LevelSpec",
    "MeasureUnavailable",
    "MeasureVector",
    "NeedsDeeperSuffix",
    "NormalizationError",
    "NumericError",
    "OrderedBratteliDiagram",
    "PathPrefix",
    "PerronData",
    "PiecewiseLinearCDF",
    "PreconditionError",
    "StationaryMeasure",
    "SturmianSpec",
    "TowerSystem",
    "ValidationReport",
    "adic_successor",
    "breakpoint_table",
    "brute_force_returns",
    "contract",
    "convergence_report",
    "convergents",
    "example1",
    "excursion_walk",
    "finite_F1",
    "finite_Fk",
    "finite_fdd",
    "gauss_map",
    "heights",
    "incidence",
    "kth_return_state",
    "left_right_closed_form",
    "left_to_right",
    "limit_F1",
    "limit_Fk",
    "limit_fdd",
    "max_path",
    "min_path",
    "nonstationary_measure_estimate",
    "odometer_beta",
    "odometer_classic",
    "perron",
    "relabel_normalize",
    "return_spectrum",
    "return_time",
    "stationary",
    "stationary_cylinder_measure",
    "sturmian",
    "sturmian_limits",
    "subdominant_rate",
    "sup_distance",
    "towers",
    "validate",
]
