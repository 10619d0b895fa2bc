"""Joint base-station / RIS beamforming optimization.

Power minimization under per-user SINR targets (alternating BS solve and
projected subgradient RIS tuning) and max-min-fair SINR under a power
budget, with synthetic channel generation and a Monte Carlo sweep harness.
"""

__version__ = "0.1.0"

from .ambf import AmbfConfig, AmbfResult, ambf_solve, solve_qos_no_ris, solve_qos_random_ris
from .bench import ExperimentSpec, ResultRecord, emit_plot_data, run_experiment, square_grid, write_results_csv
from .bs_qos import QosSolverConfig, fixed_point_multipliers, solve_multicast_qos, solve_qos, solve_unicast_qos
from .errors import DegenerateChannelError, InfeasibleError, InvalidGeometryError
from .mmf import MmfConfig, MmfResult, mmf_via_qos_bisection, qos_mmf_inversion_check, solve_mmf
from .model import (
    BeamformerSet,
    FeasibilityReport,
    Scenario,
    all_sinrs,
    check_qos_feasible,
    effective_channels,
    min_weighted_sinr,
    phase_project,
    sum_rate,
    total_power,
)
from .ris_psa import PsaConfig, PsaResult, grad_phi_e, phi, project_unit_disk, psa_solve
from .scenario import ChannelParams, ChannelSet, GeometryConfig, generate_channels, load_channelset, save_channelset
from .units import db_to_linear, dbm_to_mw, linear_to_db, mw_to_dbm

__all__ = [
    "AmbfConfig", "AmbfResult", "ambf_solve", "solve_qos_no_ris", "solve_qos_random_ris",
    "ExperimentSpec", "ResultRecord", "emit_plot_data", "run_experiment", "square_grid",
    "write_results_csv",
    "QosSolverConfig", "fixed_point_multipliers", "solve_multicast_qos", "solve_qos",
    "solve_unicast_qos",
    "DegenerateChannelError", "InfeasibleError", "InvalidGeometryError",
    "MmfConfig", "MmfResult", "mmf_via_qos_bisection", "qos_mmf_inversion_check", "solve_mmf",
    "BeamformerSet", "FeasibilityReport", "Scenario", "all_sinrs", "check_qos_feasible",
    "effective_channels", "min_weighted_sinr", "phase_project", "sum_rate", "total_power",
    "PsaConfig", "PsaResult", "grad_phi_e", "phi", "project_unit_disk", "psa_solve",
    "ChannelParams", "ChannelSet", "GeometryConfig", "generate_channels",
    "load_channelset", "save_channelset",
    "db_to_linear", "dbm_to_mw", "linear_to_db", "mw_to_dbm",
]
