"""Monte Carlo experiment harness.

Runs a sweep over one scenario variable, drawing independent channel
realizations per trial and evaluating each configured method on the same
realization.  Seeds derive from a single SeedSequence keyed by
(value index, trial, method slot), so results are reproducible and
independent of the method list ordering.  Output rows carry the achieved
metrics evaluated directly from the returned beamformers, not from
solver-internal bookkeeping.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .ambf import AmbfConfig, ambf_solve, solve_qos_no_ris, solve_qos_random_ris
from .errors import InfeasibleError
from .mmf import MmfConfig, mmf_via_qos_bisection, solve_mmf
from .model import BeamformerSet, Scenario, min_weighted_sinr, sum_rate, total_power
from .scenario import ChannelParams, ChannelSet, GeometryConfig, generate_channels
from .units import db_to_linear, dbm_to_mw, mw_to_dbm

RESULTS_HEADER = "# risbf results v1"

#: Fixed seed slots so adding or reordering methods never reshuffles draws.
_METHOD_SLOTS = {"channels": 0, "ambf": 1, "random_ris": 2, "no_ris": 3, "mmf": 4}

QOS_METHODS = ("ambf", "random_ris", "no_ris")
MMF_METHODS = ("mmf", "random_ris", "no_ris")


def square_grid(m: int) -> tuple[int, int]:
    """(sqrt(m), sqrt(m)) for a perfect square m."""
    r = math.isqrt(m)
    if r * r != m:
        raise ValueError(f"{m} is not a perfect square")
    return r, r


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str  # "qos" or "mmf"
    sweep_variable: str  # n_ris | n_antennas | sinr_target_db | power_budget_dbm
    sweep_values: tuple
    n_trials: int = 20
    base_seed: int = 0
    methods: tuple = ()
    n_antennas: int = 16
    group_sizes: tuple = (2, 2)
    sinr_target_db: float = 10.0
    power_budget_dbm: float = 10.0
    geometry: GeometryConfig = GeometryConfig()
    channel_params: ChannelParams = ChannelParams()
    ambf: AmbfConfig = AmbfConfig()
    mmf: MmfConfig = MmfConfig()
    record_timing: bool = False

    def __post_init__(self):
        if self.problem not in ("qos", "mmf"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if not self.sweep_values:
            raise ValueError("sweep_values must be non-empty")
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        defaults = QOS_METHODS if self.problem == "qos" else MMF_METHODS
        methods = tuple(self.methods) if self.methods else defaults
        unknown = [m for m in methods if m not in defaults]
        if unknown:
            raise ValueError(f"unknown methods for {self.problem}: {unknown}")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))


@dataclass
class ResultRecord:
    sweep_variable: str
    sweep_value: float
    trial: int
    method: str
    status: str
    power_dbm: float
    min_wsinr_db: float
    sum_rate: float
    ao_iters: int
    psa_iters: int
    wall_time_s: float | None = None


def _instantiate(spec: ExperimentSpec, value) -> tuple[Scenario, GeometryConfig]:
    """Scenario and geometry with the sweep variable applied."""
    n_antennas = spec.n_antennas
    geometry = spec.geometry
    sinr_db = spec.sinr_target_db
    budget_dbm = spec.power_budget_dbm
    if spec.sweep_variable == "n_ris":
        geometry = replace(geometry, ris_grid=square_grid(int(value)))
    elif spec.sweep_variable == "n_antennas":
        n_antennas = int(value)
    elif spec.sweep_variable == "sinr_target_db":
        sinr_db = float(value)
    elif spec.sweep_variable == "power_budget_dbm":
        budget_dbm = float(value)
    else:
        raise ValueError(f"unknown sweep variable {spec.sweep_variable!r}")
    scenario = Scenario(
        n_antennas=n_antennas,
        n_ris=geometry.n_ris,
        group_sizes=spec.group_sizes,
        sinr_targets=db_to_linear(sinr_db),
        noise_power=spec.channel_params.noise_power,
        power_budget=float(dbm_to_mw(budget_dbm)) if spec.problem == "mmf" else None,
    )
    return scenario, geometry


def _rng_for(spec: ExperimentSpec, value_index: int, trial: int, slot: str) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=spec.base_seed,
                                spawn_key=(value_index, trial, _METHOD_SLOTS[slot]))
    return np.random.default_rng(ss)


def _evaluate(scenario: Scenario, channels: ChannelSet, bf: BeamformerSet):
    """(power_dbm, min_wsinr_db, sum_rate) from the actual beamformers."""
    p = total_power(bf.w)
    wsinr, _ = min_weighted_sinr(scenario, channels, bf)
    return (float(mw_to_dbm(p)) if p > 0 else float("nan"),
            float(10.0 * np.log10(wsinr)) if wsinr > 0 else float("nan"),
            sum_rate(scenario, channels, bf))


def _run_qos_method(spec: ExperimentSpec, method: str, scenario: Scenario,
                    channels: ChannelSet, rng: np.random.Generator):
    """Returns (records-worth tuples) for one QoS method on one realization."""
    if method == "ambf":
        res = ambf_solve(scenario, channels, spec.ambf, rng=rng)
        eval_sc, eval_ch = scenario, channels
    elif method == "random_ris":
        res = solve_qos_random_ris(scenario, channels, rng, spec.ambf)
        eval_sc, eval_ch = scenario, channels
    else:  # no_ris
        res = solve_qos_no_ris(scenario, channels, spec.ambf)
        eval_sc = Scenario(scenario.n_antennas, 0, scenario.group_sizes,
                           scenario.sinr_targets.copy(), scenario.noise_power)
        eval_ch = channels.without_ris_path()
    if res.status == "infeasible":
        return res.status, (float("nan"),) * 3, res, None
    metrics = _evaluate(eval_sc, eval_ch, res.beamformers)
    return res.status, metrics, res, res.beamformers


def _run_mmf_method(spec: ExperimentSpec, method: str, scenario: Scenario,
                    channels: ChannelSet, rng: np.random.Generator):
    """Returns a list of (method_name, status, metrics, iters, bf) tuples."""
    if method == "mmf":
        res = solve_mmf(scenario, channels, spec.mmf, rng=rng)
        metrics = _evaluate(scenario, channels, res.beamformers)
        relaxed_db = (float(10.0 * np.log10(res.min_weighted_sinr_relaxed))
                      if res.min_weighted_sinr_relaxed > 0 else float("nan"))
        relaxed_metrics = (metrics[0], relaxed_db, float("nan"))
        status = "converged" if res.stalled else "max-iters"
        return [("mmf", status, metrics, (1, res.iterations), res.beamformers),
                ("mmf_relaxed", status, relaxed_metrics, (1, res.iterations), None)]
    if method == "random_ris":
        e = np.exp(2j * np.pi * rng.random(scenario.n_ris))
        eval_sc, eval_ch = scenario, channels
    else:  # no_ris
        eval_ch = channels.without_ris_path()
        eval_sc = Scenario(scenario.n_antennas, 0, scenario.group_sizes,
                           scenario.sinr_targets.copy(), scenario.noise_power,
                           scenario.power_budget)
        e = np.zeros(0, dtype=complex)
    try:
        w, _ = mmf_via_qos_bisection(eval_sc, eval_ch, e, scenario.power_budget,
                                     spec.ambf.qos, tol=1e-3)
    except InfeasibleError:
        return [(method, "infeasible", (float("nan"),) * 3, (0, 0), None)]
    bf = BeamformerSet(w=w, e=e)
    return [(method, "converged", _evaluate(eval_sc, eval_ch, bf), (1, 0), bf)]


def run_experiment(spec: ExperimentSpec, verbose_dir=None) -> list[ResultRecord]:
    """Run the full sweep; failed trials are recorded, never raised."""
    records: list[ResultRecord] = []
    for vi, value in enumerate(spec.sweep_values):
        scenario, geometry = _instantiate(spec, value)
        for trial in range(spec.n_trials):
            channels = generate_channels(
                scenario, geometry, spec.channel_params,
                np.random.SeedSequence(entropy=spec.base_seed,
                                       spawn_key=(vi, trial, _METHOD_SLOTS["channels"])))
            for method in spec.methods:
                rng = _rng_for(spec, vi, trial, method)
                t0 = time.perf_counter() if spec.record_timing else None
                try:
                    if spec.problem == "qos":
                        status, metrics, res, bf = _run_qos_method(
                            spec, method, scenario, channels, rng)
                        outputs = [(method, status, metrics,
                                    (res.ao_iterations, res.psa_iterations), bf)]
                    else:
                        outputs = _run_mmf_method(spec, method, scenario, channels, rng)
                except (InfeasibleError, np.linalg.LinAlgError) as exc:
                    outputs = [(method, f"error:{type(exc).__name__}",
                                (float("nan"),) * 3, (0, 0), None)]
                elapsed = time.perf_counter() - t0 if spec.record_timing else None
                for name, status, metrics, iters, bf in outputs:
                    records.append(ResultRecord(
                        sweep_variable=spec.sweep_variable, sweep_value=float(value),
                        trial=trial, method=name, status=status,
                        power_dbm=metrics[0], min_wsinr_db=metrics[1],
                        sum_rate=metrics[2], ao_iters=iters[0], psa_iters=iters[1],
                        wall_time_s=elapsed))
                    if verbose_dir is not None and bf is not None:
                        np.savez(f"{verbose_dir}/{spec.sweep_variable}{value}"
                                 f"_trial{trial}_{name}.npz", w=bf.w, e=bf.e)
    return records


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if np.isnan(x) else f"{x:.6f}"
    return str(x)


def write_results_csv(records: list[ResultRecord], path, record_timing: bool = False) -> None:
    """Write records as CSV; byte-identical for identical records.

    The wall-time column is included only when record_timing is True so
    that default outputs of repeated runs compare equal byte for byte.
    """
    cols = ["sweep_variable", "sweep_value", "trial", "method", "status",
            "power_dbm", "min_wsinr_db", "sum_rate", "ao_iters", "psa_iters"]
    if record_timing:
        cols.append("wall_time_s")
    lines = [RESULTS_HEADER, ",".join(cols)]
    for r in records:
        vals = [r.sweep_variable, _fmt(r.sweep_value), str(r.trial), r.method,
                r.status, _fmt(r.power_dbm), _fmt(r.min_wsinr_db), _fmt(r.sum_rate),
                str(r.ao_iters), str(r.psa_iters)]
        if record_timing:
            vals.append(_fmt(r.wall_time_s))
        lines.append(",".join(vals))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def summarize(records: list[ResultRecord], metric: str) -> list[tuple]:
    """Per (sweep_value, method): (value, method, median, q1, q3, n) over finite metrics."""
    groups: dict[tuple, list] = {}
    for r in records:
        x = getattr(r, metric)
        if x is not None and np.isfinite(x):
            groups.setdefault((r.sweep_value, r.method), []).append(x)
    out = []
    for (value, method) in sorted(groups):
        xs = np.asarray(groups[(value, method)])
        q1, med, q3 = np.percentile(xs, [25, 50, 75])
        out.append((value, method, float(med), float(q1), float(q3), len(xs)))
    return out


def emit_plot_data(records: list[ResultRecord], metric: str, path) -> None:
    """Write median and interquartile range per (sweep value, method) as TSV."""
    lines = ["\t".join(["sweep_value", "method", "median", "q1", "q3", "n"])]
    for value, method, med, q1, q3, n in summarize(records, metric):
        lines.append("\t".join([_fmt(value), method, _fmt(med), _fmt(q1), _fmt(q3), str(n)]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
