"""Command line entry points.

Subcommands:
  qos       solve one power-minimization instance on a random realization
  mmf       solve one max-min-fair instance on a random realization
  sweep     run a Monte Carlo sweep from a YAML config and write CSV/TSV
  validate  parse a YAML config and print the resolved experiment
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .ambf import AmbfConfig, ambf_solve
from .bench import emit_plot_data, run_experiment, square_grid, write_results_csv
from .config import load_experiment
from .mmf import MmfConfig, solve_mmf
from .model import Scenario, all_sinrs
from .scenario import ChannelParams, GeometryConfig, generate_channels
from .units import db_to_linear, dbm_to_mw, linear_to_db, mw_to_dbm


def _parse_groups(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad group sizes {text!r}, expected e.g. 2,2")
    if not sizes or any(k < 1 for k in sizes):
        raise argparse.ArgumentTypeError("group sizes must be positive integers")
    return sizes


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-antennas", type=int, default=16, metavar="N")
    p.add_argument("--n-ris", type=int, default=100, metavar="M",
                   help="number of RIS elements (a perfect square)")
    p.add_argument("--groups", type=_parse_groups, default=(2, 2), metavar="K1,K2,..",
                   help="comma-separated users per group (default 2,2)")
    p.add_argument("--sinr-db", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)


def _make_instance(args, power_budget=None):
    geometry = GeometryConfig(ris_grid=square_grid(args.n_ris))
    params = ChannelParams()
    scenario = Scenario(
        n_antennas=args.n_antennas,
        n_ris=geometry.n_ris,
        group_sizes=args.groups,
        sinr_targets=db_to_linear(args.sinr_db),
        noise_power=params.noise_power,
        power_budget=power_budget,
    )
    ss = np.random.SeedSequence(args.seed)
    ch_seed, rng_seed = ss.spawn(2)
    channels = generate_channels(scenario, geometry, params, ch_seed)
    return scenario, channels, np.random.default_rng(rng_seed)


def _cmd_qos(args) -> int:
    scenario, channels, rng = _make_instance(args)
    result = ambf_solve(scenario, channels, AmbfConfig(), rng=rng)
    if result.status == "infeasible":
        print("infeasible: no beamformer meets the SINR targets")
        return 1
    print(f"status:           {result.status}")
    print(f"transmit power:   {mw_to_dbm(result.power):.3f} dBm "
          f"(relaxed {mw_to_dbm(result.power_relaxed):.3f} dBm)")
    print(f"ao iterations:    {result.ao_iterations}")
    print(f"psa iterations:   {result.psa_iterations}")
    sinrs = all_sinrs(scenario, channels, result.beamformers)
    print(f"worst SINR:       {linear_to_db(sinrs.min()):.3f} dB "
          f"(target {args.sinr_db:.3f} dB)")
    return 0


def _cmd_mmf(args) -> int:
    scenario, channels, rng = _make_instance(args, power_budget=float(dbm_to_mw(args.power_dbm)))
    result = solve_mmf(scenario, channels, MmfConfig(), rng=rng)
    sinrs = all_sinrs(scenario, channels, result.beamformers)
    print(f"iterations:       {result.iterations} (stalled: {result.stalled})")
    print(f"worst SINR:       {linear_to_db(sinrs.min()):.3f} dB")
    print(f"relaxed worst weighted SINR: "
          f"{linear_to_db(result.min_weighted_sinr_relaxed):.3f} dB")
    print(f"transmit power:   {mw_to_dbm(np.sum(np.abs(result.beamformers.w) ** 2)):.3f} dBm "
          f"(budget {args.power_dbm:.3f} dBm)")
    return 0


def _cmd_sweep(args) -> int:
    spec = load_experiment(args.config)
    if args.timing:
        import dataclasses
        spec = dataclasses.replace(spec, record_timing=True)
    records = run_experiment(spec, verbose_dir=args.verbose_dir)
    write_results_csv(records, args.out, record_timing=spec.record_timing)
    print(f"wrote {len(records)} records to {args.out}")
    if args.plot_data:
        emit_plot_data(records, args.metric, args.plot_data)
        print(f"wrote {args.metric} summaries to {args.plot_data}")
    return 0


def _cmd_validate(args) -> int:
    spec = load_experiment(args.config)
    print(spec)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risbf",
                                     description="joint BS/RIS beamforming optimization")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qos", help="minimize transmit power under SINR targets")
    _add_instance_args(p)
    p.set_defaults(func=_cmd_qos)

    p = sub.add_parser("mmf", help="maximize the worst SINR under a power budget")
    _add_instance_args(p)
    p.add_argument("--power-dbm", type=float, default=10.0)
    p.set_defaults(func=_cmd_mmf)

    p = sub.add_parser("sweep", help="run a Monte Carlo sweep from a YAML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--plot-data", default=None, help="optional TSV summary path")
    p.add_argument("--metric", default="power_dbm",
                   help="record field summarized into --plot-data")
    p.add_argument("--timing", action="store_true", help="record wall time per solve")
    p.add_argument("--verbose-dir", default=None,
                   help="directory for per-solve beamformer .npz dumps")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="parse a config file and print the experiment")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
