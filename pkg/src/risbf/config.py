"""YAML experiment configuration loading.

A config file mirrors ExperimentSpec with optional nested sections for
geometry, channel, solver settings. Unknown keys raise immediately so a
typo cannot silently fall back to a default.

Example::

    problem: qos
    sweep: {variable: n_ris, values: [16, 64, 144]}
    trials: 20
    seed: 0
    n_antennas: 16
    group_sizes: [2, 2]
    sinr_target_db: 10.0
    geometry: {ris_position: [70, 70, 0], user_drop_radius: 20}
    channel: {rician_factor: 10}
    ambf: {max_ao_iters: 30, psa: {step_size: 10.0, max_iters: 2000}}
"""

from __future__ import annotations

import dataclasses

import yaml

from .ambf import AmbfConfig
from .bench import ExperimentSpec
from .bs_qos import QosSolverConfig
from .mmf import MmfConfig
from .ris_psa import PsaConfig
from .scenario import ChannelParams, GeometryConfig


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping, got {type(data).__name__}")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}")
    kwargs = {}
    for key, value in data.items():
        if key in _NESTED and isinstance(value, dict):
            kwargs[key] = _build(_NESTED[key], value, f"{path}.{key}")
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


_NESTED = {
    "geometry": GeometryConfig,
    "channel_params": ChannelParams,
    "ambf": AmbfConfig,
    "mmf": MmfConfig,
    "psa": PsaConfig,
    "qos": QosSolverConfig,
}

_TOP_LEVEL_ALIASES = {
    "trials": "n_trials",
    "seed": "base_seed",
    "channel": "channel_params",
}


def spec_from_dict(data: dict) -> ExperimentSpec:
    data = dict(data)
    sweep = data.pop("sweep", None)
    if sweep is not None:
        data["sweep_variable"] = sweep["variable"]
        data["sweep_values"] = sweep["values"]
    for alias, target in _TOP_LEVEL_ALIASES.items():
        if alias in data:
            data[target] = data.pop(alias)
    return _build(ExperimentSpec, data, "experiment")


def load_experiment(path) -> ExperimentSpec:
    """Parse a YAML experiment file into an ExperimentSpec."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: experiment config must be a mapping")
    return spec_from_dict(data)
