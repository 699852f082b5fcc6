"""Config file loading: TOML (primary) or JSON into ExperimentConfig.

Sections: [model] [window] [schedule] [dos] [tests] plus one optional
section per experiment family. Unknown keys are rejected so typos fail
loudly with the offending field named.
"""

from __future__ import annotations

import json
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .experiments import (ConfigError, DosConfig, ExperimentConfig,
                          GreenDecayConfig, LocalizationConfig, MinamiConfig,
                          ModelConfig, PartitionConfig, Tolerances)
from .hamiltonian import PotentialSpec
from .lattice import MesoWindow


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    data = path.read_bytes()
    if path.suffix.lower() == ".json":
        try:
            return json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    try:
        return tomllib.loads(data.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc


def _section(raw: dict, name: str, allowed: set, required: bool = False) -> dict:
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing required config section [{name}]")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"config section [{name}] must be a table")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return dict(sec)


def _build(cls, section_name: str, kwargs: dict):
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [{section_name}] config: {exc}") from exc


def build_experiment_config(raw: dict, seed=None, threads=None,
                            synthetic_null=None) -> ExperimentConfig:
    """ExperimentConfig from a parsed config dict plus CLI overrides."""
    model_sec = _section(raw, "model", {"d", "hopping", "family", "width", "lo",
                                        "hi", "bin_edges", "densities"},
                         required=True)
    d = model_sec.pop("d", 1)
    hopping = model_sec.pop("hopping", 1.0)
    potential = _build(PotentialSpec, "model", {
        k: tuple(v) if isinstance(v, list) else v for k, v in model_sec.items()})
    model = _build(ModelConfig, "model",
                   {"potential": potential, "d": d, "hopping": hopping})

    window = _build(MesoWindow, "window",
                    _section(raw, "window", {"E", "eta", "a", "b"}, required=True))

    sched = _section(raw, "schedule",
                     {"L", "n_per_L", "master_seed", "threads", "synthetic_null"},
                     required=True)
    L_schedule = sched.get("L")
    if not isinstance(L_schedule, list) or not L_schedule:
        raise ConfigError("schedule.L must be a nonempty list of box sizes")

    dos = _build(DosConfig, "dos",
                 _section(raw, "dos", {"L", "n_realizations", "halfwidth"}))
    tests_sec = _section(raw, "tests", {
        "tv_threshold", "deviation_fraction", "deviation_final",
        "ks_coefficient", "skew_coefficient", "mean_sigmas",
        "halving_ratio_lo", "halving_ratio_hi", "partition_final_fraction",
        "min_r_squared"})
    tolerances = _build(Tolerances, "tests", tests_sec)

    def opt(name, cls, allowed):
        sec = _section(raw, name, allowed)
        for k in ("distances",):
            if k in sec:
                sec[k] = tuple(sec[k])
        return _build(cls, name, sec)

    kwargs = dict(
        model=model, window=window, L_schedule=tuple(L_schedule),
        n_per_L=sched.get("n_per_L", 1000),
        master_seed=seed if seed is not None else sched.get("master_seed", 0),
        threads=threads if threads is not None else sched.get("threads", 1),
        synthetic_null=(synthetic_null if synthetic_null is not None
                        else bool(sched.get("synthetic_null", False))),
        dos=dos, tolerances=tolerances,
        partition=opt("partition", PartitionConfig,
                      {"beta", "alpha", "resolvent_subsample"}),
        localization=opt("localization", LocalizationConfig,
                         {"s", "im_z", "distances", "n_samples", "margin"}),
        minami=opt("minami", MinamiConfig, {"n_halvings"}),
        green_decay=opt("green_decay", GreenDecayConfig,
                        {"distances", "margin", "im_z", "n_realizations"}),
    )
    return _build(ExperimentConfig, "schedule", kwargs)


def load_experiment_config(path, **overrides) -> ExperimentConfig:
    return build_experiment_config(read_config_file(path), **overrides)
