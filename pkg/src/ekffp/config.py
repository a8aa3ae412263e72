"""TOML experiment configuration.

A config file looks like::

    schema_version = 1

    [scenario]
    kind = "symmetric"
    n_actions = 2

    [learner]
    kind = "ekf_fp"
    xi = 0.1
    zeta = "1/t"

    [[agents]]          # optional per-agent overrides
    index = 1
    kind = "random"

    [run]
    iterations = 50
    replications = 100
    seed = 0

    [sweep]             # only read by the sweep subcommand
    xi = [0.005, 0.1, 0.5]
    zeta = [0.005, 0.1, 0.5, "1/t"]
    seeds = [0, 1]

Unknown keys anywhere are rejected. Bundled defaults live in
``ekffp/scenarios/data`` and can be named without the ``.toml`` suffix.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ConfigurationError
from .harness import LearnerSpec, RunConfig
from .learners import LEARNER_KINDS, make_learner
from .scenarios import TrackingSpec, make_scenario

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema_version", "scenario", "learner", "agents", "run", "sweep", "nash"}
_RUN_KEYS = {"iterations", "replications", "seed", "initial_joint", "carry_beliefs", "jobs"}
_SWEEP_KEYS = {"xi", "zeta", "seeds", "horizon", "period", "switch_points", "tau"}
_NASH_KEYS = {"cap"}


@dataclass
class ExperimentConfig:
    source: str
    scenario_kind: str
    run: Optional[RunConfig]
    jobs: int = 1
    sweep: dict = field(default_factory=dict)
    nash_cap: int = 10**6

    def with_seed(self, seed: int) -> "ExperimentConfig":
        if self.run is None:
            return self
        params = dict(self.run.__dict__, seed=int(seed))
        return ExperimentConfig(self.source, self.scenario_kind, RunConfig(**params), self.jobs, self.sweep, self.nash_cap)


def bundled_configs() -> list:
    root = resources.files("ekffp.scenarios") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_path(name) -> Path:
    """A filesystem path, or the name of a bundled default config."""
    path = Path(name)
    if path.is_file():
        return path
    if path.suffix == "" and path.name in bundled_configs():
        return Path(str(resources.files("ekffp.scenarios") / "data" / f"{path.name}.toml"))
    raise ConfigurationError(f"config file {name} not found (bundled: {', '.join(bundled_configs())})")


def _reject_unknown(table: dict, allowed: set, where: str):
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigurationError(f"{where}: unknown key(s) {', '.join(extra)}")


def _table(doc: dict, key: str, required: bool = False) -> dict:
    value = doc.get(key)
    if value is None:
        if required:
            raise ConfigurationError(f"missing [{key}] table")
        return {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"[{key}] must be a table")
    return dict(value)


def _learner(table: dict, where: str) -> LearnerSpec:
    table = dict(table)
    kind = table.pop("kind", None)
    if kind not in LEARNER_KINDS:
        raise ConfigurationError(f"{where}.kind must be one of {', '.join(LEARNER_KINDS)}, got {kind!r}")
    allowed = set(make_learner(kind).get_params()) - {"random_state"}
    _reject_unknown(table, allowed, where)
    return LearnerSpec(kind, table)


def parse_config(doc: dict, source: str = "<config>") -> ExperimentConfig:
    _reject_unknown(doc, _TOP_KEYS, source)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"{source}: schema_version must be {SCHEMA_VERSION}, got {version!r}")

    scenario_table = _table(doc, "scenario")
    sweep = _table(doc, "sweep")
    _reject_unknown(sweep, _SWEEP_KEYS, "sweep")
    nash = _table(doc, "nash")
    _reject_unknown(nash, _NASH_KEYS, "nash")
    run_table = _table(doc, "run")
    _reject_unknown(run_table, _RUN_KEYS, "run")

    if not scenario_table:
        if not sweep:
            raise ConfigurationError(f"{source}: needs a [scenario] or a [sweep] table")
        return ExperimentConfig(source, "tracking", None, sweep=sweep)

    kind = scenario_table.pop("kind", None)
    if not isinstance(kind, str):
        raise ConfigurationError("scenario.kind is required")
    scenario = make_scenario(kind, **scenario_table)

    learner = _learner(_table(doc, "learner", required=True), "learner")
    agents = {}
    entries = doc.get("agents", [])
    if not isinstance(entries, list):
        raise ConfigurationError("agents must be an array of tables")
    for n, entry in enumerate(entries):
        entry = dict(entry)
        index = entry.pop("index", None)
        if not isinstance(index, int) or index < 0:
            raise ConfigurationError(f"agents[{n}].index must be a non-negative integer")
        agents[index] = _learner(entry, f"agents[{n}]")

    jobs = int(run_table.pop("jobs", 1))
    if jobs < 1:
        raise ConfigurationError("run.jobs must be >= 1")
    if "initial_joint" in run_table:
        run_table["initial_joint"] = tuple(int(a) for a in run_table["initial_joint"])
    try:
        run = RunConfig(scenario=scenario, learner=learner, agents=agents, **run_table)
    except TypeError as exc:
        raise ConfigurationError(f"[run]: {exc}") from None
    return ExperimentConfig(source, kind, run, jobs=jobs, sweep=sweep, nash_cap=int(nash.get("cap", 10**6)))


def load_config(name) -> ExperimentConfig:
    path = resolve_path(name)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return parse_config(doc, str(path))


def sweep_specs(sweep: dict) -> tuple:
    kw = {k: sweep[k] for k in ("horizon", "period") if k in sweep}
    if "switch_points" in sweep:
        kw["switch_points"] = tuple(sweep["switch_points"])
    return TrackingSpec("sinusoid", **kw), TrackingSpec("abrupt", **kw)
