"""Configuration dataclasses and TOML round-tripping."""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

CONFIG_ENV = "GAPINFER_CONFIG"
LOG_FLOOR = math.log(1e-10)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DecisionConfig:
    T: float = 0.1  # alpha temperature
    b: float = 0.25  # alpha bias
    t: float = 0.1  # beam aggregation temperature
    logprob_floor: float = LOG_FLOOR
    prune_threshold: float = 0.0
    mixture: bool = False
    mixture_cut: float = 0.5
    mixture_prior_sign: int = -1  # -1: log p0(m) = -Smatch(G_m, G_0)
    alpha_mode: str = "variable"  # or "candidate"
    restarts: int = 4
    iterations: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError("T must be > 0")
        if not self.t > 0:
            raise ConfigError("t must be > 0")
        if not self.logprob_floor < 0:
            raise ConfigError("logprob_floor must be negative")
        if not 0.0 <= self.prune_threshold <= 1.0:
            raise ConfigError("prune_threshold must lie in [0, 1]")
        if not 0.0 < self.mixture_cut:
            raise ConfigError("mixture_cut must be > 0")
        if self.mixture_prior_sign not in (-1, 1):
            raise ConfigError("mixture_prior_sign must be -1 or 1")
        if self.alpha_mode not in ("variable", "candidate"):
            raise ConfigError("alpha_mode must be 'variable' or 'candidate'")
        if self.restarts < 1 or self.iterations < 1:
            raise ConfigError("restarts and iterations must be >= 1")

    def with_(self, **kw) -> "DecisionConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class RunConfig:
    decision: DecisionConfig = field(default_factory=DecisionConfig)
    beams: str | None = None
    symbolic: str | None = None
    gold: str | None = None
    pred: str | None = None
    out: str | None = None
    n_bins: int = 10
    workers: int = 0  # 0: all available cores
    strict: bool = False
    no_symbolic: bool = False

    def __post_init__(self):
        if self.n_bins < 1:
            raise ConfigError("n_bins must be >= 1")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")

    @property
    def n_workers(self) -> int:
        return self.workers or os.cpu_count() or 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["decision"] = asdict(self.decision)
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        dec = d.pop("decision", {})
        _check_keys(d, {f.name for f in fields(cls)} - {"decision"}, "")
        _check_keys(dec, {f.name for f in fields(DecisionConfig)}, "decision.")
        return cls(decision=DecisionConfig(**dec), **d)

    def updated(self, run: dict, decision: dict) -> "RunConfig":
        """Apply overrides (e.g. command-line flags); ``None`` values are ignored."""
        run = {k: v for k, v in run.items() if v is not None}
        decision = {k: v for k, v in decision.items() if v is not None}
        _check_keys(run, {f.name for f in fields(RunConfig)} - {"decision"}, "")
        _check_keys(decision, {f.name for f in fields(DecisionConfig)}, "decision.")
        return replace(self, decision=replace(self.decision, **decision), **run)


def _check_keys(d: dict, allowed: set, prefix: str):
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(prefix + k for k in unknown))


def load_config(path: str | os.PathLike) -> RunConfig:
    with open(path, "rb") as fh:
        return RunConfig.from_dict(tomllib.load(fh))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    s = str(v).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def dump_config(cfg: RunConfig) -> str:
    """Flat TOML: top-level run keys, then a ``[decision]`` table."""
    d = cfg.to_dict()
    dec = d.pop("decision")
    lines = [f"{k} = {_toml_value(v)}" for k, v in d.items()]
    lines.append("")
    lines.append("[decision]")
    lines += [f"{k} = {_toml_value(v)}" for k, v in dec.items()]
    return "\n".join(lines) + "\n"
