"""Run configuration: defaults, validation and flat ``key = value`` files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dataset: str = "zoo"
    label_column: str = "-1"
    k: int = 10
    sigma: float = 1.0
    p: int = 10
    tau: float = 0.9999
    t1: float = 1000.0
    r1: float = 2.0
    t2: float = 1.0
    r2: float = 0.0
    eta1: float = 1.0
    eta2: float = 1.0
    epochs: int = 200
    n_prime: int = 1024
    n_seed: int = 16
    subgraph_threshold: int = 2000
    layers: int = 3
    hidden: int = 16
    embed: int = 16
    learner: str = "gcn"
    learner_hidden: int = 16
    lr_euclidean: float = 1e-3
    lr_riemannian: float = 1e-2
    edge_drop: float = 0.2
    feature_mask: float = 0.2
    seed: int = 0
    output_dir: str = ""
    decode: str = "naive"
    decode_k: int = 10
    rho_max: float = 0.999
    cse_radius: float = 0.999
    curvature: float = -1.0

    def __post_init__(self):
        positive_ints = ("k", "p", "n_prime", "n_seed", "layers", "hidden", "embed",
                         "learner_hidden", "decode_k")
        for name in positive_ints:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        for name in ("sigma", "t1", "t2", "lr_euclidean", "lr_riemannian"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must lie in (0, 1]")
        for name in ("eta1", "eta2"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        for name in ("edge_drop", "feature_mask"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1)")
        if self.n_seed > self.n_prime:
            raise ConfigError("n_seed may not exceed n_prime")
        if self.learner not in ("gcn", "mlp"):
            raise ConfigError("learner must be 'gcn' or 'mlp'")
        if self.decode not in ("naive", "fast"):
            raise ConfigError("decode must be 'naive' or 'fast'")
        if not 0.0 < self.rho_max < 1.0:
            raise ConfigError("rho_max must lie in (0, 1)")
        if not 0.0 <= self.cse_radius < 1.0:
            raise ConfigError("cse_radius must lie in [0, 1); 0 disables leaf rescaling")
        if self.curvature != -1.0:
            raise ConfigError("only curvature -1 is supported")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def coerce(key: str, value):
    """Convert a string (or already typed) value to the type of ``key``."""
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = FIELD_TYPES[key]
    if not isinstance(value, str):
        return value
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind}") from None
    return value


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = coerce(key, value)
    return values


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update(parse_config_text(path.read_text()))
    for key, value in (overrides or {}).items():
        values[key] = coerce(key, value)
    return RunConfig(**values)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.to_dict().items())
