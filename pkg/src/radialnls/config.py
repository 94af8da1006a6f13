"""Run configuration: a flat JSON document whose keys mirror RunConfig fields."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
import json
import math

from .errors import ArtifactIOError, ConfigurationError
from .grid import DEFAULT_TAIL_THRESHOLD, PROFILE_KINDS, gaussian, make_grid


@dataclass(frozen=True)
class RunConfig:
    r_max: float = 16.0
    n: int = 1024
    dt: float = 1e-3
    t_end: float = 2.0
    profile: dict = field(default_factory=gaussian)
    snapshot_stride: int = 10
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD
    eta1: float = 0.5
    eta2: float = 0.0625
    eta3: float = 0.01
    c_eta1: float = 4.0
    eps_small: float = 0.5
    direction: int = 1
    snapshot_format: str = "npy"

    def __post_init__(self):
        object.__setattr__(self, "profile", dict(self.profile))
        self.validate()

    def validate(self):
        make_grid(self.r_max, self.n)
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ConfigurationError(f"t_end must be non-negative, got {self.t_end}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ConfigurationError("snapshot_stride must be a positive integer")
        if not (0 < self.tail_threshold < 1):
            raise ConfigurationError("tail_threshold must lie in (0, 1)")
        if not (0 < self.eta3 < self.eta2 < self.eta1 < 1):
            raise ConfigurationError(
                f"need 0 < eta3 < eta2 < eta1 < 1, got {self.eta3}, {self.eta2}, {self.eta1}")
        if self.c_eta1 <= 0 or self.eps_small <= 0:
            raise ConfigurationError("c_eta1 and eps_small must be positive")
        if self.direction not in (1, -1):
            raise ConfigurationError("direction must be +1 or -1")
        if self.snapshot_format not in ("npy", "csv"):
            raise ConfigurationError("snapshot_format must be 'npy' or 'csv'")
        if self.profile.get("kind") not in PROFILE_KINDS:
            raise ConfigurationError(f"unknown profile kind {self.profile.get('kind')!r}")

    @property
    def grid(self):
        return make_grid(self.r_max, self.n)

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    def replace(self, **kw):
        d = self.to_dict()
        d.update(kw)
        return RunConfig(**d)

    def to_dict(self):
        return asdict(self)


def config_from_dict(d):
    if not isinstance(d, dict):
        raise ConfigurationError("config document must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    extra = set(d) - known
    if extra:
        raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
    try:
        return RunConfig(**d)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    except OSError as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc}") from exc
    return config_from_dict(d)


def dump_config(cfg):
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2)


def save_config(cfg, path):
    with open(path, "w") as fh:
        fh.write(dump_config(cfg) + "\n")
