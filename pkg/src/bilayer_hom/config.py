"""Run configuration: JSON schema, defaults and validation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .algebra import Rotation, k_interval, make_slip_system
from .energetics import BUILDERS, HRule
from .errors import ConfigError
from .microstructure import GammaProfile, RectDomain


@dataclass
class OutputConfig:
    csv: bool = True
    pgm: bool = False
    raster_csv: bool = False
    resolution: tuple = (64, 64)
    component: str = "A12"


@dataclass
class CellConfig:
    n_soft_bands: int = 64


@dataclass
class RigidityConfig:
    cases: list = field(default_factory=lambda: [[1.0, 1.0, 0.0, math.pi]])
    random_cases: int = 20
    n_grid: int = 8
    thetas: list | None = None
    epsilon: float | None = None


@dataclass
class RunConfig:
    """Everything a CLI run needs; JSON keys match the field names except ``lambda``."""

    slip: tuple = (1.0, 0.0)
    lam: float = 0.5
    tau: float = 0.0
    epsilon_list: list = field(default_factory=lambda: [0.125, 0.0625, 0.03125])
    h_rule: dict = field(default_factory=lambda: {"kind": "eps_over", "value": 16.0})
    rotation_theta: float = 0.0
    gamma_profile: dict = field(default_factory=lambda: {"breakpoints": None, "values": [0.0]})
    domain: dict = field(default_factory=lambda: {"x_min": 0.0, "x_max": 1.0,
                                                  "y_min": 0.0, "y_max": 1.0})
    builder: str = "recovery_e1"
    outputs: OutputConfig = field(default_factory=OutputConfig)
    tolerances: dict = field(default_factory=lambda: {"membership": 1e-9})
    matrices: list = field(default_factory=lambda: [[[1.0, 0.0], [0.0, 1.0]]])
    cell: CellConfig = field(default_factory=CellConfig)
    rigidity: RigidityConfig = field(default_factory=RigidityConfig)
    seed: int = 0

    # derived objects -------------------------------------------------------

    @property
    def sys(self):
        return make_slip_system(self.slip)

    @property
    def rotation(self) -> Rotation:
        return Rotation(float(self.rotation_theta))

    @property
    def rect(self) -> RectDomain:
        return RectDomain(**{k: float(v) for k, v in self.domain.items()})

    @property
    def profile(self) -> GammaProfile:
        dom = self.rect
        values = list(self.gamma_profile.get("values", []))
        bp = self.gamma_profile.get("breakpoints")
        if bp is None:
            if len(values) != 1:
                raise ConfigError("gamma_profile", "breakpoints are required for several values")
            bp = [dom.y_min, dom.y_max]
        return GammaProfile(tuple(bp), tuple(values))

    @property
    def hrule(self) -> HRule:
        return HRule(self.h_rule.get("kind", "eps_over"), float(self.h_rule.get("value", 0.0)))

    @property
    def tol(self) -> float:
        return float(self.tolerances.get("membership", 1e-9))

    # validation ------------------------------------------------------------

    def validate(self) -> "RunConfig":
        """Raise :class:`ConfigError` naming the first violated precondition."""
        try:
            s = make_slip_system(self.slip)
        except (ValueError, TypeError) as exc:
            raise ConfigError("slip_nonzero", str(exc)) from None
        if not (0.0 < self.lam < 1.0):
            raise ConfigError("lambda_range", f"lambda must lie in (0, 1), got {self.lam}")
        if not self.epsilon_list:
            raise ConfigError("epsilon_list_empty", "epsilon_list must not be empty")
        for e in self.epsilon_list:
            if not e > 0:
                raise ConfigError("epsilon_positive", f"epsilon must be positive, got {e}")
        if any(b >= a for a, b in zip(self.epsilon_list, self.epsilon_list[1:])):
            raise ConfigError("epsilon_decreasing", "epsilon_list must be strictly decreasing")
        if self.tau < 0:
            raise ConfigError("tau_nonnegative", f"tau must be non-negative, got {self.tau}")
        if self.tau > 0 and not s.is_e1:
            raise ConfigError("tau_requires_e1", "tau > 0 is only supported for slip s = e1")
        if self.builder not in BUILDERS:
            raise ConfigError("builder", f"unknown builder {self.builder!r}")
        try:
            self.hrule
        except ValueError as exc:
            raise ConfigError("h_rule", str(exc)) from None
        try:
            dom = self.rect
        except (ValueError, TypeError) as exc:
            raise ConfigError("domain", str(exc)) from None
        try:
            prof = self.profile
            prof.check_spans(dom)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError("gamma_profile", str(exc)) from None
        if not s.is_e1:
            K = k_interval(s, self.lam)
            for g in prof.values:
                if not K.contains(g, 1e-12):
                    raise ConfigError("gamma_in_K", f"gamma={g} outside [{K.lo}, {K.hi}]")
        if not self.tol > 0:
            raise ConfigError("tolerance_positive", "membership tolerance must be positive")
        for M in self.matrices:
            if len(M) != 2 or any(len(r) != 2 for r in M):
                raise ConfigError("matrices", "each matrix must be a 2x2 nested list")
        if self.cell.n_soft_bands < 1:
            raise ConfigError("n_soft_bands", "n_soft_bands must be at least 1")
        if self.rigidity.n_grid < 2:
            raise ConfigError("n_grid", "n_grid must be at least 2")
        return self

    # (de)serialization -------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError("unknown_key", f"unknown config keys {unknown}")
        sub = {"outputs": OutputConfig, "cell": CellConfig, "rigidity": RigidityConfig}
        for key, klass in sub.items():
            if key in data:
                extra = sorted(set(data[key]) - {f.name for f in fields(klass)})
                if extra:
                    raise ConfigError("unknown_key", f"unknown keys in {key}: {extra}")
                data[key] = klass(**data[key])
        if "slip" in data:
            data["slip"] = tuple(data["slip"])
        if "outputs" in data:
            data["outputs"].resolution = tuple(data["outputs"].resolution)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError("schema", str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError("config_file", str(exc)) from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config_syntax", str(exc)) from None
        if not isinstance(data, dict):
            raise ConfigError("schema", "top level of the config must be an object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["slip"] = list(d["slip"])
        d["outputs"]["resolution"] = list(d["outputs"]["resolution"])
        return d
