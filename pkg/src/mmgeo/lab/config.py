"""Experiment configuration files.

A config is a JSON object.  Keys not listed in ``DEFAULTS`` are rejected so
typos surface as errors instead of silently using defaults.

    {
      "experiment": "sphere-convergence",
      "model": {"kind": "sphere"},            # or {"kind": "projective", "field": "C"}
      "radius_rule": {"scale": 1.0, "exponent": 0.5},
      "indices": [10, 100, 800],
      "samples": 2000,
      "identity_samples": 500,
      "trials": 8,
      "projections": [1, 2],
      "case": "sup_overshoot",                  # counterexample experiments only
      "families": [{"name": "notch"}],          # condition-matrix only
      "tolerances": {"observable_final": 0.06},
      "expect": {"observable_decreasing": true},
      "seed": 7
    }

The radius rule is ``r_n = scale * (d n) ** exponent`` where ``d`` is the real
dimension of the scalar field (1 for plain spheres).  With exponent 1/2 the
normalized radius ``r_n / sqrt(d n)`` is constant and equal to ``scale``.
"""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field

from ..errors import ConfigError
from ..models import FIELDS

EXPERIMENTS = ("sphere-convergence", "counterexample", "condition-matrix", "suite")
CASES = ("sup_overshoot", "no_concentration", "escaping_pair", "three_families", "identity_control")
FAMILIES = ("identity", "notch", "late_bump", "late_drop", "chordal")

DEFAULT_TOLERANCES = {
    "identity": 1e-9,
    "observable_final": 0.06,
    "box_ratio": 2.0,
    "obstruction": 0.25,
    "trend": 0.02,
}


@dataclass
class ExperimentConfig:
    experiment: str
    model: dict = field(default_factory=lambda: {"kind": "sphere"})
    radius_rule: dict = field(default_factory=lambda: {"scale": 1.0, "exponent": 0.5})
    indices: list = field(default_factory=lambda: [10, 100, 800])
    samples: int = 2000
    identity_samples: int = 500
    trials: int = 8
    projections: list = field(default_factory=lambda: [1, 2])
    case: str | None = None
    families: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    expect: dict = field(default_factory=dict)
    seed: int | None = None
    name: str | None = None

    def __post_init__(self):
        self.tolerances = {**DEFAULT_TOLERANCES, **(self.tolerances or {})}
        self.validate()

    @property
    def label(self):
        return self.name or (f"{self.experiment}:{self.case}" if self.case else self.experiment)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.experiment in ("sphere-convergence", "counterexample") and not self.indices:
            raise ConfigError("indices must be nonempty")
        if any(int(n) < 1 for n in self.indices) or list(self.indices) != sorted(set(self.indices)):
            raise ConfigError("indices must be positive and strictly increasing")
        if self.experiment == "sphere-convergence":
            kind = self.model.get("kind")
            if kind not in ("sphere", "projective"):
                raise ConfigError("sphere-convergence needs model kind sphere or projective")
            if kind == "projective" and self.model.get("field") not in FIELDS:
                raise ConfigError("projective model needs field R, C or H")
            if float(self.radius_rule.get("scale", 0)) <= 0:
                raise ConfigError("radius_rule.scale must be positive")
            if self.samples < 2 or self.identity_samples < 2 or self.trials < 1:
                raise ConfigError("samples, identity_samples and trials must be positive")
            if any(int(m) < 1 for m in self.projections):
                raise ConfigError("projection dimensions must be positive")
        if self.experiment == "counterexample" and self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case!r}")
        if self.experiment == "condition-matrix":
            if not self.families:
                raise ConfigError("condition-matrix needs a nonempty families list")
            for fam in self.families:
                if fam.get("name") not in FAMILIES:
                    raise ConfigError(f"unknown family {fam.get('name')!r}; builtins are {FAMILIES}")
        for k, v in self.expect.items():
            if not isinstance(v, bool):
                raise ConfigError(f"expectation {k!r} must be true or false")

    @property
    def field_dim(self):
        f = self.model.get("field")
        return FIELDS[f] if f else 1

    def radius(self, n):
        rule = self.radius_rule
        return float(rule.get("scale", 1.0)) * (self.field_dim * n) ** float(rule.get("exponent", 0.5))

    def to_dict(self):
        return copy.deepcopy(asdict(self))

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' key")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


def suite_configs():
    """The configurations run by ``experiment suite``."""
    return [
        ExperimentConfig("sphere-convergence", name="sphere-gaussian-limit"),
        ExperimentConfig("sphere-convergence", name="sphere-levy", radius_rule={"scale": 1.0, "exponent": 0.25},
                         trials=4, projections=[]),
        ExperimentConfig("sphere-convergence", name="projective-C", model={"kind": "projective", "field": "C"},
                         samples=1000, trials=4, projections=[]),
        ExperimentConfig("sphere-convergence", name="projective-H", model={"kind": "projective", "field": "H"},
                         indices=[10, 100], samples=1000, trials=2, projections=[]),
        ExperimentConfig("counterexample", case="sup_overshoot"),
        ExperimentConfig("counterexample", case="no_concentration"),
        ExperimentConfig("counterexample", case="escaping_pair", indices=[1, 2, 4, 8, 16]),
        ExperimentConfig("counterexample", case="three_families"),
        ExperimentConfig("counterexample", case="identity_control"),
        ExperimentConfig("condition-matrix", families=[{"name": n} for n in FAMILIES]),
    ]
