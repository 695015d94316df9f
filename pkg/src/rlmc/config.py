"""Flat ``key = value`` experiment configs.

Keys carry dotted section prefixes (``potential.kind``, ``schedule.alpha``,
``grid.eta``). Lists are comma-separated; a dense matrix is written row by row
with ``;`` between rows. ``#`` starts a comment.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .potential import LOGCOSH, QUADRATIC, Potential
from .schedule import CONSTANT, POLYNOMIAL, StepSchedule

EXPERIMENTS = (
    "bias-sweep",
    "ergodicity",
    "decreasing-rate",
    "one-step-order",
    "drift-check",
    "schedule-diag",
    "density-check",
    "moment-check",
)


class ConfigError(ValueError):
    """Invalid configuration; the message names the violated clause."""


def parse_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def load(path) -> dict:
    with open(path) as fh:
        return parse_text(fh.read())


@dataclass
class ExperimentConfig:
    experiment: str
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")

    @classmethod
    def build(cls, experiment: str, values: dict | None = None, defaults: dict | None = None):
        merged = dict(defaults or {})
        merged.update(values or {})
        merged.pop("experiment", None)
        return cls(experiment, merged)

    def has(self, key):
        return key in self.values

    def get_str(self, key, default=None):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return default
        return str(self.values[key])

    def get_float(self, key, default=None) -> float:
        raw = self.get_str(key, None if default is None else str(default))
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None

    def get_int(self, key, default=None) -> int:
        raw = self.get_str(key, None if default is None else str(default))
        try:
            v = float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
        if v != int(v):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
        return int(v)

    def get_floats(self, key, default=None) -> list:
        raw = self.get_str(key, None if default is None else ",".join(map(str, default)))
        try:
            vals = [float(s) for s in raw.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"{key}: expected a comma-separated list, got {raw!r}") from None
        if not vals:
            raise ConfigError(f"{key}: grid must be nonempty")
        return vals

    def get_ints(self, key, default=None) -> list:
        vals = self.get_floats(key, default)
        if any(v != int(v) for v in vals):
            raise ConfigError(f"{key}: expected integers")
        return [int(v) for v in vals]

    def positive_int(self, key, default=None) -> int:
        v = self.get_int(key, default)
        if v <= 0:
            raise ConfigError(f"{key}: count must be positive, got {v}")
        return v

    def seed(self) -> int:
        s = self.get_int("seed", 20240101)
        if not 0 <= s < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return s

    def potential(self) -> Potential:
        kind = self.get_str("potential.kind", QUADRATIC)
        try:
            if kind == QUADRATIC:
                if self.has("potential.matrix"):
                    rows = [r for r in self.get_str("potential.matrix").split(";") if r.strip()]
                    A = np.array([[float(v) for v in r.split(",")] for r in rows])
                else:
                    A = np.array(self.get_floats("potential.diag", [1.0]))
                    dim = self.get_int("potential.dim", len(A))
                    if len(A) == 1 and dim > 1:
                        A = np.full(dim, A[0])
                return Potential.quadratic(A)
            if kind == LOGCOSH:
                return Potential.logcosh_ridge(self.get_float("potential.a", 1.0),
                                               self.get_float("potential.b", 1.0),
                                               self.get_int("potential.dim", 1))
        except ValueError as exc:
            raise ConfigError(f"potential: {exc}") from None
        raise ConfigError(f"potential.kind: unknown kind {kind!r}")

    def schedule(self) -> StepSchedule:
        kind = self.get_str("schedule.kind", CONSTANT)
        try:
            if kind == CONSTANT:
                return StepSchedule.constant(self.get_float("schedule.eta", 0.1))
            if kind == POLYNOMIAL:
                return StepSchedule.polynomial(self.get_float("schedule.c", 2.0),
                                               self.get_float("schedule.alpha", 1.0))
        except ValueError as exc:
            raise ConfigError(f"schedule: {exc}") from None
        raise ConfigError(f"schedule.kind: unknown kind {kind!r}")

    def vector(self, key, dim, default=0.0) -> np.ndarray:
        vals = self.get_floats(key, [default])
        if len(vals) == 1:
            return np.full(dim, vals[0])
        if len(vals) != dim:
            raise ConfigError(f"{key}: expected 1 or {dim} values, got {len(vals)}")
        return np.array(vals)
