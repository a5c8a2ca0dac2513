"""Finite-statistics coincidence counts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRecordError, InvalidArgument


@dataclass(frozen=True)
class NoiseConfig:
    """Counting noise model.

    total_counts_per_setting
        Coincidences collected for each measurement setting.
    car
        Coincidence-to-accidental ratio; ``inf`` disables accidentals.
    subtract_accidentals
        Remove the expected accidental floor when estimating probabilities.
    """

    total_counts_per_setting: int = 2000
    car: float = math.inf
    seed: int = 0
    subtract_accidentals: bool = False

    def __post_init__(self):
        if int(self.total_counts_per_setting) < 1:
            raise InvalidArgument("total_counts_per_setting must be >= 1")
        if not self.car > 0:
            raise InvalidArgument("car must be positive")
        if int(self.seed) < 0:
            raise InvalidArgument("seed must be non-negative")

    def to_dict(self) -> dict:
        return {"total_counts_per_setting": int(self.total_counts_per_setting),
                "car": None if math.isinf(self.car) else float(self.car),
                "seed": int(self.seed), "subtract_accidentals": bool(self.subtract_accidentals)}


@dataclass(frozen=True, eq=False)
class CountsRecord:
    setting_id: str
    cc: np.ndarray
    seed_path: tuple = field(default=())

    def __post_init__(self):
        cc = np.asarray(self.cc, dtype=np.int64)
        if cc.shape != (4, 4) or np.any(cc < 0):
            raise InvalidArgument("cc must be a 4x4 array of non-negative counts")
        object.__setattr__(self, "cc", cc)
        object.__setattr__(self, "seed_path", tuple(int(s) for s in self.seed_path))

    @property
    def cc_total(self) -> int:
        return int(self.cc.sum())

    def to_dict(self) -> dict:
        return {"setting_id": self.setting_id, "cc": self.cc.tolist(),
                "cc_total": self.cc_total, "seed_path": list(self.seed_path)}


def accidental_level(p: np.ndarray, car: float) -> float:
    """Flat accidental rate per cell: total true rate / (16 car)."""
    return 0.0 if math.isinf(car) else float(np.sum(p)) / (16.0 * car)


def add_accidentals(p, car: float = math.inf) -> np.ndarray:
    """Cell probabilities including a uniform accidental floor, renormalized."""
    p = np.asarray(p, dtype=float)
    a = accidental_level(p, car)
    return (p + a) / (np.sum(p) + 16 * a)


def sample_counts(p, cfg: NoiseConfig, setting_id: str = "", stream: tuple = (0, 0)) -> CountsRecord:
    """Draw one multinomial counts record from probability tensor ``p``.

    The generator is seeded from ``cfg.seed`` and ``stream`` (typically
    ``(eval_index, setting_index)``), so every record is reproducible on its
    own regardless of call order.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (4, 4) or np.any(p < -1e-12) or not np.all(np.isfinite(p)):
        raise InvalidArgument("p must be a finite non-negative 4x4 tensor")
    p = np.clip(p, 0.0, None)
    if p.sum() <= 0:
        raise InvalidArgument("probability tensor is identically zero")
    probs = add_accidentals(p, cfg.car).ravel()
    path = (int(cfg.seed),) + tuple(int(s) for s in stream)
    rng = np.random.default_rng(np.random.SeedSequence(path[0], spawn_key=path[1:]))
    cc = rng.multinomial(int(cfg.total_counts_per_setting), probs / probs.sum())
    return CountsRecord(setting_id, cc.reshape(4, 4), path)


def estimate_probabilities(rec: CountsRecord, subtract_accidentals: bool = False,
                           car: float = math.inf) -> np.ndarray:
    """Normalized coincidence frequencies, optionally with the floor removed."""
    total = rec.cc_total
    if total == 0:
        raise EmptyRecordError(f"setting {rec.setting_id!r} has no coincidences")
    p = rec.cc / total
    if subtract_accidentals and not math.isinf(car):
        a = 1.0 / (16.0 * car)
        p = np.clip(p * (1 + 16 * a) - a, 0.0, None)
        p = p / p.sum() if p.sum() > 0 else p
    return p
