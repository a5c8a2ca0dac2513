"""Expectation values of weighted Pauli observables, exact or from counts."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .counts import CountsRecord, NoiseConfig, estimate_probabilities, sample_counts
from .errors import NumericalError
from .observables import CommutingGroup, WeightedObservable, group_commuting
from .state import MeasurementSetting, TwoQuquartState, probability_tensor


@dataclass(frozen=True, eq=False)
class PlannedSetting:
    """One measured setting: which terms it serves and their outcome functions."""

    setting_id: str
    setting: MeasurementSetting
    members: tuple[int, ...]
    eig: np.ndarray  # (len(members), 4, 4)


@dataclass(eq=False)
class CostEvaluation:
    value: float
    std_err: float
    records: list[CountsRecord] = field(default_factory=list)
    n_settings_used: int = 0

    def to_dict(self) -> dict:
        return {"value": self.value, "std_err": self.std_err,
                "n_settings_used": self.n_settings_used,
                "records": [r.to_dict() for r in self.records]}


def measurement_plan(obs: WeightedObservable,
                     groups: Sequence[CommutingGroup] | None = None) -> list[PlannedSetting]:
    groups = group_commuting(obs) if groups is None else groups
    return [PlannedSetting(f"G{k}", g.setting(f"G{k}"), g.members, g.eig)
            for k, g in enumerate(groups)]


def _outcome_function(obs: WeightedObservable, ps: PlannedSetting) -> np.ndarray:
    w = obs.weights[list(ps.members)]
    return np.tensordot(w, ps.eig, axes=1)


def evaluate_exact(obs: WeightedObservable, state: TwoQuquartState,
                   plan: Sequence[PlannedSetting] | None = None) -> CostEvaluation:
    """<H> from exact probability tensors of each setting."""
    plan = measurement_plan(obs) if plan is None else plan
    value = obs.identity_weight
    for ps in plan:
        value += float(np.sum(_outcome_function(obs, ps) * probability_tensor(state, ps.setting)))
    return CostEvaluation(value, 0.0, [], len(plan))


def evaluate_sampled(obs: WeightedObservable, state: TwoQuquartState, cfg: NoiseConfig,
                     eval_index: int = 0,
                     plan: Sequence[PlannedSetting] | None = None) -> CostEvaluation:
    """<H> estimated from multinomial counts, one record per setting.

    The standard error propagates the multinomial variance of each
    setting's outcome function; settings are independent.
    """
    plan = measurement_plan(obs) if plan is None else plan
    value, var, records = obs.identity_weight, 0.0, []
    for j, ps in enumerate(plan):
        rec = sample_counts(probability_tensor(state, ps.setting), cfg, ps.setting_id, (eval_index, j))
        p_hat = estimate_probabilities(rec, cfg.subtract_accidentals, cfg.car)
        f = _outcome_function(obs, ps)
        mean = float(np.sum(f * p_hat))
        value += mean
        var += max(float(np.sum(f ** 2 * p_hat)) - mean ** 2, 0.0) / rec.cc_total
        records.append(rec)
    return CostEvaluation(value, float(np.sqrt(var)), records, len(plan))


def exact_expectation(obs: WeightedObservable, state: TwoQuquartState) -> float:
    """Tr(rho H) with dense matrices; reference path for testing."""
    return float(np.real(np.trace(state.density_matrix() @ obs.dense())))


class CostFunction:
    """Callable mapping variational parameters to a CostEvaluation.

    ``cfg=None`` gives exact evaluation.  Each call gets a fresh
    ``eval_index`` so sampled calls draw independent, reproducible counts.
    The trace holds one JSON-ready dict per call.
    """

    def __init__(self, obs: WeightedObservable, state_of: Callable[[np.ndarray], TwoQuquartState],
                 cfg: NoiseConfig | None = None, plan: Sequence[PlannedSetting] | None = None):
        self.obs, self.state_of, self.cfg = obs, state_of, cfg
        self.plan = measurement_plan(obs) if plan is None else list(plan)
        self.n_calls = 0
        self.trace: list[dict] = []

    def __call__(self, params) -> CostEvaluation:
        params = np.atleast_1d(np.asarray(params, dtype=float))
        if not np.all(np.isfinite(params)):
            raise NumericalError("non-finite variational parameters")
        state = self.state_of(params)
        if self.cfg is None:
            ev = evaluate_exact(self.obs, state, self.plan)
        else:
            ev = evaluate_sampled(self.obs, state, self.cfg, self.n_calls, self.plan)
        if not np.isfinite(ev.value):
            raise NumericalError("cost evaluation returned a non-finite value")
        self.trace.append({"eval_index": self.n_calls, "params": params.tolist(),
                           "value": ev.value, "std_err": ev.std_err,
                           "records": [r.to_dict() for r in ev.records]})
        self.n_calls += 1
        return ev
