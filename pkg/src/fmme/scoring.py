"""PHM 2012 challenge error percentage and asymmetric score."""
from __future__ import annotations

import math
from dataclasses import dataclass


def error_percent(act_rul: float, pre_rul: float) -> float:
    """100 * (actual - predicted) / actual; positive means an early prediction."""
    if act_rul == 0:
        raise ValueError("actual RUL must be non-zero")
    return 100.0 * (act_rul - pre_rul) / act_rul


def score_one(err: float) -> float:
    """Exponential score with half-life 5 % for late and 20 % for early predictions."""
    if err <= 0:
        return math.exp(-math.log(0.5) * err / 5.0)
    return math.exp(math.log(0.5) * err / 20.0)


@dataclass(frozen=True)
class BearingScore:
    bearing: str
    act_rul: float
    pre_rul: float
    err_percent: float
    score: float


@dataclass(frozen=True)
class ScoreReport:
    bearings: tuple[BearingScore, ...]
    score: float

    def as_dict(self) -> dict:
        return {
            "bearings": [vars(b) for b in self.bearings],
            "score": self.score,
        }


def score_all(pairs) -> ScoreReport:
    """Score (act, pre) or (bearing, act, pre) tuples and average the scores."""
    rows = []
    for i, p in enumerate(pairs):
        name, act, pre = p if len(p) == 3 else (str(i), *p)
        err = error_percent(act, pre)
        rows.append(BearingScore(name, float(act), float(pre), err, score_one(err)))
    if not rows:
        raise ValueError("score_all needs at least one (act, pre) pair")
    return ScoreReport(tuple(rows), sum(r.score for r in rows) / len(rows))
