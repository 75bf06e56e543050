"""
Tri-state verdicts and the report types shared by the decision procedures,
the inequality evaluators and the equivalence batteries.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from operator_core import ToleranceConfig, UnitVector

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    HOLDS = 'holds'
    FAILS = 'fails'
    MARGINAL = 'marginal'


class Agreement(str, Enum):
    AGREE = 'agree'
    DISAGREE = 'disagree'
    MARGINAL = 'marginal'


def classify(margin: float, cfg: ToleranceConfig, scale: float = 1.0) -> Verdict:
    """
    Classify a margin whose non-negative values mean the criterion is satisfied.

    holds:    margin >= -decision_margin * s
    marginal: -marginal_band * s <= margin < -decision_margin * s
    fails:    otherwise
    with s = max(1, scale).
    """
    s = max(1.0, abs(float(scale)))
    if not np.isfinite(margin):
        return Verdict.MARGINAL
    if margin >= -cfg.decision_margin * s:
        return Verdict.HOLDS
    if margin >= -cfg.marginal_band * s:
        return Verdict.MARGINAL
    return Verdict.FAILS


def agreement(verdicts: List[Verdict]) -> Agreement:
    """Marginal verdicts are left out; two opposite firm verdicts disagree."""
    firm = {v for v in verdicts if v is not Verdict.MARGINAL}
    if not firm:
        return Agreement.MARGINAL
    if len(firm) > 1:
        return Agreement.DISAGREE
    return Agreement.AGREE


@dataclass
class DecisionCertificate:
    verdict: Verdict
    margin: float
    witness: Optional[UnitVector] = None
    unimodular: Optional[complex] = None
    notes: str = ''

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    def to_dict(self) -> dict:
        return {
            'verdict': self.verdict.value,
            'margin': float(self.margin),
            'witness': None if self.witness is None
            else [[float(z.real), float(z.imag)] for z in self.witness.v],
            'unimodular': None if self.unimodular is None
            else [float(self.unimodular.real), float(self.unimodular.imag)],
            'notes': self.notes,
        }


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    verdict: Verdict
    optimizer_trace: Optional[dict] = None

    @classmethod
    def compare(cls, name: str, lhs: float, rhs: float, cfg: ToleranceConfig,
                optimizer_trace: Optional[dict] = None) -> 'InequalityReport':
        """Report for the claim lhs <= rhs."""
        lhs, rhs = float(lhs), float(rhs)
        slack = rhs - lhs
        verdict = classify(slack, cfg, scale=max(abs(lhs), abs(rhs)))
        if verdict is Verdict.FAILS:
            logger.warning(f"{name}: lhs={lhs:.17g} exceeds rhs={rhs:.17g} (trace={optimizer_trace})")
        return cls(name=name, lhs=lhs, rhs=rhs, slack=slack, verdict=verdict,
                   optimizer_trace=optimizer_trace)

    @classmethod
    def strictly_less(cls, name: str, lhs: float, rhs: float, cfg: ToleranceConfig) -> 'InequalityReport':
        """
        Report for the claim lhs < rhs. Equality fails; a positive gap no larger
        than the decision margin is marginal.
        """
        lhs, rhs = float(lhs), float(rhs)
        slack = rhs - lhs
        tol = cfg.decision_margin * max(1.0, abs(lhs), abs(rhs))
        if not np.isfinite(slack):
            verdict = Verdict.MARGINAL
        elif slack > tol:
            verdict = Verdict.HOLDS
        elif slack > 0.0:
            verdict = Verdict.MARGINAL
        else:
            verdict = Verdict.FAILS
            logger.warning(f"{name}: lhs={lhs:.17g} is not strictly below rhs={rhs:.17g}")
        return cls(name=name, lhs=lhs, rhs=rhs, slack=slack, verdict=verdict)


@dataclass
class Condition:
    label: str
    verdict: Verdict
    margin: float
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    witness: Optional[UnitVector] = None


@dataclass
class EquivalenceBattery:
    name: str
    conditions: List[Condition]
    consistent: Agreement
    details: str = ''
    extras: dict = field(default_factory=dict)

    @classmethod
    def assemble(cls, name: str, conditions: List[Condition], details: str = '',
                 extras: Optional[dict] = None) -> 'EquivalenceBattery':
        consistent = agreement([c.verdict for c in conditions])
        if consistent is Agreement.DISAGREE:
            summary = ', '.join(f"{c.label}={c.verdict.value}({c.margin:.3e})" for c in conditions)
            logger.warning(f"{name}: conditions disagree: {summary}")
        return cls(name=name, conditions=conditions, consistent=consistent,
                   details=details, extras=extras or {})

    def verdict_of(self, label: str) -> Verdict:
        for c in self.conditions:
            if c.label == label:
                return c.verdict
        raise KeyError(label)

    def verdicts(self) -> List[Tuple[str, Verdict]]:
        return [(c.label, c.verdict) for c in self.conditions]

    def all_hold(self) -> bool:
        return all(c.verdict is Verdict.HOLDS for c in self.conditions)

    def all_fail(self) -> bool:
        return all(c.verdict is Verdict.FAILS for c in self.conditions)


def equality_margin(lhs: float, rhs: float) -> float:
    """Margin for an equality claim lhs = rhs: -|lhs - rhs|."""
    return -abs(float(lhs) - float(rhs))
