"""Numerical checkers for the scalar sequence and Young-type inequalities
that back the rate analysis. Each checker verifies its hypothesis first
and reports an inapplicable case distinctly from a conclusion failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence


class CheckOutcome(Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INAPPLICABLE = "inapplicable"

    def __bool__(self):
        return self is CheckOutcome.HOLDS


@dataclass(frozen=True)
class SequenceCase:
    """b_0 = 0, b_k > 0 afterwards, plus the exponents of the target branch."""
    b: Sequence[float]
    rho: float = 1.0
    C: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        if not self.b or self.b[0] != 0.0:
            raise ValueError("sequence must start at 0")
        if any(v <= 0 for v in self.b[1:]):
            raise ValueError("sequence must be positive after the start")


_SLACK = 1e-9


def check_seq_lemma_1(case: SequenceCase) -> CheckOutcome:
    """(b_k - b_{k-1})^rho >= C b_k^{rho-1} implies b_k >= C (k/rho)^rho."""
    b, rho, C = case.b, case.rho, case.C
    if rho < 1 or C <= 0:
        return CheckOutcome.INAPPLICABLE
    for k in range(1, len(b)):
        diff = b[k] - b[k - 1]
        if diff < 0 or diff ** rho < C * b[k] ** (rho - 1.0) * (1 - _SLACK):
            return CheckOutcome.INAPPLICABLE
    for k in range(1, len(b)):
        if b[k] < C * (k / rho) ** rho * (1 - _SLACK):
            return CheckOutcome.FAILS
    return CheckOutcome.HOLDS


def check_seq_lemma_2(case: SequenceCase) -> CheckOutcome:
    """Bounded partial sums of (b_k^{rho-1} / (b_k - b_{k-1})^rho)^delta
    imply b_k >= C^{-1/delta} (k/rho)^{rho + 1/delta}."""
    b, rho, C, delta = case.b, case.rho, case.C, case.delta
    if rho < 1 or C <= 0 or delta <= 0:
        return CheckOutcome.INAPPLICABLE
    partial = 0.0
    for k in range(1, len(b)):
        diff = b[k] - b[k - 1]
        if diff <= 0:
            return CheckOutcome.INAPPLICABLE
        partial += (b[k] ** (rho - 1.0) / diff ** rho) ** delta
        if partial > C * (1 + _SLACK):
            return CheckOutcome.INAPPLICABLE
    for k in range(1, len(b)):
        bound = C ** (-1.0 / delta) * (k / rho) ** (rho + 1.0 / delta)
        if b[k] < bound * (1 - _SLACK):
            return CheckOutcome.FAILS
    return CheckOutcome.HOLDS


def check_young_type(s: float, t: float, q: float, sigma: float) -> bool:
    """|s t| <= (sigma/q) t^q + ((q-1)/q) sigma^{-1/(q-1)} s^{q/(q-1)}."""
    if s < 0 or t < 0 or q < 2 or sigma <= 0:
        raise ValueError("need s, t >= 0, q >= 2, sigma > 0")
    lhs = abs(s * t)
    rhs = (sigma / q * t ** q
           + (q - 1.0) / q * (1.0 / sigma) ** (1.0 / (q - 1.0))
           * s ** (q / (q - 1.0)))
    return lhs <= rhs * (1 + _SLACK) + 1e-300


def check_bjl(B: Sequence[float], c: float, upsilon: float) -> CheckOutcome:
    """B_k^upsilon >= c sum_{i<=k} B_i implies
    B_k >= ((upsilon-1)/upsilon * c k)^{1/(upsilon-1)}."""
    if c <= 0 or upsilon <= 1:
        return CheckOutcome.INAPPLICABLE
    if any(v <= 0 for v in B):
        return CheckOutcome.INAPPLICABLE
    partial = 0.0
    for k, v in enumerate(B, start=1):
        partial += v
        if v ** upsilon < c * partial * (1 - _SLACK):
            return CheckOutcome.INAPPLICABLE
    for k, v in enumerate(B, start=1):
        bound = ((upsilon - 1.0) / upsilon * c * k) ** (1.0 / (upsilon - 1.0))
        if v < bound * (1 - _SLACK):
            return CheckOutcome.FAILS
    return CheckOutcome.HOLDS
