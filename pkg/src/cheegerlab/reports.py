"""Verification report record shared by the checking engine and the CLI."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

__all__ = ["Verdict", "VerificationReport"]


class Verdict(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one named inequality check.

    ``gap`` is the signed slack of the tight inequality (nonnegative up to
    ``tolerance`` on PASS).  INCONCLUSIVE is reserved for unconverged
    truncations of infinite spaces.
    """

    check: str
    space: str
    inputs: dict
    computed: dict
    verdict: Verdict
    gap: float
    tolerance: float
    notes: str = ""

    def __post_init__(self):
        if self.verdict is Verdict.PASS and not self.gap >= -self.tolerance:
            raise ValueError(
                f"PASS report with gap {self.gap} below -tolerance {-self.tolerance}"
            )
        if self.verdict is Verdict.FAIL and not self.gap < -self.tolerance:
            raise ValueError("FAIL report with gap above -tolerance")

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS


def verdict_from_gap(gap: float, tolerance: float) -> Verdict:
    return Verdict.PASS if gap >= -tolerance else Verdict.FAIL
