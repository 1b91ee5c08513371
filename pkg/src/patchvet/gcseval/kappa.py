"""Cohen's kappa between human and verifier binary labels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from patchvet.errors import PatchvetError

Z95 = 1.959963984540054


class UndefinedKappaError(PatchvetError):
    pass


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    ci_low: float
    ci_high: float
    n: int
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def ci95(self) -> tuple[float, float]:
        return self.ci_low, self.ci_high


def kappa_from_confusion(tp: int, fp: int, fn: int, tn: int) -> KappaResult:
    """Human labels are the reference: fp means verifier yes, human no."""
    n = tp + fp + fn + tn
    if n < 2:
        raise ValueError("need at least 2 labelled items")
    p_o = (tp + tn) / n
    p_e = ((tp + fn) * (tp + fp) + (tn + fp) * (tn + fn)) / (n * n)
    if p_e == 1.0:
        raise UndefinedKappaError("chance agreement is 1; kappa undefined for constant labels")
    k = (p_o - p_e) / (1 - p_e)
    se = math.sqrt(p_o * (1 - p_o) / (n * (1 - p_e) ** 2))
    return KappaResult(k, max(-1.0, k - Z95 * se), min(1.0, k + Z95 * se), n, tp, fp, fn, tn)


def cohens_kappa(human: Sequence[int | bool], verifier: Sequence[int | bool]) -> KappaResult:
    if len(human) != len(verifier):
        raise ValueError("label lists differ in length")
    tp = fp = fn = tn = 0
    for h, v in zip(human, verifier):
        h, v = bool(h), bool(v)
        tp += h and v
        fp += v and not h
        fn += h and not v
        tn += not h and not v
    return kappa_from_confusion(tp, fp, fn, tn)
