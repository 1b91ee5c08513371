"""Naive reference arithmetic used to cross-check the scoring code.

Written with plain loops and no shared helpers so that a bug in the
package cannot leak into its own oracle.
"""

import math


def diversity_oracle(nr_authors, nr_msgid):
    # geometric mean via exp/log instead of sqrt of the product
    return 10.0 * math.exp(0.5 * (math.log(nr_authors) + math.log(nr_msgid)))


def wcs_oracle(match, confidence):
    if match == 0:
        return 0.0
    return confidence / 100.0


def rationale_oracle(cells, tau=0):
    """cells[x][j] = (match, confidence) for issue x and criterion j."""
    if len(cells) == 0:
        return 0.0
    total = 0.0
    for issue in cells:
        s = 0.0
        for match, conf in issue:
            if conf < tau:
                match = 0
            s += wcs_oracle(match, conf)
        total += s / len(issue)
    return total / len(cells)


def rationale_best_issue_oracle(cells, tau=0):
    best = 0.0
    for issue in cells:
        s = 0.0
        for match, conf in issue:
            if conf < tau:
                match = 0
            s += wcs_oracle(match, conf)
        best = max(best, s / len(issue))
    return best


def gcs_oracle(tensor, tau=0):
    """tensor[n][k] = cells of one rationale."""
    best = -1.0
    for run in tensor:
        acc = 0.0
        for cells in run:
            acc += rationale_oracle(cells, tau)
        best = max(best, acc / len(run))
    return best


def h_gcs_oracle(tensor, tau=0):
    best = -1.0
    for run in tensor:
        acc = 0.0
        for cells in run:
            acc += rationale_best_issue_oracle(cells, tau)
        best = max(best, acc / len(run))
    return best


def kappa_oracle(human, verifier):
    n = len(human)
    tp = fp = fn = tn = 0
    for h, v in zip(human, verifier):
        if h and v:
            tp += 1
        elif v and not h:
            fp += 1
        elif h and not v:
            fn += 1
        else:
            tn += 1
    p_o = (tp + tn) / n
    p_yes = ((tp + fn) / n) * ((tp + fp) / n)
    p_no = ((tn + fp) / n) * ((tn + fn) / n)
    p_e = p_yes + p_no
    return (p_o - p_e) / (1 - p_e)
