"""Independent reference implementations used as test oracles.

Everything here is deliberately naive (pure loops, closed forms, bisection)
and shares no code path with the package kernels it checks.
"""

import math

import numpy as np


def pair_count_auc(scores, labels):
    """Brute-force Mann-Whitney statistic with per-subject placements."""
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    v_pos = []
    for p in pos:
        credit = 0.0
        for q in neg:
            if p > q:
                credit += 1.0
            elif p == q:
                credit += 0.5
        v_pos.append(credit / len(neg))
    v_neg = []
    for q in neg:
        credit = 0.0
        for p in pos:
            if p > q:
                credit += 1.0
            elif p == q:
                credit += 0.5
        v_neg.append(credit / len(pos))
    return math.fsum(v_pos) / len(v_pos), v_pos, v_neg


def pair_count_auc_blocked(scores, labels, block=512):
    """Blockwise pairwise comparison AUC for large n (no sorting, no ranks)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    pos = scores[labels]
    neg = scores[~labels]
    total = 0.0
    for start in range(0, pos.size, block):
        chunk = pos[start:start + block, None]
        total += float(np.sum(chunk > neg[None, :]))
        total += 0.5 * float(np.sum(chunk == neg[None, :]))
    return total / (pos.size * neg.size)


def wilson_interval(successes, trials, z):
    """Closed-form Wilson score interval."""
    p = successes / trials
    n = trials
    center = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = (z / (1 + z * z / n)) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return center - half, center + half


def exact_mcnemar_two_sided(b, c):
    """Two-sided exact binomial(1/2) McNemar p-value by enumeration."""
    n = b + c
    if n == 0:
        return 1.0
    k = min(b, c)
    total = sum(math.comb(n, i) for i in range(k + 1))
    return min(1.0, 2.0 * total / 2.0 ** n)


def chi2_cc_mcnemar(b, c):
    """Continuity-corrected chi-squared McNemar statistic and p-value."""
    d = max(0.0, abs(b - c) - 1.0)
    stat = d * d / (b + c)
    return stat, math.erfc(math.sqrt(stat / 2.0))


def norm_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def bisect_norm_ppf(p, lo=-12.0, hi=12.0, iters=100):
    """Inverse normal CDF by bisection on erfc (independent of the package)."""
    for _ in range(iters):
        mid = (lo + hi) / 2.0
        if norm_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def confusion_by_enumeration(scores, labels, threshold):
    """Direct confusion counts under the score >= threshold rule."""
    tp = fp = tn = fn = 0
    for s, l in zip(scores, labels):
        if s >= threshold:
            if l:
                tp += 1
            else:
                fp += 1
        else:
            if l:
                fn += 1
            else:
                tn += 1
    return tp, fp, tn, fn


def enumerate_operating_points(scores, labels):
    """(threshold, sens, spec, saved, ppv) at every distinct score, descending."""
    out = []
    n = len(scores)
    n_pos = sum(labels)
    n_neg = n - n_pos
    for t in sorted(set(scores), reverse=True):
        tp, fp, tn, fn = confusion_by_enumeration(scores, labels, t)
        ppv = tp / (tp + fp) if tp + fp else None
        out.append((t, tp / n_pos, tn / n_neg, (tn + fn) / n, ppv))
    return out


def prauc_by_enumeration(scores, labels):
    """Anchor-plus-trapezoid PR area computed from direct confusion sweeps."""
    pts = []
    prev_recall = 0.0
    n_pos = sum(labels)
    for t in sorted(set(scores), reverse=True):
        tp, fp, _, _ = confusion_by_enumeration(scores, labels, t)
        recall = tp / n_pos
        if recall > prev_recall:
            pts.append((recall, tp / (tp + fp)))
            prev_recall = recall
    pts = [(0.0, pts[0][1])] + pts
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def random_instance(rng, n_max=50, tie_prob=0.5):
    """Random scores/labels with both classes present and optional tie mass."""
    n = int(rng.integers(2, n_max + 1))
    if rng.random() < tie_prob:
        scores = rng.integers(0, max(2, n // 3), n) / max(2, n // 3)
    else:
        scores = rng.random(n)
    labels = rng.random(n) < rng.uniform(0.1, 0.9)
    if labels.all():
        labels[int(rng.integers(0, n))] = False
    if not labels.any():
        labels[int(rng.integers(0, n))] = True
    return np.asarray(scores, dtype=np.float64), labels
