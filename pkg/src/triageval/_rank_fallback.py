"""Vectorized numpy implementation of the placement-value kernel.

This is the pure-Python lane; ``triageval.ranking`` selects it when the
compiled extension is unavailable or disabled. Both lanes must produce
bit-identical placement arrays: each placement is a pair of integer tie
counts combined and divided exactly once, so there is no room for
reassociation drift.
"""

import numpy as np


def placement_values(scores, labels):
    """Per-subject placement values of a score vector against binary labels.

    For positive subject i, ``v_pos[i]`` is the fraction of negatives scored
    strictly below i, crediting ties one half. Symmetrically ``v_neg[j]`` is
    the fraction of positives scored strictly above negative j, ties one
    half. Outputs keep the subjects' original relative order within each
    class, which is what makes paired covariance estimation possible.

    Runs in O(n log n): one sort inside ``np.unique`` plus linear passes.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=bool)
    uniq, inv = np.unique(scores, return_inverse=True)
    pos_at = np.bincount(inv[labels], minlength=uniq.size)
    neg_at = np.bincount(inv[~labels], minlength=uniq.size)
    n_pos = int(pos_at.sum())
    n_neg = int(neg_at.sum())
    neg_below = np.concatenate(([0], np.cumsum(neg_at)[:-1]))
    pos_above = n_pos - np.cumsum(pos_at)
    inv_pos = inv[labels]
    inv_neg = inv[~labels]
    v_pos = (neg_below[inv_pos] + 0.5 * neg_at[inv_pos]) / n_neg
    v_neg = (pos_above[inv_neg] + 0.5 * pos_at[inv_neg]) / n_pos
    return v_pos, v_neg
