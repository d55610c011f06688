"""Backend selection for the placement-value kernel.

The compiled extension is preferred when importable; the numpy fallback is
used otherwise. Set ``TRIAGEVAL_DISABLE_EXTENSION=1`` to force the fallback
(used by the benchmark and the kernel equivalence tests).
"""

import os

import numpy as np

from . import _rank_fallback

if os.environ.get("TRIAGEVAL_DISABLE_EXTENSION") == "1":
    _impl = _rank_fallback
    BACKEND = "fallback"
else:
    try:
        from . import _fastrank as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _rank_fallback
        BACKEND = "fallback"


def placement_values(scores, labels):
    """Placement values (v_pos, v_neg); see ``_rank_fallback`` for semantics."""
    return _impl.placement_values(scores, labels)


def auc_and_placements(scores, labels):
    """Mann-Whitney AUC together with the placement vectors it averages."""
    v_pos, v_neg = placement_values(scores, labels)
    return float(np.mean(v_pos)), v_pos, v_neg
