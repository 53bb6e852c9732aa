"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The only hot operation is the per-chunk score accumulation: adding a
gathered column of per-position llr values into a (trials x atoms) score
matrix, once per block. The compiled path (covertid._accel, Cython) and the
numpy path perform the same single float64 addition per matrix element per
call, so their outputs are bit-identical; which one runs is decided at
import time. Set COVERTID_NO_ACCEL=1 to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from . import _accel
except ImportError:
    _accel = None

USING_ACCEL = _accel is not None and os.environ.get("COVERTID_NO_ACCEL") != "1"

__all__ = ["accumulate_gather", "USING_ACCEL"]


def _accumulate_gather_numpy(scores: np.ndarray, vals: np.ndarray, cols: np.ndarray) -> None:
    np.add(scores, vals[:, cols], out=scores)


def accumulate_gather(scores: np.ndarray, vals: np.ndarray, cols: np.ndarray) -> None:
    """In place: scores[t, a] += vals[t, cols[a]].

    scores: (trials, atoms) float64 C-contiguous.
    vals:   (trials, columns) float64 C-contiguous.
    cols:   (atoms,) intp, each in [0, columns).
    """
    if USING_ACCEL:
        _accel.accumulate_gather(scores, vals, cols)
    else:
        _accumulate_gather_numpy(scores, vals, cols)
