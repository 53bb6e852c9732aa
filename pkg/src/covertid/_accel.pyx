# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled score-accumulation kernel.

covertid.kernels falls back to a numpy implementation with the identical
per-element addition order when this module is unavailable.
"""


def accumulate_gather(double[:, ::1] scores, double[:, ::1] vals, Py_ssize_t[::1] cols):
    """scores[t, a] += vals[t, cols[a]] for every trial t and atom a."""
    cdef Py_ssize_t n_trials = scores.shape[0]
    cdef Py_ssize_t n_atoms = scores.shape[1]
    cdef Py_ssize_t n_cols = vals.shape[1]
    cdef Py_ssize_t t, a, c
    for a in range(n_atoms):
        c = cols[a]
        if c < 0 or c >= n_cols:
            raise IndexError("column index out of range")
    with nogil:
        for t in range(n_trials):
            for a in range(n_atoms):
                scores[t, a] += vals[t, cols[a]]
