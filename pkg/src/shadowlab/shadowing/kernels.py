"""Compiled inner loops of the free-space search."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def sweep_block(free, prev):
    """Propagate reachability through a block of rows.

    ``prev`` is the reachable set of the row above, aligned to the block's columns.
    Moves are right, down and diagonal. Returns ``(reach, rows_alive, touched_right_edge)``.
    """
    B, W = free.shape
    reach = np.zeros((B, W), dtype=np.bool_)
    touched = False
    for r in range(B):
        run = False
        alive = False
        for c in range(W):
            if r == 0:
                up = prev[c]
                dg = c > 0 and prev[c - 1]
            else:
                up = reach[r - 1, c]
                dg = c > 0 and reach[r - 1, c - 1]
            if free[r, c] and (run or up or dg):
                reach[r, c] = True
                run = True
                alive = True
            else:
                run = False
        if reach[r, W - 1]:
            touched = True
        if not alive:
            return reach, r, touched
    return reach, B, touched


@njit(cache=True, nogil=True)
def _cell(flat, row_start, row_col0, row_width, i, j):
    c = j - row_col0[i]
    if c < 0 or c >= row_width[i]:
        return False
    return flat[row_start[i] + c]


@njit(cache=True, nogil=True)
def backtrack(flat, row_start, row_col0, row_width, end_col):
    """Walk a reachable path from ``(N-1, end_col)`` back to ``(0, 0)``.

    Returns the first column visited in each row along the path, or an empty array
    if the stored reachability is inconsistent.
    """
    N = row_start.shape[0]
    first = np.empty(N, dtype=np.int64)
    i = N - 1
    j = end_col
    first[i] = j
    while i > 0 or j > 0:
        if i > 0 and j > 0 and _cell(flat, row_start, row_col0, row_width, i - 1, j - 1):
            i -= 1
            j -= 1
        elif i > 0 and _cell(flat, row_start, row_col0, row_width, i - 1, j):
            i -= 1
        elif j > 0 and _cell(flat, row_start, row_col0, row_width, i, j - 1):
            j -= 1
        else:
            return np.empty(0, dtype=np.int64)
        first[i] = j
    return first


@njit(cache=True, nogil=True)
def thin_path(steps, ell, carry):
    """Select fine samples so that the path length between kept samples stays within ``ell``.

    ``steps[k]`` is the distance from fine sample ``k`` to ``k + 1``. Sample 0 is the
    pending sample left over from the previous chunk and ``carry`` the path length
    accumulated since the last kept sample. Returns a keep mask over samples
    ``0..n-1`` and the new carry; sample ``n`` stays pending.
    """
    n = steps.shape[0]
    keep = np.zeros(n, dtype=np.bool_)
    L = carry
    for k in range(n):
        d = steps[k]
        if L > 0.0 and L + d > ell:
            keep[k] = True
            L = 0.0
        L += d
    return keep, L
