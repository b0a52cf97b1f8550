"""Inner loops of the rank-similarity measures.

Each kernel has a numba implementation and a pure-numpy fallback computing
the same integers.  ``PRIMADKIT_BACKEND=numpy`` forces the fallback; the
default uses numba when it can be imported.  Numba is imported lazily so
commands that never touch these kernels do not pay for it.
"""

from __future__ import annotations

import functools
import os

import numpy as np

_CHUNK = 512


def _requested_backend() -> str:
    value = os.environ.get("PRIMADKIT_BACKEND", "numba").strip().lower()
    if value not in ("numba", "numpy"):
        raise ValueError(f"PRIMADKIT_BACKEND must be 'numba' or 'numpy', not {value!r}")
    return value


@functools.cache
def _numba_kernels():
    try:
        from numba import njit
    except ImportError:
        return None

    @njit(cache=True, nogil=True)
    def count_inversions(perm):
        n = perm.shape[0]
        a = perm.copy()
        buf = np.empty_like(a)
        inv = 0
        width = 1
        while width < n:
            lo = 0
            while lo < n - width:
                mid = lo + width
                hi = min(lo + 2 * width, n)
                i, j, k = lo, mid, lo
                while i < mid and j < hi:
                    if a[i] <= a[j]:
                        buf[k] = a[i]
                        i += 1
                    else:
                        buf[k] = a[j]
                        inv += mid - i
                        j += 1
                    k += 1
                while i < mid:
                    buf[k] = a[i]
                    i += 1
                    k += 1
                while j < hi:
                    buf[k] = a[j]
                    j += 1
                    k += 1
                a[lo:hi] = buf[lo:hi]
                lo += 2 * width
            width *= 2
        return inv

    @njit(cache=True, nogil=True)
    def prefix_overlaps(ids_a, ids_b, n_ids):
        depth = max(ids_a.shape[0], ids_b.shape[0])
        in_a = np.zeros(n_ids, dtype=np.bool_)
        in_b = np.zeros(n_ids, dtype=np.bool_)
        out = np.empty(depth, dtype=np.int64)
        x = 0
        for d in range(depth):
            if d < ids_a.shape[0]:
                u = ids_a[d]
                in_a[u] = True
                if in_b[u]:
                    x += 1
            if d < ids_b.shape[0]:
                v = ids_b[d]
                in_b[v] = True
                if in_a[v]:
                    x += 1
            out[d] = x
        return out

    return count_inversions, prefix_overlaps


def count_inversions_numpy(perm: np.ndarray) -> int:
    perm = np.asarray(perm, dtype=np.int64)
    n = perm.shape[0]
    inv = 0
    for start in range(0, n, _CHUNK):
        block = perm[start : start + _CHUNK]
        later = perm[start:]
        # pairs (i, j) with i in block, j > i, perm[j] < perm[i]
        cmp = block[:, None] > later[None, :]
        cmp &= np.arange(block.shape[0])[:, None] < np.arange(later.shape[0])[None, :]
        inv += int(cmp.sum())
    return inv


def prefix_overlaps_numpy(ids_a: np.ndarray, ids_b: np.ndarray, n_ids: int) -> np.ndarray:
    depth = max(len(ids_a), len(ids_b))
    sentinel = depth + 1
    pos_a = np.full(n_ids, sentinel, dtype=np.int64)
    pos_b = np.full(n_ids, sentinel, dtype=np.int64)
    pos_a[ids_a] = np.arange(len(ids_a))
    pos_b[ids_b] = np.arange(len(ids_b))
    # a shared document enters the overlap at depth max(pos_a, pos_b) + 1
    joined = np.maximum(pos_a, pos_b)
    joined = joined[joined < sentinel]
    counts = np.bincount(joined, minlength=depth)
    return np.cumsum(counts[:depth]).astype(np.int64)


def backend() -> str:
    """Name of the backend the dispatching kernels will use."""
    if _requested_backend() == "numba" and _numba_kernels() is not None:
        return "numba"
    return "numpy"


def count_inversions(perm) -> int:
    """Number of pairs i < j with perm[i] > perm[j]."""
    perm = np.ascontiguousarray(perm, dtype=np.int64)
    if backend() == "numba":
        return int(_numba_kernels()[0](perm))
    return count_inversions_numpy(perm)


def prefix_overlaps(ids_a, ids_b, n_ids: int) -> np.ndarray:
    """Size of the overlap of the two depth-d prefixes, for d = 1 .. max length.

    ``ids_a`` / ``ids_b`` are duplicate-free integer ids in ``range(n_ids)``.
    A list shorter than d contributes all of its items.
    """
    ids_a = np.ascontiguousarray(ids_a, dtype=np.int64)
    ids_b = np.ascontiguousarray(ids_b, dtype=np.int64)
    if backend() == "numba":
        return _numba_kernels()[1](ids_a, ids_b, n_ids)
    return prefix_overlaps_numpy(ids_a, ids_b, n_ids)


def warmup() -> None:
    """Trigger JIT compilation so later timings exclude it."""
    count_inversions(np.array([1, 0], dtype=np.int64))
    prefix_overlaps(np.array([0, 1]), np.array([1, 0]), 2)
