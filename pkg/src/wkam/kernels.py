"""Hot min-plus loops, each with a numba and a numpy implementation.

Conventions shared by every routine here:

* ``cost`` is the one-step transition table of a single time slice, shape
  ``(n, 2*M + 1)``: ``cost[i, m + M]`` is the cost of leaving node ``i`` with a
  displacement of ``m`` nodes (arrival node ``(i + m) % n``).
* minima are taken over displacements in increasing order and over middle
  nodes in increasing index order; the first minimiser wins ties.

The public names dispatch on :data:`wkam._accel.USE_NUMBA`; the ``*_numba`` and
``*_numpy`` variants are importable for benchmarking and cross-checking.
"""

import numpy as np

from ._accel import USE_NUMBA, njit, prange

# ---------------------------------------------------------------- numba path


@njit(parallel=True)
def push_rows_numba(U, cost, M):
    r, n = U.shape
    costT = cost.T.copy()  # (2M+1, n): contiguous along the source node
    out = np.empty((r, n))
    arg = np.empty((r, n), dtype=np.int64)
    for a in prange(r):
        for j in range(n):
            out[a, j] = np.inf
            arg[a, j] = 0
        for mi in range(2 * M + 1):
            m = mi - M
            for j in range(n):
                i = j - m
                if i < 0:
                    i += n
                elif i >= n:
                    i -= n
                c = U[a, i] + costT[mi, i]
                if c < out[a, j]:
                    out[a, j] = c
                    arg[a, j] = mi
    return out, arg


@njit(parallel=True)
def pull_rows_numba(X, cost, M):
    n, r = X.shape
    out = np.empty((n, r))
    arg = np.empty((n, r), dtype=np.int64)
    for i in prange(n):
        for c in range(r):
            out[i, c] = np.inf
            arg[i, c] = 0
        for mi in range(2 * M + 1):
            k = (i + mi - M) % n
            w = cost[i, mi]
            for c in range(r):
                v = w + X[k, c]
                if v < out[i, c]:
                    out[i, c] = v
                    arg[i, c] = mi
    return out, arg


@njit(parallel=True)
def minplus_matmul_numba(A, B):
    n, p = A.shape
    m = B.shape[1]
    C = np.empty((n, m))
    for i in prange(n):
        row = np.full(m, np.inf)
        for k in range(p):
            a = A[i, k]
            for j in range(m):
                v = a + B[k, j]
                if v < row[j]:
                    row[j] = v
        C[i, :] = row
    return C


@njit
def _vecmat_numba(d, K):
    n, m = K.shape
    out = np.full(m, np.inf)
    for i in range(n):
        di = d[i]
        for j in range(m):
            v = di + K[i, j]
            if v < out[j]:
                out[j] = v
    return out


@njit
def karp_table_numba(K):
    n = K.shape[0]
    D = np.empty((n + 1, n))
    D[0, :] = 0.0
    for k in range(n):
        D[k + 1, :] = _vecmat_numba(D[k], K)
    return D


@njit(parallel=True)
def via_mask_numba(Hin, Hout, Hm):
    a, n = Hin.shape
    c = Hout.shape[1]
    out = np.empty(n)
    for j in prange(n):
        best = np.inf
        for x in range(a):
            hx = Hin[x, j]
            for z in range(c):
                v = (hx + Hout[j, z]) - Hm[x, z]
                if v < best:
                    best = v
        out[j] = best
    return out


# ---------------------------------------------------------------- numpy path


def _disp_index(n, M, sign):
    m = np.arange(-M, M + 1)
    return (np.arange(n)[:, None] + sign * m[None, :]) % n


def push_rows_numpy(U, cost, M):
    n = U.shape[1]
    idx = _disp_index(n, M, -1)
    cols = np.arange(2 * M + 1)[None, :]
    vals = U[:, idx] + cost[idx, cols]
    arg = np.argmin(vals, axis=2)
    out = np.take_along_axis(vals, arg[:, :, None], axis=2)[:, :, 0]
    return out, arg


def pull_rows_numpy(X, cost, M):
    n = X.shape[0]
    idx = _disp_index(n, M, +1)
    vals = cost[:, :, None] + X[idx, :]
    arg = np.argmin(vals, axis=1)
    out = np.take_along_axis(vals, arg[:, None, :], axis=1)[:, 0, :]
    return out, arg


def minplus_matmul_numpy(A, B):
    C = np.empty((A.shape[0], B.shape[1]))
    for i in range(A.shape[0]):
        C[i] = np.min(A[i][:, None] + B, axis=0)
    return C


def karp_table_numpy(K):
    n = K.shape[0]
    D = np.empty((n + 1, n))
    D[0] = 0.0
    for k in range(n):
        D[k + 1] = np.min(D[k][:, None] + K, axis=0)
    return D


def via_mask_numpy(Hin, Hout, Hm):
    out = np.full(Hin.shape[1], np.inf)
    for x in range(Hin.shape[0]):
        v = (Hin[x][:, None] + Hout) - Hm[x][None, :]
        out = np.minimum(out, np.min(v, axis=1))
    return out


# ---------------------------------------------------------------- dispatch


def push_rows(U, cost, M):
    """Apply one backward min-plus step to every row of ``U``.

    ``out[a, j] = min_m U[a, j - m] + cost[j - m, m]``; also returns the
    displacement index (``m + M``) of each minimiser.
    """
    U = np.ascontiguousarray(U, dtype=float)
    cost = np.ascontiguousarray(cost, dtype=float)
    if USE_NUMBA:
        return push_rows_numba(U, cost, int(M))
    return push_rows_numpy(U, cost, int(M))


def pull_rows(X, cost, M):
    """Left-multiply ``X`` by the one-step matrix: ``out[i] = min_m cost[i, m] + X[i + m]``."""
    X = np.ascontiguousarray(X, dtype=float)
    cost = np.ascontiguousarray(cost, dtype=float)
    if USE_NUMBA:
        return pull_rows_numba(X, cost, int(M))
    return pull_rows_numpy(X, cost, int(M))


def minplus_matmul(A, B):
    """Dense min-plus product ``C[i, j] = min_k A[i, k] + B[k, j]``."""
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    if USE_NUMBA:
        return minplus_matmul_numba(A, B)
    return minplus_matmul_numpy(A, B)


def minplus_vecmat(u, K):
    """``out[j] = min_i u[i] + K[i, j]``."""
    u = np.ascontiguousarray(u, dtype=float)
    K = np.ascontiguousarray(K, dtype=float)
    if USE_NUMBA:
        return _vecmat_numba(u, K)
    return np.min(u[:, None] + K, axis=0)


def karp_table(K):
    """Walk-weight table of Karp's algorithm from a zero-cost virtual source.

    Row ``k`` holds the minimal weight of a ``k``-edge walk ending at each node.
    """
    K = np.ascontiguousarray(K, dtype=float)
    if USE_NUMBA:
        return karp_table_numba(K)
    return karp_table_numpy(K)


def via_mask(Hin, Hout, Hm):
    """``out[j] = min_{x, z} Hin[x, j] + Hout[j, z] - Hm[x, z]`` (second-barrier reduction)."""
    Hin = np.ascontiguousarray(Hin, dtype=float)
    Hout = np.ascontiguousarray(Hout, dtype=float)
    Hm = np.ascontiguousarray(Hm, dtype=float)
    if USE_NUMBA:
        return via_mask_numba(Hin, Hout, Hm)
    return via_mask_numpy(Hin, Hout, Hm)
