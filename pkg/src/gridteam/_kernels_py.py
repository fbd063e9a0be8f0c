"""Pure-Python/numpy kernels. Fallback when the compiled extension is absent.

Semantics here are the reference: the Cython module mirrors them exactly,
including tie-breaking (first index wins on equal scores, BFS expands
neighbors in Up, Down, Left, Right order).
"""
from collections import deque

import numpy as np

# Row/col deltas in Up, Down, Left, Right order; index doubles as parent code.
_DR = (-1, 1, 0, 0)
_DC = (0, 0, -1, 1)


def grid_bfs(blocked, sr, sc):
    """Breadth-first flood from (sr, sc) over free cells.

    Returns (dist, parent): dist is int32 with -1 for unreachable cells,
    parent holds the direction index used to enter each cell (-1 at the
    source and unreached cells).
    """
    h, w = blocked.shape
    dist = np.full((h, w), -1, dtype=np.int32)
    parent = np.full((h, w), -1, dtype=np.int8)
    if blocked[sr, sc]:
        return dist, parent
    dist[sr, sc] = 0
    queue = deque([(sr, sc)])
    while queue:
        r, c = queue.popleft()
        d = dist[r, c] + 1
        for k in range(4):
            nr, nc = r + _DR[k], c + _DC[k]
            if 0 <= nr < h and 0 <= nc < w and not blocked[nr, nc] and dist[nr, nc] < 0:
                dist[nr, nc] = d
                parent[nr, nc] = k
                queue.append((nr, nc))
    return dist, parent


def crf_logz(emissions, trans):
    """Log partition function of a linear-chain scorer (forward recursion)."""
    alpha = emissions[0].astype(np.float64, copy=True)
    for t in range(1, emissions.shape[0]):
        alpha = emissions[t] + _logsumexp_cols(alpha[:, None] + trans)
    return float(_logsumexp(alpha))


def crf_marginals(emissions, trans):
    """Forward-backward. Returns (logz, node_marginals, edge_marginals).

    node_marginals is (T, K); edge_marginals is (T-1, K, K) where entry
    [t, i, j] is p(y_t = i, y_{t+1} = j).
    """
    T, K = emissions.shape
    alpha = np.empty((T, K))
    beta = np.empty((T, K))
    alpha[0] = emissions[0]
    for t in range(1, T):
        alpha[t] = emissions[t] + _logsumexp_cols(alpha[t - 1][:, None] + trans)
    beta[T - 1] = 0.0
    for t in range(T - 2, -1, -1):
        beta[t] = _logsumexp_rows(trans + (emissions[t + 1] + beta[t + 1])[None, :])
    logz = float(_logsumexp(alpha[T - 1]))
    node = np.exp(alpha + beta - logz)
    edge = np.empty((max(T - 1, 0), K, K))
    for t in range(T - 1):
        edge[t] = np.exp(
            alpha[t][:, None] + trans + (emissions[t + 1] + beta[t + 1])[None, :] - logz
        )
    return logz, node, edge


def viterbi(emissions, trans):
    """Most likely label sequence; ties resolve to the lowest label index."""
    T, K = emissions.shape
    score = emissions[0].astype(np.float64, copy=True)
    back = np.zeros((T, K), dtype=np.int32)
    for t in range(1, T):
        cand = score[:, None] + trans
        back[t] = np.argmax(cand, axis=0)  # first index wins ties
        score = emissions[t] + np.max(cand, axis=0)
    path = np.empty(T, dtype=np.int32)
    path[T - 1] = int(np.argmax(score))
    for t in range(T - 2, -1, -1):
        path[t] = back[t + 1, path[t + 1]]
    return path


def _logsumexp(v):
    m = np.max(v)
    return m + np.log(np.sum(np.exp(v - m)))


def _logsumexp_cols(mat):
    m = np.max(mat, axis=0)
    return m + np.log(np.sum(np.exp(mat - m[None, :]), axis=0))


def _logsumexp_rows(mat):
    m = np.max(mat, axis=1)
    return m + np.log(np.sum(np.exp(mat - m[:, None]), axis=1))
