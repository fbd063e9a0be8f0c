# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: grid BFS and linear-chain scoring hot loops.

Mirrors _kernels_py exactly (same tie-breaking, same return shapes).
"""
import numpy as np

from libc.math cimport exp, log, INFINITY

cdef int[4] _DR = [-1, 1, 0, 0]
cdef int[4] _DC = [0, 0, -1, 1]


def grid_bfs(unsigned char[:, :] blocked, int sr, int sc):
    h = blocked.shape[0]
    w = blocked.shape[1]
    dist_arr = np.full((h, w), -1, dtype=np.int32)
    parent_arr = np.full((h, w), -1, dtype=np.int8)
    cdef int[:, :] dist = dist_arr
    cdef signed char[:, :] parent = parent_arr
    if blocked[sr, sc]:
        return dist_arr, parent_arr
    queue_arr = np.empty(h * w, dtype=np.int32)
    cdef int[:] queue = queue_arr
    cdef int head = 0, tail = 0
    cdef int r, c, nr, nc, k, d, cur
    cdef int hh = h, ww = w
    dist[sr, sc] = 0
    queue[tail] = sr * ww + sc
    tail += 1
    while head < tail:
        cur = queue[head]
        head += 1
        r = cur // ww
        c = cur % ww
        d = dist[r, c] + 1
        for k in range(4):
            nr = r + _DR[k]
            nc = c + _DC[k]
            if 0 <= nr < hh and 0 <= nc < ww and blocked[nr, nc] == 0 and dist[nr, nc] < 0:
                dist[nr, nc] = d
                parent[nr, nc] = <signed char>k
                queue[tail] = nr * ww + nc
                tail += 1
    return dist_arr, parent_arr


cdef inline double _lse(double[:] v, Py_ssize_t n):
    cdef double m = -INFINITY
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        if v[i] > m:
            m = v[i]
    for i in range(n):
        s += exp(v[i] - m)
    return m + log(s)


def crf_logz(double[:, :] emissions, double[:, :] trans):
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t K = emissions.shape[1]
    alpha_arr = np.empty(K, dtype=np.float64)
    next_arr = np.empty(K, dtype=np.float64)
    work_arr = np.empty(K, dtype=np.float64)
    cdef double[:] alpha = alpha_arr
    cdef double[:] nxt = next_arr
    cdef double[:] work = work_arr
    cdef Py_ssize_t t, i, j
    for j in range(K):
        alpha[j] = emissions[0, j]
    for t in range(1, T):
        for j in range(K):
            for i in range(K):
                work[i] = alpha[i] + trans[i, j]
            nxt[j] = emissions[t, j] + _lse(work, K)
        for j in range(K):
            alpha[j] = nxt[j]
    return float(_lse(alpha, K))


def crf_marginals(double[:, :] emissions, double[:, :] trans):
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t K = emissions.shape[1]
    alpha_arr = np.empty((T, K), dtype=np.float64)
    beta_arr = np.empty((T, K), dtype=np.float64)
    work_arr = np.empty(K, dtype=np.float64)
    cdef double[:, :] alpha = alpha_arr
    cdef double[:, :] beta = beta_arr
    cdef double[:] work = work_arr
    cdef Py_ssize_t t, i, j
    cdef double logz
    for j in range(K):
        alpha[0, j] = emissions[0, j]
    for t in range(1, T):
        for j in range(K):
            for i in range(K):
                work[i] = alpha[t - 1, i] + trans[i, j]
            alpha[t, j] = emissions[t, j] + _lse(work, K)
    for j in range(K):
        beta[T - 1, j] = 0.0
    for t in range(T - 2, -1, -1):
        for i in range(K):
            for j in range(K):
                work[j] = trans[i, j] + emissions[t + 1, j] + beta[t + 1, j]
            beta[t, i] = _lse(work, K)
    for j in range(K):
        work[j] = alpha[T - 1, j]
    logz = _lse(work, K)
    node_arr = np.empty((T, K), dtype=np.float64)
    edge_arr = np.empty((T - 1 if T > 1 else 0, K, K), dtype=np.float64)
    cdef double[:, :] node = node_arr
    cdef double[:, :, :] edge = edge_arr
    for t in range(T):
        for j in range(K):
            node[t, j] = exp(alpha[t, j] + beta[t, j] - logz)
    for t in range(T - 1):
        for i in range(K):
            for j in range(K):
                edge[t, i, j] = exp(
                    alpha[t, i] + trans[i, j] + emissions[t + 1, j] + beta[t + 1, j] - logz
                )
    return float(logz), node_arr, edge_arr


def viterbi(double[:, :] emissions, double[:, :] trans):
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t K = emissions.shape[1]
    score_arr = np.empty(K, dtype=np.float64)
    next_arr = np.empty(K, dtype=np.float64)
    back_arr = np.zeros((T, K), dtype=np.int32)
    path_arr = np.empty(T, dtype=np.int32)
    cdef double[:] score = score_arr
    cdef double[:] nxt = next_arr
    cdef int[:, :] back = back_arr
    cdef int[:] path = path_arr
    cdef Py_ssize_t t, i, j
    cdef double best, cand
    cdef int arg
    for j in range(K):
        score[j] = emissions[0, j]
    for t in range(1, T):
        for j in range(K):
            best = -INFINITY
            arg = 0
            for i in range(K):
                cand = score[i] + trans[i, j]
                if cand > best:  # strict: first index wins ties
                    best = cand
                    arg = <int>i
            back[t, j] = arg
            nxt[j] = emissions[t, j] + best
        for j in range(K):
            score[j] = nxt[j]
    best = -INFINITY
    arg = 0
    for j in range(K):
        if score[j] > best:
            best = score[j]
            arg = <int>j
    path[T - 1] = arg
    for t in range(T - 2, -1, -1):
        path[t] = back[t + 1, path[t + 1]]
    return path_arr
