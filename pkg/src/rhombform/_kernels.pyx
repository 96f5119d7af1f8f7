# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid kernels: component labelling and hop-distance BFS on dense masks."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef int[8] DX8 = [0, -1, -1, -1, 0, 1, 1, 1]
cdef int[8] DY8 = [1, 1, 0, -1, -1, -1, 0, 1]
cdef int[4] DX4 = [0, -1, 0, 1]
cdef int[4] DY4 = [1, 0, -1, 0]


def label(const unsigned char[:, ::1] mask, unsigned char value, bint corners):
    """Label the connected components of cells equal to ``value``.

    Rows index x, columns index y.  Returns ``(labels, count)`` where cells of
    other values carry -1 and components are numbered in scan order.
    """
    cdef Py_ssize_t w = mask.shape[0], h = mask.shape[1]
    labels_arr = np.full((w, h), -1, dtype=np.int32)
    cdef int[:, ::1] labels = labels_arr
    queue_arr = np.empty(w * h + 1, dtype=np.int64)
    cdef long long[::1] queue = queue_arr
    cdef Py_ssize_t i, j, ci, cj, ni, nj, head, tail, k, nk
    cdef int count = 0
    cdef int *dx
    cdef int *dy
    if corners:
        dx = DX8
        dy = DY8
        nk = 8
    else:
        dx = DX4
        dy = DY4
        nk = 4
    for i in range(w):
        for j in range(h):
            if mask[i, j] != value or labels[i, j] != -1:
                continue
            labels[i, j] = count
            head = 0
            tail = 0
            queue[tail] = i * h + j
            tail += 1
            while head < tail:
                ci = queue[head] // h
                cj = queue[head] % h
                head += 1
                for k in range(nk):
                    ni = ci + dx[k]
                    nj = cj + dy[k]
                    if ni < 0 or nj < 0 or ni >= w or nj >= h:
                        continue
                    if mask[ni, nj] == value and labels[ni, nj] == -1:
                        labels[ni, nj] = count
                        queue[tail] = ni * h + nj
                        tail += 1
            count += 1
    return labels_arr, count


def bfs_distances(const unsigned char[:, ::1] mask, Py_ssize_t si, Py_ssize_t sj):
    """Side-adjacent hop distances from ``(si, sj)`` over nonzero cells; -1 if unreachable."""
    cdef Py_ssize_t w = mask.shape[0], h = mask.shape[1]
    dist_arr = np.full((w, h), -1, dtype=np.int32)
    cdef int[:, ::1] dist = dist_arr
    queue_arr = np.empty(w * h + 1, dtype=np.int64)
    cdef long long[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, ci, cj, ni, nj, k
    if mask[si, sj] == 0:
        return dist_arr
    dist[si, sj] = 0
    queue[tail] = si * h + sj
    tail += 1
    while head < tail:
        ci = queue[head] // h
        cj = queue[head] % h
        head += 1
        for k in range(4):
            ni = ci + DX4[k]
            nj = cj + DY4[k]
            if ni < 0 or nj < 0 or ni >= w or nj >= h:
                continue
            if mask[ni, nj] != 0 and dist[ni, nj] == -1:
                dist[ni, nj] = dist[ci, cj] + 1
                queue[tail] = ni * h + nj
                tail += 1
    return dist_arr
