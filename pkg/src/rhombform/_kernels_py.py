"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same signatures and outputs; used when the extension is not built or when
``RHOMBFORM_PURE=1`` is set.
"""
from __future__ import annotations

from collections import deque

import numpy as np

_STEP8 = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))
_STEP4 = ((0, 1), (-1, 0), (0, -1), (1, 0))


def label(mask: np.ndarray, value: int, corners: bool):
    w, h = mask.shape
    grid = mask.tolist()
    labels = [[-1] * h for _ in range(w)]
    steps = _STEP8 if corners else _STEP4
    count = 0
    for i in range(w):
        row = grid[i]
        for j in range(h):
            if row[j] != value or labels[i][j] != -1:
                continue
            labels[i][j] = count
            todo = deque([(i, j)])
            while todo:
                ci, cj = todo.popleft()
                for dx, dy in steps:
                    ni, nj = ci + dx, cj + dy
                    if 0 <= ni < w and 0 <= nj < h and grid[ni][nj] == value and labels[ni][nj] == -1:
                        labels[ni][nj] = count
                        todo.append((ni, nj))
            count += 1
    return np.array(labels, dtype=np.int32).reshape(w, h), count


def bfs_distances(mask: np.ndarray, si: int, sj: int):
    w, h = mask.shape
    grid = mask.tolist()
    dist = [[-1] * h for _ in range(w)]
    if grid[si][sj]:
        dist[si][sj] = 0
        todo = deque([(si, sj)])
        while todo:
            ci, cj = todo.popleft()
            d = dist[ci][cj] + 1
            for dx, dy in _STEP4:
                ni, nj = ci + dx, cj + dy
                if 0 <= ni < w and 0 <= nj < h and grid[ni][nj] and dist[ni][nj] == -1:
                    dist[ni][nj] = d
                    todo.append((ni, nj))
    return np.array(dist, dtype=np.int32).reshape(w, h)
