"""Maintained Cholesky factorization of a principal submatrix under pivots.

The path tracer repeatedly solves systems with ``Q[R, R]`` while single
indices enter and leave the free set R.  Refactorizing costs O(|R|^3) per
pivot; maintaining the lower factor costs O(|R|^2):

* insert: border the factor with one triangular solve and a square root;
* remove: delete the row/column and repair the trailing block with a
  rank-one update (Givens-style, always positive so it cannot fail).

Indices are stored in insertion order; callers index right-hand sides with
:attr:`UpdatableCholesky.indices`.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import NumericalError


def rank_one_update(L, v):
    """In-place update of lower-triangular L so that L L^T gains + v v^T."""
    m = L.shape[0]
    v = v.copy()
    for k in range(m):
        d = L[k, k]
        r = np.hypot(d, v[k])
        c, s = r / d, v[k] / d
        L[k, k] = r
        if k + 1 < m:
            L[k + 1 :, k] = (L[k + 1 :, k] + s * v[k + 1 :]) / c
            v[k + 1 :] = c * v[k + 1 :] - s * L[k + 1 :, k]
    return L


class UpdatableCholesky:
    """Lower Cholesky factor of Q restricted to a dynamic index set."""

    def __init__(self, Q):
        self.Q = Q
        n = Q.shape[0]
        self._L = np.zeros((n, n))
        self._idx = []

    @property
    def indices(self):
        return self._idx

    @property
    def size(self):
        return len(self._idx)

    def L(self):
        m = self.size
        return self._L[:m, :m]

    def insert(self, j):
        m = self.size
        q = self.Q[self._idx, j] if m else np.zeros(0)
        w = solve_triangular(self._L[:m, :m], q, lower=True, check_finite=False) if m else q
        s = self.Q[j, j] - w @ w
        if s <= 0:
            raise NumericalError(f"losing positive definiteness inserting index {j}")
        self._L[m, :m] = w
        self._L[m, m] = np.sqrt(s)
        self._idx.append(j)

    def remove(self, j):
        p = self._idx.index(j)
        m = self.size
        v = self._L[p + 1 : m, p].copy()
        block = self._L[p + 1 : m, p + 1 : m].copy()
        rank_one_update(block, v)
        self._L[p : m - 1, :p] = self._L[p + 1 : m, :p]
        self._L[p : m - 1, p : m - 1] = block
        self._L[m - 1, :m] = 0.0
        self._idx.pop(p)

    def solve(self, b):
        """Solve Q[idx, idx] y = b with b ordered like :attr:`indices`."""
        m = self.size
        if m == 0:
            return np.zeros(0)
        Lm = self._L[:m, :m]
        y = solve_triangular(Lm, b, lower=True, check_finite=False)
        return solve_triangular(Lm.T, y, lower=False, check_finite=False)
