"""Tridiagonal systems and Thomas elimination."""
from __future__ import annotations

import numpy as np


class SingularSystemError(ArithmeticError):
    pass


class TridiagonalSystem:
    """Matrix with sub-diagonal ``lower``, diagonal ``diag``, super-diagonal ``upper``.

    ``lower[i]`` sits in row ``i + 1``, ``upper[i]`` in row ``i``; both have
    length ``len(diag) - 1``.  The forward sweep is computed once so repeated
    solves with the same matrix cost one substitution pass each.
    """

    def __init__(self, lower, diag, upper):
        self.lower = np.asarray(lower, dtype=float).copy()
        self.diag = np.asarray(diag, dtype=float).copy()
        self.upper = np.asarray(upper, dtype=float).copy()
        n = len(self.diag)
        if len(self.lower) != n - 1 or len(self.upper) != n - 1:
            raise ValueError("off-diagonals must have length len(diag) - 1")
        self._factorize()

    @property
    def size(self) -> int:
        return len(self.diag)

    def _factorize(self):
        n = self.size
        pivots = np.empty(n)
        mult = np.empty(max(n - 1, 0))
        pivots[0] = self.diag[0]
        for i in range(1, n):
            if pivots[i - 1] == 0.0:
                raise SingularSystemError(f"zero pivot in row {i - 1}")
            mult[i - 1] = self.lower[i - 1] / pivots[i - 1]
            pivots[i] = self.diag[i] - mult[i - 1] * self.upper[i - 1]
        if pivots[-1] == 0.0:
            raise SingularSystemError(f"zero pivot in row {n - 1}")
        self._pivots = pivots
        self._mult = mult

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        n = self.size
        if rhs.shape != (n,):
            raise ValueError(f"rhs has shape {rhs.shape}, expected ({n},)")
        y = rhs.tolist()
        mult = self._mult.tolist()
        piv = self._pivots.tolist()
        up = self.upper.tolist()
        for i in range(1, n):
            y[i] -= mult[i - 1] * y[i - 1]
        x = [0.0] * n
        x[-1] = y[-1] / piv[-1]
        for i in range(n - 2, -1, -1):
            x[i] = (y[i] - up[i] * x[i + 1]) / piv[i]
        return np.array(x)

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        out = self.diag * x
        out[:-1] += self.upper * x[1:]
        out[1:] += self.lower * x[:-1]
        return out

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.lower, self.upper))


def tridiagonal_solve(system: TridiagonalSystem, rhs):
    return system.solve(rhs)
