"""Benchmark nonlinear systems with analytic Jacobian rows.

``singular-broyden``
    Square of the Broyden tridiagonal residual,
    ``g_k = (3 - 2 x_k) x_k - x_{k-1} - 2 x_{k+1} + 1`` (missing neighbours
    dropped at the ends); the Jacobian vanishes at every root. Start: -0.5.
``broyden-tridiagonal``
    ``g_k`` itself.
``h-equation``
    Chandrasekhar H-equation
    ``f_i = x_i - 1 / (1 - (c/2n) sum_j mu_i x_j / (mu_i + mu_j))`` with
    ``mu_i = (i - 1/2)/n``. Start: 0.
``h-equation-affine``
    The affine variant ``f_i = x_i - (1 - (c/2n) sum_j ...)``.
``nondquar``
    ``f_k = (0.5 x_k - 3) x_k + x_{k-1} + x_{k+1} - 1``. Start: -0.5.

``singular-broyden`` and ``h-equation`` are the classical benchmark forms; the
other two are kept for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Problem


class SingularBroyden(Problem):
    name = "singular-broyden"

    def __init__(self, n: int, squared: bool = True):
        if n < 2:
            raise ValueError("n must be at least 2")
        super().__init__(n, n)
        self.squared = squared
        if not squared:
            self.name = "broyden-tridiagonal"

    def _inner(self, x):
        g = (3.0 - 2.0 * x) * x
        g[1:] -= x[:-1]
        g[:-1] -= 2.0 * x[1:]
        g += 1.0
        return g

    def _inner_component(self, i, x):
        g = (3.0 - 2.0 * x[i]) * x[i]
        if i > 0:
            g = g - x[i - 1]
        if i < self.n - 1:
            g = g - 2.0 * x[i + 1]
        return g + 1.0

    def residual(self, x):
        g = self._inner(np.asarray(x, dtype=np.float64))
        return g * g if self.squared else g

    def residual_component(self, i, x):
        g = self._inner_component(i, np.asarray(x, dtype=np.float64))
        return float(g * g if self.squared else g)

    def jacobian_row(self, i, x):
        x = np.asarray(x, dtype=np.float64)
        n = self.n
        idx = [i]
        val = [3.0 - 4.0 * x[i]]
        if i > 0:
            idx.insert(0, i - 1)
            val.insert(0, -1.0)
        if i < n - 1:
            idx.append(i + 1)
            val.append(-2.0)
        val = np.array(val)
        if self.squared:
            val = 2.0 * self._inner_component(i, x) * val
        return np.array(idx, dtype=np.intp), val

    def initial_point(self):
        return np.full(self.n, -0.5)


class HEquation(Problem):
    name = "h-equation"

    def __init__(self, n: int, c: float = 0.9, reciprocal: bool = True):
        if n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 < c < 1.0:
            raise ValueError("c must lie in (0, 1)")
        super().__init__(n, n)
        self.c = float(c)
        self.reciprocal = reciprocal
        if not reciprocal:
            self.name = "h-equation-affine"
        self.mu = (np.arange(1, n + 1) - 0.5) / n
        self.kernel = self.mu[:, None] / (self.mu[:, None] + self.mu[None, :])
        self.scale = self.c / (2.0 * n)

    # cumsum accumulates left to right, identically for one row or all rows
    def _sums(self, x):
        return np.cumsum(self.kernel * x[None, :], axis=1)[:, -1]

    def _sum(self, i, x):
        return np.cumsum(self.kernel[i] * x)[-1]

    def residual(self, x):
        x = np.asarray(x, dtype=np.float64)
        inner = 1.0 - self.scale * self._sums(x)
        if self.reciprocal:
            return x - 1.0 / inner
        return x - inner

    def residual_component(self, i, x):
        x = np.asarray(x, dtype=np.float64)
        inner = 1.0 - self.scale * self._sum(i, x)
        if self.reciprocal:
            return float(x[i] - 1.0 / inner)
        return float(x[i] - inner)

    def jacobian_row(self, i, x):
        x = np.asarray(x, dtype=np.float64)
        if self.reciprocal:
            inner = 1.0 - self.scale * self._sum(i, x)
            val = -(self.scale / (inner * inner)) * self.kernel[i]
        else:
            val = self.scale * self.kernel[i]
        val[i] += 1.0
        return np.arange(self.n), val

    def initial_point(self):
        return np.zeros(self.n)


class Nondquar(Problem):
    name = "nondquar"

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("n must be at least 2")
        super().__init__(n, n)

    def residual(self, x):
        x = np.asarray(x, dtype=np.float64)
        f = (0.5 * x - 3.0) * x
        f[1:] += x[:-1]
        f[:-1] += x[1:]
        f -= 1.0
        return f

    def residual_component(self, i, x):
        x = np.asarray(x, dtype=np.float64)
        f = (0.5 * x[i] - 3.0) * x[i]
        if i > 0:
            f = f + x[i - 1]
        if i < self.n - 1:
            f = f + x[i + 1]
        return float(f - 1.0)

    def jacobian_row(self, i, x):
        x = np.asarray(x, dtype=np.float64)
        idx = [i]
        val = [x[i] - 3.0]
        if i > 0:
            idx.insert(0, i - 1)
            val.insert(0, 1.0)
        if i < self.n - 1:
            idx.append(i + 1)
            val.append(1.0)
        return np.array(idx, dtype=np.intp), np.array(val)

    def initial_point(self):
        return np.full(self.n, -0.5)


class LinearSystem(Problem):
    """f(x) = A x - b; handy for checks with a known root."""

    name = "linear"

    def __init__(self, A, b, x0=None):
        A = np.asarray(A, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        super().__init__(*A.shape)
        if b.shape != (self.m,):
            raise ValueError("b must have length m")
        self.A = A
        self.b = b
        self._x0 = np.zeros(self.n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()

    def residual(self, x):
        return np.cumsum(self.A * np.asarray(x)[None, :], axis=1)[:, -1] - self.b

    def residual_component(self, i, x):
        return float(np.cumsum(self.A[i] * np.asarray(x))[-1] - self.b[i])

    def jacobian_row(self, i, x):
        nz = np.flatnonzero(self.A[i])
        return nz, self.A[i, nz].copy()

    def initial_point(self):
        return self._x0.copy()


def make_singular_broyden(n):
    return SingularBroyden(n, squared=True)


def make_broyden_tridiagonal(n):
    return SingularBroyden(n, squared=False)


def make_h_equation(n, c=0.9, reciprocal=True):
    return HEquation(n, c, reciprocal=reciprocal)


def make_nondquar(n):
    return Nondquar(n)


PROBLEMS = {
    "singular-broyden": lambda n, c: make_singular_broyden(n),
    "broyden-tridiagonal": lambda n, c: make_broyden_tridiagonal(n),
    "h-equation": lambda n, c: make_h_equation(n, c),
    "h-equation-affine": lambda n, c: make_h_equation(n, c, reciprocal=False),
    "nondquar": lambda n, c: make_nondquar(n),
}


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    n: int
    c: float = 0.9

    def __post_init__(self):
        if self.name not in PROBLEMS:
            raise ValueError(f"unknown problem {self.name!r}; choose from {sorted(PROBLEMS)}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.name.startswith("h-equation") and not 0.0 < self.c < 1.0:
            raise ValueError("c must lie in (0, 1)")

    def build(self) -> Problem:
        return PROBLEMS[self.name](self.n, self.c)


def make_problem(name, n, c=0.9) -> Problem:
    return BenchmarkSpec(name, n, c).build()
