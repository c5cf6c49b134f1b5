"""Shared types: problems, solver configuration, iteration state and reports."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

EPS = np.finfo(np.float64).eps

# A Jacobian row in sparse form: (column indices, values).
SparseRow = tuple[np.ndarray, np.ndarray]


class EvaluationError(ArithmeticError):
    """A residual or Jacobian evaluation produced a non-finite value."""


class ConfigError(ValueError):
    """Raised by :func:`validate_config` with every violated constraint."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class Method(str, enum.Enum):
    RBWNK = "rbwnk"
    MRWNK = "mrwnk"
    RBWNK_M = "rbwnk-m"
    MRWNK_M = "mrwnk-m"

    @property
    def momentum(self) -> bool:
        return self in (Method.RBWNK_M, Method.MRWNK_M)

    @property
    def rule(self) -> str:
        """``"greedy"`` for the delta-threshold rule, ``"maxres"`` for the rho rule."""
        return "greedy" if self in (Method.RBWNK, Method.RBWNK_M) else "maxres"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown method {value!r}")


class Problem:
    """A nonlinear system f(x) = 0 with m equations in n unknowns.

    Subclasses implement :meth:`residual_component` and :meth:`initial_point`,
    and normally override :meth:`residual` and :meth:`jacobian_row` with
    vectorised or analytic versions. ``residual(x)[i]`` must equal
    ``residual_component(i, x)`` bit for bit.

    Instances are immutable once built, so one problem can be shared by
    concurrent solves.
    """

    name = "problem"

    def __init__(self, m: int, n: int):
        if m < 1 or n < 1:
            raise ValueError("m and n must be positive")
        self.m = int(m)
        self.n = int(n)

    def residual_component(self, i: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def residual(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.residual_component(i, x) for i in range(self.m)], dtype=np.float64)

    def jacobian_row(self, i: int, x: np.ndarray) -> SparseRow:
        return finite_difference_row(self, i, x)

    def jacobian_rows(self, indices, x: np.ndarray) -> list[SparseRow]:
        return [self.jacobian_row(int(i), x) for i in indices]

    def initial_point(self) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """Dense m-by-n Jacobian. Only analysis code calls this."""
        J = np.zeros((self.m, self.n))
        for i in range(self.m):
            idx, val = self.jacobian_row(i, x)
            J[i, idx] = val
        return J

    def __repr__(self):
        return f"{type(self).__name__}(m={self.m}, n={self.n})"


class FunctionProblem(Problem):
    """Problem assembled from plain callables.

    ``component(i, x)`` gives f_i(x). ``row(i, x)`` is optional and must return
    ``(indices, values)``; without it rows come from central differences.
    """

    def __init__(
        self,
        m: int,
        n: int,
        component: Callable[[int, np.ndarray], float],
        x0,
        row: Optional[Callable[[int, np.ndarray], SparseRow]] = None,
        name: str = "function",
    ):
        super().__init__(m, n)
        self._component = component
        self._row = row
        self._x0 = np.asarray(x0, dtype=np.float64).copy()
        if self._x0.shape != (n,):
            raise ValueError(f"x0 must have shape ({n},)")
        self.name = name

    def residual_component(self, i, x):
        return float(self._component(i, x))

    def jacobian_row(self, i, x):
        if self._row is None:
            return finite_difference_row(self, i, x)
        idx, val = self._row(i, x)
        return np.asarray(idx, dtype=np.intp), np.asarray(val, dtype=np.float64)

    def initial_point(self):
        return self._x0.copy()


def dense_row(row: SparseRow, n: int) -> np.ndarray:
    out = np.zeros(n)
    idx, val = row
    np.add.at(out, idx, val)
    return out


def finite_difference_row(problem: Problem, i: int, x, h: Optional[float] = None) -> SparseRow:
    """Central-difference approximation of the i-th Jacobian row.

    With ``h=None`` the step for coordinate j is ``eps**(1/3) * max(1, |x_j|)``;
    a scalar ``h`` is used for every coordinate. Entries that come out exactly
    zero are dropped from the returned sparse row.
    """
    if not 0 <= i < problem.m:
        raise IndexError(f"row {i} out of range for m={problem.m}")
    x = np.asarray(x, dtype=np.float64)
    if h is None:
        steps = EPS ** (1.0 / 3.0) * np.maximum(1.0, np.abs(x))
    else:
        if h <= 0:
            raise ValueError("step size must be positive")
        steps = np.full(problem.n, float(h))
    vals = np.empty(problem.n)
    xp = x.copy()
    for j in range(problem.n):
        hj = steps[j]
        xp[j] = x[j] + hj
        fp = problem.residual_component(i, xp)
        xp[j] = x[j] - hj
        fm = problem.residual_component(i, xp)
        xp[j] = x[j]
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise EvaluationError(f"non-finite residual f_{i} near coordinate {j}")
        vals[j] = (fp - fm) / (2.0 * hj)
    nz = np.flatnonzero(vals)
    return nz, vals[nz]


@dataclass(frozen=True)
class SolverConfig:
    method: Method = Method.MRWNK_M
    q: int = 2
    omega: float = 0.0
    rho: float = 1.0
    eps: float = 1e-6
    max_iter: int = 10000

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))


def validate_config(config: SolverConfig) -> SolverConfig:
    """Return ``config`` unchanged, or raise :class:`ConfigError` listing every violation.

    Momentum methods accept omega = 0 (that is how the reduction to the plain
    methods is checked); the plain methods require omega = 0.
    """
    errors = []
    q = config.q
    if isinstance(q, bool) or not isinstance(q, (int, np.integer)):
        errors.append("q must be an integer")
    elif q < 2:
        errors.append("q below 2")
    if not 0.0 <= config.omega < 1.0:
        errors.append("omega out of range")
    elif not config.method.momentum and config.omega != 0.0:
        errors.append(f"omega must be 0 for {config.method.value}")
    if not 0.0 < config.rho <= 1.0:
        errors.append("rho out of range")
    if not config.eps > 0.0:
        errors.append("eps must be positive")
    if int(config.max_iter) != config.max_iter or config.max_iter < 1:
        errors.append("max_iter must be a positive integer")
    if errors:
        raise ConfigError(errors)
    return config


@dataclass
class IterationState:
    k: int
    x_curr: np.ndarray
    x_prev: np.ndarray
    residual: np.ndarray
    res_norm_sq: float

    @classmethod
    def start(cls, x0: np.ndarray, residual: np.ndarray) -> "IterationState":
        x0 = np.array(x0, dtype=np.float64)
        return cls(k=0, x_curr=x0, x_prev=x0.copy(), residual=residual,
                   res_norm_sq=float(residual @ residual))


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    final_res_norm_sq: float
    history: list = field(default_factory=list)
    wall_time_seconds: float = float("nan")
    breakdown: bool = False
    x: Optional[np.ndarray] = None
    iterates: Optional[list] = None
    run_times: tuple = ()

    @property
    def residual_history(self) -> np.ndarray:
        return np.array([r for _, r in self.history])
