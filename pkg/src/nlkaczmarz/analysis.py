"""Empirical checks of the convergence theory.

Everything here is sample based: ``xi`` and ``alpha`` are lower bounds for the
domain-wide constants, and ``sigma_min`` is taken at whichever point the caller
supplies (usually the final iterate of a converged run). Validity flags built
from them are therefore heuristic, not certificates.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import EPS, EvaluationError, Problem, dense_row
from .selection import compute_eta
from .solver import StepBreakdown, projection_direction

XI_FLOOR = 1e-12


class EstimationError(ValueError):
    pass


@dataclass
class XiEstimate:
    xi: float
    exceeds_half: int  # (pair, row) ratios above 1/2
    samples: int


def estimate_xi(problem: Problem, point_pairs, floor=XI_FLOOR) -> XiEstimate:
    """Largest tangential-cone ratio seen over the given point pairs.

    For each pair and row the ratio is
    ``|f_i(x1) - f_i(x2) - J_i(x1)(x1 - x2)| / |f_i(x1) - f_i(x2)|``; rows
    whose denominator is below ``floor`` are skipped.
    """
    worst = 0.0
    over = 0
    used = 0
    for x1, x2 in point_pairs:
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        f1 = problem.residual(x1)
        f2 = problem.residual(x2)
        dx = x1 - x2
        for i in range(problem.m):
            den = abs(f1[i] - f2[i])
            if den < floor:
                continue
            idx, val = problem.jacobian_row(i, x1)
            ratio = abs(f1[i] - f2[i] - float(val @ dx[idx])) / den
            used += 1
            if ratio > 0.5:
                over += 1
            worst = max(worst, ratio)
    if used == 0:
        raise EstimationError("every residual difference fell below the floor")
    return XiEstimate(worst, over, used)


def estimate_alpha(problem: Problem, sample_points) -> float:
    """Max squared Jacobian row norm over rows and sample points."""
    alpha = 0.0
    for x in sample_points:
        x = np.asarray(x, dtype=np.float64)
        for i in range(problem.m):
            _, val = problem.jacobian_row(i, x)
            alpha = max(alpha, float(val @ val))
    return alpha


def sigma_min_at(problem: Problem, x) -> float:
    """Smallest nonzero singular value of the dense Jacobian at ``x``.

    Values below ``max(m, n) * eps * sigma_max`` count as zero. Returns 0.0 if
    the Jacobian is numerically zero.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise EvaluationError("non-finite point")
    J = problem.jacobian(x)
    if not np.all(np.isfinite(J)):
        raise EvaluationError("non-finite Jacobian entries")
    s = np.linalg.svd(J, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    keep = s[s > max(J.shape) * EPS * s[0]]
    return float(keep[-1])


def recursion_factor(a1, a2):
    """``p = (a1 + sqrt(a1^2 + 4 a2)) / 2`` and ``gamma = p - a1``."""
    if a2 < 0:
        raise ValueError("a2 must be nonnegative")
    # hypot keeps p == a1 for a2 == 0 even when a1 * a1 would underflow
    p = 0.5 * (a1 + math.hypot(a1, 2.0 * math.sqrt(a2)))
    return p, p - a1


@dataclass
class RateConstants:
    xi: float
    alpha: float
    sigma_min: float
    a1: float
    a2: float
    p: float
    gamma: float
    valid: bool
    omega: float = 0.0
    q: int = 2
    m: int = 1
    rho: float = 1.0
    rule: str = "greedy"

    def to_dict(self):
        keys = ("xi", "alpha", "sigma_min", "a1", "a2", "p", "valid")
        d = asdict(self)
        return {k: d[k] for k in keys}

    def to_json(self):
        return json.dumps(self.to_dict())


def theoretical_constants(xi, alpha, sigma_min, omega, q, m, rho=1.0, rule="greedy") -> RateConstants:
    """Rate constants for the greedy (``rule="greedy"``) or max-residual rule.

    ``a1 = 1 + 3w + 2w^2 - (1 - 2xi + 3w - 4w xi) m^(1-q) [rho] s^2 / (alpha (1+xi)^2)``
    with the ``rho`` factor only for ``rule="maxres"``, and ``a2 = w + 2w^2``.
    """
    if not 0.0 <= xi < 0.5:
        raise ValueError("xi must lie in [0, 1/2)")
    if not 0.0 <= omega < 1.0:
        raise ValueError("omega must lie in [0, 1)")
    if q < 2:
        raise ValueError("q must be at least 2")
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")
    if rule not in ("greedy", "maxres"):
        raise ValueError(f"unknown rule {rule!r}")
    w = float(omega)
    factor = float(m) ** (1 - q) * sigma_min ** 2 / (alpha * (1.0 + xi) ** 2)
    if rule == "maxres":
        factor *= rho
    a1 = 1.0 + 3.0 * w + 2.0 * w * w - (1.0 - 2.0 * xi + 3.0 * w - 4.0 * w * xi) * factor
    a2 = w + 2.0 * w * w
    p, gamma = recursion_factor(a1, a2)
    return RateConstants(xi, alpha, sigma_min, a1, a2, p, gamma, a1 + a2 < 1.0,
                         omega=w, q=q, m=m, rho=rho, rule=rule)


@dataclass
class RecursionCheck:
    hypothesis_holds: bool
    bound_holds: bool
    worst_hypothesis: float  # max relative excess of F_{k+1} over a1 F_k + a2 F_{k-1}
    worst_bound: float  # max relative excess of F_{k+1} over p^k (1 + gamma) F_0

    @property
    def ok(self):
        return self.hypothesis_holds and self.bound_holds


def verify_recursion_bound(F, a1, a2, rtol=0.0) -> RecursionCheck:
    """Check a nonnegative sequence against the two-term recursion and its closed-form bound.

    ``F[0]`` and ``F[1]`` must be equal. Relative excesses are measured against
    the right-hand sides; ``rtol`` is the slack allowed before a check fails.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.size < 2 or F[0] != F[1] or np.any(F < 0):
        raise ValueError("need a nonnegative sequence with F[0] == F[1]")
    p, gamma = recursion_factor(a1, a2)
    worst_h = -np.inf
    worst_b = -np.inf
    for k in range(1, F.size - 1):
        rhs = a1 * F[k] + a2 * F[k - 1]
        worst_h = max(worst_h, _rel_excess(F[k + 1], rhs))
        bound = p ** k * (1.0 + gamma) * F[0]
        worst_b = max(worst_b, _rel_excess(F[k + 1], bound))
    if F.size == 2:
        worst_h = worst_b = 0.0
    return RecursionCheck(worst_h <= rtol, worst_b <= rtol, float(worst_h), float(worst_b))


def _rel_excess(lhs, rhs):
    scale = max(abs(rhs), abs(lhs))
    if scale == 0.0:
        return 0.0
    return (lhs - rhs) / scale


def verify_step_ratio_bound(f_tau, eta, jac_rows, q, alpha, n=None):
    """Check ``||f_tau||_q^(2q) / ||J_tau^T eta||^2 >= |tau|^(1-q) / alpha * ||f_tau||_2^2``.

    Returns ``(holds, slack)`` with slack = left minus right.
    """
    f_tau = np.asarray(f_tau, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if n is None:
        n = max((int(idx.max()) + 1 for idx, _ in jac_rows if len(idx)), default=1)
    d = projection_direction(jac_rows, eta, n)
    denom = float(d @ d)
    if denom == 0.0:
        raise StepBreakdown(-1, denom, float(f_tau @ f_tau))
    lq = float(np.sum(np.abs(f_tau) ** q))
    lhs = lq * lq / denom
    rhs = len(f_tau) ** (1 - q) / alpha * float(f_tau @ f_tau)
    slack = lhs - rhs
    return slack >= 0.0, slack


def ngabk_step(problem: Problem, x, tau):
    """Full-Jacobian form of the q = 2 block step.

    Uses ``eta_hat = -sum_{i in tau} f_i e_i`` of length m and the assembled
    Jacobian, independently of the row-only solver path.
    """
    x = np.asarray(x, dtype=np.float64)
    f = problem.residual(x)
    eta_hat = np.zeros(problem.m)
    eta_hat[tau] = -f[tau]
    J = problem.jacobian(x)
    g = J.T @ eta_hat
    return x - (eta_hat @ f) / (g @ g) * g


def weighted_linearized_residual(problem: Problem, x, x_next, tau, q):
    """``eta^T (J_tau (x_next - x) + f_tau)`` and ``||f_tau||_q^q`` at ``x``."""
    f_tau = problem.residual(x)[tau]
    eta = compute_eta(f_tau, q)
    dx = np.asarray(x_next) - np.asarray(x)
    lin = np.array([dense_row(problem.jacobian_row(int(i), x), problem.n) @ dx for i in tau])
    return float(eta @ (lin + f_tau)), float(np.sum(np.abs(f_tau) ** q))
