"""Greedy block nonlinear Kaczmarz iteration with optional heavy-ball momentum.

One engine covers the four methods:

    x_{k+1} = x_k - (eta^T f_tau / ||J_tau^T eta||^2) J_tau^T eta + omega (x_k - x_{k-1})

where tau is chosen either by the greedy delta rule (RBWNK, RBWNK-m) or the
relaxed maximum-residual rule (MRWNK, MRWNK-m), and eta holds the q-weighted
residuals. Only the rows of the Jacobian in tau are ever evaluated.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import EPS, IterationState, Problem, SolveReport, SolverConfig, validate_config
from .selection import compute_delta, compute_eta, select_greedy, select_max_residual


class StepBreakdown(ArithmeticError):
    """The step denominator ||J_tau^T eta||^2 vanished before convergence."""

    def __init__(self, k, denominator, res_norm_sq):
        self.k = k
        self.denominator = denominator
        self.res_norm_sq = res_norm_sq
        super().__init__(f"step denominator {denominator:.3e} at k={k} (||f||^2={res_norm_sq:.3e})")


class DivergenceError(ArithmeticError):
    """The iterate or residual became non-finite."""

    def __init__(self, k, message="non-finite iterate"):
        self.k = k
        super().__init__(f"{message} at k={k}")


@dataclass
class StepInfo:
    """What the solver saw at one step; passed to ``callback`` in :func:`solve`."""

    k: int
    tau: np.ndarray
    f_tau: np.ndarray
    eta: np.ndarray
    rows: list
    direction: np.ndarray
    x_prev: np.ndarray
    x_curr: np.ndarray
    x_next: np.ndarray
    alpha_hat: float


def projection_direction(jac_rows, eta, n):
    """Dense ``sum_j eta_j * row_j`` for sparse rows aligned with ``eta``."""
    d = np.zeros(n)
    for (idx, val), w in zip(jac_rows, eta):
        d[idx] += w * val
    return d


def _breakdown_tolerance(eta, alpha_hat):
    return EPS * float(eta @ eta) * max(1.0, alpha_hat)


def kaczmarz_momentum_step(state: IterationState, tau, eta, f_tau, d, omega,
                           alpha_hat=1.0, momentum=True):
    """Return x_{k+1} for the weighted block projection plus momentum.

    ``momentum=False`` gives the plain projection with no momentum term at all;
    with ``omega == 0`` the two agree exactly.
    """
    denom = float(d @ d)
    if not denom > _breakdown_tolerance(eta, alpha_hat):
        raise StepBreakdown(state.k, denom, state.res_norm_sq)
    x = state.x_curr
    x_next = x - (float(eta @ f_tau) / denom) * d
    if momentum:
        x_next = x_next + omega * (x - state.x_prev)
    return x_next


def _row_norm_sq_max(rows):
    best = 0.0
    for _, val in rows:
        s = float(val @ val)
        if s > best:
            best = s
    return best


def solve(problem: Problem, config: SolverConfig, *, x0=None,
          store_iterates=False, callback: Optional[Callable[[StepInfo], None]] = None) -> SolveReport:
    """Run one of the four methods from ``x0`` (default: the problem's initial point).

    The loop continues while ``||f(x_k)||^2 >= eps`` and fewer than ``max_iter``
    steps have been taken; ``iterations`` counts steps actually taken, and the
    residual tested is always that of the newest iterate.
    """
    validate_config(config)
    method = config.method
    greedy = method.rule == "greedy"
    momentum = method.momentum
    omega = float(config.omega)

    x0 = problem.initial_point() if x0 is None else np.asarray(x0, dtype=np.float64)
    r = np.asarray(problem.residual(x0), dtype=np.float64)
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(r))):
        raise DivergenceError(0, "non-finite starting point")
    state = IterationState.start(x0, r)
    history = [(0, state.res_norm_sq)]
    iterates = [state.x_curr.copy()] if store_iterates else None
    alpha_hat = 0.0
    breakdown = False

    while state.res_norm_sq >= config.eps and state.k < config.max_iter:
        sq = state.residual * state.residual
        if greedy:
            delta = compute_delta(sq, state.res_norm_sq)
            tau = select_greedy(sq, delta, state.res_norm_sq)
        else:
            tau = select_max_residual(sq, config.rho)
        f_tau = state.residual[tau]
        eta = compute_eta(f_tau, config.q)
        rows = problem.jacobian_rows(tau, state.x_curr)
        alpha_hat = max(alpha_hat, _row_norm_sq_max(rows))
        d = projection_direction(rows, eta, problem.n)
        try:
            x_next = kaczmarz_momentum_step(state, tau, eta, f_tau, d, omega,
                                            alpha_hat=alpha_hat, momentum=momentum)
        except StepBreakdown:
            breakdown = True
            break
        if not np.all(np.isfinite(x_next)):
            raise DivergenceError(state.k + 1)
        if callback is not None:
            callback(StepInfo(state.k, tau, f_tau, eta, rows, d,
                              state.x_prev, state.x_curr, x_next, alpha_hat))
        r = np.asarray(problem.residual(x_next), dtype=np.float64)
        if not np.all(np.isfinite(r)):
            raise DivergenceError(state.k + 1, "non-finite residual")
        state = IterationState(k=state.k + 1, x_curr=x_next, x_prev=state.x_curr,
                               residual=r, res_norm_sq=float(r @ r))
        history.append((state.k, state.res_norm_sq))
        if store_iterates:
            iterates.append(x_next.copy())

    return SolveReport(
        converged=state.res_norm_sq < config.eps,
        iterations=state.k,
        final_res_norm_sq=state.res_norm_sq,
        history=history,
        breakdown=breakdown,
        x=state.x_curr,
        iterates=iterates,
    )


def solve_with_timing(problem: Problem, config: SolverConfig, repeats=10, **kwargs) -> SolveReport:
    """Repeat :func:`solve` and attach the mean wall time of the solve loop."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    times = []
    report = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        rep = solve(problem, config, **kwargs)
        times.append(time.perf_counter() - t0)
        if report is None:
            report = rep
        elif rep.iterations != report.iterations or rep.history != report.history:
            raise RuntimeError("non-deterministic solve: repeated runs disagree")
    report.run_times = tuple(times)
    report.wall_time_seconds = float(np.mean(times))
    return report
