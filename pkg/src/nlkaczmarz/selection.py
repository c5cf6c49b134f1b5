"""Greedy block selection and residual weights.

Index sets are ascending ``intp`` arrays; weight vectors are float arrays
aligned with them.
"""

import numpy as np


class AlreadyConverged(ValueError):
    """Selection was asked for on an exactly zero residual."""


def compute_delta(res_squares, res_norm_sq):
    """Greedy threshold factor ``(max_i f_i^2 / ||f||^2 + 1/m) / 2``."""
    res_squares = np.asarray(res_squares, dtype=np.float64)
    if not res_norm_sq > 0:
        raise AlreadyConverged("residual is zero")
    m = res_squares.size
    return 0.5 * (res_squares.max() / res_norm_sq + 1.0 / m)


def select_greedy(res_squares, delta, res_norm_sq):
    """Rows with ``f_i^2 >= delta * ||f||^2``.

    The threshold never exceeds ``max_i f_i^2`` in exact arithmetic; it is
    clamped there so rounding cannot empty the set (e.g. equal residuals).
    """
    res_squares = np.asarray(res_squares, dtype=np.float64)
    threshold = min(delta * res_norm_sq, res_squares.max())
    return np.flatnonzero(res_squares >= threshold)


def select_max_residual(res_squares, rho):
    """Rows with ``f_i^2 >= rho * max_j f_j^2``."""
    res_squares = np.asarray(res_squares, dtype=np.float64)
    top = res_squares.max()
    if not top > 0:
        raise AlreadyConverged("residual is zero")
    return np.flatnonzero(res_squares >= rho * top)


def compute_eta(f_tau, q):
    """Weights ``f_i^(q-1)`` for even q and ``|f_i|^(q-2) f_i`` for odd q.

    Both branches equal ``|f_i|^(q-2) f_i``; the even case is computed as the
    plain power so q = 2 returns the residual itself.
    """
    if q < 2:
        raise ValueError("q must be at least 2")
    f_tau = np.asarray(f_tau, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        if q % 2 == 0:
            eta = f_tau ** (q - 1)
        else:
            eta = np.abs(f_tau ** (q - 2)) * f_tau
    if not np.all(np.isfinite(eta)):
        raise OverflowError(f"residual weights overflow for q={q}")
    return eta
