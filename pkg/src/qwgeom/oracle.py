"""Independent numerical reference values via truncated-grid computation.

Everything here deliberately avoids the closed-form machinery in the
rest of the package: stationary distributions come from a sparse direct
solve on an N x N truncation of the kernel, and performance values from
plain grid sums, optionally sharpened by Richardson extrapolation
against the half-size grid.  The point is to have numbers the analytic
path can be checked against, not speed.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .model import (PerformanceFunctional, RandomWalk, evaluate_functional,
                    transition_rates)


def _reward_grid(F: PerformanceFunctional, N: int) -> np.ndarray:
    """F evaluated on the whole N x N grid at once."""
    i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    out = np.where(j == 0, F.f10 + F.f11 * i,
                   np.where(i == 0, F.f20 + F.f22 * j,
                            F.f40 + F.f41 * i + F.f42 * j))
    out = out.astype(float)
    out[0, 0] = F.f30
    return out

#: outer-layer stationary mass above this triggers a truncation warning
TAIL_WARN = 1e-6


class TruncationWarning(UserWarning):
    pass


def _truncated_kernel(R: RandomWalk, N: int) -> scipy.sparse.csr_matrix:
    """Row-stochastic kernel on {0..N-1}^2 with exits folded into the
    state's self-loop."""
    idx = lambda i, j: i * N + j  # noqa: E731
    rows, cols, vals = [], [], []
    for i in range(N):
        for j in range(N):
            rates = transition_rates(R, i, j)
            stay = 0.0
            for (di, dj), p in rates.items():
                ni, nj = i + di, j + dj
                if 0 <= ni < N and 0 <= nj < N and (di, dj) != (0, 0):
                    rows.append(idx(i, j))
                    cols.append(idx(ni, nj))
                    vals.append(p)
                else:
                    stay += p
            if stay > 0:
                rows.append(idx(i, j))
                cols.append(idx(i, j))
                vals.append(stay)
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(N * N, N * N))


def stationary_truncated(R: RandomWalk, N: int) -> np.ndarray:
    """Stationary distribution of the truncated kernel as an (N, N) array.

    Solved directly: pi (P - I) = 0 with one equation replaced by the
    normalization sum(pi) = 1.
    """
    if N < 3:
        raise ValueError("truncation size must be at least 3")
    P = _truncated_kernel(R, N)
    A = (P.T - scipy.sparse.identity(N * N, format="csr")).tolil()
    A[0, :] = 1.0
    rhs = np.zeros(N * N)
    rhs[0] = 1.0
    pi = scipy.sparse.linalg.spsolve(A.tocsr(), rhs)
    pi = np.asarray(pi).reshape(N, N)
    tail = pi[-2:, :].sum() + pi[:, -2:].sum() - pi[-2:, -2:].sum()
    if tail > TAIL_WARN:
        warnings.warn(
            f"outer two layers carry stationary mass {tail:.3e}; "
            f"increase the truncation size", TruncationWarning, stacklevel=2)
    return pi


@dataclasses.dataclass
class OracleValue:
    value: float
    raw: float
    raw_half: float | None
    N: int
    tail_mass: float


def oracle_performance(R: RandomWalk, F: PerformanceFunctional, N: int = 200,
                       richardson: bool = True) -> OracleValue:
    """Reference performance value from the truncated stationary
    distribution, optionally Richardson-extrapolated against N // 2."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        pi = stationary_truncated(R, N)
    raw = float((pi * _reward_grid(F, N)).sum())
    tail = float(pi[-2:, :].sum() + pi[:, -2:].sum() - pi[-2:, -2:].sum())
    raw_half = None
    value = raw
    if richardson and N // 4 >= 3:
        def raw_at(size):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                pi_s = stationary_truncated(R, size)
            return float((pi_s * _reward_grid(F, size)).sum())

        raw_half = raw_at(N // 2)
        raw_quarter = raw_at(N // 4)
        # the truncation error decays like C * rho^size, so consecutive
        # doublings shrink it by rho^(N/4) and then rho^(N/2); fitting that
        # model to the three grid values gives the remaining error at N
        d1 = raw - raw_half
        d0 = raw_half - raw_quarter
        if abs(d1) > 1e-13 and abs(d0) > 1e-13 and 0.0 < d1 / d0 < 1.0:
            q = d1 / d0                      # equals r(1 + r), r = rho^(N/4)
            r = 0.5 * (np.sqrt(1.0 + 4.0 * q) - 1.0)
            if 0.0 < r < 1.0:
                value = raw + d1 * r * r / (1.0 - r * r)
    return OracleValue(value=value, raw=raw, raw_half=raw_half, N=N,
                       tail_mass=tail)


def finite_horizon_reward(R: RandomWalk, F: PerformanceFunctional,
                          T: int, N: int) -> np.ndarray:
    """Expected cumulative reward over t steps on the truncated grid:
    F^0 = 0 and F^t = F + P F^{t-1}.  Returns an array of shape
    (T + 1, N, N)."""
    P = _truncated_kernel(R, N)
    fgrid = _reward_grid(F, N).reshape(-1)
    out = np.zeros((T + 1, N * N))
    for t in range(1, T + 1):
        out[t] = fgrid + P @ out[t - 1]
    return out.reshape(T + 1, N, N)


def verify_invariance(R: RandomWalk, m, N: int = 50) -> float:
    """Max |m P - m| over grid states whose incoming neighbors all lie in
    the grid; ``m`` is any callable of (i, j)."""
    from .measure import balance_residuals
    return balance_residuals(R, m, N)


def verify_condition(Rtilde: RandomWalk, q_horizontal: dict, q_vertical: dict,
                     F: PerformanceFunctional, Fbar, G,
                     T: int = 60, N: int = 60) -> float:
    """Largest violation of the certification condition over horizons
    up to T on the inner grid.

    ``Fbar`` and ``G`` are callables of (i, j).  The condition checked at
    each state z and horizon t is
    |Fbar(z) - F(z) + sum_d q_d (F^t(z + d) - F^t(z))| <= G(z),
    with the boundary rate differences q applying on the matching axis.
    Returns the maximum excess (0.0 when the condition holds everywhere
    within 1e-6)."""
    rewards = finite_horizon_reward(Rtilde, F, T, N)
    worst = 0.0
    inner = N - 2
    for i in range(inner):
        for j in range(inner):
            if i == 0 and j == 0:
                q = {(1, 0): q_horizontal[1], (0, 1): q_vertical[1]}
            elif j == 0:
                q = {(1, 0): q_horizontal[1], (-1, 0): q_horizontal[-1]}
            elif i == 0:
                q = {(0, 1): q_vertical[1], (0, -1): q_vertical[-1]}
            else:
                q = {}
            base = Fbar(i, j) - evaluate_functional(F, i, j)
            bound = G(i, j) + 1e-6
            for t in range(T + 1):
                drift = sum(
                    qd * (rewards[t, i + di, j + dj] - rewards[t, i, j])
                    for (di, dj), qd in q.items()
                    if i + di >= 0 and j + dj >= 0)
                excess = abs(base + drift) - bound
                if excess > worst:
                    worst = excess
    return worst
