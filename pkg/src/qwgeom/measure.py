"""Coefficients and performance values for finite geometric-sum measures.

Once detection returns a coupled chain of Q-points, the weights of the
terms follow from the boundary balance equations: terms sharing a rho
must jointly cancel the horizontal boundary balance, terms sharing a
sigma the vertical one.  Those cancellation conditions are linear in the
weights, giving a homogeneous system whose one-dimensional nullspace is
the coefficient vector up to scale.  The scale is fixed by total mass:
sum_k alpha_k / ((1 - rho_k)(1 - sigma_k)) = 1.

An independent recursion along the chain (the ratio of consecutive
bracket values) produces the same weights and is used as a cross-check.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .model import (PerformanceFunctional, RandomWalk, evaluate_functional,
                    transition_rates)
from .detection import GeometricTerm

#: singular values below this fraction of the largest count as null directions
RANK_RTOL = 1e-10

#: rho/sigma values closer than this are treated as the same coordinate group
GROUP_TOL = 1e-9


class CoefficientError(ValueError):
    """The coupled set does not determine a one-dimensional weight space."""


@dataclasses.dataclass
class GeometricMixture:
    """A finite weighted sum of geometric measures."""

    terms: list  # of GeometricTerm
    alphas: np.ndarray
    normalized: bool = False
    warnings_: list = dataclasses.field(default_factory=list)

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        if len(self.terms) != len(self.alphas):
            raise ValueError("terms and alphas must have the same length")

    def __call__(self, i, j):
        """Evaluate m(i, j); accepts scalars or arrays."""
        i = np.asarray(i, dtype=float)
        j = np.asarray(j, dtype=float)
        total = np.zeros(np.broadcast(i, j).shape)
        for term, alpha in zip(self.terms, self.alphas):
            total = total + alpha * term.rho ** i * term.sigma ** j
        return total if total.shape else float(total)

    @property
    def total_mass(self) -> float:
        return float(sum(a / ((1.0 - t.rho) * (1.0 - t.sigma))
                         for t, a in zip(self.terms, self.alphas)))

    def normalize(self) -> "GeometricMixture":
        mass = self.total_mass
        if abs(mass) < 1e-300:
            raise CoefficientError("mixture has zero total mass")
        return GeometricMixture(self.terms, self.alphas / mass,
                                normalized=True, warnings_=list(self.warnings_))

    def to_json(self):
        return [{"rho": t.rho, "sigma": t.sigma, "alpha": float(a)}
                for t, a in zip(self.terms, self.alphas)]

    @staticmethod
    def from_json(data) -> "GeometricMixture":
        terms = [GeometricTerm(d["rho"], d["sigma"]) for d in data]
        alphas = np.array([d["alpha"] for d in data])
        return GeometricMixture(terms, alphas)


def product_form(rho: float, sigma: float) -> GeometricMixture:
    """The normalized single-term mixture (1-rho)(1-sigma) rho^i sigma^j."""
    alpha = (1.0 - rho) * (1.0 - sigma)
    return GeometricMixture([GeometricTerm(rho, sigma)], np.array([alpha]),
                            normalized=True)


def _horizontal_bracket(R: RandomWalk, rho: float, sigma: float) -> float:
    """Per-term factor in the horizontal boundary balance: zero exactly
    when the single term rho^i sigma^j balances the horizontal axis."""
    total = 0.0
    for s in (-1, 0, 1):
        total += rho ** (1 - s) * (R.h(s) + sigma * R.p(s, -1))
    return total - rho


def _vertical_bracket(R: RandomWalk, rho: float, sigma: float) -> float:
    total = 0.0
    for t in (-1, 0, 1):
        total += sigma ** (1 - t) * (R.v(t) + rho * R.p(-1, t))
    return total - sigma


def group_balance_terms(R: RandomWalk, m: GeometricMixture, term) -> tuple:
    """Aggregate boundary-balance sums for the coordinate groups of one
    term: the weighted bracket sum over all terms sharing its rho, and
    over all terms sharing its sigma.  Both vanish for an invariant
    mixture."""
    rho, sigma = term.rho, term.sigma
    bh = sum(a * _horizontal_bracket(R, t.rho, t.sigma)
             for t, a in zip(m.terms, m.alphas)
             if abs(t.rho - rho) <= GROUP_TOL)
    bv = sum(a * _vertical_bracket(R, t.rho, t.sigma)
             for t, a in zip(m.terms, m.alphas)
             if abs(t.sigma - sigma) <= GROUP_TOL)
    return bh, bv


def _coordinate_groups(terms, coord: str):
    """Group term indices by (approximately) equal rho or sigma."""
    groups = []
    for idx, term in enumerate(terms):
        value = term.rho if coord == "rho" else term.sigma
        for gval, members in groups:
            if abs(value - gval) <= GROUP_TOL:
                members.append(idx)
                break
        else:
            groups.append((value, [idx]))
    return groups


def solve_coefficients(R: RandomWalk, terms,
                       grid: int = 50) -> GeometricMixture:
    """Weights for a coupled chain via the homogeneous group system.

    Each coordinate group with two or more members contributes one linear
    equation in the weights.  Singleton groups are endpoint conditions on
    the chain itself (their brackets vanish when the endpoint lies on the
    matching boundary curve) and carry no information about the weights,
    so they are recorded as diagnostics rather than rows.
    """
    terms = [t if isinstance(t, GeometricTerm) else GeometricTerm(*t)
             for t in terms]
    n = len(terms)
    if n == 1:
        return product_form(terms[0].rho, terms[0].sigma)

    rows = []
    singleton_residuals = []
    for coord, bracket in (("rho", _horizontal_bracket),
                           ("sigma", _vertical_bracket)):
        for _, members in _coordinate_groups(terms, coord):
            values = [bracket(R, terms[k].rho, terms[k].sigma)
                      for k in members]
            if len(members) > 1:
                row = np.zeros(n)
                for k, val in zip(members, values):
                    row[k] = val
                rows.append(row)
            else:
                singleton_residuals.append((coord, members[0], values[0]))

    if not rows:
        raise CoefficientError(
            "set is not coupled: no coordinate group has two members")
    matrix = np.array(rows)
    _, svals, vt = np.linalg.svd(matrix)
    largest = svals[0] if len(svals) else 0.0
    null_dim = n - np.count_nonzero(svals > RANK_RTOL * max(largest, 1e-300))
    if null_dim != 1:
        raise CoefficientError(
            f"weight space has dimension {null_dim}, expected 1 "
            "(set is not a single coupled chain)")
    alphas = vt[-1]
    if alphas[0] < 0:
        alphas = -alphas

    mixture = GeometricMixture(terms, alphas).normalize()
    for coord, idx, value in singleton_residuals:
        if abs(value * mixture.alphas[idx]) > 1e-8:
            mixture.warnings_.append(
                f"endpoint condition for term {idx} ({coord} group) has "
                f"residual {value:.3e}; input rates may be inconsistent "
                "with an exact finite-sum measure")
    _attach_sign_warnings(mixture, grid)
    return mixture


def chain_coefficients(R: RandomWalk, terms) -> GeometricMixture:
    """Weights by the two-term recursion along a horizontal-first chain.

    Requires canonical chain order with the first coupling horizontal
    (sigma_1 = sigma_2).  Consecutive weights are related by the ratio of
    the bracket values of the pair's shared-coordinate balance equation.
    """
    terms = [t if isinstance(t, GeometricTerm) else GeometricTerm(*t)
             for t in terms]
    n = len(terms)
    if n == 1:
        return product_form(terms[0].rho, terms[0].sigma)
    if abs(terms[0].sigma - terms[1].sigma) > GROUP_TOL:
        raise CoefficientError(
            "chain recursion requires a horizontal first coupling "
            "(first two terms sharing sigma); reorder or use "
            "solve_coefficients")

    alphas = np.zeros(n)
    alphas[0] = 1.0
    for k in range(1, n):
        prev, cur = terms[k - 1], terms[k]
        if k % 2 == 1:
            # pair shares sigma: ratio of vertical brackets
            w_prev = _vertical_bracket(R, prev.rho, prev.sigma)
            w_cur = _vertical_bracket(R, cur.rho, cur.sigma)
        else:
            # pair shares rho: ratio of horizontal brackets
            w_prev = _horizontal_bracket(R, prev.rho, prev.sigma)
            w_cur = _horizontal_bracket(R, cur.rho, cur.sigma)
        if abs(w_cur) < 1e-12:
            raise CoefficientError(
                f"bracket value for term {k} vanishes; recursion degenerate")
        alphas[k] = -(w_prev / w_cur) * alphas[k - 1]
    return GeometricMixture(terms, alphas).normalize()


def _attach_sign_warnings(mixture: GeometricMixture, grid: int):
    """Warn when the mixture is negative somewhere on a finite grid or when
    the asymptotically dominant terms have negative weight."""
    i = np.arange(grid)
    values = mixture(i[:, None], i[None, :])
    if values.min() < -1e-12:
        mixture.warnings_.append(
            f"mixture is negative on the {grid}x{grid} grid "
            f"(min {values.min():.3e})")
    k_rho = int(np.argmax([t.rho for t in mixture.terms]))
    k_sigma = int(np.argmax([t.sigma for t in mixture.terms]))
    if mixture.alphas[k_rho] <= 0 or mixture.alphas[k_sigma] <= 0:
        mixture.warnings_.append(
            "dominant-coordinate term has nonpositive weight; the mixture "
            "is negative far from the origin")


def balance_residuals(R: RandomWalk, m, N: int = 50) -> float:
    """Max invariance residual |sum_w m(w) P(w, z) - m(z)| over the grid.

    ``m`` may be a GeometricMixture or any callable of (i, j).  States with
    1 <= i, j coordinates below N-1 are checked so that every incoming
    neighbor lies in the grid; the origin is excluded (its balance follows
    from all the others).
    """
    from .model import region_of
    region_rates = {region_of(*rep): transition_rates(R, *rep)
                    for rep in ((0, 0), (2, 0), (0, 2), (2, 2))}
    worst = 0.0
    for i in range(0, N - 1):
        for j in range(0, N - 1):
            if i == 0 and j == 0:
                continue
            incoming = 0.0
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    src_i, src_j = i - di, j - dj
                    if src_i < 0 or src_j < 0:
                        continue
                    rate = region_rates[region_of(src_i, src_j)].get((di, dj))
                    if rate:
                        incoming += rate * m(src_i, src_j)
            worst = max(worst, abs(incoming - m(i, j)))
    return worst


def exact_performance(m: GeometricMixture,
                      F: PerformanceFunctional) -> float:
    """Closed-form value of sum_{i,j} m(i,j) F(i,j) for a mixture.

    Per term with weight alpha the four regions contribute geometric sums:
    the axes give alpha * (f10 r + f11 r / (1-r)) / (1-r) style series, the
    origin contributes alpha * f30, and the interior the product series.
    """
    total = 0.0
    for term, alpha in zip(m.terms, m.alphas):
        r, s = term.rho, term.sigma
        if r >= 1.0 - 1e-12 or s >= 1.0 - 1e-12:
            raise ValueError("divergent geometric term (rho or sigma >= 1)")
        gr = r / (1.0 - r)          # sum_{i>=1} r^i
        gr2 = r / (1.0 - r) ** 2    # sum_{i>=1} i r^i
        gs = s / (1.0 - s)
        gs2 = s / (1.0 - s) ** 2
        value = (F.f10 * gr + F.f11 * gr2
                 + F.f20 * gs + F.f22 * gs2
                 + F.f30
                 + F.f40 * gr * gs + F.f41 * gr2 * gs + F.f42 * gr * gs2)
        total += alpha * value
    return total


def truncated_performance(m, F: PerformanceFunctional, N: int) -> float:
    """Direct grid sum of m(i,j) F(i,j), for cross-checking closed forms."""
    total = 0.0
    for i in range(N):
        for j in range(N):
            total += m(i, j) * evaluate_functional(F, i, j)
    return total
