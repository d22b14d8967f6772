"""Construct perturbed walks with known geometric-sum invariant measures.

Given a point (rho, sigma) on Q, the horizontal boundary balance equation
is linear in the two axis rates (H_1, H_-1):

    (1 - 1/rho) H_1 + (1 - rho) H_-1
        = sum_s rho^{-s} sigma p_{s,-1} - sum_s p_{s,1}.

Nonnegative solutions always exist because the line has positive slope.
Solving this at one chain endpoint and the vertical mirror image at the
other yields axis rates that make the target measure invariant.  The
solved rates may exceed 1; dividing every non-self-loop rate of both the
original and the perturbed walk by a common constant C (self-loops absorb
the remainder) restores proper probabilities without changing either
stationary measure.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .model import RandomWalk
from . import curves as _curves
from .detection import GeometricTerm
from .measure import (GeometricMixture, balance_residuals, product_form,
                      solve_coefficients)

#: residual ceiling for the verification that the target measure really is
#: invariant for the constructed walk
TARGET_RESIDUAL_TOL = 1e-10


class PerturbationError(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class BoundaryRates:
    H1: float
    Hm1: float
    V1: float
    Vm1: float

    def __post_init__(self):
        if min(self.H1, self.Hm1, self.V1, self.Vm1) < 0:
            raise ValueError("boundary rates must be nonnegative")


@dataclasses.dataclass
class PerturbationResult:
    input_rescaled: RandomWalk  # the (possibly rescaled) walk to be bounded
    perturbed: RandomWalk
    C: float
    rates: BoundaryRates
    q_horizontal: dict  # displacement s -> rate difference on the horizontal axis
    q_vertical: dict  # displacement t -> rate difference on the vertical axis
    target_measure: GeometricMixture
    anchors: tuple  # ((rho, sigma) anchoring H, (rho, sigma) anchoring V)
    policy: str


def _solve_line(a: float, b: float, rhs: float, preferred, policy: str):
    """Nonnegative solution of a*x + b*y = rhs with a < 0 < b.

    Feasible solutions are x = t, y = (rhs - a t)/b for t >= t_min with
    t_min = rhs/a clipped at 0.  The 'minimal' policy minimizes x + y;
    'projection' takes the Euclidean projection of the preferred point.
    """
    t_min = max(0.0, rhs / a) if rhs < 0 else 0.0
    if policy == "minimal":
        # x + y along the line decreases with t iff 1 - a/b < 0, which
        # cannot happen for a < 0 < b, so the smallest feasible t wins
        t = t_min
    elif policy == "projection":
        px, py = preferred
        norm2 = a * a + b * b
        excess = (a * px + b * py - rhs) / norm2
        t = px - excess * a
        t = max(t, t_min)
    else:
        raise ValueError(f"unknown selection policy {policy!r}")
    x = t
    y = (rhs - a * t) / b
    return float(x), float(max(y, 0.0))


def solve_horizontal_boundary(R: RandomWalk, rho: float, sigma: float,
                              policy: str = "projection"):
    """Axis rates (H1, Hm1) making rho^i sigma^j satisfy horizontal
    boundary balance."""
    rhs = sum(rho ** (-s) * sigma * R.p(s, -1) for s in (-1, 0, 1))
    rhs -= sum(R.p(s, 1) for s in (-1, 0, 1))
    a = 1.0 - 1.0 / rho
    b = 1.0 - rho
    return _solve_line(a, b, rhs, (R.h(1), R.h(-1)), policy)


def solve_vertical_boundary(R: RandomWalk, rho: float, sigma: float,
                            policy: str = "projection"):
    """Mirror image of solve_horizontal_boundary for the vertical axis."""
    rhs = sum(sigma ** (-t) * rho * R.p(-1, t) for t in (-1, 0, 1))
    rhs -= sum(R.p(1, t) for t in (-1, 0, 1))
    a = 1.0 - 1.0 / sigma
    b = 1.0 - sigma
    return _solve_line(a, b, rhs, (R.v(1), R.v(-1)), policy)


def _axis_residual(up_mass: float, plus: float, minus: float, C: float):
    zero = 1.0 - (plus + minus + up_mass) / C
    if zero < -1e-12:
        raise PerturbationError(
            f"rescale constant {C} too small: axis self-loop {zero}")
    return max(zero, 0.0)


def rescale(R: RandomWalk, C: float) -> RandomWalk:
    """Divide all non-self-loop rates by C, self-loops absorbing the rest.
    The stationary measure is unchanged."""
    if C < 1.0 - 1e-12:
        raise ValueError("rescale constant must be at least 1")
    interior = R.interior / C
    off_diag = interior.sum() - interior[1, 1]
    interior[1, 1] = 1.0 - off_diag
    up = interior[:, 2].sum()
    right = interior[2, :].sum()
    h1, hm1 = R.h(1) / C, R.h(-1) / C
    v1, vm1 = R.v(1) / C, R.v(-1) / C
    return RandomWalk(
        interior=interior,
        horizontal=[hm1, _axis_residual(up, h1, hm1, 1.0), h1],
        vertical=[vm1, _axis_residual(right, v1, vm1, 1.0), v1],
    )


def _perturbed_walk(R: RandomWalk, rates: BoundaryRates, C: float) -> RandomWalk:
    interior = R.interior / C
    off_diag = interior.sum() - interior[1, 1]
    interior[1, 1] = 1.0 - off_diag
    up = interior[:, 2].sum()
    right = interior[2, :].sum()
    h1, hm1 = rates.H1 / C, rates.Hm1 / C
    v1, vm1 = rates.V1 / C, rates.Vm1 / C
    return RandomWalk(
        interior=interior,
        horizontal=[hm1, _axis_residual(up, h1, hm1, 1.0), h1],
        vertical=[vm1, _axis_residual(right, v1, vm1, 1.0), v1],
    )


def _finish(R: RandomWalk, rates: BoundaryRates, target_terms, anchors,
            policy: str) -> PerturbationResult:
    up_mass = sum(R.p(s, 1) for s in (-1, 0, 1))
    right_mass = sum(R.p(1, t) for t in (-1, 0, 1))
    c_h = rates.H1 + rates.Hm1 + up_mass
    c_v = rates.V1 + rates.Vm1 + right_mass
    C = max(1.0, c_h, c_v)
    rescaled = rescale(R, C)
    perturbed = _perturbed_walk(R, rates, C)

    if len(target_terms) == 1:
        term = target_terms[0]
        target = product_form(term.rho, term.sigma)
    else:
        target = solve_coefficients(perturbed, target_terms)
    residual = balance_residuals(perturbed, target, 50)
    if residual > TARGET_RESIDUAL_TOL:
        raise PerturbationError(
            f"target measure is not invariant for the perturbed walk "
            f"(residual {residual:.3e}); internal inconsistency")

    q_h = {1: perturbed.h(1) - rescaled.h(1),
           -1: perturbed.h(-1) - rescaled.h(-1)}
    q_v = {1: perturbed.v(1) - rescaled.v(1),
           -1: perturbed.v(-1) - rescaled.v(-1)}
    return PerturbationResult(
        input_rescaled=rescaled, perturbed=perturbed, C=C, rates=rates,
        q_horizontal=q_h, q_vertical=q_v, target_measure=target,
        anchors=anchors, policy=policy)


def build_product_perturbation(R: RandomWalk, point,
                               policy: str = "projection") -> PerturbationResult:
    """Perturbed walk whose invariant measure is the product form at a
    point of Q inside the open unit square."""
    rho, sigma = point
    system = _curves.build_curves(R)
    if abs(_curves.eval_curve(system, "Q", rho, sigma)) > 1e-9:
        raise PerturbationError("target point is not on Q")
    H1, Hm1 = solve_horizontal_boundary(R, rho, sigma, policy)
    V1, Vm1 = solve_vertical_boundary(R, rho, sigma, policy)
    rates = BoundaryRates(H1, Hm1, V1, Vm1)
    term = GeometricTerm(rho, sigma)
    return _finish(R, rates, [term], ((rho, sigma), (rho, sigma)), policy)


def build_mixture_perturbation(R: RandomWalk, terms,
                               policy: str = "projection",
                               strict: bool = False) -> PerturbationResult:
    """Perturbed walk whose invariant measure is an odd coupled chain.

    The endpoint whose rho is not shared with any other term anchors the
    horizontal boundary solve; the endpoint with the unique sigma anchors
    the vertical one.
    """
    terms = [t if isinstance(t, GeometricTerm) else GeometricTerm(*t)
             for t in terms]
    if len(terms) % 2 == 0:
        raise ValueError("mixture targets need an odd number of terms")
    if len(terms) >= 3:
        h_anchor = _unique_endpoint(terms, "rho")
        v_anchor = _unique_endpoint(terms, "sigma")
    else:
        h_anchor = v_anchor = terms[0]
    H1, Hm1 = solve_horizontal_boundary(R, h_anchor.rho, h_anchor.sigma,
                                        policy)
    V1, Vm1 = solve_vertical_boundary(R, v_anchor.rho, v_anchor.sigma,
                                      policy)
    rates = BoundaryRates(H1, Hm1, V1, Vm1)
    result = _finish(R, rates, terms,
                     (h_anchor.as_tuple(), v_anchor.as_tuple()), policy)
    if strict and result.target_measure.warnings_:
        raise PerturbationError(
            "; ".join(result.target_measure.warnings_))
    return result


def _unique_endpoint(terms, coord: str) -> GeometricTerm:
    values = [getattr(t, coord) for t in terms]
    for idx, value in enumerate(values):
        shared = sum(1 for other in values if abs(other - value) <= 1e-9)
        if shared == 1:
            return terms[idx]
    raise ValueError(
        f"no term has a unique {coord}; the set is not a single odd chain")


def candidate_terms(R: RandomWalk, K: int, margin: float = 1e-6):
    """K points sampled along Q inside the open unit square, ordered along
    the curve from the upper-left end to the lower-right end."""
    if K < 1:
        raise ValueError("K must be at least 1")
    system = _curves.build_curves(R)
    bp = _curves.branch_points(system)
    x_lo = max(margin, bp.x_b)
    x_hi = min(1.0 - margin, bp.x_t)
    if x_hi <= x_lo:
        raise PerturbationError("Q has no arc inside the unit square")
    xs = np.linspace(x_lo, x_hi, 2001)
    upper, lower = [], []
    for x in xs:
        roots, _ = _curves.q_roots_fixed_x(system, float(x))
        inside = [float(y) for y in roots if margin < y < 1.0 - margin]
        if not inside:
            continue
        lower.append((float(x), inside[0]))
        if len(inside) > 1:
            upper.append((float(x), inside[-1]))
    # traverse the upper branch from its high-sigma end down to the left
    # seam where the branches meet, then the lower branch toward the
    # high-rho end: upper-left corner of the arc to its lower-right corner
    path = upper[::-1] + lower if upper else lower
    path = [p for p in path
            if abs(_curves.eval_curve(system, "Q", *p)) <= 1e-9]
    # deduplicate near-identical points where the branches meet
    dedup = []
    for p in path:
        if not dedup or max(abs(p[0] - dedup[-1][0]),
                            abs(p[1] - dedup[-1][1])) > 1e-9:
            dedup.append(p)
    if not dedup:
        raise PerturbationError("no curve points found inside the unit square")
    if K == 1:
        return [dedup[len(dedup) // 2]]
    idx = np.linspace(0, len(dedup) - 1, K).round().astype(int)
    return [dedup[k] for k in idx]


def chain_from_candidate(R: RandomWalk, point, size: int):
    """Odd coupled chain grown from a candidate point by alternating
    companions (horizontal move first).  Returns None when a companion
    leaves the unit square before the chain reaches the requested size."""
    from .detection import companion_horizontal, companion_vertical
    if size % 2 == 0:
        raise ValueError("chain size must be odd")
    system = _curves.build_curves(R)
    for first_move in ("horizontal", "vertical"):
        chain = [GeometricTerm(point[0], point[1])]
        move = first_move
        while len(chain) < size:
            if move == "horizontal":
                nxt = companion_horizontal(system, chain[-1])
            else:
                nxt = companion_vertical(system, chain[-1])
            if nxt is None:
                chain = None
                break
            chain.append(nxt)
            move = "vertical" if move == "horizontal" else "horizontal"
        if chain is not None:
            return chain
    return None
