"""Decide whether the invariant measure is a finite sum of geometric terms.

The decision procedure chains "companion" points along the curve Q.  Fixing
one coordinate of a zero of Q leaves a quadratic in the other coordinate,
so every point on Q has exactly one partner sharing each coordinate.  A
finite-sum invariant measure exists precisely when some alternating chain of
such partners connects a point of H_set to a point of H_set or V_set with
the right parity:

* both endpoints in the same set: the chain has even length,
* one endpoint in each set: odd length,
* a single point in both sets: the product-form case.

Chains that leave the open unit square terminate without a match; if no
chain from any starting point matches, the measure is not a finite sum of
geometric terms.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from numpy.polynomial import polynomial as npoly

from .model import RandomWalk, validate_walk
from . import curves as _curves

#: chains revisiting a term within this distance are flagged as cycles,
#: which the alternating construction should never produce
CYCLE_TOL = 1e-9


class UnsupportedRegimeError(ValueError):
    """The walk has no north, northeast or east interior transitions; its
    invariant measure may need countably many geometric terms, which this
    package does not attempt."""


class ChainError(RuntimeError):
    """A chain construction failed (cycle or step cap); carries the partial
    chain for inspection."""

    def __init__(self, message, chain=None):
        super().__init__(message)
        self.chain = chain


@dataclasses.dataclass(frozen=True)
class GeometricTerm:
    """A point (rho, sigma) of Q inside the open unit square."""

    rho: float
    sigma: float
    q_residual: float = 0.0

    def as_tuple(self):
        return (self.rho, self.sigma)

    def close_to(self, other, tol: float) -> bool:
        return (abs(self.rho - other[0]) <= tol
                and abs(self.sigma - other[1]) <= tol)


@dataclasses.dataclass
class CoupledChain:
    terms: list  # of GeometricTerm
    origin_set: str  # "H" or "V"
    origin_index: int
    first_move: str  # "horizontal" or "vertical"
    exit_reason: str  # left_unit_square | hit_H_set | hit_V_set | step_cap | branch_point
    hit_index: int | None = None  # index into the set that was hit


@dataclasses.dataclass
class DetectionConfig:
    membership_tol: float = 1e-3
    edge_margin: float = _curves.EDGE_MARGIN
    step_cap: int = 10000

    def __post_init__(self):
        if self.membership_tol <= 0 or self.edge_margin <= 0 or self.step_cap <= 0:
            raise ValueError("configuration values must be positive")


@dataclasses.dataclass
class DetectionOutcome:
    representable: bool
    terms: list  # canonical order when representable, else empty
    parity: str | None  # "odd" | "even" | "product" | None
    endpoints: tuple | None  # ((set, index), (set, index)) when representable
    chains: list  # every CoupledChain examined
    termination_bound: float | None  # M(R) when defined
    h_set: list
    v_set: list
    ambiguous_hits: list = dataclasses.field(default_factory=list)

    def __len__(self):
        return len(self.terms)


def companion_horizontal(system: _curves.CurveSystem, term: GeometricTerm,
                         margin: float = _curves.EDGE_MARGIN):
    """The other zero of Q sharing sigma, by the Vieta product formula:
    rho' = Cbar(sigma) / (Abar(sigma) rho).  Returns None on exit (outside
    the open unit square, degenerate quadratic, or a double root)."""
    abar = npoly.polyval(term.sigma, system.Abar)
    if abs(abar) < 1e-14:
        return None
    rho_new = npoly.polyval(term.sigma, system.Cbar) / (abar * term.rho)
    if abs(rho_new - term.rho) < 1e-12:
        return None  # double root: the term sits on a branch point
    if not (margin < rho_new < 1.0 - margin):
        return None
    res = abs(_curves.eval_curve(system, "Q", rho_new, term.sigma))
    return GeometricTerm(rho_new, term.sigma, res)


def companion_vertical(system: _curves.CurveSystem, term: GeometricTerm,
                       margin: float = _curves.EDGE_MARGIN):
    """Mirror image: sigma' = C(rho) / (A(rho) sigma)."""
    a = npoly.polyval(term.rho, system.A)
    if abs(a) < 1e-14:
        return None
    sigma_new = npoly.polyval(term.rho, system.C) / (a * term.sigma)
    if abs(sigma_new - term.sigma) < 1e-12:
        return None
    if not (margin < sigma_new < 1.0 - margin):
        return None
    res = abs(_curves.eval_curve(system, "Q", term.rho, sigma_new))
    return GeometricTerm(term.rho, sigma_new, res)


def _membership(term: GeometricTerm, point_set, tol: float):
    """Index of the set member matching the term, or None."""
    for idx, point in enumerate(point_set):
        if term.close_to(point, tol):
            return idx
    return None


def build_chain(system: _curves.CurveSystem, start: GeometricTerm,
                first_move: str, h_set, v_set, cfg: DetectionConfig,
                origin_set: str, origin_index: int) -> CoupledChain:
    """Alternate companions from a starting set member until the chain
    exits the unit square, matches a set member with the right parity, or
    hits the step cap.

    Membership parity: a chain beginning with a horizontal move can close
    at an even position on H_set or an odd position (>= 3) on V_set; a
    vertical-first chain is the mirror image.
    """
    chain = CoupledChain(terms=[start], origin_set=origin_set,
                         origin_index=origin_index, first_move=first_move,
                         exit_reason="step_cap")
    move = first_move
    while len(chain.terms) < cfg.step_cap:
        current = chain.terms[-1]
        if move == "horizontal":
            nxt = companion_horizontal(system, current, cfg.edge_margin)
        else:
            nxt = companion_vertical(system, current, cfg.edge_margin)
        move = "vertical" if move == "horizontal" else "horizontal"
        if nxt is None:
            chain.exit_reason = "left_unit_square"
            return chain
        for prev in chain.terms:
            if nxt.close_to(prev.as_tuple(), CYCLE_TOL):
                raise ChainError("chain revisited a term (cycle)", chain)
        chain.terms.append(nxt)
        n = len(chain.terms)
        if first_move == "horizontal":
            even_set, even_name = h_set, "hit_H_set"
            odd_set, odd_name = v_set, "hit_V_set"
        else:
            even_set, even_name = v_set, "hit_V_set"
            odd_set, odd_name = h_set, "hit_H_set"
        if n % 2 == 0:
            idx = _membership(nxt, even_set, cfg.membership_tol)
            if idx is not None:
                chain.exit_reason = even_name
                chain.hit_index = idx
                return chain
        else:
            idx = _membership(nxt, odd_set, cfg.membership_tol)
            if idx is not None:
                chain.exit_reason = odd_name
                chain.hit_index = idx
                return chain
    raise ChainError("step cap reached before chain exit", chain)


def termination_bound(system: _curves.CurveSystem,
                      bp: _curves.BranchPoints):
    """Worst-case chain length bound 6 / min(D1, D2) + 4 with

        D_k = Delta_y(branch abscissa) / sum_s p_{s,-1} x_t^{1-s}.

    The discriminant vanishes at its own roots, so the bound as printed
    degenerates to an undefined value (returned as None); the step cap
    then governs termination.
    """
    disc = system.discriminant_y()
    denom = npoly.polyval(bp.x_t, system.A)
    if abs(denom) < 1e-14:
        return None
    d1 = npoly.polyval(bp.x_b, disc) / denom
    d2 = npoly.polyval(bp.x_t, disc) / denom
    smallest = min(d1, d2)
    if smallest <= 1e-12:
        return None
    return 6.0 / smallest + 4.0


def _canonical_order(chain: CoupledChain, h_set, v_set, tol: float):
    """Order the matched chain for coefficient indexing.

    Odd-length chains start from the H_set endpoint; even-length chains
    from the endpoint with larger rho.
    """
    terms = list(chain.terms)
    n = len(terms)
    if n == 1:
        return terms, "product"
    if n % 2 == 1:
        first_in_h = _membership(terms[0], h_set, tol) is not None
        last_in_h = _membership(terms[-1], h_set, tol) is not None
        if not first_in_h and last_in_h:
            terms.reverse()
        parity = "odd"
    else:
        if terms[-1].rho > terms[0].rho:
            terms.reverse()
        parity = "even"
    return terms, parity


def _endpoint_labels(chain: CoupledChain):
    start = (chain.origin_set, chain.origin_index)
    if chain.exit_reason == "hit_H_set":
        end = ("H", chain.hit_index)
    elif chain.exit_reason == "hit_V_set":
        end = ("V", chain.hit_index)
    else:
        end = None
    return (start, end)


def detect(R: RandomWalk, cfg: DetectionConfig | None = None) -> DetectionOutcome:
    """Run the full decision procedure on a walk."""
    cfg = cfg or DetectionConfig()
    report = validate_walk(R)
    if not report.ok:
        raise ValueError(f"invalid walk: {report.violations}")
    if R.north_mass <= 0:
        raise UnsupportedRegimeError(
            "walk has no north, northeast or east interior transitions")

    system = _curves.build_curves(R)
    h_set = intersections_h = _curves.intersect_QH(system)
    v_set = _curves.intersect_QV(system)
    try:
        bp = _curves.branch_points(system)
        bound = termination_bound(system, bp)
    except _curves.BranchPointError:
        bound = None

    # product-form short-circuit: a common intersection point needs no chain
    for ih, ph in enumerate(intersections_h):
        for iv, pv in enumerate(v_set):
            if (abs(ph[0] - pv[0]) <= cfg.membership_tol
                    and abs(ph[1] - pv[1]) <= cfg.membership_tol):
                term = GeometricTerm(ph[0], ph[1],
                                     abs(_curves.eval_curve(system, "Q", *ph)))
                return DetectionOutcome(
                    representable=True, terms=[term], parity="product",
                    endpoints=(("H", ih), ("V", iv)), chains=[],
                    termination_bound=bound, h_set=h_set, v_set=v_set)

    chains = []
    ambiguous = []
    starts = ([("H", i, p, "horizontal") for i, p in enumerate(h_set)]
              + [("V", i, p, "vertical") for i, p in enumerate(v_set)])
    for set_name, index, point, first_move in starts:
        start = GeometricTerm(point[0], point[1],
                              abs(_curves.eval_curve(system, "Q", *point)))
        chain = build_chain(system, start, first_move, h_set, v_set, cfg,
                            origin_set=set_name, origin_index=index)
        chains.append(chain)
        if chain.exit_reason in ("hit_H_set", "hit_V_set"):
            last = chain.terms[-1]
            other = v_set if chain.exit_reason == "hit_H_set" else h_set
            if _membership(last, other, cfg.membership_tol) is not None:
                ambiguous.append(chain)
                continue
            terms, parity = _canonical_order(chain, h_set, v_set,
                                             cfg.membership_tol)
            return DetectionOutcome(
                representable=True, terms=terms, parity=parity,
                endpoints=_endpoint_labels(chain), chains=chains,
                termination_bound=bound, h_set=h_set, v_set=v_set,
                ambiguous_hits=ambiguous)

    return DetectionOutcome(
        representable=False, terms=[], parity=None, endpoints=None,
        chains=chains, termination_bound=bound, h_set=h_set, v_set=v_set,
        ambiguous_hits=ambiguous)
