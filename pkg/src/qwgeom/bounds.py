"""Certified performance bounds via a perturbed walk and a linear program.

The bound machinery compares the walk of interest (rescaled if needed)
with a perturbed walk whose invariant measure mbar is known in closed
form.  If component-wise linear functions Fbar and G satisfy, for every
state z and horizon t,

    |Fbar(z) - F(z) + sum_d q_d (F^t(z + d) - F^t(z))|  <=  G(z),

where q collects the boundary rate differences between the two walks,
then  sum (Fbar - G) mbar  <=  F-value  <=  sum (Fbar + G) mbar.

The horizon-uniform reward differences F^t(z + d) - F^t(z) are bounded
by extra variables: one component-wise linear function beta_d per unit
displacement d, constrained inductively.  beta_d is a one-sided bound,
beta_d(z) >= F^t(z + d) - F^t(z) for every t; the matching lower bound
comes for free from the opposite displacement, since F^t(z+d) - F^t(z)
equals -(F^t(z) - F^t(z+d)) and is therefore >= -beta_{-d}(z + d).
Keeping the bounds one-sided instead of absolute lets the beta of a
direction in which rewards shrink stay near zero, which tightens the
certificates considerably.  One step of the reward recursion couples
the kernels at z and z + d: transition mass moving both copies by the
same displacement keeps the pair at distance d (bounded by beta_d at
the successor); the mismatched remainder is routed from one arrival
point to the other along unit steps, each step bounded above by the
matching beta at the intermediate state.

All quantifiers over infinite state classes reduce to finitely many
inequalities because a linear form is nonnegative on a shifted quadrant
exactly when its slopes and its corner value are.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .model import PerformanceFunctional, RandomWalk, transition_rates
from .measure import GeometricMixture, exact_performance
from .perturbation import PerturbationResult
from .lp import LPSolution, solve_inequalities

#: slack allowed when checking the returned optimizer against the
#: generated constraints
FEASIBILITY_TOL = 1e-8

# variable layout: six component-wise linear functions of 8 coefficients
SLOTS = ("Fbar", "G", "bE", "bW", "bN", "bS")
SLOT_INDEX = {name: k * 8 for k, name in enumerate(SLOTS)}
N_VARS = 8 * len(SLOTS)
COEFF_NAMES = ("f10", "f11", "f20", "f22", "f30", "f40", "f41", "f42")

#: unit displacements and their beta slots
DISPLACEMENTS = {(1, 0): "bE", (-1, 0): "bW", (0, 1): "bN", (0, -1): "bS"}


@dataclasses.dataclass(frozen=True)
class StateClass:
    """A family of states {(i0 + a, j0 + b)} with a, b >= 0 ranging over
    the free coordinates (non-free coordinates are fixed at the base)."""

    name: str
    i0: int
    j0: int
    free_i: bool
    free_j: bool


STATE_CLASSES = (
    StateClass("origin", 0, 0, False, False),
    StateClass("e1", 1, 0, False, False),
    StateClass("e2", 0, 1, False, False),
    StateClass("e11", 1, 1, False, False),
    StateClass("h_far", 2, 0, True, False),
    StateClass("v_far", 0, 2, False, True),
    StateClass("h_band", 2, 1, True, False),
    StateClass("v_band", 1, 2, False, True),
    StateClass("interior_far", 2, 2, True, True),
)


class SymExpr:
    """A value linear both in the LP variables and in the free class
    coordinates: (v0 + a*va + b*vb) . x + (c0 + a*ca + b*cb)."""

    __slots__ = ("v0", "va", "vb", "c0", "ca", "cb")

    def __init__(self):
        self.v0 = np.zeros(N_VARS)
        self.va = np.zeros(N_VARS)
        self.vb = np.zeros(N_VARS)
        self.c0 = 0.0
        self.ca = 0.0
        self.cb = 0.0

    def add(self, other: "SymExpr", scale: float = 1.0):
        self.v0 += scale * other.v0
        self.va += scale * other.va
        self.vb += scale * other.vb
        self.c0 += scale * other.c0
        self.ca += scale * other.ca
        self.cb += scale * other.cb
        return self

    def scaled(self, scale: float) -> "SymExpr":
        out = SymExpr()
        out.add(self, scale)
        return out


def _region_of_point(ci: int, cj: int, free_i: bool, free_j: bool) -> str:
    """Region of the symbolic point (ci + a, cj + b); requires the region
    to be uniform over the class, which the class granularity guarantees."""
    if free_i and ci < 1:
        raise AssertionError("class system leaked a non-uniform i-region")
    if free_j and cj < 1:
        raise AssertionError("class system leaked a non-uniform j-region")
    i_pos = free_i or ci >= 1
    j_pos = free_j or cj >= 1
    if i_pos and j_pos:
        return "interior"
    if i_pos:
        return "horizontal"
    if j_pos:
        return "vertical"
    return "origin"


def eval_function(slot: str, ci: int, cj: int,
                  free_i: bool, free_j: bool) -> SymExpr:
    """Symbolic value of one of the LP's component-wise linear functions
    at the point (ci + a, cj + b)."""
    base = SLOT_INDEX[slot]
    region = _region_of_point(ci, cj, free_i, free_j)
    expr = SymExpr()
    if region == "horizontal":
        expr.v0[base + 0] = 1.0
        expr.v0[base + 1] = ci
        if free_i:
            expr.va[base + 1] = 1.0
    elif region == "vertical":
        expr.v0[base + 2] = 1.0
        expr.v0[base + 3] = cj
        if free_j:
            expr.vb[base + 3] = 1.0
    elif region == "origin":
        expr.v0[base + 4] = 1.0
    else:
        expr.v0[base + 5] = 1.0
        expr.v0[base + 6] = ci
        expr.v0[base + 7] = cj
        if free_i:
            expr.va[base + 6] = 1.0
        if free_j:
            expr.vb[base + 7] = 1.0
    return expr


def eval_reward(F: PerformanceFunctional, ci: int, cj: int,
                free_i: bool, free_j: bool) -> SymExpr:
    """Symbolic value of the known reward function at the point."""
    region = _region_of_point(ci, cj, free_i, free_j)
    expr = SymExpr()
    if region == "horizontal":
        expr.c0 = F.f10 + F.f11 * ci
        if free_i:
            expr.ca = F.f11
    elif region == "vertical":
        expr.c0 = F.f20 + F.f22 * cj
        if free_j:
            expr.cb = F.f22
    elif region == "origin":
        expr.c0 = F.f30
    else:
        expr.c0 = F.f40 + F.f41 * ci + F.f42 * cj
        if free_i:
            expr.ca = F.f41
        if free_j:
            expr.cb = F.f42
    return expr


def _kernel(R: RandomWalk, ci: int, cj: int, free_i: bool, free_j: bool):
    """Outgoing rates of the symbolic point, via a representative state
    deep enough inside its region."""
    rep_i = ci + (5 if free_i else 0)
    rep_j = cj + (5 if free_j else 0)
    return transition_rates(R, rep_i, rep_j)


@dataclasses.dataclass
class Constraint:
    row: np.ndarray  # row . x <= rhs
    rhs: float
    label: str


def _emit(constraints: list, expr: SymExpr, cls: StateClass, label: str):
    """Reduce 'expr <= 0 for every state of the class' to slope and corner
    rows."""
    if cls.free_i:
        constraints.append(Constraint(expr.va.copy(), -expr.ca,
                                      label + "/slope_i"))
    if cls.free_j:
        constraints.append(Constraint(expr.vb.copy(), -expr.cb,
                                      label + "/slope_j"))
    constraints.append(Constraint(expr.v0.copy(), -expr.c0,
                                  label + "/corner"))


def _path_steps(start, end, horizontal_first: bool):
    """Unit steps (eval_point, displacement) from start to end, offsets
    relative to the class base."""
    (sx, sy), (ex, ey) = start, end
    u, v = ex - sx, ey - sy
    steps = []
    hx = 1 if u > 0 else -1
    hy = 1 if v > 0 else -1
    if horizontal_first:
        for k in range(abs(u)):
            steps.append(((sx + k * hx, sy), (hx, 0)))
        for k in range(abs(v)):
            steps.append(((ex, sy + k * hy), (0, hy)))
    else:
        for k in range(abs(v)):
            steps.append(((sx, sy + k * hy), (0, hy)))
        for k in range(abs(u)):
            steps.append(((sx + k * hx, ey), (hx, 0)))
    return steps


#: free-coordinate value used when pricing a symbolic evaluation point
#: against a previous solution
_HINT_DEPTH = 3.0


def _hint_price(hint, slot, ci, cj, free_i, free_j) -> float:
    """Approximate value of one beta evaluation under a previous LP
    solution, with free class coordinates a few steps inside."""
    e = eval_function(slot, ci, cj, free_i, free_j)
    return float((e.v0 + _HINT_DEPTH * (e.va + e.vb)) @ hint)


def _order_options(start, end, cls: StateClass):
    """The valid staircase orders from start to end, as step lists."""

    def valid(steps):
        for (px, py), _ in steps:
            try:
                _region_of_point(cls.i0 + px, cls.j0 + py,
                                 cls.free_i, cls.free_j)
            except AssertionError:
                return False
        return True

    options = []
    for horizontal_first in (True, False):
        steps = _path_steps(start, end, horizontal_first)
        if valid(steps):
            options.append(steps)
            if not steps:
                break
    return options


def _choose_steps(start, end, cls: StateClass, hint):
    """Pick a staircase between the two orders: horizontal-first by
    default, or the cheaper one when a previous solution prices it."""
    options = _order_options(start, end, cls)
    if len(options) > 1 and hint is not None:
        options.sort(key=lambda steps: sum(
            _hint_price(hint, DISPLACEMENTS[d], cls.i0 + px, cls.j0 + py,
                        cls.free_i, cls.free_j)
            for (px, py), d in steps))
    return options[0]


def _path_beta(start, end, cls: StateClass, hint=None) -> SymExpr:
    """Sum of beta evaluations bounding F^t(end) - F^t(start) from above
    along a unit-step path from start to end (each step is one one-sided
    unit-difference bound, so the telescoped sum bounds the signed
    difference).  Both points are offsets from the class base.

    Either staircase order is sound; ``hint`` (a previous LP solution)
    selects the cheaper one, otherwise horizontal-first is used.
    """
    expr = SymExpr()
    for (px, py), d in _choose_steps(start, end, cls, hint):
        expr.add(eval_function(DISPLACEMENTS[d], cls.i0 + px, cls.j0 + py,
                               cls.free_i, cls.free_j))
    return expr


def _pair_cost(b, a, cls: StateClass, hint) -> float:
    """Price of closing a pair with arrivals a (from z + d) and b (from
    z), offsets relative to z: the cheapest valid staircase, by step
    count without a hint and by previous-solution beta values with one."""
    options = _order_options(b, a, cls)
    if not options:
        return float("inf")
    if hint is None:
        return float(min(len(steps) for steps in options))
    return min(sum(_hint_price(hint, DISPLACEMENTS[d],
                               cls.i0 + px, cls.j0 + py,
                               cls.free_i, cls.free_j)
                   for (px, py), d in steps)
               for steps in options)


def _route_kernels(rates_moved: dict, rates_base: dict, d, cls: StateClass,
                   hint=None):
    """Couple the kernels of z + d ('moved') and z ('base') into a list
    of (arrival_moved, arrival_base, mass) pairs, offsets relative to z.

    Every pairing of the two kernels' mass is sound: a pair with equal
    arrivals costs nothing, a pair whose arrivals still differ by d
    simply keeps the bias bound open at the base arrival, and anything
    else closes through a staircase of unit-step bounds.

    Mass moving by the same displacement from both states is paired
    first (those pairs stay at distance d, continuing the bias bound),
    and only the mismatch is routed through staircases.  The leftover
    routing is by shortest staircase without a hint and by the priced
    closing cost with one; keeping the continuation structure either way
    is what keeps the row system feasible.
    """
    left_moved = {k: v for k, v in rates_moved.items() if v > 1e-15}
    left_base = {k: v for k, v in rates_base.items() if v > 1e-15}
    pairs = []
    for delta in sorted(set(left_moved) & set(left_base)):
        mass = min(left_moved[delta], left_base[delta])
        pairs.append(((d[0] + delta[0], d[1] + delta[1]), delta, mass))
        for store in (left_moved, left_base):
            store[delta] -= mass
            if store[delta] <= 1e-15:
                del store[delta]
    while left_moved:
        best = None
        for d1 in sorted(left_moved):
            a = (d[0] + d1[0], d[1] + d1[1])
            for d2 in sorted(left_base):
                cost = _pair_cost(d2, a, cls, hint)
                if best is None or cost < best[0]:
                    best = (cost, d1, d2)
        cost, d1, d2 = best
        if cost == float("inf"):
            raise AssertionError("no valid staircase between arrival pair")
        mass = min(left_moved[d1], left_base[d2])
        pairs.append(((d[0] + d1[0], d[1] + d1[1]), d2, mass))
        for store, key in ((left_moved, d1), (left_base, d2)):
            store[key] -= mass
            if store[key] <= 1e-15:
                del store[key]
    if left_base and sum(left_base.values()) > 1e-12:
        raise AssertionError("kernel coupling lost probability mass")
    return pairs


def _class_q(cls: StateClass, pert: PerturbationResult) -> dict:
    """Boundary rate differences applicable to the class's states."""
    if cls.name in ("origin",):
        return {(1, 0): pert.q_horizontal[1], (0, 1): pert.q_vertical[1]}
    if cls.j0 == 0 and not cls.free_j:
        return {(1, 0): pert.q_horizontal[1], (-1, 0): pert.q_horizontal[-1]}
    if cls.i0 == 0 and not cls.free_i:
        return {(0, 1): pert.q_vertical[1], (0, -1): pert.q_vertical[-1]}
    return {}


def build_polytope(pert: PerturbationResult, F: PerformanceFunctional,
                   hint=None) -> list:
    """Generate the constraint list over (Fbar, G, beta) coefficients.

    Three families: bias-bound induction for every displacement and
    class, the certification condition with both signs for every class,
    and nonnegativity of G and every beta on every region.  ``hint`` is
    an optional previous LP solution used to price the discretionary
    routing choices; any hint yields a sound polytope.
    """
    R = pert.input_rescaled
    constraints: list = []

    # (C1) bias-bound induction
    for cls in STATE_CLASSES:
        for d, slot in sorted(DISPLACEMENTS.items()):
            di, dj = d
            mi, mj = cls.i0 + di, cls.j0 + dj
            if mi < 0 or mj < 0:
                continue  # the displacement leaves the quarter-plane
            rates_moved = _kernel(R, mi, mj, cls.free_i, cls.free_j)
            rates_base = _kernel(R, cls.i0, cls.j0, cls.free_i, cls.free_j)
            coupling = SymExpr()
            for arr_moved, arr_base, mass in _route_kernels(
                    rates_moved, rates_base, d, cls, hint):
                coupling.add(_path_beta(arr_base, arr_moved, cls, hint), mass)
            coupling.add(eval_function(slot, cls.i0, cls.j0,
                                       cls.free_i, cls.free_j), -1.0)
            # the reward gap enters with its sign: beta_d only bounds the
            # difference from above, so no absolute value is needed here
            coupling.add(eval_reward(F, mi, mj, cls.free_i, cls.free_j))
            coupling.add(eval_reward(F, cls.i0, cls.j0,
                                     cls.free_i, cls.free_j), -1.0)
            _emit(constraints, coupling, cls, f"bias[{slot}]@{cls.name}")

    # (C2) certification condition; the sign of q_d times the overall
    # sign picks which way the unit-step path runs, so the one-sided
    # bounds cover both orientations of every rate difference
    for cls in STATE_CLASSES:
        q = _class_q(cls, pert)
        gap = eval_function("Fbar", cls.i0, cls.j0, cls.free_i, cls.free_j)
        reward = eval_reward(F, cls.i0, cls.j0, cls.free_i, cls.free_j)
        g_val = eval_function("G", cls.i0, cls.j0, cls.free_i, cls.free_j)
        for sign, tag in ((1.0, "+"), (-1.0, "-")):
            expr = SymExpr()
            for delta in sorted(q):
                weight = abs(q[delta])
                if weight == 0.0:
                    continue
                if sign * q[delta] > 0:
                    expr.add(_path_beta((0, 0), delta, cls, hint), weight)
                else:
                    expr.add(_path_beta(delta, (0, 0), cls, hint), weight)
            expr.add(gap, sign)
            expr.add(reward, -sign)
            expr.add(g_val, -1.0)
            _emit(constraints, expr, cls, f"cert@{cls.name}{tag}")

    # (C3) nonnegativity of G and the betas on every region
    for slot in SLOTS[1:]:
        base = SLOT_INDEX[slot]
        rows = [
            # horizontal axis: slope and corner at i = 1
            ({base + 1: -1.0}, 0.0, f"nonneg[{slot}]/h_slope"),
            ({base + 0: -1.0, base + 1: -1.0}, 0.0, f"nonneg[{slot}]/h_corner"),
            ({base + 3: -1.0}, 0.0, f"nonneg[{slot}]/v_slope"),
            ({base + 2: -1.0, base + 3: -1.0}, 0.0, f"nonneg[{slot}]/v_corner"),
            ({base + 4: -1.0}, 0.0, f"nonneg[{slot}]/origin"),
            ({base + 6: -1.0}, 0.0, f"nonneg[{slot}]/int_slope_i"),
            ({base + 7: -1.0}, 0.0, f"nonneg[{slot}]/int_slope_j"),
            ({base + 5: -1.0, base + 6: -1.0, base + 7: -1.0}, 0.0,
             f"nonneg[{slot}]/int_corner"),
        ]
        for entries, rhs, label in rows:
            row = np.zeros(N_VARS)
            for k, v in entries.items():
                row[k] = v
            constraints.append(Constraint(row, rhs, label))

    return constraints


def mixture_weights(mbar: GeometricMixture) -> np.ndarray:
    """8-vector w with w . coeffs = sum_z f(z) mbar(z) for any
    component-wise linear f with those coefficients."""
    w = np.zeros(8)
    for term, alpha in zip(mbar.terms, mbar.alphas):
        r, s = term.rho, term.sigma
        gr = r / (1.0 - r)
        gr2 = r / (1.0 - r) ** 2
        gs = s / (1.0 - s)
        gs2 = s / (1.0 - s) ** 2
        w += alpha * np.array(
            [gr, gr2, gs, gs2, 1.0, gr * gs, gr2 * gs, gr * gs2])
    return w


def weighted_sum(F: PerformanceFunctional, mbar: GeometricMixture) -> float:
    """sum_z F(z) mbar(z) in closed form."""
    return float(mixture_weights(mbar) @ F.coefficients())


@dataclasses.dataclass
class BoundResult:
    F_low: float
    F_up: float
    solution_low: np.ndarray
    solution_up: np.ndarray
    constraints: list
    iterations_low: int
    iterations_up: int
    perturbation: PerturbationResult

    def optimizer(self, which: str):
        """The optimal (Fbar, G, beta...) split into 8-coefficient blocks."""
        x = self.solution_up if which == "up" else self.solution_low
        return {name: x[k * 8:(k + 1) * 8] for k, name in enumerate(SLOTS)}


class BoundError(RuntimeError):
    pass


def _solve_direction(pert, F, objective, sense, hint):
    """Build one polytope (optionally priced by a previous solution) and
    optimize over it."""
    constraints = build_polytope(pert, F, hint)
    A = np.array([c.row for c in constraints])
    b = np.array([c.rhs for c in constraints])
    sol = solve_inequalities(A, b, objective, sense)
    if sol.status == "optimal":
        worst = float(np.max(A @ sol.x - b))
        if worst > FEASIBILITY_TOL:
            raise BoundError(
                f"optimizer violates a generated constraint by {worst}")
    return sol, constraints


def bound_performance(pert: PerturbationResult, F: PerformanceFunctional,
                      refine: int = 2) -> BoundResult:
    """Solve the two linear programs certifying upper and lower bounds.

    After the first solve, up to ``refine`` further rounds rebuild the
    polytope with routing choices priced by the current optimizer and
    keep whichever bound is better; every round's polytope is sound, so
    the improvement is free.
    """
    if not F.is_nonnegative():
        raise ValueError("reward function must be nonnegative")
    w = mixture_weights(pert.target_measure)
    objective_up = np.zeros(N_VARS)
    objective_up[SLOT_INDEX["Fbar"]:SLOT_INDEX["Fbar"] + 8] = w
    objective_up[SLOT_INDEX["G"]:SLOT_INDEX["G"] + 8] = w
    objective_low = np.zeros(N_VARS)
    objective_low[SLOT_INDEX["Fbar"]:SLOT_INDEX["Fbar"] + 8] = w
    objective_low[SLOT_INDEX["G"]:SLOT_INDEX["G"] + 8] = -w

    best = {}
    for which, objective, sense in (("up", objective_up, "min"),
                                    ("low", objective_low, "max")):
        hint = None
        for round_ in range(refine + 1):
            sol, constraints = _solve_direction(pert, F, objective, sense,
                                                hint)
            if sol.status != "optimal":
                if round_ == 0:
                    raise BoundError(
                        f"{'upper' if which == 'up' else 'lower'} bound "
                        f"program is {sol.status}; try a different "
                        "perturbation target")
                break
            current = best.get(which)
            better = (current is None
                      or (sol.objective < current[0] - 1e-12
                          if which == "up"
                          else sol.objective > current[0] + 1e-12))
            if better:
                best[which] = (sol.objective, sol.x, constraints,
                               sol.iterations)
            elif round_ > 0:
                break  # refinement stalled
            hint = sol.x

    up, low = best["up"], best["low"]
    if low[0] > up[0] + 1e-9:
        raise BoundError("lower bound exceeded upper bound")
    return BoundResult(F_low=low[0], F_up=up[0],
                       solution_low=low[1], solution_up=up[1],
                       constraints=up[2],
                       iterations_low=low[3],
                       iterations_up=up[3],
                       perturbation=pert)


@dataclasses.dataclass
class SweepRow:
    index: int
    rho: float
    sigma: float
    C: float
    F_low: float | None
    F_up: float | None
    error: str | None = None


def sweep_bounds(R: RandomWalk, F: PerformanceFunctional, candidates,
                 policy: str = "projection", mixture_size: int = 1):
    """Bounds per candidate point plus a running best summary.

    With mixture_size 1 each candidate is used as a product-form target;
    larger odd sizes grow a coupled chain from the candidate first.
    Per-candidate failures are recorded and the sweep continues.
    """
    from .perturbation import (build_mixture_perturbation,
                               build_product_perturbation,
                               chain_from_candidate)
    rows = []
    results = []
    for idx, point in enumerate(candidates):
        try:
            if mixture_size == 1:
                pert = build_product_perturbation(R, point, policy)
            else:
                chain = chain_from_candidate(R, point, mixture_size)
                if chain is None:
                    raise BoundError(
                        "no coupled chain of the requested size from here")
                pert = build_mixture_perturbation(R, chain, policy)
            result = bound_performance(pert, F)
            rows.append(SweepRow(idx, point[0], point[1], pert.C,
                                 result.F_low, result.F_up))
            results.append(result)
        except Exception as exc:  # noqa: BLE001 - sweep must continue
            rows.append(SweepRow(idx, point[0], point[1], float("nan"),
                                 None, None, error=str(exc)))
            results.append(None)
    return rows, results


def sweep_summary(rows) -> dict:
    ups = [r.F_up for r in rows if r.F_up is not None]
    lows = [r.F_low for r in rows if r.F_low is not None]
    return {
        "min_F_up": min(ups) if ups else None,
        "max_F_low": max(lows) if lows else None,
        "failed": sum(1 for r in rows if r.error),
    }


def sweep_csv(rows) -> str:
    lines = ["candidate_index,rho,sigma,C,F_low,F_up"]
    for r in rows:
        low = "" if r.F_low is None else repr(r.F_low)
        up = "" if r.F_up is None else repr(r.F_up)
        c = "" if r.C != r.C else repr(r.C)  # NaN when the candidate failed
        lines.append(f"{r.index},{r.rho!r},{r.sigma!r},{c},{low},{up}")
    return "\n".join(lines) + "\n"


def dump_lp(constraints, objective=None) -> str:
    """Plain-text rendering of the constraint rows for diffing."""
    names = [f"{slot}.{cname}" for slot in SLOTS for cname in COEFF_NAMES]
    lines = []
    for c in constraints:
        terms = [f"{c.row[k]:+.12g}*{names[k]}"
                 for k in np.nonzero(np.abs(c.row) > 1e-15)[0]]
        lhs = " ".join(terms) if terms else "0"
        lines.append(f"{c.label}: {lhs} <= {c.rhs:.12g}")
    return "\n".join(lines) + "\n"
