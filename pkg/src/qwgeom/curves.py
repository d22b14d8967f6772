"""Algebraic curves attached to a quarter-plane random walk.

A measure m(i,j) = rho^i sigma^j satisfies the interior balance equation
exactly when (rho, sigma) is a zero of the bivariate polynomial

    Q(x, y) = A(x) y^2 + B(x) y + C(x),

where A, B, C are the quadratics (coefficients low to high in x)

    A(x) = sum_s x^{1-s} p_{s,-1},
    B(x) = sum_s x^{1-s} p_{s,0} - x,
    C(x) = sum_s x^{1-s} p_{s,1}.

The boundary balance equations give two more curves.  Horizontal balance
holds exactly on H(x, y) = N(x) - y A(x) with N(x) = x - sum_s x^{1-s} h_s,
so H is explicit: y = N(x) / A(x).  Vertical balance is the mirror image
V(x, y) = Nbar(y) - x Abar(y) in the quadratic-in-x coefficients Abar, Bbar,
Cbar of Q.

Everything downstream (detection chains, coefficient solves, perturbation
targets) is built from the intersections of Q with H and V inside the open
unit square and from the branch points of Q.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from numpy.polynomial import polynomial as npoly

from .model import RandomWalk

#: points closer than this to the edge of the unit square are not considered
#: interior
EDGE_MARGIN = 1e-9

#: acceptable curve residual for points claimed to lie on a curve
CURVE_RTOL = 1e-9


def _pad(a, b):
    """Zero-pad two coefficient arrays to a common length."""
    n = max(len(a), len(b))
    out_a = np.zeros(n)
    out_a[: len(a)] = a
    out_b = np.zeros(n)
    out_b[: len(b)] = b
    return out_a, out_b


def _polyadd(a, b):
    a, b = _pad(a, b)
    return a + b


@dataclasses.dataclass(frozen=True)
class CurveSystem:
    """Coefficient tables for Q, H, V and their quadratic slices.

    All univariate coefficient arrays are ordered low degree to high.
    """

    walk: RandomWalk
    A: np.ndarray  # quadratic-in-y slice coefficients, functions of x
    B: np.ndarray
    C: np.ndarray
    Abar: np.ndarray  # quadratic-in-x slice coefficients, functions of y
    Bbar: np.ndarray
    Cbar: np.ndarray
    N: np.ndarray  # H numerator: x - sum_s x^{1-s} h_s
    Nbar: np.ndarray  # V numerator: y - sum_t y^{1-t} v_t

    def discriminant_y(self) -> np.ndarray:
        """Coefficients of Delta_y(x) = B(x)^2 - 4 A(x) C(x)."""
        return _polyadd(npoly.polymul(self.B, self.B),
                        -4.0 * npoly.polymul(self.A, self.C))

    def discriminant_x(self) -> np.ndarray:
        return _polyadd(npoly.polymul(self.Bbar, self.Bbar),
                        -4.0 * npoly.polymul(self.Abar, self.Cbar))


def build_curves(R: RandomWalk) -> CurveSystem:
    """Assemble the polynomial coefficient tables for a walk."""
    p = R.p
    h = R.h
    v = R.v
    A = np.array([p(1, -1), p(0, -1), p(-1, -1)])
    B = np.array([p(1, 0), p(0, 0) - 1.0, p(-1, 0)])
    C = np.array([p(1, 1), p(0, 1), p(-1, 1)])
    Abar = np.array([p(-1, 1), p(-1, 0), p(-1, -1)])
    Bbar = np.array([p(0, 1), p(0, 0) - 1.0, p(0, -1)])
    Cbar = np.array([p(1, 1), p(1, 0), p(1, -1)])
    N = np.array([-h(1), 1.0 - h(0), -h(-1)])
    Nbar = np.array([-v(1), 1.0 - v(0), -v(-1)])
    return CurveSystem(walk=R, A=A, B=B, C=C,
                       Abar=Abar, Bbar=Bbar, Cbar=Cbar, N=N, Nbar=Nbar)


def eval_curve(system: CurveSystem, which: str, x: float, y: float) -> float:
    """Evaluate Q, H or V (denominator-cleared forms) at a point."""
    if which == "Q":
        return float(npoly.polyval(x, system.A) * y * y
                     + npoly.polyval(x, system.B) * y
                     + npoly.polyval(x, system.C))
    if which == "H":
        return float(npoly.polyval(x, system.N)
                     - y * npoly.polyval(x, system.A))
    if which == "V":
        return float(npoly.polyval(y, system.Nbar)
                     - x * npoly.polyval(y, system.Abar))
    raise ValueError(f"unknown curve {which!r}")


def q_roots_fixed_x(system: CurveSystem, x: float):
    """Real y roots of the quadratic slice of Q at fixed x, ascending.

    Returns (roots, degenerate) where degenerate is True when the leading
    coefficient vanishes (no south-bound mass) and the slice is linear.
    """
    a = npoly.polyval(x, system.A)
    b = npoly.polyval(x, system.B)
    c = npoly.polyval(x, system.C)
    return _quadratic_roots(a, b, c)


def q_roots_fixed_y(system: CurveSystem, y: float):
    a = npoly.polyval(y, system.Abar)
    b = npoly.polyval(y, system.Bbar)
    c = npoly.polyval(y, system.Cbar)
    return _quadratic_roots(a, b, c)


def _quadratic_roots(a: float, b: float, c: float):
    if abs(a) < 1e-14:
        if abs(b) < 1e-14:
            return np.array([]), True
        return np.array([-c / b]), True
    disc = b * b - 4.0 * a * c
    if disc < -1e-12:
        return np.array([]), False
    disc = max(disc, 0.0)
    sq = np.sqrt(disc)
    # Citardauq-style evaluation to avoid cancellation in the smaller root
    if b >= 0:
        r1 = (-b - sq) / (2.0 * a)
    else:
        r1 = (-b + sq) / (2.0 * a)
    r2 = c / (a * r1) if abs(r1) > 1e-300 else (-b / a - r1)
    return np.array(sorted([r1, r2])), False


def boundary_explicit(system: CurveSystem, which: str, coordinate: float):
    """Solve H for y at a given x (or V for x at a given y).

    Returns the unique point of the curve at that coordinate, or None when
    the solved value is not positive.  Raises if the walk lacks the mass
    that makes the curve a function (zero denominator).
    """
    if which == "H":
        den = npoly.polyval(coordinate, system.A)
        if abs(den) < 1e-14:
            raise ZeroDivisionError(
                "H has no explicit form: no south-bound interior mass")
        value = npoly.polyval(coordinate, system.N) / den
        return (coordinate, value) if value > 0 else None
    if which == "V":
        den = npoly.polyval(coordinate, system.Abar)
        if abs(den) < 1e-14:
            raise ZeroDivisionError(
                "V has no explicit form: no west-bound interior mass")
        value = npoly.polyval(coordinate, system.Nbar) / den
        return (value, coordinate) if value > 0 else None
    raise ValueError(f"unknown boundary curve {which!r}")


def _real_poly_roots(coeffs: np.ndarray, imag_tol: float = 1e-9) -> np.ndarray:
    """Real roots of a univariate polynomial, via the companion matrix with
    a bisection clean-up on sign-change brackets."""
    coeffs = np.asarray(coeffs, dtype=float)
    # trim trailing (high-order) zeros
    nz = np.nonzero(np.abs(coeffs) > 1e-300)[0]
    if len(nz) == 0:
        return np.array([])
    coeffs = coeffs[: nz[-1] + 1]
    if len(coeffs) == 1:
        return np.array([])
    roots = npoly.polyroots(coeffs)
    real = np.sort(roots[np.abs(roots.imag) < imag_tol].real)
    refined = []
    for r in real:
        refined.append(_refine_root(coeffs, r))
    return np.array(refined)


def _refine_root(coeffs: np.ndarray, r: float, width: float = 1e-6) -> float:
    """Bisection refinement when a sign change brackets the eigenvalue
    estimate; otherwise the estimate is returned unchanged (even-order
    roots have no bracket)."""
    lo, hi = r - width, r + width
    flo = npoly.polyval(lo, coeffs)
    fhi = npoly.polyval(hi, coeffs)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        return r
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = npoly.polyval(mid, coeffs)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclasses.dataclass(frozen=True)
class BranchPoints:
    """The four tangency points delimiting the component of Q in the
    nonnegative quadrant.

    (x_b, y_b) and (x_t, y_t) are the points with vertical tangent
    (Delta_y = 0), labeled so that y_t >= y_b; (x_l, y_l) and (x_r, y_r)
    have horizontal tangent (Delta_x = 0), labeled so that x_l >= x_r.
    """

    x_b: float
    y_b: float
    x_t: float
    y_t: float
    x_l: float
    y_l: float
    x_r: float
    y_r: float


class BranchPointError(ValueError):
    """Raised when the discriminant roots do not bracket the curve
    component, which puts the walk outside the method's hypotheses."""


def _bracketing_pair(disc: np.ndarray, reference: float = 1.0):
    """The two nonnegative roots of a discriminant that bracket the
    reference coordinate (which always lies on the component since the
    all-ones point is on Q)."""
    roots = _real_poly_roots(disc)
    roots = roots[roots >= -1e-12]
    if len(roots) < 1:
        raise BranchPointError("discriminant has no nonnegative real roots")
    # collapse near-duplicate roots
    uniq = [roots[0]]
    for r in roots[1:]:
        if r - uniq[-1] > 1e-9:
            uniq.append(r)
    roots = np.array(uniq)
    below = roots[roots <= reference + 1e-12]
    above = roots[roots >= reference - 1e-12]
    if len(below) == 0 or len(above) == 0:
        raise BranchPointError(
            "discriminant roots do not bracket the curve component")
    lo = float(below.max())
    hi = float(above.min())
    if abs(hi - lo) < 1e-12:
        # reference sits exactly on a root; decide which side the
        # component lies on by the discriminant sign next to it
        delta = 1e-6
        left = npoly.polyval(reference - delta, disc)
        right = npoly.polyval(reference + delta, disc)
        others = roots[np.abs(roots - lo) > 1e-12]
        if left > 0 and len(others[others < lo]) > 0:
            lo = float(others[others < lo].max())
        elif right > 0 and len(others[others > hi]) > 0:
            hi = float(others[others > hi].min())
        else:
            raise BranchPointError(
                "cannot isolate the curve component around the reference")
    return lo, hi


def branch_points(system: CurveSystem) -> BranchPoints:
    """Locate the branch points of Q around its unit-square component."""
    disc_y = system.discriminant_y()
    disc_x = system.discriminant_x()
    x_lo, x_hi = _bracketing_pair(disc_y)
    y_lo, y_hi = _bracketing_pair(disc_x)

    def y_at(x):
        a = npoly.polyval(x, system.A)
        b = npoly.polyval(x, system.B)
        if abs(a) < 1e-14:
            c = npoly.polyval(x, system.C)
            return -c / b
        return -b / (2.0 * a)

    def x_at(y):
        a = npoly.polyval(y, system.Abar)
        b = npoly.polyval(y, system.Bbar)
        if abs(a) < 1e-14:
            c = npoly.polyval(y, system.Cbar)
            return -c / b
        return -b / (2.0 * a)

    pts_v = sorted([(x_lo, y_at(x_lo)), (x_hi, y_at(x_hi))],
                   key=lambda p: p[1])
    (x_b, y_b), (x_t, y_t) = pts_v
    pts_h = sorted([(x_at(y_lo), y_lo), (x_at(y_hi), y_hi)],
                   key=lambda p: p[0], reverse=True)
    (x_l, y_l), (x_r, y_r) = pts_h
    return BranchPoints(x_b=x_b, y_b=y_b, x_t=x_t, y_t=y_t,
                        x_l=x_l, y_l=y_l, x_r=x_r, y_r=y_r)


def _synthetic_deflate(coeffs: np.ndarray, root: float) -> np.ndarray:
    """Divide a polynomial by (x - root) by synthetic division, dropping
    the remainder (the caller guarantees root is a zero)."""
    c = np.asarray(coeffs, dtype=float)
    n = len(c)
    out = np.zeros(n - 1)
    carry = c[n - 1]
    for k in range(n - 2, -1, -1):
        out[k] = carry
        carry = c[k] + root * carry
    return out


def _intersect_boundary(system: CurveSystem, which: str,
                        margin: float = EDGE_MARGIN):
    """Common elimination for Q with one of the explicit boundary curves.

    Substituting the explicit form of the boundary curve into Q and
    clearing the denominator yields the quartic

        P(w) = N(w)^2 + B(w) N(w) + A(w) C(w)

    in the boundary curve's free coordinate w.  The all-ones point is
    always a root; it is deflated by synthetic division before the root
    search.  Remaining real roots in the open unit interval with a
    recovered partner coordinate in the open unit interval form the set.
    """
    if which == "H":
        A, B, C, N = system.A, system.B, system.C, system.N
    else:
        A, B, C, N = system.Abar, system.Bbar, system.Cbar, system.Nbar
    quartic = _polyadd(_polyadd(npoly.polymul(N, N), npoly.polymul(B, N)),
                       npoly.polymul(A, C))
    deflated = _synthetic_deflate(quartic, 1.0)
    points = []
    for w in _real_poly_roots(deflated):
        if not (margin < w < 1.0 - margin):
            continue
        den = npoly.polyval(w, A)
        if abs(den) < 1e-14:
            continue
        u = npoly.polyval(w, N) / den
        if not (margin < u < 1.0 - margin):
            continue
        point = (w, u) if which == "H" else (u, w)
        q_res = abs(eval_curve(system, "Q", *point))
        b_res = abs(eval_curve(system, which, *point))
        if q_res <= CURVE_RTOL and b_res <= CURVE_RTOL:
            points.append(point)
    points.sort()
    return points


def intersect_QH(system: CurveSystem):
    """Points of Q intersect H inside the open unit square (at most 3)."""
    return _intersect_boundary(system, "H")


def intersect_QV(system: CurveSystem):
    """Points of Q intersect V inside the open unit square (at most 3)."""
    return _intersect_boundary(system, "V")


def classify_point(system: CurveSystem, bp: BranchPoints, point,
                   tol: float = CURVE_RTOL):
    """Classify a point of Q into the arc and band partitions.

    The band label compares x against the vertical-tangent abscissas:
    Q_l for x <= x_b, Q_c between, Q_r for x > x_t.  The arc label first
    separates the lower and upper y-branch by the sign of 2 A(x) y + B(x)
    and then splits each branch at its horizontal-tangent point: lower
    branch gives Q00 left of that point and Q10 right of it; upper branch
    gives Q01 and Q11.
    """
    x, y = point
    if abs(eval_curve(system, "Q", x, y)) > max(tol, 1e-7):
        raise ValueError("point is not on Q")
    if x <= bp.x_b:
        band = "Q_l"
    elif x <= bp.x_t:
        band = "Q_c"
    else:
        band = "Q_r"
    slope = 2.0 * npoly.polyval(x, system.A) * y + npoly.polyval(x, system.B)
    lower = slope < 0
    # horizontal-tangent point on each branch: the one with the matching
    # y-extreme (smaller y sits on the lower branch)
    if bp.y_r <= bp.y_l:
        x_low, x_up = bp.x_r, bp.x_l
    else:
        x_low, x_up = bp.x_l, bp.x_r
    if lower:
        arc = "Q00" if x <= x_low else "Q10"
    else:
        arc = "Q01" if x <= x_up else "Q11"
    return arc, band
