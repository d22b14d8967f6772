"""Random walk model types, validation, functionals, and example fixtures.

The state space is the quarter-plane of integer pairs (i, j) with i, j >= 0.
Transition probabilities are translation invariant within four regions: the
interior (i, j >= 1), the horizontal axis (i >= 1, j = 0), the vertical axis
(i = 0, j >= 1) and the origin.  A walk is described by 17 rates:

* ``interior[s + 1, t + 1]`` is p_{s,t}, the interior probability of a step
  (s, t) for s, t in {-1, 0, 1},
* ``horizontal`` is (h_{-1}, h_0, h_1), the along-axis rates on j = 0,
* ``vertical`` is (v_{-1}, v_0, v_1), the along-axis rates on i = 0.

On the horizontal axis the walk can also move up with the interior rates
p_{s,1}; on the vertical axis right with p_{1,t}.  The origin moves right
with h_1, up with v_1 and diagonally with p_{1,1}; the remainder stays put.
"""

from __future__ import annotations

import dataclasses
import enum
import json
from importlib import resources

import numpy as np

ROW_SUM_TOL = 1e-12


class Region(enum.Enum):
    INTERIOR = "interior"
    HORIZONTAL_AXIS = "horizontal_axis"
    VERTICAL_AXIS = "vertical_axis"
    ORIGIN = "origin"


def region_of(i: int, j: int) -> Region:
    """Classify a state of the quarter-plane into one of the four regions."""
    if i < 0 or j < 0:
        raise ValueError(f"state ({i}, {j}) outside the quarter-plane")
    if i == 0 and j == 0:
        return Region.ORIGIN
    if j == 0:
        return Region.HORIZONTAL_AXIS
    if i == 0:
        return Region.VERTICAL_AXIS
    return Region.INTERIOR


@dataclasses.dataclass(frozen=True)
class RandomWalk:
    """A homogeneous nearest-neighbor random walk in the quarter-plane."""

    interior: np.ndarray  # shape (3, 3), entry [s+1, t+1] = p_{s,t}
    horizontal: np.ndarray  # (h_{-1}, h_0, h_1)
    vertical: np.ndarray  # (v_{-1}, v_0, v_1)

    def __post_init__(self):
        object.__setattr__(self, "interior", np.asarray(self.interior, dtype=float))
        object.__setattr__(self, "horizontal", np.asarray(self.horizontal, dtype=float))
        object.__setattr__(self, "vertical", np.asarray(self.vertical, dtype=float))
        if self.interior.shape != (3, 3):
            raise ValueError("interior must be a 3x3 array")
        if self.horizontal.shape != (3,) or self.vertical.shape != (3,):
            raise ValueError("horizontal and vertical must have 3 entries")
        self.interior.flags.writeable = False
        self.horizontal.flags.writeable = False
        self.vertical.flags.writeable = False

    def p(self, s: int, t: int) -> float:
        """Interior rate p_{s,t}."""
        return float(self.interior[s + 1, t + 1])

    def h(self, s: int) -> float:
        return float(self.horizontal[s + 1])

    def v(self, t: int) -> float:
        return float(self.vertical[t + 1])

    @property
    def north_mass(self) -> float:
        """p_{1,0} + p_{1,1} + p_{0,1}: drift mass to the east/northeast/north."""
        return self.p(1, 0) + self.p(1, 1) + self.p(0, 1)

    def to_dict(self) -> dict:
        return {
            "interior": self.interior.tolist(),
            "horizontal": self.horizontal.tolist(),
            "vertical": self.vertical.tolist(),
        }

    @staticmethod
    def from_dict(data: dict) -> "RandomWalk":
        return RandomWalk(
            interior=np.array(data["interior"], dtype=float),
            horizontal=np.array(data["horizontal"], dtype=float),
            vertical=np.array(data["vertical"], dtype=float),
        )


@dataclasses.dataclass(frozen=True)
class PerformanceFunctional:
    """Component-wise linear reward function F(i, j).

    F(i, 0) = f10 + f11 * i on the horizontal axis (i >= 1),
    F(0, j) = f20 + f22 * j on the vertical axis (j >= 1),
    F(0, 0) = f30 at the origin,
    F(i, j) = f40 + f41 * i + f42 * j in the interior.
    """

    f10: float = 0.0
    f11: float = 0.0
    f20: float = 0.0
    f22: float = 0.0
    f30: float = 0.0
    f40: float = 0.0
    f41: float = 0.0
    f42: float = 0.0

    def coefficients(self) -> np.ndarray:
        return np.array(
            [self.f10, self.f11, self.f20, self.f22,
             self.f30, self.f40, self.f41, self.f42]
        )

    @staticmethod
    def from_coefficients(c) -> "PerformanceFunctional":
        c = np.asarray(c, dtype=float)
        if c.shape != (8,):
            raise ValueError("expected 8 coefficients")
        return PerformanceFunctional(*c)

    def is_nonnegative(self) -> bool:
        """Whether F(i, j) >= 0 on the whole quarter-plane.

        Within each region F is linear, so nonnegativity reduces to the
        slopes being nonnegative and the region's corner value being
        nonnegative.
        """
        checks = [
            (self.f10 + self.f11, (self.f11,)),  # horizontal axis, corner i=1
            (self.f20 + self.f22, (self.f22,)),  # vertical axis, corner j=1
            (self.f30, ()),
            (self.f40 + self.f41 + self.f42, (self.f41, self.f42)),
        ]
        for corner, slopes in checks:
            if corner < 0 or any(s < 0 for s in slopes):
                return False
        return True

    @staticmethod
    def preset(name: str) -> "PerformanceFunctional":
        """Named presets: 'f1' is the mean first coordinate, 'f2' the
        probability of the empty system."""
        if name == "f1":
            return PerformanceFunctional(f11=1.0, f41=1.0)
        if name == "f2":
            return PerformanceFunctional(f30=1.0)
        raise ValueError(f"unknown preset {name!r}")


F1 = PerformanceFunctional.preset("f1")
F2 = PerformanceFunctional.preset("f2")


def evaluate_functional(F: PerformanceFunctional, i: int, j: int) -> float:
    """Evaluate the region-appropriate linear form of F at a state."""
    region = region_of(i, j)
    if region is Region.ORIGIN:
        return F.f30
    if region is Region.HORIZONTAL_AXIS:
        return F.f10 + F.f11 * i
    if region is Region.VERTICAL_AXIS:
        return F.f20 + F.f22 * j
    return F.f40 + F.f41 * i + F.f42 * j


@dataclasses.dataclass
class ValidationReport:
    violations: list = dataclasses.field(default_factory=list)
    warnings: list = dataclasses.field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, message: str, magnitude: float):
        self.violations.append((message, magnitude))

    def warn(self, message: str):
        self.warnings.append(message)


def validate_walk(R: RandomWalk, tol: float = ROW_SUM_TOL) -> ValidationReport:
    """Check the probability constraints a quarter-plane walk must satisfy.

    The three row sums are the interior row, the horizontal-axis row
    (h rates plus the upward interior rates p_{s,1}) and the vertical-axis
    row (v rates plus the rightward rates p_{1,t}).
    """
    report = ValidationReport()
    interior_sum = float(R.interior.sum())
    if abs(interior_sum - 1.0) > tol:
        report.add("interior row sum != 1", abs(interior_sum - 1.0))
    horiz_sum = float(R.horizontal.sum() + R.interior[:, 2].sum())
    if abs(horiz_sum - 1.0) > tol:
        report.add("horizontal-axis row sum != 1", abs(horiz_sum - 1.0))
    vert_sum = float(R.vertical.sum() + R.interior[2, :].sum())
    if abs(vert_sum - 1.0) > tol:
        report.add("vertical-axis row sum != 1", abs(vert_sum - 1.0))
    origin_out = R.h(1) + R.v(1) + R.p(1, 1)
    if origin_out > 1.0 + tol:
        report.add("origin row sum > 1", origin_out - 1.0)
    for name, arr in (("interior", R.interior),
                      ("horizontal", R.horizontal),
                      ("vertical", R.vertical)):
        low = float(arr.min())
        if low < -tol:
            report.add(f"negative {name} rate", -low)
    if R.north_mass <= 0:
        # Walks with no north, northeast or east interior movement need a
        # different (countable-sum) treatment and are out of scope.
        report.warn("p_{1,0} + p_{1,1} + p_{0,1} = 0: unsupported regime")
    return report


def normalize_walk(R: RandomWalk) -> RandomWalk:
    """Rescale each row by its sum.  Only applied on explicit request."""
    interior = R.interior / R.interior.sum()
    up = interior[:, 2].sum()
    right = interior[2, :].sum()
    hsum = R.horizontal.sum()
    vsum = R.vertical.sum()
    horizontal = R.horizontal * ((1.0 - up) / hsum) if hsum > 0 else R.horizontal
    vertical = R.vertical * ((1.0 - right) / vsum) if vsum > 0 else R.vertical
    return RandomWalk(interior, horizontal, vertical)


# The five example walks used throughout the tests.  Entries are
# (interior rows for s = -1, 0, 1; horizontal; vertical).
_FIXTURES = {
    "EX1": {
        "interior": [[0.0, 0.0, 0.15],
                     [0.15, 0.65, 0.0],
                     [0.0, 0.05, 0.0]],
        "horizontal": [0.0, 0.7, 0.15],
        "vertical": [0.15, 0.7071, 0.0929],
    },
    "EX2": {
        "interior": [[0.0, 0.2, 0.2],
                     [0.2, 0.1, 0.05],
                     [0.2, 0.05, 0.0]],
        "horizontal": [0.1, 0.15, 0.5],
        "vertical": [0.06, 0.59, 0.1],
    },
    "EX3": {
        "interior": [[0.0, 0.2, 0.2],
                     [0.2, 0.1, 0.05],
                     [0.2, 0.05, 0.0]],
        "horizontal": [0.1, 0.15, 0.5],
        "vertical": [0.06, 0.577, 0.113],
    },
    "EX4": {
        "interior": [[0.0, 0.3, 0.1],
                     [0.3, 0.0, 0.1],
                     [0.1, 0.1, 0.0]],
        "horizontal": [0.02, 0.68, 0.1],
        "vertical": [0.03, 0.67, 0.1],
    },
    "EX5": {
        "interior": [[0.0, 0.0, 0.2],
                     [0.3, 0.4, 0.0],
                     [0.0, 0.1, 0.0]],
        "horizontal": [0.0, 0.7, 0.1],
        "vertical": [0.03, 0.87, 0.0],
    },
}

FIXTURE_NAMES = tuple(sorted(_FIXTURES))

# Reward presets matching the numerical experiments: the queueing examples
# EX4 and EX5 are studied with the mean first coordinate and the empty-system
# probability respectively.
_FIXTURE_FUNCTIONALS = {
    "EX3": "f1",
    "EX4": "f1",
    "EX5": "f2",
}


def load_fixture(name: str):
    """Return (walk, functional-or-None) for one of the named examples."""
    try:
        data = _FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURE_NAMES}")
    walk = RandomWalk.from_dict(data)
    preset = _FIXTURE_FUNCTIONALS.get(name)
    functional = PerformanceFunctional.preset(preset) if preset else None
    return walk, functional


def _functional_to_dict(F: PerformanceFunctional) -> dict:
    return {
        "f10": F.f10, "f11": F.f11, "f20": F.f20, "f22": F.f22,
        "f30": F.f30, "f40": F.f40, "f41": F.f41, "f42": F.f42,
    }


def _functional_from_dict(data: dict) -> PerformanceFunctional:
    return PerformanceFunctional(
        f10=data.get("f10", 0.0), f11=data.get("f11", 0.0),
        f20=data.get("f20", 0.0), f22=data.get("f22", 0.0),
        f30=data.get("f30", 0.0), f40=data.get("f40", 0.0),
        f41=data.get("f41", 0.0), f42=data.get("f42", 0.0),
    )


def save_model(path, R: RandomWalk, F: PerformanceFunctional | None = None):
    """Write a walk (and optional functional) as a JSON model file."""
    doc = R.to_dict()
    if F is not None:
        doc["functional"] = _functional_to_dict(F)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path):
    """Read a JSON model file; returns (walk, functional-or-None)."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        walk = RandomWalk.from_dict(doc)
    except KeyError as exc:
        raise ValueError(f"model file is missing the {exc} block")
    functional = None
    if "functional" in doc:
        functional = _functional_from_dict(doc["functional"])
    return walk, functional


def transition_rates(R: RandomWalk, i: int, j: int) -> dict:
    """Outgoing transition distribution from a state, as a map from
    displacement (di, dj) to probability.  Self-loops absorb the remainder
    at the origin (the origin moves east with h_1, north with v_1 and
    northeast with the interior diagonal rate)."""
    region = region_of(i, j)
    rates: dict = {}
    if region is Region.INTERIOR:
        for s in (-1, 0, 1):
            for t in (-1, 0, 1):
                p = R.p(s, t)
                if p != 0.0:
                    rates[(s, t)] = p
    elif region is Region.HORIZONTAL_AXIS:
        for s in (-1, 0, 1):
            if R.h(s) != 0.0:
                rates[(s, 0)] = R.h(s)
            p = R.p(s, 1)
            if p != 0.0:
                rates[(s, 1)] = p
    elif region is Region.VERTICAL_AXIS:
        for t in (-1, 0, 1):
            if R.v(t) != 0.0:
                rates[(0, t)] = rates.get((0, t), 0.0) + R.v(t)
            p = R.p(1, t)
            if p != 0.0:
                rates[(1, t)] = p
    else:
        if R.h(1) != 0.0:
            rates[(1, 0)] = R.h(1)
        if R.v(1) != 0.0:
            rates[(0, 1)] = R.v(1)
        if R.p(1, 1) != 0.0:
            rates[(1, 1)] = R.p(1, 1)
        rates[(0, 0)] = 1.0 - sum(rates.values())
    return rates


def fixture_path(name: str):
    """Path to the bundled JSON model file for a named example."""
    if name not in _FIXTURES:
        raise KeyError(f"unknown fixture {name!r}")
    return resources.files("qwgeom") / "fixtures" / f"{name.lower()}.json"
