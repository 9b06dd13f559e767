"""Piecewise expanding maps of [0,1] and their derivative-growth quantities.

Two map variants are supported.  A LinearMarkov map is given by finitely
many affine branches with exact rational slopes and breakpoints; every
quantity attached to it (cylinders, thetas, transfer images) is exact.  A
SmoothFullBranch map is generated from positive weight functions p_i with
sum p_i = 1: its inverse branches are s_i(x) = a_i + int_0^x p_i, which
makes Lebesgue measure invariant by construction.

The growth quantities are: theta (per cylinder of the iterate, the sup of
1/|DT^k|), their beta-weighted sums over all level-k cylinders, and the
sub-multiplicative growth rate estimated by the Fekete minimum of the k-th
roots.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, ResourceError, UnsupportedVariantError, ValidationError
from .exact import QQ_ONE, QQ_ZERO, qq, qq_str, snap_dyadic

#: Hard default on the number of cylinders any operation may materialize.
DEFAULT_CYLINDER_CAP = 10**6

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Interval:
    """A subinterval of [0,1] with exact rational endpoints.

    The half-open convention [lo, hi) is the default throughout; the two
    flags only matter for display since everything downstream works modulo
    null sets.
    """

    lo: object
    hi: object
    closed_left: bool = True
    closed_right: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lo", qq(self.lo))
        object.__setattr__(self, "hi", qq(self.hi))
        if not (0 <= self.lo < self.hi <= 1):
            raise ValidationError(f"interval [{self.lo}, {self.hi}] not inside [0,1]")

    @property
    def length(self):
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= x < self.hi

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo >= hi:
            return None
        return Interval(lo, hi)

    def is_subset(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def __str__(self):
        return f"[{qq_str(self.lo)}, {qq_str(self.hi)})"


UNIT_INTERVAL = Interval(0, 1, closed_right=True)


@dataclass(frozen=True)
class LinearBranch:
    """Affine branch T(x) = slope*x + offset on a half-open domain."""

    domain: Interval
    slope: object
    offset: object

    def __post_init__(self):
        object.__setattr__(self, "slope", qq(self.slope))
        object.__setattr__(self, "offset", qq(self.offset))
        if abs(self.slope) <= 1:
            raise ValidationError(f"branch slope {self.slope} is not expanding")
        img = self.image
        if img.lo < 0 or img.hi > 1:
            raise ValidationError(f"branch image {img} leaves [0,1]")

    @property
    def image(self) -> Interval:
        a = self.slope * self.domain.lo + self.offset
        b = self.slope * self.domain.hi + self.offset
        return Interval(min(a, b), max(a, b))

    def forward(self, x):
        return self.slope * x + self.offset

    def inverse(self, y):
        return (y - self.offset) / self.slope


@dataclass(frozen=True)
class WeightFunction:
    """Strictly positive weight on [0,1], constant or a finite Fourier series.

    For kind 'fourier' the coefficients are (a0, c1, s1, c2, s2, ...) in
    p(x) = a0 + sum_j c_j cos(2 pi j x) + s_j sin(2 pi j x).  A sufficient
    positivity certificate is a0 > sum |c_j| + |s_j|.
    """

    kind: str
    coefficients: tuple

    def __post_init__(self):
        if self.kind not in ("constant", "fourier"):
            raise ValidationError(f"unknown weight kind {self.kind!r}")
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if self.kind == "constant" and len(coeffs) != 1:
            raise ValidationError("constant weight takes exactly one coefficient")
        if self.kind == "fourier" and len(coeffs) % 2 == 0:
            raise ValidationError("fourier weight takes a0 plus cos/sin pairs")
        if self.lower_bound() <= 0 and self.sampled_min() <= 0:
            raise ValidationError("weight is not strictly positive on [0,1]")

    def __call__(self, x):
        """Evaluate at a float or numpy array."""
        if self.kind == "constant":
            if isinstance(x, np.ndarray):
                return np.full_like(x, self.coefficients[0], dtype=float)
            return self.coefficients[0]
        a0 = self.coefficients[0]
        out = a0 if not isinstance(x, np.ndarray) else np.full_like(x, a0, dtype=float)
        for j in range(1, (len(self.coefficients) + 1) // 2):
            c = self.coefficients[2 * j - 1]
            s = self.coefficients[2 * j] if 2 * j < len(self.coefficients) else 0.0
            ang = TWO_PI * j * x
            out = out + c * np.cos(ang) + s * np.sin(ang)
        return out

    def antiderivative(self, x):
        """int_0^x p, in closed form (so no quadrature error anywhere)."""
        if self.kind == "constant":
            return self.coefficients[0] * x
        a0 = self.coefficients[0]
        out = a0 * x
        for j in range(1, (len(self.coefficients) + 1) // 2):
            c = self.coefficients[2 * j - 1]
            s = self.coefficients[2 * j] if 2 * j < len(self.coefficients) else 0.0
            w = TWO_PI * j
            out = out + c * np.sin(w * x) / w - s * (np.cos(w * x) - 1.0) / w
        return out

    @property
    def mass(self) -> float:
        """int_0^1 p; the oscillatory terms integrate to zero."""
        return self.coefficients[0]

    def lower_bound(self) -> float:
        if self.kind == "constant":
            return self.coefficients[0]
        return self.coefficients[0] - sum(abs(c) for c in self.coefficients[1:])

    def upper_bound(self) -> float:
        if self.kind == "constant":
            return self.coefficients[0]
        return self.coefficients[0] + sum(abs(c) for c in self.coefficients[1:])

    def lipschitz_bound(self) -> float:
        """Bound on |p'|, from the coefficients."""
        if self.kind == "constant":
            return 0.0
        bound = 0.0
        for j in range(1, (len(self.coefficients) + 1) // 2):
            c = abs(self.coefficients[2 * j - 1])
            s = abs(self.coefficients[2 * j]) if 2 * j < len(self.coefficients) else 0.0
            bound += TWO_PI * j * (c + s)
        return bound

    def sampled_min(self, n: int = 4096) -> float:
        xs = np.linspace(0.0, 1.0, n, endpoint=False)
        return float(np.min(self(xs)))


@dataclass(frozen=True)
class PiecewiseMap:
    """A piecewise expanding map of [0,1], linear-Markov or smooth full-branch.

    Exactly one of `branches` (LinearMarkov) and `weights` (SmoothFullBranch)
    is set.  `smoothness` is the Hoelder exponent of DT on branches; None
    encodes infinity (both generators here are piecewise real-analytic).
    """

    branches: Optional[tuple] = None
    weights: Optional[tuple] = None
    smoothness: Optional[float] = None

    def __post_init__(self):
        if (self.branches is None) == (self.weights is None):
            raise ValidationError("exactly one of branches/weights must be given")
        if self.branches is not None:
            branches = tuple(self.branches)
            object.__setattr__(self, "branches", branches)
            pos = QQ_ZERO
            for b in branches:
                if b.domain.lo != pos:
                    raise ValidationError("branch domains must tile [0,1] in order")
                pos = b.domain.hi
            if pos != QQ_ONE:
                raise ValidationError("branch domains must end at 1")
        else:
            weights = tuple(self.weights)
            object.__setattr__(self, "weights", weights)
            if len(weights) < 2:
                raise ValidationError("need at least two branches")

    # -- shared shape ----------------------------------------------------

    @property
    def is_linear(self) -> bool:
        return self.branches is not None

    @property
    def branch_count(self) -> int:
        return len(self.branches) if self.is_linear else len(self.weights)

    @property
    def smoothness_exponent(self) -> float:
        return math.inf if self.smoothness is None else self.smoothness

    def branch_domains(self) -> list:
        """Half-open branch domains, in order.

        For smooth maps the cut points int_0^1 p_j are floats snapped to
        exact dyadics so the domains can serve as step-function support.
        """
        if self.is_linear:
            return [b.domain for b in self.branches]
        cuts = self.branch_cuts()
        out = []
        for i in range(len(cuts) - 1):
            out.append(Interval(snap_dyadic(cuts[i]), snap_dyadic(cuts[i + 1])))
        return out

    def branch_image(self, i: int) -> Interval:
        if self.is_linear:
            return self.branches[i].image
        return UNIT_INTERVAL

    @property
    def is_full_branch(self) -> bool:
        if not self.is_linear:
            return True
        return all(b.image.lo == 0 and b.image.hi == 1 for b in self.branches)

    @property
    def is_markov(self) -> bool:
        """Each branch image is a union of branch domains."""
        if not self.is_linear:
            return True
        cuts = {QQ_ZERO, QQ_ONE}
        cuts.update(b.domain.lo for b in self.branches)
        cuts.update(b.domain.hi for b in self.branches)
        return all(b.image.lo in cuts and b.image.hi in cuts for b in self.branches)

    # -- smooth-map internals ---------------------------------------------

    def branch_cuts(self) -> list:
        """Float cut points 0 = a_1 < ... < a_{k+1} = 1 for smooth maps."""
        if self.is_linear:
            raise UnsupportedVariantError("branch cuts are a smooth-map notion")
        cuts = [0.0]
        for w in self.weights:
            cuts.append(cuts[-1] + w.mass)
        total = cuts[-1]
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"weight masses sum to {total}, not 1")
        cuts[-1] = 1.0
        return cuts

    def inverse_branch(self, i: int, y):
        """s_i(y): the inverse of branch i, exact rational or closed-form float."""
        if self.is_linear:
            return self.branches[i].inverse(y)
        cut = self.branch_cuts()[i]
        return cut + self.weights[i].antiderivative(y)

    def branch_index(self, x) -> int:
        if self.is_linear:
            for i, b in enumerate(self.branches):
                if b.domain.contains(x):
                    return i
            raise DomainError(f"x={x} not in any branch domain")
        cuts = self.branch_cuts()
        xf = float(x)
        for i in range(len(cuts) - 1):
            if cuts[i] <= xf < cuts[i + 1]:
                return i
        raise DomainError(f"x={x} not in any branch domain")


def evaluate(pmap: PiecewiseMap, x):
    """(T(x), DT(x), branch index) at x in [0,1).

    Exact rationals for LinearMarkov input; for smooth maps the branch
    inversion is solved by bisection on s_i (monotone) to 1e-12.
    """
    if not (0 <= float(x) < 1):
        raise DomainError(f"x={x} outside [0,1)")
    if pmap.is_linear:
        xr = qq(x)
        i = pmap.branch_index(xr)
        b = pmap.branches[i]
        return b.forward(xr), b.slope, i
    xf = float(x)
    i = pmap.branch_index(xf)
    w = pmap.weights[i]
    cut = pmap.branch_cuts()[i]
    # solve cut + int_0^y p_i = x for y by bisection; s_i is increasing
    lo, hi = 0.0, 1.0
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        if cut + w.antiderivative(mid) <= xf:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    y = 0.5 * (lo + hi)
    return y, 1.0 / w(y), i


@dataclass(frozen=True)
class Cylinder:
    """A maximal interval of monotonicity of T^k with its derivative sup.

    theta = sup over the cylinder of 1/|DT^k|, exact for LinearMarkov maps;
    for smooth maps it is a sampled estimate inflated by a Lipschitz bound
    and theta_tolerance reports the inflation.
    """

    word: tuple
    support: Interval
    theta: object
    theta_tolerance: float = 0.0


def _linear_cylinders(pmap: PiecewiseMap, k: int, cap: int) -> list:
    level = [
        Cylinder((i,), b.domain, abs(QQ_ONE / b.slope)) for i, b in enumerate(pmap.branches)
    ]
    for _ in range(k - 1):
        nxt = []
        for i, b in enumerate(pmap.branches):
            inv_theta = abs(QQ_ONE / b.slope)
            img = b.image
            for cyl in level:
                hit = cyl.support.intersect(img)
                if hit is None:
                    continue
                a = b.inverse(hit.lo)
                c = b.inverse(hit.hi)
                sup = Interval(min(a, c), max(a, c))
                nxt.append(Cylinder((i,) + cyl.word, sup, inv_theta * cyl.theta))
                if len(nxt) > cap:
                    raise ResourceError(f"cylinder cap {cap} exceeded at level k={k}")
        level = nxt
    return sorted(level, key=lambda c: c.support.lo)


def _smooth_cylinders(pmap: PiecewiseMap, k: int, cap: int, samples: int = 64) -> list:
    kbr = pmap.branch_count
    if kbr**k > cap:
        raise ResourceError(f"cylinder cap {cap} exceeded at level k={k}")
    p_max = max(w.upper_bound() for w in pmap.weights)
    p_lip = max(w.lipschitz_bound() for w in pmap.weights)
    # Lipschitz bound for u -> prod_j p_{i_j}(y_j(u)) along the backward chain;
    # the chain contracts by p_max per level, hence the geometric factor
    lip = p_lip * p_max ** (k - 1) / max(1.0 - p_max, 1e-9)
    grid = np.linspace(0.0, 1.0, samples, endpoint=False) + 0.5 / samples
    tol = lip / (2.0 * samples)
    cuts = pmap.branch_cuts()

    # Parametrize each cylinder by u = T^k x.  Then x and the intermediate
    # orbit points are backward compositions of the closed-form inverse
    # branches, and 1/|DT^k(x)| = prod_j p_{i_j}(chain value), so no forward
    # (bisection) evaluation is ever needed.
    out = []
    stack = [((), grid, np.ones_like(grid), 0.0, 1.0)]
    while stack:
        word, ys, prod, lo, hi = stack.pop()
        if len(word) == k:
            theta = float(np.max(prod)) + tol
            lo_q, hi_q = snap_dyadic(lo), snap_dyadic(hi)
            if lo_q < hi_q:
                out.append(Cylinder(word, Interval(lo_q, hi_q), theta, theta_tolerance=tol))
            continue
        for i in reversed(range(kbr)):
            w = pmap.weights[i]
            # new x = s_i(old chain), so 1/|DT| at the new x is p_i(old chain)
            stack.append(
                (
                    (i,) + word,
                    cuts[i] + w.antiderivative(ys),
                    prod * w(ys),
                    cuts[i] + w.antiderivative(lo),
                    cuts[i] + w.antiderivative(hi),
                )
            )
    return sorted(out, key=lambda c: c.support.lo)


def monotonicity_partition(
    pmap: PiecewiseMap, k: int, cap: int = DEFAULT_CYLINDER_CAP
) -> list:
    """All level-k cylinders (intervals of monotonicity of T^k), left to right.

    Words with empty interior (inadmissible transitions of a non-full Markov
    map) are dropped, so the supports partition (0,1) up to endpoints.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    if pmap.is_linear:
        return _linear_cylinders(pmap, k, cap)
    return _smooth_cylinders(pmap, k, cap)


def theta_sum(
    pmap: PiecewiseMap, beta: float, k: int, cap: int = DEFAULT_CYLINDER_CAP
) -> float:
    """Sum over level-k cylinders of theta^beta.

    Cylinders are grouped by their exact theta before exponentiation, which
    keeps the result exact to the last float bit for uniform-slope maps and
    exactly rational (then rounded once) for integer beta.
    """
    if beta < 0:
        raise DomainError("beta must be >= 0")
    cyls = monotonicity_partition(pmap, k, cap=cap)
    groups = Counter()
    for c in cyls:
        groups[c.theta] += 1
    if pmap.is_linear and float(beta).is_integer():
        b = int(beta)
        return float(sum(count * th**b for th, count in groups.items()))
    return float(sum(count * float(th) ** beta for th, count in groups.items()))


@dataclass(frozen=True)
class ThetaReport:
    """Per-level growth sums and the Fekete estimate of their growth rate.

    By sub-multiplicativity min_k (theta_sum_k)^(1/k) both upper-bounds and
    converges to the true growth rate.
    """

    beta: float
    per_k: tuple
    fekete_estimate: float
    k_max: int

    def to_jsonable(self) -> dict:
        return {
            "beta": self.beta,
            "per_k": [[k, v] for k, v in self.per_k],
            "fekete_estimate": self.fekete_estimate,
            "k_max": self.k_max,
        }


def theta_infinity(
    pmap: PiecewiseMap, beta: float, k_max: int, cap: int = DEFAULT_CYLINDER_CAP
) -> ThetaReport:
    """ThetaReport with the Fekete (minimum of k-th roots) growth estimate."""
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    per_k = []
    fekete = math.inf
    for k in range(1, k_max + 1):
        s = theta_sum(pmap, beta, k, cap=cap)
        per_k.append((k, s))
        fekete = min(fekete, s ** (1.0 / k))
    return ThetaReport(float(beta), tuple(per_k), fekete, k_max)


def build_map_from_weights(
    weights: Sequence[WeightFunction], renormalize: bool = False, tol: float = 1e-9
) -> PiecewiseMap:
    """Smooth full-branch map with inverse branches s_i(x) = a_i + int_0^x p_i.

    Requires sum_i p_i = 1 (so Lebesgue measure is invariant).  With
    renormalize=True a deviating constant part is rescaled globally, which
    is only possible when the oscillatory parts already cancel.  If every
    weight is constant the result is returned as the equivalent exact
    LinearMarkov map.
    """
    weights = tuple(
        w if isinstance(w, WeightFunction) else WeightFunction(*w) for w in weights
    )
    for w in weights:
        if w.lower_bound() <= 0 and w.sampled_min() <= 0:
            raise ValidationError("weights must be strictly positive")
    total = sum(w.mass for w in weights)
    max_pairs = max(
        (len(w.coefficients) - 1 + 1) // 2 if w.kind == "fourier" else 0 for w in weights
    )
    osc_defect = 0.0
    for j in range(1, max_pairs + 1):
        for off in (2 * j - 1, 2 * j):
            ssum = 0.0
            for w in weights:
                if w.kind == "fourier" and off < len(w.coefficients):
                    ssum += w.coefficients[off]
            osc_defect = max(osc_defect, abs(ssum))
    if abs(total - 1.0) > tol or osc_defect > tol:
        if not renormalize or osc_defect > tol:
            raise ValidationError(
                f"weights do not sum to 1 (constant defect {total - 1.0:.3g}, "
                f"oscillatory defect {osc_defect:.3g})"
            )
        weights = tuple(
            WeightFunction(w.kind, tuple(c / total for c in w.coefficients))
            for w in weights
        )
    if all(w.kind == "constant" for w in weights):
        # exact: constant weight p_i gives an affine branch of slope 1/p_i
        branches = []
        pos = QQ_ZERO
        for w in weights:
            p = qq(w.coefficients[0])
            dom = Interval(pos, pos + p)
            slope = 1 / p
            branches.append(LinearBranch(dom, slope, -pos / p))
            pos = pos + p
        return PiecewiseMap(branches=tuple(branches))
    return PiecewiseMap(weights=weights)


def verify_lebesgue_invariance(target, tol: float = 1e-10, grid: int = 2048):
    """(ok, max_defect) for sup_x |sum_i 1/|DT(s_i(x))| - 1|.

    Accepts a PiecewiseMap or a raw sequence of WeightFunction (so that
    defective weight lists can be diagnosed before map construction).
    Exact for LinearMarkov maps.
    """
    if isinstance(target, PiecewiseMap) and target.is_linear:
        cuts = {QQ_ZERO, QQ_ONE}
        for b in target.branches:
            cuts.update((b.image.lo, b.image.hi))
        pts = sorted(cuts)
        defect = QQ_ZERO
        for lo, hi in zip(pts[:-1], pts[1:]):
            mid = (lo + hi) / 2
            total = QQ_ZERO
            for b in target.branches:
                if b.image.contains(mid):
                    total += abs(QQ_ONE / b.slope)
            defect = max(defect, abs(total - 1))
        return (float(defect) <= tol), float(defect)
    weights = target.weights if isinstance(target, PiecewiseMap) else tuple(target)
    xs = np.linspace(0.0, 1.0, grid, endpoint=False)
    total = np.zeros_like(xs)
    for w in weights:
        total += w(xs)
    defect = float(np.max(np.abs(total - 1.0)))
    return defect <= tol, defect


# -- serialization -------------------------------------------------------


def map_to_jsonable(pmap: PiecewiseMap) -> dict:
    if pmap.is_linear:
        return {
            "type": "linear_markov",
            "branches": [
                {
                    "domain": [qq_str(b.domain.lo), qq_str(b.domain.hi)],
                    "slope": qq_str(b.slope),
                    "offset": qq_str(b.offset),
                }
                for b in pmap.branches
            ],
        }
    return {
        "type": "smooth_weights",
        "weights": [
            {"kind": w.kind, "coeffs": list(w.coefficients)} for w in pmap.weights
        ],
    }


def map_from_jsonable(obj: dict) -> PiecewiseMap:
    kind = obj.get("type")
    if kind == "linear_markov":
        branches = []
        for b in obj["branches"]:
            lo, hi = b["domain"]
            branches.append(LinearBranch(Interval(qq(lo), qq(hi)), qq(b["slope"]), qq(b["offset"])))
        return PiecewiseMap(branches=tuple(branches))
    if kind == "smooth_weights":
        weights = tuple(WeightFunction(w["kind"], tuple(w["coeffs"])) for w in obj["weights"])
        return build_map_from_weights(weights)
    raise ValidationError(f"unknown map type {kind!r}")
