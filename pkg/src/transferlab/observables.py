"""Complex step functions on [0,1] with exact breakpoint arithmetic.

A StepFunction always spans the whole interval: its breakpoints are exact
rationals starting at 0 and ending at 1, and it takes the value values[j]
on [breakpoints[j], breakpoints[j+1]).  Values may be exact scalars (int,
rational, QC) or ordinary floats/complex; operations keep exact inputs
exact and degrade to floats only when an inexact scalar enters.

Pullbacks under a piecewise map (Koopman images f o T^l), integrals, Lp
norms and inner products are all computed on common refinements with no
epsilon-snapping on the exact path.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ResourceError, ValidationError
from .exact import (
    QQ_ONE,
    QQ_ZERO,
    RATIONAL_TYPES,
    QC,
    is_exact,
    qq,
    qq_str,
    snap_dyadic,
    to_complex,
    vabs,
    vconj,
    vmul_rat,
)
from .interval_maps import DEFAULT_CYLINDER_CAP, Interval, PiecewiseMap


_NON_INT_RATIONALS = tuple(t for t in RATIONAL_TYPES if t is not int)


def _sadd(a, b):
    """a + b avoiding the rational-plus-float pitfall (never returns mpfr)."""
    ta, tb = type(a), type(b)
    if (ta is float or ta is complex) and tb in _NON_INT_RATIONALS:
        return a + float(b)
    if (tb is float or tb is complex) and ta in _NON_INT_RATIONALS:
        return float(a) + b
    return a + b


def _smul(a, b):
    ta, tb = type(a), type(b)
    if (ta is float or ta is complex) and tb in _NON_INT_RATIONALS:
        return a * float(b)
    if (tb is float or tb is complex) and ta in _NON_INT_RATIONALS:
        return float(a) * b
    return a * b


def _canonical(breakpoints: Sequence, values: Sequence):
    bps = [qq(b) for b in breakpoints]
    if len(bps) < 2 or len(values) != len(bps) - 1:
        raise ValidationError("need n+1 breakpoints for n values")
    if bps[0] != 0 or bps[-1] != 1:
        raise ValidationError("breakpoints must start at 0 and end at 1")
    out_b = [bps[0]]
    out_v = []
    for j, v in enumerate(values):
        if bps[j + 1] <= bps[j]:
            raise ValidationError("breakpoints must be strictly increasing")
        if out_v and v == out_v[-1]:
            out_b[-1] = bps[j + 1]  # merge with previous piece
            continue
        out_b.append(bps[j + 1])
        out_v.append(v)
    return tuple(out_b), tuple(out_v)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function on [0,1] with rational breakpoints."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bps, vals = _canonical(self.breakpoints, self.values)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c) -> "StepFunction":
        return cls((QQ_ZERO, QQ_ONE), (c,))

    @classmethod
    def indicator(cls, interval: Interval, value=1) -> "StepFunction":
        bps = [QQ_ZERO]
        vals = []
        if interval.lo > 0:
            bps.append(interval.lo)
            vals.append(0)
        bps.append(interval.hi)
        vals.append(value)
        if interval.hi < 1:
            bps.append(QQ_ONE)
            vals.append(0)
        return cls(tuple(bps), tuple(vals))

    @classmethod
    def from_pieces(cls, pieces: Iterable) -> "StepFunction":
        """From (lo, hi, value) triples tiling [0,1]."""
        pieces = sorted(pieces, key=lambda t: qq(t[0]))
        bps = [qq(pieces[0][0])]
        vals = []
        for lo, hi, v in pieces:
            if qq(lo) != bps[-1]:
                raise ValidationError("pieces do not tile [0,1]")
            bps.append(qq(hi))
            vals.append(v)
        return cls(tuple(bps), tuple(vals))

    # -- basic queries ------------------------------------------------------

    @property
    def piece_count(self) -> int:
        return len(self.values)

    def __call__(self, x):
        """Value at x (right-continuous; at x=1 the last piece's value)."""
        if x < 0 or x > 1:
            raise DomainError(f"x={x} outside [0,1]")
        j = bisect_right(self.breakpoints, x) - 1
        if j >= len(self.values):
            j = len(self.values) - 1
        return self.values[j]

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def is_exact(self) -> bool:
        return all(is_exact(v) for v in self.values)

    def sup_norm(self) -> float:
        return max(vabs(v) for v in self.values)

    def piece_lengths(self):
        return [b - a for a, b in zip(self.breakpoints, self.breakpoints[1:])]

    def values_as_complex(self) -> np.ndarray:
        return np.array([to_complex(v) for v in self.values], dtype=complex)

    # -- operator sugar (all delegate to combine) ---------------------------

    def __add__(self, other):
        if isinstance(other, StepFunction):
            return combine((1, 1), (self, other))
        return combine((1, 1), (self, StepFunction.constant(other)))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, StepFunction):
            return combine((1, -1), (self, other))
        return combine((1, -1), (self, StepFunction.constant(other)))

    def __mul__(self, scalar):
        return combine((scalar,), (self,))

    __rmul__ = __mul__

    def __neg__(self):
        return combine((-1,), (self,))

    def to_jsonable(self) -> dict:
        return {
            "breakpoints": [qq_str(b) for b in self.breakpoints],
            "values": [[to_complex(v).real, to_complex(v).imag] for v in self.values],
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "StepFunction":
        bps = tuple(qq(b) for b in obj["breakpoints"])
        vals = tuple(
            QC(qq(re), qq(im)) if isinstance(re, str) else complex(re, im)
            for re, im in obj["values"]
        )
        return cls(bps, vals)


ZERO = StepFunction.constant(0)


def _merged_breakpoints(fs: Sequence[StepFunction]) -> list:
    """Sorted union of breakpoints; linear merge, no hashing."""
    lists = [f.breakpoints for f in fs]
    # fast path: one function's breakpoints often contain all the others
    # (Koopman pullbacks refine); detect by a linear subset sweep
    longest = max(lists, key=len)
    if all(_is_sub_grid(bps, longest) for bps in lists):
        return list(longest)
    merged = []
    last = None
    for b in heapq.merge(*lists):
        if b != last:
            merged.append(b)
            last = b
    return merged


def _is_sub_grid(small, big) -> bool:
    if len(small) > len(big):
        return False
    i = 0
    n = len(big)
    for b in small:
        while i < n and big[i] < b:
            i += 1
        if i >= n or big[i] != b:
            return False
    return True


def _refinement(fs: Sequence[StepFunction]):
    """Common breakpoints plus, per function, the piece index for each cell."""
    merged = _merged_breakpoints(fs)
    index_rows = []
    for f in fs:
        row = []
        append = row.append
        j = 0
        bps = f.breakpoints
        nb = len(bps)
        last = len(f.values) - 1
        for cell_lo in merged[:-1]:
            while j + 1 < nb and bps[j + 1] <= cell_lo:
                j += 1
            append(j if j <= last else last)
        index_rows.append(row)
    return merged, index_rows


def combine(coeffs: Sequence, fs: Sequence[StepFunction]) -> StepFunction:
    """Pointwise sum of coeffs[i] * fs[i] on the common refinement."""
    if len(coeffs) != len(fs):
        raise ValidationError("coefficient and function lists differ in length")
    if not fs:
        raise ValidationError("combine of an empty list")
    merged, rows = _refinement(fs)
    # scale once per piece, then the per-cell work is pure addition
    scaled = [
        [_smul(c, v) for v in f.values] for c, f in zip(coeffs, fs)
    ]
    ncells = len(merged) - 1
    first_vals, first_row = scaled[0], rows[0]
    values = [first_vals[first_row[cell]] for cell in range(ncells)]
    # plain + is unsafe only when raw rationals could meet a float/complex
    # (that combination would produce a gmpy2 mpfr); QC and int mix freely
    plain = not (_scan_has_raw_rational(scaled) and _scan_has_inexact(scaled))
    for vals, row in zip(scaled[1:], rows[1:]):
        if plain:
            for cell in range(ncells):
                values[cell] = values[cell] + vals[row[cell]]
        else:
            for cell in range(ncells):
                values[cell] = _sadd(values[cell], vals[row[cell]])
    return StepFunction(tuple(merged), tuple(values))


def _scan_has_raw_rational(lists) -> bool:
    return any(type(v) in _NON_INT_RATIONALS for vals in lists for v in vals)


def _scan_has_inexact(lists) -> bool:
    return any(type(v) is float or type(v) is complex for vals in lists for v in vals)


def integrate(f: StepFunction):
    """Exact rational-weighted integral; exact scalar when all values are."""
    total = 0
    for v, (a, b) in zip(f.values, zip(f.breakpoints, f.breakpoints[1:])):
        total = _sadd(total, vmul_rat(v, b - a))
    return total


def lp_norm(f: StepFunction, p) -> float:
    """L^p norm; p=math.inf gives the essential sup of |f|."""
    if p == math.inf:
        return f.sup_norm()
    p = float(p)
    if p < 1:
        raise DomainError("p must be >= 1")
    total = 0.0
    for v, (a, b) in zip(f.values, zip(f.breakpoints, f.breakpoints[1:])):
        total += vabs(v) ** p * float(b - a)
    return total ** (1.0 / p)


def inner_product(f: StepFunction, g: StepFunction):
    """int f conj(g) dm on the common refinement; exact when both are."""
    merged, (row_f, row_g) = _refinement((f, g))
    total = 0
    for cell in range(len(merged) - 1):
        length = merged[cell + 1] - merged[cell]
        prod = _smul(f.values[row_f[cell]], vconj(g.values[row_g[cell]]))
        total = _sadd(total, vmul_rat(prod, length))
    return total


def mean_on(f: StepFunction, interval: Interval):
    """Average of f over an interval, exact when f is."""
    total = 0
    for v, (a, b) in zip(f.values, zip(f.breakpoints, f.breakpoints[1:])):
        lo = max(a, interval.lo)
        hi = min(b, interval.hi)
        if lo < hi:
            total = _sadd(total, vmul_rat(v, hi - lo))
    return vmul_rat(total, 1 / interval.length) if is_exact(total) else total / float(
        interval.length
    )


def restrict(f: StepFunction, interval: Interval) -> StepFunction:
    """f on the interval, zero outside."""
    bps = sorted(set(f.breakpoints) | {interval.lo, interval.hi})
    vals = []
    j = 0
    for lo, hi in zip(bps[:-1], bps[1:]):
        while f.breakpoints[j + 1] <= lo:
            j += 1
        inside = interval.lo <= lo and hi <= interval.hi
        vals.append(f.values[j] if inside else 0)
    return StepFunction(tuple(bps), tuple(vals))


def values_on(f: StepFunction, interval: Interval) -> list:
    """Values taken on pieces meeting the open interior of the interval."""
    out = []
    for v, (a, b) in zip(f.values, zip(f.breakpoints, f.breakpoints[1:])):
        if a < interval.hi and b > interval.lo:
            out.append(v)
    return out


def compose_affine(f: StepFunction, a, b) -> StepFunction:
    """x -> f(a*x + b) on [0,1], zero where a*x+b leaves [0,1]; a, b rational."""
    a = qq(a)
    b = qq(b)
    if a == 0:
        raise ValidationError("affine change of variable must be invertible")
    pre = [(p - b) / a for p in f.breakpoints]
    vals = list(f.values)
    if a < 0:
        pre.reverse()
        vals.reverse()
    pieces = []
    if pre[0] > 0:
        pieces.append((QQ_ZERO, min(pre[0], QQ_ONE), 0))
    for (lo, hi), v in zip(zip(pre, pre[1:]), vals):
        lo_c = max(lo, QQ_ZERO)
        hi_c = min(hi, QQ_ONE)
        if lo_c < hi_c:
            pieces.append((lo_c, hi_c, v))
    if pre[-1] < 1:
        pieces.append((max(pre[-1], QQ_ZERO), QQ_ONE, 0))
    if not pieces:
        return ZERO
    # patch leading/trailing gaps if the image misses [0,1] entirely
    if pieces[0][0] > 0:
        pieces.insert(0, (QQ_ZERO, pieces[0][0], 0))
    if pieces[-1][1] < 1:
        pieces.append((pieces[-1][1], QQ_ONE, 0))
    return StepFunction.from_pieces(pieces)


def pullback(
    pmap: PiecewiseMap, f: StepFunction, ell: int, cap: int = DEFAULT_CYLINDER_CAP
) -> StepFunction:
    """Koopman image f o T^ell.

    Exact for LinearMarkov maps.  For smooth full-branch maps the preimage
    breakpoints come from the closed-form inverse branches and are snapped
    to dyadic rationals at 2^-48 (well below the 1e-12 tolerance).
    """
    if ell < 0:
        raise DomainError("ell must be >= 0")
    for _ in range(ell):
        f = _pullback_once(pmap, f, cap)
    return f


def _pullback_once(pmap: PiecewiseMap, f: StepFunction, cap: int) -> StepFunction:
    if f.piece_count * pmap.branch_count > cap:
        raise ResourceError(f"pullback would exceed the {cap}-piece cap")
    if pmap.is_linear:
        fbps = f.breakpoints
        fvals = f.values
        out_bps = [QQ_ZERO]
        out_vals = []
        for br in pmap.branches:
            img = br.image
            # clip f to the branch image, then map breakpoints through s_i
            bps = [img.lo] + [p for p in fbps if img.lo < p < img.hi] + [img.hi]
            vals = []
            j = 0
            for lo in bps[:-1]:
                while fbps[j + 1] <= lo:
                    j += 1
                vals.append(fvals[j])
            inv_slope = 1 / br.slope
            shift = br.offset * inv_slope
            xs = [y * inv_slope - shift for y in bps]
            if br.slope < 0:
                xs.reverse()
                vals.reverse()
            out_bps.extend(xs[1:])
            out_vals.extend(vals)
        return StepFunction(tuple(out_bps), tuple(out_vals))
    pieces = []
    if True:
        cuts = pmap.branch_cuts()
        bp_f = np.array([float(p) for p in f.breakpoints])
        for i, w in enumerate(pmap.weights):
            xs_f = cuts[i] + w.antiderivative(bp_f)
            xs = [snap_dyadic(x) for x in xs_f]
            xs[0] = snap_dyadic(cuts[i])
            xs[-1] = snap_dyadic(cuts[i + 1])
            for (lo, hi), v in zip(zip(xs, xs[1:]), f.values):
                if lo < hi:
                    pieces.append((lo, hi, v))
    # stitch possible snap gaps for the smooth path
    pieces.sort(key=lambda t: t[0])
    fixed = []
    pos = QQ_ZERO
    for lo, hi, v in pieces:
        lo = pos  # branch domains tile; any mismatch is snap error < 2^-47
        if lo < hi:
            fixed.append((lo, hi, v))
            pos = hi
    if pos != 1:
        fixed.append((pos, QQ_ONE, fixed[-1][2]))
    return StepFunction.from_pieces(fixed)


@dataclass(frozen=True)
class SampledObservable:
    """Uniform samples of a smooth observable, a carrier for quantization.

    interpolation 'constant' reads samples as left-endpoint values of a fine
    step function; 'linear' joins them piecewise-linearly before quantizing.
    """

    samples: tuple
    interpolation: str = "linear"

    def __post_init__(self):
        samples = tuple(complex(s) for s in self.samples)
        if len(samples) < 2:
            raise ValidationError("need at least two samples")
        if self.interpolation not in ("constant", "linear"):
            raise ValidationError("interpolation must be 'constant' or 'linear'")
        object.__setattr__(self, "samples", samples)

    @property
    def grid_size(self) -> int:
        return len(self.samples)

    def value(self, x: float) -> complex:
        n = len(self.samples)
        if self.interpolation == "constant":
            j = min(int(x * n), n - 1)
            return self.samples[j]
        t = x * (n - 1)
        j = min(int(t), n - 2)
        frac = t - j
        return self.samples[j] * (1 - frac) + self.samples[j + 1] * frac

    def to_step(self, bits: int = 16):
        """(step function on the dyadic 2^-bits grid, oscillation estimate).

        The reported estimate is the largest adjacent-sample oscillation, a
        crude but honest stand-in for the quantization error.
        """
        n = 1 << bits
        bps = tuple(qq(j, n) for j in range(n + 1))
        vals = tuple(self.value((j + 0.5) / n) for j in range(n))
        osc = max(
            abs(a - b) for a, b in zip(self.samples, self.samples[1:])
        )
        return StepFunction(bps, vals), float(osc)
