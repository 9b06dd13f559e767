"""Computable norms and pseudo-norms for step functions.

p-variation (sup over increasing point sequences of the l^p sum of
increments, computed by dynamic programming over the jump structure),
constructive atomic upper bounds for the Besov B^s_{1,1} norm (one atom
per piece, and the dyadic-averaging construction with its explicit
geometric-series constant), bounded variation, and a least-squares probe
for the degree of homogeneity of a black-box pseudo-norm under affine
rescaling.

The two Besov constructions give upper bounds only; the true norm is the
infimum over all atomic representations and is never evaluated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, ProbeError, ResourceError, ValidationError
from .exact import QC, QQ_ONE, is_exact, qq, to_complex, vabs_exact
from .interval_maps import Interval, UNIT_INTERVAL
from .observables import (
    SampledObservable,
    StepFunction,
    compose_affine,
    lp_norm,
    mean_on,
    values_on,
)

#: p-variation DP is quadratic in the jump count; refuse absurd inputs.
PVAR_PIECE_CAP = 20000


@dataclass(frozen=True)
class NormParameters:
    """Besov smoothness s in (0,1) and variation exponent p >= 1.

    The dyadic-averaging bound additionally needs 1/p > s; check_dyadic()
    enforces that.
    """

    s: float
    p: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise DomainError(f"s={self.s} must lie in (0,1)")
        if self.p < 1.0:
            raise DomainError(f"p={self.p} must be >= 1")

    def check_dyadic(self):
        if self.s * self.p >= 1.0:
            raise DomainError(f"dyadic bound needs 1/p > s, got s*p={self.s * self.p}")


def p_variation_power(f: StepFunction, interval: Interval, p: float):
    """The p-th power of the p-variation of f on the interior of the interval.

    For a step function the sup over increasing sequences is attained on
    one value per visited piece, so it reduces to the best subsequence of
    the piece values.  Exact (rational) when p is an integer and the values
    are exact reals.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    vals = values_on(f, interval)
    m = len(vals)
    if m > PVAR_PIECE_CAP:
        raise ResourceError(f"p-variation on {m} pieces exceeds cap {PVAR_PIECE_CAP}")
    if m <= 1:
        return 0
    # exact path: integer p with exact real values keeps the DP rational
    exact = float(p).is_integer() and all(
        is_exact(v) and not _is_truly_complex(v) for v in vals
    )
    if exact:
        ip = int(p)
        vals = [_real_part(v) for v in vals]
        diffs = lambda a, b: abs(a - b) ** ip  # noqa: E731 - local kernel
    else:
        vals = [to_complex(v) for v in vals]
        pf = float(p)
        diffs = lambda a, b: abs(a - b) ** pf  # noqa: E731

    if p == 1:
        # triangle inequality: visiting every piece in order is optimal
        total = 0
        for a, b in zip(vals, vals[1:]):
            total = total + diffs(a, b)
        return total

    dp = [0] * m  # dp[i]: best increment sum of a subsequence ending at i
    best = 0
    for i in range(1, m):
        acc = 0
        vi = vals[i]
        for j in range(i):
            cand = dp[j] + diffs(vi, vals[j])
            if cand > acc:
                acc = cand
        dp[i] = acc
        if acc > best:
            best = acc
    return best


def _is_truly_complex(v) -> bool:
    if isinstance(v, QC):
        return v.im != 0
    if isinstance(v, complex):
        return v.imag != 0
    return False


def _real_part(v):
    return v.re if isinstance(v, QC) else v


def p_variation(f: StepFunction, interval: Interval, p: float) -> float:
    """v_p(f, interval) = (best subsequence increment sum)^(1/p)."""
    power = p_variation_power(f, interval, p)
    return float(power) ** (1.0 / float(p))


def bv_norm(f: StepFunction) -> float:
    """Bounded-variation norm: v_1 on [0,1] plus the L^1 norm."""
    return p_variation(f, UNIT_INTERVAL, 1.0) + lp_norm(f, 1)


@dataclass(frozen=True)
class Atom:
    """One term c * |Q|^(s-1) 1_Q of an atomic representation."""

    coefficient: complex
    support: Interval


@dataclass(frozen=True)
class AtomicRepresentation:
    """A finite atomic representation certifying an upper Besov bound.

    cost = sum |c_n| upper-bounds the atomic-Besov norm of the function the
    atoms reconstruct; reconstruction_error is the L^1 gap to the target
    when the construction truncates (None when the reconstruction is the
    target itself).
    """

    atoms: tuple
    s: float
    cost: float
    reconstruction_error: Optional[float] = None

    def reconstruction(self) -> StepFunction:
        out = StepFunction.constant(0)
        for atom in self.atoms:
            scale = float(atom.support.length) ** (self.s - 1.0)
            out = out + StepFunction.indicator(atom.support, atom.coefficient * scale)
        return out

    def to_jsonable(self) -> dict:
        return {
            "s": self.s,
            "cost": self.cost,
            "reconstruction_error": self.reconstruction_error,
            "atoms": [
                {
                    "c": [complex(a.coefficient).real, complex(a.coefficient).imag],
                    "q": [str(a.support.lo), str(a.support.hi)],
                }
                for a in self.atoms
            ],
        }


def besov_atomic_upper(f: StepFunction, s: float) -> AtomicRepresentation:
    """One atom per canonical piece: 1_P with value v becomes c = v |P|^(1-s).

    The cost sum is grouped by (|value|, piece length) before accumulation,
    which keeps it exact to the last float bit for the self-similar piece
    structures produced by uniform-slope maps.
    """
    if not (0.0 < s < 1.0):
        raise DomainError(f"s={s} must lie in (0,1)")
    atoms = []
    groups = {}
    for v, (a, b) in zip(f.values, zip(f.breakpoints, f.breakpoints[1:])):
        if v == 0:
            continue
        support = Interval(a, b)
        scale = float(support.length) ** (1.0 - s)
        atoms.append(Atom(complex(v) * scale, support))
        key = (vabs_exact(v), b - a)
        groups[key] = groups.get(key, 0) + 1
    cost = 0.0
    for (absv, length), count in groups.items():
        cost += count * float(absv) * float(length) ** (1.0 - s)
    return AtomicRepresentation(tuple(atoms), float(s), cost, reconstruction_error=0.0)


def _dyadic_cells(interval: Interval, level: int) -> list:
    n = 1 << level
    width = interval.length / n
    return [
        Interval(interval.lo + j * width, interval.lo + (j + 1) * width) for j in range(n)
    ]


def besov_dyadic_upper(
    f,
    interval: Interval,
    s: float,
    p: float,
    depth: int,
    quantization_bits: int = 16,
):
    """Dyadic-averaging atomic bound for a function supported in an interval.

    Builds the successive dyadic conditional expectations psi_k of f on the
    interval, turns the telescoping differences into atoms, and returns the
    representation together with the closed-form bound

        4 / (1 - 2^(-(1-s p)/p)) * |J|^(1-s) * v_p(f, J)

    for |f - mean|_{B^s_{1,1}}.  Requires 1/p > s so the geometric series
    converges.  SampledObservable input is quantized first (the oscillation
    estimate is folded into reconstruction_error).
    """
    params = NormParameters(s, p)
    params.check_dyadic()
    quant_err = 0.0
    if isinstance(f, SampledObservable):
        f, quant_err = f.to_step(quantization_bits)
    for v, (a, b) in zip(f.values, zip(f.breakpoints, f.breakpoints[1:])):
        if v != 0 and not (interval.lo <= a and b <= interval.hi):
            raise ValidationError("f must vanish outside the given interval")
    if depth < 1:
        raise DomainError("depth must be >= 1")

    means = {0: [mean_on(f, interval)]}
    cells = {0: [interval]}
    for k in range(1, depth + 1):
        cells[k] = _dyadic_cells(interval, k)
        means[k] = [mean_on(f, c) for c in cells[k]]

    atoms = []
    cost = 0.0
    for k in range(1, depth + 1):
        for j, cell in enumerate(cells[k]):
            parent = means[k - 1][j // 2]
            delta = means[k][j] - parent
            if delta == 0:
                continue
            c = complex(delta) * float(cell.length) ** (1.0 - s)
            atoms.append(Atom(c, cell))
            cost += abs(c)

    # reconstruction error: distance from f - mean*1_J to the telescoped sum,
    # which equals |f - psi_depth|_L1
    pieces = []
    if interval.lo > 0:
        pieces.append((qq(0), interval.lo, 0))
    for cell, m in zip(cells[depth], means[depth]):
        pieces.append((cell.lo, cell.hi, m))
    if interval.hi < 1:
        pieces.append((interval.hi, QQ_ONE, 0))
    psi_k = StepFunction.from_pieces(pieces)
    rec_err = lp_norm(f - psi_k, 1) + quant_err

    vp = p_variation(f, interval, p)
    rate = (1.0 - s * p) / p
    constant = 4.0 / (1.0 - 2.0 ** (-rate))
    bound = constant * float(interval.length) ** (1.0 - s) * vp
    rep = AtomicRepresentation(tuple(atoms), float(s), cost, reconstruction_error=rec_err)
    return rep, bound


@dataclass(frozen=True)
class HomogeneityReport:
    """Fitted scaling behaviour n(phi o u) ~ C |u'|^t n(phi).

    Equivalently the norm of an indicator scales like |Q|^(-t); the fit is
    least squares in log-log over the probed scales.
    """

    pseudo_norm_id: str
    degree: float
    constant: float
    fit_residual: float
    scales: tuple

    def to_jsonable(self) -> dict:
        return {
            "pseudo_norm_id": self.pseudo_norm_id,
            "degree": self.degree,
            "constant": self.constant,
            "fit_residual": self.fit_residual,
            "scales": list(self.scales),
        }


DEFAULT_PROBE_SCALES = tuple(qq(1, 1 << j) for j in range(4, 12))


def homogeneity_probe(
    norm: Callable[[StepFunction], float],
    family: str = "indicators",
    scales: Optional[Sequence] = None,
    shape: Optional[StepFunction] = None,
    anchor=qq(1, 3),
    norm_id: Optional[str] = None,
) -> HomogeneityReport:
    """Probe a black-box pseudo-norm for its degree of homogeneity.

    family 'indicators' rescales 1_{[anchor, anchor+scale)}; 'fixed-shape'
    rescales the given step function into that window via the affine change
    of variable u.  Scales must number at least 4 and span at least two
    decades.  Non-finite norm values abort with the offending scale; zero
    pseudo-norm values are skipped (the degree is only defined on functions
    the pseudo-norm sees).
    """
    scales = tuple(qq(s) for s in (scales if scales is not None else DEFAULT_PROBE_SCALES))
    if len(scales) < 4:
        raise ValidationError("need at least 4 scales")
    if float(max(scales)) / float(min(scales)) < 100.0:
        raise ValidationError("scales must span at least two decades")
    if family not in ("indicators", "fixed-shape"):
        raise ValidationError(f"unknown probe family {family!r}")
    if family == "fixed-shape" and shape is None:
        raise ValidationError("fixed-shape family needs a shape function")
    anchor = qq(anchor)

    base = StepFunction.indicator(UNIT_INTERVAL) if family == "indicators" else shape
    xs, ys = [], []
    for sigma in scales:
        if anchor + sigma > 1:
            raise ValidationError(f"scale {sigma} does not fit at anchor {anchor}")
        if family == "indicators":
            test = StepFunction.indicator(Interval(anchor, anchor + sigma))
        else:
            test = compose_affine(shape, 1 / sigma, -anchor / sigma)
        value = float(norm(test))
        if not math.isfinite(value):
            raise ProbeError(f"norm returned {value} at scale {sigma}", scale=float(sigma))
        if value <= 0.0:
            continue
        xs.append(-math.log(float(sigma)))  # log |u'|
        ys.append(math.log(value))
    if len(xs) < 4:
        raise ProbeError("fewer than 4 scales produced a positive pseudo-norm")
    slope, intercept = np.polyfit(np.array(xs), np.array(ys), 1)
    fitted = slope * np.array(xs) + intercept
    residual = float(np.sqrt(np.mean((np.array(ys) - fitted) ** 2)))
    base_val = float(norm(base))
    const = math.exp(float(intercept))
    if math.isfinite(base_val) and base_val > 0:
        const /= base_val
    name = norm_id or getattr(norm, "__name__", "norm")
    return HomogeneityReport(name, float(slope), const, residual, tuple(float(s) for s in scales))
