"""Headline quantities: pressure, essential-spectral-radius lower bounds,
the smooth-case upper expression, and the natural-norm dichotomy.

The bounds certified here: 1/growth-rate(1-s) for Banach spaces whose
indicator norms scale like |Q|^(1-s) (with s below the map's smoothness),
1/branch-count in the piecewise-linear and pressure-controlled smooth
cases, and the Case I/II classification driven by the fitted homogeneity
degree of a black-box norm on indicators.  The essential spectral radius
itself is never computed (impossible from finite data); everything here is
a bound or a hypothesis check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .errors import ClassificationError, ValidationError
from .exact import qq
from .function_norms import (
    DEFAULT_PROBE_SCALES,
    HomogeneityReport,
    homogeneity_probe,
)
from .interval_maps import (
    DEFAULT_CYLINDER_CAP,
    PiecewiseMap,
    monotonicity_partition,
    theta_infinity,
    verify_lebesgue_invariance,
)
from .observables import StepFunction, combine, integrate, lp_norm
from .transfer_operator import apply_exact, weighted_transfer_matrix

#: |t_max| below this is treated as exactly homogeneous of degree zero (Case I).
CASE_TOLERANCE = 0.02


@dataclass(frozen=True)
class PressureReport:
    """exp(P_top(-beta log |DT|)) with the method that produced it."""

    beta: float
    exp_pressure: float
    method: str
    k_max: int

    def to_jsonable(self) -> dict:
        return {
            "beta": self.beta,
            "exp_pressure": self.exp_pressure,
            "method": self.method,
            "k_max": self.k_max,
        }


def pressure(
    pmap: PiecewiseMap,
    beta: float,
    method: str = "auto",
    k_max: int = 8,
    cap: int = DEFAULT_CYLINDER_CAP,
) -> PressureReport:
    """Exponential of the topological pressure of -beta log |DT|.

    'weighted_matrix' (piecewise-linear Markov maps only) takes the
    spectral radius of the beta-weighted transition matrix and is exact in
    structure; 'theta_limit' takes the Fekete estimate of the growth rate,
    an upper bound converging from above.  'auto' picks the former when
    available.
    """
    if method == "auto":
        method = "weighted_matrix" if (pmap.is_linear and pmap.is_markov) else "theta_limit"
    if method == "weighted_matrix":
        if not (pmap.is_linear and pmap.is_markov):
            raise ValidationError("weighted_matrix pressure needs a linear Markov map")
        value = weighted_transfer_matrix(pmap, beta).spectral_radius()
        return PressureReport(float(beta), value, method, 1)
    if method == "theta_limit":
        report = theta_infinity(pmap, beta, k_max, cap=cap)
        return PressureReport(float(beta), report.fekete_estimate, method, k_max)
    raise ValidationError(f"unknown pressure method {method!r}")


@dataclass(frozen=True)
class BoundReport:
    """A lower bound for the essential spectral radius plus its hypotheses.

    Every failed hypothesis check forces ok=False; the bound value itself
    is still reported (it is what the theorem would give were the
    hypothesis repaired).
    """

    theorem: str
    lower_bound: float
    hypothesis_checks: tuple
    ok: bool
    s: Optional[float] = None
    r: Optional[float] = None
    collet_isola_upper: Optional[float] = None
    literal_pressure: Optional[float] = None

    def to_jsonable(self) -> dict:
        return {
            "theorem": self.theorem,
            "lower_bound": self.lower_bound,
            "ok": self.ok,
            "s": self.s,
            "r": self.r,
            "collet_isola_upper": self.collet_isola_upper,
            "literal_pressure": self.literal_pressure,
            "hypothesis_checks": [
                {"name": n, "ok": o, "value": v} for n, o, v in self.hypothesis_checks
            ],
        }


def bound_main(
    pmap: PiecewiseMap,
    s: float,
    k_max: int = 10,
    cap: int = DEFAULT_CYLINDER_CAP,
    invariance_tol: float = 1e-9,
) -> BoundReport:
    """Lower bound 1/growth-rate(1-s) for indicator-norm scaling |Q|^(1-s).

    Hypotheses checked: Lebesgue invariance, and s strictly below the map's
    branch smoothness exponent.  Failed checks are reported, not raised.
    """
    if not (0.0 < s < 1.0):
        raise ValidationError(f"s={s} must lie in (0,1)")
    inv_ok, defect = verify_lebesgue_invariance(pmap, tol=invariance_tol)
    beta_map = pmap.smoothness_exponent
    smooth_ok = s < beta_map
    theta = theta_infinity(pmap, 1.0 - s, k_max, cap=cap)
    lower = 1.0 / theta.fekete_estimate
    checks = (
        ("lebesgue_invariant", inv_ok, defect),
        ("s_below_smoothness", smooth_ok, beta_map),
    )
    return BoundReport(
        theorem="main",
        lower_bound=lower,
        hypothesis_checks=checks,
        ok=inv_ok and smooth_ok,
        s=float(s),
    )


def bound_bb_new(
    pmap: PiecewiseMap,
    r: Optional[float] = None,
    k_max: int = 8,
    cap: int = DEFAULT_CYLINDER_CAP,
    invariance_tol: float = 1e-9,
) -> BoundReport:
    """Lower bound 1/k for bounded indicator norms.

    Piecewise-linear maps need no smoothness input (theorem 'BB').  Smooth
    maps (theorem 'NEW') must be full-branch Markov and supply r > 0; the
    pressure hypothesis is checked in its exponentiated form
    exp(P_top(-(r+1) log |DT|)) < 1/k, with the literal (unexponentiated)
    pressure surfaced alongside for reference.
    """
    k = pmap.branch_count
    inv_ok, defect = verify_lebesgue_invariance(pmap, tol=invariance_tol)
    checks = [("lebesgue_invariant", inv_ok, defect)]
    ci = None
    literal = None
    theorem = "BB" if pmap.is_linear else "NEW"
    if theorem == "NEW":
        if not (pmap.is_markov and pmap.is_full_branch):
            raise ValidationError("the smooth bound needs a full-branch Markov map")
        if r is None or r <= 0:
            raise ValidationError("the smooth bound needs a smoothness order r > 0")
    if r is not None:
        if r <= 0:
            raise ValidationError("r must be positive")
        rep = pressure(pmap, r + 1.0, method="auto", k_max=k_max, cap=cap)
        ci = rep.exp_pressure
        literal = math.log(ci)
        checks.append(("collet_isola_upper_below_1_over_k", ci < 1.0 / k, ci))
    ok = all(flag for _, flag, _ in checks)
    return BoundReport(
        theorem=theorem,
        lower_bound=1.0 / k,
        hypothesis_checks=tuple(checks),
        ok=ok,
        r=None if r is None else float(r),
        collet_isola_upper=ci,
        literal_pressure=literal,
    )


@dataclass(frozen=True)
class CaseClassification:
    """Outcome of the natural-norm dichotomy.

    Case I: indicator norms are scale-free (t_max = 0 within tolerance) and
    the bound is 1/k.  Case II: t_max in (-1, 0), s = 1 + t_max, and the
    bound is 1/growth-rate(1-s).
    """

    case: str
    t_max: float
    lower_bound: float
    scaling_constant: float
    s: Optional[float] = None
    probe: Optional[HomogeneityReport] = None

    def to_jsonable(self) -> dict:
        return {
            "case": self.case,
            "t_max": self.t_max,
            "s": self.s,
            "lower_bound": self.lower_bound,
            "scaling_constant": self.scaling_constant,
            "probe": None if self.probe is None else self.probe.to_jsonable(),
        }


def classify_norm(
    pmap: PiecewiseMap,
    norm: Callable[[StepFunction], float],
    scales: Optional[Sequence] = None,
    k_max: int = 10,
    tolerance: float = CASE_TOLERANCE,
    norm_id: Optional[str] = None,
) -> CaseClassification:
    """Classify a norm into the Case I / Case II dichotomy.

    Probes the norm on indicator rescalings; the fitted degree t satisfies
    |1_Q| ~ |Q|^(-t).  Degrees outside the admissible window (-1, 0] are
    rejected: t <= -1 contradicts the spectral-gap growth of the mean-zero
    contrasts, t > 0 contradicts subadditivity of the norm on abutting
    indicators.
    """
    if not (pmap.is_markov and pmap.is_full_branch):
        raise ValidationError("classification needs a full-branch Markov map")
    inv_ok, _ = verify_lebesgue_invariance(pmap)
    if not inv_ok:
        raise ValidationError("classification needs a Lebesgue-invariant map")
    report = homogeneity_probe(norm, family="indicators", scales=scales, norm_id=norm_id)
    t_max = report.degree
    if t_max > tolerance:
        raise ClassificationError(
            f"fitted degree {t_max:.4f} > 0 is inadmissible: scale-free additivity "
            "of indicator norms caps the degree at 0"
        )
    if t_max <= -1.0 + tolerance:
        raise ClassificationError(
            f"fitted degree {t_max:.4f} hits the boundary -1: mean-zero contrasts "
            "would violate the spectral-gap lower bound, so the degree must exceed -1"
        )
    if abs(t_max) <= tolerance:
        return CaseClassification(
            case="I",
            t_max=t_max,
            lower_bound=1.0 / pmap.branch_count,
            scaling_constant=report.constant,
            probe=report,
        )
    s = 1.0 + t_max
    main = bound_main(pmap, s, k_max=k_max)
    return CaseClassification(
        case="II",
        t_max=t_max,
        lower_bound=main.lower_bound,
        scaling_constant=report.constant,
        s=s,
        probe=report,
    )


@dataclass(frozen=True)
class ContrastRow:
    """Per-level record of the mean-zero contrast growth probe."""

    k: int
    transfer_l1: float
    norm_values: dict

    def to_jsonable(self) -> dict:
        return {"k": self.k, "transfer_l1": self.transfer_l1, "norms": self.norm_values}


def contrast_decay(
    pmap: PiecewiseMap,
    k_range: Sequence[int],
    norms: Optional[dict] = None,
    cap: int = DEFAULT_CYLINDER_CAP,
) -> list:
    """Growth table of the normalized two-cell contrasts a_P.

    For each level k and each cylinder P of level k+1, a_P is the
    difference of the normalized indicators of P's two leftmost children at
    level k+2 (a deterministic choice).  The table records |L^k a_P|_L1
    (equal to 2: the two transfer images keep disjoint supports, since T^k
    is injective on P) and the minimum over P of each registered norm of
    a_P, for regression against the spectral-gap rate.
    """
    from .function_norms import bv_norm

    if norms is None:
        norms = {"l1": lambda f: lp_norm(f, 1), "bv": bv_norm}
    if not pmap.is_linear:
        raise ValidationError("contrast table needs a LinearMarkov map")
    rows = []
    for k in k_range:
        parents = monotonicity_partition(pmap, k + 1, cap=cap)
        children = monotonicity_partition(pmap, k + 2, cap=cap)
        mins = {name: math.inf for name in norms}
        transfer_l1 = None
        for parent in parents:
            inside = [c for c in children if c.support.is_subset(parent.support)]
            if len(inside) < 2:
                raise ValidationError(f"cylinder {parent.word} has fewer than 2 children")
            q1, q2 = inside[0].support, inside[1].support
            a_p = combine(
                (1 / q1.length, -(1 / q2.length)),
                (StepFunction.indicator(q1), StepFunction.indicator(q2)),
            )
            if integrate(a_p) != 0:
                raise ValidationError("contrast failed to be mean-zero")
            image = a_p
            for _ in range(k):
                image = apply_exact(pmap, image)
            l1 = lp_norm(image, 1)
            transfer_l1 = l1 if transfer_l1 is None else min(transfer_l1, l1)
            for name, fn in norms.items():
                mins[name] = min(mins[name], float(fn(a_p)))
        rows.append(ContrastRow(k, transfer_l1, mins))
    return rows
