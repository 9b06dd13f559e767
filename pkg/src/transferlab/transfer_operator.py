"""The transfer operator L with respect to Lebesgue measure.

(Lf)(x) = sum over branches i with x in T(I_i) of f(s_i(x)) / |DT(s_i(x))|.

For piecewise-linear Markov maps the action on step functions is exact.
Finite-rank surrogates: the Ulam matrix over a map-adapted dyadic partition
(exact entries in the linear case, closed-form antiderivative endpoints in
the smooth case) and, for step functions on their own grid, a matrix-free
projected action used by the eigenfunction machinery.  The beta-weighted
branch-transition matrix realizes the topological pressure for
piecewise-linear Markov maps as the log of its spectral radius.
"""

from __future__ import annotations

import hashlib
import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .errors import (
    NumericError,
    ResourceError,
    UnsupportedVariantError,
    ValidationError,
)
from .exact import QQ_ONE, QQ_ZERO, qq
from .interval_maps import Interval, PiecewiseMap, map_to_jsonable
from .observables import StepFunction, combine, mean_on

#: Largest dense matrix dimension spectrum() will accept.
DEFAULT_MATRIX_CAP = 4096


def apply_exact(pmap: PiecewiseMap, f: StepFunction) -> StepFunction:
    """Exact Lf for a piecewise-linear map; preserves the integral exactly.

    The result's breakpoints are the forward images of f's breakpoints; the
    branch contributions are summed on the common refinement with weights
    1/|slope|.
    """
    if not pmap.is_linear:
        raise UnsupportedVariantError(
            "apply_exact needs a LinearMarkov map; use the Ulam path instead"
        )
    parts = []
    coeffs = []
    fbps = f.breakpoints
    fvals = f.values
    for br in pmap.branches:
        dom = br.domain
        bps = [dom.lo] + [p for p in fbps if dom.lo < p < dom.hi] + [dom.hi]
        vals = []
        j = 0
        for lo in bps[:-1]:
            while fbps[j + 1] <= lo:
                j += 1
            vals.append(fvals[j])
        slope, offset = br.slope, br.offset
        ys = [slope * x + offset for x in bps]
        if slope < 0:
            ys.reverse()
            vals.reverse()
        if ys[0] > 0:
            ys.insert(0, QQ_ZERO)
            vals.insert(0, 0)
        if ys[-1] < 1:
            ys.append(QQ_ONE)
            vals.append(0)
        parts.append(StepFunction(tuple(ys), tuple(vals)))
        coeffs.append(abs(QQ_ONE / br.slope))
    return combine(coeffs, parts)


def apply_projected(pmap: PiecewiseMap, f: StepFunction) -> StepFunction:
    """Transfer image projected back onto f's own grid (matrix-free Ulam).

    On each piece C of f the output value is (sum_i int_{s_i(C)} f) / |C|,
    i.e. the cell average of Lf.  This is the surrogate used for smooth
    maps at high grid resolutions, where the dense Ulam matrix would be
    prohibitively large.
    """
    bps_f = np.array([float(b) for b in f.breakpoints])
    vals = f.values_as_complex()
    lengths = np.diff(bps_f)
    # cumulative integral of f is piecewise linear with nodes at breakpoints
    cum = np.concatenate(([0.0], np.cumsum(vals * lengths)))

    def integral(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        flo = np.interp(lo, bps_f, cum.real) + 1j * np.interp(lo, bps_f, cum.imag)
        fhi = np.interp(hi, bps_f, cum.real) + 1j * np.interp(hi, bps_f, cum.imag)
        return fhi - flo

    out = np.zeros(len(vals), dtype=complex)
    if pmap.is_linear:
        for br in pmap.branches:
            img_lo, img_hi = float(br.image.lo), float(br.image.hi)
            lo = np.clip(bps_f[:-1], img_lo, img_hi)
            hi = np.clip(bps_f[1:], img_lo, img_hi)
            slope = float(br.slope)
            a = (lo - float(br.offset)) / slope
            b = (hi - float(br.offset)) / slope
            s_lo, s_hi = np.minimum(a, b), np.maximum(a, b)
            out += integral(s_lo, s_hi)
    else:
        cuts = pmap.branch_cuts()
        for i, w in enumerate(pmap.weights):
            s_lo = cuts[i] + w.antiderivative(bps_f[:-1])
            s_hi = cuts[i] + w.antiderivative(bps_f[1:])
            out += integral(s_lo, s_hi)
    out /= lengths
    return StepFunction(f.breakpoints, tuple(out.tolist()))


@dataclass(frozen=True)
class UlamMatrix:
    """Row-stochastic cell-transition discretization of L.

    entries[i, j] = m(cell_i inters T^-1 cell_j) / m(cell_i); exact (up to a
    final float rounding) for linear maps on the map-adapted partition.
    """

    resolution: int
    entries: np.ndarray
    partition: tuple
    exact: bool
    tolerance: float
    map_hash: str

    @property
    def cell_measures(self) -> np.ndarray:
        return np.array([float(c.length) for c in self.partition])

    def to_jsonable_sidecar(self) -> dict:
        return {
            "resolution": self.resolution,
            "partition": [[str(c.lo), str(c.hi)] for c in self.partition],
            "map_hash": self.map_hash,
        }


def _map_hash(pmap: PiecewiseMap) -> str:
    payload = json.dumps(map_to_jsonable(pmap), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _adapted_cells(domains, resolution: int):
    """Dyadic refinement of the branch domains to cells of length <= 1/resolution."""
    target = qq(1, resolution)
    cells = []
    for dom in domains:
        stack = [(dom.lo, dom.hi)]
        while stack:
            lo, hi = stack.pop()
            if hi - lo <= target:
                cells.append((lo, hi))
            else:
                mid = (lo + hi) / 2
                stack.extend([(mid, hi), (lo, mid)])
    cells.sort()
    return [Interval(lo, hi) for lo, hi in cells]


def ulam_matrix(
    pmap: PiecewiseMap, resolution: int, cap: int = DEFAULT_MATRIX_CAP
) -> UlamMatrix:
    """Ulam matrix on the map-adapted dyadic partition.

    For linear maps the entries are exact rationals converted to float at
    the end; for smooth maps the preimage cell endpoints come from the
    closed-form inverse branches, so the only error is float rounding
    (reported tolerance 1e-13).
    """
    if resolution < 2:
        raise ValidationError("resolution must be >= 2")
    cells = _adapted_cells(pmap.branch_domains(), resolution)
    n = len(cells)
    if n > cap:
        raise ResourceError(f"Ulam resolution {n} exceeds cap {cap}")
    entries = np.zeros((n, n))
    edges = [c.lo for c in cells] + [cells[-1].hi]

    if pmap.is_linear:
        for br in pmap.branches:
            inv_slope_abs = abs(1 / br.slope)
            for j, cj in enumerate(cells):
                hit = cj.intersect(br.image)
                if hit is None:
                    continue
                a = br.inverse(hit.lo)
                b = br.inverse(hit.hi)
                lo, hi = (a, b) if a <= b else (b, a)
                i0 = bisect_right(edges, lo) - 1
                i1 = bisect_left(edges, hi)
                for i in range(max(i0, 0), min(i1, n)):
                    olo = max(lo, edges[i])
                    ohi = min(hi, edges[i + 1])
                    if olo < ohi:
                        entries[i, j] += float(ohi - olo)
        exact, tol = True, 0.0
    else:
        cuts = pmap.branch_cuts()
        edges_f = np.array([float(e) for e in edges])
        for b, w in enumerate(pmap.weights):
            pre = cuts[b] + w.antiderivative(edges_f)
            for j in range(n):
                lo, hi = pre[j], pre[j + 1]
                i0 = int(np.searchsorted(edges_f, lo, side="right")) - 1
                i1 = int(np.searchsorted(edges_f, hi, side="left"))
                for i in range(max(i0, 0), min(i1, n)):
                    olo = max(lo, edges_f[i])
                    ohi = min(hi, edges_f[i + 1])
                    if olo < ohi:
                        entries[i, j] += ohi - olo
        exact, tol = False, 1e-13

    measures = np.array([float(c.length) for c in cells])
    entries /= measures[:, None]
    row_defect = float(np.max(np.abs(entries.sum(axis=1) - 1.0)))
    if row_defect > 1e-12:
        raise NumericError(f"Ulam rows deviate from stochastic by {row_defect:.3g}")
    return UlamMatrix(resolution, entries, tuple(cells), exact, tol, _map_hash(pmap))


@dataclass(frozen=True)
class WeightedMatrix:
    """Branch-transition matrix with entries admissible(i->j) * theta_i^beta.

    For piecewise-linear Markov maps, log of its spectral radius is the
    topological pressure of -beta log|DT|.
    """

    beta: float
    entries: np.ndarray
    thetas: tuple

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.entries))))


def weighted_transfer_matrix(pmap: PiecewiseMap, beta: float) -> WeightedMatrix:
    if not (pmap.is_linear and pmap.is_markov):
        raise ValidationError("weighted transfer matrix needs a piecewise-linear Markov map")
    k = pmap.branch_count
    thetas = [abs(QQ_ONE / b.slope) for b in pmap.branches]
    entries = np.zeros((k, k))
    for i, bi in enumerate(pmap.branches):
        wi = float(thetas[i]) ** beta
        for j, bj in enumerate(pmap.branches):
            if bj.domain.is_subset(bi.image):
                entries[i, j] = wi
    return WeightedMatrix(float(beta), entries, tuple(thetas))


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues sorted by modulus (then real, then imaginary part) descending."""

    eigenvalues: tuple
    leading: complex
    gap_rate: float

    def to_jsonable(self) -> dict:
        return {
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "leading": [self.leading.real, self.leading.imag],
            "gap_rate": self.gap_rate,
        }


def spectrum(matrix, cap: int = DEFAULT_MATRIX_CAP) -> SpectrumReport:
    """All eigenvalues of a dense matrix via LAPACK, deterministically ordered."""
    if isinstance(matrix, (UlamMatrix, WeightedMatrix)):
        matrix = matrix.entries
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("spectrum needs a square matrix")
    if a.shape[0] > cap:
        raise ResourceError(f"matrix dimension {a.shape[0]} exceeds cap {cap}")
    try:
        eigs = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"eigenvalue iteration failed: {exc}") from exc
    order = sorted(
        range(len(eigs)),
        key=lambda i: (-abs(eigs[i]), -eigs[i].real, -eigs[i].imag),
    )
    eigs = tuple(complex(eigs[i]) for i in order)
    lead = eigs[0]
    gap = abs(eigs[1]) / abs(lead) if len(eigs) > 1 and abs(lead) > 0 else 0.0
    return SpectrumReport(eigs, lead, gap)


def apply_discretized(matrix: UlamMatrix, f: StepFunction) -> StepFunction:
    """Ulam-projected Lf: project f onto the cells, push mass, lift back.

    The output cell values are (sum_i v_i P_ij m_i) / m_j, which preserves
    the integral exactly (rows of P are stochastic).
    """
    m = matrix.cell_measures
    v = np.array([complex(_cell_mean(f, c)) for c in matrix.partition])
    out = (v * m) @ matrix.entries / m
    bps = tuple([c.lo for c in matrix.partition] + [matrix.partition[-1].hi])
    return StepFunction(bps, tuple(out.tolist()))


def _cell_mean(f: StepFunction, cell: Interval) -> complex:
    from .exact import to_complex

    return to_complex(mean_on(f, cell))


def invariant_density(matrix: UlamMatrix) -> StepFunction:
    """Leading left eigenvector as a density with respect to Lebesgue measure.

    Normalized to integral 1; for a Lebesgue-invariant map this is constant
    up to discretization error, since the cell-measure vector is then an
    exact left fixed vector of the Ulam matrix.
    """
    vals, vecs = np.linalg.eig(matrix.entries.T)
    lead = int(np.argmax(np.abs(vals)))
    w = np.real(vecs[:, lead])
    m = matrix.cell_measures
    total = float(np.sum(w))
    if abs(total) < 1e-300:
        raise NumericError("degenerate leading eigenvector")
    # w/total makes the cell masses sum to 1; dividing by cell measure gives density
    dens = (w / total) / m
    bps = tuple([c.lo for c in matrix.partition] + [matrix.partition[-1].hi])
    return StepFunction(bps, tuple(float(d) for d in dens))


def pressure_exp(pmap: PiecewiseMap, beta: float) -> float:
    """exp(P_top(-beta log |DT|)) for a piecewise-linear Markov map."""
    return weighted_transfer_matrix(pmap, beta).spectral_radius()
