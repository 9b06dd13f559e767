"""The worked example maps used across tests, demos and the selftest.

d2: the doubling map (two branches of slope 2).
l3: full-branch slopes 2, 4, 4; Lebesgue-invariant, non-uniform.
w2: smooth full-branch perturbation of doubling with weights
    1/2 +- 0.1 cos(2 pi x); min |DT| = 5/3.
tent: slopes 2, -2 (an orientation-reversing branch for the exact path).
"""

from __future__ import annotations

from .exact import qq
from .interval_maps import (
    Interval,
    LinearBranch,
    PiecewiseMap,
    WeightFunction,
    build_map_from_weights,
)


def map_d2() -> PiecewiseMap:
    return PiecewiseMap(
        branches=(
            LinearBranch(Interval(0, qq(1, 2)), 2, 0),
            LinearBranch(Interval(qq(1, 2), 1), 2, -1),
        )
    )


def map_l3() -> PiecewiseMap:
    return PiecewiseMap(
        branches=(
            LinearBranch(Interval(0, qq(1, 2)), 2, 0),
            LinearBranch(Interval(qq(1, 2), qq(3, 4)), 4, -2),
            LinearBranch(Interval(qq(3, 4), 1), 4, -3),
        )
    )


def map_w2() -> PiecewiseMap:
    return build_map_from_weights(
        (
            WeightFunction("fourier", (0.5, 0.1, 0.0)),
            WeightFunction("fourier", (0.5, -0.1, 0.0)),
        )
    )


def map_tent() -> PiecewiseMap:
    return PiecewiseMap(
        branches=(
            LinearBranch(Interval(0, qq(1, 2)), 2, 0),
            LinearBranch(Interval(qq(1, 2), 1), -2, 2),
        )
    )
