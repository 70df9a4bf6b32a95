"""Lattice-point counting against Haar/Lebesgue limits.

Counts points of the rescaled lattice delta_{1/r}(Gamma) inside box regions,
exactly: the membership map is unipotent-triangular by weight, so the count
is computed by nested interval enumeration (outer coordinates iterated in
increasing weight, the final coordinate counted as an integer interval).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import ceil, floor

import numpy as np

from .errors import ResourceCap
from .groups import GroupSpec, dilate, to_exponential, to_second_kind

__all__ = [
    "Region",
    "MeasureEstimate",
    "lattice_count_anisotropic",
    "haar_count",
    "haar_ratio",
    "measure_scan",
    "jacobian_volume_factor",
    "cc_distance_proxy",
]

_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class Region:
    """A box region: weighted box in either coordinate system, or Box(N).

    Box(N) ("half_scaled_box") is the centered box |t_i| < N^{s_i} in
    exponential coordinates; its bounds depend on the spec's weights.
    """

    kind: str  # "weighted_box" | "half_scaled_box"
    lo: tuple[float, ...] | None = None
    hi: tuple[float, ...] | None = None
    coordinate_system: str = "exponential"  # or "second_kind_graded"
    N: float | None = None

    def __post_init__(self):
        if self.kind == "weighted_box":
            if self.lo is None or self.hi is None or len(self.lo) != len(self.hi):
                raise ValueError("weighted box needs lo/hi of equal length")
            if not all(np.isfinite(self.lo)) or not all(np.isfinite(self.hi)):
                raise ValueError("region must be bounded")
            if not all(l < h for l, h in zip(self.lo, self.hi)):
                raise ValueError("need lo < hi coordinatewise")
        elif self.kind == "half_scaled_box":
            if self.N is None or self.N <= 0:
                raise ValueError("half_scaled_box needs N > 0")
        else:
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.coordinate_system not in ("exponential", "second_kind_graded"):
            raise ValueError("unknown coordinate system")

    @classmethod
    def box(cls, lo, hi, coordinate_system="exponential") -> "Region":
        return cls(kind="weighted_box", lo=tuple(lo), hi=tuple(hi),
                   coordinate_system=coordinate_system)

    @classmethod
    def centered(cls, N: float) -> "Region":
        return cls(kind="half_scaled_box", N=N)

    def bounds(self, weights: tuple[int, ...]) -> tuple[tuple[float, ...], tuple[float, ...]]:
        if self.kind == "weighted_box":
            if len(self.lo) != len(weights):
                raise ValueError("region dimension mismatch")
            return self.lo, self.hi
        half = tuple(float(self.N) ** w for w in weights)
        return tuple(-h for h in half), half


@dataclass(frozen=True)
class MeasureEstimate:
    """Ratio sequence count/(c_S r^d) with an advisory 1/r extrapolation."""

    ratios: tuple[tuple[float, float], ...]
    extrapolated_limit: float
    reference_value: float | None = None
    note: str = ""

    def to_csv(self, path, counts=None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "count", "ratio"])
            for i, (r, ratio) in enumerate(self.ratios):
                w.writerow([r, "" if counts is None else counts[i], ratio])


def _interval_counts(lo: float, hi: float) -> tuple[int, int]:
    """(tolerant, strict) integer counts in [lo, hi] with boundary tolerance."""
    tol_n = floor(hi + _BOUNDARY_TOL) - ceil(lo - _BOUNDARY_TOL) + 1
    strict_n = floor(hi - _BOUNDARY_TOL) - ceil(lo + _BOUNDARY_TOL) + 1
    return max(0, tol_n), max(0, strict_n)


def lattice_count_anisotropic(weights, A: Region, r: float) -> int:
    """Exact count of delta_{1/r}(Z^d) points in box A (product of per-axis
    interval counts); the Lebesgue normalization exponent is d' = sum s_i."""
    if r <= 0:
        raise ValueError("r must be positive")
    weights = tuple(int(w) for w in weights)
    lo, hi = A.bounds(weights)
    count = 1
    for s, l, h in zip(weights, lo, hi):
        n, _ = _interval_counts(l * r**s, h * r**s)
        count *= n
    return count


def _membership_coord(spec: GroupSpec, x, r: float, system: str, i: int) -> float:
    v = to_exponential(spec, tuple(float(c) for c in x))
    v = dilate(spec, 1.0 / float(r), v)
    if system == "second_kind_graded":
        v = to_second_kind(spec, v, "graded")
    return float(v[i])


def haar_count(
    spec: GroupSpec, A: Region, r: float, cap: int = 50_000_000
) -> tuple[int, int]:
    """Exact count of lattice points x with delta_{1/r}(log Psi(x)) in A.

    Returns (count, boundary_ambiguous).  The membership map is triangular:
    coordinate i depends on x_i linearly (unit coefficient after rescaling)
    plus a polynomial of strictly lower-weight coordinates, so coordinates
    are enumerated in increasing weight and the innermost one is counted as
    an interval.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    lo, hi = A.bounds(spec.weights)
    order = sorted(range(spec.dim), key=lambda i: (spec.weights[i], i))
    visited = 0
    ambiguous = 0

    def rec(level: int, partial: list) -> int:
        nonlocal visited, ambiguous
        visited += 1
        if visited > cap:
            raise ResourceCap("haar enumeration cap exceeded")
        i = order[level]
        s = spec.weights[i]
        b = _membership_coord(spec, partial, r, A.coordinate_system, i)
        x_lo = (lo[i] - b) * float(r) ** s
        x_hi = (hi[i] - b) * float(r) ** s
        if level == spec.dim - 1:
            n, strict = _interval_counts(x_lo, x_hi)
            ambiguous += n - strict
            return n
        lo_int = ceil(x_lo - _BOUNDARY_TOL)
        hi_int = floor(x_hi + _BOUNDARY_TOL)
        total = 0
        for xi in range(lo_int, hi_int + 1):
            partial[i] = xi
            total += rec(level + 1, partial)
        partial[i] = 0
        return total

    count = rec(0, [0] * spec.dim)
    return count, ambiguous


def haar_ratio(spec: GroupSpec, c_S: float, A: Region, r: float,
               cap: int = 50_000_000) -> float:
    """#(delta_{1/r}(Gamma) ∩ A) / (c_S r^{d_Gamma})."""
    if c_S <= 0:
        raise ValueError("c_S must be positive")
    count, _ = haar_count(spec, A, r, cap=cap)
    return count / (c_S * float(r) ** spec.growth_degree)


def measure_scan(
    spec: GroupSpec, c_S: float, A: Region, rs, reference=None, cap: int = 50_000_000
) -> tuple[MeasureEstimate, list[int]]:
    """Ratio sequence over increasing r, with 1/r Richardson extrapolation
    (advisory) on the last two points."""
    counts = []
    ratios = []
    for r in rs:
        count, _ = haar_count(spec, A, r, cap=cap)
        counts.append(count)
        ratios.append((float(r), count / (c_S * float(r) ** spec.growth_degree)))
    if len(ratios) >= 2:
        (r1, f1), (r2, f2) = ratios[-2], ratios[-1]
        extrapolated = (r2 * f2 - r1 * f1) / (r2 - r1)
    else:
        extrapolated = ratios[-1][1]
    est = MeasureEstimate(
        ratios=tuple(ratios),
        extrapolated_limit=float(extrapolated),
        reference_value=reference,
        note="extrapolation assumes O(1/r) error; raw ratios are authoritative",
    )
    return est, counts


def jacobian_volume_factor(spec: GroupSpec, step: float = 1e-6) -> float:
    """|det J| of the coordinate change Psi^{-1} ∘ Phi at 0 (central
    differences); unipotent-triangular for all supported specs, so the value
    is 1 and deviations beyond 1e-8 raise."""
    d = spec.dim
    jac = np.empty((d, d))
    for j in range(d):
        e_plus = [0.0] * d
        e_minus = [0.0] * d
        e_plus[j] = step
        e_minus[j] = -step
        f_plus = to_second_kind(spec, tuple(e_plus), "original")
        f_minus = to_second_kind(spec, tuple(e_minus), "original")
        jac[:, j] = [(a - b) / (2 * step) for a, b in zip(f_plus, f_minus)]
    det = abs(float(np.linalg.det(jac)))
    if abs(det - 1.0) > 1e-8:
        raise ArithmeticError(
            f"coordinate-change Jacobian determinant {det} deviates from 1"
        )
    return det


def cc_distance_proxy(spec: GroupSpec, table, gamma) -> float:
    """Word length as the proxy for the homogeneous metric; the proxy error
    is O(d^(1 - 2/(3 step))) and is not certified numerically."""
    return float(table.word_length(gamma))
