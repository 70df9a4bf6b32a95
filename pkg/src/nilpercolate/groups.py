"""Exact arithmetic for torsion-free nilpotent lattices.

A group is described by a :class:`GroupSpec`: Malcev coordinate weights, the
finite BCH coefficient tables of the original product ``*`` and the graded
product ``*_inf``, and a symmetric generating set.  Lattice elements are
integer coordinate vectors of the second kind (``gamma = Psi(x)``); algebra
vectors are exponential (first-kind) coordinates.

Conventions
-----------
``Psi(x)`` multiplies the one-parameter factors ``exp(x_i X_i)`` in
*decreasing* (weight, index) order, so higher-stratum coordinates come first.
With this order the discrete Heisenberg group in coordinates ``(a, b, c)``
with weights ``(1, 1, 2)`` is exactly the unitriangular matrix group
``[[1, a, c], [0, 1, b], [0, 0, 1]]``.

All lattice operations are exact: rationals internally, integers at the
boundary.  Hot paths for step <= 2 groups use closed-form integer polynomial
products derived from the tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import ceil

import numpy as np

__all__ = [
    "BchTerm",
    "GroupSpec",
    "builtin_spec",
    "identity",
    "multiply",
    "multiply_batch",
    "inverse",
    "bullet",
    "graded_multiply",
    "graded_lattice_multiply",
    "dilate",
    "to_exponential",
    "to_second_kind",
    "rescaled_embedding",
    "DimensionMismatch",
    "SpecError",
]


class SpecError(ValueError):
    """Invalid group description."""


class DimensionMismatch(ValueError):
    """Coordinate vector length does not match the spec dimension."""


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    return Fraction(v)


@dataclass(frozen=True)
class BchTerm:
    """One monomial C_{alpha,beta} * x^alpha * y^beta at output coordinate `coord`."""

    coord: int
    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    value: Fraction

    def weighted_degrees(self, weights: tuple[int, ...]) -> tuple[int, int]:
        wa = sum(w * a for w, a in zip(weights, self.alpha))
        wb = sum(w * b for w, b in zip(weights, self.beta))
        return wa, wb


@dataclass(frozen=True)
class GroupSpec:
    """Complete description of a nilpotent lattice and its graded structure."""

    dim: int
    weights: tuple[int, ...]
    step: int
    growth_degree: int
    bch_main: tuple[BchTerm, ...]
    bch_lower: tuple[BchTerm, ...]
    generators: tuple[tuple[int, ...], ...]
    name: str = "custom"

    def __post_init__(self):
        d = self.dim
        if d < 1 or len(self.weights) != d:
            raise SpecError("dim/weights inconsistent")
        if any(w < 1 for w in self.weights):
            raise SpecError("weights must be positive integers")
        if self.step != max(self.weights):
            raise SpecError("step must equal the maximum weight")
        ranks = {}
        for w in self.weights:
            ranks[w] = ranks.get(w, 0) + 1
        if self.growth_degree != sum(i * di for i, di in ranks.items()):
            raise SpecError("growth_degree violates the weighted-rank formula")
        for term in self.bch_main:
            wa, wb = term.weighted_degrees(self.weights)
            if not (wa >= 1 and wb >= 1 and wa + wb == self.weights[term.coord]):
                raise SpecError(f"bch_main term not homogeneous: {term}")
        for term in self.bch_lower:
            wa, wb = term.weighted_degrees(self.weights)
            if not (wa >= 1 and wb >= 1 and wa + wb < self.weights[term.coord]):
                raise SpecError(f"bch_lower term not lower-order: {term}")
        gens = set(self.generators)
        if tuple([0] * d) not in gens:
            raise SpecError("generators must contain the identity")
        for g in self.generators:
            if len(g) != d:
                raise SpecError("generator of wrong dimension")
            if tuple(inverse(self, g)) not in gens:
                raise SpecError(f"generators not symmetric: missing inverse of {g}")

    # -- derived data ------------------------------------------------------

    @cached_property
    def fold_order(self) -> tuple[int, ...]:
        """Coordinate order of the Psi product: decreasing (weight, index)."""
        return tuple(
            sorted(range(self.dim), key=lambda i: (self.weights[i], i), reverse=True)
        )

    @cached_property
    def sum_abs_main(self) -> Fraction:
        return sum((abs(t.value) for t in self.bch_main), Fraction(0))

    @cached_property
    def abelian(self) -> bool:
        return not self.bch_main and not self.bch_lower

    @cached_property
    def _pair_coeff(self):
        """c[i][j][k] with bullet z_i += c * x_j * y_k for single-pair terms."""
        c = {}
        for t in self.bch_main:
            if sum(t.alpha) == 1 and sum(t.beta) == 1:
                j = t.alpha.index(1)
                k = t.beta.index(1)
                c[(t.coord, j, k)] = c.get((t.coord, j, k), Fraction(0)) + t.value
        return c

    @cached_property
    def lattice_terms(self) -> tuple[tuple[int, int, int, int], ...] | None:
        """Closed-form second-kind product for step <= 2 specs.

        Returns terms (i, k, j, coef) meaning z_i += coef * x_k * y_j on top
        of z = x + y, or None when no closed form applies (step >= 3).
        """
        if self.step > 2:
            return None
        terms = []
        for (i, j, k), v in self._pair_coeff.items():
            if j > k:  # see module docstring: fold order is weight-descending
                coef = -2 * v
                if coef.denominator != 1:
                    return None
                terms.append((i, k, j, int(coef)))
        return tuple(terms)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        def table(ts):
            return [
                {
                    "coord": t.coord,
                    "alpha": list(t.alpha),
                    "beta": list(t.beta),
                    "value": {"num": t.value.numerator, "den": t.value.denominator},
                }
                for t in ts
            ]

        return {
            "name": self.name,
            "dim": self.dim,
            "weights": list(self.weights),
            "step": self.step,
            "growth_degree": self.growth_degree,
            "bch_main": table(self.bch_main),
            "bch_lower": table(self.bch_lower),
            "generators": [list(g) for g in self.generators],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GroupSpec":
        def table(rows):
            return tuple(
                BchTerm(
                    coord=int(r["coord"]),
                    alpha=tuple(int(a) for a in r["alpha"]),
                    beta=tuple(int(b) for b in r["beta"]),
                    value=Fraction(int(r["value"]["num"]), int(r["value"]["den"])),
                )
                for r in rows
            )

        return cls(
            dim=int(doc["dim"]),
            weights=tuple(int(w) for w in doc["weights"]),
            step=int(doc["step"]),
            growth_degree=int(doc["growth_degree"]),
            bch_main=table(doc["bch_main"]),
            bch_lower=table(doc["bch_lower"]),
            generators=tuple(tuple(int(c) for c in g) for g in doc["generators"]),
            name=str(doc.get("name", "custom")),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "GroupSpec":
        return cls.from_json_dict(json.loads(s))


def _check_dim(spec: GroupSpec, x) -> None:
    if len(x) != spec.dim:
        raise DimensionMismatch(f"expected {spec.dim} coordinates, got {len(x)}")


def identity(spec: GroupSpec) -> tuple[int, ...]:
    return tuple([0] * spec.dim)


# -- Lie products on algebra vectors ---------------------------------------


def _monomial(x, expo):
    p = 1
    for xi, e in zip(x, expo):
        if e:
            p *= xi if e == 1 else xi**e
    return p


def bullet(spec: GroupSpec, x, y, graded: bool = False):
    """BCH product of exponential coordinate vectors (exact on rationals)."""
    _check_dim(spec, x)
    _check_dim(spec, y)
    z = [xi + yi for xi, yi in zip(x, y)]
    tables = (spec.bch_main,) if graded else (spec.bch_main, spec.bch_lower)
    for table in tables:
        for t in table:
            z[t.coord] += t.value * _monomial(x, t.alpha) * _monomial(y, t.beta)
    return tuple(z)


def graded_multiply(spec: GroupSpec, x, y):
    """The graded product x *_inf y (homogeneous terms only)."""
    return bullet(spec, x, y, graded=True)


def dilate(spec: GroupSpec, lam, x):
    """Anisotropic dilation: coordinate i scaled by lam**weights[i]."""
    _check_dim(spec, x)
    if lam <= 0:
        raise ValueError("dilation parameter must be positive")
    return tuple(xi * lam ** spec.weights[i] for i, xi in enumerate(x))


# -- coordinate changes -----------------------------------------------------


def _log_psi(spec: GroupSpec, x, graded: bool):
    acc = tuple([Fraction(0) if isinstance(x[0], (int, Fraction)) else 0.0] * spec.dim)
    for i in spec.fold_order:
        if x[i] == 0:
            continue
        e = [0] * spec.dim
        e[i] = x[i]
        acc = bullet(spec, acc, tuple(e), graded)
    return acc


def to_exponential(spec: GroupSpec, x, graded: bool = False):
    """log(Psi(x)) (or log(Psi_inf(x))): triangular polynomial map, exact on
    integers/rationals."""
    _check_dim(spec, x)
    xs = tuple(_as_fraction(c) if isinstance(c, (int, np.integer, Fraction)) else c for c in x)
    return _log_psi(spec, xs, graded)


def to_second_kind(spec: GroupSpec, v, structure: str = "original"):
    """Invert log∘Psi (structure='original') or log∘Psi_inf ('graded').

    The map is unipotent-triangular by weight, so `step` rounds of
    fixed-point refinement solve it exactly (weight level by weight level).
    """
    _check_dim(spec, v)
    if structure not in ("original", "graded"):
        raise ValueError("structure must be 'original' or 'graded'")
    graded = structure == "graded"
    x = list(v)
    for _ in range(spec.step):
        w = _log_psi(spec, x, graded)
        x = [xi - (wi - vi) for xi, wi, vi in zip(x, w, v)]
    return tuple(x)


# -- lattice operations -----------------------------------------------------


def _lattice_from_fractions(z, what: str) -> tuple[int, ...]:
    out = []
    for c in z:
        f = _as_fraction(c)
        if f.denominator != 1:
            raise SpecError(f"lattice not closed under {what}: got {z}")
        out.append(int(f))
    return tuple(out)


def multiply(spec: GroupSpec, x, y) -> tuple[int, ...]:
    """Second-kind coordinates of Psi(x) * Psi(y); exact integers."""
    _check_dim(spec, x)
    _check_dim(spec, y)
    terms = spec.lattice_terms
    if terms is not None:
        z = [int(xi) + int(yi) for xi, yi in zip(x, y)]
        for i, k, j, coef in terms:
            z[i] += coef * int(x[k]) * int(y[j])
        return tuple(z)
    zx = to_exponential(spec, x)
    zy = to_exponential(spec, y)
    return _lattice_from_fractions(
        to_second_kind(spec, bullet(spec, zx, zy)), "multiply"
    )


def graded_lattice_multiply(spec: GroupSpec, x, y) -> tuple[int, ...]:
    """Second-kind coordinates of Psi_inf(x) *_inf Psi_inf(y)."""
    _check_dim(spec, x)
    _check_dim(spec, y)
    zx = to_exponential(spec, x, graded=True)
    zy = to_exponential(spec, y, graded=True)
    z = to_second_kind(spec, bullet(spec, zx, zy, graded=True), "graded")
    return _lattice_from_fractions(z, "graded multiply")


def inverse(spec: GroupSpec, x) -> tuple[int, ...]:
    """Group inverse in second-kind coordinates (for the product *).

    In exponential coordinates the inverse is -v under both * and *_inf;
    for step <= 2 lattices the second-kind inverse is therefore also shared,
    while step >= 3 lattices have distinct second-kind *_inf inverses.
    """
    _check_dim(spec, x)
    terms = spec.lattice_terms
    if terms is not None:
        z = [-int(xi) for xi in x]
        for i, k, j, coef in terms:
            z[i] += coef * int(x[k]) * int(x[j])
        return tuple(z)
    v = to_exponential(spec, x)
    return _lattice_from_fractions(
        to_second_kind(spec, tuple(-c for c in v)), "inverse"
    )


def multiply_batch(spec: GroupSpec, points: np.ndarray, s) -> np.ndarray:
    """Vectorized right translation: rows of `points` each multiplied by `s`.

    Closed form for step <= 2; step >= 3 callers use scalar `multiply`.
    """
    terms = spec.lattice_terms
    if terms is None:
        raise SpecError("batch product requires a step <= 2 spec")
    s = np.asarray(s, dtype=np.int64)
    z = points + s
    for i, k, j, coef in terms:
        z[:, i] += coef * points[:, k] * s[j]
    return z


def rescaled_embedding(spec: GroupSpec, r, x):
    """log(F_r(x)) where F_r = delta_{1/r} ∘ Psi ∘ delta_r.

    Converges to log(Psi_inf(x)) with O(1/r) sup-norm error on bounded sets;
    exact (rational) when r is rational.
    """
    _check_dim(spec, x)
    if r <= 0:
        raise ValueError("r must be positive")
    if isinstance(r, (int, Fraction, np.integer)):
        r = _as_fraction(r)
        xs = tuple(_as_fraction(c) * r ** spec.weights[i] for i, c in enumerate(x))
    else:
        xs = tuple(float(c) * float(r) ** spec.weights[i] for i, c in enumerate(x))
    v = _log_psi(spec, xs, graded=False)
    return tuple(vi / (r ** spec.weights[i]) for i, vi in enumerate(v))


def k_overlap_constant(spec: GroupSpec) -> int:
    """Renormalization overlap constant: ceil(2 + sum |C_{alpha,beta}|)."""
    return int(ceil(2 + spec.sum_abs_main))


# -- builtin specs ----------------------------------------------------------


def _axis_generators(dim: int, axes=None) -> tuple[tuple[int, ...], ...]:
    axes = range(dim) if axes is None else axes
    gens = [tuple([0] * dim)]
    for i in axes:
        for sign in (1, -1):
            g = [0] * dim
            g[i] = sign
            gens.append(tuple(g))
    return tuple(gens)


def _heisenberg3() -> GroupSpec:
    half = Fraction(1, 2)
    return GroupSpec(
        name="heisenberg3",
        dim=3,
        weights=(1, 1, 2),
        step=2,
        growth_degree=4,
        bch_main=(
            BchTerm(2, (1, 0, 0), (0, 1, 0), half),
            BchTerm(2, (0, 1, 0), (1, 0, 0), -half),
        ),
        bch_lower=(),
        generators=_axis_generators(3, axes=(0, 1)),
    )


# Synthetic step-3 spec with nonempty lower-order (D) table.  Brackets
# [X1,X2] = X3 + X4 and [X1,X3] = 2 X4 on weights (1,1,2,3); the integer
# lattice is closed under both products (checked exhaustively in tests).
# Tables below are the exact degree-<=3 BCH expansion for these brackets.
_STEP3_MAIN = (
    BchTerm(2, (1, 0, 0, 0), (0, 1, 0, 0), Fraction(1, 2)),
    BchTerm(2, (0, 1, 0, 0), (1, 0, 0, 0), Fraction(-1, 2)),
    BchTerm(3, (2, 0, 0, 0), (0, 1, 0, 0), Fraction(1, 6)),
    BchTerm(3, (1, 1, 0, 0), (1, 0, 0, 0), Fraction(-1, 6)),
    BchTerm(3, (1, 0, 0, 0), (1, 1, 0, 0), Fraction(-1, 6)),
    BchTerm(3, (1, 0, 0, 0), (0, 0, 1, 0), Fraction(1)),
    BchTerm(3, (0, 1, 0, 0), (2, 0, 0, 0), Fraction(1, 6)),
    BchTerm(3, (0, 0, 1, 0), (1, 0, 0, 0), Fraction(-1)),
)
_STEP3_LOWER = (
    BchTerm(3, (1, 0, 0, 0), (0, 1, 0, 0), Fraction(1, 2)),
    BchTerm(3, (0, 1, 0, 0), (1, 0, 0, 0), Fraction(-1, 2)),
)


def _step3() -> GroupSpec:
    return GroupSpec(
        name="step3",
        dim=4,
        weights=(1, 1, 2, 3),
        step=3,
        growth_degree=1 * 2 + 2 * 1 + 3 * 1,
        bch_main=_STEP3_MAIN,
        bch_lower=_STEP3_LOWER,
        generators=_axis_generators(4, axes=(0, 1)),
    )


def _generic_step2(data: dict) -> GroupSpec:
    """Step-2 spec from structure constants.

    `data`: dim, weights (values in {1,2}), brackets mapping (i, j) ->
    {k: coefficient} for weight-1 pairs i < j (0-based), meaning
    [X_i, X_j] = sum_k coeff * X_k.  Antisymmetry is enforced; Jacobi is
    trivial at step 2.
    """
    dim = int(data["dim"])
    weights = tuple(int(w) for w in data["weights"])
    if set(weights) - {1, 2}:
        raise SpecError("generic step-2 spec needs weights in {1, 2}")
    brackets = {}
    for (i, j), comps in data["brackets"].items():
        if i == j and any(comps.values()):
            raise SpecError("antisymmetry violated: [X_i, X_i] != 0")
        if (j, i) in data["brackets"]:
            other = data["brackets"][(j, i)]
            if any(other.get(k, 0) != -v for k, v in comps.items()) or any(
                comps.get(k, 0) != -v for k, v in other.items()
            ):
                raise SpecError("antisymmetry violated in bracket table")
        if weights[i] != 1 or weights[j] != 1:
            raise SpecError("step-2 brackets must pair weight-1 coordinates")
        for k, v in comps.items():
            if v and weights[k] != 2:
                raise SpecError("step-2 brackets must land in weight-2 coordinates")
        brackets[(i, j)] = {k: int(v) for k, v in comps.items() if v}
    half = Fraction(1, 2)
    terms = []
    for (i, j), comps in brackets.items():
        for k, v in comps.items():
            terms.append(BchTerm(k, _unit(dim, i), _unit(dim, j), half * v))
            terms.append(BchTerm(k, _unit(dim, j), _unit(dim, i), -half * v))
    gens = data.get("generators")
    if gens is None:
        gens = _axis_generators(dim, axes=[i for i, w in enumerate(weights) if w == 1])
    ranks = {w: weights.count(w) for w in set(weights)}
    return GroupSpec(
        name=str(data.get("name", "generic_step2")),
        dim=dim,
        weights=weights,
        step=max(weights),
        growth_degree=sum(i * d for i, d in ranks.items()),
        bch_main=tuple(terms),
        bch_lower=(),
        generators=tuple(tuple(g) for g in gens),
    )


def _unit(dim: int, i: int) -> tuple[int, ...]:
    e = [0] * dim
    e[i] = 1
    return tuple(e)


def builtin_spec(name: str, dim: int | None = None, data: dict | None = None) -> GroupSpec:
    """Construct a built-in spec: 'zd' (needs dim), 'heisenberg3',
    'generic_step2' (needs data), or the synthetic 'step3'."""
    name = name.lower()
    if name == "zd":
        if dim is None or dim < 1:
            raise SpecError("zd requires dim >= 1")
        return GroupSpec(
            name=f"z{dim}",
            dim=dim,
            weights=tuple([1] * dim),
            step=1,
            growth_degree=dim,
            bch_main=(),
            bch_lower=(),
            generators=_axis_generators(dim),
        )
    if name in ("z1", "z2", "z3", "z4"):
        return builtin_spec("zd", dim=int(name[1:]))
    if name == "heisenberg3":
        return _heisenberg3()
    if name == "step3":
        return _step3()
    if name == "generic_step2":
        if data is None:
            raise SpecError("generic_step2 requires structure-constant data")
        return _generic_step2(data)
    raise SpecError(f"unknown builtin spec {name!r}")
