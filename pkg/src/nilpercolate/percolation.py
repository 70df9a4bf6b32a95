"""Monte Carlo spread-out percolation on finite windows of the lattice.

Candidate pairs are (u, u*s) for s in the materialized r-ball; every
unordered pair is sampled once (the canonical representative has the
lexicographically larger endpoint as target).  Uniforms come from a single
Philox stream in canonical pair order — offset-major, vertex-minor — so
edge decisions are order-independent, reproducible, and reusable across
lambda (monotone coupling) and across models (distribution equality).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels, rng
from .balls import BallTable
from .errors import ResourceCap
from .groups import GroupSpec, dilate, multiply_batch, multiply, to_exponential

__all__ = [
    "Model",
    "WindowSpec",
    "PercolationSample",
    "ClusterReport",
    "window_vertices",
    "sample_spread_out",
    "cluster_stats",
    "giant_component_law_check",
    "estimate_lambda_c",
    "kernel_norm_lower_bound",
]

DEFAULT_VERTEX_CAP = 5_000_000


@dataclass(frozen=True)
class Model:
    """Edge law: p = lam/beta(r) ('word_metric') or lam/(c_S r^d) ('cc_proxy').

    Both use word distance <= r as the neighborhood criterion; cc_proxy uses
    the word length as the documented proxy for the homogeneous metric and a
    fitted c_S, recorded in the sample header.
    """

    kind: str  # "word_metric" | "cc_proxy"
    r: int
    lam: float
    c_S: float | None = None

    def __post_init__(self):
        if self.kind not in ("word_metric", "cc_proxy"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "cc_proxy" and (self.c_S is None or self.c_S <= 0):
            raise ValueError("cc_proxy model needs a positive c_S")
        if self.lam < 0 or self.r < 1:
            raise ValueError("need lam >= 0 and r >= 1")

    def denominator(self, spec: GroupSpec, table: BallTable) -> float:
        if self.kind == "word_metric":
            return float(table.beta(self.r))
        return self.c_S * float(self.r) ** spec.growth_degree


@dataclass(frozen=True)
class WindowSpec:
    """Finite truncation: word ball, coordinate box, or torus (abelian only)."""

    kind: str  # "word_ball" | "coord_box" | "torus"
    R: int | None = None
    lo: tuple[int, ...] | None = None
    hi: tuple[int, ...] | None = None
    side: int | None = None
    boundary: str = "free"  # "periodic" only for torus

    def __post_init__(self):
        if self.kind == "word_ball":
            if self.R is None or self.R < 0:
                raise ValueError("word_ball window needs R >= 0")
        elif self.kind == "coord_box":
            if self.lo is None or self.hi is None or len(self.lo) != len(self.hi):
                raise ValueError("coord_box window needs integer lo/hi")
            if not all(l <= h for l, h in zip(self.lo, self.hi)):
                raise ValueError("need lo <= hi")
        elif self.kind == "torus":
            if self.side is None or self.side < 2:
                raise ValueError("torus window needs side >= 2")
        else:
            raise ValueError(f"unknown window kind {self.kind!r}")
        if self.boundary not in ("free", "periodic"):
            raise ValueError("boundary must be 'free' or 'periodic'")
        if self.boundary == "periodic" and self.kind != "torus":
            raise ValueError("periodic boundary only for torus windows")

    @classmethod
    def torus(cls, side: int) -> "WindowSpec":
        return cls(kind="torus", side=side, boundary="periodic")

    @classmethod
    def box(cls, lo, hi) -> "WindowSpec":
        return cls(kind="coord_box", lo=tuple(lo), hi=tuple(hi))

    @classmethod
    def word_ball(cls, R: int) -> "WindowSpec":
        return cls(kind="word_ball", R=R)


@dataclass(frozen=True)
class PercolationSample:
    model: Model
    window: WindowSpec
    seed: int
    points: np.ndarray  # (n, d) int64, lexicographically sorted
    edges_u: np.ndarray
    edges_v: np.ndarray
    p: float
    header: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ClusterReport:
    C1_vertices: int
    C2_vertices: int
    C1_edges: int
    C2_edges: int
    total_edges: int
    n_vertices: int

    @property
    def giant_fraction(self) -> float:
        return self.C1_vertices / self.n_vertices if self.n_vertices else 0.0

    def to_json_dict(self) -> dict:
        return {
            "C1_vertices": self.C1_vertices,
            "C2_vertices": self.C2_vertices,
            "C1_edges": self.C1_edges,
            "C2_edges": self.C2_edges,
            "total_edges": self.total_edges,
            "n_vertices": self.n_vertices,
            "giant_fraction": self.giant_fraction,
        }


def _is_abelian_lattice(spec: GroupSpec) -> bool:
    return spec.abelian and all(w == 1 for w in spec.weights)


def window_vertices(
    spec: GroupSpec,
    window: WindowSpec,
    table: BallTable | None = None,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
) -> np.ndarray:
    """Window vertex coordinates as an (n, d) int64 array, lex-sorted."""
    d = spec.dim
    if window.kind == "word_ball":
        if table is None or table.elements is None or table.r_max < window.R:
            raise ValueError("word_ball window needs a materialized ball table")
        pts = sorted(p for p, dd in table.elements.items() if dd <= window.R)
        out = np.array(pts, dtype=np.int64).reshape(-1, d)
    elif window.kind == "coord_box":
        if len(window.lo) != d:
            raise ValueError("window dimension mismatch")
        axes = [np.arange(l, h + 1, dtype=np.int64) for l, h in zip(window.lo, window.hi)]
        n = int(np.prod([len(a) for a in axes]))
        if n > vertex_cap:
            raise ResourceCap(f"window has {n} vertices (cap {vertex_cap})")
        grids = np.meshgrid(*axes, indexing="ij")
        out = np.stack([g.ravel() for g in grids], axis=1)
    else:  # torus
        if not _is_abelian_lattice(spec):
            raise ValueError("torus windows require an abelian spec")
        n = window.side**d
        if n > vertex_cap:
            raise ResourceCap(f"window has {n} vertices (cap {vertex_cap})")
        axes = [np.arange(window.side, dtype=np.int64)] * d
        grids = np.meshgrid(*axes, indexing="ij")
        out = np.stack([g.ravel() for g in grids], axis=1)
    if len(out) > vertex_cap:
        raise ResourceCap(f"window has {len(out)} vertices (cap {vertex_cap})")
    return out


def _lex_gt(V: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Rowwise lexicographic V > P."""
    gt = np.zeros(len(V), dtype=bool)
    eq = np.ones(len(V), dtype=bool)
    for c in range(V.shape[1]):
        gt |= eq & (V[:, c] > P[:, c])
        eq &= V[:, c] == P[:, c]
    return gt


def sample_spread_out(
    spec: GroupSpec,
    table: BallTable,
    model: Model,
    window: WindowSpec,
    seed: int,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
) -> PercolationSample:
    """One spread-out percolation sample; bit-reproducible from the seed."""
    denom = model.denominator(spec, table)
    if model.lam > denom:
        raise ValueError(f"lambda {model.lam} exceeds denominator {denom}")
    p = model.lam / denom

    points = window_vertices(spec, window, table, vertex_cap)
    n = len(points)
    offsets = table.offsets(model.r)

    if window.kind == "torus":
        side = window.side
    elif window.kind == "coord_box":
        lo = np.array(window.lo, dtype=np.int64)
        dims = tuple(h - l + 1 for l, h in zip(window.lo, window.hi))
    else:
        index_of = {tuple(int(c) for c in pt): i for i, pt in enumerate(points)}

    stream = rng.pair_stream(seed)
    us, vs = [], []
    for s in offsets:
        uniforms = stream.random(n)
        if spec.lattice_terms is not None:
            V = multiply_batch(spec, points, s)
        else:
            V = np.array([multiply(spec, tuple(pt), s) for pt in points], dtype=np.int64)
        if window.kind == "torus":
            V = np.mod(V, side)
            valid = np.ones(n, dtype=bool)
            target = np.ravel_multi_index(V.T, (side,) * spec.dim)
        elif window.kind == "coord_box":
            valid = np.all((V >= lo) & (V <= lo + np.array(dims) - 1), axis=1)
            Vc = np.clip(V - lo, 0, np.array(dims) - 1)
            target = np.ravel_multi_index(Vc.T, dims)
        else:
            valid = np.fromiter(
                (tuple(int(c) for c in row) in index_of for row in V),
                dtype=bool,
                count=n,
            )
            target = np.array(
                [index_of.get(tuple(int(c) for c in row), 0) for row in V],
                dtype=np.int64,
            )
        keep = valid & _lex_gt(V, points) & (uniforms < p)
        us.append(np.nonzero(keep)[0].astype(np.int64))
        vs.append(target[keep])

    edges_u = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
    edges_v = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    header = {
        "model": model.kind,
        "r": model.r,
        "lambda": model.lam,
        "denominator": denom,
        "proxy_metric": "word_length",
        "c_S": model.c_S,
        "seed": seed,
    }
    return PercolationSample(
        model=model, window=window, seed=seed, points=points,
        edges_u=edges_u, edges_v=edges_v, p=p, header=header,
    )


def rescale_sample(spec: GroupSpec, sample: PercolationSample) -> np.ndarray:
    """Vertex coordinates of the sample pushed through delta_{1/r} ∘ log Psi
    (the rescaled model's vertex set; edges carry over by index)."""
    r = sample.model.r
    out = np.empty(sample.points.shape, dtype=float)
    for i, pt in enumerate(sample.points):
        v = to_exponential(spec, tuple(int(c) for c in pt))
        out[i] = [float(x) for x in dilate(spec, 1.0 / r, v)]
    return out


def cluster_stats(sample: PercolationSample) -> ClusterReport:
    """Union-find component sizes (vertices and edges) for the two largest
    components."""
    n = sample.n_vertices
    labels = _kernels.components(n, sample.edges_u, sample.edges_v)
    vertex_counts = np.bincount(labels)
    if len(sample.edges_u):
        edge_counts = np.bincount(labels[sample.edges_u], minlength=len(vertex_counts))
    else:
        edge_counts = np.zeros(len(vertex_counts), dtype=np.int64)
    order = np.argsort(vertex_counts)[::-1]
    c1 = order[0]
    c2 = order[1] if len(order) > 1 else None
    return ClusterReport(
        C1_vertices=int(vertex_counts[c1]),
        C2_vertices=int(vertex_counts[c2]) if c2 is not None else 0,
        C1_edges=int(edge_counts[c1]),
        C2_edges=int(edge_counts[c2]) if c2 is not None else 0,
        total_edges=int(len(sample.edges_u)),
        n_vertices=n,
    )


def giant_component_law_check(
    spec: GroupSpec,
    model_kind: str,
    rs,
    window_for,
    lam: float,
    seeds,
    c_S: float | None = None,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
) -> dict:
    """C1/rho and C2/rho statistics over increasing r.

    rho = beta(r) for word_metric, c_S r^d for cc_proxy.  `window_for` maps
    r to a WindowSpec.  Returns per-r means/stddevs plus drift diagnostics
    between the two largest r (relative drift of mean C1/rho, and the same
    drift in stddev units).
    """
    seeds = list(seeds)
    if len(seeds) < 5:
        raise ValueError("need at least 5 seeds")
    from .balls import enumerate_ball

    per_r = {}
    for r in rs:
        table = enumerate_ball(spec, r, materialize=True)
        model = Model(kind=model_kind, r=r, lam=lam, c_S=c_S)
        rho = model.denominator(spec, table)
        window = window_for(r)
        c1s, c2s = [], []
        for seed in seeds:
            sample = sample_spread_out(spec, table, model, window, seed, vertex_cap)
            rep = cluster_stats(sample)
            c1s.append(rep.C1_vertices / rho)
            c2s.append(rep.C2_vertices / rho)
        c1s = np.array(c1s)
        c2s = np.array(c2s)
        per_r[r] = {
            "rho": rho,
            "c1_over_rho_mean": float(c1s.mean()),
            "c1_over_rho_std": float(c1s.std(ddof=1)),
            "c2_over_rho_mean": float(c2s.mean()),
            "c2_over_c1_mean": float((c2s / np.maximum(c1s, 1e-300)).mean()),
        }
    rs = sorted(per_r)
    out = {"per_r": per_r}
    if len(rs) >= 2:
        a, b = per_r[rs[-2]], per_r[rs[-1]]
        mean_pair = 0.5 * (a["c1_over_rho_mean"] + b["c1_over_rho_mean"])
        drift = abs(b["c1_over_rho_mean"] - a["c1_over_rho_mean"])
        pooled_sd = max(
            np.hypot(a["c1_over_rho_std"], b["c1_over_rho_std"]) / np.sqrt(2), 1e-300
        )
        out["c1_drift_relative"] = drift / mean_pair
        out["c1_drift_in_sd_units"] = drift / pooled_sd
        out["c2_over_c1_decreasing"] = (
            b["c2_over_c1_mean"] <= a["c2_over_c1_mean"]
        )
    return out


def estimate_lambda_c(
    spec: GroupSpec,
    table: BallTable,
    model_kind: str,
    r: int,
    window: WindowSpec,
    seeds,
    theta: float = 0.1,
    tol: float = 0.05,
    c_S: float | None = None,
    lam_max: float = 4.0,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
) -> float:
    """Bisection estimate of the percolation threshold in lambda.

    A lambda counts as supercritical when the giant fraction reaches theta
    for a majority of seeds.  Per-seed uniforms are shared across lambda
    (counter-based RNG), so the indicator is monotone and the bisection is
    deterministic given the seed list.
    """
    if not (0 < theta < 1):
        raise ValueError("theta must be in (0, 1)")
    if tol < 0.01:
        raise ValueError("tol must be >= 0.01")
    seeds = list(seeds)

    def supercritical(lam: float) -> bool:
        model = Model(kind=model_kind, r=r, lam=lam, c_S=c_S)
        hits = 0
        for seed in seeds:
            sample = sample_spread_out(spec, table, model, window, seed, vertex_cap)
            if cluster_stats(sample).giant_fraction >= theta:
                hits += 1
        return hits > len(seeds) // 2

    if not supercritical(lam_max):
        raise RuntimeError(
            f"bracket failure: lambda = {lam_max} is not supercritical "
            f"for theta = {theta}"
        )
    lo, hi = 0.0, lam_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if supercritical(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def kernel_norm_lower_bound(
    spec: GroupSpec, region, lam: float, mc_samples: int, seed: int
) -> float:
    """Monte Carlo lower bound lam * sqrt(H(S \\ U)/H(S)) for the integral
    operator norm, where U is the unit-scale boundary layer of the box S
    (proxy margin 1 + sum |C| per coordinate weight)."""
    from .haar import Region

    if not isinstance(region, Region) or region.kind != "half_scaled_box":
        raise ValueError("expected a centered Box(N) region")
    if lam <= 0:
        raise ValueError("lam must be positive")
    N = float(region.N)
    margin = 1.0 + float(spec.sum_abs_main)
    if N <= margin:
        raise ValueError("region smaller than the unit boundary scale")
    gen = rng.substream(seed, 0x6E6F726D)
    half = np.array([N**w for w in spec.weights])
    inner = np.array([(N - margin) ** w for w in spec.weights])
    pts = gen.uniform(-half, half, size=(mc_samples, spec.dim))
    inside = np.all(np.abs(pts) < inner, axis=1)
    ratio = float(inside.mean())
    return lam * np.sqrt(ratio)
