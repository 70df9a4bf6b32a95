"""Box renormalization onto a Z^2 grid of good-block events.

The box S_0 = exp(Box(N)) lives in the rescaled group: its lattice points
are the x with delta_{1/r}(log Psi(x)) in Box(N), so each box holds on the
order of r^d points and the good-block probability improves with r.  S_0 is
translated by the subgroup generated by h1 = exp(2 (Nr)^s X_top) and
h2 = exp(2 Nr X_first); each Z^2 edge e between adjacent translates carries
the event X(e): the largest cluster of the percolation sample restricted to
each of the two boxes has >= alpha*rho vertices, and the second-largest
cluster of the union has < alpha*rho.

Translate disjointness beyond the overlap constant K is certified with
exact rational interval arithmetic on the BCH product; a potential overlap
at distance > K aborts with a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats as _stats

from . import _kernels, rng
from .balls import BallTable, enumerate_ball
from .errors import ResourceCap
from .groups import (
    GroupSpec,
    bullet,
    identity,
    inverse,
    k_overlap_constant,
    multiply,
    multiply_batch,
    to_exponential,
    to_second_kind,
)
from .percolation import Model, _lex_gt

__all__ = [
    "RenormConfig",
    "RenormReport",
    "renormalize",
    "lss_threshold_check",
    "check_translate_overlaps",
    "write_grid",
    "read_grid",
]


@dataclass(frozen=True)
class RenormConfig:
    N: int
    alpha: float
    K_computed: int
    lattice_extent: int
    samples_per_edge: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not (0 < self.alpha < 1):
            raise ValueError("alpha must be in (0, 1)")
        if self.K_computed < 2:
            raise ValueError("K_computed must be >= 2")
        if self.lattice_extent < 2 or self.samples_per_edge < 1:
            raise ValueError("need lattice_extent >= 2 and samples_per_edge >= 1")

    @classmethod
    def for_spec(cls, spec: GroupSpec, N: int, alpha: float,
                 lattice_extent: int, samples_per_edge: int) -> "RenormConfig":
        return cls(N=N, alpha=alpha, K_computed=k_overlap_constant(spec),
                   lattice_extent=lattice_extent, samples_per_edge=samples_per_edge)


@dataclass(frozen=True)
class RenormReport:
    config: RenormConfig
    r: int
    lam: float
    rho: float
    edges: tuple  # ((n, m, dir), ...)
    states: np.ndarray  # (samples_per_edge, n_edges) uint8
    p_open: np.ndarray  # per-edge empirical P(X(e))
    correlation: dict
    overlap: dict
    header: dict = field(default_factory=dict)

    @property
    def edge_state_map(self) -> dict:
        """The open/closed map of the first sample."""
        return {e: int(s) for e, s in zip(self.edges, self.states[0])}

    @property
    def p_open_mean(self) -> float:
        return float(self.p_open.mean())


# -- exact interval arithmetic for the overlap certificate ------------------


class _Iv:
    """Closed rational interval; supports the ring operations bullet needs."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        self.lo = Fraction(lo)
        self.hi = Fraction(hi)
        if self.lo > self.hi:
            raise ValueError("empty interval")

    @classmethod
    def point(cls, x):
        return cls(x, x)

    def __add__(self, other):
        o = other if isinstance(other, _Iv) else _Iv.point(other)
        return _Iv(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self):
        return _Iv(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-other if isinstance(other, _Iv) else -Fraction(other))

    def __mul__(self, other):
        o = other if isinstance(other, _Iv) else _Iv.point(other)
        prods = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return _Iv(min(prods), max(prods))

    __rmul__ = __mul__

    def __pow__(self, e):
        if not isinstance(e, int) or e < 1:
            raise ValueError("interval powers must be positive integers")
        out = self
        for _ in range(e - 1):
            out = out * self
        return out

    def __eq__(self, other):  # only used for the == 0 short-circuit
        if isinstance(other, (int, Fraction)):
            return self.lo == other == self.hi
        return NotImplemented

    def __repr__(self):
        return f"[{self.lo}, {self.hi}]"


def _exp_point(spec: GroupSpec, i: int, c) -> tuple[int, ...]:
    """Lattice coordinates of exp(c * X_i)."""
    v = [Fraction(0)] * spec.dim
    v[i] = Fraction(c)
    x = to_second_kind(spec, tuple(v), "original")
    out = []
    for xi in x:
        f = Fraction(xi)
        if f.denominator != 1:
            raise ValueError(f"exp({c} X_{i}) is not a lattice point")
        out.append(int(f))
    return tuple(out)


def _translate_generators(spec: GroupSpec, N: int):
    """h1 = exp(2 N^s X_top), h2 = exp(2 N X_first) as lattice points."""
    top = max(range(spec.dim), key=lambda i: (spec.weights[i], i))
    first = min(i for i in range(spec.dim) if spec.weights[i] == 1)
    h1 = _exp_point(spec, top, 2 * N ** spec.weights[top])
    h2 = _exp_point(spec, first, 2 * N)
    return h1, h2


def _power(spec: GroupSpec, g, n: int):
    if n < 0:
        return _power(spec, inverse(spec, g), -n)
    out = identity(spec)
    for _ in range(n):
        out = multiply(spec, out, g)
    return out


def _translate(spec: GroupSpec, h1, h2, n: int, m: int):
    return multiply(spec, _power(spec, h1, n), _power(spec, h2, m))


def _certified_disjoint(spec: GroupSpec, w_exp, N: int) -> bool:
    """True when bullet(w, Box(N)) provably misses Box(N) (exact intervals)."""
    box = tuple(
        _Iv(-(Fraction(N) ** s), Fraction(N) ** s) for s in spec.weights
    )
    z = bullet(spec, tuple(Fraction(c) for c in w_exp), box)
    for i, s in enumerate(spec.weights):
        half = Fraction(N) ** s
        zi = z[i] if isinstance(z[i], _Iv) else _Iv.point(z[i])
        if zi.lo >= half or zi.hi <= -half:
            return True
    return False


def check_translate_overlaps(spec: GroupSpec, N: int, K: int, extent: int) -> dict:
    """Certify disjointness of S_0 and S_(dn,dm) for all window offsets.

    Raises RuntimeError if an offset at Z^2 L1-distance > K cannot be
    certified disjoint (this would contradict the overlap bound).
    """
    h1, h2 = _translate_generators(spec, N)
    results = {}
    violations = []
    for dn in range(-(extent - 1), extent):
        for dm in range(-(extent - 1), extent):
            if dn == 0 and dm == 0:
                continue
            h = _translate(spec, h1, h2, dn, dm)
            w = to_exponential(spec, h)
            disjoint = _certified_disjoint(spec, w, N)
            results[(dn, dm)] = disjoint
            if not disjoint and abs(dn) + abs(dm) > K:
                violations.append((dn, dm))
    if violations:
        raise RuntimeError(
            f"translate overlap beyond distance K={K}: offsets {violations} "
            f"not certified disjoint (N={N}); this contradicts the overlap "
            "constant bound"
        )
    return {
        "offsets_checked": len(results),
        "certified_disjoint": sum(results.values()),
        "possible_overlap_within_K": sorted(
            o for o, dj in results.items() if not dj
        ),
    }


# -- box point enumeration ---------------------------------------------------


def _box_lattice_points(spec: GroupSpec, N: int, cap: int = 2_000_000) -> list:
    """Integer points x with log Psi(x) in the open box |t_i| < N^{s_i}.

    Triangular enumeration in increasing (weight, index) order; membership
    bounds for each coordinate are exact given the outer coordinates.
    """
    import math

    order = sorted(range(spec.dim), key=lambda i: (spec.weights[i], i))
    out = []
    budget = [cap]

    def rec(level: int, partial: list):
        budget[0] -= 1
        if budget[0] < 0:
            raise ResourceCap("box enumeration cap exceeded")
        i = order[level]
        half = Fraction(N) ** spec.weights[i]
        v = to_exponential(spec, tuple(partial))
        b = Fraction(v[i])
        # x_i enters coordinate i with unit coefficient; strict inequalities
        lo, hi = -half - b, half - b
        lo_int = math.floor(lo) + 1
        hi_int = math.ceil(hi) - 1
        for xi in range(lo_int, hi_int + 1):
            partial[i] = xi
            if level == spec.dim - 1:
                out.append(tuple(partial))
            else:
                rec(level + 1, partial)
        partial[i] = 0

    rec(0, [0] * spec.dim)
    return out


# -- sampling on an explicit point set ---------------------------------------

_GRID_CELL_CAP = 20_000_000


class _PointLocator:
    """Vectorized coordinate -> global index lookup over a fixed point set.

    Uses a dense bounding-box grid when affordable, a dict otherwise.
    """

    def __init__(self, points: np.ndarray):
        self.points = points
        self.lo = points.min(axis=0)
        shape = points.max(axis=0) - self.lo + 1
        cells = int(np.prod([int(s) for s in shape]))
        if cells <= _GRID_CELL_CAP:
            self.grid = np.full(tuple(int(s) for s in shape), -1, dtype=np.int32)
            rel = points - self.lo
            self.grid[tuple(rel.T)] = np.arange(len(points), dtype=np.int32)
            self.shape = np.asarray(shape)
        else:
            self.grid = None
            self.index = {tuple(int(c) for c in p): i for i, p in enumerate(points)}

    def locate(self, V: np.ndarray) -> np.ndarray:
        """Global index per row, -1 when the point is outside the set."""
        if self.grid is not None:
            rel = V - self.lo
            valid = np.all((rel >= 0) & (rel < self.shape), axis=1)
            out = np.full(len(V), -1, dtype=np.int64)
            out[valid] = self.grid[tuple(rel[valid].T)]
            return out
        return np.fromiter(
            (self.index.get(tuple(int(c) for c in row), -1) for row in V),
            dtype=np.int64,
            count=len(V),
        )


def _sample_edges_on_points(
    spec: GroupSpec,
    table: BallTable,
    model: Model,
    locator: _PointLocator,
    seed: int,
):
    """One percolation configuration on an arbitrary point set; same pair
    stream convention as sample_spread_out (offset-major, vertex-minor)."""
    denom = model.denominator(spec, table)
    p = model.lam / denom
    points = locator.points
    n = len(points)
    stream = rng.pair_stream(seed)
    us, vs = [], []
    for s in table.offsets(model.r):
        uniforms = stream.random(n)
        if spec.lattice_terms is not None:
            V = multiply_batch(spec, points, s)
        else:
            V = np.array([multiply(spec, tuple(pt), s) for pt in points], dtype=np.int64)
        target = locator.locate(V)
        keep = (target >= 0) & _lex_gt(V, points) & (uniforms < p)
        us.append(np.nonzero(keep)[0].astype(np.int64))
        vs.append(target[keep])
    return np.concatenate(us), np.concatenate(vs)


def _component_sizes(n_local: int, uu: np.ndarray, vv: np.ndarray) -> np.ndarray:
    labels = _kernels.components(n_local, uu, vv)
    return np.sort(np.bincount(labels))[::-1]


# -- the renormalization map -------------------------------------------------


def _grid_edges(extent: int) -> list:
    edges = []
    for n in range(extent):
        for m in range(extent):
            if n + 1 < extent:
                edges.append((n, m, 0))
            if m + 1 < extent:
                edges.append((n, m, 1))
    return edges


def _edge_endpoints(e):
    n, m, d = e
    return (n, m), ((n + 1, m) if d == 0 else (n, m + 1))


def _edge_distance(e, f) -> int:
    return min(
        abs(a[0] - b[0]) + abs(a[1] - b[1])
        for a in _edge_endpoints(e)
        for b in _edge_endpoints(f)
    )


def _correlation_report(states: np.ndarray, edges, K: int, max_pairs: int) -> dict:
    """Pearson correlation and an aggregated chi-square independence test
    over edge pairs at Z^2 distance > K."""
    candidates = []
    for i in range(len(edges)):
        for j in range(i + 1, len(edges)):
            if _edge_distance(edges[i], edges[j]) > K:
                candidates.append((i, j))
    if len(candidates) > max_pairs:
        stride = len(candidates) // max_pairs
        candidates = candidates[::stride][:max_pairs]
    nsamp = states.shape[0]
    corrs = []
    chi2_total = 0.0
    chi2_df = 0
    for i, j in candidates:
        x, y = states[:, i].astype(float), states[:, j].astype(float)
        sx, sy = x.std(), y.std()
        if sx == 0 or sy == 0:
            continue  # constant margin: no information, excluded from both tests
        corrs.append(float(np.corrcoef(x, y)[0, 1]))
        a = float(np.sum((x == 1) & (y == 1)))
        b = float(np.sum((x == 1) & (y == 0)))
        c = float(np.sum((x == 0) & (y == 1)))
        d = float(np.sum((x == 0) & (y == 0)))
        chi2_total += nsamp * (a * d - b * c) ** 2 / (
            (a + b) * (c + d) * (a + c) * (b + d)
        )
        chi2_df += 1
    pvalue = float(_stats.chi2.sf(chi2_total, chi2_df)) if chi2_df else 1.0
    return {
        "n_pairs": len(candidates),
        "n_pairs_used": chi2_df,
        "mean_corr": float(np.mean(corrs)) if corrs else 0.0,
        "mean_abs_corr": float(np.mean(np.abs(corrs))) if corrs else 0.0,
        "max_abs_corr": float(np.max(np.abs(corrs))) if corrs else 0.0,
        "chi2_statistic": float(chi2_total),
        "chi2_df": chi2_df,
        "chi2_pvalue": pvalue,
    }


def renormalize(
    spec: GroupSpec,
    config: RenormConfig,
    r: int,
    lam: float,
    seed: int,
    model_kind: str = "word_metric",
    c_S: float | None = None,
    max_corr_pairs: int = 120,
) -> RenormReport:
    """Evaluate the good-block event X(e) on every edge of the Z^2 window.

    Each of samples_per_edge configurations is sampled once on the union of
    all translates and scored on every edge, so the per-edge indicators
    carry the true joint law (dependence decays with Z^2 distance).
    """
    if config.K_computed != k_overlap_constant(spec):
        raise ValueError(
            f"config K={config.K_computed} disagrees with the spec's overlap "
            f"constant {k_overlap_constant(spec)}"
        )
    n_eff = config.N * r  # Box(N) in the rescaled group, seen from the lattice
    overlap = check_translate_overlaps(
        spec, n_eff, config.K_computed, config.lattice_extent
    )

    table = enumerate_ball(spec, r, materialize=True)
    model = Model(kind=model_kind, r=r, lam=lam, c_S=c_S)
    rho = model.denominator(spec, table)
    threshold = config.alpha * rho

    h1, h2 = _translate_generators(spec, n_eff)
    base = _box_lattice_points(spec, n_eff)
    extent = config.lattice_extent
    n_boxes = extent * extent
    all_points = []
    point_box = {}
    for n in range(extent):
        for m in range(extent):
            bid = n * extent + m
            h = _translate(spec, h1, h2, n, m)
            for p in base:
                q = multiply(spec, h, p)
                if q in point_box:
                    raise RuntimeError(
                        f"translates ({n},{m}) and box {point_box[q]} share the "
                        f"lattice point {q}; the sampler requires disjoint boxes"
                    )
                point_box[q] = bid
                all_points.append(q)
    points_sorted = sorted(all_points)
    points = np.array(points_sorted, dtype=np.int64)
    n_global = len(points)
    locator = _PointLocator(points)
    box_of = np.array([point_box[p] for p in points_sorted], dtype=np.int64)
    loc_in_box = np.zeros(n_global, dtype=np.int64)
    box_size = np.bincount(box_of, minlength=n_boxes)
    for bid in range(n_boxes):
        loc_in_box[box_of == bid] = np.arange(box_size[bid])

    edges = _grid_edges(extent)
    edge_bids = []
    for e in edges:
        (na, ma), (nb, mb) = _edge_endpoints(e)
        a, b = na * extent + ma, nb * extent + mb
        edge_bids.append((min(a, b), max(a, b)))

    states = np.zeros((config.samples_per_edge, len(edges)), dtype=np.uint8)
    for s_idx in range(config.samples_per_edge):
        u, v = _sample_edges_on_points(
            spec, table, model, locator, rng.derive_seed(seed, s_idx)
        )
        a, b = box_of[u], box_of[v]
        intra = a == b

        # per-box C1 from intra-box edges, grouped by box id
        ia = a[intra]
        order = np.argsort(ia, kind="stable")
        iu = loc_in_box[u[intra]][order]
        iv = loc_in_box[v[intra]][order]
        ia_sorted = ia[order]
        bounds = np.searchsorted(ia_sorted, np.arange(n_boxes + 1))
        box_c1 = np.zeros(n_boxes, dtype=np.int64)
        for bid in range(n_boxes):
            sl = slice(bounds[bid], bounds[bid + 1])
            sizes = _component_sizes(int(box_size[bid]), iu[sl], iv[sl])
            box_c1[bid] = sizes[0] if len(sizes) else 0

        # crossing edges grouped by canonical box pair
        cu, cv = u[~intra], v[~intra]
        ca, cb = a[~intra], b[~intra]
        key = np.minimum(ca, cb) * n_boxes + np.maximum(ca, cb)
        corder = np.argsort(key, kind="stable")
        key_sorted = key[corder]
        cu, cv, ca = cu[corder], cv[corder], ca[corder]

        for e_idx, (ba, bb) in enumerate(edge_bids):
            if box_c1[ba] < threshold or box_c1[bb] < threshold:
                continue
            na_, nb_ = int(box_size[ba]), int(box_size[bb])
            k = ba * n_boxes + bb
            s0, s1 = np.searchsorted(key_sorted, (k, k + 1))
            # locals: box ba keeps its indices, box bb is offset by na_
            off_u = np.where(ca[s0:s1] == ba, 0, na_)
            uu = np.concatenate([
                iu[bounds[ba]:bounds[ba + 1]],
                iu[bounds[bb]:bounds[bb + 1]] + na_,
                loc_in_box[cu[s0:s1]] + off_u,
            ])
            vv = np.concatenate([
                iv[bounds[ba]:bounds[ba + 1]],
                iv[bounds[bb]:bounds[bb + 1]] + na_,
                loc_in_box[cv[s0:s1]] + (na_ - off_u),
            ])
            sizes = _component_sizes(na_ + nb_, uu, vv)
            c2 = sizes[1] if len(sizes) > 1 else 0
            if c2 < threshold:
                states[s_idx, e_idx] = 1

    p_open = states.mean(axis=0)
    correlation = _correlation_report(
        states, edges, config.K_computed, max_corr_pairs
    )
    header = {
        "model": model_kind,
        "r": r,
        "lambda": lam,
        "rho": rho,
        "alpha": config.alpha,
        "N": config.N,
        "N_effective": n_eff,
        "K": config.K_computed,
        "extent": config.lattice_extent,
        "samples_per_edge": config.samples_per_edge,
        "seed": seed,
        "window_vertices": n_global,
    }
    return RenormReport(
        config=config, r=r, lam=lam, rho=rho, edges=tuple(edges),
        states=states, p_open=p_open, correlation=correlation,
        overlap=overlap, header=header,
    )


# -- grid file and block-lattice statistics ----------------------------------


def write_grid(path, report: RenormReport) -> None:
    """Portable grid file: 'extent K N alpha' header, then 'n m dir state'."""
    cfg = report.config
    with open(path, "w") as fh:
        fh.write(f"{cfg.lattice_extent} {cfg.K_computed} {cfg.N} {cfg.alpha}\n")
        for (n, m, d), s in zip(report.edges, report.states[0]):
            fh.write(f"{n} {m} {d} {int(s)}\n")


def read_grid(path) -> tuple[dict, dict]:
    with open(path) as fh:
        first = fh.readline().split()
        meta = {
            "extent": int(first[0]),
            "K": int(first[1]),
            "N": int(first[2]),
            "alpha": float(first[3]),
        }
        edge_state_map = {}
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            n, m, d, s = int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3])
            edge_state_map[(n, m, d)] = s
    return meta, edge_state_map


def lss_threshold_check(edge_state_map: dict, K: int, p_threshold: float) -> dict:
    """Check P(open) >= p_threshold on a block-edge map and report the open
    cluster structure (largest open-edge cluster fraction, left-right
    crossing by open edges)."""
    if not (0 < p_threshold < 1):
        raise ValueError("p_threshold must be in (0, 1)")
    edges = sorted(edge_state_map)
    extent = 1 + max(
        max(pt) for e in edges for pt in _edge_endpoints(e)
    )
    states = np.array([edge_state_map[e] for e in edges])
    p_open = float(states.mean()) if len(states) else 0.0

    site = {}
    for n in range(extent):
        for m in range(extent):
            site[(n, m)] = len(site)
    us, vs, open_edges = [], [], []
    for e in edges:
        if edge_state_map[e]:
            a, b = _edge_endpoints(e)
            us.append(site[a])
            vs.append(site[b])
            open_edges.append(e)
    labels = _kernels.components(
        len(site), np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64)
    )

    if open_edges:
        edge_labels = np.array([labels[u] for u in us])
        counts = np.bincount(edge_labels)
        largest_edges = int(counts.max())
    else:
        largest_edges = 0
    frac = largest_edges / len(edges) if edges else 0.0

    left = {labels[site[(0, m)]] for m in range(extent)}
    right = {labels[site[(extent - 1, m)]] for m in range(extent)}
    crossing = False
    for lab in left & right:
        # a shared singleton label is not a crossing; require open edges
        if open_edges and np.any(edge_labels == lab):
            crossing = True
            break
    return {
        "p_open": p_open,
        "p_ok": p_open >= p_threshold,
        "largest_cluster_edge_fraction": frac,
        "crossing": crossing,
        "extent": extent,
        "n_edges": len(edges),
    }
