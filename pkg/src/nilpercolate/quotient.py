"""Exploration couplings between a graph and its quotient by a free action.

A quotient percolation cluster is explored edge by edge; each quotient edge
is decided by k independent upstairs trials at probability p, so it is open
with probability exactly 1 - (1-p)^k, and every orbit added to the cluster
carries an upstairs witness vertex.  The same construction runs on a
subgroup Cayley graph against its transversal.  Randomness is addressed per
upstairs pair, so the coupling against the plain upstairs percolation is
exact.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .balls import BallTable, enumerate_ball, subgroup_ball
from .groups import GroupSpec, identity, inverse, multiply

__all__ = [
    "QuotientSpec",
    "CouplingTrace",
    "quotient_graph",
    "quotient_r_adjacency",
    "coupled_quotient_exploration",
    "coset_exploration",
    "quotient_cluster_size",
    "projected_cluster_size",
    "dominance_test",
    "ladder_quotient",
    "z2_reflection_quotient",
    "trace_witness_sound",
]


@dataclass(frozen=True)
class QuotientSpec:
    """A finite base graph with a uniform-orbit partition.

    Orbits must all have size exactly k and diameter at most ell in the
    base graph; both are verified on construction.
    """

    vertices: tuple
    adjacency: dict  # vertex -> tuple of neighbors
    orbit_of: dict  # vertex -> orbit id
    k: int
    ell: int
    orbits: dict = field(default_factory=dict)  # orbit id -> tuple of members

    def __post_init__(self):
        orbits = {}
        for v in self.vertices:
            orbits.setdefault(self.orbit_of[v], []).append(v)
        for oid, members in orbits.items():
            if len(members) != self.k:
                raise ValueError(
                    f"orbit {oid!r} has size {len(members)}, expected {self.k}"
                )
            if _orbit_diameter(self.adjacency, members) > self.ell:
                raise ValueError(f"orbit {oid!r} has diameter > {self.ell}")
        object.__setattr__(
            self, "orbits", {o: tuple(sorted(m)) for o, m in orbits.items()}
        )

    def base_distances(self, source) -> dict:
        return _bfs_distances(self.adjacency, source)


def _bfs_distances(adjacency: dict, source) -> dict:
    dist = {source: 0}
    q = deque([source])
    while q:
        x = q.popleft()
        for y in adjacency[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                q.append(y)
    return dist


def _orbit_diameter(adjacency: dict, members) -> int:
    worst = 0
    for v in members:
        dist = _bfs_distances(adjacency, v)
        for w in members:
            if w not in dist:
                return 10**9  # disconnected orbit: infinite diameter
            worst = max(worst, dist[w])
    return worst


# -- builders ----------------------------------------------------------------


def ladder_quotient(length: int) -> QuotientSpec:
    """Path x {0,1} ladder with the rail-swap action: k=2, ell=1, quotient
    is the path."""
    vertices = tuple((i, s) for i in range(length) for s in (0, 1))
    adj = {v: [] for v in vertices}
    for i in range(length):
        for s in (0, 1):
            if i + 1 < length:
                adj[(i, s)].append((i + 1, s))
                adj[(i + 1, s)].append((i, s))
        adj[(i, 0)].append((i, 1))
        adj[(i, 1)].append((i, 0))
    adjacency = {v: tuple(sorted(ns)) for v, ns in adj.items()}
    orbit_of = {v: v[0] for v in vertices}
    return QuotientSpec(vertices=vertices, adjacency=adjacency,
                        orbit_of=orbit_of, k=2, ell=1)


def z2_reflection_quotient(a: int) -> QuotientSpec:
    """Z^2 window with the free order-2 point reflection through (1/2, 1/2):
    (x, y) -> (1-x, 1-y) on the window [1-a, a]^2."""
    lo, hi = 1 - a, a
    vertices = tuple(
        (x, y) for x in range(lo, hi + 1) for y in range(lo, hi + 1)
    )
    vset = set(vertices)
    adj = {}
    for (x, y) in vertices:
        ns = [
            (x + dx, y + dy)
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
            if (x + dx, y + dy) in vset
        ]
        adj[(x, y)] = tuple(sorted(ns))
    orbit_of = {v: min(v, (1 - v[0], 1 - v[1])) for v in vertices}
    ell = 2 * (2 * a - 1)  # window path between mirror images
    return QuotientSpec(vertices=vertices, adjacency=adj,
                        orbit_of=orbit_of, k=2, ell=ell)


# -- quotient graphs ---------------------------------------------------------


def quotient_graph(q: QuotientSpec) -> dict:
    """Adjacency of orbit ids: O ~ O' iff some members are base-adjacent."""
    out = {o: set() for o in q.orbits}
    for v in q.vertices:
        for w in q.adjacency[v]:
            ov, ow = q.orbit_of[v], q.orbit_of[w]
            if ov != ow:
                out[ov].add(ow)
                out[ow].add(ov)
    return {o: tuple(sorted(ns)) for o, ns in out.items()}


def quotient_r_adjacency(q: QuotientSpec, r: int) -> dict:
    """Orbits joined when some representatives are within base distance r."""
    if r < 1:
        raise ValueError("r must be >= 1")
    out = {o: set() for o in q.orbits}
    for v in q.vertices:
        dist = q.base_distances(v)
        ov = q.orbit_of[v]
        for w, d in dist.items():
            ow = q.orbit_of[w]
            if d <= r and ow != ov:
                out[ov].add(ow)
                out[ow].add(ov)
    return {o: tuple(sorted(ns)) for o, ns in out.items()}


# -- traces ------------------------------------------------------------------


@dataclass
class CouplingTrace:
    root: object
    cluster: set
    witness: dict  # orbit/vertex -> upstairs witness
    steps: list  # per examined edge: dict with trials and outcome
    exhausted: bool = False
    note: str = ""

    def edge_states(self) -> dict:
        return {tuple(step["edge"]): bool(step["open"]) for step in self.steps}

    def to_json_lines(self, path) -> None:
        with open(path, "w") as fh:
            for step in self.steps:
                fh.write(json.dumps(_jsonable(step), sort_keys=True) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


def trace_witness_sound(q: QuotientSpec, trace: CouplingTrace) -> bool:
    """Every orbit in the cluster is reachable from the root through open
    witness edges recorded in the trace."""
    reached = {q.orbit_of[trace.root]}
    grew = True
    open_steps = [s for s in trace.steps if s["open"]]
    while grew:
        grew = False
        for s in open_steps:
            x, y = s["edge"]
            if x in reached and y not in reached:
                reached.add(y)
                grew = True
    return reached == trace.cluster


# -- upstairs pair randomness ------------------------------------------------


def _pair_uniform(seed: int, a, b) -> float:
    lo, hi = (a, b) if tuple(a) <= tuple(b) else (b, a)
    key = [0x75706169]
    for t in (lo, hi):
        for c in t:
            key.append(int(c) & ((1 << 64) - 1))
    return float(rng.substream(seed, *key).random())


# -- the two explorations ----------------------------------------------------


def coupled_quotient_exploration(
    q: QuotientSpec, r: int, p: float, root, seed: int
) -> CouplingTrace:
    """Explore the quotient cluster of pi(root), deciding each quotient edge
    by k upstairs trials from the current witness.

    Boundary edges are taken at minimal quotient distance from the root,
    ties broken lexicographically on (distance, source orbit, target orbit).
    Each trial edge (u_x, z) satisfies the base distance bound r + ell; a
    violation (window exhaustion) stops the exploration with the trace
    flagged and valid for the explored part.
    """
    if not (0 <= p <= 1):
        raise ValueError("p must be in [0, 1]")
    if root not in q.orbit_of:
        raise ValueError("root is not a base vertex")
    qadj = quotient_r_adjacency(q, r)
    root_orbit = q.orbit_of[root]
    qdist = _bfs_distances(qadj, root_orbit)

    cluster = {root_orbit}
    witness = {root_orbit: root}
    steps = []
    examined = set()
    exhausted = False
    note = ""
    base_dist_cache = {}

    def base_dist(u):
        if u not in base_dist_cache:
            base_dist_cache[u] = q.base_distances(u)
        return base_dist_cache[u]

    while True:
        boundary = [
            (qdist.get(x, 10**9), x, y)
            for x in cluster
            for y in qadj[x]
            if y not in cluster and (x, y) not in examined
        ]
        if not boundary:
            break
        _, x, y = min(boundary)
        examined.add((x, y))
        u = witness[x]
        dists = base_dist(u)
        trials = []
        opened = None
        bad = None
        for z in q.orbits[y]:
            d = dists.get(z)
            if d is None or d > r + q.ell:
                bad = (z, d)
                break
            open_ = _pair_uniform(seed, u, z) < p
            trials.append({"u": u, "z": z, "open": open_, "distance": d})
            if open_ and opened is None:
                opened = z
        if bad is not None:
            exhausted = True
            note = (
                f"window exhausted: upstairs pair ({u}, {bad[0]}) at distance "
                f"{bad[1]} exceeds r + ell = {r + q.ell}"
            )
            break
        steps.append({
            "edge": (x, y),
            "trials": trials,
            "open": opened is not None,
            "witness": opened,
        })
        if opened is not None:
            cluster.add(y)
            witness[y] = opened
    return CouplingTrace(root=root, cluster=cluster, witness=witness,
                         steps=steps, exhausted=exhausted, note=note)


def coset_exploration(
    spec: GroupSpec,
    h_generators,
    X,
    k: int,
    m: int,
    r: int,
    p: float,
    seed: int,
    h_norm_cap: int | None = None,
    table: BallTable | None = None,
) -> CouplingTrace:
    """Exploration on the subgroup Cayley graph G(H, (H cap S^m)^r), coupled
    to Bernoulli-p percolation on the big graph of radius r*m + 2k.

    For each boundary edge (u, u*s), the k trials are the upstairs pairs
    (u * x_u, u * s * y) over y in X, where x_u is u's transversal witness;
    the distance bound r*m + 2k is asserted on every trial.
    """
    if not (0 <= p <= 1):
        raise ValueError("p must be in [0, 1]")
    X = [tuple(x) for x in X]
    if len(X) != k:
        raise ValueError("transversal X must have exactly k elements")
    if identity(spec) not in X:
        raise ValueError("transversal X must contain the identity")
    big_r = r * m + 2 * k
    if h_norm_cap is None:
        h_norm_cap = r * m
    if table is None:
        table = enumerate_ball(
            spec, max(big_r, h_norm_cap + m + 2 * k), materialize=True
        )
    h_window = subgroup_ball(spec, h_generators, table.r_max, table)

    h_cap_sm = sorted(h for h in h_window if table.elements[h] <= m and any(h))
    # generators of the H-graph: nonidentity elements of (H cap S^m)^r
    gens = {identity(spec)}
    for _ in range(r):
        gens = {
            multiply(spec, a, b)
            for a in gens
            for b in h_cap_sm + [identity(spec)]
        }
    gens = sorted(g for g in gens if any(g) and g in h_window)

    nodes = sorted(h for h in h_window if table.elements[h] <= h_norm_cap)
    node_set = set(nodes)
    adj = {
        u: tuple(
            sorted(v for v in (multiply(spec, u, g) for g in gens) if v in node_set)
        )
        for u in nodes
    }
    root = identity(spec)
    hdist = _bfs_distances(adj, root)

    def check_transversal(g):
        hits = [x for x in X if multiply(spec, g, inverse(spec, x)) in h_window]
        if len(hits) != 1:
            raise ValueError(
                f"X fails the transversal property at {g}: {len(hits)} "
                "representations"
            )

    cluster = {root}
    witness = {root: identity(spec)}  # node -> transversal element x_u
    steps = []
    examined = set()
    exhausted = False
    note = ""
    while True:
        boundary = [
            (hdist.get(u, 10**9), u, v)
            for u in cluster
            for v in adj[u]
            if v not in cluster and (u, v) not in examined
        ]
        if not boundary:
            break
        _, u, v = min(boundary)
        examined.add((u, v))
        up_u = multiply(spec, u, witness[u])
        check_transversal(up_u)
        trials = []
        opened = None
        bad = None
        for y in X:
            z = multiply(spec, v, y)
            diff = multiply(spec, inverse(spec, up_u), z)
            if diff not in table.elements or table.elements[diff] > big_r:
                bad = (z, table.elements.get(diff))
                break
            open_ = _pair_uniform(seed, up_u, z) < p
            trials.append({
                "u": up_u, "z": z, "open": open_,
                "distance": table.elements[diff],
            })
            if open_ and opened is None:
                opened = y
        if bad is not None:
            exhausted = True
            note = (
                f"window exhausted: upstairs pair ({up_u}, {bad[0]}) at "
                f"distance {bad[1]} exceeds r*m + 2k = {big_r}"
            )
            break
        steps.append({
            "edge": (u, v),
            "trials": trials,
            "open": opened is not None,
            "witness": opened,
        })
        if opened is not None:
            cluster.add(v)
            witness[v] = opened
    return CouplingTrace(root=root, cluster=cluster, witness=witness,
                         steps=steps, exhausted=exhausted, note=note)


# -- direct samplers and the dominance check ---------------------------------


def quotient_cluster_size(
    q: QuotientSpec, r: int, p_edge: float, root_orbit, seed: int
) -> int:
    """Cluster size of the root orbit under iid Bernoulli(p_edge) quotient
    percolation (edges keyed individually, consistent across seeds)."""
    qadj = quotient_r_adjacency(q, r)
    cluster = {root_orbit}
    frontier = [root_orbit]
    while frontier:
        nxt = []
        for x in frontier:
            for y in qadj[x]:
                if y in cluster:
                    continue
                a, b = sorted((x, y), key=lambda o: tuple(np.atleast_1d(o)))
                u = _pair_uniform(seed, np.atleast_1d(a), np.atleast_1d(b))
                if u < p_edge:
                    cluster.add(y)
                    nxt.append(y)
        frontier = nxt
    return len(cluster)


def projected_cluster_size(
    q: QuotientSpec, r: int, p: float, root, seed: int
) -> int:
    """|pi(K_root)| under Bernoulli-p percolation on the base graph with
    edges between vertices at distance <= r + ell."""
    reach = r + q.ell
    cluster = {root}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            dist = q.base_distances(u)
            for v, d in dist.items():
                if v in cluster or d == 0 or d > reach:
                    continue
                if _pair_uniform(seed, u, v) < p:
                    cluster.add(v)
                    nxt.append(v)
        frontier = nxt
    return len({q.orbit_of[v] for v in cluster})


def dominance_test(
    base_sampler, dominated_sampler, levels, n_seeds: int, master_seed: int = 0
) -> dict:
    """Empirical one-sided dominance: P(base >= m) >= P(dominated >= m) - 3 SE
    for every level m, where SE combines both binomial standard errors."""
    if n_seeds < 10:
        raise ValueError("insufficient seeds (need >= 10)")
    base = np.array([
        base_sampler(rng.derive_seed(master_seed, i)) for i in range(n_seeds)
    ])
    dom = np.array([
        dominated_sampler(rng.derive_seed(master_seed, n_seeds + i))
        for i in range(n_seeds)
    ])
    report = {"levels": {}, "holds": True, "n_seeds": n_seeds}
    for mlev in levels:
        pb = float(np.mean(base >= mlev))
        pd = float(np.mean(dom >= mlev))
        se = float(
            np.sqrt(pb * (1 - pb) / n_seeds + pd * (1 - pd) / n_seeds)
        )
        ok = pb >= pd - 3 * se
        report["levels"][int(mlev)] = {
            "p_base": pb, "p_dominated": pd, "se": se, "holds": ok
        }
        report["holds"] &= ok
    return report
