"""Equivalence of the compiled kernel lane and the pure-Python fallback."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilpercolate import _kernels, builtin_spec
from nilpercolate._kernels import _python

from oracles import dfs_components

HEIS = builtin_spec("heisenberg3")


def _canon(labels):
    """Canonicalize component labels to first-appearance order."""
    seen = {}
    out = []
    for lab in labels:
        if lab not in seen:
            seen[lab] = len(seen)
        out.append(seen[lab])
    return out


@given(
    st.integers(min_value=1, max_value=40),
    st.lists(st.tuples(st.integers(0, 39), st.integers(0, 39)), max_size=80),
)
@settings(max_examples=100)
def test_components_match_dfs_oracle(n, raw_edges):
    edges = [(u % n, v % n) for u, v in raw_edges]
    u = np.array([e[0] for e in edges], dtype=np.int64)
    v = np.array([e[1] for e in edges], dtype=np.int64)
    got = _canon(_kernels.components(n, u, v))
    expect = _canon(dfs_components(n, edges))
    assert got == expect


def test_python_and_active_lane_agree():
    rng = np.random.default_rng(0)
    n = 5000
    u = rng.integers(0, n, size=8000).astype(np.int64)
    v = rng.integers(0, n, size=8000).astype(np.int64)
    a = _canon(_kernels.components(n, u, v))
    b = _canon(_python.components(n, u, v))
    assert a == b


def test_empty_graph_components():
    labels = _kernels.components(
        5, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    )
    assert _canon(labels) == [0, 1, 2, 3, 4]


@pytest.mark.skipif(
    _kernels.ball_bfs_packed is None, reason="compiled lane not built"
)
def test_compiled_bfs_matches_python_bfs():
    from nilpercolate.balls import _python_bfs

    counts_py, dist_py = _python_bfs(HEIS, 8, 10**7)
    gens = np.array([g for g in HEIS.generators if any(g)], dtype=np.int64)
    terms = np.array(HEIS.lattice_terms, dtype=np.int64).reshape(-1, 4)
    counts_c, pts, ds = _kernels.ball_bfs_packed(gens, terms, 3, 8, 10**7, True)
    assert list(counts_c) == counts_py
    got = {tuple(int(c) for c in p): int(d) for p, d in zip(pts, ds)}
    assert got == dist_py


@pytest.mark.skipif(
    _kernels.ball_bfs_packed is None, reason="compiled lane not built"
)
def test_compiled_bfs_coordinate_overflow_raises():
    gens = np.array([[40000, 0], [-40000, 0]], dtype=np.int64)
    terms = np.empty((0, 4), dtype=np.int64)
    with pytest.raises(OverflowError):
        _kernels.ball_bfs_packed(gens, terms, 2, 2, 10**6, False)


def test_backend_name_exposed():
    assert _kernels.BACKEND in ("compiled", "python")
