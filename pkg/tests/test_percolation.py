"""Percolation sampling: edge law, reproducibility, coupling, clusters."""

import numpy as np
import pytest

from nilpercolate import builtin_spec
from nilpercolate.balls import enumerate_ball
from nilpercolate.errors import ResourceCap
from nilpercolate.haar import Region
from nilpercolate.percolation import (
    Model,
    WindowSpec,
    cluster_stats,
    estimate_lambda_c,
    giant_component_law_check,
    kernel_norm_lower_bound,
    rescale_sample,
    sample_spread_out,
    window_vertices,
)

from oracles import component_sizes

Z2 = builtin_spec("z2")
HEIS = builtin_spec("heisenberg3")

Z2_T1 = enumerate_ball(Z2, 1, materialize=True)
Z2_T2 = enumerate_ball(Z2, 2, materialize=True)


def _edge_set(sample):
    return set(zip(sample.edges_u.tolist(), sample.edges_v.tolist()))


def test_lambda_zero_no_edges():
    m = Model(kind="word_metric", r=1, lam=0.0)
    s = sample_spread_out(Z2, Z2_T1, m, WindowSpec.torus(16), 0)
    assert len(s.edges_u) == 0


def test_lambda_max_complete_neighborhoods():
    m = Model(kind="word_metric", r=1, lam=float(Z2_T1.beta(1)))
    s = sample_spread_out(Z2, Z2_T1, m, WindowSpec.torus(16), 0)
    # p = 1: every lattice bond present exactly once
    assert len(s.edges_u) == 2 * 16 * 16
    rep = cluster_stats(s)
    assert rep.C1_vertices == 256


def test_lambda_exceeds_denominator():
    with pytest.raises(ValueError):
        m = Model(kind="word_metric", r=1, lam=6.0)
        sample_spread_out(Z2, Z2_T1, m, WindowSpec.torus(8), 0)


def test_edge_density_binomial():
    """Empirical density within 4 binomial sigma of p over >= 1e6 pairs."""
    m = Model(kind="word_metric", r=1, lam=2.5)
    s = sample_spread_out(Z2, Z2_T1, m, WindowSpec.torus(1024), 123)
    n_pairs = 2 * 1024 * 1024  # one candidate pair per lattice bond
    p = 0.5
    sigma = np.sqrt(p * (1 - p) / n_pairs)
    assert abs(len(s.edges_u) / n_pairs - p) < 4 * sigma


def test_reproducibility_bit_identical():
    m = Model(kind="word_metric", r=2, lam=3.0)
    a = sample_spread_out(Z2, Z2_T2, m, WindowSpec.torus(32), 7)
    b = sample_spread_out(Z2, Z2_T2, m, WindowSpec.torus(32), 7)
    assert np.array_equal(a.edges_u, b.edges_u)
    assert np.array_equal(a.edges_v, b.edges_v)
    c = sample_spread_out(Z2, Z2_T2, m, WindowSpec.torus(32), 8)
    assert _edge_set(a) != _edge_set(c)


def test_monotone_coupling_in_lambda():
    lo = Model(kind="word_metric", r=2, lam=1.0)
    hi = Model(kind="word_metric", r=2, lam=3.0)
    a = sample_spread_out(Z2, Z2_T2, lo, WindowSpec.torus(32), 5)
    b = sample_spread_out(Z2, Z2_T2, hi, WindowSpec.torus(32), 5)
    assert _edge_set(a) <= _edge_set(b)


def test_cc_proxy_model_distribution_equality():
    """Same uniforms, same denominator -> identical edge sets between the
    lattice model and its rescaled relabeling."""
    beta2 = float(Z2_T2.beta(2))
    word = Model(kind="word_metric", r=2, lam=1.5)
    proxy = Model(kind="cc_proxy", r=2, lam=1.5 * (2.0 * 4) / beta2, c_S=2.0)
    # calibrated so both have the same edge probability
    a = sample_spread_out(Z2, Z2_T2, word, WindowSpec.torus(32), 9)
    b = sample_spread_out(Z2, Z2_T2, proxy, WindowSpec.torus(32), 9)
    assert _edge_set(a) == _edge_set(b)
    rescaled = rescale_sample(Z2, b)
    assert rescaled.shape == b.points.shape
    assert np.allclose(rescaled, b.points / 2.0)


def test_window_kinds():
    pts = window_vertices(Z2, WindowSpec.box([-2, -2], [2, 2]))
    assert len(pts) == 25
    pts = window_vertices(HEIS, WindowSpec.word_ball(2), enumerate_ball(HEIS, 2, materialize=True))
    assert len(pts) == 17
    with pytest.raises(ValueError):
        window_vertices(HEIS, WindowSpec.torus(8))
    with pytest.raises(ResourceCap):
        window_vertices(Z2, WindowSpec.torus(64), vertex_cap=100)


def test_word_ball_window_sampling():
    table = enumerate_ball(HEIS, 6, materialize=True)
    m = Model(kind="word_metric", r=2, lam=3.0)
    s = sample_spread_out(HEIS, table, m, WindowSpec.word_ball(4), 3)
    # every edge connects points at word distance <= 2
    from nilpercolate.groups import inverse, multiply

    for u, v in zip(s.edges_u, s.edges_v):
        pu = tuple(int(c) for c in s.points[u])
        pv = tuple(int(c) for c in s.points[v])
        diff = multiply(HEIS, inverse(HEIS, pu), pv)
        assert table.word_length(diff) <= 2


def test_cluster_stats_against_dfs_oracle():
    m = Model(kind="word_metric", r=2, lam=2.0)
    s = sample_spread_out(Z2, Z2_T2, m, WindowSpec.box([0, 0], [24, 24]), 17)
    rep = cluster_stats(s)
    sizes = component_sizes(
        s.n_vertices, list(zip(s.edges_u.tolist(), s.edges_v.tolist()))
    )
    assert rep.C1_vertices == sizes[0]
    assert rep.C2_vertices == (sizes[1] if len(sizes) > 1 else 0)
    assert rep.total_edges == len(s.edges_u)


def test_cluster_stats_trivial_cases():
    m = Model(kind="word_metric", r=1, lam=0.0)
    s = sample_spread_out(Z2, Z2_T1, m, WindowSpec.torus(4), 0)
    rep = cluster_stats(s)
    assert rep.C1_vertices == 1 and rep.C1_edges == 0
    assert rep.giant_fraction == 1 / 16


def test_giant_component_law_check():
    report = giant_component_law_check(
        Z2,
        "word_metric",
        rs=[2, 4],
        window_for=lambda r: WindowSpec.torus(32 * r),
        lam=2.0,
        seeds=range(5),
    )
    per_r = report["per_r"]
    assert per_r[4]["c1_over_rho_mean"] > 0
    assert per_r[4]["c2_over_c1_mean"] < per_r[2]["c2_over_c1_mean"]
    with pytest.raises(ValueError):
        giant_component_law_check(
            Z2, "word_metric", [1], lambda r: WindowSpec.torus(8), 2.0, seeds=[1, 2]
        )


def test_estimate_lambda_c_small():
    lam = estimate_lambda_c(
        Z2, Z2_T1, "word_metric", 1, WindowSpec.torus(128),
        seeds=range(7), theta=0.1, tol=0.05,
    )
    assert 2.1 <= lam <= 2.9


def test_estimate_lambda_c_bracket_failure():
    with pytest.raises(RuntimeError, match="bracket"):
        estimate_lambda_c(
            Z2, Z2_T1, "word_metric", 1, WindowSpec.torus(32),
            seeds=range(5), theta=0.999, tol=0.05,
        )
    with pytest.raises(ValueError):
        estimate_lambda_c(
            Z2, Z2_T1, "word_metric", 1, WindowSpec.torus(32),
            seeds=range(5), theta=1.0, tol=0.05,
        )


def test_kernel_norm_lower_bound():
    region = Region.centered(10.0)
    b10 = kernel_norm_lower_bound(Z2, region, 1.0, 100_000, 0)
    assert b10 <= 1.0
    b20 = kernel_norm_lower_bound(Z2, Region.centered(20.0), 1.0, 100_000, 0)
    assert b20 > b10  # boundary layer shrinks relative to the box
    assert kernel_norm_lower_bound(Z2, Region.centered(50.0), 1.5, 100_000, 0) > 1.0
    with pytest.raises(ValueError):
        kernel_norm_lower_bound(Z2, Region.centered(1.0), 1.0, 1000, 0)
