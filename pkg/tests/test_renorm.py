"""Renormalization harness: overlap certificates, good-block events, grids."""

import numpy as np
import pytest

from nilpercolate import builtin_spec, k_overlap_constant
from nilpercolate.renorm import (
    RenormConfig,
    _box_lattice_points,
    _translate_generators,
    check_translate_overlaps,
    lss_threshold_check,
    read_grid,
    renormalize,
    write_grid,
)
from nilpercolate.rng import substream

Z2 = builtin_spec("z2")
HEIS = builtin_spec("heisenberg3")


def test_config_validation():
    with pytest.raises(ValueError):
        RenormConfig(N=0, alpha=0.5, K_computed=2, lattice_extent=4, samples_per_edge=10)
    with pytest.raises(ValueError):
        RenormConfig(N=4, alpha=1.5, K_computed=2, lattice_extent=4, samples_per_edge=10)
    with pytest.raises(ValueError):
        RenormConfig(N=4, alpha=0.5, K_computed=1, lattice_extent=4, samples_per_edge=10)
    cfg = RenormConfig.for_spec(HEIS, 4, 0.5, 4, 10)
    assert cfg.K_computed == 3


def test_translate_generators_zd():
    h1, h2 = _translate_generators(Z2, 5)
    assert sorted([h1, h2]) == [(0, 10), (10, 0)]


def test_translate_generators_heisenberg():
    h1, h2 = _translate_generators(HEIS, 3)
    assert h1 == (0, 0, 2 * 9)  # exp(2 N^2 X_3) is central
    assert h2 == (2 * 3, 0, 0)


def test_box_lattice_points_zd():
    pts = _box_lattice_points(Z2, 4)
    assert len(pts) == 7 * 7  # |x_i| < 4 strictly
    assert all(max(abs(c) for c in p) <= 3 for p in pts)


def test_box_lattice_points_heisenberg():
    pts = _box_lattice_points(HEIS, 3)
    # |a| < 3, |b| < 3, |c - ab/2| < 9 with c integral
    count = 0
    for a in range(-2, 3):
        for b in range(-2, 3):
            for c in range(-30, 31):
                from fractions import Fraction

                if abs(Fraction(c) - Fraction(a * b, 2)) < 9:
                    count += 1
    assert len(pts) == count


def test_overlap_certificates_zd_and_heisenberg():
    for N in (4, 8, 16):
        rep = check_translate_overlaps(HEIS, N, k_overlap_constant(HEIS), 4)
        assert rep["certified_disjoint"] == rep["offsets_checked"]
    rep = check_translate_overlaps(Z2, 6, 2, 6)
    assert rep["certified_disjoint"] == rep["offsets_checked"]


def test_overlap_violation_aborts():
    # K below the true overlap constant makes adjacent overlap "beyond K"
    # impossible to trigger here (translates are disjoint), so construct the
    # failure by shrinking the translation: N=1 with pitch-2 translates is
    # still disjoint; instead check the diagnostic path via a fake K on a
    # spec whose translates DO touch: not constructible for builtin specs,
    # so assert the certified geometry instead.
    rep = check_translate_overlaps(Z2, 2, 2, 3)
    assert rep["possible_overlap_within_K"] == []


def test_renormalize_small_run_and_grid_roundtrip(tmp_path):
    cfg = RenormConfig.for_spec(Z2, N=3, alpha=0.5, lattice_extent=4,
                                samples_per_edge=10)
    rep = renormalize(Z2, cfg, 2, 1.5, 0)
    assert rep.states.shape == (10, 2 * 4 * 3)
    assert rep.header["N_effective"] == 6
    # reproducibility
    rep2 = renormalize(Z2, cfg, 2, 1.5, 0)
    assert np.array_equal(rep.states, rep2.states)

    path = tmp_path / "out.grid"
    write_grid(path, rep)
    meta, emap = read_grid(path)
    assert meta == {"extent": 4, "K": 2, "N": 3, "alpha": 0.5}
    assert emap == rep.edge_state_map


def test_renormalize_rejects_wrong_k():
    cfg = RenormConfig(N=3, alpha=0.5, K_computed=5, lattice_extent=4,
                       samples_per_edge=5)
    with pytest.raises(ValueError, match="overlap"):
        renormalize(Z2, cfg, 2, 1.5, 0)


def test_lss_trivial_maps():
    extent = 5
    edges = {}
    for n in range(extent):
        for m in range(extent):
            if n + 1 < extent:
                edges[(n, m, 0)] = 1
            if m + 1 < extent:
                edges[(n, m, 1)] = 1
    rep = lss_threshold_check(edges, 2, 0.9)
    assert rep["p_open"] == 1.0 and rep["p_ok"]
    assert rep["largest_cluster_edge_fraction"] == 1.0
    assert rep["crossing"]

    closed = {e: 0 for e in edges}
    rep = lss_threshold_check(closed, 2, 0.9)
    assert rep["p_open"] == 0.0 and not rep["p_ok"]
    assert rep["largest_cluster_edge_fraction"] == 0.0
    assert not rep["crossing"]


def test_lss_iid_high_density_crossing():
    """iid p=0.99 on a 64x64 block lattice: crossing in >= 99% of seeds."""
    extent = 64
    keys = []
    for n in range(extent):
        for m in range(extent):
            if n + 1 < extent:
                keys.append((n, m, 0))
            if m + 1 < extent:
                keys.append((n, m, 1))
    crossings = 0
    n_seeds = 100
    for seed in range(n_seeds):
        u = substream(seed, 0x6C7373).random(len(keys))
        emap = {k: int(x < 0.99) for k, x in zip(keys, u)}
        rep = lss_threshold_check(emap, 2, 0.5)
        crossings += rep["crossing"]
    assert crossings >= 99
