"""Ball enumeration, growth fits, and subgroup/coset inclusions."""

import numpy as np
import pytest

from nilpercolate import builtin_spec
from nilpercolate.balls import (
    coset_ball_inclusion_check,
    enumerate_ball,
    fit_growth,
    fit_shell_decay,
    orbit_count_check,
    shell_profile,
    subgroup_ball,
)
from nilpercolate.errors import ResourceCap
from nilpercolate.groups import multiply

from oracles import bfs_ball_counts_from, heis_multiply, z1_beta, z2_beta

HEIS = builtin_spec("heisenberg3")
Z1 = builtin_spec("z1")
Z2 = builtin_spec("z2")
STEP3 = builtin_spec("step3")


def test_heisenberg_counts_match_bruteforce_oracle():
    gens = [g for g in HEIS.generators if any(g)]
    counts, dist = bfs_ball_counts_from((0, 0, 0), gens, heis_multiply, 6)
    table = enumerate_ball(HEIS, 6, materialize=True)
    assert list(table.counts) == counts
    assert table.elements == dist


def test_abelian_counts_closed_form():
    t1 = enumerate_ball(Z1, 20)
    assert list(t1.counts) == [z1_beta(r) for r in range(21)]
    t2 = enumerate_ball(Z2, 30)
    assert list(t2.counts) == [z2_beta(r) for r in range(31)]


def test_step3_counts_match_python_bfs_oracle():
    """Generic-product BFS (no closed form, no kernels) as oracle."""
    gens = [g for g in STEP3.generators if any(g)]

    def mul(x, g):
        return multiply(STEP3, x, g)

    counts, _ = bfs_ball_counts_from((0, 0, 0, 0), gens, mul, 4)
    table = enumerate_ball(STEP3, 4)
    assert list(table.counts) == counts


def test_ball_table_word_length_and_offsets():
    table = enumerate_ball(Z2, 2, materialize=True)
    assert table.word_length((1, 1)) == 2
    offs = table.offsets(1)
    assert offs == sorted([(-1, 0), (0, -1), (0, 1), (1, 0)])
    assert (0, 0) not in offs
    with pytest.raises(ValueError):
        table.word_length((5, 5))


def test_resource_cap():
    with pytest.raises(ResourceCap):
        enumerate_ball(Z2, 100, max_points=100)


def test_ball_csv(tmp_path):
    table = enumerate_ball(Z2, 3)
    path = tmp_path / "ball.csv"
    table.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "n,beta_n"
    assert len(lines) == 5
    assert lines[1] == "0,1"


def test_fit_growth_degrees():
    assert fit_growth(enumerate_ball(Z1, 32)).fitted_degree == 1
    fit2 = fit_growth(enumerate_ball(Z2, 32))
    assert fit2.fitted_degree == 2
    assert 1.8 <= fit2.c_S <= 2.2
    fit4 = fit_growth(enumerate_ball(HEIS, 14))
    assert fit4.fitted_degree == 4


def test_fit_growth_needs_radius():
    with pytest.raises(ValueError):
        fit_growth(enumerate_ball(Z2, 4))


def test_shell_profile_decays():
    table = enumerate_ball(Z2, 32)
    prof = shell_profile(table)
    assert len(prof) == 32
    # shell ratios (beta(n+1)-beta(n))/beta(n) ~ 2/n for Z^2
    c, delta = fit_shell_decay(prof)
    assert 0.8 <= delta <= 1.2


def test_subgroup_ball_abelian_oracle():
    """H = 2Z x Z inside Z^2: exact membership is a parity check."""
    table = enumerate_ball(Z2, 6, materialize=True)
    got = subgroup_ball(Z2, [(2, 0), (-2, 0), (0, 1), (0, -1)], 6, table)
    expect = {
        p for p, d in table.elements.items() if d <= 6 and p[0] % 2 == 0
    }
    assert got == expect


def test_coset_ball_inclusion_z2_index2():
    """H = 2Z x Z, X = {0, e1}: S^{r(m-2k)} inside (H cap S^m)^r X."""
    report = coset_ball_inclusion_check(
        Z2,
        [(2, 0), (-2, 0), (0, 1), (0, -1)],
        X=[(0, 0), (1, 0)],
        k=1,
        m=3,
        r=2,
        index=2,
    )
    assert report["holds"], report
    assert report["transversal_ok"]
    assert report["index_bound_ok"]


def test_coset_ball_inclusion_bad_transversal():
    with pytest.raises(ValueError):
        coset_ball_inclusion_check(
            Z2,
            [(2, 0), (-2, 0), (0, 1), (0, -1)],
            X=[(0, 0), (2, 0)],  # both in H: not a transversal
            k=2,
            m=5,
            r=1,
        )


def test_orbit_count_z2():
    # H = 2Z x 2Z has 4 orbits (cosets); all meet S^3
    report = orbit_count_check(
        Z2, [(2, 0), (-2, 0), (0, 2), (0, -2)], k=4
    )
    assert report["orbits_met"] == 4
    assert report["holds"]


def test_orbit_count_heisenberg_center():
    # H = center (generated by (0,0,±1)): orbits are (a,b)-fibers;
    # S^1 meets the 5 fibers over (0,0), (±1,0), (0,±1) -> >= 2 orbits
    report = orbit_count_check(HEIS, [(0, 0, 1), (0, 0, -1)], k=2)
    assert report["holds"]
