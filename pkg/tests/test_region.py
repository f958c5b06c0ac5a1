import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domsched.network import NONE, make_rate_grid
from domsched.region import (LinkRegionParams, NoDominantInterfererError, achieved_rate,
                             feasibility_table, is_feasible, max_feasible_index, project_feasible,
                             project_indices, region_params, sinr_joint, sinr_reuse1)

from conftest import instance_from_rx, symmetric_pair


def test_sinr_reuse1_single_link():
    inst = instance_from_rx([[1.0]], 1.0, [NONE])
    assert sinr_reuse1(inst, 0) == 1.0


def test_sinr_reuse1_symmetric_pair():
    inst = symmetric_pair(1.0, 1.0, 1.0)
    assert sinr_reuse1(inst, 0) == 0.5


def test_sinr_reuse1_three_links():
    rx = [[2.0, 0.5, 0.3], [1, 1, 1], [1, 1, 1]]
    inst = instance_from_rx(rx, 0.2, [1, 0, 0])
    assert sinr_reuse1(inst, 0) == pytest.approx(2.0)


def test_sinr_joint_pair():
    inst = symmetric_pair(1.0, 1.0, 1.0)
    assert sinr_joint(inst, 0, 0) == 1.0
    assert sinr_joint(inst, 0, 1) == 1.0


def test_sinr_joint_three_links():
    rx = [[2.0, 1.0, 0.5], [1, 1, 1], [1, 1, 1]]
    inst = instance_from_rx(rx, 0.5, [1, 0, 0])
    assert sinr_joint(inst, 0, 0) == pytest.approx(2.0)
    assert sinr_joint(inst, 0, 1) == pytest.approx(1.0)


def test_sinr_joint_needs_interferer():
    inst = instance_from_rx([[1.0, 0.1], [0.1, 1.0]], 1.0, [NONE, 0])
    with pytest.raises(NoDominantInterfererError):
        sinr_joint(inst, 0, 0)
    with pytest.raises(ValueError):
        sinr_joint(inst, 1, 5)


def test_region_params_without_interferer():
    inst = instance_from_rx([[1.0, 0.1], [0.1, 1.0]], 1.0, [NONE, 0])
    p = region_params(inst, 0)
    assert p.rho_int is None
    assert p.rho_serv == p.rho_reuse1


def test_reuse1_never_above_joint():
    inst = symmetric_pair(3.0, 1.5, 0.7)
    p = region_params(inst, 0)
    assert p.rho_reuse1 <= p.rho_serv


UNIT = LinkRegionParams(rho_reuse1=0.5, rho_serv=2.0, rho_int=2.0)


def test_feasible_examples():
    assert is_feasible(UNIT, 0.5, 0.5)
    # sum 2 exceeds log2(3) and the reuse-1 cap log2(1.25) is below 1
    assert not is_feasible(UNIT, 1.0, 1.0)
    assert is_feasible(UNIT, 0.0, UNIT.cap_int)


def test_reuse1_branch_ignores_interferer():
    assert is_feasible(UNIT, UNIT.cap_reuse1, 1e6)


def test_achieved_rate_examples():
    assert achieved_rate(UNIT, 0.5, 0.5) == 0.5
    assert achieved_rate(UNIT, 1.0, 1.0) == 0.0
    assert achieved_rate(UNIT, 0.0, 3.0) == 0.0


def test_feasibility_table_matches_scalar():
    pts = make_rate_grid().points
    tab = feasibility_table(UNIT, pts)
    for a in range(pts.size):
        for b in range(pts.size):
            assert tab[a, b] == is_feasible(UNIT, pts[a], pts[b])


def test_projection_identity_on_feasible():
    inst = symmetric_pair(2.0, 2.0, 1.0, make_rate_grid(3, 1.0, 0.5))
    np.testing.assert_array_equal(project_feasible(inst, [1, 1]), [0.5, 0.5])


def test_projection_against_huge_interferer():
    grid = make_rate_grid()
    inst = symmetric_pair(2.0, 2.0, 1.0, grid)
    p = region_params(inst, 0)
    top = grid.count - 1
    r = project_feasible(inst, [top, top])
    expected = grid.points[grid.floor_index(min(grid.points[top], p.cap_reuse1))]
    assert r[0] == expected


def test_projection_of_zero():
    inst = symmetric_pair()
    np.testing.assert_array_equal(project_feasible(inst, [0, 0]), [0.0, 0.0])


def test_max_feasible_index_falls_back_to_zero():
    pts = make_rate_grid().points
    tiny = LinkRegionParams(1e-9, 1e-9, 1e-9)
    assert max_feasible_index(tiny, pts, 24, 5.0) == 0


def test_non_convexity_witness():
    p = LinkRegionParams(rho_reuse1=0.5, rho_serv=10.0, rho_int=10.0)
    a = (p.cap_serv, 0.0)
    b = (p.cap_reuse1, 10.0)
    mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
    assert is_feasible(p, *a) and is_feasible(p, *b)
    assert not is_feasible(p, *mid)


def independent_region(p, xi, xj, L=2.0):
    reuse = xi <= math.log2(1 + p.rho_reuse1 / L) + 1e-12
    if p.rho_int is None:
        return reuse
    c1 = xi <= math.log2(1 + p.rho_serv / L) + 1e-12
    c2 = xj <= math.log2(1 + p.rho_int / L) + 1e-12
    c3 = xi + xj <= math.log2(1 + (p.rho_serv + p.rho_int) / L) + 1e-12
    return reuse or (c1 and c2 and c3)


sinr = st.floats(1e-3, 1e3)


@st.composite
def params(draw):
    serv = draw(sinr)
    ratio = draw(st.floats(0.0, 1.0))
    has_int = draw(st.booleans())
    return LinkRegionParams(serv * ratio, serv, draw(sinr) if has_int else None)


@settings(max_examples=300, deadline=None)
@given(params(), st.floats(0, 6), st.floats(0, 6))
def test_union_matches_direct_inequalities(p, xi, xj):
    assert is_feasible(p, xi, xj) == independent_region(p, xi, xj)


@settings(max_examples=300, deadline=None)
@given(params(), st.floats(0, 6), st.floats(0, 6), st.floats(0, 1))
def test_monotone_decodability(p, xi, xj, shrink):
    if is_feasible(p, xi, xj):
        assert is_feasible(p, xi * shrink, xj)


@settings(max_examples=200, deadline=None)
@given(params())
def test_interference_free_restoration(p):
    if p.rho_int is None:
        return
    room = min(p.cap_int, p.cap_sum - p.cap_serv)
    xj = 0.5 * room
    hi = p.cap_serv + 1.0
    pts = np.linspace(0, hi, 4001)
    best = max(x for x in pts if is_feasible(p, x, xj))
    assert best == pytest.approx(max(p.cap_serv, p.cap_reuse1), abs=hi / 4000)
    assert is_feasible(p, p.cap_serv, xj)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_projection_always_feasible(n, seed):
    rng = np.random.default_rng(seed)
    rx = 10 ** rng.uniform(-3, 0, (n, n))
    sigma = np.argmax(rx - np.diag(np.full(n, np.inf)), axis=1)
    inst = instance_from_rx(rx, 1e-3, sigma)
    xhat = rng.integers(0, inst.grid.count, n)
    x = project_indices(inst, xhat)
    assert np.all(x <= xhat)
    pts = inst.grid.points
    for i in range(n):
        p = region_params(inst, i)
        xj_att = pts[xhat[sigma[i]]]
        xj_proj = pts[x[sigma[i]]]
        assert achieved_rate(p, pts[x[i]], xj_att) == pts[x[i]]
        # backing off the interferer only helps
        assert achieved_rate(p, pts[x[i]], xj_proj) == pts[x[i]]
