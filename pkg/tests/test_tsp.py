import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qanneal.classical import Schedule
from qanneal.pimc import QaParams
from qanneal.tsp import (EUCLIDEAN, TspInstance, Tour, brute_force_tour, ca_tsp, count_tours,
                         dumps_instance, edge_sum, euclidean_instance, greedy_tour, ising_form_check,
                         loads_instance, omega, pimc_tsp, random_instance, read_tsplib, shared_edges,
                         tour_length, tour_matrix, two_opt, two_opt_delta, validate_tour_matrix)

SQUARE4 = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)


def test_unit_square_tours():
    inst = TspInstance.from_coords(SQUARE4)
    assert tour_length(np.array([0, 1, 2, 3]), inst) == 4.0
    assert math.isclose(tour_length(np.array([0, 2, 1, 3]), inst), 2 + 2 * math.sqrt(2), rel_tol=1e-15)
    assert brute_force_tour(inst).length == 4.0


def test_instance_validation():
    with pytest.raises(ValueError):
        TspInstance(2, "random", np.array([[0, 1], [2, 0]]))
    with pytest.raises(ValueError):
        Tour.from_order([0, 1, 1, 3], TspInstance.from_coords(SQUARE4))


@pytest.mark.parametrize("n, want", [(4, 3), (5, 12), (8, 2520)])
def test_count_tours(n, want):
    assert count_tours(n) == want
    # distinct undirected cycles, counted independently by canonical edge sets
    cycles = {frozenset(frozenset((o[k], o[(k + 1) % n])) for k in range(n))
              for o in ((0, *p) for p in itertools.permutations(range(1, n)))}
    assert len(cycles) == want


def test_brute_force_against_heap_enumeration():
    inst = euclidean_instance(8, 3)
    best = min(edge_sum((0, *p), inst) for p in itertools.permutations(range(1, 8)))
    assert math.isclose(brute_force_tour(inst).length, best, rel_tol=1e-12)
    with pytest.raises(ValueError):
        brute_force_tour(euclidean_instance(11, 0))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(4, 12))
def test_ising_form_and_tour_matrix(seed, n):
    inst = random_instance(n, seed)
    order = np.random.default_rng(seed).permutation(n)
    chk = ising_form_check(order, inst)
    assert chk["ok"]
    assert math.isclose(tour_length(order, inst), edge_sum(order, inst), rel_tol=1e-12)
    assert validate_tour_matrix(tour_matrix(order))


def test_validate_tour_matrix_rejects_subtours():
    U = np.zeros((6, 6), dtype=int)
    for a, b in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]:
        U[a, b] = U[b, a] = 1
    assert not validate_tour_matrix(U)
    assert not validate_tour_matrix(np.ones((3, 3)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), data=st.data())
def test_two_opt_delta_is_exact(seed, data):
    inst = euclidean_instance(9, seed)
    t = Tour.from_order(np.random.default_rng(seed).permutation(9), inst)
    p = data.draw(st.integers(0, 6))
    q = data.draw(st.integers(p + 2, 8))
    if p == 0 and q == 8:
        with pytest.raises(ValueError):
            two_opt(t, inst, p, q)
        return
    u = two_opt(t, inst, p, q)
    assert math.isclose(u.length, edge_sum(u.order, inst), rel_tol=1e-12, abs_tol=1e-12)
    assert math.isclose(u.length - t.length, two_opt_delta(t.order, inst, p, q), abs_tol=1e-12)
    assert shared_edges(t.order, u.order) == 7


def test_greedy_tour_on_line():
    xy = np.array([[0, 0], [3, 0], [1, 0], [2, 0]], dtype=float)
    t = greedy_tour(TspInstance.from_coords(xy))
    assert list(t.order) == [0, 2, 3, 1]
    assert t.length == 6.0


def test_omega_metric_guard():
    assert omega(50.0, 100) == 0.5
    with pytest.raises(ValueError):
        omega(1.0, 4, "random")


@pytest.mark.parametrize("seed", [1, 2])
def test_ca_tsp_finds_optimum_small(seed):
    inst = euclidean_instance(9, seed)
    opt = brute_force_tour(inst).length
    rec = ca_tsp(inst, Schedule.exponential_between(1.0, 0.005, 800), 800, seed)
    assert math.isclose(rec.final_energy, opt, rel_tol=1e-9)
    assert np.all(np.diff(rec.column("best")) <= 0)
    assert ca_tsp(inst, Schedule.exponential_between(1.0, 0.005, 800), 800, seed).same_as(rec)


def test_pimc_tsp_finds_optimum_small():
    inst = euclidean_instance(8, 5)
    opt = brute_force_tour(inst).length
    q = QaParams(8, 0.05, Schedule.linear(1.0, 400), 400)
    rec = pimc_tsp(inst, q, 3)
    assert math.isclose(rec.final_energy, opt, rel_tol=1e-9)
    assert rec.extra["slices"].shape == (8, 8)


def test_instance_text_round_trip():
    for inst in (euclidean_instance(7, 1), random_instance(6, 2)):
        back = loads_instance(dumps_instance(inst))
        assert back.n == inst.n and back.metric == inst.metric
        assert np.array_equal(back.dist, inst.dist)


def test_read_tsplib():
    text = """NAME: toy
TYPE: TSP
DIMENSION: 4
EDGE_WEIGHT_TYPE: EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 0
3 3 4
4 0 4
EOF
"""
    inst = read_tsplib(text)
    assert inst.n == 4 and inst.metric == EUCLIDEAN
    assert inst.dist[0, 2] == 5.0
