import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qanneal.classical import Schedule
from qanneal.pimc import (GAMMA_FLOOR, QaParams, TrotterLattice, check_schedule_against_mn,
                          effective_energy, inter_slice_coupling, mn_schedule, pimc_anneal,
                          pimc_equilibrium_estimate, trotter_couplings, trotter_exact_average)
from qanneal.schrodinger import thermal_average
from qanneal.spins import COMPLETE, DisorderModel, ferromagnet, sample_disorder


@settings(max_examples=50, deadline=None)
@given(x=st.floats(1e-6, 5.0))
def test_coupling_matches_naive_formula(x):
    naive = 0.5 * math.log(1.0 / math.tanh(x))
    assert math.isclose(inter_slice_coupling(x, 1.0, 1), naive, rel_tol=1e-9)


def test_coupling_large_argument_is_finite():
    # coth x -> 1, K ~ exp(-2x)
    K = inter_slice_coupling(40.0, 1.0, 1)
    assert math.isclose(K, math.exp(-80.0), rel_tol=1e-12)
    with pytest.raises(ValueError):
        inter_slice_coupling(0.0, 1.0, 4)


def test_trotter_couplings():
    Kij, K = trotter_couplings(np.array([1.0, -2.0]), 0.5, 0.05, 20)
    assert np.allclose(Kij, [1.0, -2.0])
    assert math.isclose(K, 0.5 * math.log(1 / math.tanh(0.5)), rel_tol=1e-14)
    with pytest.raises(ValueError):
        trotter_couplings(1.0, 0.5, 0.1, 1)


def test_mn_schedule_formula_and_check():
    t = np.arange(50)
    g = mn_schedule(t, 20, 0.05, 1.0, 4.0)
    assert np.allclose(g, np.arctanh((t + 2.0) ** -0.5), rtol=1e-14)
    assert np.all(np.diff(g) < 0)
    assert check_schedule_against_mn(g * 1.01, 20, 0.05, 1.0, 4.0).size == 0
    bad = g.copy()
    bad[[7, 30]] *= 0.9
    assert list(check_schedule_against_mn(bad, 20, 0.05, 1.0, 4.0)) == [7, 30]


def test_effective_energy_uniform_slices():
    p = ferromagnet(4)
    M, T, gam = 6, 0.2, 0.8
    lat = TrotterLattice(p, M, T, gam, np.ones((M, 4)))
    want = (M * -6.0) / (M * T) - lat.K * M * 4
    assert math.isclose(effective_energy(lat), want, rel_tol=1e-14)


def test_lattice_validation():
    with pytest.raises(ValueError):
        TrotterLattice(ferromagnet(3), 4, 0.1, 1.0, np.zeros((4, 3)))


def test_transfer_matrix_approaches_exact_thermal():
    p = sample_disorder(DisorderModel("gaussian", 3), COMPLETE, 4).with_fields(np.full(4, 0.2))
    exact = thermal_average(p, 0.7, 0.3)["H_C"]
    errs = [abs(trotter_exact_average(p, 0.7, 0.3, M) - exact) for M in (8, 32, 64)]
    assert errs[0] > errs[1] > errs[2]
    # Trotter error shrinks as 1/M^2
    assert errs[2] < 2e-3
    assert 3.6 < errs[1] / errs[2] < 4.4


def test_transfer_matrix_size_guard():
    with pytest.raises(ValueError):
        trotter_exact_average(ferromagnet(13), 1.0, 0.5, 4)


def test_equilibrium_estimate_matches_transfer_matrix():
    p = sample_disorder(DisorderModel("gaussian", 17), COMPLETE, 3)
    est = pimc_equilibrium_estimate(p, 0.6, 0.25, 8, 40_000, 123)
    ref = trotter_exact_average(p, 0.6, 0.25, 8)
    assert abs(est.energy - ref) < 4 * est.energy_stderr
    assert est.slice_energy.shape == (8,)
    assert np.allclose(np.diag(est.correlations), 1.0)


def test_qa_params_defaults_and_floor():
    q = QaParams.default(1000)
    assert (q.M, q.T) == (20, 0.05)
    g = q.gammas()
    assert g[0] == 2.5 and g.size == 1000
    assert g.min() >= GAMMA_FLOOR
    with pytest.raises(ValueError):
        QaParams(1, 0.1, Schedule.constant(1.0), 10)


def test_pimc_anneal_ferromagnet_and_reproducibility():
    p = ferromagnet(8)
    q = QaParams(10, 0.1, Schedule.linear(2.0, 600), 600)
    a = pimc_anneal(p, q, 11)
    b = pimc_anneal(p, q, 11)
    assert a.same_as(b)
    assert a.final_energy == -28.0
    assert a.extra["slices"].shape == (10, 8)
    assert a.final_energy == a.extra["slice_energies"].min()
    assert np.all(np.diff(a.column("control")) <= 0)
