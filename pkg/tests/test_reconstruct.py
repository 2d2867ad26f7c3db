import csv
import io

import numpy as np
import pytest

from oracles import THIRD_ORDER, hamiltonian_constant, nested_commutator_c2, nested_commutator_c3
from quadspec.examples import desitter_foliation, flat_foliation
from quadspec.foliation import Field, FoliationData, build_hamiltonian, field_on_states
from quadspec.reconstruct import (
    DEFAULT_DTS,
    THIRD_ORDER as LIB_THIRD_ORDER,
    IllConditionedFit,
    ReconstructionResult,
    commutator_series,
    lapse_shift_from_H,
    reconstruct_metric,
    solve_lapse_metric,
    strip_e,
)

N = 64


def lifted(values):
    return np.kron(np.eye(2), np.diag(values))


@pytest.fixture(scope="module")
def theta():
    return 2 * np.pi * np.arange(N) / N


def test_third_order_constant_matches_oracle():
    assert LIB_THIRD_ORDER == THIRD_ORDER


@pytest.mark.parametrize("R,m", [(1.0, 1.0), (2.0, 1.0), (1.0, 0.4)])
def test_nested_commutator_oracle_gives_third_order_formula(theta, R, m):
    """The exact dt^3 term read on constant spinors is THIRD_ORDER m N^3 g^tt f' g' E."""
    h = hamiltonian_constant(N, 1 / R, m)
    f, g = np.cos(theta), np.sin(2 * theta)
    c3 = nested_commutator_c3(h, lifted(f), lifted(g))
    pred = THIRD_ORDER * m / R ** 2 * (-np.sin(theta)) * (2 * np.cos(2 * theta))
    assert np.abs(strip_e(c3, N) - pred).max() <= 1e-11


def test_fit_matches_nested_commutators(theta):
    R, m = 2.0, 1.0
    h = hamiltonian_constant(N, 1 / R, m)
    f, g = np.cos(theta), np.sin(2 * theta)
    s = commutator_series(flat_foliation(R, m, N), f, g)
    ex3 = field_on_states(nested_commutator_c3(h, lifted(f), lifted(g)), N)
    ex2 = field_on_states(nested_commutator_c2(h, lifted(f), lifted(g)), N)
    assert np.abs(s.probe_field(3) - ex3).max() <= 1e-8
    assert np.abs(s.probe_field(2) - ex2).max() <= 1e-10
    assert s.probe_fit_residual <= 1e-10


@pytest.mark.parametrize("fol", [flat_foliation(1.0, 1.0, N), desitter_foliation(N, 1.0)], ids=["flat", "desitter"])
def test_second_order_vanishes_in_1plus1(theta, fol):
    s = commutator_series(fol, np.cos(theta), np.cos(theta))
    assert s.probe_norm(2) <= 1e-6 * s.probe_norm(3) * max(abs(x) for x in DEFAULT_DTS)


def test_massless_third_order_degenerate(theta):
    s0 = commutator_series(flat_foliation(1.0, 0.0, N), np.cos(theta), np.cos(theta))
    s1 = commutator_series(flat_foliation(1.0, 1.0, N), np.cos(theta), np.cos(theta))
    assert s0.probe_norm(3) <= 1e-6 * s1.probe_norm(3)


def test_conformal_only_false_in_1plus1(theta):
    # c2 vanishes on constant spinors in 1+1, so the massive series is never "conformal only"
    s1 = commutator_series(flat_foliation(1.0, 1.0, N), np.cos(theta), np.cos(theta))
    assert not s1.conformal_only()


def test_fit_errors(theta):
    fol = flat_foliation(1.0, 1.0, 16)
    th = fol.theta
    with pytest.raises(IllConditionedFit):
        commutator_series(fol, np.cos(th), np.cos(th), dts=[0.1, 0.2, 0.3])
    with pytest.raises(IllConditionedFit):
        commutator_series(fol, np.cos(th), np.cos(th), dts=[0.1, 0.1, 0.2, 0.3])
    with pytest.raises(IllConditionedFit):
        commutator_series(fol, np.cos(th), np.cos(th), dts=[0.0, 0.1, 0.2, 0.3])


def test_lapse_shift_from_H(theta):
    n, lapse, R, s = N, 1.5, 2.0, 0.3
    fol = FoliationData(n, Field.constant(lapse), Field.constant(s), Field.constant(R * R), mass=1.0)
    c, shift = lapse_shift_from_H(1j * build_hamiltonian(fol, 0.0), np.cos(theta))
    assert np.ma.count(c) > n // 2
    assert np.abs(c - lapse / R).max() <= 1e-10
    assert np.abs(shift - s).max() <= 1e-10
    with pytest.raises(ValueError):
        lapse_shift_from_H(1j * build_hamiltonian(fol, 0.0), np.ones(n))


def test_solve_round_trip():
    rng = np.random.default_rng(3)
    lapse = rng.uniform(0.5, 2.0, 10)
    ginv = rng.uniform(0.2, 3.0, 10)
    d = lapse ** 3 * ginv
    c = lapse * np.sqrt(ginv)
    lo, go = solve_lapse_metric(d, c)
    assert np.allclose(lo, lapse) and np.allclose(go, ginv)


def test_reconstruct_desitter():
    res = reconstruct_metric(desitter_foliation(N, 1.0), 0.0)
    err = res.max_errors()
    assert err["rel_error_lapse"] <= 1e-4 and err["rel_error_ginv"] <= 1e-4
    assert res.valid.all()
    assert res.meta["method"] == "operator projection on constant spinors"


def test_reconstruct_variable_lapse_and_metric(theta):
    """Position-dependent data: errors stay small away from masked points."""
    fol = FoliationData(N, Field.samples(1.0 + 0.2 * np.cos(theta)), Field.samples(0.1 * np.sin(theta)),
                        Field.samples(1.0 + 0.3 * np.sin(theta) ** 2), mass=1.0)
    res = reconstruct_metric(fol, 0.0)
    err = res.max_errors()
    assert err["rel_error_lapse"] <= 0.05 and err["rel_error_ginv"] <= 0.05
    assert err["abs_error_shift"] <= 0.05
    assert res.valid.mean() > 0.8


def test_reconstruct_refinement_decreases():
    """Two levels: grid doubled and offsets halved, errors go down."""
    coarse = reconstruct_metric(desitter_foliation(32, 1.0), 0.0, dts=DEFAULT_DTS).max_errors()
    fine = reconstruct_metric(desitter_foliation(64, 1.0), 0.0,
                              dts=tuple(x / 2 for x in DEFAULT_DTS)).max_errors()
    assert fine["rel_error_lapse"] < coarse["rel_error_lapse"]
    assert fine["rel_error_ginv"] < coarse["rel_error_ginv"]


def test_reconstruct_massless_raises():
    with pytest.raises(ValueError, match="conformal"):
        reconstruct_metric(flat_foliation(1.0, 0.0, 16))


def test_result_csv_columns():
    res = reconstruct_metric(flat_foliation(2.0, 1.0, 16), 0.0)
    rows = list(csv.reader(io.StringIO(res.to_csv())))
    assert tuple(rows[0]) == ReconstructionResult.COLUMNS
    assert len(rows) == 17
    d = res.to_dict()
    assert set(d) == {"meta", "max_errors", "rows"}
