import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from infnet import composition, pipeline
from infnet.composition import CompositionError, GainModel

from reference_values import SCENARIOS


def model_for(ref, topology="forward-band"):
    lo, hi = ref["alpha"]
    return GainModel.homogeneous(ref["kappa"], lo, hi, ref["rho"], ref["card"], topology)


@pytest.mark.parametrize("name", list(SCENARIOS))
def test_reference_norms(name):
    ref = SCENARIOS[name]
    ok, bound = composition.small_gain(model_for(ref))
    assert ok
    assert bound == pytest.approx(ref["norm11"], rel=1e-3)


def test_gain_entries():
    assert composition.build_gain_entry(5.0876e3, 9.4701e5, 0.1)[1] == pytest.approx(0.0537, rel=1e-3)
    assert composition.build_gain_entry(0.3242, 236.9447, 2.0)[1] == pytest.approx(6.8411e-4, rel=1e-4)
    assert composition.build_gain_entry(0.0, 1.0, 1.0) == (0.0, 0.0)


@pytest.mark.parametrize("args", [(1.0, 0.0, 1.0), (1.0, 1.0, 0.0), (-1.0, 1.0, 1.0)])
def test_gain_entry_domain(args):
    with pytest.raises(CompositionError):
        composition.build_gain_entry(*args)


def test_small_gain_failure():
    # uniform entry 0.01 with 200 neighbours
    model = GainModel.homogeneous(1.0, 1.0, 1.0, 0.01, 200)
    ok, bound = composition.small_gain(model)
    assert not ok and bound == pytest.approx(2.0)
    res = composition.compose(model)
    assert not res.passed
    with pytest.raises(CompositionError):
        composition.compute_mu_kappa(model)


def test_zero_gain_passes():
    model = GainModel.homogeneous(0.7, 1.0, 2.0, 0.0, 10)
    ok, bound = composition.small_gain(model)
    assert ok and bound == 0.0
    mu, kinf = composition.compute_mu_kappa(model, 1e-9)
    assert mu == [1.0] and kinf == pytest.approx(0.7 - 1e-9, abs=1e-15)


def test_kappa_inf_examples():
    sc = SCENARIOS["spacecraft-unknownD"]
    _, kinf = composition.compute_mu_kappa(model_for(sc), 1e-9)
    assert kinf == pytest.approx(0.09463, rel=1e-3)
    theta = sc["rho"] / sc["alpha"][0]
    assert sc["card"] * theta <= sc["kappa"] - kinf
    ac = SCENARIOS["academic-knownD"]
    assert composition.compute_mu_kappa(model_for(ac), 1e-9)[1] == pytest.approx(0.1827, rel=2e-3)


def test_decoupled_subsystem():
    res = composition.compose(GainModel.homogeneous(0.3, 1.0, 1.0, 5.0, 0), 1e-9)
    assert res.passed and res.norm11 == 0.0
    assert res.kappa_inf == pytest.approx(0.3 - 1e-9)


def test_epsilon_must_keep_rate_positive():
    model = GainModel.homogeneous(0.1, 1.0, 1.0, 0.0, 1)
    with pytest.raises(CompositionError):
        composition.compute_mu_kappa(model, 0.2)
    with pytest.raises(CompositionError):
        composition.compute_mu_kappa(model, 0.0)


def test_clf_constants():
    sc = SCENARIOS["spacecraft-unknownD"]
    res = composition.compose(model_for(sc))
    assert (res.clf_alpha_lo, res.clf_alpha_hi) == sc["alpha"]
    two = GainModel([0.5, 0.4], [1.0, 2.0], [3.0, 4.0], [0.1, 0.1], [1, 1])
    assert composition.compose_clf(two, [1.0, 1.0], 0.1) == (1.0, 4.0, 0.1)


@given(st.floats(0.01, 100.0))
def test_clf_constants_scale_with_weights(c):
    model = GainModel.homogeneous(0.5, 2.0, 3.0, 0.1, 1)
    lo, hi, k = composition.compose_clf(model, [1.0], 0.2)
    lo2, hi2, k2 = composition.compose_clf(model, [c], 0.2)
    assert lo2 == pytest.approx(c * lo) and hi2 == pytest.approx(c * hi) and k2 == k


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 10.0), st.integers(1, 2000),
       st.floats(1e-3, 1e3))
def test_norm_invariant_under_joint_scaling(rho, alpha, kappa, card, c):
    a = composition.omega_norm_11(GainModel.homogeneous(kappa, alpha, alpha, rho, card))
    b = composition.omega_norm_11(GainModel.homogeneous(kappa, c * alpha, c * alpha, c * rho, card))
    assert a == pytest.approx(b, rel=1e-9)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 10.0), st.integers(1, 100),
       st.integers(1, 100))
def test_norm_monotone_in_card(rho, alpha, kappa, c1, c2):
    n1 = composition.omega_norm_11(GainModel.homogeneous(kappa, alpha, alpha, rho, min(c1, c2)))
    n2 = composition.omega_norm_11(GainModel.homogeneous(kappa, alpha, alpha, rho, max(c1, c2)))
    assert n1 <= n2


@pytest.mark.parametrize("topology,card,size", [("cascade", 1, 12), ("forward-band", 5, 30), ("forward-band", 40, 60)])
@pytest.mark.parametrize("boundary", ["clip", "wrap"])
def test_materialized_columns_below_closed_form(topology, card, size, boundary):
    model = GainModel.homogeneous(0.5, 2.0, 3.0, 0.2, card, topology)
    sums = composition.materialized_column_sums(model, size, boundary)
    assert sums.shape == (size,)
    assert np.all(sums <= composition.omega_norm_11(model) * (1 + 1e-12))


def test_unsupported_structure_rejected():
    with pytest.raises(CompositionError, match="topology"):
        composition.omega_norm_11(GainModel.homogeneous(1.0, 1.0, 1.0, 1.0, 1, "star"))
    with pytest.raises(CompositionError, match="homogeneous"):
        composition.omega_norm_11(GainModel([1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1, 1]))
    with pytest.raises(CompositionError):
        GainModel.homogeneous(1.0, 2.0, 1.0, 1.0, 1)


def test_gain_csv(tmp_path):
    model = model_for(SCENARIOS["lorenz-knownD"])
    res = composition.compose(model)
    composition.write_gains_csv(tmp_path / "g.csv", model, res, ["lorenz"])
    rows = list(csv.reader(open(tmp_path / "g.csv")))
    assert rows[0] == composition.GAIN_HEADER
    assert rows[1][0] == "lorenz" and float(rows[1][8]) == pytest.approx(0.6841, rel=1e-3)
    assert rows[1][9] == "True"


def test_network_decrease_on_spacecraft(spacecraft_run):
    cfg, run = spacecraft_run
    res, comp = run.synthesis.result, run.composed
    trunc = pipeline.sim_truncation(cfg, 10)
    field = pipeline.closed_loop_field(trunc, res)
    dec = composition.network_decrease_check(trunc, res, field, 1.0, comp.kappa_inf, samples=500, radius=10.0)
    assert dec["pass"] and dec["worst_slack"] <= 1e-6
    # at the origin both sides vanish
    zero = np.zeros((trunc.size, trunc.n))
    assert np.all(field(zero) == 0.0)
