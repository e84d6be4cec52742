import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infnet.network import (NetworkDescriptor, NetworkError, Topology, d_norm, instantiate_truncation,
                            sigma_dim, true_parameter_stack)
from infnet.presets import academic_class, lorenz_class, spacecraft_class


def desc(kind, band=1, cls=None):
    cls = cls or spacecraft_class(0.1, 1.0, 0.05)
    return NetworkDescriptor([cls], Topology(kind, band))


def test_cascade_clip():
    tr = instantiate_truncation(desc("cascade"), 5, "clip")
    assert tr.neighbors == [[], [1], [2], [3], [4]]


def test_band_clip():
    tr = instantiate_truncation(desc("forward-band", 2), 4, "clip")
    assert tr.neighbors == [[2, 3], [3, 4], [4], []]


def test_band_wrap():
    tr = instantiate_truncation(desc("forward-band", 2), 4, "wrap")
    assert tr.neighbors[2] == [4, 1]
    assert tr.neighbors[3] == [1, 2]


def test_wrap_needs_more_than_card():
    with pytest.raises(NetworkError):
        instantiate_truncation(desc("forward-band", 4), 4, "wrap")
    with pytest.raises(NetworkError):
        instantiate_truncation(desc("cascade"), 1, "clip")


def test_edges_record_wiring():
    tr = instantiate_truncation(desc("cascade"), 3, "clip")
    assert tr.edges() == [(2, 1), (3, 2)]


def test_sigma_dim_examples():
    assert sigma_dim(desc("cascade"), 2) == 3
    assert sigma_dim(desc("forward-band", 1800), 1) == 5400
    assert sigma_dim(desc("forward-band", 5, academic_class(0.5, 0.5, 0.06)), 1) == 10


def test_d_norm_scales_with_sqrt_card():
    assert d_norm(desc("forward-band", 4)) == pytest.approx(2e-4)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["cascade", "forward-band"]), st.integers(1, 6), st.integers(2, 30),
       st.sampled_from(["clip", "wrap"]))
def test_truncation_invariants(kind, band, N, boundary):
    d = desc(kind, band)
    if boundary == "wrap" and N <= d.card:
        return
    tr = instantiate_truncation(d, N, boundary)
    for i, nb in enumerate(tr.neighbors, start=1):
        assert i not in nb
        assert all(1 <= j <= N for j in nb)
        if boundary == "clip":
            assert len(nb) <= d.card
        else:
            assert len(nb) == d.card


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["cascade", "forward-band"]), st.integers(1, 5), st.integers(2, 25))
def test_clip_monotone_in_size(kind, band, N):
    d = desc(kind, band)
    small = set(instantiate_truncation(d, N, "clip").edges())
    big = set(instantiate_truncation(d, N + 1, "clip").edges())
    assert small <= big


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["cascade", "forward-band"]), st.integers(1, 5), st.integers(2, 20),
       st.sampled_from(["clip", "wrap"]), st.integers(0, 2 ** 31))
def test_neighbor_sum_matches_lists(kind, band, N, boundary, seed):
    d = desc(kind, band)
    if boundary == "wrap" and N <= d.card:
        return
    tr = instantiate_truncation(d, N, boundary)
    X = np.random.default_rng(seed).normal(size=(N, 3))
    expect = np.array([X[[j - 1 for j in nb]].sum(axis=0) if nb else np.zeros(3) for nb in tr.neighbors])
    assert np.allclose(tr.neighbor_sum(X), expect)


def test_true_parameter_stack_embeds_truth():
    cls = lorenz_class(0.1, 0.8, 0.04)
    A, B, D = true_parameter_stack(cls, card=1)
    assert A.shape == (3, 6) and B.shape == (3, 3) and D.shape == (3, 3)
    x = np.array([[0.3, -0.2, 0.5]])
    from infnet.polycore import monomial_values

    F = monomial_values(np.array(cls.dict_F), x)[0]
    assert np.allclose(A @ F, cls.truth.drift(x)[0])


def test_varkappa_bounds_coupling_norm():
    for cls, card in [(spacecraft_class(0.1, 1.0, 0.05), 1), (lorenz_class(0.1, 0.8, 0.04), 1),
                      (academic_class(0.5, 0.5, 0.06), 5)]:
        d = NetworkDescriptor([cls], Topology("forward-band", card))
        assert cls.varkappa >= d_norm(d)
