import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebsc import channels as C
from ebsc import lab
from ebsc import rand
from ebsc import separability as SEP
from ebsc import superchannels as S
from ebsc import tensor as T
from ebsc.errors import LabelCollision, NotCP, NotSuperchannel, SchemaError
from ebsc.superchannels import Supermap


def random_superchannel(gen, d_a0=2, d_a1=2, d_b0=2, d_b1=2, d_e=2):
    pre = rand.random_channel(gen, [("B0", d_b0)], [("A0", d_a0), ("E", d_e)], 2)
    n_post = max(2, -(-(d_a1 * d_e) // d_b1))
    post = rand.random_channel(gen, [("A1", d_a1), ("E", d_e)], [("B1", d_b1)], n_post)
    return S.from_pre_post(pre, post)


def same(a, b):
    return np.allclose(a.data, T.permute_systems(b, a.names).data, atol=1e-12)


def test_identity_pre_post():
    pre = C.identity_channel(2, "B0", "A0")
    post = C.identity_channel(3, "A1", "B1")
    s = S.from_pre_post(pre, post)
    expected = T.kron(T.phi_plus("A0", "B0", 2), T.phi_plus("A1", "B1", 3))
    assert same(s.choi, expected)
    assert same(s.choi, S.identity_superchannel(2, 3).choi)


def test_example_pair_matches_closed_form():
    pre, post = lab.paper_example_pre_post()
    s = S.from_pre_post(pre, post)
    assert s.dims == {"A0": 2, "A1": 2, "B0": 2, "B1": 3}
    assert same(s.choi, lab.paper_example_closed_form())


@pytest.mark.parametrize("d", [2, 3])
def test_replacer_choi(d):
    s = lab.replacer_superchannel(d)
    sigma = T.basis_projector([("A0", d)], [0])
    expected = T.kron_all(sigma, T.identity([("A1", d)]), T.phi_plus("B0", "B1", d))
    assert same(s.choi, expected)


def test_from_pre_post_rejects_non_cp():
    pre = C.transpose_map(2, "B0", "A0")
    with pytest.raises(NotCP):
        S.from_pre_post(pre, C.identity_channel(2, "A1", "B1"))


def test_is_superchannel_cases():
    assert S.is_superchannel(S.identity_superchannel(2))
    assert S.is_superchannel(lab.paper_example_ebsc())
    bad_choi = T.kron(T.phi_plus("A0", "A1", 2), T.phi_plus("B0", "B1", 2)) / 2
    rep = S.is_superchannel(Supermap(("A0",), ("A1",), ("B0",), ("B1",), bad_choi))
    assert not rep
    assert "marginal_A1B0" in rep.failing


def test_apply_identity(gen):
    e = rand.random_channel(gen, [("A0", 2)], [("A1", 2)])
    out = S.apply(S.identity_superchannel(2), e)
    assert np.allclose(out.choi.data, e.choi.data)
    assert out.in_labels == ("B0",) and out.out_labels == ("B1",)


def test_replacer_outputs_identity(gen):
    s = lab.replacer_superchannel(2)
    for _ in range(3):
        e = rand.random_channel(gen, [("A0", 2)], [("A1", 2)], 3)
        assert same(S.apply(s, e).choi, T.phi_plus("B0", "B1", 2))


def test_example_on_depolarizing_tp():
    out = S.apply(lab.paper_example_ebsc(), C.depolarizing_channel(2))
    assert out.is_cptp()


def test_apply_with_trivial_side_matches_apply(gen):
    s = random_superchannel(gen)
    e = rand.random_channel(gen, [("A0", 2)], [("A1", 2)])
    assert np.allclose(S.apply_with_side(s, e).choi.data, S.apply(s, e).choi.data)


def test_identity_with_side_unchanged(gen):
    e = rand.random_channel(gen, [("R0", 2), ("A0", 2)], [("R1", 2), ("A1", 2)], 2)
    out = S.apply_with_side(S.identity_superchannel(2), e)
    expected = e.choi.relabel({"A0": "B0", "A1": "B1"})
    assert same(out.choi, expected)


def test_example_on_noiseless_leg_is_separable():
    # identity R0 -> A1, A0 discarded
    e = C.tensor(C.identity_channel(2, "R0", "A1"), C.Channel(("A0",), (), T.identity([("A0", 2)])))
    out = S.apply_with_side(lab.paper_example_ebsc(), e)
    assert out.is_cptp()
    v = SEP.decide(out.choi, (("R0",), ("B0", "B1")))
    assert v.outcome == SEP.SEPARABLE


def test_bipartite_view_round_trip():
    s = lab.paper_example_ebsc()
    ch = S.as_bipartite_channel(s)
    assert ch.in_labels == ("A1", "B0") and ch.out_labels == ("A0", "B1")
    back = S.from_bipartite_channel(ch, s.a0, s.a1, s.b0, s.b1)
    assert np.array_equal(back.choi.data, s.choi.data)


def test_tensor_identities():
    s = S.tensor(S.identity_superchannel(2), S.primed(S.identity_superchannel(2)))
    e = C.tensor(C.identity_channel(2, "A0", "A1"), C.identity_channel(2, "A0'", "A1'"))
    out = S.apply(s, e)
    assert S.is_superchannel(s)
    assert np.allclose(out.choi.data, T.permute_systems(
        C.tensor(C.identity_channel(2, "B0", "B1"), C.identity_channel(2, "B0'", "B1'")).choi, out.choi.names).data)


def test_tensor_of_ebscs_separable():
    s = S.tensor(lab.paper_example_ebsc(), S.primed(lab.replacer_superchannel(2)))
    assert S.is_superchannel(s)
    v = lab.is_eb_supermap(s)
    assert v.outcome == SEP.SEPARABLE and v.criterion == "decomposition"


def test_tensor_collision():
    with pytest.raises(LabelCollision):
        S.tensor(S.identity_superchannel(2), S.identity_superchannel(2))


@pytest.mark.parametrize("name", ["identity", "example", "replacer"])
def test_realization_round_trip(name):
    s = {"identity": S.identity_superchannel(2), "example": lab.paper_example_ebsc(),
         "replacer": lab.replacer_superchannel(2)}[name]
    pre, post = S.realize_pre_post(s)
    assert pre.is_cptp() and post.is_cptp()
    d_e = pre.choi.dim_of("E")
    assert d_e <= s.group_dim("A0") * s.group_dim("B0")
    back = S.from_pre_post(pre, post)
    assert same(back.choi, s.choi)


def test_realization_rejects_non_superchannel():
    bad = Supermap(("A0",), ("A1",), ("B0",), ("B1",),
                   T.kron(T.phi_plus("A0", "A1", 2), T.phi_plus("B0", "B1", 2)))
    with pytest.raises(NotSuperchannel):
        S.realize_pre_post(bad)


def test_supermap_json(gen):
    s = random_superchannel(gen)
    back = Supermap.from_dict(json.loads(json.dumps(s.to_dict())))
    assert np.array_equal(back.choi.data, s.choi.data)
    obj = s.to_dict()
    obj["dims"]["B1"] = 5
    with pytest.raises(SchemaError, match="dims.B1"):
        Supermap.from_dict(obj)


# -- properties -----------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d_a0=st.integers(1, 3), d_a1=st.integers(1, 3), d_e=st.integers(1, 3))
def test_random_pairs_are_superchannels(seed, d_a0, d_a1, d_e):
    s = random_superchannel(rand.rng(seed), d_a0=d_a0, d_a1=d_a1, d_e=d_e)
    assert S.is_superchannel(s)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_apply_preserves_tp(seed):
    gen = rand.rng(seed)
    s = random_superchannel(gen)
    e = rand.random_channel(gen, [("A0", 2)], [("A1", 2)], 2)
    assert S.apply(s, e).tp_residual() < 1e-9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_apply_linear(seed):
    gen = rand.rng(seed)
    s = random_superchannel(gen)
    e1 = rand.random_channel(gen, [("A0", 2)], [("A1", 2)])
    e2 = rand.random_channel(gen, [("A0", 2)], [("A1", 2)])
    a, b = gen.standard_normal(2)
    mix = C.Channel(("A0",), ("A1",), e1.choi * a + e2.choi * b)
    lhs = S.apply(s, mix).choi
    rhs = S.apply(s, e1).choi * a + S.apply(s, e2).choi * b
    assert lhs.close_to(rhs)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_definitional_route_agrees(seed):
    gen = rand.rng(seed)
    pre = rand.random_channel(gen, [("B0", 2)], [("A0", 2), ("E", 2)], 2)
    post = rand.random_channel(gen, [("A1", 2), ("E", 2)], [("B1", 2)], 2)
    s = S.from_pre_post(pre, post, check=False)
    oracle = S.definitional_choi(pre, post)
    assert np.max(np.abs(oracle.data - s.choi.data)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_tensor_keeps_marginals(seed):
    gen = rand.rng(seed)
    s = S.tensor(random_superchannel(gen), S.primed(random_superchannel(gen)))
    assert S.is_superchannel(s)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_realization_of_random_superchannels(seed):
    s = random_superchannel(rand.rng(seed))
    pre, post = S.realize_pre_post(s)
    assert same(S.from_pre_post(pre, post).choi, s.choi)
