import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebsc import channels as C
from ebsc import keb as K
from ebsc import lab
from ebsc import separability as SEP
from ebsc import superchannels as S
from ebsc import tensor as T
from ebsc.errors import BadParam, NotProjector, NotTP


def werner(d, beta):
    return K.werner_channel(K.WernerParams(d, beta))


@pytest.mark.parametrize("d,beta", [(1, 0.0), (3, -4.5), (3, 2.5), (2.5, 0.0)])
def test_params_validated(d, beta):
    with pytest.raises(BadParam):
        K.WernerParams(d, beta)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_werner_state_beta_minus_one(d):
    rho = K.werner_state(K.WernerParams(d, -1.0))
    assert np.allclose(rho.data, np.eye(d * d) / d**2)


@pytest.mark.parametrize("d,beta", [(2, -3.0), (2, 0.4), (3, 0.5), (3, 2.0), (4, -5.0)])
def test_werner_state_valid(d, beta):
    rho = K.werner_state(K.WernerParams(d, beta))
    assert rho.trace().real == pytest.approx(1)
    assert rho.is_hermitian() and rho.is_psd()
    for side in ("B0", "B1"):
        assert np.allclose(T.partial_trace(rho, [side]).data, np.eye(d) / d)


def test_werner_d2_beta1_antisymmetric():
    rho = K.werner_state(K.WernerParams(2, 1.0))
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert np.allclose(rho.data, np.outer(singlet, singlet))
    assert np.linalg.eigvalsh(T.partial_transpose(rho, ["B1"]).data)[0] < -0.1


@pytest.mark.parametrize("d,beta", [(2, 0.3), (3, 0.5), (3, -3.0), (4, 1.5)])
def test_werner_channel_choi(d, beta):
    p = K.WernerParams(d, beta)
    ch = K.werner_channel(p)
    assert np.array_equal(ch.choi.data, (K.werner_state(p) * d).data)
    assert ch.is_cptp()


@pytest.mark.parametrize("d,beta", [(2, 0.3), (3, 0.5), (4, -2.0)])
def test_werner_coefficients_fit(d, beta):
    ch = werner(d, beta)
    basis = np.stack([np.eye(d * d).reshape(-1), T.swap_operator("B0", "B1", d).data.reshape(-1)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, ch.choi.data.reshape(-1), rcond=None)
    assert np.linalg.norm(basis @ coef - ch.choi.data.reshape(-1)) < 1e-10
    a, b = K.werner_coefficients(K.WernerParams(d, beta))
    assert coef.real == pytest.approx([a, b], abs=1e-12)


def test_werner_tp_over_full_range():
    for d in (2, 3):
        for beta in np.linspace(-(d + 1), d - 1, 21):
            assert werner(d, float(beta)).tp_residual() < 1e-12


@pytest.mark.parametrize("d,k,expected", [(3, 2, 0.5), (2, 1, 1.0), (4, 2, 1.0), (5, 4, 0.25)])
def test_threshold(d, k, expected):
    assert K.k_ebc_threshold(d, k) == expected


@pytest.mark.parametrize("d,k", [(3, 3), (3, 0), (2, 4)])
def test_threshold_range(d, k):
    with pytest.raises(BadParam):
        K.k_ebc_threshold(d, k)


def test_projected_identity_bit_exact():
    ch = werner(3, 0.5)
    assert K.projected_choi(ch, np.eye(3)) is ch.choi


def test_projected_rank_one_is_product():
    ch = werner(3, 0.9)
    v = np.array([1, 1j, 0]) / np.sqrt(2)
    rho = K.projected_choi(ch, np.outer(v, v.conj()))
    assert rho.dims == (1, 3)
    assert SEP.decide(rho, (("B0",), ("B1",))).outcome == SEP.SEPARABLE
    full = K.projected_choi(ch, np.outer(v, v.conj()), compress=False)
    assert np.linalg.matrix_rank(T.partial_trace(full, ["B1"]).data) == 1


def test_projected_witness_value():
    rho = K.projected_choi(werner(3, 0.6), np.diag([1.0, 1.0, 0.0])) / 3
    lam = np.linalg.eigvalsh(T.partial_transpose(rho, ["B1"]).data)[0]
    assert lam == pytest.approx(-1 / 111, abs=1e-12)


def test_projected_rejects_non_projector():
    with pytest.raises(NotProjector):
        K.projected_choi(werner(3, 0.5), np.diag([1.0, 0.5, 0.0]))
    with pytest.raises(NotProjector):
        K.projected_choi(werner(3, 0.5), np.eye(2))


@pytest.mark.parametrize("d,beta", [(2, 1.0), (3, 2.0), (4, 3.0)])
def test_k1_always_separable(d, beta):
    assert K.is_k_ebc(werner(d, beta), 1, samples=20).outcome == SEP.SEPARABLE


def test_beta_06_not_2eb():
    v = K.is_k_ebc(werner(3, 0.6), 2)
    assert v.outcome == SEP.ENTANGLED
    assert v.notes["witness_projector_id"] == "coord:0,1"
    assert v.min_pt_eig == pytest.approx(-1 / 111, abs=1e-12)


def test_beta_05_is_2eb_and_in_gurvits_ball():
    ch = werner(3, 0.5)
    assert K.is_k_ebc(ch, 2).outcome == SEP.SEPARABLE
    for _, p in list(K.coordinate_projectors(3, 2)) + list(K.haar_projectors(3, 2, 20, 0)):
        assert SEP.gurvits_ball(K.projected_choi(ch, p) / 3)


@pytest.mark.parametrize("beta,outcome", [(0.5 - 1e-6, SEP.SEPARABLE), (0.5 + 1e-3, SEP.ENTANGLED)])
def test_threshold_sharpness(beta, outcome):
    assert K.is_k_ebc(werner(3, beta), 2).outcome == outcome


def test_is_k_ebc_deterministic():
    a = K.is_k_ebc(werner(4, 0.9), 2, samples=30, seed=5)
    b = K.is_k_ebc(werner(4, 0.9), 2, samples=30, seed=5)
    assert a.outcome == b.outcome and a.min_pt_eig == b.min_pt_eig


def test_is_k_ebc_rejects_rectangular():
    ch = C.Channel(("A",), ("B",), T.identity([("A", 2), ("B", 3)]) / 3)
    with pytest.raises(BadParam):
        K.is_k_ebc(ch, 1)


@settings(max_examples=25, deadline=None)
@given(beta=st.floats(-5.0, 3.0), k=st.integers(1, 3))
def test_monotone_hierarchy(beta, k):
    ch = werner(4, beta)
    low = K.is_k_ebc(ch, k, samples=10, seed=0)
    high = K.is_k_ebc(ch, k + 1, samples=10, seed=0)
    if low.outcome == SEP.ENTANGLED:
        assert high.outcome == SEP.ENTANGLED


def test_isotropic_fit_and_verdict():
    lam = werner(3, 0.5)
    twice = K.iterate_concatenation(lam, 2)
    x, y, res = K.isotropic_fit(twice.choi)
    assert res < 1e-9
    v = K.isotropic_eb_verdict(twice)
    assert v.outcome == SEP.SEPARABLE and v.criterion == "isotropic-ppt"
    assert K.isotropic_eb_verdict(C.identity_channel(3)).outcome == SEP.ENTANGLED


@pytest.mark.parametrize("d,k", [(2, 1), (3, 1), (3, 2)])
def test_k_nonentangling_example(d, k):
    ex = K.k_nonentangling_example(d, k)
    assert ex.channel.d_in == d * d
    assert ex.channel.is_cptp()
    assert ex.beta == K.k_ebc_threshold(d, k)
    assert ex.level_k.outcome == SEP.SEPARABLE
    assert ex.level_k_plus_1.outcome == SEP.ENTANGLED
    assert ex.level_k_plus_1.notes["witness_projector_id"].startswith("coord:")


def test_swapped_identities_keep_products(gen):
    from ebsc import rand

    ch = C.tensor(C.identity_channel(2, "X0", "Y1"), C.identity_channel(2, "Y0", "X1"))
    a = rand.random_density(gen, [("X0", 2)])
    b = rand.random_density(gen, [("Y0", 2)])
    out = C.apply(ch, T.kron(a, b))
    assert np.allclose(out.data, T.permute_systems(T.kron(a.relabel({"X0": "Y1"}), b.relabel({"Y0": "X1"})),
                                                    out.names).data)


def test_sidefree_identities():
    s = K.sidefree_superchannel(C.identity_channel(2, "B0", "A0"), C.identity_channel(2, "A1", "B1"))
    assert np.allclose(s.choi.data, T.permute_systems(S.identity_superchannel(2).choi, s.choi.names).data)


def test_sidefree_factorizes():
    pre = werner(3, 0.5).relabel({"B1": "A0"})
    post = C.depolarizing_channel(3, "A1", "B1")
    s = K.sidefree_superchannel(pre, post)
    assert S.is_superchannel(s)
    assert np.allclose(s.choi.data, T.permute_systems(T.kron(pre.choi, post.choi), s.choi.names).data)


def test_sidefree_rejects_non_tp():
    with pytest.raises(NotTP):
        K.sidefree_superchannel(C.Channel(("B0",), ("A0",), T.identity([("B0", 2), ("A0", 2)])),
                                C.identity_channel(2, "A1", "B1"))


@pytest.mark.parametrize("beta,post,outcome", [
    (0.5, "depolarizing", SEP.SEPARABLE),
    (0.5, "dephasing", SEP.SEPARABLE),
    (0.5, "identity", SEP.ENTANGLED),
    (0.6, "depolarizing", SEP.ENTANGLED),
])
def test_k_complete_sidefree(beta, post, outcome):
    pre = werner(3, beta).relabel({"B1": "A0"})
    post_ch = {"depolarizing": C.depolarizing_channel, "dephasing": C.dephasing_channel,
               "identity": C.identity_channel}[post](3, "A1", "B1")
    v = K.is_k_complete_ebsc_sidefree(pre, post_ch, 2, samples=30)
    assert v.outcome == outcome
    if beta == 0.6:
        assert v.notes["witness_projector_id"] == "coord:0,1"


@pytest.mark.parametrize("pre,post", [
    ("dephasing", "dephasing"),
    ("depolarizing", "depolarizing"),
    ("dephasing", "identity"),
    ("identity", "depolarizing"),
    ("identity", "identity"),
])
def test_sidefree_eb_iff_factors_eb(pre, post):
    make = {"dephasing": C.dephasing_channel, "depolarizing": C.depolarizing_channel,
            "identity": C.identity_channel}
    a = make[pre](2, "B0", "A0")
    b = make[post](2, "A1", "B1")
    whole = lab.is_eb_supermap(K.sidefree_superchannel(a, b))
    both = C.is_eb(a).outcome == SEP.SEPARABLE and C.is_eb(b).outcome == SEP.SEPARABLE
    assert whole.outcome != SEP.INCONCLUSIVE
    assert (whole.outcome == SEP.SEPARABLE) == both


def test_sidefree_product_certificate(gen):
    from ebsc import rand

    pa = rand.random_povm(gen, [("B0", 2)])
    sa = [rand.random_density(gen, [("A0", 2)]) for _ in range(2)]
    pb = rand.random_povm(gen, [("A1", 2)])
    sb = [rand.random_density(gen, [("B1", 2)]) for _ in range(2)]
    a, b = C.mp_channel(pa, sa), C.mp_channel(pb, sb)
    s = K.sidefree_superchannel(a, b, pre_terms=C.mp_terms(pa, sa), post_terms=C.mp_terms(pb, sb))
    v = lab.is_eb_supermap(s)
    assert v.outcome == SEP.SEPARABLE and v.criterion == "decomposition"


def test_iteration_count():
    assert K.iteration_count(3, 2) == 2
    assert K.iteration_count(5, 2) == 4
    assert K.iteration_count(5, 3) == 2
    with pytest.raises(BadParam):
        K.iteration_count(3, 1)


def test_iterate_once_unchanged():
    lam = werner(3, 0.5)
    assert K.iterate_concatenation(lam, 1) is lam
    with pytest.raises(BadParam):
        K.iterate_concatenation(lam, 0)


def test_parse_range():
    grid = K.parse_range("0.0:1.0:0.05")
    assert len(grid) == 21 and grid[10] == 0.5 and grid[-1] == 1.0
    with pytest.raises(BadParam):
        K.parse_range("1:0:0.1")


def test_sweep_flips_at_threshold():
    rows = K.threshold_sweep(3, 2, K.parse_range("0.0:1.0:0.05"), samples=20)
    verdicts = [(r["beta"], r["verdict"]) for r in rows]
    assert all(v == SEP.SEPARABLE for b, v in verdicts if b <= 0.5)
    assert all(v == SEP.ENTANGLED for b, v in verdicts if b > 0.5)
    text = K.sweep_csv(rows)
    assert text.splitlines()[0] == "d,k,beta,verdict,min_pt_eig,witness_projector_id"
