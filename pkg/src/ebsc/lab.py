"""Entanglement-breaking supermaps: verdicts, explicit constructions and builders.

A supermap is entanglement breaking when its Choi matrix is separable across
the A:B cut. Every builder here attaches the product terms it knows about so
that verdicts are certificate-backed rather than heuristic.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from . import channels as C
from . import separability as SEP
from . import superchannels as S
from . import tensor as T
from .channels import Channel, Instrument
from .errors import NotCPTNI, NotPOVM, NotPSD, NotTP, ShapeError
from .separability import Verdict
from .superchannels import Supermap
from .tensor import DEFAULT_TOL, LabeledMatrix, Tolerance


# -- verdicts ----------------------------------------------------------------


def is_eb_supermap(s: Supermap, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """Separability of the Choi matrix across ``A0 A1 : B0 B1``."""
    return SEP.decide(s.choi, (s.a_labels, s.b_labels), tol, decomposition=s.terms)


def is_partly_eb_output(ch: Channel, out_part: Sequence[str], tol: Tolerance = DEFAULT_TOL,
                        decomposition=None) -> Verdict:
    """Verdict across ``out_part : (inputs + remaining outputs)``."""
    out_part = tuple(out_part)
    for n in out_part:
        if n not in ch.out_labels:
            raise SEP.BadCut(f"{n!r} is not an output of the channel")
    rest = tuple(n for n in ch.choi.names if n not in out_part)
    return SEP.decide(ch.choi, (out_part, rest), tol, decomposition=decomposition)


def is_partly_eb_input(ch: Channel, in_part: Sequence[str], tol: Tolerance = DEFAULT_TOL,
                       decomposition=None) -> Verdict:
    """Verdict across ``in_part : (remaining inputs + outputs)``."""
    in_part = tuple(in_part)
    for n in in_part:
        if n not in ch.in_labels:
            raise SEP.BadCut(f"{n!r} is not an input of the channel")
    rest = tuple(n for n in ch.choi.names if n not in in_part)
    return SEP.decide(ch.choi, (in_part, rest), tol, decomposition=decomposition)


# -- realization from a separable decomposition -------------------------------


def build_partly_eb_realization(terms, a0: str = "A0", a1: str = "A1", b0: str = "B0", b1: str = "B1",
                                env_a: str = "EA", env_b: str = "EB",
                                tol: Tolerance = DEFAULT_TOL) -> tuple[Channel, Channel]:
    """Pre/post pair realizing ``sum_j M_j (x) N_j`` through a split memory.

    ``pre`` copies ``B0`` into ``EB`` and prepares ``phi+^{A0 EA} / d_A0``;
    it is CPTP and product across ``A0 EA : B0 EB``. ``post`` has Choi
    ``d_A0 sum_j M_j^{EA A1} (x) N_j^{EB B1}``; it is CP but in general not
    trace preserving, and it is returned as is.
    """
    terms = list(terms)
    if not terms:
        raise ShapeError("at least one term is required")
    m0, n0 = terms[0]
    d_a0 = m0.dim_of(a0)
    d_b0 = n0.dim_of(b0)
    for k, (m, n) in enumerate(terms):
        for part in (m, n):
            if not part.is_psd(tol):
                raise NotPSD(f"term {k} is not positive semidefinite")
    pre_choi = T.kron(T.phi_plus(b0, env_b, d_b0), T.phi_plus(a0, env_a, d_a0) / d_a0)
    pre = Channel((b0,), (a0, env_a, env_b), pre_choi)
    acc = None
    for m, n in terms:
        term = T.kron(m.relabel({a0: env_a}), n.relabel({b0: env_b})) * d_a0
        acc = term if acc is None else acc + term
    post = Channel((a1, env_a, env_b), (b1,), acc)
    return pre, post


# -- measure-and-prepare builders --------------------------------------------


def _validate_povm(povm: Instrument, tol: Tolerance):
    for k, b in enumerate(povm):
        if b.out_labels:
            raise NotPOVM(f"POVM branch {k} has outputs {b.out_labels}")
        if not b.is_cp(tol):
            raise NotPOVM(f"POVM element {k} is not positive semidefinite")
    if not povm.total.is_tp(tol):
        raise NotPOVM(f"POVM elements do not resolve the identity (residual {povm.total.tp_residual():.3e})")


def _validate_state(rho: LabeledMatrix, tol: Tolerance, what: str):
    if abs(rho.trace() - 1) > tol.eps_tp or not rho.is_psd(tol):
        raise ShapeError(f"{what} is not a density matrix")


def cmpsc(instrument: Instrument, states: Sequence[LabeledMatrix], povm: Instrument,
          prepared: Sequence[Channel], tol: Tolerance = DEFAULT_TOL, check: bool = True) -> Supermap:
    """Controlled measure-and-prepare superchannel.

    ``Theta[E] = sum_xy Tr[(id (x) E)(rho_y) P_x] F_x o Lambda_y`` where the
    instrument ``Lambda_y: B0 -> E2`` selects the probe state ``rho_y`` on
    ``A0 E1``, the POVM ``P_x`` acts on ``A1 E1`` and ``F_x: E2 -> B1``.
    ``E1`` is whatever the states and POVM share (possibly nothing).
    """
    if len(states) != len(instrument):
        raise ShapeError(f"{len(instrument)} instrument branches but {len(states)} states")
    if len(prepared) != len(povm):
        raise ShapeError(f"{len(povm)} POVM elements but {len(prepared)} prepared channels")
    instrument.validate(tol)
    _validate_povm(povm, tol)
    for y, rho in enumerate(states):
        _validate_state(rho, tol, f"state {y}")
    for x, f in enumerate(prepared):
        if not f.is_cptp(tol):
            raise NotTP(f"prepared map {x} is not a channel")

    pre_terms = [T.kron(lam.choi, rho) for lam, rho in zip(instrument, states)]
    pre_choi = pre_terms[0]
    for t in pre_terms[1:]:
        pre_choi = pre_choi + t
    env2 = instrument[0].out_labels
    env1 = tuple(n for n in states[0].names if n in povm[0].in_labels)
    a0 = tuple(n for n in states[0].names if n not in env1)
    pre = Channel(instrument[0].in_labels, a0 + env1 + env2, pre_choi)

    post_terms = []
    for p, f in zip(povm, prepared):
        f = f.relabel(dict(zip(f.in_labels, env2)))
        post_terms.append(T.kron(p.choi, f.choi))
    post_choi = post_terms[0]
    for t in post_terms[1:]:
        post_choi = post_choi + t
    a1 = tuple(n for n in povm[0].in_labels if n not in env1)
    post = Channel(a1 + env1 + env2, prepared[0].out_labels, post_choi)

    s = S.from_pre_post(pre, post, tol, check=check)
    cert = []
    for lam, rho in zip(instrument, states):
        for p, f in zip(povm, prepared):
            f = f.relabel(dict(zip(f.in_labels, env2)))
            m = T.link(rho, p.choi)
            n = T.link(lam.choi, f.choi)
            if T.inf_norm(m.data) > 0 and T.inf_norm(n.data) > 0:
                cert.append((m, n))
    return s.with_terms(cert)


def mpsc(rho: LabeledMatrix, povm: Instrument, prepared: Sequence[Channel],
         tol: Tolerance = DEFAULT_TOL, env2: str = "E2", check: bool = True) -> Supermap:
    """Measure-and-prepare superchannel ``Theta[E] = sum_x Tr[(id (x) E)(rho) P_x] F_x``."""
    if not prepared:
        raise ShapeError("no prepared channels")
    b0 = prepared[0].in_labels
    if len(b0) != 1:
        raise ShapeError("prepared channels must have a single input label")
    d_b0 = prepared[0].d_in
    ident = C.identity_channel(d_b0, b0[0], env2)
    moved = [f.relabel({b0[0]: env2}) for f in prepared]
    s = cmpsc(Instrument((ident,)), [rho], povm, moved, tol, check=check)
    return s


# -- the non-decomposable example ---------------------------------------------


def paper_example_pre_post() -> tuple[Channel, Channel]:
    """Isometry ``B0 -> A0 E`` and POVM post-processing ``A1 E -> B1``.

    ``|0> -> (|00> + |11>)/sqrt 2`` and ``|1> -> |02>`` on ``A0 E``; the POVM
    on ``E A1`` is ``{phi+/2, (I - |2><2|) (x) I - phi+/2, |2><2| (x) I}`` with
    ``phi+`` embedded in the first two levels of ``E``; outcome ``x`` is
    written to ``B1`` as ``|x><x|``.
    """
    v = np.zeros((6, 2))
    v[0 * 3 + 0, 0] = v[1 * 3 + 1, 0] = 1 / np.sqrt(2)
    v[0 * 3 + 2, 1] = 1.0
    pre = C.choi_from_kraus([v], "B0", ("A0", "E"), out_dims=(2, 3))

    phi = T.permute_systems(T.phi_plus("A1", "E", 2, d_b=3), ["E", "A1"])
    p2 = T.kron(T.basis_projector([("E", 3)], [2]), T.identity([("A1", 2)]))
    ident = T.identity([("E", 3), ("A1", 2)])
    elems = [phi / 2, ident - p2 - phi / 2, p2]
    povm = C.povm(elems)
    outs = [T.basis_projector([("B1", 3)], [x]) for x in range(3)]
    post = C.mp_channel(povm, outs)
    return pre, post


def paper_example_terms() -> list[tuple[LabeledMatrix, LabeledMatrix]]:
    """The three product terms of the closed-form Choi matrix (A0 A1 : B0 B1)."""
    a = [("A0", 2), ("A1", 2)]
    b = [("B0", 2), ("B1", 3)]
    phi = T.phi_plus("A0", "A1", 2)
    return [
        (phi / 4, T.basis_projector(b, [0, 0])),
        ((T.identity(a) - phi / 2) / 2, T.basis_projector(b, [0, 1])),
        (T.kron(T.basis_projector([("A0", 2)], [0]), T.identity([("A1", 2)])), T.basis_projector(b, [1, 2])),
    ]


def paper_example_closed_form() -> LabeledMatrix:
    acc = None
    for m, n in paper_example_terms():
        t = T.kron(m, n)
        acc = t if acc is None else acc + t
    return acc


def paper_example_ebsc(check: bool = True) -> Supermap:
    pre, post = paper_example_pre_post()
    return S.from_pre_post(pre, post, check=check).with_terms(paper_example_terms())


def replacer_superchannel(d: int = 2, sigma: np.ndarray | None = None) -> Supermap:
    """Pre passes ``B0`` into memory and feeds ``sigma`` to ``A0``; post discards ``A1``.

    The output is always the identity channel, and the Choi matrix is
    ``sigma^{A0} (x) I^{A1} (x) phi+^{B0 B1}``.
    """
    if sigma is None:
        sigma = np.zeros((d, d))
        sigma[0, 0] = 1.0
    sig = LabeledMatrix([("A0", d)], sigma)
    if abs(sig.trace() - 1) > 1e-12 or not sig.is_psd():
        raise ShapeError("sigma must be a density matrix")
    pre = Channel(("B0",), ("A0", "E"), T.kron(T.phi_plus("B0", "E", d), sig))
    post = Channel(("A1", "E"), ("B1",), T.kron(T.identity([("A1", d)]), T.phi_plus("E", "B1", d)))
    s = S.from_pre_post(pre, post)
    return s.with_terms([(T.kron(sig, T.identity([("A1", d)])), T.phi_plus("B0", "B1", d))])


# -- superactivation ----------------------------------------------------------


def _single_labels(s: Supermap):
    for g in ("a0", "a1", "b0", "b1"):
        if len(getattr(s, g)) != 1:
            raise ShapeError("series wiring needs one label per system group")
    return s.a0[0], s.a1[0], s.b0[0], s.b1[0]


def superactivation_series(s: Supermap, tol: Tolerance = DEFAULT_TOL) -> LabeledMatrix:
    """State ``Omega`` on ``R1 R1' B1'`` produced by two copies wired in series.

    The realization of ``s`` acts on ``phi+^{R1 B0'} (x) phi+^{R1' A1'}`` (the
    first factor embedded when ``d_A1 > d_B0``), ``A0'`` is discarded and the
    result is normalized by ``1 / (d_B0 d_A1)``.
    """
    a0, a1, b0, b1 = _single_labels(s)
    d_a1, d_b0 = s.group_dim("A1"), s.group_dim("B0")
    if d_a1 < d_b0:
        raise ShapeError(f"series wiring needs d_A1 >= d_B0, got {d_a1} < {d_b0}")
    pre, post = S.realize_pre_post(s, tol, env_label="_mem")
    x = T.kron(T.phi_plus(b0, "R1", d_b0, d_b=d_a1), T.phi_plus("R1'", a1, d_a1))
    x = C.apply(pre, x)
    x = C.apply(post, x)
    x = T.partial_trace(x, [a0]).relabel({b1: "B1'"})
    return T.permute_systems(x, ["R1", "R1'", "B1'"]) / (d_b0 * d_a1)


def superactivation_marginal(s: Supermap) -> LabeledMatrix:
    """``Tr_{A0} J`` relabeled ``A1 -> R1'``, ``B0 -> R1`` (embedded), ``B1 -> B1'``."""
    a0, a1, b0, b1 = _single_labels(s)
    d_a1, d_b0 = s.group_dim("A1"), s.group_dim("B0")
    if d_a1 < d_b0:
        raise ShapeError(f"series wiring needs d_A1 >= d_B0, got {d_a1} < {d_b0}")
    m = T.partial_trace(s.choi, [a0])
    m = T.apply_local(m, b0, np.eye(d_a1, d_b0), new_name="R1")
    m = m.relabel({a1: "R1'", b1: "B1'"})
    return T.permute_systems(m, ["R1", "R1'", "B1'"])


def proportionality_residual(a: LabeledMatrix, b: LabeledMatrix) -> tuple[float, float]:
    """Best scalar ``c`` with ``a ~ c b`` and the Frobenius residual ``|a - c b|``."""
    b = T.permute_systems(b, a.names)
    denom = np.vdot(b.data, b.data).real
    c = float(np.vdot(b.data, a.data).real / denom) if denom else 0.0
    return c, float(np.linalg.norm(a.data - c * b.data))


# -- image constructions ------------------------------------------------------


def locc1_to_mpsc(branches: Sequence[tuple[Channel, Channel]], tol: Tolerance = DEFAULT_TOL) -> tuple[Supermap, Channel]:
    """One-way LOCC ``sum_i Gamma_i (x) F_i`` as ``(id (x) Theta)[E]``.

    ``Theta`` has a trivial ``A0`` and reads ``i`` off ``A1`` before preparing
    ``F_i``; ``E = sum_i Gamma_i (x) |i><i|^{A1}``.
    """
    gammas = Instrument(tuple(g for g, _ in branches)).validate(tol)
    fs = [f for _, f in branches]
    n = len(fs)
    rho = LabeledMatrix([("A0", 1)], [[1.0]])
    povm = C.povm([T.basis_projector([("A1", n)], [i]) for i in range(n)])
    theta = mpsc(rho, povm, fs, tol)
    choi = None
    for i, g in enumerate(gammas):
        t = T.kron_all(g.choi, T.identity([("A0", 1)]), T.basis_projector([("A1", n)], [i]))
        choi = t if choi is None else choi + t
    e = Channel(gammas[0].in_labels + ("A0",), gammas[0].out_labels + ("A1",), choi)
    return theta, e


def locc1_target(branches: Sequence[tuple[Channel, Channel]]) -> Channel:
    out = None
    for g, f in branches:
        t = C.tensor(g, f)
        out = t if out is None else Channel(t.in_labels, t.out_labels, out.choi + t.choi)
    return out


def locc2_to_cmpsc(lambdas: Instrument, gammas: Sequence[Instrument], fs: Sequence[Sequence[Channel]],
                   tol: Tolerance = DEFAULT_TOL, env2: str = "E2", reg: str = "E2c") -> tuple[Supermap, Channel]:
    """Two-round LOCC ``sum_ij Gamma_{j|i} (x) (F_ij o Lambda_i)`` as ``(id (x) Theta)[E]``.

    Bob's instrument outcome ``i`` goes to ``A0`` and to a classical memory
    register; Rachel's outcome ``j`` comes back through ``A1``; ``F_ij`` is
    chosen from both. ``E = sum_ij Gamma_{j|i} (x) <i|.|i>^{A0} (x) |j><j|^{A1}``.
    """
    lambdas = Instrument(tuple(lambdas)).validate(tol)
    gammas = [Instrument(tuple(g)).validate(tol) for g in gammas]
    if len(gammas) != len(lambdas) or len(fs) != len(lambdas):
        raise ShapeError("need one Rachel instrument and one channel list per outcome of Bob's instrument")
    n_i = len(lambdas)
    n_j = max(len(g) for g in gammas)
    for i in range(n_i):
        if len(fs[i]) != len(gammas[i]):
            raise ShapeError(f"outcome {i}: {len(gammas[i])} branches but {len(fs[i])} channels")
    b0 = lambdas[0].in_labels
    lam_out = lambdas[0].out_labels
    if len(lam_out) != 1:
        raise ShapeError("Bob's instrument must have a single output label")
    moved = {lam_out[0]: env2}
    reg_sp = [(reg, n_i)]
    inst = Instrument(tuple(
        Channel(b0, (env2, reg), T.kron(lam.relabel(moved).choi, T.basis_projector(reg_sp, [i])))
        for i, lam in enumerate(lambdas)
    ))
    states = [T.basis_projector([("A0", n_i)], [i]) for i in range(n_i)]
    povm = C.povm([T.basis_projector([("A1", n_j)], [j]) for j in range(n_j)])
    prepared = []
    for j in range(n_j):
        acc = None
        for i in range(n_i):
            f = fs[i][min(j, len(fs[i]) - 1)]
            f = f.relabel({f.in_labels[0]: env2})
            t = T.kron(f.choi, T.basis_projector(reg_sp, [i]))
            acc = t if acc is None else acc + t
        prepared.append(Channel((env2, reg), fs[0][0].out_labels, acc))
    theta = cmpsc(inst, states, povm, prepared, tol)

    choi = None
    r_in, r_out = gammas[0][0].in_labels, gammas[0][0].out_labels
    for i, g in enumerate(gammas):
        for j, br in enumerate(g):
            t = T.kron_all(br.choi, T.basis_projector([("A0", n_i)], [i]), T.basis_projector([("A1", n_j)], [j]))
            choi = t if choi is None else choi + t
    e = Channel(r_in + ("A0",), r_out + ("A1",), choi)
    return theta, e


def locc2_target(lambdas: Instrument, gammas: Sequence[Instrument], fs: Sequence[Sequence[Channel]]) -> Channel:
    out = None
    for i, lam in enumerate(lambdas):
        for j, g in enumerate(gammas[i]):
            bob = C.compose(fs[i][j], lam)
            t = C.tensor(g, bob)
            out = t if out is None else Channel(t.in_labels, t.out_labels, out.choi + t.choi)
    return out


def _normalize_cptni_terms(terms, r0, b0, tol):
    """Rescale to ``Tr P_k = 1`` and, if needed, so that ``sum_k Q_k^{B0} <= I``."""
    pk, qk = [], []
    for k, (p, q) in enumerate(terms):
        if not p.is_psd(tol) or not q.is_psd(tol):
            raise NotPSD(f"term {k} is not positive semidefinite")
        tr = p.trace().real
        if tr <= 0:
            continue
        pk.append(p / tr)
        qk.append(q * tr)
    if not pk:
        raise ShapeError("all terms vanish")
    q_in = T.partial_trace(qk[0], [n for n in qk[0].names if n not in b0])
    for q in qk[1:]:
        q_in = q_in + T.partial_trace(q, [n for n in q.names if n not in b0])
    top = float(np.linalg.eigvalsh(q_in.data)[-1])
    if top > 1:
        pk = [p * top for p in pk]
        qk = [q / top for q in qk]
    return pk, qk


def sep_cptni_target(terms) -> LabeledMatrix:
    acc = None
    for p, q in terms:
        t = T.kron(p, q)
        acc = t if acc is None else acc + t
    return acc


def sep_cptni_to_ebsc(terms, r0: Sequence[str] = ("R0",), r1: Sequence[str] = ("R1",),
                      b0: Sequence[str] = ("B0",), b1: Sequence[str] = ("B1",),
                      tol: Tolerance = DEFAULT_TOL) -> tuple[Supermap, Channel]:
    """Separable CP trace-non-increasing map ``sum_k P_k (x) Q_k`` as ``(id (x) Theta)[E]``.

    ``Theta`` has a classical ``A0`` of dimension ``r + 1`` and a trivial
    ``A1``; its Choi matrix is ``sum_k |k><k| (x) Q_k + |r><r| (x) F`` with the
    filler ``F = (I - sum_k Q_k^{B0}) (x) I^{B1} / d_B1``. ``E`` has Choi
    ``sum_k P_k (x) |k><k|^{A0}`` and need not be trace preserving.
    """
    r0, r1, b0, b1 = tuple(r0), tuple(r1), tuple(b0), tuple(b1)
    terms = list(terms)
    target = sep_cptni_target(terms)
    marg = T.partial_trace(target, r1 + b1)
    lam = float(np.linalg.eigvalsh((marg.data + marg.data.conj().T) / 2)[-1])
    if lam > 1 + tol.eps_tp:
        raise NotCPTNI(f"input marginal has eigenvalue {lam:.6g} > 1")
    pk, qk = _normalize_cptni_terms(terms, r0, b0, tol)
    r = len(pk)
    a0 = [("A0", r + 1)]
    a1 = [("A1", 1)]
    b0_sp = [(n, qk[0].dim_of(n)) for n in b0]
    b1_sp = [(n, qk[0].dim_of(n)) for n in b1]
    d_b1 = int(np.prod([d for _, d in b1_sp], dtype=np.int64))
    q_in = None
    for q in qk:
        t = T.partial_trace(q, b1)
        q_in = t if q_in is None else q_in + t
    filler = T.kron(T.identity(b0_sp) - q_in, T.identity(b1_sp) / d_b1)

    cert = []
    for k, q in enumerate(qk):
        cert.append((T.kron(T.basis_projector(a0, [k]), T.identity(a1)), q))
    cert.append((T.kron(T.basis_projector(a0, [r]), T.identity(a1)), filler))
    choi = None
    for m, n in cert:
        t = T.kron(m, n)
        choi = t if choi is None else choi + t
    theta = Supermap(("A0",), ("A1",), b0, b1, choi, tuple(cert))

    e_choi = None
    for k, p in enumerate(pk):
        t = T.kron_all(p, T.basis_projector(a0, [k]), T.identity(a1))
        e_choi = t if e_choi is None else e_choi + t
    e = Channel(r0 + ("A0",), r1 + ("A1",), e_choi)
    return theta, e


def sep_cptni_realization(theta: Supermap, env: str = "E") -> tuple[Channel, Channel]:
    """Controlled measure-and-prepare realization of a :func:`sep_cptni_to_ebsc` supermap.

    ``pre = sum_k Lambda_k (x) |k><k|^{A0}`` where ``Lambda_k`` has Choi
    ``Q_k`` (and the last branch the filler); ``post`` passes the memory to
    ``B1`` and discards the trivial ``A1``.
    """
    if len(theta.b1) != 1 or len(theta.a0) != 1 or theta.group_dim("A1") != 1:
        raise ShapeError("expected a supermap with trivial A1 and single A0/B1 labels")
    b1 = theta.b1[0]
    d_b1 = theta.group_dim("B1")
    pre_choi = T.permute_systems(theta.choi, theta.b0 + theta.a0 + theta.a1 + theta.b1)
    pre_choi = T.partial_trace(pre_choi, theta.a1).relabel({b1: env})
    pre = Channel(theta.b0, theta.a0 + (env,), pre_choi)
    post = Channel(theta.a1 + (env,), (b1,), T.kron(T.identity(theta.space("A1")), T.phi_plus(env, b1, d_b1)))
    return pre, post


# -- sandwich ------------------------------------------------------------------


def eb_sandwich(n: Channel, e: Channel, local_in: str | None = None, local_out: str | None = None) -> Channel:
    """``N o E o N`` where ``E`` maps ``R0 X -> R1 Y`` and ``N`` maps into ``X``'s space.

    ``N`` is applied before ``E`` on ``X`` and again after ``E`` on ``Y``; the
    result maps ``R0 + N.in -> R1 + N.out``. Whether ``N`` is entanglement
    breaking is not enforced, so non-EB counterexamples can be built too.
    """
    if len(n.in_labels) != 1 or len(n.out_labels) != 1:
        raise ShapeError("the sandwiching channel must have one input and one output label")
    local_in = e.in_labels[-1] if local_in is None else local_in
    local_out = e.out_labels[-1] if local_out is None else local_out
    t_in, t_out = C._fresh("_sw_in"), C._fresh("_sw_out")
    e2 = e.relabel({local_in: t_in, local_out: t_out})
    first = n.relabel({n.out_labels[0]: t_in})
    second = n.relabel({n.in_labels[0]: t_out})
    if e2.choi.dim_of(t_in) != n.d_out or e2.choi.dim_of(t_out) != n.d_in:
        raise ShapeError("channel dimensions do not fit the sandwich")
    choi = T.link(T.link(first.choi, e2.choi), second.choi)
    r0 = tuple(x for x in e2.in_labels if x != t_in)
    r1 = tuple(x for x in e2.out_labels if x != t_out)
    return Channel(r0 + n.in_labels, r1 + n.out_labels, choi)


# -- fixtures ------------------------------------------------------------------


def fixtures(seed: int = 7) -> dict[str, tuple[Supermap, str]]:
    """Named superchannels used by the CLI and the acceptance checks."""
    from . import rand

    gen = rand.rng(seed)
    out = {
        "identity": (S.identity_superchannel(2), "identity superchannel on qubit channels"),
        "non-decomposable": (paper_example_ebsc(), "separable A:B yet entangled across A0 and across A1"),
        "replacer": (replacer_superchannel(2), "outputs the identity channel regardless of input"),
    }
    phi = T.phi_plus("A0", "E1", 2) / 2
    comp = C.povm([T.basis_projector([("A1", 2), ("E1", 2)], [i, j]) for i in range(2) for j in range(2)])
    prep = [C.dephasing_channel(2, "B0", "B1")] * 4
    out["mpsc"] = (mpsc(phi, comp, prep), "measure-and-prepare superchannel with dephasing preparations")

    lam = rand.random_instrument(gen, [("B0", 2)], [("E2", 2)], outcomes=2)
    states = [rand.random_density(gen, [("A0", 2), ("E1", 2)]) for _ in range(2)]
    povm = rand.random_povm(gen, [("A1", 2), ("E1", 2)], outcomes=2)
    fs = [rand.random_channel(gen, [("E2", 2)], [("B1", 2)]) for _ in range(2)]
    out["cmpsc"] = (cmpsc(lam, states, povm, fs), "random controlled measure-and-prepare superchannel")

    br = [(g, rand.random_channel(gen, [("B0", 2)], [("B1", 2)]))
          for g in rand.random_instrument(gen, [("R0", 2)], [("R1", 2)], outcomes=2)]
    out["locc1"] = (locc1_to_mpsc(br)[0], "superchannel generating a one-way LOCC channel")

    lam2 = rand.random_instrument(gen, [("B0", 2)], [("B2", 2)], outcomes=2)
    gam = [rand.random_instrument(gen, [("R0", 2)], [("R1", 2)], outcomes=2) for _ in range(2)]
    f2 = [[rand.random_channel(gen, [("B2", 2)], [("B1", 2)]) for _ in range(2)] for _ in range(2)]
    out["locc2"] = (locc2_to_cmpsc(lam2, gam, f2)[0], "superchannel generating a two-round LOCC channel")

    terms = random_sep_cptni_terms(gen, 2)
    out["cp-image"] = (sep_cptni_to_ebsc(terms)[0], "superchannel generating a separable CP trace-non-increasing map")
    return out


def random_sep_cptni_terms(gen, r: int = 2, d: int = 2):
    """Random ``(P_k, Q_k)`` with ``sum_k P_k (x) Q_k`` trace non-increasing."""
    from . import rand

    terms = []
    for _ in range(r):
        p = LabeledMatrix([("R0", d), ("R1", d)], rand.random_psd(gen, d * d))
        q = LabeledMatrix([("B0", d), ("B1", d)], rand.random_psd(gen, d * d))
        terms.append((p, q))
    target = sep_cptni_target(terms)
    marg = T.partial_trace(target, ["R1", "B1"])
    top = float(np.linalg.eigvalsh(marg.data)[-1])
    scale = gen.uniform(0.5, 1.0) / top
    return [(p * scale, q) for p, q in terms]


def export_fixtures(out_dir: str | Path, seed: int = 7) -> Path:
    """Write one Supermap JSON per fixture plus ``manifest.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for name, (s, desc) in fixtures(seed).items():
        path = out_dir / f"{name}.json"
        path.write_text(json.dumps(s.to_dict()))
        manifest.append({"name": name, "file": path.name, "realizes": desc, "dims": s.dims})
    target = out_dir / "manifest.json"
    target.write_text(json.dumps({"seed": seed, "fixtures": manifest}, indent=2))
    return target
