"""Supermaps stored as Choi matrices over four system groups (A0, A1, B0, B1).

A supermap sends a map ``A0 -> A1`` to a map ``B0 -> B1``. Its Choi matrix is
the Choi matrix of the associated bipartite map ``A1 B0 -> A0 B1``; applying it
to an input Choi matrix is a link product over the A systems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import channels as C
from . import tensor as T
from .channels import Channel
from .errors import LabelCollision, NotCP, NotSuperchannel, RealizationFailed, SchemaError, ShapeError
from .tensor import DEFAULT_TOL, LabeledMatrix, Tolerance

GROUPS = ("A0", "A1", "B0", "B1")


@dataclass(frozen=True, eq=False)
class Supermap:
    """Choi matrix over ``a0 + a1 + b0 + b1`` plus optional A:B product terms.

    ``terms`` is a list of pairs ``(M over A, N over B)`` that a constructor
    knows sum to the Choi matrix; it is only used as separability evidence
    and is always re-verified before being trusted.
    """

    a0: tuple[str, ...]
    a1: tuple[str, ...]
    b0: tuple[str, ...]
    b1: tuple[str, ...]
    choi: LabeledMatrix
    terms: tuple[tuple[LabeledMatrix, LabeledMatrix], ...] | None = field(default=None)

    def __post_init__(self):
        for g in ("a0", "a1", "b0", "b1"):
            object.__setattr__(self, g, tuple(getattr(self, g)))
        order = self.a0 + self.a1 + self.b0 + self.b1
        if len(set(order)) != len(order):
            raise LabelCollision(f"supermap groups overlap: {order}")
        if sorted(order) != sorted(self.choi.names):
            raise ShapeError(f"Choi labels {self.choi.names} do not match groups {order}")
        if self.choi.names != order:
            object.__setattr__(self, "choi", T.permute_systems(self.choi, order))
        if self.terms is not None:
            object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def a_labels(self) -> tuple[str, ...]:
        return self.a0 + self.a1

    @property
    def b_labels(self) -> tuple[str, ...]:
        return self.b0 + self.b1

    def group_dim(self, group: str) -> int:
        names = getattr(self, group.lower())
        return int(np.prod([self.choi.dim_of(n) for n in names], dtype=np.int64))

    @property
    def dims(self) -> dict[str, int]:
        return {g: self.group_dim(g) for g in GROUPS}

    def space(self, group: str) -> list[tuple[str, int]]:
        return [(n, self.choi.dim_of(n)) for n in getattr(self, group.lower())]

    def relabel(self, mapping: Mapping[str, str]) -> "Supermap":
        def ren(names):
            return tuple(mapping.get(n, n) for n in names)

        terms = None
        if self.terms is not None:
            terms = tuple(
                (m.relabel({k: v for k, v in mapping.items() if k in m.names}),
                 n.relabel({k: v for k, v in mapping.items() if k in n.names}))
                for m, n in self.terms
            )
        return Supermap(ren(self.a0), ren(self.a1), ren(self.b0), ren(self.b1),
                        self.choi.relabel({k: v for k, v in mapping.items() if k in self.choi.names}), terms)

    def with_terms(self, terms) -> "Supermap":
        return Supermap(self.a0, self.a1, self.b0, self.b1, self.choi, tuple(terms))

    def to_dict(self) -> dict:
        return {
            "dims": self.dims,
            "groups": {g: list(getattr(self, g.lower())) for g in GROUPS},
            "choi": self.choi.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj, where: str = "supermap") -> "Supermap":
        if not isinstance(obj, Mapping):
            raise SchemaError(f"{where}: expected an object")
        if "choi" not in obj:
            raise SchemaError(f"{where}.choi: missing")
        if "dims" not in obj or not isinstance(obj["dims"], Mapping):
            raise SchemaError(f"{where}.dims: expected an object with A0, A1, B0, B1")
        choi = LabeledMatrix.from_dict(obj["choi"], where=f"{where}.choi")
        groups = obj.get("groups") or {g: [g] for g in GROUPS}
        for g in GROUPS:
            if g not in groups:
                raise SchemaError(f"{where}.groups.{g}: missing")
            if g not in obj["dims"]:
                raise SchemaError(f"{where}.dims.{g}: missing")
        try:
            s = cls(*(tuple(groups[g]) for g in GROUPS), choi)
        except (ShapeError, LabelCollision) as exc:
            raise SchemaError(f"{where}.groups: {exc}") from None
        for g in GROUPS:
            if int(obj["dims"][g]) != s.group_dim(g):
                raise SchemaError(f"{where}.dims.{g}: {obj['dims'][g]} does not match the Choi labels")
        return s


# -- constructors ------------------------------------------------------------


def identity_superchannel(d_a0: int, d_a1: int | None = None) -> Supermap:
    """``Theta[E] = E``; Choi ``phi+^{A0 B0} (x) phi+^{A1 B1}``."""
    d_a1 = d_a0 if d_a1 is None else d_a1
    choi = T.kron(T.phi_plus("A0", "B0", d_a0), T.phi_plus("A1", "B1", d_a1))
    return Supermap(("A0",), ("A1",), ("B0",), ("B1",), choi)


def _split_pre_post(pre: Channel, post: Channel):
    env = tuple(n for n in pre.out_labels if n in post.in_labels)
    a0 = tuple(n for n in pre.out_labels if n not in env)
    a1 = tuple(n for n in post.in_labels if n not in env)
    for n in env:
        if pre.choi.dim_of(n) != post.choi.dim_of(n):
            raise ShapeError(f"memory label {n!r} has dims {pre.choi.dim_of(n)} and {post.choi.dim_of(n)}")
    clash = set(pre.in_labels) & set(post.out_labels)
    if clash:
        raise LabelCollision(f"labels {sorted(clash)} used for both B0 and B1")
    return env, a0, a1


def from_pre_post(pre: Channel, post: Channel, tol: Tolerance = DEFAULT_TOL, check: bool = True,
                  require_cp: bool = True) -> Supermap:
    """Supermap ``E -> post o (E (x) id_E) o pre``.

    ``pre`` maps ``B0 -> A0 E`` and ``post`` maps ``A1 E -> B1``; the memory
    labels E are the ones shared by ``pre``'s outputs and ``post``'s inputs.
    With ``check`` the Choi matrix is compared against the definitional route
    that feeds the maximally entangled map through the realization.
    """
    if require_cp:
        if not pre.is_cp(tol):
            raise NotCP("pre-processing map is not completely positive")
        if not post.is_cp(tol):
            raise NotCP("post-processing map is not completely positive")
    env, a0, a1 = _split_pre_post(pre, post)
    choi = T.link(pre.choi, post.choi)
    s = Supermap(a0, a1, pre.in_labels, post.out_labels, choi)
    if check:
        oracle = definitional_choi(pre, post)
        if not T.allclose_rel(oracle.data, s.choi.data, 1e-10):
            raise RealizationFailed("link-product Choi disagrees with the definitional route",
                                    T.inf_norm(oracle.data - s.choi.data))
    return s


def definitional_choi(pre: Channel, post: Channel) -> LabeledMatrix:
    """Choi of ``(id (x) Theta)[Phi+]`` computed by sequential map actions.

    Each matrix unit on ``R0 B0`` is pushed through ``pre``, then the maximally
    entangled map ``A0 R0 -> A1 R1``, then ``post``. The result is relabeled
    from ``R0, R1`` back to ``A0, A1``.
    """
    env, a0, a1 = _split_pre_post(pre, post)
    r0 = [(f"_R0_{n}", pre.choi.dim_of(n)) for n in a0]
    r1 = [(f"_R1_{n}", post.choi.dim_of(n)) for n in a1]
    a0_sp = [(n, pre.choi.dim_of(n)) for n in a0]
    a1_sp = [(n, post.choi.dim_of(n)) for n in a1]
    phi = T.kron_all(
        T.identity([]),
        *[T.phi_plus(n, rn, d) for (n, d), (rn, _) in zip(a0_sp, r0)],
        *[T.phi_plus(n, rn, d) for (n, d), (rn, _) in zip(a1_sp, r1)],
    )
    phi_map = Channel(tuple(n for n, _ in a0_sp) + tuple(n for n, _ in r0),
                      tuple(n for n, _ in a1_sp) + tuple(n for n, _ in r1), phi)
    in_space = r0 + pre.in_space()
    out_space = r1 + post.out_space()

    def action(unit: np.ndarray) -> np.ndarray:
        x = LabeledMatrix(in_space, unit)
        x = C.apply(pre, x)
        x = C.apply(phi_map, x)
        x = C.apply(post, x)
        return T.permute_systems(x, [n for n, _ in out_space]).data

    full = C.from_action(action, in_space, out_space).choi
    back = {rn: n for (rn, _), (n, _) in zip(r0 + r1, a0_sp + a1_sp)}
    return T.permute_systems(full.relabel(back), a0 + a1 + pre.in_labels + post.out_labels)


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class SuperchannelReport:
    psd_min_eig: float
    marginal_a1b0: float
    marginal_a0a1b0: float
    tol: Tolerance

    @property
    def psd_ok(self) -> bool:
        return self.psd_min_eig >= -self.tol.eps_psd

    @property
    def failing(self) -> list[str]:
        out = []
        if not self.psd_ok:
            out.append("psd")
        if self.marginal_a1b0 > self.tol.eps_eq:
            out.append("marginal_A1B0")
        if self.marginal_a0a1b0 > self.tol.eps_eq:
            out.append("marginal_A0A1B0")
        return out

    def __bool__(self) -> bool:
        return not self.failing

    def to_dict(self) -> dict:
        return {
            "ok": bool(self),
            "psd_min_eig": self.psd_min_eig,
            "marginal_A1B0_residual": self.marginal_a1b0,
            "marginal_A0A1B0_residual": self.marginal_a0a1b0,
            "failing": self.failing,
        }


def is_superchannel(s: Supermap, tol: Tolerance = DEFAULT_TOL) -> SuperchannelReport:
    """PSD plus the two marginal conditions.

    ``Tr_{A0 B1} J = I^{A1 B0}`` and ``Tr_{B1} J = J^{A0 B0} (x) I^{A1} / d_{A1}``.
    Residuals are entrywise maxima; the PSD value is relative to ``|J|_inf``.
    """
    scale = max(T.inf_norm(s.choi.data), 1e-300)
    lam = T.min_eig_hermitian(s.choi, tol)[0] / scale if s.choi.is_hermitian(tol.eps_eq) else -np.inf
    m1 = T.partial_trace(s.choi, s.a0 + s.b1)
    r1 = T.inf_norm(m1.data - np.eye(m1.side))
    lhs = T.partial_trace(s.choi, s.b1)
    m0 = T.partial_trace(s.choi, s.a1 + s.b1)
    rhs = T.kron(m0, T.identity(s.space("A1")) / s.group_dim("A1"))
    r2 = T.inf_norm(lhs.data - T.permute_systems(rhs, lhs.names).data)
    return SuperchannelReport(float(lam), float(r1), float(r2), tol)


# -- application -------------------------------------------------------------


def _match_input(s: Supermap, j_in: Channel, a_in: Sequence[str] | None, a_out: Sequence[str] | None):
    a_in = tuple(j_in.in_labels if a_in is None else a_in)
    a_out = tuple(j_in.out_labels if a_out is None else a_out)
    if len(a_in) != len(s.a0) or len(a_out) != len(s.a1):
        raise ShapeError(f"input channel systems {a_in}->{a_out} do not match {s.a0}->{s.a1}")
    mapping = dict(zip(a_in + a_out, s.a0 + s.a1))
    for old, new in mapping.items():
        if j_in.choi.dim_of(old) != s.choi.dim_of(new):
            raise ShapeError(f"system {old!r} has dim {j_in.choi.dim_of(old)}, supermap expects {s.choi.dim_of(new)}")
    side = [n for n in j_in.choi.names if n not in mapping]
    clash = set(side) & set(s.b_labels)
    if clash:
        raise LabelCollision(f"side labels {sorted(clash)} collide with output labels")
    return j_in.relabel(mapping)


def apply(s: Supermap, j_in: Channel) -> Channel:
    """Output channel ``B0 -> B1`` with Choi ``Tr_A[(J_in^T (x) I) J]``."""
    if len(j_in.in_labels) != len(s.a0) or len(j_in.out_labels) != len(s.a1):
        raise ShapeError(f"input channel {j_in.in_labels}->{j_in.out_labels} does not match {s.a0}->{s.a1}")
    ch = _match_input(s, j_in, None, None)
    return Channel(s.b0, s.b1, T.link(ch.choi, s.choi))


def apply_with_side(s: Supermap, j_in: Channel, a_in: Sequence[str] | None = None,
                    a_out: Sequence[str] | None = None) -> Channel:
    """``(id^R (x) Theta)`` acting on a map ``R0 A0 -> R1 A1``.

    ``a_in``/``a_out`` name the input channel's systems that plug into the
    supermap (defaults: the supermap's own A labels). All other labels are
    the untouched side systems.
    """
    a_in = tuple(s.a0 if a_in is None else a_in)
    a_out = tuple(s.a1 if a_out is None else a_out)
    for n in a_in:
        if n not in j_in.in_labels:
            raise ShapeError(f"{n!r} is not an input of the channel")
    for n in a_out:
        if n not in j_in.out_labels:
            raise ShapeError(f"{n!r} is not an output of the channel")
    ch = _match_input(s, j_in, a_in, a_out)
    r0 = tuple(n for n in j_in.in_labels if n not in a_in)
    r1 = tuple(n for n in j_in.out_labels if n not in a_out)
    return Channel(r0 + s.b0, r1 + s.b1, T.link(ch.choi, s.choi))


def as_bipartite_channel(s: Supermap) -> Channel:
    """The map ``A1 B0 -> A0 B1`` sharing the supermap's Choi matrix."""
    return Channel(s.a1 + s.b0, s.a0 + s.b1, s.choi)


def from_bipartite_channel(ch: Channel, a0: Sequence[str], a1: Sequence[str],
                           b0: Sequence[str], b1: Sequence[str]) -> Supermap:
    if sorted(ch.in_labels) != sorted(tuple(a1) + tuple(b0)) or sorted(ch.out_labels) != sorted(tuple(a0) + tuple(b1)):
        raise ShapeError("channel labels do not match the requested groups")
    return Supermap(a0, a1, b0, b1, ch.choi)


def tensor(s1: Supermap, s2: Supermap) -> Supermap:
    """Parallel composition; product certificates multiply when both exist."""
    clash = set(s1.choi.names) & set(s2.choi.names)
    if clash:
        raise LabelCollision(f"supermaps share labels {sorted(clash)}; relabel one (see primed)")
    choi = T.kron(s1.choi, s2.choi)
    terms = None
    if s1.terms is not None and s2.terms is not None:
        terms = tuple((T.kron(m1, m2), T.kron(n1, n2)) for m1, n1 in s1.terms for m2, n2 in s2.terms)
    return Supermap(s1.a0 + s2.a0, s1.a1 + s2.a1, s1.b0 + s2.b0, s1.b1 + s2.b1, choi, terms)


def primed(s: Supermap, suffix: str = "'") -> Supermap:
    return s.relabel({n: n + suffix for n in s.choi.names})


# -- realization -------------------------------------------------------------


def realize_pre_post(s: Supermap, tol: Tolerance = DEFAULT_TOL, env_label: str = "E",
                     residual_tol: float = 1e-8) -> tuple[Channel, Channel]:
    """A CPTP pair ``(pre: B0 -> A0 E, post: A1 E -> B1)`` realizing ``s``.

    ``pre`` is the isometric dilation purifying ``Q = Tr_{A1 B1} J / d_{A1}``
    (a channel Choi ``B0 -> A0``), with ``E`` spanning the support of ``Q``.
    ``post`` is the Choi matrix ``J`` pulled back through that purification,
    which is trace preserving exactly when the marginal conditions hold.
    """
    report = is_superchannel(s, tol)
    if not report:
        raise NotSuperchannel(f"marginal/PSD conditions fail: {report.failing}")
    if env_label in s.choi.names:
        raise LabelCollision(f"memory label {env_label!r} already used")
    d_a1 = s.group_dim("A1")
    order = s.b0 + s.a0 + s.a1 + s.b1
    q = T.permute_systems(T.partial_trace(s.choi, s.a1 + s.b1), s.b0 + s.a0).data / d_a1
    lam, vecs = np.linalg.eigh((q + q.conj().T) / 2)
    idx = np.argsort(-lam, kind="stable")
    lam, vecs = lam[idx], vecs[:, idx]
    keep = lam > 1e-12 * max(lam[0], 1e-300)
    lam, vecs = lam[keep], vecs[:, keep]
    vecs = np.stack([T.fix_phase(vecs[:, e]) for e in range(vecs.shape[1])], axis=1)
    d_e = lam.size

    psi = (vecs * np.sqrt(lam)).reshape(-1)  # index (b0 a0) then e
    pre_labels = s.space("B0") + s.space("A0") + [(env_label, d_e)]
    pre = Channel(s.b0, s.a0 + (env_label,), LabeledMatrix(pre_labels, np.outer(psi, psi.conj())))

    w = (vecs.conj().T) / np.sqrt(lam)[:, None]  # E x (B0 A0)
    d_rest = s.group_dim("A1") * s.group_dim("B1")
    jp = T.permute_systems(s.choi, order).data
    wf = np.kron(w, np.eye(d_rest))
    post_data = wf @ jp @ wf.conj().T
    post_labels = [(env_label, d_e)] + s.space("A1") + s.space("B1")
    post = Channel(s.a1 + (env_label,), s.b1, LabeledMatrix(post_labels, post_data))

    back = T.link(pre.choi, post.choi)
    residual = T.inf_norm(T.permute_systems(back, s.choi.names).data - s.choi.data)
    if residual > residual_tol * max(T.inf_norm(s.choi.data), 1.0):
        raise RealizationFailed("pre/post pair does not reproduce the supermap", residual)
    if pre.tp_residual() > residual_tol or post.tp_residual() > residual_tol:
        raise RealizationFailed("realization is not trace preserving", max(pre.tp_residual(), post.tp_residual()))
    return pre, post
