"""Linear maps stored as Choi matrices with labeled input and output systems.

The Choi matrix of a map ``E`` is ``J = sum_ij |i><j| (x) E(|i><j|)`` over
``in_labels ++ out_labels`` (unnormalized, so ``Tr J = d_in`` for a channel)
and the map is recovered as ``E(rho) = Tr_in[(rho^T (x) I) J]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import tensor as T
from .errors import LabelCollision, NotCP, NotInstrument, NotPOVM, SchemaError, ShapeError
from .tensor import DEFAULT_TOL, LabeledMatrix, Label, Tolerance

_tmp_counter = itertools.count()


def _fresh(prefix: str = "_t") -> str:
    return f"{prefix}{next(_tmp_counter)}"


@dataclass(frozen=True, eq=False)
class Channel:
    """A linear map ``in_labels -> out_labels`` held as its Choi matrix.

    Construction does not require complete positivity; use :meth:`is_cp` and
    :meth:`is_tp` to classify. Empty label tuples denote trivial (1-dim)
    systems: a state is a map with no inputs, an effect one with no outputs.
    """

    in_labels: tuple[str, ...]
    out_labels: tuple[str, ...]
    choi: LabeledMatrix

    def __post_init__(self):
        object.__setattr__(self, "in_labels", tuple(self.in_labels))
        object.__setattr__(self, "out_labels", tuple(self.out_labels))
        order = self.in_labels + self.out_labels
        if len(set(order)) != len(order):
            raise LabelCollision(f"input and output labels overlap: {order}")
        if sorted(order) != sorted(self.choi.names):
            raise ShapeError(f"Choi labels {self.choi.names} do not match {order}")
        if self.choi.names != order:
            object.__setattr__(self, "choi", T.permute_systems(self.choi, order))

    @property
    def in_dims(self) -> tuple[int, ...]:
        return tuple(self.choi.dim_of(n) for n in self.in_labels)

    @property
    def out_dims(self) -> tuple[int, ...]:
        return tuple(self.choi.dim_of(n) for n in self.out_labels)

    @property
    def d_in(self) -> int:
        return int(np.prod(self.in_dims, dtype=np.int64))

    @property
    def d_out(self) -> int:
        return int(np.prod(self.out_dims, dtype=np.int64))

    def in_space(self) -> list[Label]:
        return [(n, self.choi.dim_of(n)) for n in self.in_labels]

    def out_space(self) -> list[Label]:
        return [(n, self.choi.dim_of(n)) for n in self.out_labels]

    def relabel(self, mapping: Mapping[str, str]) -> "Channel":
        return Channel(
            tuple(mapping.get(n, n) for n in self.in_labels),
            tuple(mapping.get(n, n) for n in self.out_labels),
            self.choi.relabel({k: v for k, v in mapping.items() if k in self.choi.names}),
        )

    def is_cp(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.choi.is_psd(tol)

    def tp_residual(self) -> float:
        marg = T.partial_trace(self.choi, self.out_labels)
        return T.inf_norm(marg.data - np.eye(marg.side))

    def is_tp(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.tp_residual() <= tol.eps_tp

    def is_cptp(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.is_cp(tol) and self.is_tp(tol)

    def is_trace_nonincreasing(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        marg = T.partial_trace(self.choi, self.out_labels).data
        lam = np.linalg.eigvalsh((marg + marg.conj().T) / 2)
        return bool(lam[-1] <= 1 + tol.eps_tp)

    def to_dict(self) -> dict:
        return {"in": list(self.in_labels), "out": list(self.out_labels), "choi": self.choi.to_dict()}

    @classmethod
    def from_dict(cls, obj, where: str = "channel") -> "Channel":
        if not isinstance(obj, Mapping):
            raise SchemaError(f"{where}: expected an object")
        for key in ("in", "out", "choi"):
            if key not in obj:
                raise SchemaError(f"{where}.{key}: missing")
        for key in ("in", "out"):
            if not isinstance(obj[key], list) or not all(isinstance(x, str) for x in obj[key]):
                raise SchemaError(f"{where}.{key}: expected a list of label names")
        choi = LabeledMatrix.from_dict(obj["choi"], where=f"{where}.choi")
        try:
            return cls(tuple(obj["in"]), tuple(obj["out"]), choi)
        except (ShapeError, LabelCollision) as exc:
            raise SchemaError(f"{where}.in/out: {exc}") from None


@dataclass(frozen=True, eq=False)
class Instrument:
    """CP maps with common labels whose sum is trace preserving."""

    branches: tuple[Channel, ...]

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise NotInstrument("an instrument needs at least one branch")
        first = branches[0]
        fixed = [first]
        for b in branches[1:]:
            if sorted(b.choi.labels) != sorted(first.choi.labels) or b.in_labels != first.in_labels:
                raise ShapeError("instrument branches must share input/output labels")
            fixed.append(Channel(first.in_labels, first.out_labels, b.choi))
        object.__setattr__(self, "branches", tuple(fixed))

    def __len__(self):
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)

    def __getitem__(self, i):
        return self.branches[i]

    @property
    def total(self) -> Channel:
        acc = self.branches[0].choi
        for b in self.branches[1:]:
            acc = acc + b.choi
        return Channel(self.branches[0].in_labels, self.branches[0].out_labels, acc)

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> "Instrument":
        for k, b in enumerate(self.branches):
            if not b.is_cp(tol):
                raise NotInstrument(f"branch {k} is not completely positive")
        if not self.total.is_tp(tol):
            raise NotInstrument(f"branches do not sum to a TP map (residual {self.total.tp_residual():.3e})")
        return self

    def to_list(self) -> list:
        return [b.to_dict() for b in self.branches]

    @classmethod
    def from_list(cls, obj, where: str = "instrument") -> "Instrument":
        if not isinstance(obj, list):
            raise SchemaError(f"{where}: expected a list of channels")
        return cls(tuple(Channel.from_dict(c, where=f"{where}[{i}]") for i, c in enumerate(obj)))


# -- constructors ------------------------------------------------------------


def _space(name: str | Sequence[str], dim: int | Sequence[int]) -> list[Label]:
    if isinstance(name, str):
        return [(name, int(dim))]
    return [(n, int(d)) for n, d in zip(name, dim)]


def choi_from_kraus(
    kraus: Iterable[np.ndarray],
    in_label: str | Sequence[str] = "A0",
    out_label: str | Sequence[str] = "A1",
    in_dims: Sequence[int] | None = None,
    out_dims: Sequence[int] | None = None,
) -> Channel:
    """Channel ``rho -> sum_k K rho K^dagger``; CP by construction.

    Multi-label spaces need their per-label dims; single labels take the
    Kraus operator shape.
    """
    kraus = [np.atleast_2d(np.asarray(k, dtype=complex)) for k in kraus]
    if not kraus:
        raise ShapeError("at least one Kraus operator is required")
    d_out, d_in = kraus[0].shape
    for k in kraus:
        if k.shape != (d_out, d_in):
            raise ShapeError(f"Kraus operator shape {k.shape} differs from {(d_out, d_in)}")
    ins = _space(in_label, d_in if in_dims is None else in_dims)
    outs = _space(out_label, d_out if out_dims is None else out_dims)
    if int(np.prod([d for _, d in ins])) != d_in or int(np.prod([d for _, d in outs])) != d_out:
        raise ShapeError("declared label dims do not match the Kraus operator shape")
    # |K>> = sum_i |i> (x) K|i>, i.e. row-major (in, out) ordering of K^T
    vecs = np.stack([k.T.reshape(-1) for k in kraus], axis=1)
    choi = vecs @ vecs.conj().T
    return Channel(tuple(n for n, _ in ins), tuple(n for n, _ in outs), LabeledMatrix(ins + outs, choi))


def choi_from_matrix(
    matrix,
    in_space: Sequence[Label],
    out_space: Sequence[Label],
    cp: bool = True,
    tol: Tolerance = DEFAULT_TOL,
) -> Channel:
    """Wrap a raw Choi matrix. With ``cp=False`` non-CP maps (transpose) are allowed."""
    ins, outs = list(in_space), list(out_space)
    ch = Channel(tuple(n for n, _ in ins), tuple(n for n, _ in outs), LabeledMatrix(ins + outs, matrix))
    if cp and not ch.is_cp(tol):
        raise NotCP("Choi matrix is not positive semidefinite")
    return ch


def from_action(action, in_space: Sequence[Label], out_space: Sequence[Label]) -> Channel:
    """Build the Choi matrix by evaluating ``action`` on matrix units."""
    ins, outs = list(in_space), list(out_space)
    d_in = int(np.prod([d for _, d in ins], dtype=np.int64))
    d_out = int(np.prod([d for _, d in outs], dtype=np.int64))
    choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            e = np.zeros((d_in, d_in))
            e[i, j] = 1.0
            choi += np.kron(e, np.asarray(action(e), dtype=complex).reshape(d_out, d_out))
    return Channel(tuple(n for n, _ in ins), tuple(n for n, _ in outs), LabeledMatrix(ins + outs, choi))


def identity_channel(d: int, in_label: str = "A0", out_label: str = "A1") -> Channel:
    return Channel((in_label,), (out_label,), T.phi_plus(in_label, out_label, d))


def transpose_map(d: int, in_label: str = "A0", out_label: str = "A1") -> Channel:
    """The (non-CP) transpose map; its Choi matrix is the swap operator."""
    return Channel((in_label,), (out_label,), T.swap_operator(in_label, out_label, d))


def depolarizing_channel(d: int, in_label: str = "A0", out_label: str = "A1") -> Channel:
    """Completely depolarizing ``rho -> Tr(rho) I / d``."""
    return Channel((in_label,), (out_label,), T.identity([(in_label, d), (out_label, d)]) / d)


def dephasing_channel(d: int, in_label: str = "A0", out_label: str = "A1") -> Channel:
    projectors = [np.diag(np.eye(d)[k]) for k in range(d)]
    return choi_from_kraus(projectors, in_label, out_label)


def unitary_channel(u: np.ndarray, in_label: str = "A0", out_label: str = "A1") -> Channel:
    return choi_from_kraus([u], in_label, out_label)


def state_as_channel(rho: LabeledMatrix) -> Channel:
    """A state viewed as a map from the trivial system."""
    return Channel((), rho.names, rho)


def effect(element: np.ndarray | LabeledMatrix, labels: Sequence[Label] | None = None) -> Channel:
    """The map ``X -> Tr(F X)`` to the trivial system; its Choi matrix is ``F^T``."""
    if isinstance(element, LabeledMatrix):
        f = element
    else:
        f = LabeledMatrix(labels, element)
    return Channel(f.names, (), f.transpose())


def povm(elements: Sequence[np.ndarray | LabeledMatrix], labels: Sequence[Label] | None = None,
         tol: Tolerance = DEFAULT_TOL) -> Instrument:
    """POVM as an instrument whose branches have trivial output."""
    inst = Instrument(tuple(effect(e, labels) for e in elements))
    for k, b in enumerate(inst):
        if not b.is_cp(tol):
            raise NotPOVM(f"POVM element {k} is not positive semidefinite")
    if not inst.total.is_tp(tol):
        raise NotPOVM(f"POVM elements do not resolve the identity (residual {inst.total.tp_residual():.3e})")
    return inst


def povm_elements(inst: Instrument) -> list[LabeledMatrix]:
    return [b.choi.transpose() for b in inst]


# -- calculus ----------------------------------------------------------------


def apply(ch: Channel, rho: LabeledMatrix) -> LabeledMatrix:
    """``E(rho) = Tr_in[(rho^T (x) I) J]``; ``rho`` may carry extra (side) labels."""
    for n in ch.in_labels:
        if n not in rho.names:
            raise ShapeError(f"input label {n!r} missing from state labels {rho.names}")
        if rho.dim_of(n) != ch.choi.dim_of(n):
            raise ShapeError(f"label {n!r} has dim {rho.dim_of(n)}, channel expects {ch.choi.dim_of(n)}")
    clash = (set(rho.names) - set(ch.in_labels)) & set(ch.out_labels)
    if clash:
        raise LabelCollision(f"output labels {sorted(clash)} already present in the state")
    return T.link(rho, ch.choi)


def compose(second: Channel, first: Channel) -> Channel:
    """``second o first``; ``second``'s inputs are matched positionally to ``first``'s outputs."""
    if first.out_dims != second.in_dims:
        raise ShapeError(f"cannot compose: {first.out_dims} -> {second.in_dims}")
    mids = [_fresh("_mid") for _ in first.out_labels]
    f = first.relabel(dict(zip(first.out_labels, mids)))
    s = second.relabel(dict(zip(second.in_labels, mids)))
    clash = set(f.in_labels) & set(s.out_labels)
    if clash:
        raise LabelCollision(f"composite would reuse labels {sorted(clash)} on both sides")
    return Channel(f.in_labels, s.out_labels, T.link(f.choi, s.choi))


def tensor(a: Channel, b: Channel) -> Channel:
    choi = T.kron(a.choi, b.choi)
    return Channel(a.in_labels + b.in_labels, a.out_labels + b.out_labels, choi)


def mp_channel(povm_: Instrument, states: Sequence[LabeledMatrix], tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Measure-and-prepare channel ``rho -> sum_k Tr(F_k rho) omega_k``.

    The Choi matrix is ``sum_k F_k^T (x) omega_k``.
    """
    if len(povm_) != len(states):
        raise ShapeError(f"{len(povm_)} POVM elements but {len(states)} states")
    for k, b in enumerate(povm_):
        if b.out_labels:
            raise NotPOVM(f"POVM branch {k} has non-trivial output {b.out_labels}")
        if not b.is_cp(tol):
            raise NotPOVM(f"POVM element {k} is not positive semidefinite")
    if not povm_.total.is_tp(tol):
        raise NotPOVM("POVM elements do not resolve the identity")
    out_names = states[0].names
    acc = None
    for b, w in zip(povm_, states):
        if abs(w.trace() - 1) > tol.eps_tp or not w.is_psd(tol):
            raise ShapeError("prepared states must be density matrices")
        term = T.kron(b.choi, T.permute_systems(w, out_names))
        acc = term if acc is None else acc + term
    return Channel(povm_[0].in_labels, out_names, acc)


def mp_terms(povm_: Instrument, states: Sequence[LabeledMatrix]) -> list[tuple[LabeledMatrix, LabeledMatrix]]:
    """The product terms ``(F_k^T, omega_k)`` of a measure-and-prepare Choi matrix."""
    return [(b.choi, w) for b, w in zip(povm_, states)]


def is_eb(ch: Channel, tol: Tolerance = DEFAULT_TOL, decomposition=None):
    """Entanglement-breaking verdict: separability of the Choi matrix across in:out."""
    from .separability import decide

    return decide(ch.choi, (ch.in_labels, ch.out_labels), tol, decomposition=decomposition)


def max_entangled_map(
    in_space: Sequence[Label],
    out_space: Sequence[Label],
) -> Channel:
    """``Phi_+(rho) = Tr(rho phi_+) phi_+`` on paired systems (not trace preserving).

    ``in_space`` lists ``(A0, A0~)`` and ``out_space`` ``(A1, A1~)``.
    """
    (a0, d0), (t0, e0) = in_space
    (a1, d1), (t1, e1) = out_space
    if d0 != e0 or d1 != e1:
        raise ShapeError("paired systems must have equal dimensions")
    choi = T.kron(T.phi_plus(a0, t0, d0), T.phi_plus(a1, t1, d1))
    return Channel((a0, t0), (a1, t1), choi)
