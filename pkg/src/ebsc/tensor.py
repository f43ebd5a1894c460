"""Labeled multipartite dense matrices.

A :class:`LabeledMatrix` is a square complex matrix acting on the tensor
product of named subsystems. Rows and columns are laid out row-major over the
labels in declared order, so the matrix can always be viewed as a tensor of
shape ``dims + dims`` (row indices first, column indices second). Every
subsystem-level operation below works on that tensor view and never on
positional matrix indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BadPermutation,
    LabelCollision,
    NotHermitian,
    SchemaError,
    ShapeError,
    UnknownLabel,
)

Label = tuple[str, int]


@dataclass(frozen=True)
class Tolerance:
    """Relative tolerances used by every approximate predicate.

    All three are compared against the entrywise infinity norm of the operand.
    """

    eps_psd: float = 1e-9
    eps_eq: float = 1e-9
    eps_tp: float = 1e-9

    def __post_init__(self):
        for name in ("eps_psd", "eps_eq", "eps_tp"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")

    @classmethod
    def uniform(cls, eps: float) -> "Tolerance":
        return cls(eps, eps, eps)


DEFAULT_TOL = Tolerance()


def inf_norm(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if x.size else 0.0


def allclose_rel(a: np.ndarray, b: np.ndarray, eps: float) -> bool:
    """``max|a - b| <= eps * max(|a|_inf, |b|_inf)``."""
    scale = max(inf_norm(a), inf_norm(b))
    return inf_norm(a - b) <= eps * scale


class LabeledMatrix:
    """Immutable square matrix over an ordered list of named subsystems."""

    __slots__ = ("labels", "data")

    def __init__(self, labels: Iterable[Label], data):
        labels = tuple((str(n), int(d)) for n, d in labels)
        names = [n for n, _ in labels]
        if len(set(names)) != len(names):
            raise LabelCollision(f"duplicate labels in {names}")
        for n, d in labels:
            if d < 1:
                raise ShapeError(f"label {n!r} has non-positive dimension {d}")
        side = int(np.prod([d for _, d in labels], dtype=np.int64))
        arr = np.array(data, dtype=complex)
        if arr.shape != (side, side):
            raise ShapeError(f"data shape {arr.shape} does not match labels {labels} (side {side})")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, key, value):
        raise AttributeError("LabeledMatrix is immutable")

    # -- views -------------------------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.labels)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.labels)

    @property
    def side(self) -> int:
        return self.data.shape[0]

    def dim_of(self, name: str) -> int:
        for n, d in self.labels:
            if n == name:
                return d
        raise UnknownLabel(name)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownLabel(name) from None

    def as_tensor(self) -> np.ndarray:
        return self.data.reshape(self.dims + self.dims)

    def __repr__(self):
        lab = ", ".join(f"{n}:{d}" for n, d in self.labels)
        return f"LabeledMatrix([{lab}])"

    # -- arithmetic --------------------------------------------------------

    def _same_space(self, other: "LabeledMatrix") -> "LabeledMatrix":
        if self.labels == other.labels:
            return other
        if sorted(self.labels) == sorted(other.labels):
            return permute_systems(other, self.names)
        raise ShapeError(f"label mismatch: {self.labels} vs {other.labels}")

    def __add__(self, other: "LabeledMatrix") -> "LabeledMatrix":
        other = self._same_space(other)
        return LabeledMatrix(self.labels, self.data + other.data)

    def __sub__(self, other: "LabeledMatrix") -> "LabeledMatrix":
        other = self._same_space(other)
        return LabeledMatrix(self.labels, self.data - other.data)

    def __mul__(self, scalar) -> "LabeledMatrix":
        return LabeledMatrix(self.labels, self.data * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "LabeledMatrix":
        return LabeledMatrix(self.labels, self.data / scalar)

    def __neg__(self) -> "LabeledMatrix":
        return LabeledMatrix(self.labels, -self.data)

    def __matmul__(self, other: "LabeledMatrix") -> "LabeledMatrix":
        other = self._same_space(other)
        return LabeledMatrix(self.labels, self.data @ other.data)

    def dag(self) -> "LabeledMatrix":
        return LabeledMatrix(self.labels, self.data.conj().T)

    def transpose(self) -> "LabeledMatrix":
        return LabeledMatrix(self.labels, self.data.T)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def relabel(self, mapping: Mapping[str, str]) -> "LabeledMatrix":
        for old in mapping:
            self.index_of(old)
        return LabeledMatrix([(mapping.get(n, n), d) for n, d in self.labels], self.data)

    def close_to(self, other: "LabeledMatrix", eps: float = DEFAULT_TOL.eps_eq) -> bool:
        other = self._same_space(other)
        return allclose_rel(self.data, other.data, eps)

    def is_hermitian(self, eps: float = DEFAULT_TOL.eps_eq) -> bool:
        return inf_norm(self.data - self.data.conj().T) <= eps * inf_norm(self.data)

    def is_psd(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        if not self.is_hermitian(tol.eps_eq):
            return False
        return min_eig_hermitian(self, tol)[0] >= -tol.eps_psd * inf_norm(self.data)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        flat = self.data.reshape(-1)
        return {
            "labels": [{"name": n, "dim": d} for n, d in self.labels],
            "data": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_dict(cls, obj, where: str = "matrix") -> "LabeledMatrix":
        if not isinstance(obj, Mapping):
            raise SchemaError(f"{where}: expected an object")
        if "labels" not in obj:
            raise SchemaError(f"{where}.labels: missing")
        if "data" not in obj:
            raise SchemaError(f"{where}.data: missing")
        labels = []
        for i, lab in enumerate(obj["labels"]):
            try:
                labels.append((str(lab["name"]), int(lab["dim"])))
            except (KeyError, TypeError, ValueError):
                raise SchemaError(f"{where}.labels[{i}]: expected {{'name': str, 'dim': int}}") from None
        side = int(np.prod([d for _, d in labels], dtype=np.int64))
        data = obj["data"]
        if not isinstance(data, list) or len(data) != side * side:
            raise SchemaError(f"{where}.data: expected {side * side} [re, im] pairs")
        try:
            arr = np.array([complex(float(re), float(im)) for re, im in data], dtype=complex)
        except (TypeError, ValueError):
            raise SchemaError(f"{where}.data: entries must be [re, im] number pairs") from None
        try:
            return cls(labels, arr.reshape(side, side))
        except (LabelCollision, ShapeError) as exc:
            raise SchemaError(f"{where}.labels: {exc}") from None


# -- constructors ----------------------------------------------------------


def identity(labels: Iterable[Label]) -> LabeledMatrix:
    labels = tuple(labels)
    side = int(np.prod([d for _, d in labels], dtype=np.int64))
    return LabeledMatrix(labels, np.eye(side))


def basis_projector(labels: Iterable[Label], indices: Sequence[int]) -> LabeledMatrix:
    """``|i1 i2 ...><i1 i2 ...|`` over the given labels."""
    labels = tuple(labels)
    dims = [d for _, d in labels]
    flat = int(np.ravel_multi_index(tuple(indices), dims)) if labels else 0
    side = int(np.prod(dims, dtype=np.int64))
    data = np.zeros((side, side))
    data[flat, flat] = 1.0
    return LabeledMatrix(labels, data)


def phi_plus(a: str, b: str, d: int, d_b: int | None = None) -> LabeledMatrix:
    """Unnormalized maximally entangled operator ``sum_ij |ii><jj|``.

    With ``d_b`` larger than ``d`` the second factor is embedded in the first
    ``d`` levels of a ``d_b``-dimensional space.
    """
    d_b = d if d_b is None else d_b
    v = np.zeros(d * d_b)
    for i in range(min(d, d_b)):
        v[i * d_b + i] = 1.0
    return LabeledMatrix([(a, d), (b, d_b)], np.outer(v, v))


def swap_operator(a: str, b: str, d: int) -> LabeledMatrix:
    """``F_d = sum_ij |i><j| (x) |j><i|``."""
    data = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            data[i * d + j, j * d + i] = 1.0
    return LabeledMatrix([(a, d), (b, d)], data)


# -- core operations -------------------------------------------------------


def kron(a: LabeledMatrix, b: LabeledMatrix) -> LabeledMatrix:
    clash = set(a.names) & set(b.names)
    if clash:
        raise LabelCollision(f"labels {sorted(clash)} appear on both factors")
    return LabeledMatrix(a.labels + b.labels, np.kron(a.data, b.data))


def kron_all(*ms: LabeledMatrix) -> LabeledMatrix:
    out = ms[0]
    for m in ms[1:]:
        out = kron(out, m)
    return out


def _check_known(m: LabeledMatrix, names: Iterable[str]) -> list[str]:
    names = list(names)
    for n in names:
        m.index_of(n)
    return names


def partial_trace(m: LabeledMatrix, over: Iterable[str]) -> LabeledMatrix:
    over = set(_check_known(m, over))
    n = len(m.labels)
    keep = [i for i, name in enumerate(m.names) if name not in over]
    rows = list(range(n))
    cols = [i if m.names[i] in over else n + i for i in range(n)]
    out_idx = keep + [n + i for i in keep]
    t = np.einsum(m.as_tensor(), rows + cols, out_idx)
    kept = [m.labels[i] for i in keep]
    side = int(np.prod([d for _, d in kept], dtype=np.int64))
    return LabeledMatrix(kept, t.reshape(side, side))


def partial_transpose(m: LabeledMatrix, over: Iterable[str]) -> LabeledMatrix:
    idx = [m.index_of(name) for name in over]
    n = len(m.labels)
    axes = list(range(2 * n))
    for i in idx:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    return LabeledMatrix(m.labels, m.as_tensor().transpose(axes).reshape(m.side, m.side))


def permute_systems(m: LabeledMatrix, order: Sequence[str]) -> LabeledMatrix:
    order = list(order)
    if sorted(order) != sorted(m.names) or len(order) != len(m.names):
        raise BadPermutation(f"{order} is not a permutation of {list(m.names)}")
    n = len(m.labels)
    perm = [m.index_of(name) for name in order]
    t = m.as_tensor().transpose(perm + [n + p for p in perm])
    return LabeledMatrix([m.labels[p] for p in perm], t.reshape(m.side, m.side))


def min_eig_hermitian(m: LabeledMatrix, tol: Tolerance = DEFAULT_TOL) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue of a Hermitian matrix and a unit eigenvector.

    The eigenvector phase is fixed so that its first non-negligible component
    is real and positive.
    """
    h = m.data
    if inf_norm(h - h.conj().T) > tol.eps_eq * inf_norm(h):
        raise NotHermitian(f"{m!r} is not Hermitian within eps_eq={tol.eps_eq}")
    vals, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    return float(vals[0]), fix_phase(vecs[:, 0])


def fix_phase(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12 * max(np.max(np.abs(v)), 1e-300))
    if nz.size == 0:
        return v
    z = v[nz[0]]
    return v * (abs(z) / z)


def link(a: LabeledMatrix, b: LabeledMatrix) -> LabeledMatrix:
    """Link product over the labels the two operands share.

    ``a * b = Tr_S[(a^{T_S} (x) I)(I (x) b)]`` where ``S`` is the set of shared
    labels. Composing maps through their Choi matrices, applying a channel to a
    state and contracting a supermap with an input channel are all instances.
    Result labels are ``a``'s unshared labels followed by ``b``'s.
    """
    shared = [n for n in a.names if n in b.names]
    for n in shared:
        if a.dim_of(n) != b.dim_of(n):
            raise ShapeError(f"shared label {n!r} has dims {a.dim_of(n)} and {b.dim_of(n)}")
    na, nb = len(a.labels), len(b.labels)
    counter = iter(range(2 * (na + nb)))
    a_rows = [next(counter) for _ in range(na)]
    a_cols = [next(counter) for _ in range(na)]
    b_rows, b_cols = [], []
    for n in b.names:
        if n in shared:
            i = a.index_of(n)
            b_rows.append(a_rows[i])
            b_cols.append(a_cols[i])
        else:
            b_rows.append(next(counter))
            b_cols.append(next(counter))
    a_keep = [i for i, n in enumerate(a.names) if n not in shared]
    b_keep = [j for j, n in enumerate(b.names) if n not in shared]
    out = (
        [a_rows[i] for i in a_keep]
        + [b_rows[j] for j in b_keep]
        + [a_cols[i] for i in a_keep]
        + [b_cols[j] for j in b_keep]
    )
    t = np.einsum(a.as_tensor(), a_rows + a_cols, b.as_tensor(), b_rows + b_cols, out, optimize=True)
    labels = [a.labels[i] for i in a_keep] + [b.labels[j] for j in b_keep]
    side = int(np.prod([d for _, d in labels], dtype=np.int64))
    return LabeledMatrix(labels, t.reshape(side, side))


def apply_local(m: LabeledMatrix, name: str, op: np.ndarray, new_name: str | None = None) -> LabeledMatrix:
    """``(op (x) I) m (op^dagger (x) I)`` with ``op`` acting on one label.

    ``op`` may be rectangular (``k x d``); the label then takes dimension ``k``.
    """
    i = m.index_of(name)
    op = np.asarray(op, dtype=complex)
    d = m.dims[i]
    if op.ndim != 2 or op.shape[1] != d:
        raise ShapeError(f"operator of shape {op.shape} cannot act on {name!r} of dim {d}")
    n = len(m.labels)
    t = m.as_tensor()
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [i])), 0, i)
    t = np.moveaxis(np.tensordot(t, op.conj(), axes=([n + i], [1])), -1, n + i)
    labels = list(m.labels)
    labels[i] = (new_name or name, op.shape[0])
    side = int(np.prod([dd for _, dd in labels], dtype=np.int64))
    return LabeledMatrix(labels, t.reshape(side, side))


def project_onto(m: LabeledMatrix, indices: Mapping[str, int]) -> LabeledMatrix:
    """Unnormalized block ``(I (x) <b|) m (I (x) |b>)`` for basis states on some labels."""
    _check_known(m, indices)
    n = len(m.labels)
    sl = [slice(None)] * (2 * n)
    for name, k in indices.items():
        i = m.index_of(name)
        sl[i] = k
        sl[n + i] = k
    t = m.as_tensor()[tuple(sl)]
    kept = [lab for lab in m.labels if lab[0] not in indices]
    side = int(np.prod([d for _, d in kept], dtype=np.int64))
    return LabeledMatrix(kept, t.reshape(side, side))


def frobenius(m: LabeledMatrix) -> float:
    return float(np.linalg.norm(m.data))
