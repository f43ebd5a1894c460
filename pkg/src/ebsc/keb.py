"""k-entanglement-breaking channels and the Werner channel family.

A channel is k-EB when ``(P (x) I) J (P (x) I)`` is separable for every
projector ``P`` of rank at most k on the input. The Werner channels
``Lambda_beta`` (Choi matrix ``d`` times a Werner state) are k-EB exactly when
``beta <= (d - k) / k``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import channels as C
from . import rand
from . import separability as SEP
from . import tensor as T
from .channels import Channel
from .errors import BadParam, NotCP, NotProjector, NotTP, ShapeError
from .separability import Verdict
from .superchannels import Supermap
from .tensor import DEFAULT_TOL, LabeledMatrix, Tolerance


@dataclass(frozen=True)
class WernerParams:
    d: int
    beta: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise BadParam(f"d must be an integer >= 2, got {self.d}")
        if not (-(self.d + 1) <= self.beta <= self.d - 1):
            raise BadParam(f"beta must lie in [{-(self.d + 1)}, {self.d - 1}], got {self.beta}")


def werner_state(p: WernerParams, labels: tuple[str, str] = ("B0", "B1")) -> LabeledMatrix:
    """``(I - ((beta + 1) / d) F) / (d^2 - (beta + 1))``."""
    d, b = p.d, p.beta
    f = T.swap_operator(labels[0], labels[1], d)
    ident = T.identity([(labels[0], d), (labels[1], d)])
    return (ident - f * ((b + 1) / d)) / (d * d - (b + 1))


def werner_channel(p: WernerParams, in_label: str = "B0", out_label: str = "B1") -> Channel:
    """``Lambda_beta`` with Choi matrix ``d * werner_state``."""
    return Channel((in_label,), (out_label,), werner_state(p, (in_label, out_label)) * p.d)


def werner_coefficients(p: WernerParams) -> tuple[float, float]:
    """``(a, b)`` such that ``Lambda_beta(rho) = a Tr(rho) I + b rho^T``."""
    den = p.d * p.d - (p.beta + 1)
    return p.d / den, -(p.beta + 1) / den


def k_ebc_threshold(d: int, k: int) -> float:
    if not (1 <= k < d):
        raise BadParam(f"need 1 <= k < d, got k={k}, d={d}")
    return (d - k) / k


# -- projected Choi matrices ---------------------------------------------------


def _range_basis(p: np.ndarray, tol: Tolerance) -> np.ndarray:
    """Orthonormal columns spanning the range of a projector."""
    diag = np.diag(p)
    if T.inf_norm(p - np.diag(diag)) == 0 and np.all((np.abs(diag) == 0) | (np.abs(diag - 1) == 0)):
        return np.eye(p.shape[0])[:, np.flatnonzero(np.abs(diag) == 1)]
    lam, vecs = np.linalg.eigh((p + p.conj().T) / 2)
    cols = [T.fix_phase(vecs[:, i]) for i in range(lam.size) if lam[i] > 0.5]
    return np.stack(cols, axis=1) if cols else np.zeros((p.shape[0], 0))


def check_projector(p: np.ndarray, d: int, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if p.shape != (d, d):
        raise NotProjector(f"projector shape {p.shape} does not match input dimension {d}")
    scale = max(T.inf_norm(p), 1.0)
    if T.inf_norm(p - p.conj().T) > tol.eps_eq * scale or T.inf_norm(p @ p - p) > tol.eps_eq * scale:
        raise NotProjector("operator is not a Hermitian idempotent")
    return p


def projected_choi(ch: Channel, p: np.ndarray, tol: Tolerance = DEFAULT_TOL, compress: bool = True) -> LabeledMatrix:
    """``(P (x) I) J (P (x) I)`` for a projector ``P`` on the single input label.

    With ``compress`` (default) the result is expressed on the range of ``P``
    so the input label takes dimension ``rank P``; separability is unaffected
    because the two forms differ by a local isometry. ``P = I`` returns the
    Choi matrix itself.
    """
    if len(ch.in_labels) != 1:
        raise ShapeError("projected Choi needs a single input label")
    name = ch.in_labels[0]
    d = ch.choi.dim_of(name)
    p = check_projector(p, d, tol)
    if np.array_equal(p, np.eye(d)):
        return ch.choi
    if not compress:
        return T.apply_local(ch.choi, name, p)
    v = _range_basis(p, tol)
    return T.apply_local(ch.choi, name, v.conj().T)


def coordinate_projectors(d: int, k: int):
    for idx in itertools.combinations(range(d), k):
        p = np.zeros((d, d))
        p[idx, idx] = 1.0
        yield "coord:" + ",".join(map(str, idx)), p


def haar_projectors(d: int, k: int, samples: int, seed):
    gen = rand.rng(seed)
    for s in range(samples):
        v = rand.haar_isometry(gen, d, k)
        yield f"haar:{s}", v @ v.conj().T


def is_k_ebc(ch: Channel, k: int, samples: int = 200, seed=0, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """k-EB verdict from coordinate projectors plus seeded Haar-random ones.

    Each projected Choi matrix is normalized by ``d_in`` and sent through the
    separability ladder across input:output. The first entangled projection
    is the witness; its id is stored in ``notes["witness_projector_id"]``.
    """
    if len(ch.in_labels) != 1 or len(ch.out_labels) != 1 or ch.d_in != ch.d_out:
        raise BadParam("k-EB tests need a channel with equal single input and output dimension")
    if int(k) != k or k < 1:
        raise BadParam(f"k must be a positive integer, got {k}")
    d = ch.d_in
    k = min(int(k), d)
    cut = ((ch.in_labels[0],), (ch.out_labels[0],))
    projectors = itertools.chain(coordinate_projectors(d, k), haar_projectors(d, k, samples if k < d else 0, seed))
    min_eig = math.inf
    tests = []
    inconclusive = None
    count = 0
    for pid, p in projectors:
        rho = projected_choi(ch, p, tol) / d
        v = SEP.decide(rho, cut, tol)
        count += 1
        if v.min_pt_eig is not None:
            min_eig = min(min_eig, v.min_pt_eig)
        if v.outcome == SEP.ENTANGLED:
            return Verdict(SEP.ENTANGLED, cut, criterion=v.criterion, min_pt_eig=v.min_pt_eig, witness=v.witness,
                           realignment=v.realignment, tests_run=v.tests_run,
                           notes={"witness_projector_id": pid, "projector": p, "k": k, "projectors_checked": count})
        if v.outcome == SEP.INCONCLUSIVE and inconclusive is None:
            inconclusive = pid
        for t in v.tests_run:
            if t not in tests:
                tests.append(t)
    notes = {"k": k, "projectors_checked": count, "witness_projector_id": None}
    if inconclusive is not None:
        notes["first_inconclusive"] = inconclusive
        return Verdict(SEP.INCONCLUSIVE, cut, min_pt_eig=min_eig, tests_run=tuple(tests), notes=notes)
    return Verdict(SEP.SEPARABLE, cut, criterion="all-projections-separable", min_pt_eig=min_eig,
                   tests_run=tuple(tests), notes=notes)


# -- isotropic family -----------------------------------------------------------


def isotropic_fit(m: LabeledMatrix) -> tuple[float, float, float]:
    """Least-squares ``m ~ x I + y phi+`` on a square two-label operator; returns ``(x, y, residual)``."""
    if len(m.labels) != 2 or m.dims[0] != m.dims[1]:
        raise ShapeError("isotropic fit needs two labels of equal dimension")
    d = m.dims[0]
    basis = [np.eye(d * d), T.phi_plus(m.names[0], m.names[1], d).data]
    gram = np.array([[np.vdot(a, b).real for b in basis] for a in basis])
    rhs = np.array([np.vdot(a, m.data).real for a in basis])
    x, y = np.linalg.solve(gram, rhs)
    res = float(np.linalg.norm(m.data - x * basis[0] - y * basis[1]))
    return float(x), float(y), res


def isotropic_eb_verdict(ch: Channel, tol: Tolerance = DEFAULT_TOL, residual_tol: float = 1e-9) -> Verdict:
    """EB verdict for channels whose Choi matrix lies in ``span{I, phi+}``.

    On that family PPT is equivalent to separability, so the verdict is
    decided by the partial transpose alone. Non-isotropic inputs fall back to
    the general ladder.
    """
    cut = (ch.in_labels, ch.out_labels)
    x, y, res = isotropic_fit(ch.choi)
    if res > residual_tol * max(T.frobenius(ch.choi), 1.0):
        return SEP.decide(ch.choi, cut, tol)
    ok, lam, vec = SEP.ppt(ch.choi, cut, tol)
    notes = {"isotropic_coefficients": [x, y], "isotropic_residual": res}
    if ok:
        return Verdict(SEP.SEPARABLE, cut, criterion="isotropic-ppt", min_pt_eig=lam,
                       tests_run=("isotropic-fit", "ppt"), notes=notes)
    return Verdict(SEP.ENTANGLED, cut, criterion="ppt", min_pt_eig=lam, witness=vec,
                   tests_run=("isotropic-fit", "ppt"), notes=notes)


# -- k-non-entangling example ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class KNonEntanglingExample:
    channel: Channel
    factor: Channel
    beta: float
    k: int
    level_k: Verdict
    level_k_plus_1: Verdict


def k_nonentangling_example(d: int, k: int, samples: int = 50, seed=0) -> KNonEntanglingExample:
    """``SWAP o (Lambda (x) Lambda)`` at ``beta = (d - k) / k``.

    The swap only exchanges which output slot each factor writes to, so the
    Choi matrix is the product of two Werner Chois with crossed outputs.
    """
    beta = k_ebc_threshold(d, k)
    p = WernerParams(d, beta)
    left = werner_channel(p, "X0", "Y1")
    right = werner_channel(p, "Y0", "X1")
    ch = Channel(("X0", "Y0"), ("X1", "Y1"), T.kron(left.choi, right.choi))
    factor = werner_channel(p)
    return KNonEntanglingExample(ch, factor, beta, k,
                                 is_k_ebc(factor, k, samples, seed), is_k_ebc(factor, k + 1, samples, seed))


# -- superchannels without side channel ------------------------------------------


def sidefree_superchannel(pre: Channel, post: Channel, tol: Tolerance = DEFAULT_TOL,
                          pre_terms=None, post_terms=None) -> Supermap:
    """``Theta[E] = post o E o pre`` with Choi ``J_pre (x) J_post``.

    ``pre_terms`` (``B0 : A0`` pairs) and ``post_terms`` (``A1 : B1`` pairs),
    when both given, are multiplied into an A:B product certificate.
    """
    for name, ch in (("pre", pre), ("post", post)):
        if not ch.is_cp(tol):
            raise NotCP(f"{name}-processing map is not completely positive")
        if not ch.is_tp(tol):
            raise NotTP(f"{name}-processing map is not trace preserving")
    s = Supermap(pre.out_labels, post.in_labels, pre.in_labels, post.out_labels, T.kron(pre.choi, post.choi))
    if pre_terms is not None and post_terms is not None:
        terms = [(T.kron(a, c), T.kron(b, e)) for b, a in pre_terms for c, e in post_terms]
        s = s.with_terms(terms)
    return s


def is_k_complete_ebsc_sidefree(pre: Channel, post: Channel, k: int, samples: int = 200, seed=0,
                                tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """Conjunction of ``pre`` being k-EB and ``post`` being EB."""
    v_pre = is_k_ebc(pre, k, samples, seed, tol)
    v_post = C.is_eb(post, tol)
    combined = SEP.combine([v_pre, v_post])
    if combined.outcome == SEP.SEPARABLE:
        return Verdict(SEP.SEPARABLE, combined.cut, criterion="k-ebc-pre-and-eb-post",
                       tests_run=combined.tests_run, notes={"pre": v_pre.criterion, "post": v_post.criterion})
    return combined


# -- iteration -------------------------------------------------------------------


def iterate_concatenation(ch: Channel, m: int) -> Channel:
    """``ch o ch o ... o ch`` (``m`` factors)."""
    if int(m) != m or m < 1:
        raise BadParam(f"m must be a positive integer, got {m}")
    if ch.in_dims != ch.out_dims:
        raise BadParam("concatenation needs equal input and output dimensions")
    out = ch
    for _ in range(int(m) - 1):
        out = C.compose(ch, out)
    return out


def iteration_count(d: int, k: int) -> int:
    """``ceil((d - 1) / (k - 1))`` concatenations make a k-EB channel fully EB."""
    if k < 2:
        raise BadParam("the iteration count needs k >= 2")
    if d < 2:
        raise BadParam("d must be at least 2")
    return -(-(d - 1) // (k - 1))


# -- sweeps -----------------------------------------------------------------------


def parse_range(spec: str) -> list[float]:
    """``"A:B:STEP"`` -> inclusive grid, rounded to 12 decimals."""
    try:
        a, b, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise BadParam(f"range {spec!r} must look like A:B:STEP") from None
    if step <= 0 or b < a:
        raise BadParam(f"range {spec!r} needs STEP > 0 and B >= A")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 12) for i in range(n)]


SWEEP_COLUMNS = ["d", "k", "beta", "verdict", "min_pt_eig", "witness_projector_id"]


def threshold_sweep(d: int, k: int, betas, samples: int = 200, seed=0, tol: Tolerance = DEFAULT_TOL) -> list[dict]:
    rows = []
    for beta in betas:
        v = is_k_ebc(werner_channel(WernerParams(d, beta)), k, samples, seed, tol)
        rows.append({
            "d": d, "k": k, "beta": beta, "verdict": v.outcome,
            "min_pt_eig": v.min_pt_eig, "witness_projector_id": v.notes.get("witness_projector_id") or "",
        })
    return rows


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "min_pt_eig": repr(float(r["min_pt_eig"]))})
    return buf.getvalue()
