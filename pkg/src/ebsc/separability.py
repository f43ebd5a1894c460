"""Three-valued separability decisions with re-checkable evidence.

Every verdict is produced by a fixed ladder of tests. Entangled verdicts carry
a witness (a partial-transpose eigenvector or a realignment value) and
Separable verdicts carry either verified product terms or the name of the
sufficient criterion that fired.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import tensor as T
from .errors import BadCut, NotPSD
from .tensor import DEFAULT_TOL, LabeledMatrix, Tolerance

ENTANGLED = "Entangled"
SEPARABLE = "Separable"
INCONCLUSIVE = "Inconclusive"

Cut = tuple[tuple[str, ...], tuple[str, ...]]
Terms = Sequence[tuple[LabeledMatrix, LabeledMatrix]]

# pairs of local dimensions where PPT implies separability
LOW_DIM_CUTS = {(2, 2), (2, 3), (3, 2)}


@dataclass(frozen=True, eq=False)
class Verdict:
    outcome: str
    cut: Cut
    criterion: str | None = None
    min_pt_eig: float | None = None
    witness: np.ndarray | None = None
    realignment: float | None = None
    certificate: tuple[tuple[LabeledMatrix, LabeledMatrix], ...] | None = None
    tests_run: tuple[str, ...] = ()
    notes: dict = field(default_factory=dict)

    @property
    def entangled(self) -> bool:
        return self.outcome == ENTANGLED

    @property
    def separable(self) -> bool:
        return self.outcome == SEPARABLE

    def recheck(self, rho: LabeledMatrix, tol: Tolerance = DEFAULT_TOL) -> bool:
        """Re-verify the stored evidence against ``rho``."""
        if self.outcome == ENTANGLED:
            if self.criterion == "ppt":
                val = witness_value(rho, self.cut, self.witness)
                return abs(val - self.min_pt_eig) <= 1e-12 * max(1.0, T.inf_norm(rho.data)) and (
                    val < -tol.eps_psd * T.inf_norm(rho.data)
                )
            if self.criterion == "realignment":
                val = realignment(rho, self.cut)
                return abs(val - self.realignment) <= 1e-12 * max(1.0, val) and val > rho.trace().real * (
                    1 + tol.eps_eq
                )
            return False
        if self.outcome == SEPARABLE:
            if self.certificate is not None:
                return verify_product_decomposition(self.certificate, rho, self.cut, tol)
            return self.criterion is not None
        return True

    def to_dict(self) -> dict:
        out = {
            "outcome": self.outcome,
            "cut": [list(self.cut[0]), list(self.cut[1])],
            "criterion": self.criterion,
            "min_pt_eig": self.min_pt_eig,
            "realignment": self.realignment,
            "witness": None,
            "certificate": None,
            "tests_run": list(self.tests_run),
        }
        if self.witness is not None:
            out["witness"] = [[float(z.real), float(z.imag)] for z in self.witness]
        if self.certificate is not None:
            out["certificate"] = [{"left": m.to_dict(), "right": n.to_dict()} for m, n in self.certificate]
        if self.notes:
            out["notes"] = dict(self.notes)
        return out

    def summary(self) -> dict:
        """Compact JSON form without the certificate matrices."""
        out = self.to_dict()
        if self.certificate is not None:
            out["certificate"] = f"{len(self.certificate)} product terms"
        return out


def check_cut(rho: LabeledMatrix, cut) -> Cut:
    try:
        left, right = cut
    except (TypeError, ValueError):
        raise BadCut(f"cut must be a pair of label lists, got {cut!r}") from None
    left, right = tuple(left), tuple(right)
    if isinstance(cut[0], str) or isinstance(cut[1], str):
        raise BadCut("cut sides must be sequences of label names")
    names = left + right
    if len(set(names)) != len(names) or sorted(names) != sorted(rho.names):
        raise BadCut(f"cut {left}:{right} is not a partition of {rho.names}")
    return left, right


def parse_cut(spec: str) -> Cut:
    """``"A0,A1:B0,B1"`` -> ``(("A0", "A1"), ("B0", "B1"))``."""
    if spec.count(":") != 1:
        raise BadCut(f"cut spec {spec!r} must contain exactly one ':'")
    left, right = spec.split(":")
    split = lambda s: tuple(x.strip() for x in s.split(",") if x.strip())
    return split(left), split(right)


def _side_dim(rho: LabeledMatrix, side: Sequence[str]) -> int:
    return int(np.prod([rho.dim_of(n) for n in side], dtype=np.int64))


def ppt(rho: LabeledMatrix, cut, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, float, np.ndarray]:
    """PPT test by transposing the right side of the cut.

    Returns ``(is_ppt, min_eig, witness)``; ``is_ppt`` uses the relative
    threshold ``-eps_psd * |rho|_inf``.
    """
    left, right = check_cut(rho, cut)
    pt = T.partial_transpose(rho, right)
    lam, vec = T.min_eig_hermitian(pt, tol)
    return lam >= -tol.eps_psd * T.inf_norm(rho.data), lam, vec


def witness_value(rho: LabeledMatrix, cut, w: np.ndarray) -> float:
    """``<w| rho^Gamma |w>`` with the transpose on the right side of the cut."""
    pt = T.partial_transpose(rho, check_cut(rho, cut)[1])
    return float(np.real(np.vdot(w, pt.data @ w)))


def gurvits_value(rho: LabeledMatrix) -> float:
    """Smallest ``|A|_F`` such that ``rho = c (I + A)`` for some ``c > 0``.

    Minimizing ``|t rho - I|_F`` over ``t`` gives ``t = Tr(rho) / |rho|_F^2``
    and a closed-form residual.
    """
    fro2 = float(np.linalg.norm(rho.data) ** 2)
    tr = float(rho.trace().real)
    if fro2 == 0 or tr <= 0:
        return float("inf")
    return float(np.sqrt(max(rho.side - tr * tr / fro2, 0.0)))


def gurvits_ball(rho: LabeledMatrix, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True when ``rho`` lies in the separable ball around the identity."""
    if not rho.is_hermitian(tol.eps_eq):
        return False
    return gurvits_value(rho) <= 1 + tol.eps_eq


def realigned(rho: LabeledMatrix, cut) -> np.ndarray:
    left, right = check_cut(rho, cut)
    dl, dr = _side_dim(rho, left), _side_dim(rho, right)
    m = T.permute_systems(rho, left + right).data.reshape(dl, dr, dl, dr)
    # rows run over entries of the left operator, columns over the right one
    return m.transpose(0, 2, 1, 3).reshape(dl * dl, dr * dr)


def realignment(rho: LabeledMatrix, cut) -> float:
    """Trace norm of the realigned matrix; exceeds ``Tr rho`` only for entangled states."""
    return float(np.sum(np.linalg.svd(realigned(rho, cut), compute_uv=False)))


def verify_product_decomposition(terms: Terms, rho: LabeledMatrix, cut, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Check that every pair is PSD and that ``sum M (x) N`` equals ``rho``."""
    left, right = check_cut(rho, cut)
    if not terms:
        return False
    acc = np.zeros_like(rho.data)
    for m, n in terms:
        if sorted(m.names) != sorted(left) or sorted(n.names) != sorted(right):
            raise BadCut(f"term labels {m.names}/{n.names} do not match cut {left}:{right}")
        for part in (m, n):
            if not part.is_psd(tol):
                return False
        acc = acc + T.permute_systems(T.kron(m, n), rho.names).data
    return T.allclose_rel(acc, rho.data, tol.eps_eq)


def product_candidate(rho: LabeledMatrix, cut) -> list[tuple[LabeledMatrix, LabeledMatrix]]:
    """The single term ``rho_L (x) rho_R / Tr rho`` built from the marginals."""
    left, right = check_cut(rho, cut)
    tr = rho.trace().real
    if tr <= 0:
        return []
    return [(T.partial_trace(rho, right) / tr, T.partial_trace(rho, left))]


def classical_register_terms(rho: LabeledMatrix, cut, side: int = 1, tol: Tolerance = DEFAULT_TOL):
    """Terms ``rho_x (x) |x><x|`` when one side of the cut is a classical register.

    Returns ``None`` unless every off-diagonal block on that side vanishes.
    """
    left, right = check_cut(rho, cut)
    reg = right if side == 1 else left
    other = left if side == 1 else right
    dims = [rho.dim_of(n) for n in reg]
    m = T.permute_systems(rho, other + reg)
    dr = int(np.prod(dims, dtype=np.int64))
    do = m.side // dr
    t = m.data.reshape(do, dr, do, dr)
    off = t.copy()
    for x in range(dr):
        off[:, x, :, x] = 0
    if T.inf_norm(off) > tol.eps_eq * T.inf_norm(rho.data):
        return None
    reg_labels = [(n, rho.dim_of(n)) for n in reg]
    other_labels = [(n, rho.dim_of(n)) for n in other]
    terms = []
    for x in range(dr):
        block = t[:, x, :, x]
        if T.inf_norm(block) == 0:
            continue
        proj = T.basis_projector(reg_labels, np.unravel_index(x, dims))
        blk = LabeledMatrix(other_labels, block)
        terms.append((blk, proj) if side == 1 else (proj, blk))
    return terms


def decide(rho: LabeledMatrix, cut, tol: Tolerance = DEFAULT_TOL, decomposition: Terms | None = None) -> Verdict:
    """Run the decision ladder on ``rho`` across ``cut``.

    Order: NPT, realignment, low-dimensional PPT, Gurvits ball, then explicit
    decompositions (the caller's first, then automatic candidates built from
    the marginals or a classical register).
    """
    left, right = cut = check_cut(rho, cut)
    scale = T.inf_norm(rho.data)
    if not rho.is_hermitian(tol.eps_eq):
        raise NotPSD("operand is not Hermitian")
    lam_min = T.min_eig_hermitian(rho, tol)[0]
    if lam_min < -tol.eps_psd * scale:
        raise NotPSD(f"operand has eigenvalue {lam_min:.3e}")
    tests = []
    if not left or not right or scale == 0:
        tests.append("trivial-cut")
        return Verdict(SEPARABLE, cut, criterion="trivial-cut", tests_run=tuple(tests))

    tests.append("ppt")
    is_ppt, lam, vec = ppt(rho, cut, tol)
    if not is_ppt:
        return Verdict(ENTANGLED, cut, criterion="ppt", min_pt_eig=lam, witness=vec, tests_run=tuple(tests))

    tests.append("realignment")
    r = realignment(rho, cut)
    if r > rho.trace().real * (1 + tol.eps_eq):
        return Verdict(ENTANGLED, cut, criterion="realignment", min_pt_eig=lam, realignment=r, tests_run=tuple(tests))

    base = dict(min_pt_eig=lam, realignment=r)
    tests.append("ppt-low-dim")
    if (_side_dim(rho, left), _side_dim(rho, right)) in LOW_DIM_CUTS:
        return Verdict(SEPARABLE, cut, criterion="ppt-low-dim", tests_run=tuple(tests), **base)

    tests.append("gurvits-ball")
    if gurvits_ball(rho, tol):
        return Verdict(SEPARABLE, cut, criterion="gurvits-ball", tests_run=tuple(tests), **base)

    candidates = []
    if decomposition is not None:
        candidates.append(("decomposition", list(decomposition)))
    candidates.append(("product-marginals", product_candidate(rho, cut)))
    for side in (1, 0):
        terms = classical_register_terms(rho, cut, side, tol)
        if terms:
            candidates.append(("classical-register", terms))
    for name, terms in candidates:
        tests.append(name)
        if terms and verify_product_decomposition(terms, rho, cut, tol):
            return Verdict(SEPARABLE, cut, criterion=name, certificate=tuple(terms), tests_run=tuple(tests), **base)
    return Verdict(INCONCLUSIVE, cut, tests_run=tuple(tests), **base)


def combine(verdicts: Sequence[Verdict], cut: Cut = ((), ())) -> Verdict:
    """Conservative conjunction: Entangled dominates, then Inconclusive."""
    for outcome in (ENTANGLED, INCONCLUSIVE):
        for v in verdicts:
            if v.outcome == outcome:
                return v
    return Verdict(SEPARABLE, cut, criterion="all-separable", tests_run=tuple(t for v in verdicts for t in v.tests_run))
