"""Seeded random states, channels and instruments for property checks."""

from __future__ import annotations

import numpy as np

from . import channels as C
from .channels import Channel, Instrument
from .tensor import LabeledMatrix


def rng(seed=None) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ginibre(gen: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (gen.standard_normal((rows, cols)) + 1j * gen.standard_normal((rows, cols))) / np.sqrt(2)


def haar_isometry(gen: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """``rows x cols`` isometry (``cols <= rows``) from QR of a Gaussian matrix."""
    q, r = np.linalg.qr(ginibre(gen, rows, cols))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def haar_unitary(gen: np.random.Generator, d: int) -> np.ndarray:
    return haar_isometry(gen, d, d)


def random_psd(gen: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    g = ginibre(gen, d, rank or d)
    return g @ g.conj().T


def random_density(gen: np.random.Generator, labels, rank: int | None = None) -> LabeledMatrix:
    labels = list(labels)
    d = int(np.prod([dd for _, dd in labels], dtype=np.int64))
    m = random_psd(gen, d, rank)
    return LabeledMatrix(labels, m / np.trace(m).real)


def random_kraus(gen: np.random.Generator, d_in: int, d_out: int, n: int) -> list[np.ndarray]:
    v = haar_isometry(gen, d_out * n, d_in)
    return [v[k * d_out:(k + 1) * d_out] for k in range(n)]


def random_channel(gen: np.random.Generator, in_space, out_space, n_kraus: int = 2) -> Channel:
    """CPTP map from a Haar-random Stinespring isometry."""
    in_space, out_space = list(in_space), list(out_space)
    d_in = int(np.prod([d for _, d in in_space], dtype=np.int64))
    d_out = int(np.prod([d for _, d in out_space], dtype=np.int64))
    kraus = random_kraus(gen, d_in, d_out, n_kraus)
    return C.choi_from_kraus(kraus, [n for n, _ in in_space], [n for n, _ in out_space],
                             [d for _, d in in_space], [d for _, d in out_space])


def random_instrument(gen: np.random.Generator, in_space, out_space, outcomes: int = 2,
                      kraus_per_branch: int = 1) -> Instrument:
    """Instrument whose branches share one random Stinespring isometry."""
    in_space, out_space = list(in_space), list(out_space)
    d_in = int(np.prod([d for _, d in in_space], dtype=np.int64))
    d_out = int(np.prod([d for _, d in out_space], dtype=np.int64))
    kraus = random_kraus(gen, d_in, d_out, outcomes * kraus_per_branch)
    branches = []
    for x in range(outcomes):
        ks = kraus[x * kraus_per_branch:(x + 1) * kraus_per_branch]
        branches.append(C.choi_from_kraus(ks, [n for n, _ in in_space], [n for n, _ in out_space],
                                          [d for _, d in in_space], [d for _, d in out_space]))
    return Instrument(tuple(branches))


def random_povm(gen: np.random.Generator, labels, outcomes: int = 2) -> Instrument:
    labels = list(labels)
    d = int(np.prod([dd for _, dd in labels], dtype=np.int64))
    v = haar_isometry(gen, d * outcomes, d)
    elems = []
    for x in range(outcomes):
        k = v[x * d:(x + 1) * d]
        elems.append(k.conj().T @ k)
    return C.povm(elems, labels)
