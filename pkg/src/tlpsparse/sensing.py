"""Experiment matrix families, sparse test signals, and coherence diagnostics.

Two families are generated:

* correlated Gaussian — rows drawn from N(0, Sigma) with
  Sigma = (1 - r) I + r J, realized per row as sqrt(1-r) z + sqrt(r) g 1
  for z ~ N(0, I_N) and a scalar g ~ N(0, 1);
* over-sampled DCT — column i is cos(2 pi (i-1) w / F) / sqrt(M) for a
  single frequency vector w drawn uniformly from (0, 1)^M; small F spreads
  the columns, large F makes neighbouring columns nearly parallel (high
  mutual coherence).

All randomness flows through PCG64 seeded explicitly, so regenerating with
the same arguments is bit-for-bit reproducible.  Matrices are immutable
after creation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("gaussian", "dct", "external")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(master: int, *parts) -> int:
    """Deterministic 64-bit sub-stream seed from a master seed and tags.

    Strings are folded in via SHA-256 so labels hash identically across
    processes and platforms; distinct tag tuples give independent streams.
    """
    ints = [int(master) & 0xFFFFFFFFFFFFFFFF]
    for part in parts:
        if isinstance(part, str):
            digest = hashlib.sha256(part.encode("utf-8")).digest()
            ints.append(int.from_bytes(digest[:8], "little"))
        else:
            ints.append(int(part) & 0xFFFFFFFFFFFFFFFF)
    ss = np.random.SeedSequence(ints)
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SensingMatrix:
    """Dense measurement matrix plus the recipe that generated it."""

    entries: np.ndarray
    family: str = "external"
    param: float | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise ValueError("entries must be a nonempty 2-D array")
        if not np.all(np.isfinite(entries)):
            raise ValueError("entries must be finite")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True)
class SparseSignal:
    """Ground-truth vector that is exactly zero off its support."""

    vector: np.ndarray
    support: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vec = np.asarray(self.vector, dtype=float)
        sup = np.asarray(self.support, dtype=int)
        off = np.setdiff1d(np.arange(vec.size), sup)
        if np.any(vec[off] != 0.0):
            raise ValueError("vector has nonzeros off the declared support")
        vec.setflags(write=False)
        sup.setflags(write=False)
        object.__setattr__(self, "vector", vec)
        object.__setattr__(self, "support", sup)

    @property
    def sparsity(self) -> int:
        return int(self.support.size)


def gen_gaussian(M: int, N: int, r: float, seed: int,
                 normalize: bool = False) -> SensingMatrix:
    """Rows i.i.d. from N(0, (1-r) I + r J); r = 0 is the classic i.i.d. case.

    Columns keep their natural scale unless ``normalize`` asks for unit l2
    columns.
    """
    if not (0.0 <= r < 1.0):
        raise ValueError("correlation r must lie in [0, 1)")
    if M < 1 or N < 1:
        raise ValueError("M and N must be positive")
    rng = _rng(seed)
    z = rng.standard_normal((M, N))
    g = rng.standard_normal((M, 1))
    entries = np.sqrt(1.0 - r) * z + np.sqrt(r) * g
    A = SensingMatrix(entries=entries, family="gaussian", param=r, seed=seed)
    return normalize_columns(A) if normalize else A


def gen_dct(M: int, N: int, F: float, seed: int,
            normalize: bool = False) -> SensingMatrix:
    """Over-sampled DCT columns sharing one random frequency vector."""
    if F <= 0:
        raise ValueError("frequency parameter F must be positive")
    if M < 1 or N < 1:
        raise ValueError("M and N must be positive")
    rng = _rng(seed)
    w = rng.random(M)
    idx = np.arange(N)
    entries = np.cos(2.0 * np.pi * np.outer(w, idx) / F) / np.sqrt(M)
    A = SensingMatrix(entries=entries, family="dct", param=F, seed=seed)
    return normalize_columns(A) if normalize else A


def coherence(A: SensingMatrix | np.ndarray) -> float:
    """Largest |cos angle| between two distinct columns, in [0, 1]."""
    entries = A.entries if isinstance(A, SensingMatrix) else np.asarray(A, float)
    norms = np.linalg.norm(entries, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("matrix has an all-zero column")
    G = np.abs((entries / norms).T @ (entries / norms))
    np.fill_diagonal(G, 0.0)
    return float(min(G.max(), 1.0))


def gen_signal(N: int, s: int, seed: int, values: str = "gaussian") -> SparseSignal:
    """Uniformly random support of size s with i.i.d. nonzero values.

    ``values`` selects the nonzero law: standard normal (default) or
    Rademacher +-1.
    """
    if not (1 <= s <= N):
        raise ValueError("sparsity s must satisfy 1 <= s <= N")
    if values not in ("gaussian", "rademacher"):
        raise ValueError("values must be 'gaussian' or 'rademacher'")
    rng = _rng(seed)
    support = rng.choice(N, size=s, replace=False)
    vec = np.zeros(N)
    if values == "gaussian":
        vec[support] = rng.standard_normal(s)
    else:
        vec[support] = rng.choice([-1.0, 1.0], size=s)
    return SparseSignal(vector=vec, support=np.sort(support))


def normalize_columns(A: SensingMatrix) -> SensingMatrix:
    """Copy of A with unit l2 columns (neither family is normalized by default)."""
    norms = np.linalg.norm(A.entries, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("matrix has an all-zero column")
    return SensingMatrix(entries=A.entries / norms, family=A.family,
                         param=A.param, seed=A.seed)


def save_matrix_csv(A: SensingMatrix | np.ndarray, path: str) -> None:
    """Write the plain-text matrix format: header line "M,N", then M rows.

    Values carry 17 significant digits, enough for exact float64
    round-trips.
    """
    entries = A.entries if isinstance(A, SensingMatrix) else np.asarray(A, float)
    M, N = entries.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{M},{N}\n")
        for row in entries:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_matrix_csv(path: str) -> SensingMatrix:
    """Parse the format written by :func:`save_matrix_csv`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        try:
            M, N = (int(tok) for tok in header.split(","))
        except ValueError as exc:
            raise ValueError(f"bad matrix header {header!r} in {path}") from exc
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            vals = [float(tok) for tok in line.split(",")]
            if len(vals) != N:
                raise ValueError(f"{path}:{lineno}: expected {N} values, "
                                 f"got {len(vals)}")
            rows.append(vals)
    if len(rows) != M:
        raise ValueError(f"{path}: expected {M} rows, got {len(rows)}")
    return SensingMatrix(entries=np.array(rows), family="external")
