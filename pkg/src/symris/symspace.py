"""Dicke-basis machinery for the symmetric subspace of N qubits.

Composite index convention for a k|N-k cut: the pair (a, b), with a the
excitation count of the k-qubit block and b that of the (N-k)-qubit block,
maps to ``a * (N - k + 1) + b``. Partial transposition relies on it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, sqrt

import numpy as np

BINOMIAL_NMAX = 64
FULL_SPACE_NMAX = 14

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


class InvalidStateError(ValueError):
    """Raised when a matrix violates one of the density-matrix invariants."""


@dataclass(frozen=True)
class DickeIndex:
    alpha: int
    n_qubits: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if not 0 <= self.alpha <= self.n_qubits:
            raise ValueError(f"alpha={self.alpha} outside [0, {self.n_qubits}]")


@dataclass(frozen=True, eq=False)
class SymState:
    """Density matrix of N symmetric qubits in the Dicke basis.

    ``matrix[a, b]`` is <D^a_N| rho |D^b_N>. Construction validates
    Hermiticity, unit trace and positivity unless ``check=False``.
    """

    n_qubits: int
    matrix: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.n_qubits + 1, self.n_qubits + 1):
            raise InvalidStateError(
                f"matrix shape {m.shape} does not match N={self.n_qubits}"
            )
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.check:
            validate_density(m)

    @property
    def dim(self) -> int:
        return self.n_qubits + 1

    def purity(self) -> float:
        m = self.matrix
        return float(np.real(np.vdot(m, m)))

    @classmethod
    def from_vector(cls, psi, n_qubits: int | None = None) -> "SymState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        n = len(psi) - 1 if n_qubits is None else n_qubits
        return cls(n, np.outer(psi, psi.conj()))

    @classmethod
    def dicke(cls, alpha: int, n_qubits: int) -> "SymState":
        DickeIndex(alpha, n_qubits)
        psi = np.zeros(n_qubits + 1, dtype=complex)
        psi[alpha] = 1.0
        return cls.from_vector(psi)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "SymState":
        return cls(n_qubits, np.eye(n_qubits + 1) / (n_qubits + 1))


def validate_density(m: np.ndarray) -> None:
    """Check the three density-matrix invariants, naming the one violated."""
    herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if herm > HERMITIAN_TOL:
        raise InvalidStateError(f"not Hermitian: residual {herm:.3e}")
    tr = np.trace(m).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"trace is {tr!r}, expected 1")
    lam = np.linalg.eigvalsh(m)[0]
    if lam < -PSD_TOL:
        raise InvalidStateError(f"not positive semidefinite: min eigenvalue {lam:.3e}")


@lru_cache(maxsize=None)
def binomial_table(n_max: int) -> tuple[tuple[int, ...], ...]:
    """Pascal triangle as exact Python integers, ``table[n][m] = C(n, m)``."""
    if n_max < 0 or n_max > BINOMIAL_NMAX:
        raise ValueError(f"n_max={n_max} outside [0, {BINOMIAL_NMAX}]")
    rows = [(1,)]
    for n in range(1, n_max + 1):
        prev = rows[-1]
        rows.append((1,) + tuple(prev[m - 1] + prev[m] for m in range(1, n)) + (1,))
    return tuple(rows)


def binomial(n: int, m: int) -> int:
    if not 0 <= m <= n:
        raise ValueError(f"C({n}, {m}) undefined")
    if n > BINOMIAL_NMAX:
        raise OverflowError(f"C({n}, {m}) beyond the tabulated range n <= {BINOMIAL_NMAX}")
    return binomial_table(n)[n][m]


def _pascal_row(n: int) -> list[int]:
    row = [1] * (n + 1)
    for m in range(1, n + 1):
        row[m] = row[m - 1] * (n - m + 1) // m
    return row


@lru_cache(maxsize=256)
def split_coefficients(n_left: int, n_right: int) -> np.ndarray:
    """Table ``c[a, b] = sqrt(C(n_left, a) C(n_right, b) / C(n_left + n_right, a + b))``.

    These are the amplitudes of |D^a_{n_left}> (x) |D^b_{n_right}> in
    |D^{a+b}_{n_left + n_right}>. Used for any split, including the
    unbalanced ones needed when tracing out ancilla qubits.
    """
    n = n_left + n_right
    left, right, full = _pascal_row(n_left), _pascal_row(n_right), _pascal_row(n)
    c = np.empty((n_left + 1, n_right + 1))
    for a in range(n_left + 1):
        ca = left[a]
        for b in range(n_right + 1):
            # int / int is correctly rounded even for huge operands
            c[a, b] = sqrt(ca * right[b] / full[a + b])
    c.setflags(write=False)
    return c


@dataclass(frozen=True, eq=False)
class BipartiteEmbedding:
    n_qubits: int
    k: int
    coeff: np.ndarray = field(repr=False)

    @property
    def dims(self) -> tuple[int, int]:
        return self.k + 1, self.n_qubits - self.k + 1

    @property
    def dim(self) -> int:
        da, db = self.dims
        return da * db

    def index(self, a: int, b: int) -> int:
        return a * (self.n_qubits - self.k + 1) + b


@lru_cache(maxsize=None)
def _isometry(n_qubits: int, k: int) -> np.ndarray:
    # V[(a,b), alpha] = c(a,b) delta_{a+b, alpha}; rho -> V rho V^T
    c = split_coefficients(k, n_qubits - k)
    v = np.zeros(((k + 1) * (n_qubits - k + 1), n_qubits + 1))
    for a in range(k + 1):
        for b in range(n_qubits - k + 1):
            v[a * (n_qubits - k + 1) + b, a + b] = c[a, b]
    v.setflags(write=False)
    return v


def make_embedding(n_qubits: int, k: int) -> BipartiteEmbedding:
    if not 1 <= k <= n_qubits // 2:
        raise ValueError(f"cut size k={k} outside [1, {n_qubits // 2}] for N={n_qubits}")
    return BipartiteEmbedding(n_qubits, k, split_coefficients(k, n_qubits - k))


def cuts(n_qubits: int) -> range:
    """Distinct bipartition sizes k of N symmetric qubits."""
    return range(1, n_qubits // 2 + 1)


def embed_bipartite(rho: SymState, emb: BipartiteEmbedding) -> np.ndarray:
    """Rewrite ``rho`` in the Dicke(k) x Dicke(N-k) product basis."""
    if emb.n_qubits != rho.n_qubits:
        raise ValueError(
            f"embedding built for N={emb.n_qubits}, state has N={rho.n_qubits}"
        )
    v = _isometry(emb.n_qubits, emb.k)
    return v @ rho.matrix @ v.T


# ---------------------------------------------------------------- full space
# Brute-force constructions in the 2^N computational basis. Oracle use only.


def _check_full(n_qubits: int) -> None:
    if n_qubits > FULL_SPACE_NMAX:
        raise ValueError(f"full-space construction limited to N <= {FULL_SPACE_NMAX}")


def dicke_vector_full(alpha: DickeIndex | int, n_qubits: int | None = None) -> np.ndarray:
    """|D^alpha_N> as a vector of length 2^N (qubit 1 is the most significant bit)."""
    if not isinstance(alpha, DickeIndex):
        alpha = DickeIndex(alpha, n_qubits)
    n = alpha.n_qubits
    _check_full(n)
    weights = np.array([bin(i).count("1") for i in range(2**n)])
    v = np.zeros(2**n, dtype=complex)
    v[weights == alpha.alpha] = 1.0 / np.sqrt(comb(n, alpha.alpha))
    return v


def dicke_basis_full(n_qubits: int) -> np.ndarray:
    """Columns are the N+1 Dicke vectors in the computational basis."""
    return np.stack([dicke_vector_full(a, n_qubits) for a in range(n_qubits + 1)], axis=1)


def to_full_space(rho: SymState) -> np.ndarray:
    d = dicke_basis_full(rho.n_qubits)
    return d @ rho.matrix @ d.conj().T


def partial_trace_full(rho_full: np.ndarray, n_qubits: int, keep: int) -> np.ndarray:
    """Trace out the last ``n_qubits - keep`` qubits."""
    dk, dt = 2**keep, 2 ** (n_qubits - keep)
    return np.einsum("aibi->ab", rho_full.reshape(dk, dt, dk, dt))


def partial_transpose_full(rho_full: np.ndarray, n_qubits: int, k: int) -> np.ndarray:
    """Transpose the first ``k`` qubits."""
    da, db = 2**k, 2 ** (n_qubits - k)
    return rho_full.reshape(da, db, da, db).transpose(2, 1, 0, 3).reshape(da * db, da * db)


def weight_enumeration(n_qubits: int, alpha: int) -> list[tuple[int, ...]]:
    """All bit strings of length N with Hamming weight alpha."""
    return [
        tuple(1 if i in ones else 0 for i in range(n_qubits))
        for ones in itertools.combinations(range(n_qubits), alpha)
    ]

