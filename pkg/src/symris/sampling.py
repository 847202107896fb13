"""Random induced symmetric states (Methods I and II).

Every trial draws from its own generator, keyed by ``(seed, stream_index)``
through :class:`numpy.random.SeedSequence`, so results do not depend on
the order in which trials are executed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .symspace import SymState, split_coefficients


class Method(str, Enum):
    MI = "MI"
    MII = "MII"


MI_MAX_QUBITS = 4096
MII_MAX_DIM = 2**20


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_index: int = 0

    def __post_init__(self):
        if self.stream_index < 0:
            raise ValueError("stream_index must be >= 0")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed & (2**64 - 1), spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class MethodParams:
    """Generation parameters.

    ``ancilla`` is the number of traced qubits N_a for Method I and the
    qudit dimension d_a for Method II.
    """

    method: Method
    n_qubits: int
    ancilla: int

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.n_qubits < 2:
            raise ValueError(f"n_qubits must be >= 2, got {self.n_qubits}")
        if self.method is Method.MI:
            if self.ancilla < 1:
                raise ValueError(f"Method I needs N_a >= 1, got {self.ancilla}")
            if self.n_qubits + self.ancilla > MI_MAX_QUBITS:
                raise ValueError(f"N + N_a = {self.n_qubits + self.ancilla} exceeds {MI_MAX_QUBITS}")
        else:
            if self.ancilla < 1:
                raise ValueError(f"Method II needs d_a >= 1, got {self.ancilla}")
            if (self.n_qubits + 1) * self.ancilla > MII_MAX_DIM:
                raise ValueError(f"(N+1) d_a exceeds {MII_MAX_DIM}")

    @property
    def global_dim(self) -> int:
        if self.method is Method.MI:
            return self.n_qubits + self.ancilla + 1
        return (self.n_qubits + 1) * self.ancilla


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def random_pure(dim: int, rng) -> np.ndarray:
    """Unit vector distributed according to the unitarily invariant measure.

    Real and imaginary parts are independent normals of variance 1/2,
    drawn as one block of ``2 * dim`` reals (real parts first).
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    g = _gen(rng)
    x = g.normal(scale=np.sqrt(0.5), size=2 * dim)
    psi = x[:dim] + 1j * x[dim:]
    return psi / np.linalg.norm(psi)


def reduce_method1(psi: np.ndarray, n_qubits: int, n_ancilla: int) -> np.ndarray:
    """Trace ``n_ancilla`` qubits out of a symmetric pure state given in the Dicke basis.

    rho[a, b] = sum_j c(a, j) c(b, j) psi[a + j] conj(psi[b + j]).
    """
    c = split_coefficients(n_qubits, n_ancilla)
    j = np.arange(n_ancilla + 1)
    idx = np.arange(n_qubits + 1)[:, None] + j[None, :]
    a = c * psi[idx]
    return a @ a.conj().T


def ris_method1(params: MethodParams, rng) -> SymState:
    if params.method is not Method.MI:
        raise ValueError("ris_method1 needs Method I parameters")
    psi = random_pure(params.global_dim, rng)
    rho = reduce_method1(psi, params.n_qubits, params.ancilla)
    return _finish(params.n_qubits, rho)


def ris_method2(params: MethodParams, rng) -> SymState:
    if params.method is not Method.MII:
        raise ValueError("ris_method2 needs Method II parameters")
    psi = random_pure(params.global_dim, rng)
    a = psi.reshape(params.n_qubits + 1, params.ancilla)
    return _finish(params.n_qubits, a @ a.conj().T)


def generate(params: MethodParams, rng) -> SymState:
    if params.method is Method.MI:
        return ris_method1(params, rng)
    return ris_method2(params, rng)


def _finish(n_qubits: int, rho: np.ndarray) -> SymState:
    # exact Hermitian symmetrization and renormalization against rounding
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return SymState(n_qubits, rho, check=False)


# ------------------------------------------------------------------ file I/O


def state_to_json(rho: SymState) -> dict:
    return {
        "n_qubits": rho.n_qubits,
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in rho.matrix],
    }


def state_from_json(doc: dict) -> SymState:
    """Parse the state document; raises InvalidStateError on violated invariants."""
    try:
        n = int(doc["n_qubits"])
        m = np.array(doc["matrix"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed state document: {exc}") from exc
    if m.ndim != 3 or m.shape[-1] != 2:
        raise ValueError("matrix must be a nested list of [re, im] pairs")
    return SymState(n, m[..., 0] + 1j * m[..., 1])


def save_state(rho: SymState, path: str | Path) -> None:
    Path(path).write_text(json.dumps(state_to_json(rho)))


def load_state(path: str | Path) -> SymState:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"cannot parse state file {path}: {exc}") from exc
    return state_from_json(doc)
