"""Partial transposition across k|N-k cuts and per-cut PPT flags."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symspace import HERMITIAN_TOL, SymState, cuts, embed_bipartite, make_embedding

TAU_PPT = 1e-9


class EigensolverError(RuntimeError):
    def __init__(self, k: int, cause: Exception):
        super().__init__(f"eigensolver failed on cut k={k}: {cause}")
        self.k = k


@dataclass(frozen=True)
class PartitionFlags:
    """PPT data per cut. ``ppt[k]`` is True when the k|N-k transpose is PSD within tau."""

    n_qubits: int
    min_eig: dict[int, float]
    tau: float = TAU_PPT

    @property
    def ppt(self) -> dict[int, bool]:
        return {k: lam >= -self.tau for k, lam in self.min_eig.items()}

    @property
    def ppt_cuts(self) -> tuple[int, ...]:
        return tuple(k for k, ok in self.ppt.items() if ok)

    @property
    def all_ppt(self) -> bool:
        return all(self.ppt.values())

    @property
    def all_npt(self) -> bool:
        return not any(self.ppt.values())

    def labels(self) -> dict[int, str]:
        return {k: "PPT" if ok else "NPT" for k, ok in self.ppt.items()}


def partial_transpose(rho: SymState, k: int) -> np.ndarray:
    """Transpose the k-qubit block of ``rho`` written on the k|N-k cut."""
    emb = make_embedding(rho.n_qubits, k)
    m = embed_bipartite(rho, emb)
    da, db = emb.dims
    return m.reshape(da, db, da, db).transpose(2, 1, 0, 3).reshape(da * db, da * db)


def pt_spectrum(rho: SymState, k: int) -> np.ndarray:
    mt = partial_transpose(rho, k)
    herm = np.max(np.abs(mt - mt.conj().T))
    if herm > HERMITIAN_TOL:
        raise ValueError(f"partial transpose not Hermitian on k={k} (residual {herm:.2e})")
    try:
        return np.linalg.eigvalsh(mt)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(k, exc) from exc


def ppt_flags(rho: SymState, tau: float = TAU_PPT) -> PartitionFlags:
    min_eig = {k: float(pt_spectrum(rho, k)[0]) for k in cuts(rho.n_qubits)}
    return PartitionFlags(rho.n_qubits, min_eig, tau)
