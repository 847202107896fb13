"""Hilbert-Schmidt geometry of generated states.

All distances are taken in the (N+1)-dimensional Dicke representation;
embedding into the 2^N-dimensional space only pads with zeros, so the
values are identical.

Note on the purity relation: for the maximally mixed symmetric state
rho_0 = 1/(N+1), the *squared* distance satisfies
``D_HS(rho, rho_0)^2 = Tr(rho^2) - 1/(N+1)``; that squared form is what
this module asserts. The same relation without the square on the left is
sometimes quoted, but it does not hold: purity is quadratic in rho.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .symspace import SymState


def _mat(x) -> np.ndarray:
    return x.matrix if isinstance(x, SymState) else np.asarray(x)


def hs_distance(a, b) -> float:
    a, b = _mat(a), _mat(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def mms(n_qubits: int) -> np.ndarray:
    return np.eye(n_qubits + 1) / (n_qubits + 1)


def distance_to_mms(rho: SymState) -> float:
    return hs_distance(rho.matrix, mms(rho.n_qubits))


@dataclass(frozen=True)
class HistogramPDF:
    bin_edges: np.ndarray
    density: np.ndarray
    n_samples: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def total(self) -> float:
        return float(np.sum(self.density * self.widths))

    def mean(self) -> float:
        centers = 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])
        return float(np.sum(centers * self.density * self.widths))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "density"])
        for lo, hi, d in zip(self.bin_edges[:-1], self.bin_edges[1:], self.density):
            w.writerow([repr(float(lo)), repr(float(hi)), repr(float(d))])
        return buf.getvalue()


def histogram(counts: np.ndarray, edges: np.ndarray) -> HistogramPDF:
    total = counts.sum()
    if total == 0:
        raise ValueError("empty histogram")
    density = counts / (total * np.diff(edges))
    return HistogramPDF(np.asarray(edges, dtype=float), density, int(total))


@dataclass(frozen=True)
class SweepPoint:
    ancilla: int
    mean: float
    std: float
    n_states: int


def mmd_sweep(samples: dict[int, Sequence[SymState]]) -> list[SweepPoint]:
    """Mean and sample standard deviation of D_HS(rho, rho_0) per ancilla value."""
    out = []
    for anc in sorted(samples):
        states = samples[anc]
        if len(states) < 2:
            raise ValueError(f"need >= 2 states at ancilla {anc}")
        d = np.array([distance_to_mms(r) for r in states])
        out.append(SweepPoint(anc, float(d.mean()), float(d.std(ddof=1)), len(d)))
    return out


def _flatten(states: Sequence[SymState]) -> np.ndarray:
    # HS distance == Euclidean distance of the flattened complex matrices
    return np.stack([s.matrix.ravel() for s in states])


def pairwise_distances_stream(states: Sequence[SymState], block: int = 512):
    """Yield distance blocks over all unordered pairs i < j."""
    x = _flatten(states)
    sq = np.einsum("ij,ij->i", x.conj(), x).real
    m = len(x)
    for start in range(0, m, block):
        stop = min(m, start + block)
        rows = x[start:stop]
        g = np.real(rows.conj() @ x[start:].T)
        d2 = sq[start:stop, None] + sq[None, start:] - 2 * g
        d = np.sqrt(np.clip(d2, 0.0, None))
        iu = np.triu_indices(stop - start, 1, m=m - start)
        yield d[iu]


def pairwise_max(states: Sequence[SymState]) -> float:
    return max((float(b.max()) for b in pairwise_distances_stream(states) if b.size), default=0.0)


def pairwise_pdf(states: Sequence[SymState], bins: int | np.ndarray = 200) -> HistogramPDF:
    """Histogram of D_HS over all m(m-1)/2 unordered pairs, streamed in blocks."""
    if len(states) < 2:
        raise ValueError("pairwise_pdf needs at least two states")
    if np.isscalar(bins):
        top = pairwise_max(states) * 1.05
        edges = np.linspace(0.0, top if top > 0 else 1.0, int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    counts = np.zeros(len(edges) - 1)
    for blk in pairwise_distances_stream(states):
        counts += np.histogram(np.clip(blk, edges[0], edges[-1]), bins=edges)[0]
    return histogram(counts, edges)


def pairwise_moments(states: Sequence[SymState]) -> tuple[float, float, int]:
    """Mean and variance of all pairwise distances, streamed."""
    s = s2 = 0.0
    cnt = 0
    for blk in pairwise_distances_stream(states):
        s += float(blk.sum())
        s2 += float(np.dot(blk, blk))
        cnt += blk.size
    mean = s / cnt
    return mean, s2 / cnt - mean * mean, cnt


def dicke_projector(alpha: int, beta: int, n_qubits: int) -> np.ndarray:
    p = np.zeros((n_qubits + 1, n_qubits + 1), dtype=complex)
    p[alpha, beta] = 1.0
    return p


def projector_reference(alpha: int, beta: int, n_qubits: int) -> float:
    """D_HS(rho_0, |D^alpha><D^beta|), computed in closed form."""
    d = n_qubits + 1
    if alpha == beta:
        return float(np.sqrt((1 - 1 / d) ** 2 + (d - 1) / d**2))
    return float(np.sqrt(1 + 1 / d))


@dataclass(frozen=True)
class ProjectorPanel:
    alpha: int
    beta: int
    pdf: HistogramPDF
    reference: float
    mean: float
    std: float


def dicke_projector_pdfs(states: Sequence[SymState], bins: int = 200) -> dict[tuple[int, int], ProjectorPanel]:
    if not states:
        raise ValueError("no states given")
    n = states[0].n_qubits
    if any(s.n_qubits != n for s in states):
        raise ValueError("all states must share N")
    x = np.stack([s.matrix for s in states])
    total = np.einsum("kij,kij->k", x.conj(), x).real
    panels = {}
    for a in range(n + 1):
        for b in range(n + 1):
            # ||rho - |a><b| ||^2 = Tr rho^2 - 2 Re rho[b, a] + 1
            d = np.sqrt(np.clip(total - 2 * x[:, b, a].real + 1.0, 0.0, None))
            lo, hi = float(d.min()), float(d.max())
            pad = 0.05 * (hi - lo) if hi > lo else 0.05
            edges = np.linspace(max(0.0, lo - pad), hi + pad, bins + 1)
            pdf = histogram(np.histogram(d, bins=edges)[0].astype(float), edges)
            panels[(a, b)] = ProjectorPanel(
                a, b, pdf, projector_reference(a, b, n), float(d.mean()), float(d.std(ddof=1)) if len(d) > 1 else 0.0
            )
    return panels


@dataclass(frozen=True)
class VarietyContrast:
    mean_mms: tuple[float, float]
    mean_pvalue: float
    pair_variance: tuple[float, float]
    variance_pvalue: float


def variety_contrast(a: Sequence[SymState], b: Sequence[SymState]) -> VarietyContrast:
    """One-sided tests that sample ``a`` is spread wider than sample ``b``.

    Distance to rho_0: Welch t-test of mean(a) > mean(b). Pairwise variety:
    distances of disjoint consecutive pairs (each state used once, so the
    distances are independent) compared with an F-test of var(a) > var(b).
    """
    da = np.array([distance_to_mms(s) for s in a])
    db = np.array([distance_to_mms(s) for s in b])
    t = stats.ttest_ind(da, db, equal_var=False, alternative="greater")

    def disjoint(states):
        x = _flatten(states)
        m = len(x) // 2 * 2
        return np.linalg.norm(x[0:m:2] - x[1:m:2], axis=1)

    pa, pb = disjoint(a), disjoint(b)
    va, vb = float(pa.var(ddof=1)), float(pb.var(ddof=1))
    p_var = float(stats.f.sf(va / vb, len(pa) - 1, len(pb) - 1))
    return VarietyContrast((float(da.mean()), float(db.mean())), float(t.pvalue), (va, vb), p_var)
