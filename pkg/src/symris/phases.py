"""Phase boundaries from probability sweeps and their scaling fits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

BOUNDARIES = {
    "NPT_to_BE": ("P_NPT", "P_PPTBE"),
    "BE_to_SEP": ("P_PPTBE", "P_SEP"),
}
MODELS = {"linear": 1, "quadratic": 2}


class MultipleCrossingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Crossing:
    kind: str
    ancilla: float | None
    multiplicity: int = 0

    @property
    def present(self) -> bool:
        return self.ancilla is not None


def first_crossing(x: Sequence[float], f: Sequence[float], g: Sequence[float]) -> tuple[float | None, int]:
    """First point where g overtakes f, linearly interpolated between samples.

    Only downward sign changes of f - g count as the crossing; upward ones
    (g dipping back below f) are included in the returned count of sign
    changes. Samples where the difference is exactly zero are skipped; a
    change across a run of zeros is placed on the first zero sample.
    Returns ``(position, number_of_sign_changes)``.
    """
    x = np.asarray(x, dtype=float)
    diff = np.asarray(f, dtype=float) - np.asarray(g, dtype=float)
    nz = np.flatnonzero(diff != 0.0)
    found, changes = [], 0
    for i, j in zip(nz[:-1], nz[1:]):
        if np.sign(diff[i]) == np.sign(diff[j]):
            continue
        changes += 1
        if diff[i] < 0:
            continue
        if j == i + 1:
            found.append(x[i] + diff[i] * (x[j] - x[i]) / (diff[i] - diff[j]))
        else:
            found.append(x[i + 1])
    return (float(found[0]) if found else None), changes


def curve_intersections(sweep: Sequence[tuple[float, float, float, float]]) -> dict[str, Crossing]:
    """Crossings of NPT/PPT-BE and PPT-BE/SEP curves.

    ``sweep`` rows are ``(ancilla, P_NPT, P_PPTBE, P_SEP)`` sorted by
    ancilla. A boundary where the second curve never overtakes the first
    is reported absent; with several sign changes the first overtaking is
    kept and a warning is raised.
    """
    if len(sweep) < 2:
        raise ValueError("need at least two sweep points")
    arr = np.asarray(sweep, dtype=float)
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise ValueError("sweep must be sorted by strictly increasing ancilla")
    cols = {"P_NPT": arr[:, 1], "P_PPTBE": arr[:, 2], "P_SEP": arr[:, 3]}
    out = {}
    for kind, (a, b) in BOUNDARIES.items():
        pos, mult = first_crossing(arr[:, 0], cols[a], cols[b])
        if mult > 1:
            warnings.warn(f"{kind}: {mult} crossings, keeping the first", MultipleCrossingWarning, stacklevel=2)
        out[kind] = Crossing(kind, pos, mult)
    return out


@dataclass
class PhaseBoundary:
    kind: str
    points: list[tuple[float, float]]
    model: str
    coefficients: np.ndarray = field(repr=False)
    residual: float = 0.0

    def __call__(self, n):
        return np.polyval(self.coefficients, n)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "points": [[float(a), float(b)] for a, b in self.points],
            "model": self.model,
            "coefficients": [float(c) for c in self.coefficients],
            "residual": float(self.residual),
        }


def fit_boundary(points: Sequence[tuple[float, float]], model: str, kind: str = "") -> PhaseBoundary:
    """Least-squares polynomial fit of crossing positions against N.

    Coefficients are highest power first: (a, b) for a N + b and
    (a, b, c) for a N^2 + b N + c.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    deg = MODELS[model]
    pts = np.asarray(points, dtype=float)
    if len(pts) < deg + 1:
        raise ValueError(f"{model} fit needs at least {deg + 1} points, got {len(pts)}")
    x, y = pts[:, 0], pts[:, 1]
    design = np.vander(x, deg + 1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    rss = float(np.sum((design @ coef - y) ** 2))
    return PhaseBoundary(kind, [tuple(p) for p in pts], model, coef, rss)


def phase_ordering_ok(crossings: dict[str, Crossing]) -> bool:
    a, b = crossings["NPT_to_BE"], crossings["BE_to_SEP"]
    if not (a.present and b.present):
        return True
    return a.ancilla < b.ancilla
