"""Monte-Carlo estimation of outcome probabilities for random induced states."""

from __future__ import annotations

import csv
import io
import logging
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .sampling import MethodParams, RngStream, generate
from .septest import CertifierConfig, SepCertificate, Verdict, certify
from .spectra import TAU_PPT, PartitionFlags, ppt_flags
from .symspace import SymState, cuts

log = logging.getLogger(__name__)

KINDS = ("NPT", "PPT_BE", "SEP", "UNK")


class Kind(str, Enum):
    NPT = "NPT"
    PPT_BE = "PPT_BE"
    SEP = "SEP"
    UNK = "UNK"


def penultimate_cut(n_qubits: int) -> int:
    """Cut size k of the penultimate bipartition ceil(N/2)+1 | floor(N/2)-1."""
    return n_qubits // 2 - 1


def x_set(n_qubits: int) -> tuple[int, ...] | None:
    """PPT set carrying the X tag: every cut but the penultimate one (defined for N >= 4)."""
    if n_qubits < 4:
        return None
    pen = penultimate_cut(n_qubits)
    return tuple(k for k in cuts(n_qubits) if k != pen)


@dataclass(frozen=True)
class OutcomeClass:
    kind: Kind
    ppt_set: tuple[int, ...] = ()
    tag: str = "plain"

    @classmethod
    def make(cls, kind: Kind, n_qubits: int, ppt_set: Iterable[int] = ()) -> "OutcomeClass":
        ppt_set = tuple(sorted(ppt_set))
        tag = "plain"
        if kind is Kind.PPT_BE:
            if not ppt_set:
                raise ValueError("a PPT_BE outcome needs at least one PPT cut")
            if ppt_set == tuple(cuts(n_qubits)):
                tag = "ALL"
            elif ppt_set == x_set(n_qubits):
                tag = "X"
        elif ppt_set:
            raise ValueError(f"{kind.value} outcomes carry no PPT set")
        return cls(kind, ppt_set, tag)

    @property
    def label(self) -> str:
        if self.kind is Kind.PPT_BE:
            return be_label(self.ppt_set)
        return self.kind.value


def be_label(ppt_set: Sequence[int]) -> str:
    return "PPT_BE_" + "_".join(str(k) for k in ppt_set)


def refined_labels(n_qubits: int) -> list[str]:
    ks = list(cuts(n_qubits))
    return [be_label(c) for r in range(1, len(ks) + 1) for c in combinations(ks, r)]


def kind_of(label: str) -> str:
    return "PPT_BE" if label.startswith("PPT_BE") else label


@dataclass
class TrialResult:
    index: int
    outcome: OutcomeClass
    flags: PartitionFlags
    certificate: SepCertificate | None = None


class TrialError(RuntimeError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"trial {index} failed: {cause}")
        self.index = index


def classify_state(
    rho: SymState,
    config: CertifierConfig = CertifierConfig(),
    tau: float = TAU_PPT,
) -> tuple[OutcomeClass, PartitionFlags, SepCertificate | None]:
    flags = ppt_flags(rho, tau)
    n = rho.n_qubits
    if flags.all_npt:
        return OutcomeClass.make(Kind.NPT, n), flags, None
    if not flags.all_ppt:
        # one NPT cut already makes a symmetric state genuinely entangled
        return OutcomeClass.make(Kind.PPT_BE, n, flags.ppt_cuts), flags, None
    cert = certify(rho, flags, config)
    if cert.verdict is Verdict.SEP:
        return OutcomeClass.make(Kind.SEP, n), flags, cert
    if cert.verdict is Verdict.ENT:
        return OutcomeClass.make(Kind.PPT_BE, n, flags.ppt_cuts), flags, cert
    return OutcomeClass.make(Kind.UNK, n), flags, cert


def classify_trial(
    params: MethodParams,
    rng: RngStream,
    config: CertifierConfig = CertifierConfig(),
    tau: float = TAU_PPT,
) -> TrialResult:
    try:
        rho = generate(params, rng)
        outcome, flags, cert = classify_state(rho, config, tau)
    except Exception as exc:
        raise TrialError(rng.stream_index, exc) from exc
    return TrialResult(rng.stream_index, outcome, flags, cert)


# -------------------------------------------------------------------- ledger


def checkpoint_schedule(n: int) -> list[int]:
    """Powers of two up to 8192, then 10^4 onward in steps of 2000; ``n`` always closes it."""
    pts = [p for p in (2**i for i in range(14)) if p <= n]
    pts += list(range(10_000, n + 1, 2000))
    if not pts or pts[-1] != n:
        pts.append(n)
    return pts


@dataclass
class TrialLedger:
    params: MethodParams
    seed: int
    n: int = 0
    counts: Counter = field(default_factory=Counter)
    checkpoints: list[tuple[int, dict[str, float]]] = field(default_factory=list)
    labels: list[str] = field(default_factory=list, repr=False)
    min_eigs: list[dict[int, float]] = field(default_factory=list, repr=False)

    @classmethod
    def from_results(cls, params, seed, results: Sequence[TrialResult]) -> "TrialLedger":
        ledger = cls(params, seed)
        marks = set(checkpoint_schedule(len(results))) if results else set()
        for res in sorted(results, key=lambda r: r.index):
            ledger.record(res)
            if ledger.n in marks:
                ledger.checkpoints.append((ledger.n, ledger.probabilities()))
        return ledger

    def record(self, res: TrialResult) -> None:
        self.n += 1
        self.counts[res.outcome.label] += 1
        self.labels.append(res.outcome.label)
        self.min_eigs.append(dict(res.flags.min_eig))

    def kind_counts(self) -> dict[str, int]:
        out = dict.fromkeys(KINDS, 0)
        for label, c in self.counts.items():
            out[kind_of(label)] += c
        return out

    def probabilities(self) -> dict[str, float]:
        if self.n == 0:
            return dict.fromkeys(KINDS, 0.0)
        return {k: c / self.n for k, c in self.kind_counts().items()}

    def label_probability(self, label: str) -> float:
        return self.counts.get(label, 0) / self.n if self.n else 0.0

    def tag_probability(self, tag: str) -> float:
        n = self.params.n_qubits
        target = tuple(cuts(n)) if tag == "ALL" else x_set(n)
        return self.label_probability(be_label(target)) if target else 0.0

    def stderr(self, p: float) -> float:
        return float(np.sqrt(p * (1 - p) / self.n)) if self.n else 0.0

    def summary(self) -> dict:
        return {
            "method": self.params.method.value,
            "n_qubits": self.params.n_qubits,
            "ancilla": self.params.ancilla,
            "seed": self.seed,
            "n": self.n,
            "counts": dict(sorted(self.counts.items())),
            "probabilities": self.probabilities(),
        }


# ---------------------------------------------------------------- execution


def _run_chunk(args):
    params, seed, indices, config, tau = args
    return [classify_trial(params, RngStream(seed, i), config, tau) for i in indices]


def default_workers() -> int:
    return os.cpu_count() or 1


def run_trials(
    params: MethodParams,
    indices: Sequence[int],
    seed: int,
    config: CertifierConfig = CertifierConfig(),
    tau: float = TAU_PPT,
    workers: int = 1,
) -> list[TrialResult]:
    """Classify the given trial indices; output order follows ``indices``."""
    indices = list(indices)
    if workers <= 1 or len(indices) < 2:
        return _run_chunk((params, seed, indices, config, tau))
    n_chunks = min(len(indices), 4 * workers)
    chunks = [indices[i::n_chunks] for i in range(n_chunks)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [(params, seed, c, config, tau) for c in chunks]))
    by_index = {r.index: r for part in parts for r in part}
    return [by_index[i] for i in indices]


def estimate(
    params: MethodParams,
    n: int,
    seed: int,
    config: CertifierConfig = CertifierConfig(),
    tau: float = TAU_PPT,
    workers: int = 1,
    keep_results: bool = False,
):
    """Classify trials ``0..n-1`` and aggregate them into a ledger.

    Returns the ledger, or ``(ledger, results)`` with ``keep_results``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    results = run_trials(params, range(n), seed, config, tau, workers)
    ledger = TrialLedger.from_results(params, seed, results)
    log.info("estimate %s n=%d -> %s", params, n, ledger.probabilities())
    return (ledger, results) if keep_results else ledger


def sweep(
    method,
    n_qubits: int,
    ancillas: Iterable[int],
    n: int,
    seed: int,
    config: CertifierConfig = CertifierConfig(),
    tau: float = TAU_PPT,
    workers: int = 1,
) -> list[TrialLedger]:
    return [
        estimate(MethodParams(method, n_qubits, a), n, seed, config, tau, workers) for a in ancillas
    ]


def sample_kind(
    params: MethodParams,
    kind: str,
    m: int,
    seed: int,
    config: CertifierConfig = CertifierConfig(),
    tau: float = TAU_PPT,
    workers: int = 1,
    max_trials: int | None = None,
) -> tuple[list[SymState], int]:
    """First ``m`` states of the given outcome kind in trial-index order.

    Returns the states and the number of trials consumed. Raises
    ValueError when ``max_trials`` (default ``200 m``) runs out first.
    """
    max_trials = 200 * m if max_trials is None else max_trials
    found: list[SymState] = []
    start, batch = 0, max(4 * m, 256)
    last = 0
    while len(found) < m:
        if start >= max_trials:
            raise ValueError(f"only {len(found)} {kind} states in {max_trials} trials at {params}")
        idx = range(start, min(start + batch, max_trials))
        for res in run_trials(params, idx, seed, config, tau, workers):
            if kind_of(res.outcome.label) == kind and len(found) < m:
                found.append(generate(params, RngStream(seed, res.index)))
                last = res.index + 1
        start = idx.stop
    return found, last


# ----------------------------------------------------------- refined labels


@dataclass(frozen=True)
class Appearance:
    label: str
    ancilla: int
    crossing: float
    probability: float


def refine_order(ledgers: Sequence[TrialLedger], floor_count: int = 10) -> list[Appearance]:
    """First ancilla value at which each refined PPT-BE label clears the floor.

    The floor is ``p_min = floor_count / n``; a label counts once it has
    been observed at least ``floor_count`` times at one sweep point. Ties on
    the grid are broken by the linearly interpolated floor crossing.
    """
    if not ledgers:
        return []
    ledgers = sorted(ledgers, key=lambda l: l.params.ancilla)
    labels = sorted({lab for l in ledgers for lab in l.counts if lab.startswith("PPT_BE")})
    found = []
    for lab in labels:
        prev_a, prev_p = None, 0.0
        for led in ledgers:
            p = led.label_probability(lab)
            p_min = floor_count / led.n
            if led.counts.get(lab, 0) >= floor_count:
                a = led.params.ancilla
                if prev_a is None or p == prev_p:
                    cross = float(a)
                else:
                    cross = prev_a + (p_min - prev_p) * (a - prev_a) / (p - prev_p)
                    cross = float(min(max(cross, prev_a), a))
                found.append(Appearance(lab, a, cross, p))
                break
            prev_a, prev_p = led.params.ancilla, p
    return sorted(found, key=lambda x: (x.ancilla, x.crossing))


# ---------------------------------------------------------------- CSV export

COLUMN = {k: "P_" + k.replace("_", "") for k in KINDS}
SUMMARY_HEAD = ["method", "N", "ancilla", "n"] + [COLUMN[k] for k in KINDS]


def ledgers_to_csv(ledgers: Sequence[TrialLedger]) -> str:
    """Wide probability table: main classes, refined labels, ALL/X tags, standard errors."""
    if not ledgers:
        return ""
    n_qubits = ledgers[0].params.n_qubits
    refined = refined_labels(n_qubits)
    head = SUMMARY_HEAD + refined + ["PPT_BE_all", "PPT_BE_X"] + [
        "SE_" + h[2:] for h in SUMMARY_HEAD[4:]
    ]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    for led in sorted(ledgers, key=lambda l: l.params.ancilla):
        p = led.probabilities()
        main = [p[k] for k in KINDS]
        row = [led.params.method.value, n_qubits, led.params.ancilla, led.n]
        row += [_fmt(v) for v in main]
        row += [_fmt(led.label_probability(lab)) for lab in refined]
        row += [_fmt(led.tag_probability("ALL")), _fmt(led.tag_probability("X"))]
        row += [_fmt(led.stderr(v)) for v in main]
        w.writerow(row)
    return buf.getvalue()


def refined_to_csv(ledgers: Sequence[TrialLedger]) -> str:
    """Long table: one row per (ancilla, outcome label)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ancilla", "label", "count", "probability", "stderr"])
    for led in sorted(ledgers, key=lambda l: l.params.ancilla):
        labels = list(KINDS[:1]) + refined_labels(led.params.n_qubits) + list(KINDS[2:])
        for lab in labels:
            p = led.label_probability(lab)
            w.writerow([led.params.ancilla, lab, led.counts.get(lab, 0), _fmt(p), _fmt(led.stderr(p))])
    return buf.getvalue()


def checkpoints_to_csv(ledger: TrialLedger) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n_i"] + [COLUMN[k] for k in KINDS] + ["Delta_" + COLUMN[k][2:] for k in KINDS])
    prev = None
    for n_i, p in ledger.checkpoints:
        deltas = ["" if prev is None else _fmt(abs(p[k] - prev[k])) for k in KINDS]
        w.writerow([n_i] + [_fmt(p[k]) for k in KINDS] + deltas)
        prev = p
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))
