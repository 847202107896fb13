"""Batch front-end: scans, single-state classification, geometry, phase diagrams, convergence.

Every command writes ``config.json`` (resolved configuration plus tool
version) next to its data files. Data files carry no timestamps, so equal
configs and seeds give byte-identical CSV/JSON at any worker count.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical
failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, svgplot
from .geometry import (
    HistogramPDF,
    dicke_projector_pdfs,
    mmd_sweep,
    pairwise_moments,
    pairwise_pdf,
)
from .montecarlo import (
    COLUMN,
    KINDS,
    TrialError,
    TrialLedger,
    checkpoints_to_csv,
    classify_state,
    default_workers,
    estimate,
    ledgers_to_csv,
    refine_order,
    refined_labels,
    refined_to_csv,
    sample_kind,
)
from .phases import MODELS, curve_intersections, fit_boundary, phase_ordering_ok
from .sampling import MethodParams, RngStream, generate, load_state
from .septest import CertifierConfig
from .spectra import TAU_PPT, EigensolverError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("symris")

COMMANDS = ("scan", "classify", "geometry", "phase-diagram", "convergence")
EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------- config


def parse_grid(spec) -> list[int]:
    """Parse an ancilla grid: ``"1..40"``, ``"2..40:2"``, ``"10,12,14"`` or combinations.

    Lists of integers pass through. The result must be strictly
    increasing positive integers.
    """
    if isinstance(spec, int):
        values = [spec]
    elif isinstance(spec, (list, tuple)):
        values = [int(v) for v in spec]
    else:
        values = []
        for part in str(spec).replace(" ", "").split(","):
            m = re.fullmatch(r"(\d+)(?:\.\.(\d+)(?::(\d+))?)?", part)
            if not m:
                raise ConfigError(f"invalid grid element {part!r}")
            lo = int(m.group(1))
            hi = int(m.group(2)) if m.group(2) else lo
            step = int(m.group(3)) if m.group(3) else 1
            if hi < lo or step < 1:
                raise ConfigError(f"invalid range {part!r}")
            values.extend(range(lo, hi + 1, step))
    if not values:
        raise ConfigError("empty grid")
    if any(v < 1 for v in values):
        raise ConfigError("grid values must be positive")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("grid must be strictly increasing")
    return values


@dataclass
class RunConfig:
    command: str
    method: str = "MI"
    n_qubits: list[int] = field(default_factory=list)
    ancilla: list[int] = field(default_factory=list)
    trials: int = 2000
    seed: int = 0
    workers: int = 0
    out: str = ""
    tau_ppt: float = TAU_PPT
    eps_sep: float = 1e-6
    eps_ent: float = 1e-4
    eps_wit: float = 1e-8
    budget: int = 2000
    # geometry: number of bound-entangled states for the pairwise/projector PDFs
    samples: int = 2000
    bins: int = 200
    pdf_ancilla: int = 0
    # classify: state file, or generator trial index
    state: str = ""
    trial: int = 0
    # phase-diagram
    scan_root: str = ""
    models: list[str] = field(default_factory=lambda: ["linear", "quadratic"])
    generate: bool = False

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.method not in ("MI", "MII"):
            raise ConfigError(f"method must be MI or MII, got {self.method!r}")
        self.n_qubits = parse_grid(self.n_qubits) if self.n_qubits else []
        self.ancilla = parse_grid(self.ancilla) if self.ancilla else []
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")
        if self.budget < 0 or self.samples < 2 or self.bins < 1:
            raise ConfigError("budget, samples and bins must be positive")
        for name in ("tau_ppt", "eps_sep", "eps_ent", "eps_wit"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.eps_ent < self.eps_sep:
            raise ConfigError("eps_ent must be >= eps_sep")
        unknown = set(self.models) - set(MODELS)
        if unknown:
            raise ConfigError(f"unknown fit model(s) {sorted(unknown)}")

        need_single_n = self.command != "phase-diagram" and not (self.command == "classify" and self.state)
        if need_single_n and len(self.n_qubits) != 1:
            raise ConfigError(f"{self.command} needs exactly one --n-qubits value")
        if self.command == "phase-diagram":
            if not self.n_qubits:
                raise ConfigError("phase-diagram needs --n-qubits (a list, e.g. 4,5,6)")
            for m in self.models:
                if len(self.n_qubits) < MODELS[m] + 1:
                    raise ConfigError(
                        f"{m} fit needs at least {MODELS[m] + 1} values of N, got {len(self.n_qubits)}"
                    )
        if self.command in ("scan", "geometry", "phase-diagram") and not self.ancilla:
            raise ConfigError(f"{self.command} needs an --ancilla grid")
        if self.command in ("convergence", "classify") and not self.state and len(self.ancilla) != 1:
            raise ConfigError(f"{self.command} needs exactly one --ancilla value")
        if self.command == "geometry" and self.pdf_ancilla and self.pdf_ancilla not in self.ancilla:
            raise ConfigError("pdf_ancilla must be one of the grid values")
        for n in self.n_qubits:
            for a in self.ancilla:
                try:
                    MethodParams(self.method, n, a)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
        if not self.out and self.command != "classify":
            self.out = f"out/{self.command}"
        return self

    @property
    def n(self) -> int:
        return self.n_qubits[0]

    @property
    def n_workers(self) -> int:
        return self.workers or default_workers()

    def certifier(self) -> CertifierConfig:
        return CertifierConfig(
            eps_sep=self.eps_sep, eps_ent=self.eps_ent, eps_wit=self.eps_wit, budget=self.budget
        )

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    names = {f.name for f in dataclasses.fields(RunConfig)} - {"command"}
    doc = {k.replace("-", "_"): v for k, v in doc.items()}
    unknown = set(doc) - names
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return doc


def write_config(cfg: RunConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    doc = {"version": f"symris {__version__}", "config": cfg.to_json()}
    (out / "config.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write(out: Path, name: str, text: str) -> None:
    (out / name).write_text(text)
    log.info("wrote %s", out / name)


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -------------------------------------------------------------------- scan


def run_scan(cfg: RunConfig, n_qubits: int | None = None, out: Path | None = None) -> list[TrialLedger]:
    n_qubits = cfg.n if n_qubits is None else n_qubits
    out = Path(cfg.out) if out is None else out
    ledgers = []
    for a in cfg.ancilla:
        led = estimate(
            MethodParams(cfg.method, n_qubits, a), cfg.trials, cfg.seed, cfg.certifier(), cfg.tau_ppt, cfg.n_workers
        )
        log.info("N=%d ancilla=%d %s", n_qubits, a, {k: round(v, 4) for k, v in led.probabilities().items()})
        ledgers.append(led)
    sub = dataclasses.replace(cfg, n_qubits=[n_qubits], out=str(out))
    write_config(sub, out)
    _write(out, "probabilities.csv", ledgers_to_csv(ledgers))
    _write(out, "refined.csv", refined_to_csv(ledgers))
    order = refine_order(ledgers)
    summary = {
        "points": [led.summary() for led in ledgers],
        "first_appearance": [dataclasses.asdict(a) for a in order],
    }
    _write(out, "summary.json", _json(summary))
    _write(out, "probabilities.svg", scan_svg(ledgers))
    return ledgers


def scan_svg(ledgers: Sequence[TrialLedger]) -> str:
    params = ledgers[0].params
    x = np.array([led.params.ancilla for led in ledgers], float)
    probs = {k: np.array([led.probabilities()[k] for led in ledgers]) for k in KINDS}
    axis = "N_a" if params.method.value == "MI" else "d_a"
    panel = svgplot.Panel(
        title=f"{params.method.value}, N={params.n_qubits}", xlabel=axis, ylabel="probability", ylim=(0.0, 1.0)
    )
    if len(x) > 1:
        for lo, hi, kind in svgplot.dominant_spans(x, probs):
            panel.vspan(lo, hi, svgplot.BACKGROUND[kind])
    for lab in refined_labels(params.n_qubits):
        y = np.array([led.label_probability(lab) for led in ledgers])
        if y.any():
            panel.line(x, y, svgplot.PALETTE["refined"], dash="4,3", width=1.0)
    for k in KINDS:
        if k == "UNK" and not probs[k].any():
            continue
        panel.line(x, probs[k], svgplot.PALETTE[k], label=k, dots=True)
    return svgplot.render([panel], width=560, height=360)


def cmd_scan(cfg: RunConfig) -> int:
    run_scan(cfg)
    return 0


# ---------------------------------------------------------------- classify


def classify_doc(rho, cfg: RunConfig, source: dict) -> dict:
    outcome, flags, cert = classify_state(rho, cfg.certifier(), cfg.tau_ppt)
    return {
        "source": source,
        "n_qubits": rho.n_qubits,
        "flags": {str(k): v for k, v in flags.labels().items()},
        "min_eigenvalues": {str(k): v for k, v in flags.min_eig.items()},
        "kind": outcome.kind.value,
        "label": outcome.label,
        "tag": outcome.tag,
        "certificate": cert.to_json() if cert is not None else None,
    }


def cmd_classify(cfg: RunConfig) -> int:
    if cfg.state:
        rho = load_state(cfg.state)
        source = {"state_file": cfg.state}
    else:
        params = MethodParams(cfg.method, cfg.n, cfg.ancilla[0])
        rho = generate(params, RngStream(cfg.seed, cfg.trial))
        source = {"method": cfg.method, "n_qubits": cfg.n, "ancilla": cfg.ancilla[0], "seed": cfg.seed, "trial": cfg.trial}
    doc = classify_doc(rho, cfg, source)
    text = _json(doc)
    if cfg.out:
        out = Path(cfg.out)
        write_config(cfg, out)
        _write(out, "verdict.json", text)
    sys.stdout.write(text)
    return 0


# ------------------------------------------------------------- convergence


def cmd_convergence(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    params = MethodParams(cfg.method, cfg.n, cfg.ancilla[0])
    led = estimate(params, cfg.trials, cfg.seed, cfg.certifier(), cfg.tau_ppt, cfg.n_workers)
    write_config(cfg, out)
    _write(out, "checkpoints.csv", checkpoints_to_csv(led))
    _write(out, "summary.json", _json(led.summary()))
    _write(out, "convergence.svg", convergence_svg(led))
    return 0


def convergence_svg(led: TrialLedger) -> str:
    n_i = np.array([c[0] for c in led.checkpoints], float)
    top = svgplot.Panel(title="estimated probabilities", xlabel="n", ylabel="P", logx=True, ylim=(0.0, 1.0))
    bottom = svgplot.Panel(title="|successive differences|", xlabel="n", ylabel="Delta", logx=True, logy=True)
    for k in KINDS:
        p = np.array([c[1][k] for c in led.checkpoints])
        top.line(n_i, p, svgplot.PALETTE[k], label=k, dots=True)
        if len(p) > 1:
            bottom.line(n_i[1:], np.abs(np.diff(p)), svgplot.PALETTE[k], label=k, dots=True)
    panels = [top, bottom] if len(n_i) > 1 else [top]
    p = led.params
    return svgplot.render(panels, cols=len(panels), title=f"{p.method.value}, N={p.n_qubits}, ancilla={p.ancilla}")


# ---------------------------------------------------------------- geometry


def _pdf_svg(pdf: HistogramPDF, title: str) -> svgplot.Panel:
    panel = svgplot.Panel(title=title, xlabel="D_HS", ylabel="PDF")
    centers = 0.5 * (pdf.bin_edges[1:] + pdf.bin_edges[:-1])
    panel.line(centers, pdf.density, svgplot.PALETTE["MI"])
    return panel


def cmd_geometry(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    n = cfg.n
    write_config(cfg, out)

    samples = {a: [generate(MethodParams(cfg.method, n, a), RngStream(cfg.seed, i)) for i in range(cfg.trials)] for a in cfg.ancilla}
    sweep = mmd_sweep(samples)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ancilla", "n", "mean_D_HS", "std_D_HS"])
    for p in sweep:
        w.writerow([p.ancilla, p.n_states, repr(p.mean), repr(p.std)])
    _write(out, "mmd.csv", buf.getvalue())
    x = np.array([p.ancilla for p in sweep], float)
    mean = np.array([p.mean for p in sweep])
    std = np.array([p.std for p in sweep])
    panel = svgplot.Panel(title=f"{cfg.method}, N={n}", xlabel="ancilla", ylabel="mean D_HS(rho, rho_0)")
    panel.band(x, mean - std, mean + std, svgplot.PALETTE[cfg.method])
    panel.line(x, mean, svgplot.PALETTE[cfg.method], dots=True)
    _write(out, "mmd.svg", svgplot.render([panel]))

    anc = cfg.pdf_ancilla or cfg.ancilla[0]
    params = MethodParams(cfg.method, n, anc)
    try:
        be, used = sample_kind(
            params, "PPT_BE", cfg.samples, cfg.seed, cfg.certifier(), cfg.tau_ppt, cfg.n_workers
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    pdf = pairwise_pdf(be, cfg.bins)
    _write(out, "pairwise_pdf.csv", pdf.to_csv())
    _write(out, "pairwise_pdf.svg", svgplot.render([_pdf_svg(pdf, f"pairwise D_HS, {cfg.method} N={n} ancilla={anc}")]))

    panels = dicke_projector_pdfs(be, cfg.bins)
    grid = []
    for (a, b), pan in sorted(panels.items()):
        _write(out, f"projector_{a}_{b}.csv", pan.pdf.to_csv())
        sp = _pdf_svg(pan.pdf, f"|D{a}><D{b}|")
        sp.marker(pan.reference, 0.0)
        grid.append(sp)
    _write(out, "projectors.svg", svgplot.render(grid, cols=n + 1, width=220, height=170))

    mean_pair, var_pair, pairs = pairwise_moments(be)
    summary = {
        "pdf_ancilla": anc,
        "bound_entangled_states": len(be),
        "trials_used": used,
        "pairs": pairs,
        "pairwise_mean": mean_pair,
        "pairwise_variance": var_pair,
        "mmd": [dataclasses.asdict(p) for p in sweep],
        "projectors": {
            f"{a},{b}": {"reference": p.reference, "mean": p.mean, "std": p.std} for (a, b), p in sorted(panels.items())
        },
    }
    _write(out, "summary.json", _json(summary))
    return 0


# ----------------------------------------------------------- phase diagram


def scan_dir(root: Path, method: str, n_qubits: int) -> Path:
    return root / f"{method}_N{n_qubits}"


def read_sweep(path: Path) -> list[tuple[float, float, float, float]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = [COLUMN["NPT"], COLUMN["PPT_BE"], COLUMN["SEP"]]
    return [(float(r["ancilla"]), *(float(r[c]) for c in cols)) for r in rows]


def cmd_phase_diagram(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    root = Path(cfg.scan_root or cfg.out)
    missing = [n for n in cfg.n_qubits if not (scan_dir(root, cfg.method, n) / "probabilities.csv").exists()]
    if missing and not cfg.generate:
        lines = [
            f"symris scan --method {cfg.method} --n-qubits {n} --ancilla {','.join(map(str, cfg.ancilla))} "
            f"--trials {cfg.trials} --seed {cfg.seed} --out {scan_dir(root, cfg.method, n)}"
            for n in missing
        ]
        raise ConfigError("missing scans; run these first (or pass --generate):\n  " + "\n  ".join(lines))
    for n in missing:
        run_scan(cfg, n, scan_dir(root, cfg.method, n))

    crossings = {}
    for n in cfg.n_qubits:
        crossings[n] = curve_intersections(read_sweep(scan_dir(root, cfg.method, n) / "probabilities.csv"))
    boundaries = {}
    for kind in ("NPT_to_BE", "BE_to_SEP"):
        pts = [(n, c[kind].ancilla) for n, c in crossings.items() if c[kind].present]
        boundaries[kind] = {m: fit_boundary(pts, m, kind) for m in cfg.models}
    write_config(cfg, out)
    doc = {
        "method": cfg.method,
        "crossings": {
            str(n): {k: {"ancilla": c.ancilla, "multiplicity": c.multiplicity} for k, c in cs.items()}
            for n, cs in crossings.items()
        },
        "ordered": {str(n): phase_ordering_ok(cs) for n, cs in crossings.items()},
        "boundaries": [b.to_json() for fits in boundaries.values() for b in fits.values()],
    }
    _write(out, "boundaries.json", _json(doc))
    _write(out, "phase_diagram.svg", phase_svg(cfg, crossings, boundaries))
    return 0


def phase_svg(cfg: RunConfig, crossings, boundaries) -> str:
    ns = np.array(cfg.n_qubits, float)
    x = np.linspace(ns.min() - 0.5, ns.max() + 0.5, 100) if len(ns) > 1 else ns
    top = float(max(cfg.ancilla))
    panel = svgplot.Panel(
        title=f"{cfg.method} phase diagram", xlabel="N", ylabel="ancilla", xlim=(x[0], x[-1]), ylim=(0.0, top)
    )
    model = cfg.models[-1]
    lo = boundaries["NPT_to_BE"].get(model)
    hi = boundaries["BE_to_SEP"].get(model)
    if lo is not None and hi is not None:
        b1 = np.clip(lo(x), 0, top)
        b2 = np.clip(np.maximum(hi(x), b1), 0, top)
        panel.band(x, np.zeros_like(x), b1, svgplot.BACKGROUND["NPT"], opacity=1.0)
        panel.band(x, b1, b2, svgplot.BACKGROUND["PPT_BE"], opacity=1.0)
        panel.band(x, b2, np.full_like(x, top), svgplot.BACKGROUND["SEP"], opacity=1.0)
    styles = {"linear": "6,3", "quadratic": None}
    for kind, color in (("NPT_to_BE", "#d62728"), ("BE_to_SEP", "#2ca02c")):
        for m, fit in boundaries[kind].items():
            panel.line(x, fit(x), color, label=f"{kind} {m}", dash=styles[m])
        for n, cs in crossings.items():
            if cs[kind].present:
                panel.marker(n, cs[kind].ancilla, color)
    return svgplot.render([panel], width=560, height=400)


# -------------------------------------------------------------------- main

HANDLERS = {
    "scan": cmd_scan,
    "classify": cmd_classify,
    "geometry": cmd_geometry,
    "phase-diagram": cmd_phase_diagram,
    "convergence": cmd_convergence,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML (or .json) file of config keys; flags override it")
    common.add_argument("--method", choices=["MI", "MII"])
    common.add_argument("--n-qubits", "-N", help="N, or a list such as 4,5,6 for phase-diagram")
    common.add_argument("--ancilla", help="N_a (MI) or d_a (MII) grid: 1..40, 2..40:2 or 10,12,14")
    common.add_argument("--trials", type=int, help="trials per grid point")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, help="worker processes (0 = all cores)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--tau-ppt", type=float)
    common.add_argument("--eps-sep", type=float)
    common.add_argument("--eps-ent", type=float)
    common.add_argument("--budget", type=int, help="separability-certifier iteration budget")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="symris", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"symris {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("scan", parents=[common], help="probability curves over an ancilla grid")
    p = sub.add_parser("classify", parents=[common], help="classify one state")
    p.add_argument("--state", help="state JSON file; otherwise a generated trial")
    p.add_argument("--trial", type=int, help="trial index of the generated state")
    p = sub.add_parser("geometry", parents=[common], help="Hilbert-Schmidt geometry")
    p.add_argument("--samples", type=int, help="bound-entangled states for the PDFs")
    p.add_argument("--bins", type=int)
    p.add_argument("--pdf-ancilla", type=int, help="grid point for the PDFs (default: first)")
    p = sub.add_parser("phase-diagram", parents=[common], help="crossings and boundary fits over N")
    p.add_argument("--scan-root", help="directory holding <method>_N<n> scan outputs (default: --out)")
    p.add_argument("--models", help="comma-separated fit models (linear,quadratic)")
    p.add_argument("--generate", action="store_true", default=None, help="run missing scans")
    sub.add_parser("convergence", parents=[common], help="estimates along the checkpoint schedule")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    skip = {"config", "verbose", "command"}
    for key, val in vars(args).items():
        if key not in skip and val is not None:
            values[key] = val
    if isinstance(values.get("models"), str):
        values["models"] = [m for m in values["models"].split(",") if m]
    try:
        cfg = RunConfig(command=args.command, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg.command](cfg)
    except (EigensolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"symris: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TrialError as exc:
        print(f"symris: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"symris: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # includes malformed JSON, invalid states and configuration errors
        print(f"symris: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
