"""Command-line interface.

    beamframe <spectrum|modes|oracle|decompose|validate> --input PATH --output PATH [options]

Exit status: 0 success, 1 invalid input or configuration, 2 solver failure,
3 I/O failure. Outputs are written atomically; CSV numbers use ``%.17g``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import modes as md
from . import oracle
from .frame import FrameError, FrameGraph, canonical_examples, frame_from_dict, frame_to_dict
from .geometry import geometric_vectors
from .secular import (
    FundamentalSystem,
    RootRecord,
    SecularError,
    StarParams,
    TwoBeamParams,
    assemble_vertex_blocks,
    problem_1d,
    problem_3star_planar,
    problem_antenna_omega,
    scan_roots,
    star_frame,
)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
SUBCOMMANDS = ("spectrum", "modes", "oracle", "decompose", "validate")
MU_START = 2 * math.pi
MU_CEILING = 512.0
MATCH_RTOL = 1e-2
RANK_RTOL = 1e-9
VALIDATE_SAMPLES = 10


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    input: Path
    output: Path
    count: int = 5
    mu_max: float | None = None
    samples: int = md.DEFAULT_SAMPLES
    elements: int = 100
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise CliError(EXIT_VALIDATION, f"unknown subcommand {self.subcommand!r}")
        if self.count < 1:
            raise CliError(EXIT_VALIDATION, f"--count must be >= 1, got {self.count}")
        if self.samples < 2:
            raise CliError(EXIT_VALIDATION, f"--samples must be >= 2, got {self.samples}")
        if self.elements < 1:
            raise CliError(EXIT_VALIDATION, f"--elements must be >= 1, got {self.elements}")
        if not self.tol > 0:
            raise CliError(EXIT_VALIDATION, f"--tol must be positive, got {self.tol}")
        if self.mu_max is not None and not self.mu_max > 0:
            raise CliError(EXIT_VALIDATION, f"--mu-max must be positive, got {self.mu_max}")

    @property
    def lam_max(self) -> float | None:
        return None if self.mu_max is None else self.mu_max**4


# --------------------------------------------------------------------------
# output helpers

def fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from None


def sidecar(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def _tags(tags) -> str:
    return ";".join(sorted(tags))


def _json_vec(a: np.ndarray) -> list[float]:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return [[float(z.real), float(z.imag)] for z in a]
    return [float(x) for x in a]


# --------------------------------------------------------------------------
# input

def load_document(path: Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_VALIDATION, f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise CliError(EXIT_VALIDATION, f"{path}: top-level JSON value must be an object")
    return doc


def _close(a: Any, b: Any, tol: float = 1e-9) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k], tol) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_close(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, (int, float)) and isinstance(b, (int, float)) and not isinstance(a, bool):
        return abs(a - b) <= tol * max(1.0, abs(a), abs(b))
    return a == b


def family_of(frame: FrameGraph) -> tuple[str, dict[str, float]] | None:
    """The declared canonical family, after checking that the frame really is that example."""
    if not frame.family:
        return None
    name = frame.family.get("name")
    params = dict(frame.family.get("params") or {})
    try:
        reference = canonical_examples(name, **params)
    except FrameError as exc:
        raise CliError(EXIT_VALIDATION, f"family {name!r}: {exc}") from None
    mine, ref = frame_to_dict(frame), frame_to_dict(reference)
    mine.pop("family", None)
    ref.pop("family", None)
    if not _close(mine, ref):
        raise CliError(
            EXIT_VALIDATION, f"family {name!r}: frame does not match the canonical example for params {params}"
        )
    return name, params


# --------------------------------------------------------------------------
# solving

@dataclass
class Entry:
    lam: float
    multiplicity: int
    method: str
    classification: frozenset[str]
    modes: list[md.EigenMode] = field(default_factory=list)

    @property
    def mu(self) -> float:
        return self.lam**0.25


def scan(problem, count: int, lam_max: float | None) -> list[RootRecord]:
    """First ``count`` roots, widening the μ window until enough are found."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if lam_max is not None:
            return scan_roots(problem, (0.0, lam_max), count)
        found: list[RootRecord] = []
        lo, mu_hi = 0.0, MU_START
        while mu_hi <= MU_CEILING:
            found += scan_roots(problem, (lo, mu_hi**4))
            if len(found) >= count:
                return found[:count]
            lo, mu_hi = mu_hi**4, 2 * mu_hi
    raise CliError(EXIT_SOLVER, f"{problem.label}: fewer than {count} roots below mu = {MU_CEILING:g}")


def _modes_1d(params: dict, cfg: RunConfig) -> list[Entry]:
    p = TwoBeamParams.uniform(**params)
    out = []
    for rec in scan(problem_1d(p), cfg.count, cfg.lam_max):
        ms = [md.reconstruct_1d_mode(rec, p, i, cfg.samples) for i in range(rec.multiplicity)]
        out.append(Entry(rec.lam, rec.multiplicity, "secular", ms[0].classification, ms))
    return out


def _star_setup(frame: FrameGraph, params: dict):
    geom = geometric_vectors([e.frame for e in frame.edges])
    p = StarParams(
        params.get("a", 1.0),
        params.get("d", 1.0),
        params.get("theta_gv", 0.0),
        params.get("theta_omega_v", 0.0),
        params.get("theta_omega_eta", 0.0),
        params.get("mass", 0.0),
    )
    return geom, p


def _modes_star(frame: FrameGraph, params: dict, cfg: RunConfig) -> list[Entry]:
    geom, p = _star_setup(frame, params)
    out = []
    system = None
    for rec in scan(problem_3star_planar(geom, p), cfg.count, cfg.lam_max):
        try:
            ms = [md.reconstruct_3star_mode(rec, geom, p, i, cfg.samples) for i in range(rec.multiplicity)]
        except md.ModeError:
            system = system or FundamentalSystem(star_frame(geom, p), ("v", "eta"))
            ms = md.modes_from_fundamental(system, rec, cfg.samples)
        out.append(Entry(rec.lam, rec.multiplicity, "secular", md.classify_eigenspace(ms), ms))
    return out


def _modes_antenna(params: dict, cfg: RunConfig) -> list[Entry]:
    keys = ("alpha", "mass", "theta_g0", "theta_omega0")
    args = {k: params[k] for k in keys if k in params}
    out = []
    for rec in scan(problem_antenna_omega(**args), cfg.count, cfg.lam_max):
        ms = []
        for i in range(rec.multiplicity):
            ms += md.real_basis(md.reconstruct_antenna_mode(rec, index=i, samples=cfg.samples, **args))
        for m in ms:
            m.multiplicity = 2 * rec.multiplicity
        out.append(Entry(rec.lam, 2 * rec.multiplicity, "secular", md.classify_eigenspace(ms), ms))
    return out


def _oracle_entries(frame: FrameGraph, cfg: RunConfig, fields: Sequence[str] = md.F.FIELDS) -> list[Entry]:
    """Oracle eigenvalues grouped into clusters of relative width ``cfg.tol``."""
    discrete = oracle.discretize_form(frame, cfg.elements, fields)
    want = min(cfg.count + 6, discrete.size)
    while True:
        try:
            ms = md.modes_from_oracle(discrete, want, cfg.samples, cluster_rtol=cfg.tol)
        except oracle.OracleError as exc:
            raise CliError(EXIT_SOLVER, f"oracle: {exc}") from None
        groups: list[list[md.EigenMode]] = []
        for m in ms:
            if groups and abs(m.lam - groups[-1][0].lam) <= cfg.tol * max(abs(m.lam), 1e-300):
                groups[-1].append(m)
            else:
                groups.append([m])
        capped = cfg.lam_max is not None and ms[-1].lam > cfg.lam_max
        if want == discrete.size or len(groups) > cfg.count or capped:
            break
        want = min(2 * want, discrete.size)
    if want < discrete.size:
        groups.pop()  # the last cluster may be cut off
    if cfg.lam_max is not None:
        groups = [g for g in groups if g[0].lam <= cfg.lam_max]
    out = []
    for g in groups[: cfg.count]:
        lam = float(np.mean([m.lam for m in g]))
        out.append(Entry(lam, len(g), "oracle", md.classify_eigenspace(g, frame), g))
    return out


def _antenna_closed_form(params: dict) -> bool:
    return params.get("theta_g", 0.0) == 0.0 and params.get("theta_omega", 0.0) == 0.0


def solve(frame: FrameGraph, cfg: RunConfig) -> list[Entry]:
    fam = family_of(frame)
    try:
        if fam is not None:
            name, params = fam
            if name == "two-beam-1d":
                return _modes_1d(params, cfg)
            if name == "star3-planar":
                return _modes_star(frame, params, cfg)
            if name == "antenna" and _antenna_closed_form(params):
                return _modes_antenna(params, cfg)
        return _oracle_entries(frame, cfg)
    except (SecularError, md.ModeError) as exc:
        raise CliError(EXIT_SOLVER, f"{frame.family.get('name') if frame.family else 'frame'}: {exc}") from None


def oracle_fields(frame: FrameGraph) -> tuple[str, ...]:
    name = (frame.family or {}).get("name")
    return {"two-beam-1d": ("w",), "star3-planar": ("v", "eta")}.get(name, md.F.FIELDS)


# --------------------------------------------------------------------------
# subcommands

def cmd_spectrum(frame: FrameGraph, cfg: RunConfig) -> int:
    entries = solve(frame, cfg)
    rows = [(n, e.lam, e.mu, e.multiplicity, e.method, _tags(e.classification)) for n, e in enumerate(entries, 1)]
    atomic_write(cfg.output, csv_text(("index", "lambda", "mu", "multiplicity", "method", "classification"), rows))
    return EXIT_OK


def cmd_modes(frame: FrameGraph, cfg: RunConfig) -> int:
    entries = solve(frame, cfg)
    rows, joints = [], []
    n = 0
    for e in entries:
        for m in e.modes:
            n += 1
            for eid in sorted(m.state.x):
                vals = m.state.values[eid]
                for k, x in enumerate(m.state.x[eid]):
                    rows.append((n, eid, x, *(float(np.real(vals[f][k])) for f in md.SAMPLE_KEYS)))
            joints.append(
                {
                    "mode": n,
                    "lambda": m.lam,
                    "mu": m.mu,
                    "multiplicity": e.multiplicity,
                    "method": e.method,
                    "classification": sorted(m.classification),
                    "joints": {
                        v: {"g0": _json_vec(m.g0[v]), "omega0": _json_vec(m.omega0[v])} for v in sorted(m.g0)
                    },
                }
            )
    atomic_write(cfg.output, csv_text(("mode", "edge_id", "x", *md.SAMPLE_KEYS), rows))
    atomic_write(sidecar(cfg.output, ".joints.json"), json.dumps({"modes": joints}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _secular_reference(frame: FrameGraph, cfg: RunConfig, lam_hi: float) -> tuple[str, list[float]]:
    fam = family_of(frame)
    sub = RunConfig(cfg.subcommand, cfg.input, cfg.output, cfg.count + 4, lam_hi**0.25, cfg.samples, cfg.elements, cfg.tol)
    if fam is not None and (fam[0] != "antenna" or _antenna_closed_form(fam[1])):
        entries = solve(frame, sub)
        return fam[0], [e.lam for e in entries for _ in range(e.multiplicity)]
    system = FundamentalSystem(frame)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        recs = scan_roots(system.problem(), (0.0, lam_hi))
    return "fundamental", [r.lam for r in recs for _ in range(r.multiplicity)]


def cmd_oracle(frame: FrameGraph, cfg: RunConfig) -> int:
    discrete = oracle.discretize_form(frame, cfg.elements, oracle_fields(frame))
    try:
        lams = oracle.solve_generalized(discrete, min(cfg.count, discrete.size))
    except oracle.OracleError as exc:
        raise CliError(EXIT_SOLVER, f"oracle: {exc}") from None
    try:
        label, ref = _secular_reference(frame, cfg, float(lams[-1]) * (1 + 2 * MATCH_RTOL))
    except SecularError as exc:
        raise CliError(EXIT_SOLVER, f"secular reference: {exc}") from None
    pool = sorted(ref)
    rows = []
    for n, lam in enumerate(lams, 1):
        best = min(pool, key=lambda r: abs(r - lam), default=None)
        if best is not None and abs(best - lam) <= MATCH_RTOL * abs(lam):
            pool.remove(best)
            err = abs(lam - best)
            rows.append((n, lam, best, err, err / abs(best), label))
        else:
            rows.append((n, lam, math.nan, math.nan, math.nan, "none"))
    header = ("index", "lambda_oracle", "lambda_secular", "abs_error", "rel_error", "secular_method")
    atomic_write(cfg.output, csv_text(header, rows))
    return EXIT_OK


def cmd_decompose(frame: FrameGraph, cfg: RunConfig) -> int:
    try:
        pair = md.decouple_planar(frame)
    except md.ModeError as exc:
        raise CliError(EXIT_VALIDATION, f"planar decomposition: {exc}") from None
    n, el = cfg.count, cfg.elements
    full = oracle.oracle_spectrum(frame, n, el)
    rows: list[tuple] = [("full", "full", k, x) for k, x in enumerate(full, 1)]
    report: dict[str, Any] = {"count": n, "elements": el, "tol": cfg.tol}

    def check(name: str, problems: Sequence[md.Subproblem]) -> bool:
        for p in problems:
            rows.extend((name, p.name, k, x) for k, x in enumerate(p.spectrum(n, el), 1))
        union = md.spectrum_union(problems, n, el)
        rows.extend((name, "union:" + src, k, x) for k, (x, src) in enumerate(union, 1))
        err = md.relative_mismatch([x for x, _ in union], full)
        ok = err <= cfg.tol
        report[name] = {"status": "PASS" if ok else "FAIL", "max_rel_error": err}
        print(f"{name} union equality: {'PASS' if ok else 'FAIL'} (max rel error {err:.3g})")
        return ok

    ok = check("planar", (pair.out_problem, pair.in_problem))
    try:
        scalar = md.scalar_decompositions(frame)
    except md.ModeError as exc:
        report["scalar"] = {"status": "SKIPPED", "reason": str(exc)}
        print(f"scalar decomposition skipped: {exc}")
    else:
        ok = check("scalar", list(scalar.values())) and ok
    atomic_write(cfg.output, csv_text(("decomposition", "problem", "index", "lambda"), rows))
    atomic_write(sidecar(cfg.output, ".report.json"), json.dumps(report, indent=2, sort_keys=True) + "\n")
    if not ok:
        raise CliError(EXIT_SOLVER, "decompose: spectrum union differs from the full spectrum")
    return EXIT_OK


def cmd_validate(doc: dict[str, Any], cfg: RunConfig) -> int:
    header = ("check", "entity", "lambda", "value", "expected", "status")
    try:
        frame = frame_from_dict(doc)
    except FrameError as exc:
        diags = exc.diagnostics or []
        rows = [(d.code, d.entity, math.nan, d.message, "", "FAIL") for d in diags] or [
            ("parse", "<input>", math.nan, str(exc), "", "FAIL")
        ]
        atomic_write(cfg.output, csv_text(header, rows))
        raise CliError(EXIT_VALIDATION, str(exc)) from None
    rng = np.random.default_rng(cfg.seed)
    lam_max = cfg.lam_max or 100.0
    lams = np.sort(lam_max * (1.0 - rng.random(VALIDATE_SAMPLES)))
    rows = [("diagnostics", "<frame>", math.nan, 0, 0, "PASS")]
    bad = []
    for v in frame.joints():
        d = frame.degree(v.id)
        for lam in lams:
            disp, rot = assemble_vertex_blocks(frame, v.id, float(lam))
            for label, pair in (("rank-displacement", disp), ("rank-rotation", rot)):
                r = pair.rank(RANK_RTOL)
                status = "PASS" if r == 3 * d else "FAIL"
                rows.append((label, v.id, lam, r, 3 * d, status))
                if status == "FAIL":
                    bad.append(f"joint {v.id!r} {label} = {r} != {3 * d} at lambda = {lam:.6g}")
    atomic_write(cfg.output, csv_text(header, rows))
    if bad:
        raise CliError(EXIT_VALIDATION, "; ".join(bad))
    return EXIT_OK


# --------------------------------------------------------------------------
# entry points

class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise CliError(EXIT_VALIDATION, message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="beamframe", description="Spectra and eigenmodes of semi-rigid beam frames.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--input", required=True, type=Path)
    ap.add_argument("--output", required=True, type=Path)
    ap.add_argument("--count", type=int, default=5)
    ap.add_argument("--mu-max", type=float, default=None)
    ap.add_argument("--samples", type=int, default=md.DEFAULT_SAMPLES)
    ap.add_argument("--elements", type=int, default=100)
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--seed", type=int, default=0)
    return ap


def run(cfg: RunConfig) -> int:
    doc = load_document(cfg.input)
    if cfg.subcommand == "validate":
        return cmd_validate(doc, cfg)
    try:
        frame = frame_from_dict(doc)
    except FrameError as exc:
        raise CliError(EXIT_VALIDATION, f"{cfg.input}: {exc}") from None
    handlers: dict[str, Callable[[FrameGraph, RunConfig], int]] = {
        "spectrum": cmd_spectrum,
        "modes": cmd_modes,
        "oracle": cmd_oracle,
        "decompose": cmd_decompose,
    }
    return handlers[cfg.subcommand](frame, cfg)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = RunConfig(
            ns.subcommand, ns.input, ns.output, ns.count, ns.mu_max, ns.samples, ns.elements, ns.tol, ns.seed
        )
        return run(cfg)
    except CliError as exc:
        print(f"beamframe: error: {exc}", file=sys.stderr)
        return exc.code
