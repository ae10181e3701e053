"""Command-line scenario runner.

    resradon {residue,radon,fantappie,invert,verify} --scenario FILE
             [--out DIR] [--tol X] [--kappa K] [--grid N] [--format csv,json]

Command-line flags take precedence over values in the scenario file, which
take precedence over built-in defaults.  Exit status: 0 success, 1 some row
failed its tolerance (or did not stabilise), 2 invalid input, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, load_config
from .errors import GeometryError, InputError, NearIncidenceError, NotStabilizedError, ResRadonError
from .geometry import dual_contains, exhaust
from .rational import RationalExpr, dual_names
from .transforms import (
    BoundaryResidue,
    PointMass,
    RadonSetup,
    euler_contraction,
    fantappie_transform,
    martineau_invert,
    radon_components,
    radon_potential_batch,
    verify_system,
    Covector1Form,
)

log = logging.getLogger("resradon")

SUBCOMMANDS = ("residue", "radon", "fantappie", "invert", "verify")
EXIT_OK, EXIT_TOL, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3
TWO_PI_I = 2j * np.pi

# tolerance governed by --tol for each subcommand
GOVERNING_TOL = {"residue": "residue", "radon": "residue", "fantappie": "residue", "invert": "quadrature",
                 "verify": "pde"}


@dataclasses.dataclass
class Row:
    index: int
    xi: np.ndarray
    f: np.ndarray | None = None
    pde_residual: list | None = None
    euler: float | None = None
    status: str = "ok"
    checks: dict = dataclasses.field(default_factory=dict)
    message: str = ""

    def check(self, name, value, tol):
        self.checks[name] = {"value": float(value), "tol": float(tol), "passed": bool(value <= tol)}

    @property
    def failed(self) -> bool:
        return self.status == "not_stabilized" or any(not c["passed"] for c in self.checks.values())


@dataclasses.dataclass
class ResultTable:
    rows: list
    n: int
    m: int
    metadata: dict


# ---------------------------------------------------------------------------
# per-row work


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1.0))


def _symbolic_dg(expr: RationalExpr):
    parts = [expr.diff(v) for v in expr.variables]
    return lambda xi: np.array([complex(p.on_last_axis(np.asarray(xi)[None, :])[0]) for p in parts])


class _Runner:
    def __init__(self, cfg: ScenarioConfig, sub: str):
        self.cfg, self.sub = cfg, sub
        self.tol = cfg.tolerances
        self.setup = None
        if sub in ("residue", "radon", "verify") or (
                sub == "fantappie" and (cfg.functional or {}).get("kind") == "boundary_residue"):
            if cfg.form is None:
                if not (sub == "verify" and cfg.potential is not None):
                    raise ConfigError(f"{cfg.path}: field form: required by the {sub} subcommand")
            else:
                self.setup = RadonSetup.build(cfg.variety, cfg.form, cfg.dom, cfg.delta, cfg.contour_nodes)
        self.mu = None
        self.dg = None
        if sub in ("fantappie", "invert"):
            self._build_functional()
        if sub == "residue":
            self.mu = BoundaryResidue(cfg.variety, cfg.form, cfg.dom, cfg.delta, "tube", cfg.contour_nodes,
                                      dataclasses.replace(cfg.schedule, eps0=min(cfg.schedule.eps0, 1e-3),
                                                          tol=min(cfg.schedule.tol, 1e-12)))

    def _build_functional(self):
        cfg = self.cfg
        fn = cfg.functional
        if fn is None:
            raise ConfigError(f"{cfg.path}: field functional: required by the {self.sub} subcommand")
        kind = fn["kind"]
        if self.sub == "invert" and kind != "martineau":
            raise ConfigError(f"{cfg.path}: field functional.kind: invert needs a martineau functional")
        if kind == "point_mass":
            self.mu = PointMass([complex(*c) if isinstance(c, list) else complex(c) for c in fn["z"]], cfg.dom)
        elif kind == "boundary_residue":
            if cfg.form is None:
                raise ConfigError(f"{cfg.path}: field form: boundary residues need a form")
            self.mu = BoundaryResidue(cfg.variety, cfg.form, cfg.dom, fn.get("delta", cfg.delta),
                                      fn.get("method", "tube"), cfg.contour_nodes)
        else:
            g = RationalExpr.parse(fn["g"], dual_names(cfg.dom.n))
            self.mu = martineau_invert(g.on_last_axis, cfg.dom, fn.get("nu", 0.25), cfg.grid,
                                       tol=cfg.tolerances["quadrature"] * 1e-2)
            self.dg = _symbolic_dg(g)
            self.mu.weights(self.mu.grid)
            self.mu.weights(self.mu.grid + self.mu.grid // 2)
        dual = getattr(self.mu, "domain", cfg.dom)
        for k, xi in enumerate(cfg.points):
            if not dual_contains(dual, xi):
                raise ConfigError(f"{cfg.path}: field test_points[{k}]: outside the dual domain of the functional")

    def row(self, k: int) -> Row:
        xi = self.cfg.points[k]
        row = Row(k, xi)
        try:
            getattr(self, f"_{self.sub}")(row)
        except NearIncidenceError as exc:
            row.status, row.message = "skipped_near_incidence", str(exc)
        except NotStabilizedError as exc:
            row.status, row.message = "not_stabilized", str(exc)
        return row

    def _radon_f(self, row):
        self.setup.check_incidence(row.xi)
        return radon_components(self.setup, row.xi)

    def _finish(self, row, f, euler_target=0.0, euler_tol=None):
        row.f = np.asarray(f)
        e = euler_contraction(Covector1Form(row.xi, row.f))
        row.euler = abs(e)
        row.check("euler_contraction", abs(e - euler_target), euler_tol or self.tol["residue"])

    def _residue(self, row):
        f = self._radon_f(row)
        tube = fantappie_transform(self.mu, row.xi).f / TWO_PI_I**2
        row.check("tube_vs_contour", _rel(tube, f), self.tol["residue"])
        self._finish(row, f)

    def _radon(self, row):
        f = self._radon_f(row)
        if self.cfg.expect.get("vanishing"):
            row.check("vanishing", float(np.linalg.norm(f)), self.tol["kernel"])
        self._finish(row, f)

    def _fantappie(self, row):
        f = fantappie_transform(self.mu, row.xi).f
        if isinstance(self.mu, PointMass):
            self._finish(row, f, euler_target=1.0)
            return
        if isinstance(self.mu, BoundaryResidue):
            ref = TWO_PI_I**2 * self._radon_f(row)
            row.check("radon_compatibility", _rel(f, ref), self.tol["residue"])
            self._finish(row, f, euler_tol=self.tol["residue"] * max(1.0, np.max(np.abs(f))))
            return
        self._invert(row, f)

    def _invert(self, row, f=None):
        f = fantappie_transform(self.mu, row.xi).f if f is None else f
        ref = self.dg(row.xi)
        row.check("dg_roundtrip", float(np.max(np.abs(f - ref)) / max(np.max(np.abs(ref)), 1e-300)),
                  self.tol["quadrature"])
        self._finish(row, f, euler_tol=self.tol["quadrature"])

    def _verify(self, row):
        cfg = self.cfg
        if cfg.potential is not None:
            g = cfg.potential.on_last_axis
            f = _symbolic_dg(cfg.potential)(row.xi)
        else:
            self.setup.check_incidence(row.xi)
            g = lambda x: radon_potential_batch(self.setup, x)
            f = radon_components(self.setup, row.xi)
        dual = exhaust(cfg.dom, cfg.delta) if cfg.delta > 0 else cfg.dom
        rep = verify_system(g, cfg.variety.generators, row.xi[None, :], dom=dual)[0]
        if rep.status != "ok":
            row.status, row.message = "skipped_near_incidence", "Cauchy stencil does not fit inside the dual domain"
            return
        row.pde_residual = [float(r) for r in rep.relative]
        for j, r in enumerate(row.pde_residual, start=1):
            row.check(f"pde[{j}]", r, self.tol["pde"])
        self._finish(row, f)


def run_scenario(config_path, subcommand: str, flags: dict | None = None):
    """Run one subcommand over all test points.

    Returns ``(exit_status, table, written_paths)``.
    """
    flags = flags or {}
    if subcommand not in SUBCOMMANDS:
        raise InputError(f"unknown subcommand {subcommand!r}")
    cfg = load_config(config_path)
    if flags.get("tol") is not None:
        if not flags["tol"] > 0:
            raise InputError("--tol must be positive")
        cfg.tolerances[GOVERNING_TOL[subcommand]] = float(flags["tol"])
    if flags.get("kappa") is not None:
        cfg.schedule = dataclasses.replace(cfg.schedule, kappa=float(flags["kappa"]))
        if cfg.schedule.kappa < 2:
            raise InputError("--kappa must be >= 2")
    if flags.get("grid") is not None:
        if flags["grid"] < 8:
            raise InputError("--grid must be >= 8")
        cfg.grid = int(flags["grid"])
    out_dir = Path(flags.get("out") or cfg.out_dir)
    formats = tuple(flags.get("format") or cfg.formats)

    t0 = time.perf_counter()
    try:
        runner = _Runner(cfg, subcommand)
    except GeometryError as exc:
        raise InputError(f"{cfg.path}: unsupported geometry: {exc}") from None
    workers = max(1, min(4, len(cfg.points)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(runner.row, range(len(cfg.points))))
    rows.sort(key=lambda r: r.index)
    meta = {
        "scenario": cfg.name,
        "subcommand": subcommand,
        "config": str(cfg.path),
        "tolerances": cfg.tolerances,
        "schedule": dataclasses.asdict(cfg.schedule),
        "grid": cfg.grid,
        "contour_nodes": cfg.contour_nodes,
        "domain": {"radius": cfg.dom.radius, "delta": cfg.delta},
        "workers": workers,
        "wall_time_s": time.perf_counter() - t0,
    }
    table = ResultTable(rows, cfg.dom.n, cfg.variety.m, meta)
    paths = emit_report(table, formats, out_dir, f"{cfg.name}_{subcommand}")
    status = EXIT_TOL if any(r.failed for r in rows) else EXIT_OK
    return status, table, paths


# ---------------------------------------------------------------------------
# reports


def _num(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def csv_header(n: int, m: int) -> list:
    cols = [f"xi_re[{j}]" for j in range(n + 1)] + [f"xi_im[{j}]" for j in range(n + 1)]
    cols += [f"f_re[{j}]" for j in range(n + 1)] + [f"f_im[{j}]" for j in range(n + 1)]
    cols += [f"pde_residual[{k}]" for k in range(1, m + 1)]
    return cols + ["euler_contraction", "status"]


def _csv_row(r: Row, n: int, m: int) -> list:
    f = r.f if r.f is not None else [None] * (n + 1)
    out = [_num(x.real) for x in r.xi] + [_num(x.imag) for x in r.xi]
    out += [_num(None if x is None else x.real) for x in f] + [_num(None if x is None else x.imag) for x in f]
    pde = r.pde_residual or [None] * m
    out += [_num(x) for x in pde]
    return out + [_num(r.euler), r.status]


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _json_row(r: Row) -> dict:
    pair = lambda v: [_json_safe(float(v.real)), _json_safe(float(v.imag))]
    return {
        "index": r.index,
        "xi": [pair(x) for x in r.xi],
        "f": None if r.f is None else [pair(x) for x in r.f],
        "pde_residual": r.pde_residual,
        "euler_contraction": r.euler,
        "status": r.status,
        "checks": r.checks,
        "message": r.message,
    }


def emit_report(table: ResultTable, formats, out_dir, stem: str) -> list:
    """Write ``stem.csv`` and/or ``stem.json`` into ``out_dir``; returns the paths."""
    if not table.rows:
        log.warning("result table is empty; writing header-only output")
    out_dir = Path(out_dir)
    paths = []
    out_dir.mkdir(parents=True, exist_ok=True)
    if "csv" in formats:
        p = out_dir / f"{stem}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(csv_header(table.n, table.m))
            for r in table.rows:
                w.writerow(_csv_row(r, table.n, table.m))
        paths.append(p)
    if "json" in formats:
        p = out_dir / f"{stem}.json"
        doc = {"metadata": table.metadata, "rows": [_json_row(r) for r in table.rows]}
        p.write_text(json.dumps(doc, indent=2) + "\n")
        paths.append(p)
    return paths


# ---------------------------------------------------------------------------


def _formats(text: str):
    fmts = tuple(x.strip() for x in text.split(",") if x.strip())
    bad = [f for f in fmts if f not in ("csv", "json")]
    if bad or not fmts:
        raise argparse.ArgumentTypeError(f"formats must be csv and/or json, got {text!r}")
    return fmts


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="resradon", description="Residue currents and their Radon transforms.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--tol", type=float, help="tolerance for the subcommand's main check")
        p.add_argument("--kappa", type=float, help="tube schedule hierarchy exponent")
        p.add_argument("--grid", type=int, help="sphere quadrature resolution")
        p.add_argument("--format", type=_formats, help="comma-separated: csv,json")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    flags = {k: getattr(args, k) for k in ("out", "tol", "kappa", "grid", "format")}
    try:
        status, table, paths = run_scenario(args.scenario, args.command, flags)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InputError, ResRadonError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    counts = {}
    for r in table.rows:
        counts[r.status] = counts.get(r.status, 0) + 1
    failed = sum(r.failed for r in table.rows)
    print(f"{table.metadata['scenario']} {args.command}: {len(table.rows)} rows {counts}, "
          f"{failed} failing; wrote {', '.join(str(p) for p in paths)}")
    return status


if __name__ == "__main__":
    sys.exit(main())
