"""Scenario files: JSON schema validation and construction of module objects."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import InputError
from .geometry import CurveParam, DomainSpec, dual_contains, exhaust
from .polyalg import HomPoly
from .rational import RationalExpr, dual_names
from .residues import AdmissibleSchedule, ResidualFormSpec, VarietySpec

DEFAULT_TOLERANCES = {"residue": 1e-8, "pde": 1e-6, "quadrature": 1e-4, "kernel": 1e-6}


class ConfigError(InputError):
    """Malformed scenario file; the message names the line or field."""


def _schema():
    text = resources.files("resradon").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


def _complex(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def _field_path(err: jsonschema.ValidationError) -> str:
    path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    return path.lstrip(".") or "<root>"


@dataclass
class ScenarioConfig:
    name: str
    path: Path
    raw: dict
    dom: DomainSpec
    variety: VarietySpec
    form: ResidualFormSpec | None
    points: np.ndarray
    tolerances: dict
    schedule: AdmissibleSchedule
    grid: int = 48
    contour_nodes: int = 256
    functional: dict | None = None
    potential: RationalExpr | None = None
    expect: dict = field(default_factory=dict)
    out_dir: str = "."
    formats: tuple = ("csv", "json")

    @property
    def delta(self) -> float:
        return self.dom.delta


def parse_config(data: dict, path: Path | str = "<memory>") -> ScenarioConfig:
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{path}: field {_field_path(e)}: {e.message}")

    try:
        v = data["variety"]
        gens = []
        for k, lit in enumerate(v["generators"]):
            try:
                gens.append(HomPoly.from_literal(lit))
            except InputError as exc:
                raise ConfigError(f"{path}: field variety.generators[{k}]: {exc}") from None
        n = gens[0].n
        d = data["domain"]
        dom = DomainSpec(n, float(d["radius"]), float(d.get("delta", 0.0)))
        p = v["param"]
        param = CurveParam.monomial_curve(p["powers"], p.get("s_max", np.inf))
        try:
            variety = VarietySpec(n, gens, v.get("weight"), param)
        except InputError as exc:
            raise ConfigError(f"{path}: field variety: {exc}") from None

        form = None
        if "form" in data:
            f = data["form"]
            try:
                if "leray" in f:
                    form = ResidualFormSpec.leray(f["leray"], variety.weight)
                else:
                    form = ResidualFormSpec.affine(f["affine_numerator"], n, variety.weight)
            except InputError as exc:
                raise ConfigError(f"{path}: field form: {exc}") from None

        potential = None
        if "potential" in data:
            try:
                potential = RationalExpr.parse(data["potential"], dual_names(n))
            except InputError as exc:
                raise ConfigError(f"{path}: field potential: {exc}") from None

        functional = data.get("functional")
        if functional and functional["kind"] == "martineau":
            try:
                RationalExpr.parse(functional["g"], dual_names(n))
            except InputError as exc:
                raise ConfigError(f"{path}: field functional.g: {exc}") from None

        pts = []
        check_dom = exhaust(dom, dom.delta) if dom.delta > 0 else dom
        for k, row in enumerate(data["test_points"]):
            if len(row) != n + 1:
                raise ConfigError(f"{path}: field test_points[{k}]: expected {n + 1} coordinates")
            xi = np.array([_complex(c) for c in row])
            if not dual_contains(check_dom, xi):
                raise ConfigError(f"{path}: field test_points[{k}]: point is outside the dual of the exhausted domain")
            pts.append(xi)
        points = np.array(pts, dtype=complex).reshape(-1, n + 1)

        tolerances = dict(DEFAULT_TOLERANCES)
        tolerances.update(data.get("tolerances", {}))
        schedule = AdmissibleSchedule(**data.get("schedule", {}))
        out = data.get("output", {})
    except ConfigError:
        raise
    except InputError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    return ScenarioConfig(
        name=data["name"],
        path=Path(path),
        raw=data,
        dom=dom,
        variety=variety,
        form=form,
        points=points,
        tolerances=tolerances,
        schedule=schedule,
        grid=int(data.get("grid", 48)),
        contour_nodes=int(data.get("contour_nodes", 256)),
        functional=functional,
        potential=potential,
        expect=data.get("expect", {}),
        out_dir=out.get("dir", "."),
        formats=tuple(out.get("format", ["csv", "json"])),
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read scenario file: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: line 1: top-level value must be an object")
    return parse_config(data, path)
