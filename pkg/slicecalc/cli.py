"""
slicecalc - numerical verification of slice Clifford analysis identities.

Commands (high level):
  sc verify      --m 2 --profile kind=disk,u0=0,v0=2,R=0.5 --resolutions 64 --functions identity,conjugate,exp
  sc converge    --resolutions 32,48,64 --identities borel-pompeiu --functions conjugate
  sc hodge       --functions conjugate --degree 6
  sc kernel-dump --m 2 --points pairs.txt --format csv

`--command verify` is accepted in place of the subcommand. Every command takes
`--config run.yaml` (lower_snake_case keys mirroring the flags, plus a
`settings` mapping with `log_file` and `workers`); flags win over the file.

Exit codes:
  0  every identity passes its tolerance
  1  at least one identity fails
  2  usage or configuration error
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import __version__
from .clifford import MAX_DIM, Paravector, axiom_defects
from .errors import ArgumentError, ConfigError, DomainError, HypothesisViolationError, SingularityError
from .geometry import DEFAULT_SPHERE_ORDER, AxialDomain, ProfileRegion, build_domain, gauss_residual
from .hodge import (
    DEFAULT_DEGREE,
    build_basis,
    complementarity_defect,
    idempotence_defect,
    orthogonality_residual,
    project_P,
    q_image_trace_check,
)
from .kernels import cauchy_kernel_array, decomposition_defects, derivative_kernel, global_kernel
from .operators import (
    FieldSample,
    ResidualReport,
    borel_pompeiu_residual,
    boundedness_probe,
    cauchy_reproduction_residual,
    convergence_orders,
    extension_criterion_check,
    exterior_monogenicity_check,
    m1_oracle_residual,
    plemelj_jump_check,
    right_inverse_residual,
    teodorescu_sliceness_residual,
)
from .slicefn import SliceFunction, is_slice_monogenic, make_named, parse_function_name

logger = logging.getLogger(__name__)

SCHEMA_ID = "slicecalc/1"
PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))
TOLERANCES_PATH = os.path.join(PACKAGE_DIR, "tolerances.yaml")
SCHEMA_PATH = os.path.join(PACKAGE_DIR, "schema.json")

COMMANDS = ("verify", "converge", "hodge", "kernel-dump")
FORMATS = ("json", "csv")
IDENTITIES = (
    "clifford-axioms",
    "kernel-decomposition",
    "cauchy",
    "borel-pompeiu",
    "right-inverse",
    "exterior-monogenicity",
    "m1-oracle",
    "sliceness",
    "plemelj",
    "extension",
    "gauss",
)
CONVERGE_ONLY = ("boundedness",)
FUNCTION_FREE = ("clifford-axioms", "kernel-decomposition", "m1-oracle")
HODGE_IDENTITIES = ("hodge-complementarity", "hodge-orthogonality", "hodge-idempotence", "im-q-trace")

DEFAULT_PROFILE = "kind=disk,u0=0,v0=2,R=0.5"
AXIOM_CASES = 10000
DECOMPOSITION_CASES = 1000
SLICENESS_PAIRS = 32
CSV_COLUMNS = ("identity", "function", "resolution", "max_residual", "passed", "runtime_ms")
DUMP_COLUMNS = ("line", "q", "x", "singular", "s_inv", "k", "k_e0")


def eprint(*args: Any) -> None:
    print(*args, file=sys.stderr)


def utc_now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


# --------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    command: str = "verify"
    m: int = 2
    profile: ProfileRegion = field(default_factory=lambda: ProfileRegion.parse(DEFAULT_PROFILE))
    resolutions: List[int] = field(default_factory=lambda: [32, 48, 64])
    sphere_order: int = DEFAULT_SPHERE_ORDER
    functions: List[str] = field(default_factory=lambda: ["identity", "conjugate", "exp"])
    identities: List[str] = field(default_factory=list)
    p: float = 4.0
    seed: int = 7
    trials: int = 20
    degree: int = DEFAULT_DEGREE
    out: Optional[str] = None
    format: str = "json"
    points: Optional[str] = None
    log_file: Optional[str] = None
    workers: int = 1

    def known_identities(self) -> Tuple[str, ...]:
        if self.command == "hodge":
            return HODGE_IDENTITIES
        if self.command == "converge":
            return IDENTITIES + CONVERGE_ONLY
        return IDENTITIES

    def selected_identities(self) -> List[str]:
        return list(self.identities) if self.identities else list(self.known_identities())

    def validate(self) -> List[str]:
        errors: List[str] = []
        if self.command not in COMMANDS:
            errors.append(f"command must be one of {list(COMMANDS)}, got {self.command!r}")
        if not 1 <= self.m <= MAX_DIM:
            errors.append(f"m must lie in 1..{MAX_DIM}, got {self.m}")
        if not self.resolutions:
            errors.append("at least one resolution is required")
        elif any(n < 2 for n in self.resolutions):
            errors.append(f"resolutions must be at least 2, got {self.resolutions}")
        elif any(b <= a for a, b in zip(self.resolutions, self.resolutions[1:])):
            errors.append(f"resolutions must be strictly increasing, got {self.resolutions}")
        if self.command == "converge" and len(self.resolutions) < 2:
            errors.append("converge needs at least two resolutions")
        errors.extend(self.profile.validate())
        if self.sphere_order < 1:
            errors.append(f"sphere_order must be positive, got {self.sphere_order}")
        if self.format not in FORMATS:
            errors.append(f"format must be one of {list(FORMATS)}, got {self.format!r}")
        if self.command != "kernel-dump":
            if not self.functions:
                errors.append("the function list is empty")
            for name in self.functions:
                try:
                    parse_function_name(name, max(1, min(self.m, MAX_DIM)))
                except ArgumentError as exc:
                    errors.append(str(exc))
        known = self.known_identities()
        for name in self.identities:
            if name not in known:
                errors.append(f"unknown identity {name!r} for {self.command}; expected one of {', '.join(known)}")
        if self.trials < 1:
            errors.append(f"trials must be at least 1, got {self.trials}")
        if self.degree < 0:
            errors.append(f"degree must be non-negative, got {self.degree}")
        if self.workers < 1:
            errors.append(f"workers must be at least 1, got {self.workers}")
        if self.command == "kernel-dump" and not self.points:
            errors.append("kernel-dump needs --points")
        return errors

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "m": self.m,
            "profile": self.profile.to_dict(),
            "resolutions": list(self.resolutions),
            "sphere_order": self.sphere_order,
            "functions": list(self.functions),
            "identities": self.selected_identities(),
            "p": self.p,
            "seed": self.seed,
            "trials": self.trials,
            "degree": self.degree,
            "format": self.format,
            "points": self.points,
            "settings": {"log_file": self.log_file, "workers": self.workers},
        }

    def domain(self, resolution: Optional[int] = None) -> AxialDomain:
        n = resolution if resolution is not None else self.resolutions[-1]
        return build_domain(self.profile.with_resolution(n), self.m, self.sphere_order)


def _as_list(value: Any, key: str) -> List[str]:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    if isinstance(value, list):
        return [str(v).strip() for v in value]
    raise ConfigError(f"'{key}' must be a list or a comma-separated string, got {value!r}")


def _as_int_list(value: Any, key: str) -> List[int]:
    try:
        return [int(v) for v in _as_list(value, key)] if not isinstance(value, int) else [value]
    except ValueError:
        raise ConfigError(f"'{key}' must hold integers, got {value!r}") from None


def _number(value: Any, key: str, kind: Callable[[Any], Any]) -> Any:
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{key}' must be a number, got {value!r}") from None


_CONFIG_KEYS = ("m", "profile", "resolutions", "sphere_order", "functions", "identities", "p", "seed",
                "trials", "degree", "out", "format", "points", "settings")


def apply_mapping(cfg: RunConfig, data: Dict[str, Any]) -> RunConfig:
    """Overlay a config mapping (YAML file contents) on cfg."""
    unknown = sorted(set(data) - set(_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    if "m" in data:
        cfg.m = _number(data["m"], "m", int)
    if "profile" in data:
        prof = data["profile"]
        try:
            if isinstance(prof, str):
                cfg.profile = ProfileRegion.parse(prof)
            elif isinstance(prof, dict):
                cfg.profile = ProfileRegion.from_mapping(prof)
            else:
                raise ConfigError(f"'profile' must be a mapping or a kind=...,key=value string, got {prof!r}")
        except ArgumentError as exc:
            raise ConfigError(str(exc)) from None
    if "resolutions" in data:
        cfg.resolutions = _as_int_list(data["resolutions"], "resolutions")
    if "sphere_order" in data:
        cfg.sphere_order = _number(data["sphere_order"], "sphere_order", int)
    if "functions" in data:
        cfg.functions = _as_list(data["functions"], "functions")
    if "identities" in data:
        cfg.identities = _as_list(data["identities"], "identities")
    for key, kind in (("p", float), ("seed", int), ("trials", int), ("degree", int)):
        if key in data:
            setattr(cfg, key, _number(data[key], key, kind))
    for key in ("out", "format", "points"):
        if key in data and data[key] is not None:
            setattr(cfg, key, str(data[key]))
    settings = data.get("settings") or {}
    if not isinstance(settings, dict):
        raise ConfigError(f"'settings' must be a mapping, got {settings!r}")
    if settings.get("log_file"):
        cfg.log_file = str(settings["log_file"])
    if "workers" in settings:
        cfg.workers = _number(settings["workers"], "settings.workers", int)
    return cfg


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping, got {type(data).__name__}")
    return data


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.cmd)
    if getattr(args, "config", None):
        apply_mapping(cfg, load_config_file(args.config))
    flags: Dict[str, Any] = {}
    for key in ("m", "profile", "resolutions", "sphere_order", "functions", "identities", "p", "seed",
                "trials", "degree", "out", "format", "points"):
        value = getattr(args, key, None)
        if value is not None:
            flags[key] = value
    settings = {}
    if getattr(args, "workers", None) is not None:
        settings["workers"] = args.workers
    if getattr(args, "log_file", None):
        settings["log_file"] = args.log_file
    if settings:
        flags["settings"] = settings
    return apply_mapping(cfg, flags)


def load_tolerances(path: str = TOLERANCES_PATH) -> Dict[str, Dict[str, float]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f.read()) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read tolerance table {path}: {exc}") from None
    if not isinstance(data, dict) or "version" not in data:
        raise ConfigError(f"tolerance table {path} needs a 'version' key")
    table = data.get("identities")
    if not isinstance(table, dict):
        raise ConfigError(f"tolerance table {path} needs an 'identities' mapping")
    out: Dict[str, Dict[str, float]] = {}
    for name, entry in table.items():
        if not isinstance(entry, dict):
            raise ConfigError(f"tolerance entry {name!r} must be a mapping")
        out[name] = {k: float(v) for k, v in entry.items()}
    return out


# --------------------------------------------------------------------------
# reports

def validate_report(data: Any, schema: Dict[str, Any], path: str = "$") -> List[str]:
    errors: List[str] = []
    kind = schema.get("type")
    checks = {
        "object": lambda v: isinstance(v, dict),
        "array": lambda v: isinstance(v, list),
        "string": lambda v: isinstance(v, str),
        "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "boolean": lambda v: isinstance(v, bool),
    }
    if kind in checks and not checks[kind](data):
        return [f"{path} must be of type {kind}, got {type(data).__name__}"]
    if "const" in schema and data != schema["const"]:
        errors.append(f"{path} must equal {schema['const']!r}, got {data!r}")
    if "enum" in schema and data not in schema["enum"]:
        errors.append(f"{path} must be one of {schema['enum']}, got {data!r}")
    if schema.get("minLength") and isinstance(data, str) and len(data) < int(schema["minLength"]):
        errors.append(f"{path} too short (min {schema['minLength']})")
    if isinstance(data, dict):
        for k in schema.get("required", []):
            if k not in data:
                errors.append(f"{path} is missing required field '{k}'")
        for k, rule in schema.get("properties", {}).items():
            if k in data:
                errors.extend(validate_report(data[k], rule, f"{path}.{k}"))
    if isinstance(data, list) and "items" in schema:
        for i, item in enumerate(data):
            errors.extend(validate_report(item, schema["items"], f"{path}[{i}]"))
    return errors


def load_schema() -> Dict[str, Any]:
    with open(SCHEMA_PATH, "r", encoding="utf-8") as f:
        return json.load(f)


@dataclass
class Outcome:
    identity: str
    function: str
    report: Optional[ResidualReport]
    passed: bool
    reason: str = ""

    @property
    def skipped(self) -> bool:
        return self.report is None


@dataclass
class ReportEnvelope:
    command: str
    config: Dict[str, Any]
    outcomes: List[Outcome] = field(default_factory=list)
    orders: Dict[str, Dict[str, List[Optional[float]]]] = field(default_factory=dict)
    passed: Dict[str, bool] = field(default_factory=dict)
    boundedness: Optional[Dict[str, Any]] = None
    rows: Optional[List[Dict[str, Any]]] = None
    runtime_s: float = 0.0

    @property
    def all_passed(self) -> bool:
        return all(v for k, v in self.passed.items() if k != "all")

    @property
    def exit_code(self) -> int:
        return 0 if self.all_passed else 1

    def to_dict(self) -> Dict[str, Any]:
        passed = dict(self.passed)
        passed["all"] = self.all_passed
        out: Dict[str, Any] = {
            "schema": SCHEMA_ID,
            "command": self.command,
            "version": __version__,
            "config": self.config,
            "reports": [o.report.to_dict() for o in self.outcomes if o.report is not None],
            "orders": self.orders,
            "passed": passed,
            "skipped": [
                {"identity": o.identity, "function": o.function, "reason": o.reason}
                for o in self.outcomes if o.skipped
            ],
            "runtime_s": self.runtime_s,
        }
        if self.boundedness is not None:
            out["boundedness"] = self.boundedness
        if self.rows is not None:
            out["rows"] = self.rows
        return out


def _log_identity(log_path: Optional[str], identity: str, resolution: int, status: str,
                  max_residual: float, duration: float) -> None:
    """Append one line to the run log."""
    if not log_path:
        return
    line = (f"{utc_now_iso()}  VERIFY  identity={identity:<22s} n={resolution:<4d} status={status:<4s} "
            f"max={max_residual:.3e} duration={duration:.1f}s")
    try:
        parent = os.path.dirname(log_path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(log_path, "a", encoding="utf-8") as f:
            f.write(line + "\n")
    except OSError:
        pass


# --------------------------------------------------------------------------
# identities

def _single_probe(domain: AxialDomain, seed: int) -> List[Paravector]:
    return domain.lift([domain.center], seed)


def _scalar_report(identity: str, function: str, domain: AxialDomain, value: float, seed: int,
                   extra: Optional[Dict[str, Any]] = None) -> ResidualReport:
    return ResidualReport(identity, _single_probe(domain, seed), [float(value)], domain.resolution,
                          function=function, extra=dict(extra or {}))


def _tabulated(fn: SliceFunction, domain: AxialDomain) -> FieldSample:
    nodes = domain.slice_quad.nodes
    F1, F2 = fn.stem.values(nodes[:, 0], nodes[:, 1])
    return FieldSample.from_stem_values(domain, F1, F2, name=f"tabulated[{fn.name}]")


def evaluate_identity(identity: str, fn: SliceFunction, domain: AxialDomain, cfg: RunConfig,
                      tolerances: Dict[str, Dict[str, float]]) -> Outcome:
    """Run one identity for one function on one domain and decide pass/fail."""
    started = time.perf_counter()
    entry = tolerances.get(identity, {})
    tol = entry.get("tolerance", math.inf)
    seed, workers = cfg.seed, cfg.workers
    name = "-" if identity in FUNCTION_FREE else fn.name
    interior = domain.lift(domain.interior_probes(), seed)
    monogenic, _ = is_slice_monogenic(fn, domain.interior_probes())
    extra_pass = True

    if identity == "clifford-axioms":
        x, defects = axiom_defects(cfg.m, AXIOM_CASES, np.random.default_rng(seed))
        probes = [Paravector(cfg.m, row[0], tuple(row[1:])) for row in x]
        report = ResidualReport(identity, probes, defects.tolist(), domain.resolution, function=name)
    elif identity == "kernel-decomposition":
        probes, defects = decomposition_defects(cfg.m, DECOMPOSITION_CASES, np.random.default_rng(seed))
        report = ResidualReport(identity, probes, defects.tolist(), domain.resolution, function=name)
    elif identity == "m1-oracle":
        if cfg.m != 1 or domain.profile.kind != "disk":
            return Outcome(identity, name, None, True, "the plane oracle needs m = 1 and a disk profile")
        report = m1_oracle_residual(domain, interior, workers)
    elif identity == "cauchy":
        if not monogenic:
            return Outcome(identity, name, None, True, f"{fn.name} is not slice monogenic")
        report = cauchy_reproduction_residual(fn, domain, interior, workers)
    elif identity == "borel-pompeiu":
        report = borel_pompeiu_residual(fn, domain, interior, workers=workers)
    elif identity == "right-inverse":
        report = right_inverse_residual(fn, domain, interior, workers=workers)
        extra_pass = report.extra.get("slice_form_max", 0.0) <= tol
    elif identity == "exterior-monogenicity":
        report = exterior_monogenicity_check(fn, domain, domain.lift(domain.exterior_probes(), seed), workers)
    elif identity == "sliceness":
        report = teodorescu_sliceness_residual(_tabulated(fn, domain), domain, SLICENESS_PAIRS, seed, workers)
    elif identity == "plemelj":
        report = plemelj_jump_check(fn, domain, domain.lift(domain.boundary_probes(), seed), workers)
    elif identity == "extension":
        verdict = extension_criterion_check(fn, domain, tol, seed=seed, workers=workers)
        report = ResidualReport(identity, list(verdict.probes), list(verdict.interior_residuals),
                                domain.resolution, function=name)
        report.extra.update({
            "exterior_residual": verdict.exterior_residual,
            "interior_extendable": verdict.is_interior_extendable,
            "exterior_extendable": verdict.is_exterior_extendable,
            "expected_interior": monogenic,
        })
        floor = entry.get("control_factor", 10.0) * tol
        if monogenic:
            extra_pass = verdict.is_interior_extendable
        else:
            extra_pass = verdict.interior_residual >= floor and verdict.exterior_residual >= floor
        tol = math.inf
    elif identity == "gauss":
        value = gauss_residual(domain, fn, make_named("identity", cfg.m), domain.sphere_units()[0])
        report = _scalar_report(identity, name, domain, value, seed, {"partner": "identity"})
    else:
        raise ArgumentError(f"unknown identity {identity!r}")

    report.runtime_ms = (time.perf_counter() - started) * 1000.0
    passed = bool(report.max_residual <= tol and extra_pass)
    return Outcome(identity, name, report, passed)


def _functions(cfg: RunConfig, domain: AxialDomain) -> List[SliceFunction]:
    return [parse_function_name(name, cfg.m, domain) for name in cfg.functions]


def _record(envelope: ReportEnvelope, outcome: Outcome, cfg: RunConfig, resolution: int) -> None:
    envelope.outcomes.append(outcome)
    if outcome.skipped:
        status, value = "skip", 0.0
        logger.debug("%s[%s] skipped: %s", outcome.identity, outcome.function, outcome.reason)
    else:
        status, value = ("pass" if outcome.passed else "fail"), outcome.report.max_residual
    duration = outcome.report.runtime_ms / 1000.0 if outcome.report else 0.0
    _log_identity(cfg.log_file, outcome.identity, resolution, status, value, duration)


def _sweep(cfg: RunConfig, domain: AxialDomain, tolerances, envelope: ReportEnvelope,
           identities: Sequence[str]) -> Dict[Tuple[str, str], Outcome]:
    results: Dict[Tuple[str, str], Outcome] = {}
    functions = _functions(cfg, domain)
    for identity in identities:
        targets = functions[:1] if identity in FUNCTION_FREE else functions
        for fn in targets:
            outcome = evaluate_identity(identity, fn, domain, cfg, tolerances)
            _record(envelope, outcome, cfg, domain.resolution)
            results[(identity, outcome.function)] = outcome
    return results


def run_verify(cfg: RunConfig) -> ReportEnvelope:
    started = time.perf_counter()
    tolerances = load_tolerances()
    envelope = ReportEnvelope("verify", cfg.to_dict())
    identities = [i for i in cfg.selected_identities() if i in IDENTITIES]
    results = _sweep(cfg, cfg.domain(), tolerances, envelope, identities)
    for identity in identities:
        envelope.passed[identity] = all(o.passed for (i, _), o in results.items() if i == identity)
    envelope.runtime_s = time.perf_counter() - started
    return envelope


def _order_passes(resolutions: Sequence[int], residuals: Sequence[float], min_order: float) -> bool:
    """Overall order between the coarsest and finest run; a converged finest residual passes."""
    r0, r1 = residuals[0], residuals[-1]
    if r1 < 1e-11:
        return True
    if r0 <= 0.0:
        return False
    return math.log(r0 / r1) / math.log(resolutions[-1] / resolutions[0]) >= min_order


def run_converge(cfg: RunConfig) -> ReportEnvelope:
    started = time.perf_counter()
    if len(cfg.resolutions) < 2:
        raise ConfigError("converge needs at least two resolutions")
    selected = cfg.selected_identities()
    if "boundedness" in selected and cfg.p <= max(cfg.m, 2):
        raise HypothesisViolationError(
            f"the L^p bound of T needs p > max(m, 2) = {max(cfg.m, 2)}, got p = {cfg.p:g}")
    tolerances = load_tolerances()
    envelope = ReportEnvelope("converge", cfg.to_dict())
    identities = [i for i in selected if i in IDENTITIES]
    series: Dict[Tuple[str, str], List[Outcome]] = {}
    ratios: List[float] = []
    for n in cfg.resolutions:
        domain = cfg.domain(n)
        for key, outcome in _sweep(cfg, domain, tolerances, envelope, identities).items():
            series.setdefault(key, []).append(outcome)
        if "boundedness" in selected:
            ratios.append(boundedness_probe(domain, cfg.p, cfg.trials, cfg.seed, workers=cfg.workers))
    for (identity, function), outcomes in series.items():
        passed = envelope.passed.setdefault(identity, True)
        if any(o.skipped for o in outcomes):
            continue
        residuals = [o.report.max_residual for o in outcomes]
        envelope.orders.setdefault(identity, {})[function] = convergence_orders(cfg.resolutions, residuals)
        ok = outcomes[-1].passed
        min_order = tolerances.get(identity, {}).get("min_order")
        if min_order is not None:
            ok = ok and _order_passes(cfg.resolutions, residuals, min_order)
        envelope.passed[identity] = passed and ok
    if "boundedness" in selected:
        spread = (max(ratios) - min(ratios)) / min(ratios)
        limit = tolerances.get("boundedness", {}).get("spread", 0.10)
        envelope.boundedness = {"p": cfg.p, "trials": cfg.trials, "resolutions": list(cfg.resolutions),
                                "ratios": ratios, "spread": spread}
        envelope.passed["boundedness"] = bool(spread < limit)
    envelope.runtime_s = time.perf_counter() - started
    return envelope


def run_hodge(cfg: RunConfig) -> ReportEnvelope:
    started = time.perf_counter()
    tolerances = load_tolerances()
    envelope = ReportEnvelope("hodge", cfg.to_dict())
    domain = cfg.domain()
    basis = build_basis(domain, cfg.degree)
    selected = cfg.selected_identities()
    for fn in _functions(cfg, domain):
        t0 = time.perf_counter()
        split = project_P(fn, basis, domain)
        values = {
            "hodge-complementarity": complementarity_defect(fn, split, domain),
            "hodge-orthogonality": orthogonality_residual(fn, split, basis, domain),
            "hodge-idempotence": idempotence_defect(split, basis, domain),
        }
        for identity, value in values.items():
            if identity not in selected:
                continue
            extra = {"condition": basis.condition, "degree": basis.degree}
            if identity == "hodge-orthogonality":
                extra["gram_symmetry"] = basis.conjugate_symmetry_defect()
            report = _scalar_report(identity, fn.name, domain, value, cfg.seed, extra)
            report.runtime_ms = (time.perf_counter() - t0) * 1000.0
            tol = tolerances.get(identity, {}).get("tolerance", math.inf)
            _record(envelope, Outcome(identity, fn.name, report, bool(value <= tol)), cfg, domain.resolution)
        if "im-q-trace" in selected:
            report = q_image_trace_check(fn, basis, domain, seed=cfg.seed, workers=cfg.workers)
            entry = tolerances.get("im-q-trace", {})
            factor = entry.get("control_factor", 10.0)
            ok = report.max_residual <= entry.get("tolerance", math.inf) and \
                report.extra["control"] >= factor * report.max_residual
            tail = report.extra["p_tail"]
            if not ok and tail is not None and tail <= entry.get("tolerance", math.inf):
                logger.warning("im-q-trace[%s]: P part resolved (tail %.1e) but Q trace %.3e; "
                               "Q f is not of the form |x_vec|^(1-m) G w", fn.name, tail, report.max_residual)
            _record(envelope, Outcome("im-q-trace", fn.name, report, bool(ok)), cfg, domain.resolution)
    for identity in selected:
        envelope.passed[identity] = all(o.passed for o in envelope.outcomes if o.identity == identity)
    envelope.runtime_s = time.perf_counter() - started
    return envelope


# --------------------------------------------------------------------------
# kernel dump

def parse_points(text: str, m: int) -> List[Tuple[int, np.ndarray, np.ndarray]]:
    """Rows of 2(m+1) reals (q then x); '#' starts a comment."""
    rows = []
    width = 2 * (m + 1)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != width:
            raise ConfigError(f"points line {lineno}: expected {width} numbers, got {len(parts)}")
        try:
            values = np.array([float(p) for p in parts])
        except ValueError:
            raise ConfigError(f"points line {lineno}: not a number in {line!r}") from None
        rows.append((lineno, values[:m + 1], values[m + 1:]))
    return rows


def _fmt(values: Optional[np.ndarray]) -> str:
    if values is None:
        return ""
    return " ".join(f"{v:.17g}" for v in values)


def run_kernel_dump(cfg: RunConfig, points_text: str) -> ReportEnvelope:
    started = time.perf_counter()
    m = cfg.m
    rows = parse_points(points_text, m)
    envelope = ReportEnvelope("kernel-dump", cfg.to_dict(), rows=[])
    if not rows:
        envelope.runtime_s = time.perf_counter() - started
        return envelope
    q = np.array([r[1] for r in rows])
    x = np.array([r[2] for r in rows])
    s_inv, singular = cauchy_kernel_array(q, x, m)
    e0 = (1,) + (0,) * m
    for (lineno, qr, xr), s, sing in zip(rows, s_inv, singular):
        bad = bool(sing) or float(np.linalg.norm(xr[1:])) == 0.0
        k = k_e0 = None
        if not bad:
            qp = Paravector(m, qr[0], tuple(qr[1:]))
            xp = Paravector(m, xr[0], tuple(xr[1:]))
            try:
                k = global_kernel(qp, xp).coeffs
                k_e0 = derivative_kernel(qp, xp, e0).coeffs
            except SingularityError:
                bad, k, k_e0 = True, None, None
        envelope.rows.append({
            "line": lineno,
            "q": qr.tolist(),
            "x": xr.tolist(),
            "singular": bad,
            "s_inv": None if sing else s.tolist(),
            "k": None if k is None else k.tolist(),
            "k_e0": None if k_e0 is None else k_e0.tolist(),
        })
    envelope.passed["kernel-dump"] = True
    envelope.runtime_s = time.perf_counter() - started
    return envelope


# --------------------------------------------------------------------------
# output

def render(envelope: ReportEnvelope, fmt: str) -> str:
    data = envelope.to_dict()
    errors = validate_report(data, load_schema())
    if errors:
        raise RuntimeError("report violates its schema: " + "; ".join(errors))
    if fmt == "json":
        return json.dumps(data, indent=2)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if envelope.rows is not None:
        writer.writerow(DUMP_COLUMNS)
        for row in envelope.rows:
            writer.writerow([
                row["line"], _fmt(row["q"]), _fmt(row["x"]), str(row["singular"]).lower(),
                _fmt(row["s_inv"]), _fmt(row["k"]), _fmt(row["k_e0"]),
            ])
        return buf.getvalue()
    writer.writerow(CSV_COLUMNS)
    for o in envelope.outcomes:
        if o.report is None:
            continue
        writer.writerow([o.identity, o.function, o.report.resolution, f"{o.report.max_residual:.6e}",
                         str(o.passed).lower(), f"{o.report.runtime_ms:.1f}"])
    return buf.getvalue()


def write_output(envelope: ReportEnvelope, cfg: RunConfig) -> None:
    text = render(envelope, cfg.format)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as f:
            f.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _summary(envelope: ReportEnvelope) -> None:
    for identity, ok in envelope.passed.items():
        if not ok:
            eprint(f"FAIL {identity}")


# --------------------------------------------------------------------------
# commands

def _prepare(args: argparse.Namespace) -> Optional[RunConfig]:
    cfg = config_from_args(args)
    errors = cfg.validate()
    if errors:
        for e in errors:
            eprint(f"error: {e}")
        return None
    return cfg


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _prepare(args)
    if cfg is None:
        return 2
    envelope = run_verify(cfg)
    write_output(envelope, cfg)
    _summary(envelope)
    return envelope.exit_code


def cmd_converge(args: argparse.Namespace) -> int:
    cfg = _prepare(args)
    if cfg is None:
        return 2
    envelope = run_converge(cfg)
    write_output(envelope, cfg)
    _summary(envelope)
    return envelope.exit_code


def cmd_hodge(args: argparse.Namespace) -> int:
    cfg = _prepare(args)
    if cfg is None:
        return 2
    envelope = run_hodge(cfg)
    write_output(envelope, cfg)
    _summary(envelope)
    return envelope.exit_code


def cmd_kernel_dump(args: argparse.Namespace) -> int:
    cfg = _prepare(args)
    if cfg is None:
        return 2
    try:
        with open(cfg.points, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read points file {cfg.points}: {exc}") from None
    envelope = run_kernel_dump(cfg, text)
    write_output(envelope, cfg)
    return envelope.exit_code


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="YAML run configuration")
    p.add_argument("--verbose", action="store_true", help="Log at DEBUG to stderr")
    p.add_argument("--workers", type=int, default=None, help="Worker threads for per-probe work")
    p.add_argument("--log-file", dest="log_file", default=None, help="Append one line per identity run")
    p.add_argument("--m", type=int, default=None, help="Clifford algebra dimension")
    p.add_argument("--profile", default=None, help=f"Profile region, e.g. {DEFAULT_PROFILE}")
    p.add_argument("--resolutions", default=None, help="Comma-separated, strictly increasing")
    p.add_argument("--sphere-order", dest="sphere_order", type=int, default=None)
    p.add_argument("--functions", default=None, help="Comma-separated function names")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="Output path (stdout when omitted)")
    p.add_argument("--format", choices=FORMATS, default=None)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sc", description="Numerical checks of slice Clifford analysis identities.")
    sub = p.add_subparsers(dest="cmd", required=True)

    p_verify = sub.add_parser("verify", help="Run every identity at the finest resolution.")
    _common(p_verify)
    p_verify.add_argument("--identities", default=None, help="Comma-separated subset of identities")
    p_verify.set_defaults(func=cmd_verify)

    p_conv = sub.add_parser("converge", help="Residuals and empirical orders across resolutions.")
    _common(p_conv)
    p_conv.add_argument("--identities", default=None, help="Comma-separated subset (may include boundedness)")
    p_conv.add_argument("--p", type=float, default=None, help="Exponent of the boundedness probe")
    p_conv.add_argument("--trials", type=int, default=None, help="Random stems in the boundedness probe")
    p_conv.set_defaults(func=cmd_converge)

    p_hodge = sub.add_parser("hodge", help="Bergman projection and im Q checks.")
    _common(p_hodge)
    p_hodge.add_argument("--identities", default=None, help="Comma-separated subset of hodge checks")
    p_hodge.add_argument("--degree", type=int, default=None, help="Polynomial degree of the Bergman basis")
    p_hodge.set_defaults(func=cmd_hodge)

    p_dump = sub.add_parser("kernel-dump", help="Tabulate S^-1, K and d/dq0 K for point pairs.")
    _common(p_dump)
    p_dump.add_argument("--points", default=None, help="File of q/x coordinate rows")
    p_dump.set_defaults(func=cmd_kernel_dump)
    return p


def rewrite_command_alias(argv: List[str]) -> List[str]:
    """Turn `--command X ...` (or `--command=X`) into `X ...`."""
    out = list(argv)
    for i, arg in enumerate(out):
        if arg == "--command":
            if i + 1 >= len(out):
                return out
            command = out[i + 1]
            del out[i:i + 2]
            return [command] + out
        if arg.startswith("--command="):
            del out[i]
            return [arg.split("=", 1)[1]] + out
    return out


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    args_list = list(argv) if argv is not None else sys.argv[1:]
    if len(args_list) == 0 or args_list[0] in ("-v", "--version"):
        print(f"slicecalc {__version__}")
        return 0

    parser = build_parser()
    args = parser.parse_args(rewrite_command_alias(args_list))
    configure_logging(args.verbose)
    try:
        return int(args.func(args))
    except (ConfigError, ArgumentError, DomainError) as exc:
        eprint(f"error: {exc}")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
