"""Batch command line front end.

Every run is described by a JSON config.  Missing optional parameters are
filled in, so the config stored with a report is complete.  Exit status: 0 on
success, 1 on a computational error, 2 on a config error; failures also print
a JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .density import DensitySpec
from .errors import ComputationError, ConfigError, ParseError, ValidationError
from .symbol import ConvolutionVector

COMMANDS = ("symbol-analyze", "toeplitz-scan", "polygon-generate", "polygon-verify",
            "wegner-run", "ids-run", "averaging-suite")
FORMATS = ("csv", "json")
U64_MAX = 2**64 - 1
REQUIRED = object()

# per command: key -> default (REQUIRED marks mandatory keys)
SCHEMA = {
    "symbol-analyze": {"vector": REQUIRED, "grid": None},
    "toeplitz-scan": {"vector": REQUIRED, "family": "cube", "sizes": [4, 8, 16, 32],
                      "polygon": None, "q": 3, "scales": [1, 2, 3]},
    "polygon-generate": {"q": 3},
    "polygon-verify": {"polygon": None, "q": 3, "r": 1.4, "R": 2.0},
    "wegner-run": {"vector": REQUIRED, "density": None, "l": [16], "dim": 1, "E": 0.0,
                   "eps": [0.05, 0.1, 0.2, 0.4], "samples": 2000},
    "ids-run": {"vector": REQUIRED, "density": None, "l": 16, "dim": 1, "E_min": -4.0,
                "E_max": 4.0, "E_num": 81, "samples": 100},
    "averaging-suite": {"trials": 50, "bs_trials": 20, "phi_trials": 100,
                        "property_trials": 200},
}
COMMON = {"command": REQUIRED, "seed": REQUIRED, "output": None, "format": "csv"}


@dataclass
class ExperimentConfig:
    command: str
    seed: int
    output: Optional[str]
    format: str
    params: dict
    base_dir: Path = Path(".")

    def to_dict(self):
        return {"command": self.command, "seed": self.seed, "output": self.output,
                "format": self.format, **self.params}


# --- validation helpers ------------------------------------------------------

def _int(name, value, lo=None, hi=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(name, f"expected an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ValidationError(name, f"must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ValidationError(name, f"must be <= {hi}, got {value}")
    return value


def _num(name, value, lo=None, strict=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError(name, f"expected a finite number, got {value!r}")
    if lo is not None and (value <= lo if strict else value < lo):
        raise ValidationError(name, f"must be {'>' if strict else '>='} {lo}, got {value}")
    return float(value)


def _list(name, value, item, nonempty=True):
    if not isinstance(value, list) or (nonempty and not value):
        raise ValidationError(name, "expected a nonempty list")
    return [item(f"{name}[{i}]", v) for i, v in enumerate(value)]


def _source(name, value, kinds):
    if isinstance(value, str) or isinstance(value, kinds):
        return value
    raise ValidationError(name, "expected a file path or an inline object")


def _validate_params(command, p):
    out = dict(p)
    if "grid" in p and p["grid"] is not None:
        out["grid"] = _int("grid", p["grid"], lo=8)
    if "vector" in p:
        out["vector"] = _source("vector", p["vector"], dict)
    if "density" in p and p["density"] is not None:
        out["density"] = _source("density", p["density"], list)
    if "polygon" in p and p["polygon"] is not None:
        out["polygon"] = _source("polygon", p["polygon"], dict)
    if "family" in p and p["family"] not in ("cube", "quarter-plane", "polygon"):
        raise ValidationError("family", "must be one of cube, quarter-plane, polygon")
    for key in ("sizes", "scales"):
        if key in p:
            out[key] = _list(key, p[key], lambda n, v: _int(n, v, lo=1))
    if "q" in p:
        out["q"] = _int("q", p["q"], lo=1)
    for key in ("r", "R"):
        if key in p:
            out[key] = _num(key, p[key], lo=0, strict=True)
    if "l" in p:
        if command == "wegner-run":
            ls = p["l"] if isinstance(p["l"], list) else [p["l"]]
            out["l"] = _list("l", ls, lambda n, v: _int("l", v, lo=3))
        else:
            out["l"] = _int("l", p["l"], lo=3)
    if "dim" in p:
        out["dim"] = _int("dim", p["dim"], lo=1, hi=3)
    if "E" in p:
        out["E"] = _num("E", p["E"])
    if "eps" in p:
        eps = p["eps"] if isinstance(p["eps"], list) else [p["eps"]]
        out["eps"] = _list("eps", eps, lambda n, v: _num("eps", v, lo=0))
    for key in ("E_min", "E_max"):
        if key in p:
            out[key] = _num(key, p[key])
    if "E_num" in p:
        out["E_num"] = _int("E_num", p["E_num"], lo=2)
    if "E_min" in out and out["E_max"] <= out["E_min"]:
        raise ValidationError("E_max", "must exceed E_min")
    for key in ("samples", "trials", "bs_trials", "phi_trials", "property_trials"):
        if key in p:
            out[key] = _int(key, p[key], lo=1)
    return out


def parse_config(text: str, command: Optional[str] = None, seed: Optional[int] = None,
                 output: Optional[str] = None, fmt: Optional[str] = None,
                 base_dir=".") -> ExperimentConfig:
    """Parse and validate a JSON config; explicit arguments override its fields."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ParseError("config must be a JSON object", 1, 1)
    for key, val in (("command", command), ("seed", seed), ("output", output), ("format", fmt)):
        if val is None:
            continue
        if key == "command" and doc.get("command", val) != val:
            raise ValidationError("command", f"config says {doc['command']!r}, invoked as {val!r}")
        doc[key] = val
    cmd = doc.get("command", REQUIRED)
    if cmd is REQUIRED:
        raise ValidationError("command", "missing")
    if cmd not in COMMANDS:
        raise ValidationError("command", f"unknown command {cmd!r}")
    schema = {**COMMON, **SCHEMA[cmd]}
    unknown = sorted(set(doc) - set(schema))
    if unknown:
        raise ValidationError(unknown[0], "unknown key")
    full = {}
    for key, default in schema.items():
        if key in doc:
            full[key] = doc[key]
        elif default is REQUIRED:
            raise ValidationError(key, "missing")
        else:
            full[key] = json.loads(json.dumps(default))
    seed_v = _int("seed", full.pop("seed"), lo=0, hi=U64_MAX)
    fmt_v = full.pop("format")
    if fmt_v not in FORMATS:
        raise ValidationError("format", "must be csv or json")
    out_v = full.pop("output")
    if out_v is not None and not isinstance(out_v, str):
        raise ValidationError("output", "expected a path")
    full.pop("command")
    params = _validate_params(cmd, full)
    return ExperimentConfig(cmd, seed_v, out_v, fmt_v, params, Path(base_dir))


# --- loading referenced inputs -----------------------------------------------

def _load(cfg, key):
    value = cfg.params[key]
    if isinstance(value, str):
        path = Path(value)
        if not path.is_absolute():
            path = cfg.base_dir / path
        try:
            return json.loads(path.read_text())
        except OSError as exc:
            raise ValidationError(key, f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", exc.lineno, exc.colno) from None
    return value


def _vector(cfg):
    doc = _load(cfg, "vector")
    try:
        return ConvolutionVector.from_json_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("vector", str(exc)) from None


def _density(cfg):
    if cfg.params.get("density") is None:
        return DensitySpec.uniform()
    try:
        return DensitySpec(_load(cfg, "density"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("density", str(exc)) from None


def _polygon(cfg):
    from .polygon import LatticePolygon, ks_polygon
    if cfg.params.get("polygon") is None:
        return ks_polygon(cfg.params["q"])
    try:
        return LatticePolygon.from_dict(_load(cfg, "polygon"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("polygon", str(exc)) from None


# --- reports -----------------------------------------------------------------

@dataclass
class Report:
    header: list
    rows: list
    summary: dict


def _fmt(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return "" if v is None else str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


def render(report: Report, cfg: ExperimentConfig):
    meta = {"version": __version__, "config": cfg.to_dict()}
    if cfg.format == "json":
        doc = {**meta, "summary": report.summary,
               "rows": [dict(zip(report.header, r)) for r in report.rows]}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n", None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.header)
    for r in report.rows:
        w.writerow([_fmt(v) for v in r])
    sidecar = json.dumps(_jsonable({**meta, "summary": report.summary}), indent=2,
                         sort_keys=True) + "\n"
    return buf.getvalue(), sidecar


# --- commands ----------------------------------------------------------------

def _run_symbol(cfg):
    from .symbol import analyze_symbol
    a = _vector(cfg)
    rep = analyze_symbol(a, cfg.params["grid"])
    flat = rep.to_flat_dict()
    rows = [[k, json.dumps(_jsonable(v))] for k, v in flat.items()]
    return Report(["key", "value"], rows, flat)


def _run_toeplitz(cfg):
    from .polygon import polygon_lattice_points
    from .toeplitz import IndexSet, stability_scan
    a = _vector(cfg)
    fam = cfg.params["family"]
    if fam == "cube":
        family = [IndexSet.cube(n, a.dim) for n in cfg.params["sizes"]]
    elif fam == "quarter-plane":
        if a.dim != 2:
            raise ValidationError("family", "quarter-plane squares need a 2-dimensional vector")
        family = [IndexSet.quarter_plane_square(n) for n in cfg.params["sizes"]]
    else:
        if a.dim != 2:
            raise ValidationError("family", "polygon families need a 2-dimensional vector")
        poly = _polygon(cfg)
        family = [polygon_lattice_points(poly, s) for s in cfg.params["scales"]]
    table = stability_scan(a, family)
    rows = [[r.N, r.n_label, r.inv_norm_l1, r.inv_norm_l2, r.status] for r in table.rows]
    return Report(["N", "n_label", "inv_norm_l1", "inv_norm_l2", "status"], rows,
                  {"rows": len(rows), "singular_rows": sum(r.status == "singular" for r in table.rows)})


def _run_polygon_generate(cfg):
    from .polygon import ks_polygon
    poly = ks_polygon(cfg.params["q"])
    return Report(["x", "y"], [list(v) for v in poly.vertices],
                  {**poly.to_dict(), "inradius": poly.inradius()})


def _run_polygon_verify(cfg):
    from .polygon import verify_ks_conditions
    poly = _polygon(cfg)
    rep = verify_ks_conditions(poly, cfg.params["r"], cfg.params["R"])
    head = [rep.cond_i, rep.cond_ii, rep.r, rep.R]
    rows = [head + [v[0], v[1], c, p[0], p[1]] for v, c, p in rep.witnesses] or \
        [head + [None] * 5]
    return Report(["cond_i", "cond_ii", "r", "R", "vertex_x", "vertex_y", "cone",
                   "witness_x", "witness_y"], rows,
                  {**rep.to_dict(), "polygon": poly.to_dict()})


def _run_wegner(cfg):
    from .wegner import fit_eps, fit_volume, wegner_sweep
    a, f, p = _vector(cfg), _density(cfg), cfg.params
    if a.dim != p["dim"]:
        raise ValidationError("dim", f"vector is {a.dim}-dimensional")
    rows, by_l = [], {}
    for l in p["l"]:
        reps = wegner_sweep(a, f, l, p["dim"], p["E"], p["eps"], p["samples"], cfg.seed)
        by_l[l] = reps
        for r in reps:
            rows.append([l, p["E"], r.params["eps"], p["samples"], r.mean_count, r.stderr,
                         r.normalized_constant, r.failed_samples])
    summary = {"variation": f.variation(), "density_digest": f.digest(), "fits": {}}
    for l, reps in by_l.items():
        if len(reps) >= 3:
            fit = fit_eps(reps)
            summary["fits"][f"eps@l={l}"] = {"slope": fit.slope, "intercept": fit.intercept,
                                             "intercept_stderr": fit.intercept_stderr,
                                             "r2": fit.r2}
    if len(p["l"]) >= 3:
        for i, eps in enumerate(p["eps"]):
            reps = [by_l[l][i] for l in p["l"]]
            if all(r.mean_count > 0 for r in reps):
                vf = fit_volume(reps)
                summary["fits"][f"volume@eps={eps!r}"] = {"exponent": vf.exponent, "r2": vf.r2}
    return Report(["l", "E", "eps", "samples", "mean_count", "stderr", "normalized_constant",
                   "failed_samples"], rows, summary)


def _run_ids(cfg):
    from .anderson import empirical_ids
    a, f, p = _vector(cfg), _density(cfg), cfg.params
    if a.dim != p["dim"]:
        raise ValidationError("dim", f"vector is {a.dim}-dimensional")
    grid = np.linspace(p["E_min"], p["E_max"], p["E_num"])
    table = empirical_ids(a, f, p["l"], p["dim"], grid, p["samples"], cfg.seed)
    rows = [[E, N, s, table.samples, table.l, table.seed] for E, N, s in table.rows()]
    return Report(["E", "N", "stderr", "samples", "l", "seed"], rows,
                  {"boundary": table.boundary, "density_digest": f.digest()})


def _run_averaging(cfg):
    from .suite import averaging_suite
    p = cfg.params
    rows = averaging_suite(cfg.seed, p["trials"], p["bs_trials"], p["phi_trials"],
                           p["property_trials"])
    summary = {}
    for name, *_rest, passed in rows:
        s = summary.setdefault(name, {"trials": 0, "passed": 0})
        s["trials"] += 1
        s["passed"] += int(passed)
    return Report(["check", "trial", "lhs", "rhs", "error_estimate", "pass"], rows, summary)


RUNNERS = {
    "symbol-analyze": _run_symbol,
    "toeplitz-scan": _run_toeplitz,
    "polygon-generate": _run_polygon_generate,
    "polygon-verify": _run_polygon_verify,
    "wegner-run": _run_wegner,
    "ids-run": _run_ids,
    "averaging-suite": _run_averaging,
}


def run(cfg: ExperimentConfig, stdout=None) -> int:
    """Execute a validated config; returns the exit status."""
    stdout = stdout or sys.stdout
    report = RUNNERS[cfg.command](cfg)
    body, sidecar = render(report, cfg)
    if cfg.output is None:
        stdout.write(body)
    else:
        out = Path(cfg.output)
        out.write_text(body, newline="\n")
        if sidecar is not None:
            Path(str(out) + ".meta.json").write_text(sidecar, newline="\n")
    return 0


def _error_record(exc, exit_code):
    rec = {"error": exc.code, "message": str(exc), "exit_code": exit_code}
    for attr in ("field", "line", "column"):
        if getattr(exc, attr, None) is not None:
            rec[attr] = getattr(exc, attr)
    return json.dumps(rec, sort_keys=True)


def build_parser():
    parser = argparse.ArgumentParser(prog="wegnerlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="64-bit seed (overrides the config)")
        sp.add_argument("--out", help="report path; stdout when omitted")
        sp.add_argument("--format", choices=FORMATS, help="report format (default csv)")
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ValidationError("config", f"cannot read {path}: {exc.strerror}") from None
        cfg = parse_config(text, args.command, args.seed, args.out, args.format,
                           base_dir=path.parent)
        return run(cfg, stdout)
    except ConfigError as exc:
        print(_error_record(exc, 2), file=stderr)
        return 2
    except ComputationError as exc:
        print(_error_record(exc, 1), file=stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
