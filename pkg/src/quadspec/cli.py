"""``quadspec`` command-line front end.

Usage::

    quadspec <command> --config <path> --out <dir> [--tol k=v]... [--seed n] [--format json|csv]

Commands: ``validate``, ``evolve``, ``reconstruct``, ``example``, ``search``.
The config is one JSON document; see ``docs/config.md``. Reports are written
to ``<out>/<command>_<run id>.<format>`` where the run id hashes the effective
config, so identical inputs give identical file names and bytes.

Exit codes: 0 success, 1 a check failed, 2 malformed config, 3 non-finite values.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .examples import (
    ExampleSpec,
    FiniteSearchConfig,
    desitter_foliation,
    finite_quadruple_search,
    flat_foliation,
    search_config,
)
from .foliation import FoliationData, build_hamiltonian, evolve, unitarity_defect
from .opcore import NonFiniteError, identity, operator_norm
from .quadruple import CheckReport, ValidationConfig, all_passed, validate_all
from .reconstruct import DEFAULT_DTS, ReconstructionResult, reconstruct_metric

COMMANDS = ("validate", "evolve", "reconstruct", "example", "search")
CSV_SCHEMA = 1
REPORT_COLUMNS = ("name", "residual", "tol", "pass", "advisory", "meta")
CONFIG_KEYS = {"example", "foliation", "validation", "evolve", "reconstruct", "search", "seed"}

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NONFINITE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# --- serialisation -------------------------------------------------------------

def _plain(x):
    """Convert numpy containers and scalars to builtin types."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    return x


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise NonFiniteError(f"non-finite value {x!r} in report")
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def reports_to_csv(reports: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        w.writerow([r["name"], format_float(r["residual"]), format_float(r["tol"]), int(r["pass"]),
                    int(r["advisory"]), dumps(r["meta"], indent=0).replace("\n", "")])
    return buf.getvalue()


def run_id(command: str, config: dict) -> str:
    blob = json.dumps({"command": command, "config": config, "version": __version__},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# --- config ----------------------------------------------------------------------

def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return cfg


def parse_tol(items: list[str]) -> dict[str, float]:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--tol expects key=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise ConfigError(f"--tol {key}: not a number: {val!r}") from exc
    return out


def effective_config(cfg: dict, tol: dict, seed: int | None) -> dict:
    cfg = json.loads(json.dumps(cfg))
    if tol:
        cfg.setdefault("validation", {}).update(tol)
    if seed is not None:
        cfg["seed"] = int(seed)
    return cfg


def validation_config(cfg: dict) -> ValidationConfig:
    vc = ValidationConfig(seed=int(cfg.get("seed", 0)))
    try:
        return vc.override(**cfg.get("validation", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def example_spec(cfg: dict) -> ExampleSpec:
    return ExampleSpec.from_dict(cfg.get("example", {}))


def foliation_from(cfg: dict) -> FoliationData:
    if "foliation" in cfg:
        return FoliationData.from_dict(cfg["foliation"])
    spec = example_spec(cfg)
    if spec.name == "desitter":
        return desitter_foliation(spec.grid_size, spec.mass, spec.scheme)
    return flat_foliation(spec.R, spec.mass, spec.grid_size, spec.scheme, spec.shift)


# --- commands --------------------------------------------------------------------

def cmd_validate(cfg: dict) -> tuple[dict, list[dict], bool]:
    spec = example_spec(cfg)
    vcfg = validation_config(cfg)
    _, q = spec.build()
    reports = validate_all(q, vcfg)
    rows = [r.to_dict() for r in reports]
    ok = all_passed(reports)
    return {"example": spec.to_dict(), "validation": vcfg.__dict__, "all_passed": ok,
            "reports": rows}, rows, ok


def cmd_evolve(cfg: dict) -> tuple[dict, list[dict], bool]:
    fol = foliation_from(cfg)
    vcfg = validation_config(cfg)
    ev = {"t0": 0.0, "t1": 0.5, "steps": 1000, "method": "cayley", **cfg.get("evolve", {})}
    unknown = set(ev) - {"t0", "t1", "steps", "method"}
    if unknown:
        raise ConfigError(f"unknown evolve fields: {sorted(unknown)}")
    t0, t1, steps = float(ev["t0"]), float(ev["t1"]), int(ev["steps"])
    if steps < 1 or ev["method"] not in ("cayley", "expm"):
        raise ConfigError("evolve needs steps >= 1 and method cayley|expm")
    u = evolve(fol, t0, t1, steps, method=ev["method"])
    back = evolve(fol, t1, t0, steps, method=ev["method"])
    if not np.all(np.isfinite(u)):
        raise NonFiniteError("propagator has non-finite entries")
    ref = evolve(fol, t0, t1, steps, method="expm" if ev["method"] == "cayley" else "cayley")
    h0 = build_hamiltonian(fol, t0)
    meta = {"t0": t0, "t1": t1, "steps": steps, "method": ev["method"], "grid_size": fol.grid_size,
            "scheme": fol.scheme, "other_method_difference": operator_norm(u - ref),
            "hermiticity_H(t0)": operator_norm(h0 - h0.conj().T)}
    reports = [
        CheckReport.make("unitarity", unitarity_defect(u), vcfg.unitarity_tol, meta),
        CheckReport.make("composition", operator_norm(back @ u - identity(fol.dim)), vcfg.unitarity_tol, meta),
    ]
    rows = [r.to_dict() for r in reports]
    ok = all_passed(reports)
    return {"foliation": fol.to_dict(), "evolve": ev, "all_passed": ok, "reports": rows}, rows, ok


def cmd_reconstruct(cfg: dict) -> tuple[dict, list[dict] | ReconstructionResult, bool]:
    fol = foliation_from(cfg)
    rc = {"t0": 0.0, "dts": list(DEFAULT_DTS), "max_power": 8, "steps": 16, "rel_tol": 0.05,
          "shift_tol": 1e-3, **cfg.get("reconstruct", {})}
    unknown = set(rc) - {"t0", "dts", "max_power", "steps", "rel_tol", "shift_tol"}
    if unknown:
        raise ConfigError(f"unknown reconstruct fields: {sorted(unknown)}")
    res = reconstruct_metric(fol, float(rc["t0"]), dts=rc["dts"], max_power=int(rc["max_power"]),
                             steps=int(rc["steps"]))
    errs = res.max_errors()
    reports = [
        CheckReport.make("reconstruct_lapse", errs["rel_error_lapse"], rc["rel_tol"]),
        CheckReport.make("reconstruct_ginv", errs["rel_error_ginv"], rc["rel_tol"]),
        CheckReport.make("reconstruct_shift", errs["abs_error_shift"], rc["shift_tol"]),
    ]
    ok = all_passed(reports)
    body = {"foliation": fol.to_dict(), "reconstruct": rc, "all_passed": ok,
            "reports": [r.to_dict() for r in reports], "result": res.to_dict()}
    return body, res, ok


def cmd_example(cfg: dict) -> tuple[dict, list[dict], bool]:
    spec = example_spec(cfg)
    fol, q = spec.build()
    h = build_hamiltonian(fol, spec.times[0])
    ev = np.linalg.eigvalsh((h + h.conj().T) / 2)
    order = np.argsort(np.abs(ev), kind="stable")
    slices = {}
    for t in q.times:
        s = q.slices[t]
        one = identity(q.hilbert_dim)
        slices[f"{t:g}"] = {"E^2+1": operator_norm(s.E @ s.E + one), "gamma^2-1": operator_norm(s.gamma @ s.gamma - one),
                            "{E,gamma}": operator_norm(s.E @ s.gamma + s.gamma @ s.E),
                            "generators": sorted(s.generators)}
    body = {"example": spec.to_dict(), "foliation": fol.to_dict(), "hilbert_dim": q.hilbert_dim,
            "groupoid": q.groupoid.kind, "times": q.times, "slices": slices,
            "lowest_energies": np.sort(ev[order[:21]]).tolist(), "all_passed": True, "reports": []}
    return body, [], True


def cmd_search(cfg: dict) -> tuple[dict, list[dict], bool]:
    sc = dict(cfg.get("search", {}))
    if "seed" in cfg:
        sc["seed"] = int(cfg["seed"])
    tol = cfg.get("validation", {}).get("tolerance")
    if tol is not None:
        sc["tolerance"] = float(tol)
    scfg = FiniteSearchConfig.from_dict(sc)
    found = finite_quadruple_search(scfg)
    vcfg = search_config(scfg.tolerance)
    rows, entries = [], []
    for q in found:
        reps = validate_all(q, vcfg)
        worst = max(reps, key=lambda r: r.residual / r.tol if r.tol > 0 else (0.0 if r.residual == 0 else math.inf))
        entries.append({"meta": q.meta, "checks": len(reps), "worst_check": worst.name,
                        "worst_residual": worst.residual})
        for r in reps:
            d = r.to_dict()
            d["name"] = f"attempt{q.meta['attempt']}:{d['name']}"
            rows.append(d)
    body = {"search": scfg.to_dict(), "found": len(found), "quadruples": entries, "all_passed": True,
            "reports": rows}
    return body, rows, True


HANDLERS = {"validate": cmd_validate, "evolve": cmd_evolve, "reconstruct": cmd_reconstruct,
            "example": cmd_example, "search": cmd_search}


# --- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadspec", description="Spectral quadruple toolkit.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--tol", action="append", default=[], metavar="K=V", help="tolerance override")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--version", action="version", version=f"quadspec {__version__}")
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = effective_config(load_config(args.config), parse_tol(args.tol), args.seed)
        body, rows, ok = HANDLERS[args.command](cfg)
    except (ConfigError, KeyError, TypeError) as exc:
        print(f"quadspec: malformed config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteError as exc:
        print(f"quadspec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except ValueError as exc:
        print(f"quadspec: malformed config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rid = run_id(args.command, cfg)
    manifest = {"command": args.command, "run_id": rid, "version": __version__, "csv_schema": CSV_SCHEMA,
                "config_sha256": hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest(),
                "config": cfg, "format": args.format}
    out = Path(args.out)
    try:
        if args.format == "json":
            text = dumps(_plain({"manifest": manifest, **body})) + "\n"
        elif isinstance(rows, ReconstructionResult):
            text = rows.to_csv(format_float)
        else:
            text = reports_to_csv(_plain(rows))
        manifest_text = dumps(_plain(manifest)) + "\n"
    except NonFiniteError as exc:
        print(f"quadspec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.command}_{rid}.{args.format}"
    path.write_text(text, encoding="utf-8")
    (out / f"manifest_{rid}.json").write_text(manifest_text, encoding="utf-8")
    print(path)
    return EXIT_OK if ok else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
