"""Command-line front end.

Usage::

    dmtopo {spectrum,trace,phase-diagram,validate} [--config run.json] [--out DIR]
           [--model.u=1.3 --grid.n_k=512 ...]

Every ``--section.key=value`` flag overrides the matching entry of the JSON
configuration (values are parsed as JSON, falling back to plain strings).
Exit codes: 0 success, 2 configuration error, 3 validation failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    CorrelationField,
    InitialStateSpec,
    bloch_momenta,
    evolve_bloch_ode,
    evolve_propagator,
    evolve_realspace_oracle,
    evolve_spectral,
    from_bloch,
    initial_state,
    to_bloch,
)
from .errors import ConfigError, DefectiveBlock, DmtopoError
from .model import bloch_blocks, build_ssh_model, kgrid, pt_classify
from .phasemap import _frame_for, sweep, write_sweep_csv, write_sweep_metadata
from .topology import (
    check_chiral,
    correlation_from_modular,
    modular_from_correlation,
    nk_nc_antiparallel_check,
    transition_scan,
)

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_IO = 0, 2, 3, 4

DEFAULTS = {
    "model": {"u": 0.6, "w": 0.0, "lambda": 1.0, "L": 8},
    "grid": {"n_k": 256, "t_max": 20.0, "n_samples": 2000},
    "initial": {"a": 1.0, "b": 2.0, "scale": 1.0},
    "tolerances": {"ep_tol": 1e-8, "gap_tol": 1e-6, "engine_tol": 1e-6},
    "output": {"directory": ".", "format": "csv"},
    "sweep": {"u_range": [0.0, 3.0], "w_range": [0.0, 1.0], "resolution": [61, 41], "workers": 1},
    "validate": {"t_max": 10.0, "n_times": 11, "L": 8, "dt_max": 0.005},
}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        where = f"{path}{key}"
        if key not in out:
            raise ConfigError(f"unknown configuration key '{where}'")
        if isinstance(out[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"'{where}' must be an object")
            out[key] = _merge(out[key], val, where + ".")
        else:
            out[key] = val
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path: str | None, overrides: list[str]) -> dict:
    user = {}
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    cfg = _merge(DEFAULTS, user)
    for item in overrides:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"override must look like --section.key=value, got '{item}'")
        dotted, raw = item[2:].split("=", 1)
        node = {}
        leaf = node
        parts = dotted.split(".")
        for p in parts[:-1]:
            leaf[p] = {}
            leaf = leaf[p]
        leaf[parts[-1]] = _parse_value(raw)
        cfg = _merge(cfg, node)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: dict) -> None:
    try:
        m, g, i, tol = cfg["model"], cfg["grid"], cfg["initial"], cfg["tolerances"]
        for key in ("u", "w", "lambda"):
            float(m[key])
        if float(m["lambda"]) < 0:
            raise ConfigError("model.lambda must be non-negative")
        if int(m["L"]) < 2:
            raise ConfigError("model.L must be at least 2")
        if int(g["n_k"]) < 8:
            raise ConfigError("grid.n_k must be at least 8")
        if int(g["n_samples"]) < 16:
            raise ConfigError("grid.n_samples must be at least 16")
        if float(g["t_max"]) <= 0:
            raise ConfigError("grid.t_max must be positive")
        if not (float(i["a"]) > 0 and float(i["b"]) > 0):
            raise ConfigError("initial.a and initial.b must be positive")
        if any(float(v) <= 0 for v in tol.values()):
            raise ConfigError("all tolerances must be positive")
        if cfg["output"]["format"] not in ("csv", "json"):
            raise ConfigError("output.format must be 'csv' or 'json'")
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration value: {exc}") from exc


def _provenance(cfg: dict) -> dict:
    """The configuration minus the output location, which does not affect results."""
    out = copy.deepcopy(cfg)
    out["output"].pop("directory", None)
    return out


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(_provenance(cfg), sort_keys=True).encode()).hexdigest()[:16]


def _header(cfg: dict) -> str:
    return f"# dmtopo {__version__} config-sha256:{config_hash(cfg)}"


def _num(x) -> str:
    return format(float(x), ".17g")


def _write_table(path: Path, cfg: dict, columns, rows) -> Path:
    """Write rows as CSV (or JSON when ``output.format`` is json)."""
    if cfg["output"]["format"] == "json":
        path = path.with_suffix(".json")
        doc = {"_header": _header(cfg)[2:], "columns": list(columns), "rows": [dict(zip(columns, r)) for r in rows]}
        _write_json(path, doc)
        return path
    with open(path, "w", newline="") as fh:
        fh.write(_header(cfg) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    return path


def _write_json(path: Path, doc) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serialisable: {type(obj)}")


def _setup(cfg: dict):
    m, g = cfg["model"], cfg["grid"]
    model = build_ssh_model(float(m["u"]), float(m["w"]), float(m["lambda"]), int(m["L"]))
    blocks = bloch_blocks(model, int(g["n_k"]))
    spec = InitialStateSpec(float(cfg["initial"]["a"]), float(cfg["initial"]["b"]))
    C0 = initial_state(spec, kgrid(int(g["n_k"])))
    scale = float(cfg["initial"]["scale"])
    if scale != 1.0:
        C0 = CorrelationField(C0.kgrid, scale * C0.blocks, 0.0)
    return model, blocks, spec, C0


def cmd_spectrum(cfg: dict, out: Path) -> int:
    _, blocks, _, _ = _setup(cfg)
    pt = pt_classify(blocks, float(cfg["tolerances"]["ep_tol"]))
    rows = [
        [_num(b.k), _num(ep.real), _num(ep.imag), _num(em.real), _num(em.imag), lab.value]
        for b, ep, em, lab in zip(blocks, pt.eps_plus, pt.eps_minus, pt.per_k)
    ]
    cols = ["k", "re_eps_plus", "im_eps_plus", "re_eps_minus", "im_eps_minus", "pt_label"]
    _write_table(out / "spectrum.csv", cfg, cols, rows)
    return EXIT_OK


def cmd_trace(cfg: dict, out: Path) -> int:
    _, blocks, _, C0 = _setup(cfg)
    g = cfg["grid"]
    trace = transition_scan(blocks, C0, _frame_for(blocks), float(g["t_max"]), int(g["n_samples"]),
                            float(cfg["tolerances"]["gap_tol"]))
    rows = [
        [_num(t), "" if nu is None else str(nu), _num(gap), _num(occ)]
        for t, nu, gap, occ in zip(trace.times, trace.nu, trace.min_planar_amplitude, trace.total_occupation)
    ]
    _write_table(out / "trace.csv", cfg, ["t", "nu", "min_planar_amplitude", "total_occupation"], rows)
    doc = {
        "_header": _header(cfg)[2:],
        "transitions": [
            {"time": float(tr.time), "nu_before": tr.nu_before, "nu_after": tr.nu_after, "gap": float(tr.gap)}
            for tr in trace.transitions
        ],
    }
    _write_json(out / "transitions.json", doc)
    return EXIT_OK


def cmd_phase_diagram(cfg: dict, out: Path) -> int:
    m, g, s, tol = cfg["model"], cfg["grid"], cfg["sweep"], cfg["tolerances"]
    try:
        res = sweep(tuple(s["u_range"]), tuple(s["w_range"]), tuple(s["resolution"]), float(m["lambda"]),
                    InitialStateSpec(float(cfg["initial"]["a"]), float(cfg["initial"]["b"])),
                    float(g["t_max"]), int(g["n_k"]), int(g["n_samples"]), float(tol["ep_tol"]),
                    float(tol["gap_tol"]), workers=int(s["workers"]))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, DmtopoError):
            raise
        raise ConfigError(f"invalid sweep settings: {exc}") from exc
    write_sweep_csv(res, out / "phase_diagram.csv", header_payload=_provenance(cfg))
    write_sweep_metadata(res, out / "phase_diagram.json", extra={"config_sha256": config_hash(cfg)})
    return EXIT_OK


def validation_report(cfg: dict) -> dict:
    """Cross-engine discrepancies and structural identities for one config."""
    model, blocks, _, C0 = _setup(cfg)
    v, tol = cfg["validate"], cfg["tolerances"]
    times = np.linspace(0.0, float(v["t_max"]), int(v["n_times"]))
    report = {"_header": _header(cfg)[2:], "checks": {}, "errors": []}
    checks = report["checks"]

    prop = [evolve_propagator(blocks, C0, t) for t in times]

    try:
        spec = [evolve_spectral(blocks, C0, t) for t in times]
        checks["propagator_vs_spectral"] = {"max_discrepancy": max(_diff(a, b) for a, b in zip(prop, spec))}
    except DefectiveBlock as exc:
        checks["propagator_vs_spectral"] = {"skipped": "defective", "detail": str(exc)}

    try:
        traj = evolve_bloch_ode(blocks, C0, times, float(v["dt_max"]))
        checks["propagator_vs_ode"] = {"max_discrepancy": max(_diff(a, b) for a, b in zip(prop, traj.fields))}
    except DmtopoError as exc:
        checks["propagator_vs_ode"] = {"error": f"{type(exc).__name__}: {exc}"}

    L = int(v["L"])
    small = build_ssh_model(model.u, model.w, model.lam, L)
    ks = bloch_momenta(L)
    sb = bloch_blocks(small, 0, ks=ks)
    C0s = initial_state(InitialStateSpec(float(cfg["initial"]["a"]), float(cfg["initial"]["b"])), ks)
    C0s = CorrelationField(ks, float(cfg["initial"]["scale"]) * C0s.blocks, 0.0)
    C0_real = from_bloch(C0s.blocks, L).T
    worst = 0.0
    for t in times:
        Ct = evolve_realspace_oracle(small, C0_real, t)
        _, blk, off = to_bloch(Ct.T, L)
        worst = max(worst, off, float(np.max(np.abs(blk - evolve_propagator(sb, C0s, t).blocks))))
    checks["kspace_vs_realspace"] = {"L": L, "max_discrepancy": worst}

    frame = _frame_for(blocks)
    checks["chiral_plane_deviation"] = {"max_discrepancy": max(check_chiral(c, frame).max_axis_component for c in prop)}

    rt, ang, used = 0.0, 0.0, 0
    try:
        for c in prop:
            spec_c = c.spectra()
            if c is not prop[0] and (spec_c.min() <= 1e-12 or spec_c.max() >= 1 - 1e-12):
                continue
            K = modular_from_correlation(c)
            rt = max(rt, _diff(correlation_from_modular(K), c))
            ang = max(ang, nk_nc_antiparallel_check(c))
            used += 1
        checks["ck_roundtrip"] = {"max_discrepancy": rt, "samples": used}
        checks["nk_nc_angle"] = {"max_discrepancy": ang, "samples": used}
    except DmtopoError as exc:
        report["errors"].append(f"{type(exc).__name__}: {exc}")

    limit = float(tol["engine_tol"])
    failed = [name for name, c in checks.items() if "error" in c or c.get("max_discrepancy", 0.0) > limit]
    report["engine_tol"] = limit
    report["failed"] = failed
    report["ok"] = not failed and not report["errors"]
    return report


def _diff(a: CorrelationField, b: CorrelationField) -> float:
    return float(np.max(np.abs(a.blocks - b.blocks)))


def cmd_validate(cfg: dict, out: Path) -> int:
    report = validation_report(cfg)
    _write_json(out / "validate_report.json", report)
    return EXIT_OK if report["ok"] else EXIT_VALIDATION


COMMANDS = {
    "spectrum": cmd_spectrum,
    "trace": cmd_trace,
    "phase-diagram": cmd_phase_diagram,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmtopo", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON configuration document")
    parser.add_argument("--out", help="output directory (overrides output.directory)")
    parser.add_argument("--version", action="version", version=f"dmtopo {__version__}")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = load_config(args.config, extra)
        if args.out is not None:
            cfg["output"]["directory"] = args.out
        out = Path(cfg["output"]["directory"])
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DmtopoError as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
