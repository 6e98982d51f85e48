"""Command-line entry point.

Configuration comes from an optional YAML file plus ``--set key=value``
overrides (dotted keys, values parsed as YAML scalars); flags win. Output is
JSON or CSV with every float written to 17 significant digits.

Exit codes: 0 success, 1 usage error, 2 domain error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import __version__
from . import dirac as dm
from . import evolve as ev
from . import oracle
from . import pauli as pm
from .core import PhysicalParams, reduce_pauli
from .errors import DomainError, VerificationError

MODES = (
    "pauli-spectrum",
    "pauli-zone",
    "pauli-spin",
    "dirac-spectrum",
    "dirac-spin",
    "verify",
    "evolve",
    "sweep",
)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2, 3
IDENTITY_TOL = 1e-12
OUTPUT_DIR_ENV = "ROTFIELD_OUTPUT_DIR"

DEFAULTS: dict = {
    "mode": None,
    "params": PhysicalParams().as_dict(),
    "pauli": {"n_max": 2, "literal": False, "c_plus": 1.0, "c_minus": 1.0},
    "zone": {"H_over_Hz": None},
    "dirac": {
        "epsilon_dir": 1,
        "convention": "derived",
        "E0": None,
        "nu": None,
        "h": None,
        "d": 0.5,
        "quadrature": False,
    },
    "times": {"start": 0.0, "stop": 10.0, "count": 11},
    "spin": {"method": "closed-form"},
    "evolve": {"kind": "fidelity", "n": 64, "extent": 6.0, "dt": 0.02, "t_final": None, "order": 4, "checkpoints": 8},
    "verify": {"target": "pauli", "n_starts": 64, "tolerance": 1e-10},
    "sweep": {"mode": "pauli-spectrum", "axes": []},
    "output": {"format": "json", "path": None},
    "seed": 0,
    "jobs": 1,
}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# configuration


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in out:
            raise UsageError(f"unknown configuration key {where!r}")
        if isinstance(out[key], dict) and isinstance(value, dict) and key != "params" or (
            key == "params" and isinstance(value, dict)
        ):
            out[key] = _merge(out[key], value, where + ".")
        else:
            out[key] = value
    return out


def _set_dotted(cfg: dict, key: str, value) -> None:
    parts = key.split(".")
    node = cfg
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise UsageError(f"unknown configuration key {key!r}")
        node = node[part]
    if parts[-1] not in node:
        raise UsageError(f"unknown configuration key {key!r}")
    node[parts[-1]] = value


def _get_dotted(cfg: dict, key: str):
    node = cfg
    for part in key.split("."):
        if not isinstance(node, dict) or part not in node:
            raise UsageError(f"unknown configuration key {key!r}")
        node = node[part]
    return node


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a mapping")
        cfg = _merge(cfg, loaded)
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise UsageError(f"cannot parse value for {key}: {exc}") from exc
        _set_dotted(cfg, key.strip(), value)
    if args.mode:
        cfg["mode"] = args.mode
    if args.format:
        cfg["output"]["format"] = args.format
    if args.out:
        cfg["output"]["path"] = args.out
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.jobs is not None:
        cfg["jobs"] = args.jobs
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    if cfg["mode"] not in MODES:
        raise UsageError(f"mode must be one of {', '.join(MODES)}; got {cfg['mode']!r}")
    if cfg["output"]["format"] not in ("json", "csv"):
        raise UsageError("output format must be json or csv")
    if not isinstance(cfg["jobs"], int) or cfg["jobs"] < 1:
        raise UsageError("jobs must be a positive integer")
    if cfg["mode"] == "sweep":
        sweep = cfg["sweep"]
        if sweep["mode"] in ("sweep",) or sweep["mode"] not in MODES:
            raise UsageError(f"sweep.mode {sweep['mode']!r} is not a sweepable mode")
        if not sweep["axes"]:
            raise UsageError("sweep needs at least one axis")
        for axis in sweep["axes"]:
            if not isinstance(axis, dict) or set(axis) != {"name", "start", "stop", "count"}:
                raise UsageError("each sweep axis needs exactly name, start, stop, count")
            value = _get_dotted(cfg, axis["name"])
            if isinstance(value, dict):
                raise UsageError(f"sweep axis {axis['name']!r} is not a scalar parameter")
            if int(axis["count"]) < 1:
                raise UsageError("sweep axis count must be positive")


def physical_params(cfg: dict) -> PhysicalParams:
    try:
        return PhysicalParams(**{k: float(v) for k, v in cfg["params"].items()})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid physical parameters: {exc}") from exc


# --------------------------------------------------------------------------
# results


@dataclass
class Row:
    label: str
    value: float
    imag: float = 0.0
    residual: float = 0.0


@dataclass
class ModeResult:
    rows: list[Row] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)


def _time_grid(cfg: dict) -> np.ndarray:
    t = cfg["times"]
    return np.linspace(float(t["start"]), float(t["stop"]), int(t["count"]))


def run_pauli_spectrum(cfg: dict) -> ModeResult:
    prm = physical_params(cfg)
    rp = reduce_pauli(prm)
    qf = pm.solve_quadratic_system(rp)
    out = ModeResult()
    unit = prm.hbar**2 / prm.mass
    expected = -unit * rp.rho
    for n in range(int(cfg["pauli"]["n_max"]) + 1):
        levels = pm.energy_levels(rp, qf, prm.p, n, prm.hbar, prm.mass, literal=bool(cfg["pauli"]["literal"]))
        by_key = {(lv.tau_branch, lv.sigma): lv for lv in levels}
        for lv in levels:
            partner = by_key[(lv.tau_branch, -lv.sigma)]
            diff = lv.E - partner.E if lv.sigma > 0 else partner.E - lv.E
            res = abs(diff - expected) / max(1.0, abs(expected))
            if res > IDENTITY_TOL:
                raise VerificationError(f"{lv.label}: E+ - E- identity off by {res:.3g}")
            out.rows.append(Row(lv.label, lv.E, 0.0, res))
    out.diagnostics.append({"kind": "quadratic_form", **qf.as_dict()})
    out.diagnostics.append(
        {"kind": "reduced", "g1": rp.g1, "g2": rp.g2, "b": rp.b, "f": rp.f, "Delta": rp.Delta, "gamma": rp.gamma, "rho": rp.rho}
    )
    return out


def run_pauli_zone(cfg: dict) -> ModeResult:
    ratio = cfg["zone"]["H_over_Hz"]
    if ratio is None:
        prm = physical_params(cfg)
        if prm.H_z == 0:
            raise UsageError("H_over_Hz needs a nonzero H_z")
        ratio = prm.H / prm.H_z
    (a0, a1), (b0, b1) = pm.forbidden_g_zone(float(ratio))
    out = ModeResult(
        [Row("zone1.low", a0), Row("zone1.high", a1), Row("zone2.low", b0), Row("zone2.high", b1)]
    )
    out.diagnostics.append({"kind": "g_zone", "H_over_Hz": float(ratio), "intervals": [[a0, a1], [b0, b1]]})
    return out


def run_pauli_spin(cfg: dict) -> ModeResult:
    prm = physical_params(cfg)
    pc = cfg["pauli"]
    state = pm.pauli_ground_state(prm, complex(pc["c_plus"]), complex(pc["c_minus"]))
    trace = pm.spin_trace(state, _time_grid(cfg), method=cfg["spin"]["method"])
    out = ModeResult([Row(f"s3[t={t:.17g}]", float(v)) for t, v in zip(trace.times, trace.values)])
    out.diagnostics.append({"kind": "spin_trace", **_trace_summary(trace)})
    return out


def _trace_summary(trace) -> dict:
    return {
        "method": trace.method,
        "frequency": trace.frequency,
        "amplitude": trace.amplitude,
        "constant": trace.constant,
    }


def dirac_reduced(cfg: dict) -> dm.DiracReduced:
    dc = cfg["dirac"]
    reduced = [dc[k] for k in ("E0", "nu", "h")]
    if all(v is not None for v in reduced):
        E0, nu, h = (float(v) for v in reduced)
        dp = dm.DiracParams.from_reduced(E0, nu, h, float(dc["d"]))
        return dm.reduce_dirac(dp)
    if any(v is not None for v in reduced):
        raise UsageError("give all of dirac.E0, dirac.nu, dirac.h or none")
    return dm.reduce_dirac(dirac_params(cfg), convention=dc["convention"])


def dirac_params(cfg: dict) -> dm.DiracParams:
    dc = cfg["dirac"]
    if dc["E0"] is not None:
        return dm.DiracParams.from_reduced(float(dc["E0"]), float(dc["nu"]), float(dc["h"]), float(dc["d"]))
    try:
        return dm.DiracParams(physical_params(cfg), int(dc["epsilon_dir"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def run_dirac_spectrum(cfg: dict) -> ModeResult:
    dr = dirac_reduced(cfg)
    roots = dm.solve_cubic(dr)
    out = ModeResult()
    for i, r in enumerate(roots):
        res = dm.cubic_residual(dr, r) / (1 + abs(r) ** 3)
        if res > IDENTITY_TOL:
            raise VerificationError(f"root {r!r} has cubic residual {res:.3g}")
        out.rows.append(Row(f"root[{i}]", float(r.real), float(r.imag), res))
    for i, E in enumerate(dm.positive_roots(roots)):
        try:
            b = dm.build_branch(dr, E)
        except DomainError as exc:
            out.diagnostics.append(_error_record(exc, fatal=False))
            continue
        res = abs(b.normalization_identity())
        if res > 1e-13:
            raise VerificationError(f"normalization identity off by {res:.3g}")
        out.rows.append(Row(f"N[{i}]", b.N, 0.0, res))
    out.diagnostics.append(
        {"kind": "reduced", "d": dr.d, "h": dr.h, "E0": dr.E0, "nu": dr.nu, "case": dr.case, "convention": dr.convention}
    )
    return out


def run_dirac_spin(cfg: dict) -> ModeResult:
    dr = dirac_reduced(cfg)
    state = dm.two_branch_state(dr)
    times = _time_grid(cfg)
    trace = dm.spin_oscillation(state, times)
    quad = dm.spin_oscillation(state, times, method="quadrature") if cfg["dirac"]["quadrature"] else None
    out = ModeResult()
    for k, (t, v) in enumerate(zip(times, trace.values)):
        res = abs(v - quad.values[k]) if quad is not None else 0.0
        out.rows.append(Row(f"s3[t={t:.17g}]", float(v), 0.0, res))
    out.diagnostics.append(
        {
            "kind": "two_branch",
            "E1": state.branch1.E_script,
            "E2": state.branch2.E_script,
            "theta": state.theta,
            "omega": trace.frequency,
            "amplitude": trace.amplitude,
            "amplitude_printed": dm.spin_amplitude_printed(state),
        }
    )
    return out


def run_verify(cfg: dict) -> ModeResult:
    target = cfg["verify"]["target"]
    if target not in ("pauli", "dirac", "both"):
        raise UsageError("verify.target must be pauli, dirac or both")
    out = ModeResult()
    failures = []
    if target in ("pauli", "both"):
        failures += _verify_pauli(cfg, out)
    if target in ("dirac", "both"):
        failures += _verify_dirac(cfg, out)
    if failures:
        out.diagnostics.append({"kind": "verification_failures", "items": failures})
        raise _PartialVerification(out, failures)
    return out


class _PartialVerification(VerificationError):
    def __init__(self, result: ModeResult, failures: list[str]):
        super().__init__("; ".join(failures))
        self.result = result


def _verify_pauli(cfg: dict, out: ModeResult) -> list[str]:
    prm = physical_params(cfg)
    rp = reduce_pauli(prm)
    qf = pm.solve_quadratic_system(rp)
    pc = cfg["pauli"]
    state = pm.pauli_ground_state(prm, complex(pc["c_plus"]), complex(pc["c_minus"]))
    failures = []
    stat = oracle.pauli_stationary_residual(qf, rp, oracle.stationary_epsilon(qf))
    dyn = oracle.pauli_time_dependent_residual(state)
    for name, rep in (("stationary", stat), ("time_dependent", dyn)):
        out.rows.append(Row(f"pauli.{name}.order", rep.convergence_order, 0.0, rep.relative_residual))
        out.diagnostics.append({"kind": f"pauli_{name}_residual", **rep.as_dict()})
        if not rep.converged:
            failures.append(f"pauli {name} residual does not converge")
    quad = oracle.gaussian_norm_quadrature(qf, 1e-12).value
    closed = 1.0 / pm.normalization_constraint(qf)
    rel = abs(quad - closed) / closed
    out.rows.append(Row("pauli.norm_integral", float(np.real(quad)), float(np.imag(quad)), rel))
    if rel > 1e-8:
        failures.append("normalization quadrature disagrees")
    roots = oracle.brute_force_d_system(rp, int(cfg["verify"]["n_starts"]), seed=int(cfg["seed"]))
    found = any(np.max(np.abs(np.array([q.d11, q.d12, q.d22, q.d1, q.d2]) - np.array([qf.d11, qf.d12, qf.d22, qf.d1, qf.d2]))) < 1e-7 * (1 + abs(qf.d11)) for q in roots)
    extra = [q for q in oracle.physical_roots(roots, rp) if not _same_form(q, qf)]
    out.rows.append(Row("pauli.multistart_roots", float(len(roots)), 0.0, float(len(extra))))
    if not found:
        failures.append("multistart Newton did not recover the solver root")
    if extra:
        failures.append("multistart Newton found another integrable branch")
    return failures


def _same_form(a: pm.QuadraticForm, b: pm.QuadraticForm) -> bool:
    va = np.array([a.d11, a.d12, a.d22, a.d1, a.d2])
    vb = np.array([b.d11, b.d12, b.d22, b.d1, b.d2])
    return bool(np.max(np.abs(va - vb)) < 1e-7 * (1 + np.max(np.abs(vb))))


def _verify_dirac(cfg: dict, out: ModeResult) -> list[str]:
    dp = dirac_params(cfg)
    dr = dirac_reduced(cfg)
    failures = []
    mp_roots = oracle.cubic_roots_mp(dr)
    roots = dm.solve_cubic(dr)
    out.rows.append(Row("dirac.cubic_vs_mpmath", float(np.max(np.abs(mp_roots - roots)))))
    rot = oracle.rotation_operator_error(np.linspace(-2 * math.pi, 2 * math.pi, 9))
    out.rows.append(Row("dirac.rotation_operator_error", rot))
    if rot > 1e-13:
        failures.append("rotation operator disagrees with the matrix exponential")
    for i, r in enumerate(roots):
        if abs(r.imag) > 0:
            continue
        try:
            branch = dm.build_branch(dr, r.real)
        except DomainError as exc:
            out.diagnostics.append(_error_record(exc, fatal=False))
            continue
        table = oracle.sign_variant_table(branch, dp)
        winners = [row["variant"] for row in table if row["converged"]]
        for row in table:
            out.rows.append(Row(f"dirac.root[{i}].{row['variant']}", row["relative_residual"], 0.0, row["fd_relative_fine"]))
        out.diagnostics.append({"kind": "dirac_sign_variants", "root": r.real, "annihilating": winners, "table": table})
        if not winners:
            failures.append(f"no sign variant annihilates root {r.real:.6g}")
    return failures


def run_evolve(cfg: dict) -> ModeResult:
    prm = physical_params(cfg)
    ec = cfg["evolve"]
    pc = cfg["pauli"]
    kind = ec["kind"]
    if kind == "fidelity":
        state = pm.pauli_ground_state(prm, complex(pc["c_plus"]), complex(pc["c_minus"]))
        grid = ev.Grid2D.for_state(state, int(ec["n"]), float(ec["extent"]))
        t_final = ec["t_final"]
        if t_final is None:
            t_final = 2 * math.pi / abs(prm.Omega) if prm.Omega else 1.0
        cps = ev.fidelity_run(state, prm, float(t_final), grid, float(ec["dt"]), int(ec["checkpoints"]), int(ec["order"]))
        out = ModeResult()
        for cp in cps:
            out.rows.append(Row(f"overlap[t={cp.time:.17g}]", cp.overlap, 0.0, abs(cp.norm - cps[0].norm)))
        out.diagnostics.append({"kind": "checkpoints", "items": [cp.as_dict() for cp in cps]})
        return out
    if kind == "resonance":
        pol = 1 if complex(pc["c_minus"]) == complex(pc["c_plus"]) else -1
        state = pm.pauli_ground_state(prm, 1.0, float(pol))
        grid = ev.Grid2D.for_state(state, int(ec["n"]), float(ec["extent"]))
        t_final = None if ec["t_final"] is None else float(ec["t_final"])
        trace = ev.resonance_demo(prm, grid, t_final, float(ec["dt"]), pol, order=int(ec["order"]))
        ref = trace.meta["reference"]
        out = ModeResult(
            [Row(f"s3[t={t:.17g}]", float(v), 0.0, abs(v - r)) for t, v, r in zip(trace.times, trace.values, ref)]
        )
        out.diagnostics.append({"kind": "resonance", **_trace_summary(trace), "gamma": trace.meta["gamma"]})
        return out
    raise UsageError("evolve.kind must be fidelity or resonance")


RUNNERS = {
    "pauli-spectrum": run_pauli_spectrum,
    "pauli-zone": run_pauli_zone,
    "pauli-spin": run_pauli_spin,
    "dirac-spectrum": run_dirac_spectrum,
    "dirac-spin": run_dirac_spin,
    "verify": run_verify,
    "evolve": run_evolve,
}


def _error_record(exc: Exception, fatal: bool = True) -> dict:
    code = EXIT_DOMAIN if isinstance(exc, DomainError) else EXIT_VERIFY
    return {"kind": "error", "type": type(exc).__name__, "message": str(exc), "exit_code": code, "fatal": fatal}


def _sweep_points(cfg: dict) -> list[dict]:
    axes = cfg["sweep"]["axes"]
    grids = [np.linspace(float(a["start"]), float(a["stop"]), int(a["count"])) for a in axes]
    mesh = np.meshgrid(*grids, indexing="ij")
    names = [a["name"] for a in axes]
    return [dict(zip(names, (float(m.flat[i]) for m in mesh))) for i in range(mesh[0].size)]


def _run_point(args: tuple[dict, dict]) -> tuple[list[Row], list[dict]]:
    cfg, point = args
    local = copy.deepcopy(cfg)
    local["mode"] = cfg["sweep"]["mode"]
    for key, value in point.items():
        _set_dotted(local, key, value)
    try:
        res = RUNNERS[local["mode"]](local)
    except _PartialVerification as exc:
        return exc.result.rows, exc.result.diagnostics + [_error_record(exc, fatal=False)]
    except (DomainError, VerificationError) as exc:
        return [], [_error_record(exc, fatal=False)]
    return res.rows, res.diagnostics


def run_sweep(cfg: dict) -> tuple[list[dict], list[dict]]:
    points = _sweep_points(cfg)
    tasks = [(cfg, p) for p in points]
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            results = list(pool.map(_run_point, tasks))
    else:
        results = [_run_point(t) for t in tasks]
    rows, diags = [], []
    for point, (prow, pdiag) in zip(points, results):
        for r in prow:
            rows.append({"sweep": point, "row": r})
        for d in pdiag:
            diags.append({"sweep": point, **d})
    return rows, diags


# --------------------------------------------------------------------------
# serialization


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj, indent: int = 0, step: int = 2) -> str:
    """JSON with 17-significant-digit floats and NaN/inf written as null."""
    pad = " " * (indent + step)
    end = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + step)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{end}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{to_json(v, indent + step)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{end}]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return to_json([obj.real, obj.imag], indent)
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent)
    return json.dumps(str(obj))


def render(cfg: dict, rows: list[dict], diagnostics: list[dict]) -> str:
    header = {"config": cfg, "version": __version__}
    if cfg["output"]["format"] == "json":
        results = []
        for item in rows:
            r = item["row"]
            rec = {"label": r.label, "value": r.value, "imag": r.imag, "residual": r.residual}
            if item["sweep"]:
                rec = {"sweep": item["sweep"], **rec}
            results.append(rec)
        return to_json({"header": header, "results": results, "diagnostics": diagnostics}) + "\n"
    buf = io.StringIO()
    buf.write(f"# version: {__version__}\n")
    buf.write("# config: " + json.dumps(cfg, sort_keys=False, default=str) + "\n")
    for d in diagnostics:
        if d.get("kind") == "error":
            buf.write("# error: " + json.dumps(d, default=str) + "\n")
    sweep_names = [a["name"] for a in cfg["sweep"]["axes"]] if cfg["mode"] == "sweep" else []
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(sweep_names + ["label", "value", "imag", "residual"])
    for item in rows:
        r = item["row"]
        sweep_vals = [_fmt_float(item["sweep"][n]) for n in sweep_names]
        writer.writerow(sweep_vals + [r.label, _fmt_float(r.value), _fmt_float(r.imag), _fmt_float(r.residual)])
    return buf.getvalue()


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# --------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rotfield", description="Exact states in rotating magnetic fields: spectra, spin dynamics, checks.")
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a configuration entry (dotted key)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def run(cfg: dict) -> int:
    """Execute a resolved configuration, write the output, return the exit code."""
    code = EXIT_OK
    try:
        if cfg["mode"] == "sweep":
            rows, diags = run_sweep(cfg)
        else:
            res = RUNNERS[cfg["mode"]](cfg)
            rows = [{"sweep": {}, "row": r} for r in res.rows]
            diags = res.diagnostics
    except _PartialVerification as exc:
        rows = [{"sweep": {}, "row": r} for r in exc.result.rows]
        diags = exc.result.diagnostics + [_error_record(exc)]
        code = EXIT_VERIFY
    except (DomainError, VerificationError) as exc:
        rows, diags = [], [_error_record(exc)]
        code = EXIT_DOMAIN if isinstance(exc, DomainError) else EXIT_VERIFY
    _write(render(cfg, rows, diags), cfg["output"]["path"])
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return run(cfg)
    except UsageError as exc:
        sys.stderr.write(f"rotfield: error: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        sys.stderr.write(f"rotfield: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
