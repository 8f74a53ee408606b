"""Scenario-driven command line front end.

Verbs: ``validate``, ``geodesic``, ``affine``, ``jet-report``.  Scenarios are
JSON files (schema in the README); reports are JSON with floats rendered at
17 significant digits so identical runs produce byte-identical files, and
geodesic traces are CSV.

Exit codes: 0 all requested checks passed, 1 checks failed, 2 configuration
or parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import curves, finsler, jetspace, maps
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import FinslerError

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG_ERROR = 2


# -- deterministic JSON ----------------------------------------------------------


def _render_json(obj, indent: int = 0) -> str:
    """Small deterministic JSON writer: sorted keys, floats at 17 sig digits."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [
            f'{pad}  {json.dumps(str(k))}: {_render_json(v, indent + 1)}'
            for k, v in sorted(obj.items())
        ]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        rows = [f"{pad}  {_render_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    if obj is None:
        return "null"
    return json.dumps(str(obj))


REPORT_SCHEMA_VERSION = 1


def _emit(report: dict, out_path: str | None) -> None:
    report = {"schema_version": REPORT_SCHEMA_VERSION, **report}
    text = _render_json(report) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- scenario loading --------------------------------------------------------------


def _build_structure(spec: dict) -> finsler.FinslerStructure:
    if "catalog" in spec:
        name = spec["catalog"]
        if name not in finsler.CATALOG:
            raise ValueError(f"unknown catalog structure {name!r}")
        params = dict(spec.get("params", {}))
        return finsler.CATALOG[name](**params)
    if "expression" in spec:
        return finsler.from_expression(
            spec["expression"],
            int(spec["dim"]),
            label=spec.get("label", "custom"),
            t_box=tuple(tuple(b) for b in spec.get("t_box", ())),
            s_box=tuple(tuple(b) for b in spec.get("s_box", ())),
            s_sample_min_norm=float(spec.get("s_sample_min_norm", 0.3)),
        )
    raise ValueError("structure spec needs 'catalog' or 'expression'")


class Scenario:
    def __init__(self, raw: dict):
        self.raw = raw
        self.source = _build_structure(raw["source"])
        self.target = _build_structure(raw["target"]) if "target" in raw else None
        self.map = None
        if "map" in raw:
            tgt_dim = self.target.dim if self.target else self.source.dim
            self.map = maps.smooth_map(self.source.dim, tgt_dim, raw["map"]["components"])
        sampling = raw.get("sampling", {})
        self.seed = int(sampling.get("seed", 42))
        self.count = int(sampling.get("count", 64))
        self.tolerances: Tolerances = DEFAULT_TOLERANCES.with_overrides(
            **{k: float(v) for k, v in raw.get("tolerances", {}).items()}
        )
        self.checks = list(raw.get("checks", []))
        self.fault_injection = raw.get("fault_injection")


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        raw = json.load(fh)
    return Scenario(raw)


# -- commands -----------------------------------------------------------------------


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    structures = [sc.source] + ([sc.target] if sc.target else [])
    report = {"command": "validate", "structures": [], "seed": sc.seed, "count": sc.count}
    ok = True
    for fs in structures:
        rep = finsler.validate_structure(fs, count=sc.count, seed=sc.seed, tol=sc.tolerances)
        ok = ok and rep.passed
        report["structures"].append(
            {
                "label": rep.label,
                "pass": rep.passed,
                "checks": [
                    {
                        "name": c.name,
                        "max_residual": c.max_residual,
                        "pass": c.passed,
                        "detail": c.detail,
                    }
                    for c in rep.checks
                ],
            }
        )
    report["overall_pass"] = ok
    _emit(report, args.out)
    return EXIT_OK if ok else EXIT_CHECKS_FAILED


def _parse_vector(text: str, dim: int, what: str) -> np.ndarray:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != dim:
        raise ValueError(f"{what} needs {dim} comma-separated components")
    return np.array(parts)


def cmd_geodesic(args) -> int:
    sc = load_scenario(args.scenario)
    fs = sc.source
    t0 = _parse_vector(args.t0, fs.dim, "--t0")
    v0 = _parse_vector(args.v0, fs.dim, "--v0")
    trace = curves.integrate_autoparallel(
        fs,
        curves.CurveState(0.0, t0, v0),
        args.tmax,
        tol=args.tol,
        samples=args.samples,
        tolerances=sc.tolerances,
    )
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["time"]
                + [f"t{i + 1}" for i in range(fs.dim)]
                + [f"v{i + 1}" for i in range(fs.dim)]
                + ["speed_F"]
            )
            for k in range(len(trace.times)):
                writer.writerow(
                    [format(trace.times[k], ".17g")]
                    + [format(x, ".17g") for x in trace.positions[k]]
                    + [format(x, ".17g") for x in trace.velocities[k]]
                    + [format(trace.speeds[k], ".17g")]
                )
    drift = float(np.abs(trace.speeds - trace.speeds[0]).max() / max(1e-300, trace.speeds[0]))
    report = {
        "command": "geodesic",
        "structure": fs.label,
        "t_final": args.tmax,
        "tol": args.tol,
        "samples": int(args.samples),
        "endpoint": [float(x) for x in trace.positions[-1]],
        "final_velocity": [float(x) for x in trace.velocities[-1]],
        "speed_initial": float(trace.speeds[0]),
        "speed_relative_drift": drift,
        "steps_accepted": trace.stats.steps_accepted,
        "steps_rejected": trace.stats.steps_rejected,
        "rhs_evaluations": trace.stats.rhs_evaluations,
    }
    _emit(report, args.out)
    return EXIT_OK


def cmd_affine(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.map is None or sc.target is None:
        raise ValueError("affine command needs 'target' and 'map' in the scenario")
    src, tgt, phi = sc.source, sc.target, sc.map
    tols = sc.tolerances
    checks = sc.checks or ["affine"]
    pts = finsler.sample_points(src, sc.count, sc.seed)
    report = {"command": "affine", "source": src.label, "target": tgt.label, "checks": {}}
    ok = True

    if "affine" in checks or "tension" in checks:
        sup = 0.0
        witness = None
        tension_sup = 0.0
        for pt in pts:
            res = maps.affine_residual(src, tgt, phi, pt)
            if res.sup > sup:
                sup = res.sup
                witness = pt
            if "tension" in checks:
                tension_sup = max(
                    tension_sup,
                    float(np.abs(maps.tension_field(src, tgt, phi, pt, tol=tols)).max()),
                )
        if "affine" in checks:
            verdict = sup <= tols.affine_declare
            ok = ok and verdict
            report["checks"]["affine"] = {
                "tau_sup": sup,
                "tolerance": tols.affine_declare,
                "verdict": "affine" if verdict else "not-affine",
                "pass": verdict,
                "witness_point": {
                    "t": [float(x) for x in witness.t],
                    "s": [float(x) for x in witness.s],
                }
                if witness is not None
                else None,
            }
        if "tension" in checks:
            passed = tension_sup <= tols.tension_crosscheck
            ok = ok and passed
            report["checks"]["tension"] = {
                "tension_sup": tension_sup,
                "tolerance": tols.tension_crosscheck,
                "pass": passed,
            }

    if "isometry" in checks:
        try:
            iso = maps.isometry_check(src, tgt, phi, pts, tol=tols)
            report["checks"]["isometry"] = {
                "max_scalar_residual": iso.max_scalar_residual,
                "max_tensor_residual": iso.max_tensor_residual,
                "pass": iso.passed,
            }
            ok = ok and iso.passed
        except FinslerError as err:
            report["checks"]["isometry"] = {"error": str(err), "pass": False}
            ok = False

    if "transport" in checks:
        tr_spec = sc.raw.get("transport", {})
        t0 = np.array(tr_spec.get("t0", [float(x) for x in pts[0].t]))
        v0 = np.array(tr_spec.get("v0", [float(x) for x in pts[0].s]))
        t_final = float(tr_spec.get("t_final", 1.0))
        bound = float(tr_spec.get("residual_bound", 10.0 * tols.ode_tol))
        rep = maps.autoparallel_transport_test(
            src,
            tgt,
            phi,
            curves.CurveState(0.0, t0, v0),
            t_final,
            tol=tols.ode_tol,
            samples=int(tr_spec.get("samples", 25)),
            residual_bound=bound,
        )
        report["checks"]["transport"] = {
            "sup_residual": rep.sup_residual,
            "bound": bound,
            "pass": rep.passed,
        }
        ok = ok and rep.passed

    report["overall_pass"] = ok
    _emit(report, args.out)
    return EXIT_OK if ok else EXIT_CHECKS_FAILED


def cmd_jet_report(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.target is None:
        raise ValueError("jet-report needs a 'target' structure")
    kwargs = {}
    if sc.fault_injection:
        kwargs["corrupt_block"] = sc.fault_injection["block"]
        kwargs["corrupt_amount"] = float(sc.fault_injection.get("amount", 1e-3))
    rep = jetspace.cross_validate(
        sc.source,
        sc.target,
        count=sc.count,
        seed=sc.seed,
        rel_tol=sc.tolerances.jet_rel_residual,
        **kwargs,
    )
    _emit(rep.to_dict(), args.out)
    if rep.overall_pass:
        return EXIT_OK
    failing = [b.label for b in rep.blocks if not b.passed]
    print(f"failing blocks: {', '.join(failing)}", file=sys.stderr)
    return EXIT_CHECKS_FAILED


# -- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finslerlab",
        description="Numerical Finsler geometry workbench (scenario-driven)",
        epilog=(
            "Expression grammar: infix with +, -, *, /, parentheses and "
            "function-call syntax for sqrt/sin/cos/exp; '^' takes a rational "
            "literal exponent and binds tighter than unary minus "
            "(-s1^2 means -(s1^2)).  Variables: t1..tp and s1..sp.  "
            "Full EBNF and the scenario schema are in the README."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="run structure identity checks")
    p_val.add_argument("scenario")
    p_val.add_argument("--out", default=None, help="write the JSON report here")
    p_val.set_defaults(func=cmd_validate)

    p_geo = sub.add_parser("geodesic", help="integrate an autoparallel curve")
    p_geo.add_argument("scenario")
    p_geo.add_argument("--t0", required=True, help="initial position, comma separated")
    p_geo.add_argument("--v0", required=True, help="initial velocity, comma separated")
    p_geo.add_argument("--tmax", type=float, required=True)
    p_geo.add_argument("--tol", type=float, default=DEFAULT_TOLERANCES.ode_tol)
    p_geo.add_argument("--samples", type=int, default=101)
    p_geo.add_argument("--csv", default=None, help="write the trace CSV here")
    p_geo.add_argument("--out", default=None)
    p_geo.set_defaults(func=cmd_geodesic)

    p_aff = sub.add_parser("affine", help="affine/isometry/tension/transport checks")
    p_aff.add_argument("scenario")
    p_aff.add_argument("--out", default=None)
    p_aff.set_defaults(func=cmd_affine)

    p_jet = sub.add_parser("jet-report", help="closed vs general jet block cross-check")
    p_jet.add_argument("scenario")
    p_jet.add_argument("--out", default=None)
    p_jet.set_defaults(func=cmd_jet_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FinslerError, ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
