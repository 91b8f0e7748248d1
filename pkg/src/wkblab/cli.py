"""Command-line driver: scenario runs and one subcommand per pipeline.

Exit codes: 0 pass, 1 check failure, 2 usage or configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import (DEFAULT_TOLERANCES, SCHEMA_VERSION, Scenario, load_scenario, parse_complex,
                     parse_complex_list, parse_loop)
from .curve import canonical_generators, circle_path, complex_pair, make_curve
from .differentials import (QuadraticDifferential, SlTwoSystem, det_map, noether_rank, random_system,
                            width, zero_system)
from .errors import ConfigParse, InputError, NumericalError, WkbLabError
from .fiber import dilation_transport, regular_probe, solve_fiber
from .flat import birkhoff_average, find_wkb_curve, make_surface, regular_octagon, square_torus
from .monodromy import representation
from .semiflat import (conic_scaling_check, default_cycles, holo_sectional_curvature, model_metric,
                       random_hermitian_pd, scaling_action_check, spectral_periods)
from .wkb import is_wkb_curve, model_wkb_setup, relative_error, sweep, system_with_det

EXIT_PASS, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

SWEEP_COLUMNS = ("t", "loop_id", "log_abs_char")


# ---------------------------------------------------------------------------
# helpers


def _clean(obj):
    """JSON-ready copy: numpy scalars to floats, complex to [re, im]."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_pair(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()


def build_curve(spec):
    if spec is None:
        raise ConfigParse("missing curve")
    if spec.get("builtin") == "model_wkb":
        return model_wkb_setup()[0]
    if "p_coeffs" not in spec:
        raise ConfigParse("curve needs p_coeffs or builtin: model_wkb")
    return make_curve(parse_complex_list(spec["p_coeffs"], "curve.p_coeffs"))


def build_system(curve, spec, rng) -> SlTwoSystem:
    spec = spec or {"zero": True}
    if spec.get("zero"):
        return zero_system(curve)
    if spec.get("random"):
        A = random_system(curve, rng)
        return A.scaled(float(spec.get("scale", 1.0)))
    if "det" in spec:
        return system_with_det(QuadraticDifferential(curve, parse_complex_list(spec["det"], "system.det")), rng)
    if "growth" in spec:
        # det(A) = -psi, so that characters grow like exp(t w_psi)
        psi = QuadraticDifferential(curve, parse_complex_list(spec["growth"], "system.growth"))
        return system_with_det(psi.scaled(-1), rng)
    try:
        return SlTwoSystem.from_dict(curve, spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParse(f"cannot read system: {exc}") from exc


def build_surface(spec):
    spec = spec or {"builtin": "torus"}
    kind = spec.get("builtin")
    if kind == "torus":
        return square_torus()
    if kind == "octagon":
        return regular_octagon(float(spec.get("circumradius", 1.0)))
    if kind is not None:
        raise ConfigParse(f"unknown builtin surface {kind!r}")
    return make_surface(spec)


TORUS_FUNCTIONS = {
    # name: (function on the unit square, exact space average)
    "cos2pi_x": (lambda P, z: np.cos(2 * np.pi * z.real), 0.0),
    "cos2pi_y": (lambda P, z: np.cos(2 * np.pi * z.imag), 0.0),
    "x": (lambda P, z: z.real, 0.5),
    "xy": (lambda P, z: z.real * z.imag, 0.25),
}


def _psi_ratio(value):
    if isinstance(value, list) and value and isinstance(value[0], list):
        return parse_complex_list(value, "psi_ratio")
    if isinstance(value, list) and len(value) != 2:
        return parse_complex_list(value, "psi_ratio")
    return parse_complex(value, "psi_ratio")


# ---------------------------------------------------------------------------
# scenario checks


def _check_monodromy(scn: Scenario, c: dict, ctx: dict) -> dict:
    curve, A = ctx["curve"], ctx["system"]
    tol = float(c.get("tol", scn.tol("monodromy")))
    gens = canonical_generators(curve)
    records = []
    ok = True
    for t in c.get("t", [1.0]):
        rep = representation(curve, A, float(t), gens, tol=tol, check=False,
                             precision=c.get("precision", "auto"))
        dev = max(float(np.abs(m.to_array() - np.eye(2)).max()) for m in rep.gens)
        good = rep.defect <= tol and (np.any(A.coeffs) or dev <= tol)
        ok &= bool(good)
        records.append({"t": float(t), "defect": rep.defect, "identity_deviation": dev,
                        "precision": rep.precision})
    return {"pass": ok, "tol": tol, "records": records}


def _check_wkb(scn: Scenario, c: dict, ctx: dict, out_dir: Path | None) -> dict:
    curve, A = ctx["curve"], ctx["system"]
    loop = parse_loop(scn.loops[c["loop"]])
    grid = c.get("t_grid") or scn.t_grid
    if isinstance(grid, dict):
        grid = list(np.linspace(float(grid["start"]), float(grid["stop"]), int(grid["num"])))
    psi = det_map(A).scaled(-1)
    w = width(psi, loop)
    wkb, margin = is_wkb_curve(psi, loop)
    sw = sweep(curve, A, loop, grid, tol=scn.tol("propagation"))
    slack = float(c.get("slack", scn.tol("wkb_slack")))
    rel = relative_error(sw, w) if w > 0 else math.inf
    mode = c.get("mode", "upper")
    ok = sw.slope <= w * (1 + slack) + 1e-9
    if mode == "equality":
        ok = ok and wkb and rel <= slack
    files = []
    if out_dir is not None:
        name = f"{c['id']}_sweep.csv"
        (out_dir / name).write_text(rows_to_csv(sw.rows(c["loop"]), SWEEP_COLUMNS))
        files.append(name)
    return {"pass": bool(ok), "mode": mode, "slope": sw.slope, "width": w, "rel_error": rel,
            "is_wkb": wkb, "transversality_margin": margin, "fit_residual": sw.residual, "files": files}


def _check_noether(scn: Scenario, c: dict, ctx: dict) -> dict:
    r = noether_rank(ctx["system"])
    expected = int(c.get("expected", 3))
    return {"pass": r == expected, "rank": r, "expected": expected}


def _check_fiber(scn: Scenario, c: dict, ctx: dict) -> dict:
    curve = ctx["curve"]
    targets = c.get("targets") or scn.fiber_targets
    starts = int(c.get("starts", 200))
    out, ok = [], True
    for k, tq in enumerate(targets):
        phi = QuadraticDifferential(curve, parse_complex_list(tq, f"targets[{k}]"))
        rep = solve_fiber(curve, phi, n_starts=starts, seed=scn.seed, tol=scn.tol("fiber"))
        rec = {"target": phi.coeffs, "degree_estimate": rep.degree_estimate,
               "max_residual": max(rep.residuals), "ramification_suspect": rep.ramification_suspect}
        good = rec["max_residual"] <= 1e-10
        if "expect_degree" in c:
            good &= rep.degree_estimate == int(c["expect_degree"])
        if c.get("probe"):
            rec["regular"] = regular_probe(curve, phi, seed=scn.seed)
        if "dilation_t" in c:
            t = float(c["dilation_t"])
            moved = dilation_transport(rep.solutions[0], t)
            direct = solve_fiber(curve, phi.scaled(t), n_starts=starts, seed=scn.seed, tol=scn.tol("fiber"))
            rec["dilation_error"] = min(moved.distance(s) for s in direct.solutions)
            good &= rec["dilation_error"] <= 1e-9 * max(1.0, t)
        ok &= bool(good)
        out.append(rec)
    return {"pass": ok, "records": out}


def _check_birkhoff(scn: Scenario, c: dict, ctx: dict) -> dict:
    surf = build_surface(scn.flat_surface)
    name = c.get("function", "cos2pi_x")
    if name not in TORUS_FUNCTIONS:
        raise ConfigParse(f"unknown test function {name!r}; known: {sorted(TORUS_FUNCTIONS)}")
    f, mean = TORUS_FUNCTIONS[name]
    T = float(c.get("T", 1000.0))
    # default slope is the inverse golden ratio, a badly approximable direction
    theta = float(c.get("theta", 2 * math.atan((math.sqrt(5) - 1) / 2)))
    st = c.get("start", [0, [0.1234, 0.5678]])
    start = (int(st[0]), parse_complex(st[1], "start"))
    avg = birkhoff_average(surf, f, start, theta, T)
    dev = abs(avg - mean)
    return {"pass": dev <= 5.0 / T, "average": avg, "space_average": mean, "deviation": dev, "bound": 5.0 / T}


def _check_find_wkb(scn: Scenario, c: dict, ctx: dict) -> dict:
    surf = build_surface(scn.flat_surface)
    res = find_wkb_curve(surf, _psi_ratio(c.get("psi_ratio", [0.5, math.sqrt(3) / 2])),
                         theta0=float(c.get("theta0", 0.3)), n_theta=int(c.get("n_theta", 7)),
                         n_starts=int(c.get("starts", 8)), T_max=float(c.get("T_max", 200.0)),
                         eps=float(c.get("eps", 1e-2)), seed=scn.seed)
    return {"pass": res.margin > 0 and res.transversality > 0, "theta": res.theta, "w_phi": res.w_phi,
            "w_psi": res.w_psi, "margin": res.margin, "transversality": res.transversality,
            "length": res.curve.length, "closing_insert": res.curve.closing_insert is not None}


def _check_spectral(scn: Scenario, c: dict, ctx: dict) -> dict:
    curve = ctx["curve"]
    phi = QuadraticDifferential(curve, parse_complex_list(c["phi"], "phi"))
    cycles = default_cycles(phi)
    t = float(c.get("t", 9.0))
    tol = float(c.get("tol", scn.tol("spectral")))
    p1 = spectral_periods(curve, phi, cycles).periods
    pt = spectral_periods(curve, phi.scaled(t), cycles).periods
    err = float(np.abs(pt - math.sqrt(t) * p1).max() / max(1.0, np.abs(pt).max()))
    return {"pass": err <= tol, "t": t, "periods": p1, "max_rel_error": err, "n_cycles": len(cycles)}


def _check_conic(scn: Scenario, c: dict, ctx: dict) -> dict:
    curve = ctx["curve"]
    phi = QuadraticDifferential(curve, parse_complex_list(c["phi"], "phi"))
    rep = conic_scaling_check(curve, phi, default_cycles(phi), [float(v) for v in c.get("t_list", [1, 4])],
                              seed=scn.seed)
    tol = float(c.get("tol", scn.tol("conic")))
    return {"pass": rep.max_rel_error <= tol and rep.euler_error <= tol, "ratios": rep.ratios,
            "max_rel_error": rep.max_rel_error, "euler_error": rep.euler_error}


def _check_scaling_action(scn: Scenario, c: dict, ctx: dict) -> dict:
    rng = np.random.default_rng(scn.seed)
    tol = float(c.get("tol", scn.tol("scaling_action")))
    worst = 0.0
    for n in c.get("n", [1, 2, 3, 4]):
        for _ in range(int(c.get("n_metrics", 20))):
            g = random_hermitian_pd(int(n), rng)
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            for t in c.get("t_list", [0.5, 1, 2, 7]):
                worst = max(worst, scaling_action_check(int(n), g, float(t), a))
    return {"pass": worst <= tol, "max_error": worst}


def curvature_samples(n: int, n_samples: int, rng: np.random.Generator, box: float = 1.2):
    out = []
    for _ in range(n_samples):
        p = box * (2 * rng.random(2 * n) - 1) + 1j * rng.standard_normal(2 * n)
        d = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
        out.append((p, d, holo_sectional_curvature(n, p, d)))
    return out


def _check_model_metric(scn: Scenario, c: dict, ctx: dict, out_dir: Path | None) -> dict:
    rng = np.random.default_rng(scn.seed)
    tol = float(c.get("tol", scn.tol("curvature")))
    recs, ok = [], True
    rows = []
    for n in c.get("n", [1, 2, 3]):
        n = int(n)
        z = np.zeros(2 * n, dtype=complex)
        axis = np.eye(2 * n)[0]
        diag = np.concatenate([np.ones(n), np.zeros(n)])
        k_axis = holo_sectional_curvature(n, z, axis)
        k_diag = holo_sectional_curvature(n, z, diag)
        ks = [k for _, _, k in curvature_samples(n, int(c.get("samples", 100)), rng)]
        rows += [{"n": n, "sample": j, "curvature": k} for j, k in enumerate(ks)]
        lo, hi = min(ks), max(ks)
        product_range = lo >= -1 - tol and hi <= -1 / (2 * n) + tol
        good = abs(k_axis + 1) <= tol and abs(k_diag + 1 / n) <= tol and product_range
        ok &= bool(good)
        recs.append({"n": n, "axis": k_axis, "diagonal": k_diag, "min": lo, "max": hi,
                     "within_product_range": product_range,
                     "within_minus_one_over_n": bool(lo >= -1 - tol and hi <= -1 / n + tol)})
    files = []
    if out_dir is not None:
        name = f"{c['id']}_curvature.csv"
        (out_dir / name).write_text(rows_to_csv(rows, ("n", "sample", "curvature")))
        files.append(name)
    return {"pass": ok, "records": recs, "files": files}


_RUNNERS = {
    "monodromy_relation": _check_monodromy,
    "noether_rank": _check_noether,
    "fiber": _check_fiber,
    "flat_birkhoff": _check_birkhoff,
    "flat_find_wkb": _check_find_wkb,
    "spectral_scaling": _check_spectral,
    "conic_scaling": _check_conic,
    "scaling_action": _check_scaling_action,
}


def run_check(scn: Scenario, c: dict, ctx: dict, out_dir: Path | None) -> dict:
    rec = {"id": c["id"], "kind": c["kind"]}
    try:
        if "system" in c:
            # per-check system, seeded from the scenario seed and the check id
            rng = np.random.default_rng([scn.seed, sum(map(ord, c["id"]))])
            ctx = dict(ctx, system=build_system(ctx["curve"], c["system"], rng))
        if c["kind"] == "wkb_sweep":
            rec.update(_check_wkb(scn, c, ctx, out_dir))
        elif c["kind"] == "model_metric":
            rec.update(_check_model_metric(scn, c, ctx, out_dir))
        else:
            rec.update(_RUNNERS[c["kind"]](scn, c, ctx))
        rec["status"] = "pass" if rec["pass"] else "fail"
    except NumericalError as exc:
        rec.update({"pass": False, "status": "numeric_error", "error": f"{type(exc).__name__}: {exc}"})
    except WkbLabError as exc:
        rec.update({"pass": False, "status": "fail", "error": f"{type(exc).__name__}: {exc}"})
    return rec


def run_scenario(scn: Scenario, out_dir: Path | None = None, threads: int = 1) -> dict:
    rng = np.random.default_rng(scn.seed)
    ctx = {}
    if scn.curve:
        ctx["curve"] = build_curve(scn.curve)
        ctx["system"] = build_system(ctx["curve"], scn.system, rng)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        records = list(pool.map(lambda c: run_check(scn, c, ctx, out_dir), scn.checks))
    failures = [r["id"] for r in records if not r["pass"]]
    summary = {"schema_version": SCHEMA_VERSION, "wkblab_version": __version__, "scenario": scn.name,
               "seed": scn.seed, "tolerances": scn.tolerances, "checks": records,
               "n_checks": len(records), "n_failed": len(failures), "failures": failures}
    if out_dir is not None:
        (out_dir / "summary.json").write_text(dumps(summary))
    return summary


def exit_code(summary: dict) -> int:
    if any(r["status"] == "numeric_error" for r in summary["checks"]):
        return EXIT_NUMERIC
    return EXIT_CHECK if summary["n_failed"] else EXIT_PASS


def run(scenario_path, out_dir, threads: int = 1) -> int:
    """Run a scenario file and write summary.json (plus CSVs) into out_dir."""
    scn = load_scenario(scenario_path)
    return exit_code(run_scenario(scn, Path(out_dir), threads))


# ---------------------------------------------------------------------------
# subcommands


def _emit(args, payload: dict, rows=None, columns=None) -> None:
    if args.format == "csv" and rows is not None:
        sys.stdout.write(rows_to_csv(rows, columns))
    else:
        sys.stdout.write(dumps(payload))


def _curve_arg(text: str):
    return make_curve([parse_complex(v) for v in text.split(",")])


def _q_arg(text: str) -> list[complex]:
    vals = [parse_complex(v) for v in text.split(",")]
    if len(vals) != 3:
        raise ConfigParse("a quadratic differential needs 3 coefficients q0,q1,q2")
    return vals


def _system_arg(curve, text: str, rng):
    if text == "zero":
        return zero_system(curve)
    if text == "random":
        return random_system(curve, rng)
    return build_system(curve, json.loads(text), rng)


def cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    if args.seed is not None:
        scn.seed = args.seed
    if args.tol is not None:
        scn.tolerances["monodromy"] = args.tol
    summary = run_scenario(scn, Path(args.out), args.threads)
    if args.format == "json":
        sys.stdout.write(dumps(summary))
    else:
        for r in summary["checks"]:
            print(f"{r['status'].upper():14s} {r['id']}")
    return exit_code(summary)


def cmd_monodromy(args) -> int:
    rng = np.random.default_rng(args.seed or 0)
    curve = _curve_arg(args.curve)
    A = _system_arg(curve, args.system, rng)
    tol = args.tol or DEFAULT_TOLERANCES["monodromy"]
    gens = canonical_generators(curve)
    rep = representation(curve, A, args.t, gens, tol=tol, check=False, precision=args.precision)
    rows = []
    for name, m in rep.named().items():
        arr = m.to_array() if m.log_scale < 700 else None
        rows.append({"generator": name, "log_scale": m.log_scale,
                     "log_abs_trace": math.log(abs(m.trace())) + m.log_scale if m.trace() != 0 else -math.inf,
                     "matrix": None if arr is None else arr.tolist()})
    payload = {"t": args.t, "defect": rep.defect, "tol": tol, "pass": rep.defect <= tol,
               "precision": rep.precision, "dps": rep.dps, "roundoff_floor": rep.roundoff_floor,
               "system": A.to_dict(), "generators": rows}
    _emit(args, payload, [{k: r[k] for k in ("generator", "log_scale", "log_abs_trace")} for r in rows],
          ("generator", "log_scale", "log_abs_trace"))
    return EXIT_PASS if rep.defect <= tol else EXIT_CHECK


def _wkb_inputs(args):
    curve, phi, loop = model_wkb_setup()
    if args.curve:
        curve = _curve_arg(args.curve)
    if args.q:
        phi = QuadraticDifferential(curve, _q_arg(args.q))
    elif args.curve:
        phi = QuadraticDifferential(curve, phi.coeffs)
    if args.loop_radius is not None:
        loop = circle_path(parse_complex(args.loop_center), args.loop_radius)
    return curve, phi, loop


def cmd_wkb_sweep(args) -> int:
    curve, psi, loop = _wkb_inputs(args)
    A = system_with_det(psi.scaled(-1), np.random.default_rng(args.seed or 0))
    grid = np.linspace(args.t_max / 4, args.t_max, args.n_t)
    sw = sweep(curve, A, loop, grid, tol=args.tol or DEFAULT_TOLERANCES["propagation"])
    w = width(psi, loop)
    wkb, margin = is_wkb_curve(psi, loop)
    rel = relative_error(sw, w) if w > 0 else math.inf
    ok = sw.slope <= w * (1 + args.slack) + 1e-9 and (not wkb or rel <= args.slack)
    verdict = {"slope": sw.slope, "width": w, "rel_error": rel, "is_wkb": wkb, "pass": bool(ok)}
    if args.verdict:
        Path(args.verdict).write_text(dumps(verdict))
    _emit(args, {"rows": list(sw.rows()), "verdict": verdict, "transversality_margin": margin},
          sw.rows(), SWEEP_COLUMNS)
    return EXIT_PASS if ok else EXIT_CHECK


def cmd_width(args) -> int:
    curve, psi, loop = _wkb_inputs(args)
    w = width(psi, loop, tol=args.tol or 1e-6)
    wkb, margin = is_wkb_curve(psi, loop)
    payload = {"width": w, "is_wkb": wkb, "transversality_margin": margin}
    _emit(args, payload, [payload], ("width", "is_wkb", "transversality_margin"))
    return EXIT_PASS


def cmd_find_wkb(args) -> int:
    surf = build_surface({"builtin": args.surface} if args.surface in ("torus", "octagon")
                         else __import__("yaml").safe_load(Path(args.surface).read_text()))
    ratio = _psi_ratio([parse_complex(v) for v in args.psi_ratio.split(",")]
                       if "," in args.psi_ratio else parse_complex(args.psi_ratio))
    res = find_wkb_curve(surf, ratio, theta0=args.theta0, n_theta=args.n_theta, n_starts=args.starts,
                         T_max=args.t_max, eps=args.eps, seed=args.seed or 0)
    payload = {"theta": res.theta, "start": [res.start[0], res.start[1]], "w_phi": res.w_phi,
               "w_psi": res.w_psi, "margin": res.margin, "transversality": res.transversality,
               "curve": res.curve.to_dict()}
    rows = [{"poly": s.poly, "x0": s.z0.real, "y0": s.z0.imag, "x1": s.z1.real, "y1": s.z1.imag}
            for s in res.curve.all_segments]
    _emit(args, payload, rows, ("poly", "x0", "y0", "x1", "y1"))
    return EXIT_PASS


def cmd_det_fiber(args) -> int:
    curve = _curve_arg(args.curve)
    phi = QuadraticDifferential(curve, _q_arg(args.q))
    rep = solve_fiber(curve, phi, n_starts=args.starts, seed=args.seed or 0, tol=args.tol or 1e-12)
    payload = rep.to_dict()
    if args.probe_radius is not None:
        payload["regular"] = regular_probe(curve, phi, radius=args.probe_radius, seed=args.seed or 0)
    rows = [{"d1": str(s.d1), "e": str(s.e), "f": str(s.f), "g": str(s.g), "residual": r}
            for s, r in zip(rep.solutions, rep.residuals)]
    _emit(args, payload, rows, ("d1", "e", "f", "g", "residual"))
    return EXIT_PASS


def cmd_spectral(args) -> int:
    curve = _curve_arg(args.curve)
    phi = QuadraticDifferential(curve, _q_arg(args.q))
    cycles = default_cycles(phi)
    sp = spectral_periods(curve, phi, cycles, tol=args.tol or 1e-12)
    st = spectral_periods(curve, phi.scaled(args.t), cycles, tol=args.tol or 1e-12)
    rows = [{"cycle": k, "re": p.real, "im": p.imag, "re_scaled": q.real, "im_scaled": q.imag}
            for k, (p, q) in enumerate(zip(sp.periods, st.periods))]
    err = float(np.abs(st.periods - math.sqrt(args.t) * sp.periods).max())
    _emit(args, {"periods": sp.periods, "t": args.t, "scaled_periods": st.periods, "sqrt_t_error": err,
                 "cycles": [c.to_dict() for c in cycles]}, rows, ("cycle", "re", "im", "re_scaled", "im_scaled"))
    return EXIT_PASS


def cmd_model_metric(args) -> int:
    n = args.n
    point = (np.zeros(2 * n, dtype=complex) if args.point is None
             else np.array([parse_complex(v) for v in args.point.split(",")]))
    probe = model_metric(n, point)
    payload = {"n": n, "point": probe.point, "metric": probe.metric}
    if args.direction is not None:
        d = np.array([parse_complex(v) for v in args.direction.split(",")])
        payload["curvature"] = holo_sectional_curvature(n, point, d)
    rows = []
    if args.samples:
        ks = [k for _, _, k in curvature_samples(n, args.samples, np.random.default_rng(args.seed or 0))]
        payload["samples"] = ks
        rows = [{"sample": j, "curvature": k} for j, k in enumerate(ks)]
    _emit(args, payload, rows if args.samples else None, ("sample", "curvature"))
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--threads", type=int, default=1)

    p = argparse.ArgumentParser(prog="wkblab", description="Numerical WKB and monodromy experiments on genus-2 curves")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="run a scenario file")
    s.add_argument("scenario")
    s.add_argument("--out", default="wkblab-out")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("monodromy", parents=[common], help="generator monodromies and relation defect")
    s.add_argument("--curve", default="1,0,0,0,-1,0", help="p coefficients, highest degree first")
    s.add_argument("--system", default="random", help="zero, random or a JSON system spec")
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--precision", choices=("auto", "double", "mp"), default="auto")
    s.set_defaults(func=cmd_monodromy)

    for name, func, help_ in (("wkb-sweep", cmd_wkb_sweep, "log|trace| sweep against the width"),
                              ("width", cmd_width, "width of a loop for a quadratic differential")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--curve", default=None)
        s.add_argument("--q", default=None, help="growth differential q0,q1,q2 (ascending)")
        s.add_argument("--loop-center", default="0")
        s.add_argument("--loop-radius", type=float, default=None)
        if name == "wkb-sweep":
            s.add_argument("--t-max", type=float, default=40.0)
            s.add_argument("--n-t", type=int, default=12)
            s.add_argument("--slack", type=float, default=0.02)
            s.add_argument("--verdict", default=None, help="write the JSON verdict to this file")
        s.set_defaults(func=func)

    s = sub.add_parser("find-wkb-curve", parents=[common], help="search a flat surface for a WKB curve")
    s.add_argument("--surface", default="torus", help="torus, octagon or a YAML surface file")
    s.add_argument("--psi-ratio", default="0.5+0.8660254037844386j")
    s.add_argument("--theta0", type=float, default=0.3)
    s.add_argument("--n-theta", type=int, default=7)
    s.add_argument("--starts", type=int, default=8)
    s.add_argument("--t-max", type=float, default=200.0)
    s.add_argument("--eps", type=float, default=1e-2)
    s.set_defaults(func=cmd_find_wkb)

    s = sub.add_parser("det-fiber", parents=[common], help="solve det(A) = phi modulo conjugation")
    s.add_argument("--curve", default="1,0,0,0,-1,0")
    s.add_argument("--q", default="1,0.5,-0.3")
    s.add_argument("--starts", type=int, default=200)
    s.add_argument("--probe-radius", type=float, default=None)
    s.set_defaults(func=cmd_det_fiber)

    s = sub.add_parser("spectral", parents=[common], help="periods of sqrt(phi) on the spectral cover")
    s.add_argument("--curve", default="1,0.2,-1,0.5j,0.3,-1,0.7")
    s.add_argument("--q", default="1,0.4+0.2j,-0.7")
    s.add_argument("--t", type=float, default=9.0)
    s.set_defaults(func=cmd_spectral)

    s = sub.add_parser("model-metric", parents=[common], help="model metric and holomorphic sectional curvature")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--point", default=None, help="2n holomorphic coordinates (u, v)")
    s.add_argument("--direction", default=None)
    s.add_argument("--samples", type=int, default=0)
    s.set_defaults(func=cmd_model_metric)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_PASS
    try:
        return args.func(args)
    except (ConfigParse, InputError, json.JSONDecodeError, ValueError) as exc:
        print(f"wkblab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"wkblab: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except WkbLabError as exc:
        print(f"wkblab: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
