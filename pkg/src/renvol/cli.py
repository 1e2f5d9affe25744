"""Batch front end: invariant suites, volume reports, Epstein mesh export,
Schlafli checks, extremization runs.

Exit codes: 0 all checks passed, 1 a tolerance failed, 2 usage or config
error.  Config files are plain key=value text; every randomized suite takes
an explicit seed for deterministic output.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import extremize, infinity, liouville, suites, surfaces, variational, wvolume
from .errors import GeometryError

USAGE_ERROR = 2
TOLERANCE_ERROR = 1


def parse_config(path):
    """key=value config: ints, floats, comma lists; '#' comments."""
    config = {}
    if path is None:
        return config
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        config[key] = _parse_value(value)
    return config


def _parse_value(value):
    if "," in value:
        return [_parse_value(v.strip()) for v in value.split(",") if v.strip()]
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def _out_dir(args):
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_verify(args):
    try:
        config = parse_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    if args.seed is not None:
        config["seed"] = args.seed
    try:
        checks = suites.run_suite(args.suite, config)
    except KeyError:
        print(f"unknown suite '{args.suite}' "
              f"(choose from {', '.join(suites.SUITES)}, all)", file=sys.stderr)
        return USAGE_ERROR

    out = _out_dir(args)
    failures = 0
    rows = []
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        rel = "<=" if c.kind == "max" else ">="
        print(f"[{status}] {c.name}: {c.value:.6g} {rel} {c.tolerance:g}")
        rows.append([c.name, c.value, c.tolerance, c.kind, status])
        failures += 0 if c.passed else 1
    with open(out / f"verify_{args.suite}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check", "value", "tolerance", "kind", "status"])
        writer.writerows(rows)
    summary = {
        "suite": args.suite,
        "checks": len(checks),
        "failures": failures,
        "seed": config.get("seed", suites.DEFAULTS["seed"]),
    }
    (out / f"verify_{args.suite}.json").write_text(json.dumps(summary, indent=2))
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return TOLERANCE_ERROR if failures else 0


def cmd_epstein(args):
    try:
        field = liouville.load_field(args.field)
    except (OSError, GeometryError, ValueError) as exc:
        print(f"field error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    rho_values = [float(r) for r in args.rho.split(",")]
    out = _out_dir(args)

    conv = liouville.convexity_test(field)
    if not conv.passed:
        print(f"warning: convexity test fails at nodes {conv.failing_nodes} "
              f"(min k*_2 = {conv.min_curvature:.3g}); meshes still emitted",
              file=sys.stderr)

    inf = liouville.infinity_data(field)
    rows = []
    for rho in rho_values:
        patch = liouville.epstein_embedding(field, rho)
        surfaces.write_obj(patch, out / f"epstein_rho{rho:g}.obj")
        forms = surfaces.compute_forms(patch)
        target = infinity.metric_from_infinity_at_rho(inf, rho)
        resid = float(np.max(np.abs(forms.metric - target)))
        rows.append([rho, resid])
        print(f"rho={rho:g}: wrote mesh, metric residual {resid:.3e}")
    with open(out / "epstein_metric_residuals.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "metric_residual"])
        writer.writerows(rows)
    return 0


def cmd_volume(args):
    try:
        config = parse_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    out = _out_dir(args)
    family = config.get("family", "ball")
    rho_values = config.get("rho_values", suites.DEFAULTS["rho_values"])

    if family == "ball":
        r = float(config.get("radius", 1.0))
        _, forms = surfaces.sphere_patch(r)
        report = wvolume.renormalized_volume(
            forms, rho_values, genus=0, base_volume=surfaces.ball_volume(r))
        summary = wvolume.ball_report(r)
    elif family == "horotorus":
        c = float(config.get("height", 1.0))
        lu = float(config.get("cell", 2 * np.pi))
        _, forms = surfaces.horosphere_patch(c, lu, lu, 32, 32)
        report = wvolume.renormalized_volume(
            forms, rho_values, genus=1,
            base_volume=wvolume.horotorus_cusp_volume(c, lu, lu))
        summary = wvolume.w_volume(wvolume.SlabSpec(forms, rho_hi=1.0))
        summary.renormalized = report.v_r
    else:
        print(f"unknown family '{family}'", file=sys.stderr)
        return USAGE_ERROR

    summary.residual = report.identity_error
    wvolume.write_renormalized_csv(report, out / "volume_table.csv")
    (out / "volume_summary.json").write_text(summary.to_json())
    print(summary.to_json())
    print(f"identity error {report.identity_error:.3e}, "
          f"decay exponent {report.decay_exponent:+.4f}")
    return 0


def cmd_schlafli(args):
    try:
        config = parse_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    out = _out_dir(args)
    eps_values = config.get("eps_values", suites.DEFAULTS["eps_values"])
    r = float(config.get("radius", 1.0))

    fam = variational.ball_family(r)
    rows = []
    for eps in eps_values:
        formula, fd = variational.schlafli_dV(fam, eps)
        rows.append([eps, formula, fd])
    variational.write_check_csv(rows, out / "schlafli_dV_ball.csv")

    g = variational.graph_family(
        lambda x, y: 1.0 + 0.15 * np.cos(x) + 0.1 * np.sin(y),
        variational.normal_displacement(
            lambda u, v: 0.5 + 0.4 * np.cos(u + v) + 0.3 * np.sin(u)),
        deriv_mode="spectral")
    rows = []
    for eps in eps_values:
        formula = variational.dW_boundary(g, eps)
        fd = variational.central_difference(g.w_at, eps)
        rows.append([eps, formula, fd])
    variational.write_check_csv(rows, out / "schlafli_dW_graph.csv")
    slope, gaps = variational.order_fit(g, variational.dW_boundary, "w_at",
                                        eps_values)
    summary = {
        "ball_dW": variational.dW_boundary(fam),
        "dW_order_fit": slope,
        "dW_gaps": gaps,
        "dW_routes": [variational.dW_boundary(g), variational.dW_infinity(g),
                      variational.dW_traceless(g)],
    }
    (out / "schlafli_summary.json").write_text(json.dumps(summary, indent=2))
    print(f"dW eps-order fit: {slope:.3f}")
    return 0


def cmd_extremize(args):
    try:
        config = parse_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    out = _out_dir(args)
    n = int(config.get("grid", 64))
    amplitude = float(config.get("amplitude", 0.1))
    tol = float(config.get("tol", 1e-6))
    max_iter = int(config.get("max_iter", 400))

    lx = 2.0 * np.pi
    fld = liouville.periodic_field(np.zeros((n, n)), lx, 1j * lx)
    fld.phi = 0.3 + amplitude * np.cos(2.0 * np.pi * fld.z.real / lx)
    try:
        state, log = extremize.run_extremization(fld, tol=tol, max_iter=max_iter)
    except GeometryError as exc:
        print(f"extremization failed: {exc}", file=sys.stderr)
        return TOLERANCE_ERROR
    extremize.write_run_log(log, out / "extremize_log.json")
    extremize.write_final_field(state, out / "extremize_final_phi.csv")
    k = state.curvature()
    print(f"converged={log.converged} iterations={log.iterations} "
          f"stddev(K*)={float(np.std(k)):.3e} lambda={state.lam:.3e}")
    return 0 if log.converged else TOLERANCE_ERROR


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="renvol",
        description="W-volume / renormalized-volume workbench for surfaces "
                    "in hyperbolic 3-space")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run a named invariant suite")
    p.add_argument("--suite", default="all",
                   help="forms | infinity | volume | schlafli | extremize | all")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--seed", type=int, help="seed for randomized checks")
    p.add_argument("--out", help="output directory for reports")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("epstein", help="export Epstein meshes for a field")
    p.add_argument("--field", required=True, help="Liouville field CSV")
    p.add_argument("--rho", default="0.5,1.0,2.0", help="comma list of rho")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_epstein)

    p = sub.add_parser("volume", help="volume / renormalized-volume report")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("schlafli", help="first-variation checks")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_schlafli)

    p = sub.add_parser("extremize", help="constant-curvature extremization run")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_extremize)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
