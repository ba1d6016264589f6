"""``pressure-lab`` command line.

Exit codes: 0 success, 1 a verification property failed, 2 invalid input,
3 a resource budget was exceeded.
"""

from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from . import report
from .cones import Cone, almost_mult_constant, maps_cone_into
from .config import RunConfig
from .continuity import (
    PerturbationScan,
    dimension_scan,
    discontinuity_demo,
    joint_continuity_scan,
    pressure_scan,
    random_direction,
)
from .dimension import ContractionWarning, singularity_dimension, jsr_estimate
from .errors import BudgetExceeded, ValidationError
from .pressure import pressure_estimate
from .spectrum import equilibrium_scalar, expected_svf_rate, legendre_spectrum, lyapunov_spectrum
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3
COMMANDS = ("pressure", "dimension", "jsr", "spectrum", "continuity", "cones", "verify")


def _parser():
    p = argparse.ArgumentParser(prog="pressure-lab", description="Sub-additive pressure and dimension toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "verify":
            sp.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
            sp.add_argument("--config", help="optional config (only its seed is used)")
        else:
            sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", help="output path (default: config output.path, else stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--seed", type=int)
        if name != "verify":
            sp.add_argument("--n-max", type=int, dest="n_max")
        if name == "pressure":
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--s", type=float)
            g.add_argument("--s-vec", dest="s_vec", help="comma-separated nonincreasing exponents")
    return p


def _overrides(cfg, args):
    data = cfg.data
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer", "--seed")
        data["seed"] = args.seed
    if getattr(args, "n_max", None) is not None:
        if args.n_max < 1:
            raise ValidationError("must be >= 1", "--n-max")
        data["budgets"]["n_max"] = args.n_max
    if args.format:
        data["output"]["format"] = args.format
    if getattr(args, "s", None) is not None:
        data["pressure"]["s"] = args.s
        data["pressure"].pop("s_vec", None)
    if getattr(args, "s_vec", None):
        try:
            data["pressure"]["s_vec"] = [float(x) for x in args.s_vec.split(",")]
        except ValueError:
            raise ValidationError("expected comma-separated numbers", "--s-vec") from None


def _rows(quantities):
    return ["quantity", "n", "value"], [{"quantity": q, "n": n, "value": v} for q, n, v in quantities]


# ---------------------------------------------------------------------------
# commands; each returns (result dict, csv columns, csv rows, notes)


def cmd_pressure(cfg):
    spec, budget = cfg.spec(), cfg.budget()
    pc = cfg["pressure"]
    exponent = pc["s_vec"] if "s_vec" in pc else pc["s"]
    est = pressure_estimate(spec, exponent, cfg["budgets"]["n_max"], pc["mode"], budget)
    q = [("level", n, v) for n, v in est.levels] + [("lower_level", n, v) for n, v in est.lower_levels]
    q += [("upper", None, est.upper), ("lower", None, est.lower), ("point", None, est.point)]
    return (est.to_dict(), *_rows(q), [])


def cmd_dimension(cfg):
    spec, budget = cfg.spec(), cfg.budget()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ContractionWarning)
        res = singularity_dimension(spec, cfg["tolerances"]["dimension_tol"], cfg["budgets"]["n_max"], budget)
    notes = [f"warning: {w.message}" for w in caught if issubclass(w.category, ContractionWarning)]
    d = res.to_dict()
    q = [(k, None, d[k]) for k in ("s_lower", "s_upper", "value", "certified_lower", "certified_upper", "affinity")]
    return (d, *_rows(q), notes)


def cmd_jsr(cfg):
    spec, budget = cfg.spec(), cfg.budget()
    jc = cfg["jsr"]
    res = jsr_estimate(spec, jc["n"], jc["s_large"], budget).to_dict()
    q = [(k, jc["n"], res[k]) for k in ("lower", "upper", "pressure_based", "pressure_based_adjusted")]
    return (res, *_rows(q), [])


def cmd_spectrum(cfg):
    spec, budget = cfg.spec(), cfg.budget()
    sc = cfg["spectrum"]
    mu = cfg.measure(spec)
    seed = cfg["seed"]
    data = lyapunov_spectrum(spec, mu, sc["horizon"], sc["trials"], seed, sc["gap"])
    out = {"lyapunov": data.to_dict(), "svf_rates": [], "legendre": None, "equilibrium": None}
    q = [("exponent", i + 1, x) for i, x in enumerate(data.exponents)]
    for s in sc["s"]:
        r = expected_svf_rate(spec, mu, s, sc["horizon"], sc["trials"], seed, True, sc["gap"])
        out["svf_rates"].append({"s": s, **r.to_dict()})
        q.append((f"svf_rate[s={s!r}]", None, r.value))
    if sc["q_grid"]:
        leg = legendre_spectrum(spec, sc["q_grid"], cfg["budgets"]["n_max"], budget)
        out["legendre"] = leg.to_dict()
        q += [(f"legendre_h[q={p.q!r}]", None, p.h) for p in leg.points]
    if spec.d == 1 and spec.sft.is_full:
        eq = equilibrium_scalar(spec, cfg["pressure"]["s"])
        out["equilibrium"] = {"s": cfg["pressure"]["s"], **eq.to_dict()}
        q.append(("equilibrium_residual", None, eq.residual))
    return (out, *_rows(q), [])


def cmd_continuity(cfg):
    spec, budget = cfg.spec(), cfg.budget()
    cc = cfg["continuity"]
    n_max = cfg["budgets"]["n_max"]
    kind = cc["kind"]
    if kind == "demo":
        rep = discontinuity_demo(n_max, budget=budget)
    else:
        direction = cc["direction"]
        if direction is None:
            direction = random_direction(spec, cfg["seed"])
        if kind == "joint":
            rep = joint_continuity_scan(spec, cc["s_values"], cc["epsilons"], direction, n_max, cfg["seed"], budget)
        else:
            scan = PerturbationScan(spec, direction, cc["epsilons"], cc["s_values"], n_max)
            if kind == "pressure":
                rep = pressure_scan(scan, budget)
            else:
                rep = dimension_scan(scan, cfg["tolerances"]["dimension_tol"], budget)
    return rep.to_dict(), rep.columns, rep.rows, []


def cmd_cones(cfg):
    spec = cfg.spec()
    cc = cfg["cones"]
    axis = cc["axis"] if cc["axis"] is not None else np.eye(spec.d)[0]
    k1, k2 = Cone(axis, cc["source_aperture"]), Cone(axis, cc["target_aperture"])
    if k1.dim != spec.d:
        raise ValidationError(f"axis has dimension {k1.dim}, system has {spec.d}", "cones.axis")
    certs = [maps_cone_into(m, k1, k2, cc["samples"]) for m in spec.matrices]
    out = {"certificates": [c.to_dict() for c in certs], "almost_mult_constant": None}
    if all(c.holds for c in certs):
        pairs = [(a, b) for a in spec.matrices for b in spec.matrices]
        out["almost_mult_constant"] = almost_mult_constant(pairs, k1, k2, cc["samples"])
    q = [("margin", i, c.margin) for i, c in enumerate(certs)]
    q.append(("almost_mult_constant", None, out["almost_mult_constant"]))
    return (out, *_rows(q), [])


HANDLERS = {
    "pressure": cmd_pressure,
    "dimension": cmd_dimension,
    "jsr": cmd_jsr,
    "spectrum": cmd_spectrum,
    "continuity": cmd_continuity,
    "cones": cmd_cones,
}


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_verify(args):
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; available: {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_INVALID
    seed = args.seed
    if seed is None and args.config:
        seed = RunConfig.load(args.config)["seed"]
    res = run_suite(args.suite, seed or 0)
    for line in res.lines():
        print(line, file=sys.stderr if args.out is None and args.format else sys.stdout)
    if args.out or args.format:
        if (args.format or "json") == "csv":
            rows = [{"check": c.name, "passed": c.passed, "detail": c.detail} for c in res.checks]
            _emit(report.dumps_csv(["check", "passed", "detail"], rows), args.out)
        else:
            _emit(report.dumps_json(report.envelope("verify", {"suite": args.suite, "seed": seed or 0}, res)), args.out)
    return EXIT_OK if res.passed else EXIT_FAIL


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        cfg = RunConfig.load(args.config)
        _overrides(cfg, args)
        result, columns, rows, notes = HANDLERS[args.command](cfg)
        for n in notes:
            print(n, file=sys.stderr)
        fmt = cfg["output"]["format"]
        path = args.out or cfg["output"]["path"]
        if fmt == "csv":
            text = report.dumps_csv(columns, rows)
        else:
            text = report.dumps_json(report.envelope(args.command, cfg.resolved(), result))
        _emit(text, path)
        return EXIT_OK
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
