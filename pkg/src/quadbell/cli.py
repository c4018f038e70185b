"""Command-line interface.

Machine-readable output goes to stdout (or ``--output``); diagnostics go to
stderr. Exit codes: 0 success / inconclusive, 10 certified fully
entangled, 64 bad input, 70 a proven bound was violated.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from quadbell import __version__, hv, kernels, optimize, sweeps, witness
from quadbell.fixtures import PROBE_STATES, named_settings, named_state, state_family
from quadbell.operators import MeasurementSettings, verify_identities
from quadbell.tensor import QuantumState, StateError

log = logging.getLogger("quadbell")

EXIT_OK = 0
EXIT_CERTIFIED = 10
EXIT_USAGE = 64
EXIT_VIOLATION = 70
SEED_ENV = "QUADBELL_SEED"


class UsageError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def load_state(spec: str, n: int | None) -> QuantumState:
    if os.path.exists(spec):
        with open(spec) as fh:
            return QuantumState.from_json(fh.read())
    try:
        return named_state(spec, n)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def load_settings(spec: str, n: int, seed: int) -> MeasurementSettings:
    if spec.startswith("angles:"):
        vals = [float(v) for v in spec[len("angles:"):].split(",")]
        if len(vals) != 4 * n:
            raise UsageError(f"angles: expected {4 * n} numbers (theta, phi, theta', phi' per particle)")
        return MeasurementSettings.from_angles(np.reshape(vals, (n, 4)))
    if os.path.exists(spec):
        with open(spec) as fh:
            s = MeasurementSettings.from_dict(json.load(fh))
    else:
        try:
            s = named_settings(spec, n, seed)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    if s.n != n:
        raise UsageError(f"settings are for {s.n} particles, state has {n}")
    return s


def emit(text: str, output: str | None):
    if output:
        with open(output, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False)


# commands -------------------------------------------------------------------

def cmd_witness(args) -> int:
    state = load_state(args.state, args.n)
    settings = load_settings(args.settings, state.n, args.seed)
    report = witness.evaluate(state, settings)
    doc = report.to_dict(settings, state)
    doc["seed"] = args.seed
    doc["state"] = args.state
    if state_family(args.state) in PROBE_STATES:
        doc["note"] = "non-paper probe state"
    emit(_json(doc), args.output)
    return EXIT_CERTIFIED if report.verdict == witness.CERTIFIED else EXIT_OK


def cmd_optimize(args) -> int:
    objective = args.objective.replace("-", "_")
    cfg = optimize.OptimizationConfig(
        objective=objective, restarts=args.restarts, max_iterations=args.max_iterations,
        tolerance=args.tolerance, seed=args.seed, planar=args.planar,
        state_class=args.state_class,
    )
    if args.state_class == "biseparable-pure":
        if args.n is None:
            raise UsageError("--state-class biseparable-pure needs --n")
        res = optimize.optimize_over_biseparable(args.n, cfg)
        settings, value, trace = res.settings, res.value, res.trace
        extra = {"bipartition": [list(g) for g in res.bipartition], "state": res.state.to_dict()}
        n = args.n
    else:
        if args.state is None:
            raise UsageError("--state is required for fixed-state optimisation")
        state = load_state(args.state, args.n)
        res = optimize.optimize_settings(state, cfg)
        settings, value, trace = res.settings, res.value, res.trace
        extra = {"state": args.state}
        n = state.n
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(optimize.OptimizationResult(settings, value, None, trace).trace_csv())
    if args.settings_out:
        with open(args.settings_out, "w") as fh:
            json.dump(settings.to_dict(), fh, indent=2)
    doc = {"schema_version": witness.SCHEMA_VERSION, "objective": objective, "n": n,
           "value": value, "cap": optimize.objective_cap(objective, n), "seed": args.seed,
           "restarts": args.restarts, "settings": settings.to_dict()["pairs"], **extra}
    emit(_json(doc), args.output)
    return EXIT_OK


def cmd_bounds(args) -> int:
    ns = [args.n] if args.n is not None else [2, 3, 4, 5]
    checks = []
    for n in ns:
        log.info("sweeping n=%d with %d samples", n, args.samples)
        checks += sweeps.bound_sweep(n, args.samples, args.seed)
    if args.format == "csv":
        emit(sweeps.checks_csv(checks), args.output)
    else:
        emit(_json({"schema_version": witness.SCHEMA_VERSION, "seed": args.seed,
                    "samples": args.samples, "checks": [c.as_dict() for c in checks]}), args.output)
    for c in checks:
        log.info("%-32s n=%d max=%.6f bound=%.6f %s", c.name, c.n, c.max_observed, c.bound,
                 "PASS" if c.passed else "FAIL")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VIOLATION


def cmd_identities(args) -> int:
    ns = [args.n] if args.n is not None else [3, 4, 5, 6]
    rows = []
    for n in ns:
        settings = MeasurementSettings.random(n, np.random.default_rng([args.seed, n]))
        rows.append(verify_identities(n, settings, samples=args.samples, seed=args.seed).as_dict())
    ok = all(r["comp_residual_plus"] <= 1e-10 and r["comp_residual_minus"] <= 1e-10
             and r["parity_residual_plus"] <= 1e-10 and r["parity_residual_minus"] <= 1e-10
             and r["quadratic_residual"] <= 1e-8 for r in rows)
    if args.format == "csv":
        emit(sweeps.rows_csv(rows), args.output)
    else:
        emit(_json({"schema_version": witness.SCHEMA_VERSION, "seed": args.seed, "rows": rows}), args.output)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_hv(args) -> int:
    if args.action == "demo":
        model = hv.counterexample_model()
        vals = {k: hv.eval_hv(model, hv.expression(k)) for k in hv.EXPRESSIONS}
        q_s = vals["s3plus"] ** 2 + vals["s3minus"] ** 2
        q_f = vals["f3"] ** 2 + vals["f3prime"] ** 2
        x, y = hv.chsh_xy_hv(model.assignments[0])
        doc = {
            "schema_version": witness.SCHEMA_VERSION,
            "model": [{"blocks": [list(b) for b in a.blocks], "values": list(a.values), "weight": str(w)}
                      for a, w in zip(model.assignments, model.weights)],
            "expectations": vals, "q_s": q_s, "q_f": q_f,
            "pair_x": x, "pair_y": y, "pair_quadratic": x * x + y * y,
            "satisfies_linear_svetlichny_bound": max(abs(vals["s3plus"]), abs(vals["s3minus"])) <= 4,
            "violates_quadratic_biseparable_bound_s": q_s > 16,
            "violates_quadratic_biseparable_bound_f": q_f > 8,
        }
        emit(_json(doc), args.output)
        return EXIT_OK
    names = args.expr or ["s3plus"]
    try:
        exprs = [hv.expression(e) for e in names]
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    res = hv.brute_force_ps_max(exprs, names, quadratic=args.quadratic, local_only=args.local_only)
    if args.format == "csv":
        emit(res.to_csv(), args.output)
        return EXIT_OK
    doc = {"schema_version": witness.SCHEMA_VERSION, "vertices": len(res.vertices),
           "local_only": args.local_only, "maxima": {}}
    for k, name in enumerate(names):
        v = res.witness(k)
        doc["maxima"][name] = {"max": res.maxima[k], "blocks": v.label(), "assignment_bits": v.bits()}
    if args.quadratic:
        i, j, w = res.quadratic_witness
        doc["quadratic"] = {"max_lower_bound": res.quadratic_max,
                            "vertex_i": res.vertices[i].bits(), "vertex_j": res.vertices[j].bits(),
                            "weight_i": w}
    emit(_json(doc), args.output)
    return EXIT_OK


def cmd_scan(args) -> int:
    state = load_state(args.state, args.n)
    settings = load_settings(args.settings, state.n, args.seed)
    rows = sweeps.scan(state, settings, args.steps, args.particle)
    emit(sweeps.rows_csv(rows), args.output)
    return EXIT_OK


# parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadbell", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND})")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, state=True, settings=False):
        if state:
            sp.add_argument("--state", help="fixture (ghz3, ghz4-, singlet, sep3-up, mixed-max, w3) "
                                            "or path to a state JSON file")
        if settings:
            sp.add_argument("--settings", default="mermin-xy",
                            help="fixture (all-z, mermin-xy, chsh-planar, svetlichny-opt, random), "
                                 "'angles:t,p,t',p',...' or a settings JSON file (default: mermin-xy)")
        sp.add_argument("--n", type=int, help="particle count where the fixture does not fix it")
        sp.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or 0)")
        sp.add_argument("--output", "-o", help="write the primary output here instead of stdout")

    w = sub.add_parser("witness", help="evaluate the linear and quadratic witnesses")
    common(w, settings=True)
    w.set_defaults(func=cmd_witness)

    o = sub.add_parser("optimize", help="maximise a Bell quantity over settings")
    common(o)
    o.add_argument("--objective", default="q-s",
                   choices=[x.replace("_", "-") for x in optimize.OBJECTIVES])
    o.add_argument("--restarts", type=int, default=20)
    o.add_argument("--max-iterations", type=int, default=20000)
    o.add_argument("--tolerance", type=float, default=1e-10)
    o.add_argument("--planar", action=argparse.BooleanOptionalAction, default=None,
                   help="restrict settings to the x-y plane (default: on for chsh-quadratic)")
    o.add_argument("--state-class", default="fixed-state", choices=["fixed-state", "biseparable-pure"])
    o.add_argument("--trace", help="write the per-restart trace CSV here")
    o.add_argument("--settings-out", help="write the best settings JSON here")
    o.set_defaults(func=cmd_optimize)

    b = sub.add_parser("bounds", help="random-sample sweeps of every bound")
    common(b, state=False)
    b.add_argument("--samples", type=int, default=10_000)
    b.add_argument("--format", choices=["json", "csv"], default="json")
    b.set_defaults(func=cmd_bounds)

    i = sub.add_parser("identities", help="operator identity residuals")
    common(i, state=False)
    i.add_argument("--samples", type=int, default=100)
    i.add_argument("--format", choices=["json", "csv"], default="json")
    i.set_defaults(func=cmd_identities)

    h = sub.add_parser("hv", help="partially separable hidden-variable models")
    h.add_argument("action", choices=["demo", "enumerate"])
    h.add_argument("--expr", action="append", choices=sorted(hv.EXPRESSIONS),
                   help="expression to maximise (repeatable; default s3plus)")
    h.add_argument("--local-only", action="store_true", help="restrict to fully local assignments")
    h.add_argument("--quadratic", action="store_true", help="maximise the sum of squares of the expressions")
    h.add_argument("--format", choices=["json", "csv"], default="json")
    h.add_argument("--seed", type=int, default=None)
    h.add_argument("--output", "-o")
    h.set_defaults(func=cmd_hv)

    s = sub.add_parser("scan", help="rotate one particle's settings and trace (<F>, <F'>)")
    common(s, settings=True)
    s.add_argument("--steps", type=int, default=256)
    s.add_argument("--particle", type=int, default=0)
    s.set_defaults(func=cmd_scan)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        if args.seed is None:
            args.seed = default_seed()
        return args.func(args)
    except (UsageError, StateError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"quadbell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (optimize.BoundExceeded, witness.ConsistencyError) as exc:
        print(f"quadbell: internal error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
