"""Command-line front end: ``radial-born <command> [options]``.

Inputs are JSON, tabular outputs CSV and reports JSON. Every output file
``X`` is accompanied by ``X.manifest.json`` recording the command, the
input digests, every tolerance in effect, the seed, the package version and
the wall-clock time. Payloads are deterministic: floats are written with
``repr`` (shortest round-trip form), columns and keys in fixed order.

Exit codes: 0 success, 2 usage, 3 numeric failure, 4 schema error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
import warnings
from importlib import metadata

import numpy as np

from . import _accel
from .errors import RadialBornError, SchemaError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_SCHEMA = 0, 2, 3, 4


def _version() -> str:
    try:
        return metadata.version("radial-born")
    except metadata.PackageNotFoundError:  # pragma: no cover - running from a source tree
        return "0+unknown"


# serialization --------------------------------------------------------------


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Collects manifest data and writes outputs."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.t0 = time.perf_counter()
        self.inputs = {}
        self.tolerances = {}
        self.seed = None
        self.results = {}

    def add_input(self, path):
        if path is not None:
            self.inputs[str(path)] = sha256_file(path)

    def emit(self, text: str, out):
        """Write ``text`` to ``out`` (plus manifest) or to stdout."""
        if out is None:
            sys.stdout.write(text)
            return
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        manifest = {
            "command": self.command,
            "arguments": {k: v for k, v in sorted(vars(self.args).items())
                          if k not in ("func",)},
            "inputs": self.inputs,
            "tolerances": self.tolerances,
            "seed": self.seed,
            "version": _version(),
            "numba": bool(_accel.USE_NUMBA),
            "wall_clock_seconds": time.perf_counter() - self.t0,
            "output": {str(out): hashlib.sha256(text.encode("utf-8")).hexdigest()},
            "results": self.results,
        }
        with open(f"{out}.manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json_text(manifest))


def _read_manifest(path):
    mpath = f"{path}.manifest.json"
    if os.path.exists(mpath):
        with open(mpath, encoding="utf-8") as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{mpath}: invalid JSON at line {exc.lineno}") from None
    return {}


def _read_csv(path, required):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    missing = [c for c in required if c not in rows[0]]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    return rows


def _float_col(rows, name, path):
    try:
        return np.array([float(r[name]) for r in rows])
    except (TypeError, ValueError):
        raise SchemaError(f"{path}: column {name} must be numeric") from None


def _dimension(args, path):
    if getattr(args, "d", None) is not None:
        return int(args.d)
    man = _read_manifest(path)
    d = man.get("results", {}).get("d")
    if d is None:
        raise SchemaError(f"{path}: dimension unknown; pass --d or keep the manifest next to it")
    return int(d)


# commands -------------------------------------------------------------------


def cmd_forward(args):
    from .conductivity import load_spec
    from .forward import spectrum

    run = Run("forward", args)
    run.add_input(args.spec)
    spec = load_spec(args.spec)
    routes = ["conductivity-ode", "schrodinger-halfline"] if args.route == "both" else [args.route]
    rows = []
    results = {}
    for route in routes:
        sp = spectrum(spec, args.kmax, route)
        rows += [(k, sp.eigenvalues[k], sp.err_estimate[k], route) for k in range(sp.k_max + 1)]
        results[route] = sp.eigenvalues
    if len(routes) == 2:
        run.results["max_route_difference"] = float(np.max(np.abs(results[routes[0]]
                                                                   - results[routes[1]])))
    run.results.update({"d": spec.d, "kmax": args.kmax, "a": float(spec.profile(1.0))})
    run.tolerances = {"r_start": 1e-6, "richardson": "RK4 at h and 2h"}
    run.emit(csv_text(["k", "lambda", "err_estimate", "route"], rows), args.out)


def _load_spectrum(args):
    from .forward import DtnSpectrum

    rows = _read_csv(args.spectrum, ["k", "lambda"])
    routes = sorted({r.get("route") or "unknown" for r in rows})
    route = args.use_route or ("conductivity-ode" if "conductivity-ode" in routes else routes[0])
    rows = [r for r in rows if (r.get("route") or "unknown") == route]
    if not rows:
        raise SchemaError(f"{args.spectrum}: no rows for route {route}")
    k = _float_col(rows, "k", args.spectrum).astype(int)
    lam = _float_col(rows, "lambda", args.spectrum)
    err = _float_col(rows, "err_estimate", args.spectrum) if "err_estimate" in rows[0] \
        else np.zeros_like(lam)
    order = np.argsort(k)
    k, lam, err = k[order], lam[order], err[order]
    if not np.array_equal(k, np.arange(k.size)):
        raise SchemaError(f"{args.spectrum}: modes must run 0, 1, 2, ... without gaps")
    return DtnSpectrum(_dimension(args, args.spectrum), lam, route, err)


def cmd_born(args):
    from .born import born_profile
    from .profiles import default_grid

    run = Run("born", args)
    run.add_input(args.spectrum)
    sp = _load_spectrum(args)
    singular = None
    if args.spec:
        from .conductivity import load_spec
        from .halfline import halfline_from_spec, spectral_report, spectral_singular_part

        run.add_input(args.spec)
        spec = load_spec(args.spec)
        rep = spectral_report(halfline_from_spec(spec), spec.d)
        singular = spectral_singular_part(rep, float(spec.profile(1.0)), spec.d)
        run.results["singular"] = {"c0": singular.c0, "terms": singular.terms}
    grid = default_grid(args.n)
    bp = born_profile(sp, grid, route=args.route, singular=singular, n_basis=args.n_basis,
                      noise_floor=args.noise_floor, tau=args.tau)
    vb = bp.vB(bp.grid)
    rows = zip(bp.grid, bp.values, vb, bp.confidence)
    run.tolerances = {"n_basis": args.n_basis, "noise_floor": args.noise_floor, "tau": args.tau,
                      "grid_points": args.n}
    run.results.update({"d": sp.d, "K": sp.k_max, "route": args.route, "a": bp.a,
                        **{k: v for k, v in bp.meta.items() if np.isscalar(v)}})
    run.emit(csv_text(["r", "gammaB", "vB", "confidence"], rows), args.out)


def cmd_singularities(args):
    from .conductivity import load_spec
    from .halfline import (
        fit_singular_decomposition,
        halfline_from_spec,
        spectral_report,
        spectral_singular_part,
    )

    run = Run("singularities", args)
    run.add_input(args.spec)
    spec = load_spec(args.spec)
    d = spec.d
    z_max = args.zmax if args.zmax is not None else (d - 2) / 2 + 0.5
    rep = spectral_report(halfline_from_spec(spec, z_max), d, z_max, args.threshold)
    dec = spectral_singular_part(rep, float(spec.profile(1.0)), d)
    report = {
        "d": d,
        "jost_at_zero": rep.jost_at_zero,
        "zero_resonance": rep.resonance,
        "kappas": list(rep.kappas),
        "a0": rep.a0,
        "amplitudes": list(rep.amplitudes),
        "c0": dec.c0,
        "c": [{"kappa": k, "c": c} for k, c in dec.terms],
        "residual_norm": dec.residual_norm,
        "method": dec.method,
    }
    if args.born:
        from .born import born_profile

        args_sp = argparse.Namespace(spectrum=args.born, use_route=None, d=d)
        run.add_input(args.born)
        bp = born_profile(_load_spectrum(args_sp), singular=dec)
        fit = fit_singular_decomposition(bp.profile, rep)
        report["fit"] = {"c0": fit.c0, "c": [{"kappa": k, "c": c} for k, c in fit.terms],
                         "residual_norm": fit.residual_norm}
    run.tolerances = {"resonance_threshold": args.threshold, "z_max": z_max}
    run.results = {"d": d}
    run.emit(json_text(report), args.out)


def _parse_fixed(items):
    fixed = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--fix expects name=value, got {item!r}")
        fixed[name.strip()] = float(value)
    return fixed


def cmd_invert(args):
    from .conductivity import spec_to_json
    from .inverse import FitProblem, fit_conductivity

    run = Run("invert", args)
    run.add_input(args.born)
    rows = _read_csv(args.born, ["r", "gammaB"])
    r = _float_col(rows, "r", args.born)
    y = _float_col(rows, "gammaB", args.born)
    w = _float_col(rows, "confidence", args.born) if "confidence" in rows[0] else None
    d = _dimension(args, args.born)
    prob = FitProblem(d, (r, y), w, args.space, _parse_fixed(args.fix), None, args.reg,
                      args.max_nfev, args.kmax, args.K, args.forward_route)
    res = fit_conductivity(prob)
    doc = {"d": d, "space": args.space, "params": res.params, "misfit": res.misfit,
           "nfev": res.nfev, "success": res.success, "message": res.message,
           "projections": res.projections, "starts": res.meta["starts"]}
    if res.spec.family:
        doc["spec"] = json.loads(spec_to_json(res.spec))
    run.tolerances = {"k_max": args.kmax, "reg": args.reg, "max_nfev": args.max_nfev, "K": args.K}
    run.results = {"d": d}
    run.emit(json_text(doc), args.out)


SWEEP_SCHEMA = {
    "type": "object",
    "required": ["perturbation", "eps"],
    "properties": {
        "perturbation": {"type": "object"},
        "eps": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "s": {"type": ["number", "null"], "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "k_max": {"type": "integer", "minimum": 20},
    },
}


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from None


def cmd_stability(args):
    import jsonschema

    from .conductivity import SPEC_SCHEMA, load_spec, profile_from_family
    from .inverse import stability_sweep

    run = Run("stability", args)
    run.add_input(args.base)
    run.add_input(args.sweep)
    base = load_spec(args.base)
    doc = _load_json(args.sweep)
    try:
        jsonschema.validate(doc, SWEEP_SCHEMA)
        jsonschema.validate(doc["perturbation"], SPEC_SCHEMA["properties"]["family"])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{args.sweep}: field {where}: {exc.message}") from None
    pert = profile_from_family(base.d, doc["perturbation"])
    k_max = int(doc.get("k_max", 200))
    rec = stability_sweep(base, pert, doc["eps"], doc.get("s"), k_max)
    rows = zip(rec.eps, rec.born_norms, rec.cond_norms, rec.used)
    run.tolerances = {"k_max": k_max, "norm": "W^{2,1}", "min_pairs": 8, "min_decades": 2}
    run.results = {"d": base.d, "exponent": rec.exponent, "intercept": rec.intercept,
                   "spearman": rec.spearman, "s": rec.s, "K": rec.K, "notes": list(rec.notes)}
    run.emit(csv_text(["eps", "born_norm", "cond_norm", "used"], rows), args.out)


def cmd_locality(args):
    from .conductivity import load_spec
    from .inverse import locality_test

    run = Run("locality", args)
    run.add_input(args.spec1)
    run.add_input(args.spec2)
    s1, s2 = load_spec(args.spec1), load_spec(args.spec2)
    rep = locality_test(s1, s2, args.s, (args.kmin, args.kmax), args.rel_tol)
    doc = {"s": rep.s, "log_s": rep.log_s, "rate": rep.rate, "rel_deviation": rep.rel_deviation,
           "passed": rep.passed, "inconclusive": rep.inconclusive,
           "born_local": rep.born_local, "conductivity_local": rep.conductivity_local,
           "born_diff_outside": rep.born_diff_outside, "born_diff_inside": rep.born_diff_inside,
           "cond_diff_outside": rep.cond_diff_outside, "cond_diff_inside": rep.cond_diff_inside,
           "k": rep.k, "dlambda": rep.dlam, "err_estimate": rep.err}
    run.tolerances = {"k_range": [args.kmin, args.kmax], "rel_tol": args.rel_tol}
    run.results = {"d": s1.d}
    run.emit(json_text(doc), args.out)


def cmd_examples(args):
    from .conductivity import example_family

    run = Run("examples", args)
    spec, gb = example_family(args.d, args.mu, args.nu)
    r = np.linspace(0.0, 1.0, args.n + 1)
    if gb.singularity != "none":
        r = r[1:]
    rows = zip(r, spec.profile(r), gb(r))
    run.results = {"d": args.d, "mu": args.mu, "nu": args.nu, "born": repr(gb)}
    run.emit(csv_text(["r", "gamma", "gammaB"], rows), args.out)


def cmd_selftest(args):
    from .acceptance import CRITERIA, format_table, run_all

    numbers = sorted(CRITERIA)
    if args.only:
        try:
            numbers = sorted({int(x) for x in args.only.split(",")})
        except ValueError:
            raise ValueError("--only expects comma-separated criterion numbers") from None
        bad = [n for n in numbers if n not in CRITERIA]
        if bad:
            raise ValueError(f"unknown criteria {bad}")
    results = run_all(numbers)
    print(format_table(results))
    if args.out:
        run = Run("selftest", args)
        run.results = {"passed": sum(r.passed for r in results), "total": len(results)}
        run.emit(json_text([{"number": r.number, "title": r.title, "passed": r.passed,
                             "threshold": r.threshold, "measured": r.measured,
                             "seconds": r.seconds} for r in results]), args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


# parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radial-born",
                                description="DtN spectra, Born approximations and inversion for "
                                            "radial conductivities on the unit ball.")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for parallel kernels (default: RADIAL_BORN_THREADS "
                        "or all cores)")
    p.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="DtN spectrum of a conductivity")
    f.add_argument("--spec", required=True)
    f.add_argument("--kmax", type=int, default=100)
    f.add_argument("--route", default="conductivity-ode",
                   choices=["conductivity-ode", "schrodinger-halfline", "closed-form", "both"])
    f.add_argument("--out")
    f.set_defaults(func=cmd_forward)

    b = sub.add_parser("born", help="Born approximation from a spectrum CSV")
    b.add_argument("--spectrum", required=True)
    b.add_argument("--d", type=int)
    b.add_argument("--spec", help="conductivity JSON used to pin the singular part")
    b.add_argument("--route", default="moments", choices=["moments", "fourier"])
    b.add_argument("--use-route", help="spectrum route to read when the CSV holds several")
    b.add_argument("--n", type=int, default=2048, help="tabulation grid size")
    b.add_argument("--n-basis", type=int, default=30)
    b.add_argument("--noise-floor", type=float, default=1e-12)
    b.add_argument("--tau", type=float, default=1.5)
    b.add_argument("--out")
    b.set_defaults(func=cmd_born)

    s = sub.add_parser("singularities", help="Jost analysis and singular Born coefficients")
    s.add_argument("--spec", required=True)
    s.add_argument("--zmax", type=float)
    s.add_argument("--threshold", type=float, default=1e-6)
    s.add_argument("--born", help="spectrum CSV; adds a fitted decomposition of the Born profile")
    s.add_argument("--out")
    s.set_defaults(func=cmd_singularities)

    i = sub.add_parser("invert", help="fit a conductivity to Born data")
    i.add_argument("--born", required=True)
    i.add_argument("--d", type=int)
    i.add_argument("--space", default="family:example")
    i.add_argument("--fix", action="append", metavar="NAME=VALUE")
    i.add_argument("--reg", type=float, default=0.0)
    i.add_argument("--max-nfev", type=int, default=500)
    i.add_argument("--kmax", type=int, default=40)
    i.add_argument("--K", type=float, default=20.0)
    i.add_argument("--forward-route", default="conductivity-ode",
                   choices=["conductivity-ode", "schrodinger-halfline"])
    i.add_argument("--out")
    i.set_defaults(func=cmd_invert)

    st = sub.add_parser("stability", help="perturbation sweep of W^{2,1} norm pairs")
    st.add_argument("--base", required=True)
    st.add_argument("--sweep", required=True)
    st.add_argument("--out")
    st.set_defaults(func=cmd_stability)

    lo = sub.add_parser("locality", help="exponential decay test of spectral differences")
    lo.add_argument("--spec1", required=True)
    lo.add_argument("--spec2", required=True)
    lo.add_argument("--s", type=float, required=True)
    lo.add_argument("--kmin", type=int, default=10)
    lo.add_argument("--kmax", type=int, default=40)
    lo.add_argument("--rel-tol", type=float, default=0.05)
    lo.add_argument("--out")
    lo.set_defaults(func=cmd_locality)

    e = sub.add_parser("examples", help="closed-form example profiles for plotting")
    e.add_argument("--d", type=int, required=True)
    e.add_argument("--mu", type=float, required=True)
    e.add_argument("--nu", type=float, required=True)
    e.add_argument("--n", type=int, default=400)
    e.add_argument("--out")
    e.set_defaults(func=cmd_examples)

    t = sub.add_parser("selftest", help="run the acceptance suite")
    t.add_argument("--only", help="comma-separated criterion numbers")
    t.add_argument("--out")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    if args.threads is not None:
        _accel.set_workers(args.threads)
    warnings.simplefilter("default")
    try:
        code = args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except RadialBornError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if code is None else code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
