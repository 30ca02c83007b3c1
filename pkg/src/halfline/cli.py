"""Command-line front end: ``halfline <subcommand> ...``.

Every subcommand prints a short summary, writes its artifacts to ``--out``
when given, and exits with 0 iff all of its checks pass (1 otherwise, 2 for
usage or input errors).
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import fixed_energy, forward, gelfand_levitan, io, krein, marchenko, pipeline, quarkonium, riemann
from .core import ValidationReport, validate_scattering_data
from .errors import ConfigError, HalflineError
from .types import JostData, PhaseShiftSequence, PotentialGrid, QuarkoniumData, ScatteringData, SpectralFunction


def _kgrid(args) -> np.ndarray:
    return np.linspace(0.0, args.k_max, int(round(args.k_max / args.dk)) + 1)


def _params(items) -> dict:
    out = {}
    for it in items or ():
        if "=" not in it:
            raise ConfigError(f"--param {it!r}: expected key=value")
        k, v = it.split("=", 1)
        out[k] = float(v)
    return out


def _benchmark(args):
    fn, names = pipeline.BENCHMARKS[args.benchmark]
    p = _params(args.param)
    bad = set(p) - set(names)
    if bad:
        raise ConfigError(f"--param: {sorted(bad)} not accepted by {args.benchmark} (takes {names})")
    return fn(**p)


def _load(path, *classes):
    obj = io.load_json(path)
    if classes and not isinstance(obj, classes):
        names = ", ".join(c.__name__ for c in classes)
        raise ConfigError(f"{path}: expected {names}, got {type(obj).__name__}")
    return obj


def _outdir(args) -> Path | None:
    if getattr(args, "out", None) is None:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _finish(args, rep: ValidationReport, extra: dict | None = None) -> int:
    doc = {**rep.to_dict(), **(extra or {})}
    out = _outdir(args)
    if out is not None:
        io.write_report(doc, out / "report.json")
    for name, c in rep.checks.items():
        flag = "ok  " if c["passed"] else "FAIL"
        val = c["value"]
        val = f"{val:.3e}" if isinstance(val, float) else val
        print(f"[{flag}] {name}: {val}  {c['detail']}")
    return 0 if rep.passed else 1


def _save_potential(args, q: PotentialGrid, name: str = "potential") -> None:
    out = _outdir(args)
    if out is not None:
        io.save_json(q, out / f"{name}.json")
        io.potential_csv(q, out / f"{name}.csv")


def _check_exact(rep, args, q: PotentialGrid) -> None:
    if getattr(args, "benchmark", None):
        b = _benchmark(args)
        err = float(np.max(np.abs(q.qs - b.q(q.xs))))
        tol = args.tol * max(1.0, float(np.max(np.abs(q.qs))))
        rep.add("q_vs_exact", err < tol, err, "max |q - q_exact|")


def _scattering_input(args) -> ScatteringData:
    if args.benchmark:
        return _benchmark(args).scattering_data(_kgrid(args))
    if not args.input:
        raise ConfigError("give an input file or --benchmark")
    obj = _load(args.input, ScatteringData, PotentialGrid)
    if isinstance(obj, PotentialGrid):
        return forward.scattering_data(obj, _kgrid(args))
    return obj


# -- subcommands ---------------------------------------------------------------

def cmd_forward(args) -> int:
    if args.benchmark:
        g = _benchmark(args)
        q = g.potential(args.X_potential, args.dx)
    else:
        q = io.load_potential(args.input, args.decay_class, args.support)
    ks = _kgrid(args)
    jd = forward.jost_data(q, ks)
    bs = forward.bound_states(q)
    sd = forward.scattering_data(q, ks)
    sf = forward.spectral_function(jd, bs)
    rep = validate_scattering_data(sd)
    out = _outdir(args)
    if out is not None:
        io.save_json(sd, out / "scattering.json")
        io.save_json(jd, out / "jost.json")
        io.save_json(sf, out / "spectral.json")
        io.scattering_csv(sd, out / "scattering.csv")
        io.write_csv(out / "phase.csv", "phase", ks, forward.phase_shift(sd))
        io.write_csv(out / "spectral.csv", "spectral", sf.lambdas, sf.density)
    print(f"bound states k_j = {list(sd.bound_ks)}, norming = {list(sd.norming)}, index = {sd.index}")
    return _finish(args, rep)


def cmd_convert(args) -> int:
    obj = _load(args.input)
    source = type(obj).__name__
    rep = ValidationReport()
    out = _outdir(args)
    if args.to == "csv":
        if out is None:
            raise ConfigError("--to csv needs --out")
        if isinstance(obj, PotentialGrid):
            io.potential_csv(obj, out / "potential.csv")
        elif isinstance(obj, ScatteringData):
            io.scattering_csv(obj, out / "scattering.csv")
        elif isinstance(obj, SpectralFunction):
            io.write_csv(out / "spectral.csv", "spectral", obj.lambdas, obj.density)
        elif isinstance(obj, PhaseShiftSequence):
            io.write_csv(out / "phase_shifts.csv", "phase_shifts", obj.ells, obj.deltas)
        else:
            raise ConfigError(f"no CSV layout for {type(obj).__name__}")
        return _finish(args, rep)
    if isinstance(obj, SpectralFunction):
        if args.to == "spectral":
            res = obj
        else:
            obj = riemann.s_from_spectral(obj)
    elif isinstance(obj, JostData):
        if obj.bound_ks:
            raise ConfigError("Jost data with bound states lack the norming constants")
        S = np.conj(obj.f) / obj.f
        if obj.resonance and obj.ks[0] == 0:
            S[0] = -1.0
        obj = ScatteringData(obj.ks, S, (), (), -1 if obj.resonance else 0)
    elif not isinstance(obj, ScatteringData):
        raise ConfigError(f"cannot convert {type(obj).__name__} to {args.to}")
    if isinstance(obj, ScatteringData):
        jd = riemann.jost_from_S(obj)
        bound = list(zip(obj.bound_ks, pipeline._weights(obj, jd)))
        res = {"scattering": obj, "jost": jd,
               "spectral": lambda: forward.spectral_function(jd, bound=bound),
               "ifunction": lambda: forward.i_function(jd, bound=bound)}[args.to]
        res = res() if callable(res) else res
        pos = jd.ks > 0
        dev = float(np.max(np.abs(np.conj(jd.f[pos]) / jd.f[pos] - obj.S[pos])))
        rep.add("factorization", dev < 1e-8, dev, "max |f(-k)/f(k) - S|")
    print(f"{source} -> {type(res).__name__}")
    if out is not None:
        io.save_json(res, out / f"{args.to}.json")
    return _finish(args, rep)


def cmd_invert_marchenko(args) -> int:
    sd = _scattering_input(args)
    rep = validate_scattering_data(sd)
    res = marchenko.invert(sd, X=args.X, dx=args.dx, full=True)
    _save_potential(args, res.potential)
    _check_exact(rep, args, res.potential)
    return _finish(args, rep)


def cmd_invert_gl(args) -> int:
    if args.benchmark:
        sf = _benchmark(args).spectral_function(_kgrid(args))
    else:
        obj = _load(args.input, SpectralFunction, ScatteringData)
        if isinstance(obj, ScatteringData):
            jd = riemann.jost_from_S(obj)
            obj = forward.spectral_function(jd, bound=list(zip(obj.bound_ks, pipeline._weights(obj, jd))))
        sf = obj
    q, K, L = gelfand_levitan.invert(sf, X=args.X, dx=args.dx, full=True)
    rep = ValidationReport()
    r = gelfand_levitan.gl_residual(K, L)
    rep.add("gl_residual", r < 1e-6, r, "max |K + int K L + L|")
    _save_potential(args, q)
    _check_exact(rep, args, q)
    return _finish(args, rep)


def cmd_invert_krein(args) -> int:
    sd = _scattering_input(args)
    rep = ValidationReport()
    if args.hybrid:
        res = krein.hybrid_invert(sd, X=args.X, dx=args.dx, x0=args.x0)
        q = res.potential
        rep.add("hybrid_seam", bool(np.isfinite(res.seam)), res.seam, f"x0 = {res.x0:.4g}")
    else:
        res = krein.invert(sd, X=args.X, dx=args.dx)
        q = res.potential
        fam = res.family
        rep.add("reflection_coefficients", fam.reflection_max < 1, fam.reflection_max,
                "max |reflection coefficient| of the recursion")
        rep.add("corner_symmetry", fam.symmetry < 1e-8, fam.symmetry, "corner symmetry defect")
    _save_potential(args, q)
    _check_exact(rep, args, q)
    return _finish(args, rep)


def _compact_potential(args) -> PotentialGrid:
    if args.step is not None:
        xs = np.linspace(0.0, args.step, 2001)
        return PotentialGrid(xs, args.amplitude * np.ones_like(xs), args.step, "compact")
    if not args.input:
        raise ConfigError("give a potential file or --step RADIUS")
    return io.load_potential(args.input, "compact", args.support)


def cmd_phase_shifts(args) -> int:
    q = _compact_potential(args)
    ps = fixed_energy.partial_wave_forward(q, L=args.L)
    rep = ValidationReport()
    dev = float(np.max(np.abs(ps.a_ells - np.exp(1j * ps.deltas) * np.sin(ps.deltas))))
    rep.add("a_consistency", dev < 1e-12, dev, "max |a_l - e^{i delta} sin delta|")
    out = _outdir(args)
    if out is not None:
        io.save_json(ps, out / "phase_shifts.json")
        io.write_csv(out / "phase_shifts.csv", "phase_shifts", ps.ells, ps.deltas)
    for l, d in zip(ps.ells[:6], ps.deltas[:6]):
        print(f"l = {l:2d}  delta = {d:.10g}")
    return _finish(args, rep)


def cmd_radius(args) -> int:
    if args.input and Path(args.input).suffix == ".json" and args.step is None:
        obj = _load(args.input, PhaseShiftSequence, PotentialGrid)
        ps = obj if isinstance(obj, PhaseShiftSequence) else fixed_energy.partial_wave_forward(obj, L=args.L)
    else:
        ps = fixed_energy.partial_wave_forward(_compact_potential(args), L=args.L)
    est = fixed_energy.radius_estimate(ps, method=args.method)
    rep = ValidationReport()
    rep.add("radius", bool(np.isfinite(est.a_hat)), est.a_hat,
            f"method {est.method}; richardson {est.richardson:.4g}, log fit {est.log_fit:.4g}, "
            f"usable l {est.usable}")
    if args.expect is not None:
        rel = abs(est.a_hat - args.expect) / args.expect
        rep.add("radius_vs_expected", rel < 0.1, rel, f"relative to {args.expect}")
    return _finish(args, rep, {"a_hat": est.a_hat, "t": est.t.tolist(), "ells": est.ells.tolist()})


def cmd_quarkonium(args) -> int:
    raw = json.loads(Path(args.input).read_text())
    data = QuarkoniumData(raw["energies"], raw["slopes"]) if "type" not in raw else io.from_dict(raw)
    res = quarkonium.recover_potential(data, n_reference=args.levels, X=args.X)
    rep = ValidationReport()
    ev = quarkonium.shooting_eigenvalues(res.potential, data.J)
    err = float(np.max(np.abs(ev - np.array(data.energies))))
    rep.add("eigenvalues", err < 1e-3, err, f"shooting {np.round(ev, 6).tolist()}")
    _save_potential(args, res.potential)
    return _finish(args, rep)


def cmd_wave_reduce(args) -> int:
    cols = io.read_csv(args.input)
    ts, a = cols[list(cols)[0]], cols[list(cols)[1]]
    impulses = () if args.no_impulse else ((1.0, 1.0),)
    wr = pipeline.wave_reduction(ts, a, _kgrid(args), impulses, constant_tail=args.constant_tail)
    rep = validate_scattering_data(wr.scattering)
    out = _outdir(args)
    if out is not None:
        io.save_json(wr.jost, out / "jost.json")
        io.save_json(wr.scattering, out / "scattering.json")
        io.scattering_csv(wr.scattering, out / "scattering.csv")
    print(f"resonance: {wr.jost.resonance}")
    if args.invert:
        q = marchenko.invert(wr.scattering, X=args.X, dx=args.dx)
        _save_potential(args, q)
    return _finish(args, rep)


def _pipeline_cmd(name):
    def run(args) -> int:
        if args.config:
            cfg = json.loads(Path(args.config).read_text())
            cfg["pipeline"] = name
        else:
            if not args.benchmark:
                raise ConfigError("give --config or --benchmark")
            cfg = {"pipeline": name, "input": {"benchmark": args.benchmark, **_params(args.param)},
                   "grid": {"X": args.X, "dx": args.dx, "k_max": args.k_max, "dk": args.dk}}
        if args.out:
            cfg.setdefault("output", {})["dir"] = args.out
        report = pipeline.run_pipeline(cfg)
        rep = ValidationReport(report["checks"])
        if name == "compare":
            tab = report["_tables"]["compare"]
            print("      x   q_marchenko          q_gl       q_krein")
            for row in tab[:: max(1, len(tab) // 10)]:
                print("  ".join(f"{v:12.6g}" for v in row))
        return _finish(argparse.Namespace(out=None), rep)
    return run


# -- parser --------------------------------------------------------------------

def _grid_args(p, X=5.0, dx=0.01):
    p.add_argument("--X", type=float, default=X, help="right end of the x-grid")
    p.add_argument("--dx", type=float, default=dx, help="x-grid step")


def _k_args(p, k_max=200.0, dk=0.025):
    p.add_argument("--k-max", dest="k_max", type=float, default=k_max)
    p.add_argument("--dk", type=float, default=dk)


def _bench_args(p):
    p.add_argument("--benchmark", choices=sorted(pipeline.BENCHMARKS))
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="benchmark parameter, e.g. nu=1 (repeatable)")
    p.add_argument("--tol", type=float, default=1e-3, help="relative tolerance against the closed form")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="halfline", description="Half-line inverse scattering toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="potential -> S(k), Jost function, spectral function")
    p.add_argument("input", nargs="?", help="potential JSON or (x,q) CSV")
    p.add_argument("--decay-class", default="L11", choices=("compact", "L11"))
    p.add_argument("--support", type=float, default=None, help="support radius for compact q")
    p.add_argument("--X-potential", dest="X_potential", type=float, default=20.0)
    p.add_argument("--dx", type=float, default=0.01)
    _k_args(p)
    _bench_args(p)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("convert", help="convert between data representations")
    p.add_argument("input")
    p.add_argument("--to", required=True, choices=("scattering", "jost", "spectral", "ifunction", "csv"))
    p.set_defaults(func=cmd_convert)

    for name, fn, hlp in (("invert-marchenko", cmd_invert_marchenko, "S => F => A => q"),
                          ("invert-gl", cmd_invert_gl, "rho => L => K => q"),
                          ("invert-krein", cmd_invert_krein, "S => H => Gamma => q")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("input", nargs="?", help="scattering (or spectral) JSON")
        _grid_args(p)
        _k_args(p)
        _bench_args(p)
        if name == "invert-krein":
            p.add_argument("--hybrid", action="store_true", help="Krein near 0, Marchenko beyond x0")
            p.add_argument("--x0", type=float, default=None)
        p.set_defaults(func=fn)

    for name, fn in (("phase-shifts", cmd_phase_shifts), ("radius", cmd_radius)):
        p = sub.add_parser(name, help="fixed-energy phase shifts" if name == "phase-shifts"
                           else "radius of support from phase shifts")
        p.add_argument("input", nargs="?", help="compact potential (JSON/CSV) or phase shifts JSON")
        p.add_argument("--support", type=float, default=None)
        p.add_argument("--step", type=float, default=None, help="use q = amplitude on [0, STEP]")
        p.add_argument("--amplitude", type=float, default=1.0)
        p.add_argument("--L", type=int, default=fixed_energy.L_MAX)
        if name == "radius":
            p.add_argument("--method", choices=("log", "richardson"), default="log")
            p.add_argument("--expect", type=float, default=None, help="known radius to check against")
        p.set_defaults(func=fn)

    p = sub.add_parser("quarkonium", help="confining potential from {E_j, s_j}")
    p.add_argument("input", help='JSON {"energies": [...], "slopes": [...]}')
    p.add_argument("--levels", type=int, default=None, help="reference levels J (default: data count)")
    p.add_argument("--X", type=float, default=None)
    p.set_defaults(func=cmd_quarkonium)

    p = sub.add_parser("wave-reduce", help="boundary response a(t) -> Jost function")
    p.add_argument("input", help="CSV with columns t, a")
    p.add_argument("--no-impulse", action="store_true", help="a(t) already contains the t = 1 impulse")
    p.add_argument("--constant-tail", action="store_true", help="continue a(t) by its last value")
    p.add_argument("--invert", action="store_true", help="also run the Marchenko inversion")
    _k_args(p, 50.0, 0.05)
    _grid_args(p, 1.0, 0.01)
    p.set_defaults(func=cmd_wave_reduce)

    for name in ("roundtrip", "compare"):
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--config", help="pipeline JSON config")
        _grid_args(p)
        _k_args(p)
        _bench_args(p)
        p.set_defaults(func=_pipeline_cmd(name))

    for p in sub.choices.values():
        p.add_argument("--out", "-o", default=None, help="directory for artifacts and report.json")
        p.add_argument("--quiet", action="store_true", help="silence library warnings")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.quiet:
        warnings.simplefilter("ignore")
    try:
        return args.func(args)
    except (ConfigError, HalflineError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
