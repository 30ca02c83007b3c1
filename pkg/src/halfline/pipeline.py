"""Pipeline composition, configuration and the wave-equation data reduction.

A configuration is a JSON-compatible dict::

    {
      "pipeline": "roundtrip",
      "input": {"benchmark": "sech2", "nu": 1.0},
      "grid": {"X": 5.0, "dx": 0.01, "k_max": 200.0, "dk": 0.025},
      "krein": {"hybrid": false, "x0": null, "gamma": 1.0},
      "tolerances": {"q": 1e-3},
      "output": {"dir": "out"}
    }

``input`` names a closed-form benchmark or points at JSON/CSV files
(``potential``, ``scattering``, ``spectral``). Every section is optional
except ``pipeline`` and ``input``.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import benchmarks as bm
from . import forward, gelfand_levitan, io, krein, marchenko
from .core import ValidationReport, winding_index
from .errors import ConfigError, HalflineError, IndexMismatch, ZeroResponse
from .riemann import jost_from_S
from .types import JostData, PotentialGrid, ScatteringData, SpectralFunction

PIPELINES = ("forward", "marchenko", "gl", "krein", "roundtrip", "compare")

DEFAULTS = {
    "grid": {"X": 5.0, "dx": 0.01, "k_max": 200.0, "dk": 0.025, "X_potential": 20.0},
    "krein": {"hybrid": False, "x0": None, "gamma": 1.0},
    "tolerances": {"q": 1e-3, "unitarity": 1e-8, "compare": 2e-3},
    "output": {"dir": None},
}

BENCHMARKS = {
    "sech2": (bm.resonance_case, ("nu",)),
    "bargmann": (bm.bargmann_case, ("k1", "r1")),
    "krein": (bm.krein_case, ("nu", "kappa")),
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _positive(cfg: dict, path: str) -> float:
    section, key = path.split(".")
    v = cfg[section][key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
        raise ConfigError(f"config.{path}: must be a positive number, got {v!r}")
    return float(v)


def validate_config(config) -> dict:
    """Fill in defaults and check field types; errors name the field path."""
    if isinstance(config, (str, Path)):
        config = json.loads(Path(config).read_text())
    if not isinstance(config, dict):
        raise ConfigError("config: must be a JSON object")
    cfg = _merge(DEFAULTS, config)
    if cfg.get("pipeline") not in PIPELINES:
        raise ConfigError(f"config.pipeline: must be one of {PIPELINES}, got {cfg.get('pipeline')!r}")
    inp = cfg.get("input")
    if not isinstance(inp, dict) or not inp:
        raise ConfigError("config.input: must be a non-empty object")
    keys = {"benchmark", "potential", "scattering", "spectral"} & set(inp)
    if len(keys) != 1:
        raise ConfigError("config.input: give exactly one of benchmark, potential, scattering, spectral")
    if "benchmark" in inp and inp["benchmark"] not in BENCHMARKS:
        raise ConfigError(f"config.input.benchmark: unknown {inp['benchmark']!r}; "
                          f"choose from {sorted(BENCHMARKS)}")
    for p in ("grid.X", "grid.dx", "grid.k_max", "grid.dk", "grid.X_potential"):
        _positive(cfg, p)
    for k, v in cfg["tolerances"].items():
        if not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"config.tolerances.{k}: must be a positive number, got {v!r}")
    return cfg


# -- inputs --------------------------------------------------------------------

@dataclass
class _Inputs:
    cfg: dict

    @property
    def inp(self) -> dict:
        return self.cfg["input"]

    @property
    def ks(self) -> np.ndarray:
        g = self.cfg["grid"]
        return np.linspace(0.0, g["k_max"], int(round(g["k_max"] / g["dk"])) + 1)

    def benchmark(self):
        if "benchmark" not in self.inp:
            return None
        fn, names = BENCHMARKS[self.inp["benchmark"]]
        return fn(**{n: float(self.inp[n]) for n in names if n in self.inp})

    def potential(self) -> PotentialGrid:
        b = self.benchmark()
        if b is not None:
            g = self.cfg["grid"]
            return b.potential(g["X_potential"], g["dx"])
        if "potential" not in self.inp:
            raise ConfigError("config.input: this pipeline needs a potential")
        try:
            return io.load_potential(self.inp["potential"], self.inp.get("decay_class", "L11"),
                                     self.inp.get("support_radius"))
        except OSError as exc:
            raise ConfigError(f"config.input.potential: {exc}") from exc

    def scattering(self) -> ScatteringData:
        b = self.benchmark()
        if b is not None:
            return b.scattering_data(self.ks)
        if "scattering" in self.inp:
            return _load(self.inp["scattering"], ScatteringData, "scattering")
        if "potential" in self.inp:
            return forward.scattering_data(self.potential(), self.ks)
        raise ConfigError("config.input: this pipeline needs scattering data")

    def spectral(self) -> SpectralFunction:
        b = self.benchmark()
        if b is not None:
            return b.spectral_function(self.ks)
        if "spectral" in self.inp:
            return _load(self.inp["spectral"], SpectralFunction, "spectral")
        sd = self.scattering()
        jd = jost_from_S(sd)
        return forward.spectral_function(jd, bound=list(zip(sd.bound_ks, _weights(sd, jd))))

    def exact_q(self, xs):
        b = self.benchmark()
        return None if b is None else b.q(xs)


def _weights(sd: ScatteringData, jd: JostData) -> list:
    """GL weights c_j = -4 k_j^2 / (s_j fdot(i k_j)^2)."""
    return [float(np.real(-4 * k * k / (fd**2 * s)))
            for k, s, fd in zip(sd.bound_ks, sd.norming, jd.fdot_at_bound)]


def _load(path, cls, field: str):
    try:
        obj = io.load_json(path)
    except OSError as exc:
        raise ConfigError(f"config.input.{field}: {exc}") from exc
    if not isinstance(obj, cls):
        raise ConfigError(f"config.input.{field}: expected {cls.__name__}, got {type(obj).__name__}")
    return obj


# -- pipelines -----------------------------------------------------------------

class _Run:
    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.data = _Inputs(cfg)
        self.report = ValidationReport()
        self.artifacts: dict = {}
        self.tables: dict = {}
        out = cfg["output"]["dir"]
        self.out = None if out is None else Path(out)
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)

    @property
    def grid(self) -> dict:
        return self.cfg["grid"]

    def save(self, name: str, obj) -> None:
        self.artifacts[name] = obj
        if self.out is None:
            return
        io.save_json(obj, self.out / f"{name}.json")
        if isinstance(obj, PotentialGrid):
            io.potential_csv(obj, self.out / f"{name}.csv")
        elif isinstance(obj, ScatteringData):
            io.scattering_csv(obj, self.out / f"{name}.csv")
            io.write_csv(self.out / f"{name}_phase.csv", "phase", obj.ks, forward.phase_shift(obj))
        elif isinstance(obj, SpectralFunction):
            io.write_csv(self.out / f"{name}.csv", "spectral", obj.lambdas, obj.density)

    def check_exact(self, name: str, q: PotentialGrid, tol: float) -> None:
        exact = self.data.exact_q(q.xs)
        if exact is None:
            return
        err = float(np.max(np.abs(q.qs - exact)))
        self.report.add(f"{name}_vs_exact", err < tol, err, "max |q - q_exact|")

    def forward(self):
        q = self.data.potential()
        sd = forward.scattering_data(q, self.data.ks)
        self.save("scattering", sd)
        dev = float(np.max(np.abs(np.abs(sd.S) - 1)))
        self.report.add("unitarity", dev < self.cfg["tolerances"]["unitarity"], dev, "max ||S| - 1|")
        self.report.add("bound_states", True, list(sd.bound_ks), f"J = {sd.J}, index = {sd.index}")
        return sd

    def marchenko(self, sd=None):
        sd = self.data.scattering() if sd is None else sd
        q = marchenko.invert(sd, X=self.grid["X"], dx=self.grid["dx"])
        self.save("potential_marchenko", q)
        return q

    def gl(self):
        q = gelfand_levitan.invert(self.data.spectral(), X=self.grid["X"], dx=self.grid["dx"])
        self.save("potential_gl", q)
        return q

    def krein(self):
        sd = self.data.scattering()
        kc = self.cfg["krein"]
        if kc["hybrid"]:
            res = krein.hybrid_invert(sd, X=self.grid["X"], dx=self.grid["dx"], x0=kc["x0"])
            self.report.add("hybrid_seam", True, res.seam, f"x0 = {res.x0}")
            q = res.potential
        else:
            res = krein.invert(sd, X=self.grid["X"], dx=self.grid["dx"], gamma=kc["gamma"])
            q = res.potential
            self.report.add("krein_reflection_max", res.family.reflection_max < 1,
                            res.family.reflection_max, "max |reflection coefficient|")
        self.save("potential_krein", q)
        return q

    def run(self, name: str) -> None:
        tol = self.cfg["tolerances"]
        if name == "forward":
            self.forward()
        elif name in ("marchenko", "gl", "krein"):
            q = getattr(self, name)()
            self.check_exact(name, q, tol["q"] * max(1.0, float(np.max(np.abs(q.qs)))))
            self.tables[name] = q
        elif name == "roundtrip":
            q_in = self.data.potential()
            sd = self.forward()
            q_out = self.marchenko(sd)
            err = float(np.max(np.abs(q_out.qs - q_in(q_out.xs))))
            self.report.add("roundtrip_q", err < tol["q"], err, "max |q_out - q_in|")
            sd2 = forward.scattering_data(q_out_extended(q_out, q_in), self.data.ks)
            self.report.add("roundtrip_bound_states", sd2.J == sd.J, sd2.J, "J after the round trip")
        elif name == "compare":
            qs = {"marchenko": self.marchenko(), "gl": self.gl(), "krein": self.krein()}
            xs = qs["marchenko"].xs
            scale = max(float(np.max(np.abs(v.qs))) for v in qs.values())
            for a, b in (("marchenko", "gl"), ("marchenko", "krein"), ("gl", "krein")):
                d = float(np.max(np.abs(qs[a].qs - qs[b].qs)))
                self.report.add(f"{a}_vs_{b}", d < tol["compare"] * scale, d, "max |difference|")
            self.tables["compare"] = np.column_stack([xs] + [qs[k].qs for k in ("marchenko", "gl", "krein")])
            if self.out is not None:
                np.savetxt(self.out / "compare.csv", self.tables["compare"], delimiter=",",
                           header="x,q_marchenko,q_gl,q_krein", comments="", fmt="%.17g")


def q_out_extended(q_out: PotentialGrid, q_in: PotentialGrid) -> PotentialGrid:
    """Reconstruction on [0, X] continued by the input beyond X (for the forward closure)."""
    xs = q_in.xs
    vals = np.where(xs <= q_out.xs[-1], np.interp(xs, q_out.xs, q_out.qs), q_in.qs)
    return PotentialGrid(xs, vals, q_in.support_radius, q_in.decay_class)


def run_pipeline(config) -> dict:
    """Run a named pipeline and return its report.

    The report is a plain dict with ``passed``, ``checks`` and the artifact
    names; artifacts are written to ``output.dir`` when set.
    """
    cfg = validate_config(config)
    run = _Run(cfg)
    run.run(cfg["pipeline"])
    report = {"pipeline": cfg["pipeline"], "config": cfg, **run.report.to_dict(),
              "artifacts": sorted(run.artifacts)}
    if run.out is not None:
        io.write_report(report, run.out / "report.json")
    report["_objects"] = run.artifacts
    report["_tables"] = run.tables
    return report


# -- wave-equation data reduction ----------------------------------------------

def response_transform(ts, a, ks, impulses=((1.0, 1.0),), constant_tail: bool = False,
                       chunk: int = 4_000_000) -> np.ndarray:
    """A(k) = int a(t) e^{ikt} dt plus point masses sum w e^{ik t0}.

    The smooth part is integrated exactly for piecewise-linear ``a``, which
    keeps the error uniform in k. With ``constant_tail`` the response is
    continued by its last value, whose transform -a(T) e^{ikT}/(ik) is
    taken in the Abel sense (k > 0 only).
    """
    ts = np.asarray(ts, dtype=float)
    a = np.asarray(a, dtype=float)
    ks = np.asarray(ks, dtype=float)
    out = np.zeros(ks.size, dtype=complex)
    for t0, w in impulses:
        out += w * np.exp(1j * ks * t0)
    if ts.size < 2:
        return out
    slope = np.diff(a) / np.diff(ts)
    zero = np.abs(ks) < 1e-12
    out[zero] += np.trapezoid(a, ts)
    kk = ks[~zero]
    step = max(1, chunk // ts.size)
    acc = np.zeros(kk.size, dtype=complex)
    for lo in range(0, kk.size, step):
        k = kk[lo:lo + step, None]
        e = np.exp(1j * k * ts[None, :])
        ik = 1j * k
        # int (a_j + s_j (t - t_j)) e^{ikt} dt over each cell
        term = (a[1:] * e[:, 1:] - a[:-1] * e[:, :-1]) / ik - slope * (e[:, 1:] - e[:, :-1]) / ik**2
        acc[lo:lo + step] = term.sum(axis=1)
    if constant_tail:
        acc -= a[-1] * np.exp(1j * kk * ts[-1]) / (1j * kk)
    out[~zero] += acc
    return out


def detect_resonance(ks, f, tol: float = 1e-2) -> bool:
    """True if |f| extrapolates linearly to (nearly) zero at k = 0."""
    ks = np.asarray(ks, dtype=float)
    af = np.abs(np.asarray(f))
    pos = np.nonzero(ks > 0)[0][:2]
    if pos.size < 2:
        return False
    k1, k2 = ks[pos]
    f1, f2 = af[pos]
    f0 = f1 - k1 * (f2 - f1) / (k2 - k1)
    return bool(abs(f0) < tol * max(f1, f2))


@dataclass(frozen=True)
class WaveReduction:
    jost: JostData
    scattering: ScatteringData
    response: np.ndarray


def wave_reduction(ts, a, ks, impulses=((1.0, 1.0),), tol: float = 1e-10,
                   resonance_tol: float = 1e-2, constant_tail: bool = False) -> WaveReduction:
    """Jost function f(k) = e^{ik}/A(k) from the boundary response a(t).

    ``a`` samples the integrable part of the response on ``ts``; the
    free-travel impulse at t = 1 is passed separately in ``impulses``.
    Bound states would make a(t) grow, so the reduced data have none; a
    zero-energy resonance is flagged from the behaviour of |f| at k -> 0.

    Raises
    ------
    ZeroResponse
        If |A(k)| < ``tol`` somewhere on the grid.
    """
    ks = np.asarray(ks, dtype=float)
    A = response_transform(ts, a, ks, impulses, constant_tail)
    if constant_tail and ks[0] == 0:
        ks, A = ks[1:], A[1:]
    small = np.abs(A) < tol
    if np.any(small):
        raise ZeroResponse(f"|A(k)| < {tol:g} at k = {ks[small][0]:.6g}")
    f = np.exp(1j * ks) / A
    res = detect_resonance(ks, f, resonance_tol)
    jd = JostData(ks, f, resonance=res)
    S = np.conj(f) / f
    if res and ks[0] == 0:
        S[0] = -1.0
    index = -1 if res else 0
    pos = ks > 0
    try:
        w = winding_index(ks[pos], S[pos])
    except HalflineError as exc:
        raise IndexMismatch(f"winding of the reduced S is undefined: {exc}") from exc
    if w != index:
        raise IndexMismatch(f"winding index {w} of the reduced data does not match index {index}")
    sd = ScatteringData(ks, S, (), (), index)
    return WaveReduction(jd, sd, A)
