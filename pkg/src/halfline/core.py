"""Winding index, cosine transforms and validation of scattering data."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedGrid, NonIntegerWinding, ZeroCrossing
from .quadrature import oscillatory_transform
from .types import ScatteringData, check_grid

#: rounding guard for the winding number
WINDING_GUARD = 0.1


def winding_index(ks, g, tol: float = 1e-12, guard: float = WINDING_GUARD) -> int:
    """Winding number of g along the real axis.

    ``g`` is sampled on ``ks >= 0`` and extended to negative k by
    g(-k) = conj(g(k)), so the increment of arg g over the whole axis is
    twice the increment over [0, K]. The phase is unwrapped from k = K,
    where g is close to 1.

    Raises
    ------
    ZeroCrossing
        If |g| < tol at a node.
    NonIntegerWinding
        If the unrounded winding is further than ``guard`` from an integer.
    """
    ks = np.asarray(ks, dtype=float)
    g = np.asarray(g, dtype=complex)
    check_grid(ks, "ks")
    if g.shape != ks.shape:
        raise MalformedGrid("ks and samples must have the same length")
    if not np.all(np.isfinite(g)):
        raise MalformedGrid("samples contain non-finite values")
    if np.any(np.abs(g) < tol):
        i = int(np.argmin(np.abs(g)))
        raise ZeroCrossing(f"|g| = {abs(g[i]):.2e} at k = {ks[i]:.6g}")
    phase = np.unwrap(np.angle(g[::-1]))[::-1]
    # symmetric extension: total increment is 2 (theta(K) - theta(0)),
    # and a 2*pi jump at the origin is absorbed by choosing theta(0) mod 2*pi
    raw = (phase[-1] - phase[0]) / np.pi
    n = int(np.rint(raw))
    if abs(raw - n) > guard:
        raise NonIntegerWinding(f"winding {raw:.4f} is not within {guard} of an integer")
    return n


def unwrap_from_top(ks, g, max_step: float = 0.5 * np.pi, error=NonIntegerWinding) -> np.ndarray:
    """Continuous arg g on the grid, fixed by its principal value at the last node.

    Raises ``error`` when the phase changes by more than ``max_step``
    between neighbours, since the branch can then not be followed reliably.
    """
    g = np.asarray(g, dtype=complex)
    step = np.angle(g[:-1] / g[1:])
    if np.any(np.abs(step) > max_step):
        i = int(np.argmax(np.abs(step)))
        raise error(f"phase jumps by {step[i]:.3f} near k = {np.asarray(ks)[i]:.4g}")
    return np.angle(g[-1]) + np.concatenate([np.cumsum(step[::-1])[::-1], [0.0]])


def fourier_cos_transform(grid, samples, points, direction: str = "forward",
                          tail="fit", tail_tol: float = 1e-8) -> np.ndarray:
    """Cosine transform on the half-line.

    ``forward`` returns the integral over t >= 0 of cos(k t) g(t);
    ``inverse`` multiplies the same integral by 2/pi, so inverse(forward(g))
    reproduces g.

    Parameters
    ----------
    grid : ndarray
        Sample abscissas (t or k), non-negative and increasing.
    samples : ndarray
        Real even data on ``grid``.
    points : ndarray
        Where to evaluate the transform.
    tail : 'fit' or None
        With None the samples must have decayed below ``tail_tol`` times
        their maximum at the last node, otherwise
        :class:`~halfline.errors.TailNotResolved` is raised.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    out = oscillatory_transform(grid, samples, points, "cos", "even", tail, tail_tol)
    return out if direction == "forward" else 2.0 / np.pi * out


@dataclass
class ValidationReport:
    """Named pass/fail checks with the measured values."""

    checks: dict = field(default_factory=dict)

    def add(self, name: str, passed: bool, value=None, detail: str = "") -> None:
        self.checks[name] = {"passed": bool(passed), "value": value, "detail": detail}

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def failures(self) -> list:
        return [k for k, c in self.checks.items() if not c["passed"]]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": self.checks}


def validate_scattering_data(sd: ScatteringData, tol: float = 1e-8,
                             s_inf_tol: float = 0.05, zmax: float = 30.0,
                             dz: float = 0.01) -> ValidationReport:
    """Check the necessary conditions on scattering data.

    Reports unitarity of S, S(K) close to 1, agreement of the winding index
    with the number of bound states, and finiteness of the discrete norms
    of the Marchenko function F (L1, L2, sup, and the first moment of F').
    """
    from .marchenko import build_F

    check_grid(np.asarray(sd.ks), "ks")
    rep = ValidationReport()
    dev = float(np.max(np.abs(np.abs(sd.S) - 1.0)))
    rep.add("unitarity", dev < tol, dev, "max ||S(k)| - 1|")
    end = float(abs(sd.S[-1] - 1.0))
    rep.add("S_at_infinity", end < s_inf_tol, end, "|S(k_max) - 1|")
    try:
        w = winding_index(sd.ks, sd.S)
        ok = w == sd.index and w in (-2 * sd.J, -2 * sd.J - 1)
        rep.add("index", ok, w, f"winding {w}, stored {sd.index}, J={sd.J}")
    except (ZeroCrossing, NonIntegerWinding) as exc:
        rep.add("index", False, None, str(exc))
    zs = np.arange(0.0, zmax + 0.5 * dz, dz)
    try:
        F = build_F(sd, zs)
        dF = np.gradient(F, zs)
        norms = {
            "L1": float(np.trapezoid(np.abs(F), zs)),
            "L2": float(np.sqrt(np.trapezoid(F**2, zs))),
            "Linf": float(np.max(np.abs(F))),
            "xdF_L1": float(np.trapezoid(np.abs(zs * dF), zs)),
        }
        decayed = abs(F[-1]) <= 1e-6 * max(norms["Linf"], 1e-300) or norms["Linf"] == 0
        finite = all(np.isfinite(v) for v in norms.values())
        rep.add("F_norms", finite and decayed, norms,
                "discrete norms of F; F must also decay on the z-grid")
    except Exception as exc:  # report, not raise
        rep.add("F_norms", False, None, f"{type(exc).__name__}: {exc}")
    return rep
