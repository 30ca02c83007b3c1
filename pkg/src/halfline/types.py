"""Immutable containers for potentials, scattering data and kernels.

Every container validates its structural invariants on construction and
freezes its arrays, so instances can be shared between threads or cached.
Physical consistency checks that need numerical tolerances (unitarity,
decay of S, and so on) live in :mod:`halfline.core` instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import IndexMismatch, MalformedGrid

DECAY_CLASSES = ("compact", "L11", "confining")
KERNEL_KINDS = ("marchenko_A", "gl_K", "fixed_energy_K")
WAVE_KINDS = ("jost_f", "regular_phi", "theta", "krein_E", "krein_Eminus")

#: cap for the discrete weighted norm sum (1 + x)|q| dx of an L11 potential
L11_NORM_CAP = 1e6


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def check_grid(xs: np.ndarray, name: str = "grid", start_zero: bool = False) -> None:
    """Raise :class:`MalformedGrid` unless ``xs`` is a finite increasing 1-D grid."""
    if xs.ndim != 1 or xs.size < 2:
        raise MalformedGrid(f"{name} must be one-dimensional with at least two nodes")
    if not np.all(np.isfinite(xs)):
        raise MalformedGrid(f"{name} contains non-finite values")
    if np.any(np.diff(xs) <= 0):
        raise MalformedGrid(f"{name} must be strictly increasing")
    if start_zero and xs[0] != 0.0:
        raise MalformedGrid(f"{name} must start at 0, got {xs[0]}")


@dataclass(frozen=True)
class PotentialGrid:
    """A real potential q(x) sampled on [0, X].

    Parameters
    ----------
    xs : array_like
        Strictly increasing abscissas with ``xs[0] == 0``.
    qs : array_like
        Potential values at ``xs``.
    support_radius : float, optional
        Radius ``a`` with ``q = 0`` for ``x > a``.
    decay_class : {'compact', 'L11', 'confining'}
        How the potential behaves at infinity.
    """

    xs: np.ndarray
    qs: np.ndarray
    support_radius: Optional[float] = None
    decay_class: str = "L11"

    def __post_init__(self):
        xs = _frozen(self.xs)
        qs = np.asarray(self.qs)
        if np.iscomplexobj(qs):
            if np.max(np.abs(qs.imag), initial=0.0) > 0:
                raise MalformedGrid("potential values must be real")
            qs = qs.real
        qs = _frozen(qs)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "qs", qs)
        check_grid(xs, "xs", start_zero=True)
        if qs.shape != xs.shape:
            raise MalformedGrid("xs and qs must have the same length")
        if not np.all(np.isfinite(qs)):
            raise MalformedGrid("potential values must be finite")
        if self.decay_class not in DECAY_CLASSES:
            raise MalformedGrid(f"decay_class must be one of {DECAY_CLASSES}")
        if self.support_radius is not None and self.support_radius <= 0:
            raise MalformedGrid("support_radius must be positive")
        if self.decay_class == "compact":
            if self.support_radius is None:
                raise MalformedGrid("a compact potential needs support_radius")
            outside = xs > self.support_radius * (1 + 1e-12)
            if np.any(qs[outside] != 0.0):
                raise MalformedGrid("compact potential is nonzero beyond support_radius")
        if self.decay_class == "L11" and self.weighted_norm() > L11_NORM_CAP:
            raise MalformedGrid("weighted L1 norm exceeds the configured cap")

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.xs)

    @property
    def is_uniform(self) -> bool:
        d = self.dx
        return bool(np.allclose(d, d[0], rtol=1e-9, atol=0))

    def weighted_norm(self) -> float:
        """Trapezoid value of the integral of (1 + x)|q(x)|."""
        return float(np.trapezoid((1 + self.xs) * np.abs(self.qs), self.xs))

    def __call__(self, x) -> np.ndarray:
        """Cubic-spline interpolant; zero beyond the support or the grid end."""
        x = np.asarray(x, dtype=float)
        spline = _spline_cache(self)
        out = spline(np.clip(x, self.xs[0], self.xs[-1]))
        if self.support_radius is not None:
            out = np.where(x > self.support_radius, 0.0, out)
        if self.decay_class != "confining":
            out = np.where(x > self.xs[-1], 0.0, out)
        return out


_SPLINES: dict = {}


def _spline_cache(q: PotentialGrid) -> CubicSpline:
    key = id(q)
    hit = _SPLINES.get(key)
    if hit is not None and hit[0] is q:
        return hit[1]
    if q.support_radius is not None and q.decay_class == "compact":
        # keep the jump at the support edge out of the interpolant
        inside = q.xs <= q.support_radius * (1 + 1e-12)
        spline = CubicSpline(q.xs[inside], q.qs[inside])
    else:
        spline = CubicSpline(q.xs, q.qs)
    if len(_SPLINES) > 64:
        _SPLINES.clear()
    _SPLINES[key] = (q, spline)
    return spline


def _sorted_bound(bound_ks, norming=None):
    ks = np.asarray(bound_ks, dtype=float).reshape(-1)
    if ks.size and np.any(ks <= 0):
        raise MalformedGrid("bound-state wavenumbers must be positive")
    order = np.argsort(ks)
    out = [tuple(ks[order].tolist())]
    if norming is not None:
        nm = np.asarray(norming, dtype=float).reshape(-1)
        if nm.size != ks.size:
            raise MalformedGrid("one norming constant is needed per bound state")
        out.append(tuple(nm[order].tolist()))
    return out


@dataclass(frozen=True)
class ScatteringData:
    """The triple {S(k), k_j, s_j} plus the winding index of S.

    ``bound_ks`` are stored in ascending order and ``norming`` follows the
    same permutation.
    """

    ks: np.ndarray
    S: np.ndarray
    bound_ks: Sequence[float] = ()
    norming: Sequence[float] = ()
    index: int = 0

    def __post_init__(self):
        ks = _frozen(self.ks)
        S = _frozen(self.S, complex)
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "S", S)
        check_grid(ks, "ks")
        if ks[0] < 0:
            raise MalformedGrid("ks must be non-negative")
        if S.shape != ks.shape:
            raise MalformedGrid("ks and S must have the same length")
        bk, nm = _sorted_bound(self.bound_ks, self.norming)
        if any(n <= 0 for n in nm):
            raise MalformedGrid("norming constants must be positive")
        object.__setattr__(self, "bound_ks", bk)
        object.__setattr__(self, "norming", nm)
        object.__setattr__(self, "index", int(self.index))
        J = len(bk)
        if self.index not in (-2 * J, -2 * J - 1):
            raise IndexMismatch(f"index {self.index} is not -2J or -2J-1 for J={J}")

    @property
    def J(self) -> int:
        return len(self.bound_ks)

    @property
    def resonance(self) -> bool:
        return self.index == -2 * self.J - 1


@dataclass(frozen=True)
class JostData:
    """Jost function f(k) on a real grid with its bound-state zeros."""

    ks: np.ndarray
    f: np.ndarray
    fprime0: Optional[np.ndarray] = None
    bound_ks: Sequence[float] = ()
    fdot_at_bound: Sequence[complex] = ()
    resonance: bool = False

    def __post_init__(self):
        ks = _frozen(self.ks)
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "f", _frozen(self.f, complex))
        check_grid(ks, "ks")
        if self.f.shape != ks.shape:
            raise MalformedGrid("ks and f must have the same length")
        if self.fprime0 is not None:
            object.__setattr__(self, "fprime0", _frozen(self.fprime0, complex))
            if self.fprime0.shape != ks.shape:
                raise MalformedGrid("fprime0 must match ks")
        bk = np.asarray(self.bound_ks, dtype=float).reshape(-1)
        fd = np.asarray(self.fdot_at_bound, dtype=complex).reshape(-1)
        if fd.size not in (0, bk.size):
            raise MalformedGrid("fdot_at_bound must have one entry per bound state")
        order = np.argsort(bk)
        object.__setattr__(self, "bound_ks", tuple(bk[order].tolist()))
        object.__setattr__(self, "fdot_at_bound", tuple(fd[order].tolist()) if fd.size else ())


@dataclass(frozen=True)
class SpectralFunction:
    """Spectral density on lambda >= 0 and the discrete weights at -k_j^2."""

    lambdas: np.ndarray
    density: np.ndarray
    discrete_points: Sequence[tuple] = ()

    def __post_init__(self):
        lam = _frozen(self.lambdas)
        dens = _frozen(self.density)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "density", dens)
        check_grid(lam, "lambdas")
        if lam[0] < 0:
            raise MalformedGrid("lambdas must be non-negative")
        if dens.shape != lam.shape:
            raise MalformedGrid("lambdas and density must have the same length")
        if np.any(dens[np.isfinite(dens)] < 0):
            raise MalformedGrid("spectral density must be non-negative")
        pts = sorted(((float(l), float(c)) for l, c in self.discrete_points), reverse=True)
        for l, c in pts:
            if l >= 0 or c <= 0:
                raise MalformedGrid("discrete points need lambda < 0 and weight > 0")
        object.__setattr__(self, "discrete_points", tuple(pts))

    @property
    def bound_ks(self) -> tuple:
        return tuple(float(np.sqrt(-l)) for l, _ in self.discrete_points)

    @property
    def weights(self) -> tuple:
        return tuple(c for _, c in self.discrete_points)


@dataclass(frozen=True)
class IFunction:
    """Boundary function I(k) = f'(0,k)/f(k) with its poles ik_j and residues."""

    ks: np.ndarray
    I: np.ndarray
    poles: Sequence[float] = ()
    residues: Sequence[complex] = ()
    resonance: bool = False
    residue0: Optional[complex] = None

    def __post_init__(self):
        ks = _frozen(self.ks)
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "I", _frozen(self.I, complex))
        check_grid(ks, "ks")
        if self.I.shape != ks.shape:
            raise MalformedGrid("ks and I must have the same length")
        p = np.asarray(self.poles, dtype=float).reshape(-1)
        r = np.asarray(self.residues, dtype=complex).reshape(-1)
        if r.size != p.size:
            raise MalformedGrid("one residue is needed per pole")
        order = np.argsort(p)
        object.__setattr__(self, "poles", tuple(p[order].tolist()))
        object.__setattr__(self, "residues", tuple(r[order].tolist()))
        if self.residue0 is not None:
            object.__setattr__(self, "residue0", complex(self.residue0))


@dataclass(frozen=True)
class TransformationKernel:
    """A transformation kernel sampled on a triangle of grid nodes.

    ``values[i, m]`` is the kernel at ``(xs[i], ys[m])``. For ``gl_K`` and
    ``fixed_energy_K`` only ``ys[m] <= xs[i]`` is meaningful; for
    ``marchenko_A`` only ``ys[m] >= xs[i]``. The other half is NaN.
    """

    xs: np.ndarray
    values: np.ndarray
    diagonal: np.ndarray
    kind: str
    ys: Optional[np.ndarray] = None

    def __post_init__(self):
        xs = _frozen(self.xs)
        object.__setattr__(self, "xs", xs)
        ys = xs if self.ys is None else _frozen(self.ys)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "diagonal", _frozen(self.diagonal))
        if self.kind not in KERNEL_KINDS:
            raise MalformedGrid(f"kind must be one of {KERNEL_KINDS}")
        if self.values.shape != (xs.size, ys.size):
            raise MalformedGrid("values must have shape (len(xs), len(ys))")
        if self.diagonal.shape != xs.shape:
            raise MalformedGrid("diagonal must match xs")


@dataclass(frozen=True)
class WaveFunctionTable:
    """Solutions psi(x_i, k_m) of -psi'' + q psi = k^2 psi, with x-derivatives."""

    xs: np.ndarray
    ks: np.ndarray
    values: np.ndarray
    kind: str
    derivative: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "xs", _frozen(self.xs))
        object.__setattr__(self, "ks", _frozen(self.ks, complex if np.iscomplexobj(self.ks) else float))
        object.__setattr__(self, "values", _frozen(self.values, complex))
        if self.derivative is not None:
            object.__setattr__(self, "derivative", _frozen(self.derivative, complex))
        if self.kind not in WAVE_KINDS:
            raise MalformedGrid(f"kind must be one of {WAVE_KINDS}")
        if self.values.shape != (self.xs.size, self.ks.size):
            raise MalformedGrid("values must have shape (len(xs), len(ks))")


@dataclass(frozen=True)
class KreinKernel:
    """Even Krein accelerant H(t) stored for t >= 0 on a uniform grid."""

    ts: np.ndarray
    H: np.ndarray
    Htilde_min: float = field(default=float("nan"))

    def __post_init__(self):
        ts = _frozen(self.ts)
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "H", _frozen(self.H))
        check_grid(ts, "ts", start_zero=True)
        d = np.diff(ts)
        if not np.allclose(d, d[0], rtol=1e-9, atol=0):
            raise MalformedGrid("the Krein grid must be uniform")
        if self.H.shape != ts.shape:
            raise MalformedGrid("ts and H must have the same length")

    @property
    def dt(self) -> float:
        return float(self.ts[1] - self.ts[0])


@dataclass(frozen=True)
class PhaseShiftSequence:
    """Fixed-energy phase shifts delta_l and amplitudes a_l = exp(i delta) sin(delta)."""

    ells: np.ndarray
    deltas: np.ndarray
    a_ells: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ells", _frozen(self.ells, int))
        object.__setattr__(self, "deltas", _frozen(self.deltas))
        object.__setattr__(self, "a_ells", _frozen(self.a_ells, complex))
        n = self.ells.size
        if self.deltas.shape != (n,) or self.a_ells.shape != (n,):
            raise MalformedGrid("ells, deltas and a_ells must have equal length")


@dataclass(frozen=True)
class QuarkoniumData:
    """Bound-state energies E_j and slopes s_j = u_j'(0) of normalized eigenfunctions."""

    energies: Sequence[float]
    slopes: Sequence[float]

    def __post_init__(self):
        E = tuple(float(e) for e in self.energies)
        s = tuple(float(v) for v in self.slopes)
        if len(E) != len(s) or not E:
            raise MalformedGrid("need the same positive number of energies and slopes")
        if any(b <= a for a, b in zip(E, E[1:])):
            raise MalformedGrid("energies must be strictly increasing")
        if any(v == 0 for v in s):
            raise MalformedGrid("slopes must be nonzero")
        object.__setattr__(self, "energies", E)
        object.__setattr__(self, "slopes", s)

    @property
    def J(self) -> int:
        return len(self.energies)

    @property
    def weights(self) -> tuple:
        """Spectral jumps s_j^2."""
        return tuple(v * v for v in self.slopes)
