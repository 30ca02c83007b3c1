"""Marchenko inversion S => F => A => q and the converse steps.

The Marchenko equation

    A(x,y) + int_x^inf A(x,s) F(s+y) ds + F(x+y) = 0,   y >= x,

is solved separately for every grid x by a Gauss-Legendre Nystrom rule on
[x, x + L(x)], where L is chosen so that F(s+y) is negligible beyond it.
Values at the grid ordinates y follow from Nystrom interpolation, so the
stored kernel is exactly consistent with the quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from .errors import ContractionFailed, IterationDiverged, SingularOperator
from .quadrature import cumtrapz, deriv4, oscillatory_transform, trapezoid_weights
from .types import PotentialGrid, ScatteringData, TransformationKernel, check_grid

#: |F| below this fraction of max|F| is treated as negligible
CUT_TOL = 1e-10
#: condition number above which a Nystrom matrix counts as singular
COND_CAP = 1e12
N_NODES = 96


# -- F -----------------------------------------------------------------------

def build_F(sd: ScatteringData, xs, tail="fit") -> np.ndarray:
    """Marchenko function F = F_s + F_d at the points ``xs`` (any sign).

    With 1 - S = u + i v (u even, v odd in k),
    F_s(x) = (1/pi) int_0^inf (u cos kx - v sin kx) dk. The sine part has a
    1/k tail and is evaluated as a right limit at x = 0.
    """
    xs = np.asarray(xs, dtype=float)
    ks = np.asarray(sd.ks)
    u = 1.0 - sd.S.real
    v = -sd.S.imag
    Fs = (oscillatory_transform(ks, u, xs, "cos", "even", tail)
          - oscillatory_transform(ks, v, xs, "sin", "odd", tail, right_limit=True)) / np.pi
    Fd = np.zeros_like(xs)
    for kj, sj in zip(sd.bound_ks, sd.norming):
        Fd += sj * np.exp(-kj * xs)
    return Fs + Fd


class _FInterp:
    """Spline of F samples on [z0, zmax]; zero beyond zmax."""

    def __init__(self, zs, Fs):
        zs = np.asarray(zs, dtype=float)
        Fs = np.asarray(Fs, dtype=float)
        check_grid(zs, "zs")
        self.zmax = zs[-1]
        self.spline = CubicSpline(zs, Fs)
        self.peak = float(np.max(np.abs(Fs)))
        above = np.abs(Fs) >= CUT_TOL * self.peak
        last = np.nonzero(above)[0]
        self.cut = float(zs[min(last[-1] + 1, zs.size - 1)]) if last.size else float(zs[0])

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z <= self.zmax, self.spline(np.minimum(z, self.zmax)), 0.0)


# -- solve -------------------------------------------------------------------

@lru_cache(maxsize=16)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _rcond(M: np.ndarray):
    lu = lu_factor(M)
    rc, _ = dgecon(lu[0], np.linalg.norm(M, 1), norm="1")
    return lu, rc


def _solve_row(Fi: _FInterp, x: float, ys: np.ndarray, n: int, method: str,
               cond_cap: float, tol: float, maxiter: int):
    """A(x, ys) and A(x, x) for one x."""
    L = max(Fi.cut - 2 * x, 0.5)
    t, w = _gauss(n)
    s = x + 0.5 * L * (t + 1)
    w = 0.5 * L * w
    Kmat = Fi(s[:, None] + s[None, :]) * w[None, :]
    rhs = -Fi(x + s)
    if method == "direct":
        lu, rc = _rcond(np.eye(n) + Kmat)
        if cond_cap is not None and not rc * cond_cap > 1:
            raise SingularOperator(f"Marchenko operator at x = {x:.4g} has condition "
                                   f"{1 / max(rc, 1e-300):.2e}")
        a = lu_solve(lu, rhs)
    else:
        a = rhs.copy()
        for _ in range(maxiter):
            new = rhs - Kmat @ a
            if np.max(np.abs(new - a)) <= tol * max(1.0, np.max(np.abs(new))):
                a = new
                break
            if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > 1e6 * max(1.0, Fi.peak):
                raise IterationDiverged(f"Marchenko iteration diverged at x = {x:.4g}")
            a = new
        else:
            raise IterationDiverged(f"Marchenko iteration did not converge at x = {x:.4g}")
    pts = np.concatenate([[x], ys])
    vals = -Fi(x + pts) - Fi(s[None, :] + pts[:, None]) @ (w * a)
    return vals[1:], vals[0]


def solve_marchenko(zs, Fs, xs, n_nodes: int = N_NODES, method: str = "direct",
                    cond_cap: float | None = COND_CAP, tol: float = 1e-13,
                    maxiter: int = 500, ys=None) -> TransformationKernel:
    """Kernel A(x,y) on the triangle y >= x of the grid ``xs``.

    Parameters
    ----------
    zs, Fs : ndarray
        Samples of F on [0, Z]; Z should reach beyond the point where F is
        negligible. F is taken as zero beyond Z.
    xs : ndarray
        Grid for x (and for y unless ``ys`` is given).
    method : {'direct', 'iterate'}
        Dense solve per x, or Picard iteration (useful where the operator
        is a contraction, for large x).
    ys : ndarray, optional
        Separate ordinate grid; entries with y < x are left as NaN.

    Raises
    ------
    SingularOperator
        If a Nystrom matrix is too ill conditioned.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.size > 1:
        check_grid(xs, "xs")
    ys = xs if ys is None else np.asarray(ys, dtype=float)
    Fi = _FInterp(zs, Fs)
    vals = np.full((xs.size, ys.size), np.nan)
    diag = np.zeros(xs.size)
    for i, x in enumerate(xs):
        sel = ys >= x - 1e-12 * max(1.0, abs(x))
        if Fi.peak == 0:
            vals[i, sel] = 0.0
            continue
        row, d = _solve_row(Fi, x, ys[sel], n_nodes, method, cond_cap, tol, maxiter)
        vals[i, sel] = row
        diag[i] = d
    return TransformationKernel(xs, vals, diag, "marchenko_A", ys)


def q_values_from_diagonal(xs, diag, sign: float = -2.0) -> np.ndarray:
    """sign * d/dx of a kernel diagonal with fourth-order differences."""
    return sign * deriv4(np.asarray(diag), np.asarray(xs))


def q_from_A(A: TransformationKernel) -> PotentialGrid:
    """q(x) = -2 d/dx A(x,x)."""
    return PotentialGrid(A.xs, q_values_from_diagonal(A.xs, A.diagonal, -2.0))


@dataclass(frozen=True)
class MarchenkoResult:
    """Intermediate products of a Marchenko inversion."""

    potential: PotentialGrid
    kernel: TransformationKernel
    zs: np.ndarray
    F: np.ndarray


def invert(sd: ScatteringData, X: float = 5.0, dx: float = 0.01, z_extra: float = 25.0,
           dz: float | None = None, n_nodes: int = N_NODES, full: bool = False):
    """Potential on [0, X] from scattering data: S => F => A => q.

    F is sampled on [0, 2X + z_extra] with step ``dz`` (default ``dx``).
    Returns a :class:`PotentialGrid`, or a :class:`MarchenkoResult` when
    ``full`` is set.
    """
    xs = np.linspace(0.0, X, int(round(X / dx)) + 1)
    dz = dx if dz is None else dz
    Z = 2 * X + z_extra
    zs = np.linspace(0.0, Z, int(round(Z / dz)) + 1)
    Fz = build_F(sd, zs)
    A = solve_marchenko(zs, Fz, xs, n_nodes)
    q = q_from_A(A)
    return MarchenkoResult(q, A, zs, Fz) if full else q


# -- converse: A => F --------------------------------------------------------

def F_from_A(A: TransformationKernel, tol: float = 1e-12, maxiter: int = 200,
             contraction: float = 0.9) -> tuple:
    """Recover F on z = 0, h, ..., 2X from A on a uniform grid.

    For z >= 2 x_0 the equation at x = floor(z/2) is iterated as a fixed
    point, where x_0 is the first grid point from which on the operator
    norm int_x^X |A(x,s)| ds stays below ``contraction``. Below 2 x_0 the
    equation at x = 0 is a Volterra equation for F that is solved by
    backward recursion. F beyond 2X is taken as zero.

    Returns
    -------
    zs, F : ndarray

    Raises
    ------
    ContractionFailed
        If no such x_0 exists on the grid.
    """
    xs = A.xs
    n = xs.size
    h = xs[1] - xs[0]
    if not np.allclose(np.diff(xs), h, rtol=1e-9, atol=0):
        raise ValueError("F_from_A needs a uniform grid")
    V = np.where(np.isnan(A.values), 0.0, A.values)
    zs = h * np.arange(2 * n - 1)
    F = np.zeros(2 * n - 1)
    norms = np.array([np.sum(trapezoid_weights(xs[i:]) * np.abs(V[i, i:])) if i < n - 1 else 0.0
                      for i in range(n)])
    ok = norms < contraction
    bad = np.nonzero(~ok)[0]
    i0 = 0 if bad.size == 0 else bad[-1] + 1
    if i0 >= n:
        raise ContractionFailed("the Marchenko operator is not a contraction anywhere on the grid")

    def row_eq(i, m, Fcur):
        # F(x_i + y_m) = -A(x_i, y_m) - int_{x_i}^X A(x_i, s) F(s + y_m) ds
        s_idx = np.arange(i, n)
        w = trapezoid_weights(xs[i:]) if i < n - 1 else np.zeros(1)
        arg = s_idx + m
        vals = np.where(arg < F.size, Fcur[np.minimum(arg, F.size - 1)], 0.0)
        return -V[i, m] - np.sum(w * V[i, i:] * vals)

    p_lo = 2 * i0
    idx = np.arange(p_lo, 2 * n - 1)
    rows = idx // 2
    cols = idx - rows
    F[idx] = -V[rows, cols]
    for _ in range(maxiter):
        new = F.copy()
        for p, i, m in zip(idx, rows, cols):
            new[p] = row_eq(i, m, F)
        diff = np.max(np.abs(new - F)) if idx.size else 0.0
        F = new
        if diff <= tol * max(1.0, np.max(np.abs(F))):
            break
    else:
        raise ContractionFailed("fixed-point iteration for F did not converge")
    # backward Volterra recursion at x = 0 for z < 2 x_0
    w0 = trapezoid_weights(xs)
    for p in range(p_lo - 1, -1, -1):
        arg = np.arange(n) + p
        vals = np.where(arg < F.size, F[np.minimum(arg, F.size - 1)], 0.0)
        rest = np.sum(w0[1:] * V[0, 1:] * vals[1:])
        F[p] = (-V[0, p] - rest) / (1 + w0[0] * V[0, 0])
    return zs, F


# -- diagnostics -------------------------------------------------------------

def marchenko_type_residual(ys, A0, F, Y: float | None = None, n_nodes: int = 400) -> dict:
    """Residual of F(y) + A(y) + int_0^inf A(t) F(t+y) dt = A(-y).

    Here A(y) = A(0,y) for y >= 0 and A(y) = 0 for y < 0, so the right side
    is zero for y > 0.

    Parameters
    ----------
    ys, A0 : ndarray
        Samples of A(0, y) on y >= 0.
    F : callable
        F at any real argument (F is generally discontinuous at 0).
    Y : float, optional
        Half-width of the test interval; defaults to half the A grid.
    """
    ys = np.asarray(ys, dtype=float)
    A0 = np.asarray(A0, dtype=float)
    T = ys[-1]
    Y = 0.5 * T if Y is None else Y
    spl = CubicSpline(ys, A0)
    tests = np.linspace(-Y, Y, 201)
    tests = tests[tests != 0.0]
    g, wg = np.polynomial.legendre.leggauss(n_nodes)
    lhs = np.empty(tests.size)
    for i, y in enumerate(tests):
        edges = [0.0, T] if y >= 0 else [0.0, min(-y, T), T]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a:
                continue
            t = 0.5 * (b - a) * (g + 1) + a
            tt = t + y
            # nudge the evaluation to the correct side of the jump at 0
            Ft = np.asarray(F(np.where(tt == 0.0, np.sign(b + a + 2 * y) * 1e-300, tt)))
            total += 0.5 * (b - a) * np.sum(wg * spl(t) * Ft)
        lhs[i] = float(np.asarray(F(np.array([y])))[0]) + (spl(y) if y >= 0 else 0.0) + total
    rhs = np.where(tests < 0, spl(np.abs(tests)), 0.0)
    res = np.abs(lhs - rhs)
    neg = tests < 0
    return {"y": tests, "residual": res,
            "max_negative": float(np.max(res[neg])) if neg.any() else 0.0,
            "max_positive": float(np.max(res[~neg])) if (~neg).any() else 0.0,
            "max": float(np.max(res))}


def sigma(q: PotentialGrid) -> np.ndarray:
    """sigma(x) = int_x^inf |q| on the grid of ``q``."""
    c = cumtrapz(np.abs(q.qs), q.xs)
    return c[-1] - c


def estimate_ratios(q: PotentialGrid, F, A: TransformationKernel, eps: float = 1e-14,
                    floor: float = 1e-10) -> dict:
    """Ratios behind the bounds |F(2x)|, |F(2x) + A(x,x)| <= c sigma(x) and
    |F'(2x) - q(x)/4| <= c sigma(x)^2, as maxima over the shared grid.

    ``F`` is a callable; the A grid must lie inside the q grid. The third
    ratio is only taken where sigma^2 exceeds ``floor`` times sigma(0)^2;
    further out the difference F'(2x) - q/4 is below the interpolation
    error of q.
    """
    xs = A.xs
    sig = np.interp(xs, q.xs, sigma(q))
    qx = np.interp(xs, q.xs, q.qs)
    F2 = np.asarray(F(2 * xs))
    h = 1e-4
    dF2 = (np.asarray(F(2 * xs + h)) - np.asarray(F(np.maximum(2 * xs - h, 0.0)))) \
        / (2 * xs + h - np.maximum(2 * xs - h, 0.0))
    keep = sig > eps * max(1.0, sig[0])
    r1 = np.abs(F2[keep]) / sig[keep]
    r2 = np.abs(F2 + A.diagonal)[keep] / sig[keep]
    keep2 = sig**2 > floor * sig[0] ** 2
    r3 = np.abs(dF2 - qx / 4)[keep2] / sig[keep2] ** 2
    return {"F": float(np.max(r1)), "F_plus_A": float(np.max(r2)),
            "dF_minus_q": float(np.max(r3))}
