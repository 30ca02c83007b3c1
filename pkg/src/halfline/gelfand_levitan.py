"""Gel'fand-Levitan inversion rho => L => K => q and the Goursat construction of K.

The kernel of the Gel'fand-Levitan equation depends on one profile,

    L(x,y) = Lam(x+y) - Lam(x-y),
    Lam(z) = int_0^inf (1 - cos kz) d(k) dk + sum_j c_j (cosh(k_j z) - 1)/(2 k_j^2),

with d(k) = (rho'(k^2) - k/pi)/k = (1/|f(k)|^2 - 1)/pi. All grids here are
uniform, so L(x_i, y_j) = Lam(z_{i+j}) - Lam(z_{|i-j|}) is read off the
profile without interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DivergentTail, IterationDiverged, SingularOperator
from .quadrature import (_panel_edges, cumtrapz, deriv4, fit_tail, gauss_panels,
                         power_tail_integrals, symmetric_spline)
from .types import PotentialGrid, SpectralFunction, TransformationKernel, check_grid

COND_CAP = 1e12
PICARD_TOL = 1e-12
PICARD_MAXITER = 50


def _uniform(xs: np.ndarray, name: str = "xs") -> float:
    check_grid(xs, name, start_zero=True)
    h = xs[1] - xs[0]
    if not np.allclose(np.diff(xs), h, rtol=1e-9, atol=0):
        raise ValueError(f"{name} must be uniform")
    return float(h)


def _extrapolate_even(ks, vals):
    coef = np.polyfit(ks[1:4] ** 2, vals[1:4], 2)
    return float(np.polyval(coef, 0.0))


@dataclass(frozen=True)
class GLKernel:
    """Profile Lam(z) on z = 0, h, ..., 2X and the x-grid it serves."""

    xs: np.ndarray
    zs: np.ndarray
    profile: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """Symmetric matrix L(x_i, x_j)."""
        n = self.xs.size
        i = np.arange(n)
        return self.profile[i[:, None] + i[None, :]] - self.profile[np.abs(i[:, None] - i[None, :])]

    def __call__(self, x, y):
        spl = CubicSpline(self.zs, self.profile)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return spl(x + y) - spl(np.abs(x - y))


def _d_quadrature(ks, d, resonance: bool):
    """Gauss-Legendre nodes and weights times d(k) for int d(k) g(k) dk.

    Without a resonance d is smooth and even and is splined directly. With
    one, d ~ 1/k^2 at the origin and is interpolated through the bounded
    p(k) = d(k) k^2/(1+k^2). Also returns the c2/k^2 + c4/k^4 tail model.
    """
    pos = ks > 0
    nodes, weights = gauss_panels(_panel_edges(ks))
    if resonance:
        p = d * ks**2 / (1 + ks**2)
        if not pos.all():
            p[~pos] = _extrapolate_even(ks, p)
        wd = weights * symmetric_spline(ks, p, "even")(nodes) * (1 + nodes**2) / nodes**2
    else:
        d = d.copy()
        if not pos.all():
            d[~pos] = _extrapolate_even(ks, d)
        wd = weights * symmetric_spline(ks, d, "even")(nodes)
    return nodes, wd, fit_tail(ks[pos], d[pos], "even")


def _check_tail(ks, d):
    K = ks[-1]
    mid = np.searchsorted(ks, 0.5 * K)
    if abs(K * K * d[-1]) > 2.0 * abs(ks[mid] ** 2 * d[mid]) + 1e-12:
        raise DivergentTail("k^2 (rho' - k/pi)/k grows at the end of the grid")


def gl_profile(sf: SpectralFunction, zs, tail="fit") -> np.ndarray:
    """Lam(z) at the points ``zs`` from a spectral function.

    The continuous part is integrated on Gauss-Legendre panels with a fitted
    c2/k^2 + c4/k^4 tail of d beyond k_max; (1 - cos kz)/k^2 is evaluated as
    2 sin^2(kz/2)/k^2.

    Raises
    ------
    DivergentTail
        If k^2 d(k) grows over the upper half of the grid.
    """
    zs = np.asarray(zs, dtype=float)
    ks = np.sqrt(np.asarray(sf.lambdas))
    dens = np.asarray(sf.density, dtype=float)
    pos = ks > 0
    d = np.zeros(ks.size)
    d[pos] = (dens[pos] - ks[pos] / np.pi) / ks[pos]
    _check_tail(ks, d)
    out = np.zeros(zs.shape)
    if np.any(d):
        resonance = bool(ks[0] == 0 and not np.isfinite(dens[0]))
        nodes, fw, model = _d_quadrature(ks, d, resonance)
        flat = out.ravel()
        for i, z in enumerate(zs.ravel()):
            s = np.sin(0.5 * nodes * z)
            flat[i] = np.sum(fw * 2 * s * s)
        out = flat.reshape(zs.shape)
        if tail is not None:
            K = ks[-1]
            c2, c4 = model.coeffs
            C, _ = power_tail_integrals(zs, K, 4)
            out += c2 / K + c4 / (3 * K**3) - c2 * C[2] - c4 * C[4]
    for kj, cj in zip(sf.bound_ks, sf.weights):
        out += cj * (np.cosh(kj * zs) - 1) / (2 * kj * kj)
    return out


def gl_M(sf: SpectralFunction, zs) -> np.ndarray:
    """M(z) = (1/pi) int_0^inf (1/|f|^2 - 1) cos(kz) dk for data without bound states.

    Taken from the Gel'fand-Levitan side: L(x,y) = M(x-y) - M(x+y), so
    M(z) = M(0) - Lam(z), with M(0) from the same quadrature.
    """
    ks = np.sqrt(np.asarray(sf.lambdas))
    dens = np.asarray(sf.density, dtype=float)
    pos = ks > 0
    d = np.zeros(ks.size)
    d[pos] = (dens[pos] - ks[pos] / np.pi) / ks[pos]
    nodes, fw, model = _d_quadrature(ks, d, False)
    c2, c4 = model.coeffs
    K = ks[-1]
    M0 = np.sum(fw) + c2 / K + c4 / (3 * K**3)
    return M0 - gl_profile(sf, zs)


def build_L(sf: SpectralFunction, xs) -> GLKernel:
    """Gel'fand-Levitan kernel on the uniform grid ``xs`` starting at 0."""
    xs = np.asarray(xs, dtype=float)
    h = _uniform(xs)
    zs = h * np.arange(2 * xs.size - 1)
    return GLKernel(xs, zs, gl_profile(sf, zs))


def solve_gl(L: GLKernel, cond_cap: float = COND_CAP) -> TransformationKernel:
    """K(x,y) on 0 <= y <= x from K(x,y) + int_0^x K(x,s) L(s,y) ds + L(x,y) = 0.

    One trapezoid Nystrom solve per grid x.

    Raises
    ------
    SingularOperator
        If a Nystrom matrix is too ill conditioned.
    """
    xs = L.xs
    h = _uniform(xs)
    n = xs.size
    Lm = L.matrix
    vals = np.full((n, n), np.nan)
    vals[:, 0] = 0.0
    diag = np.zeros(n)
    for i in range(1, n):
        w = np.full(i + 1, h)
        w[0] = w[-1] = 0.5 * h
        # unknowns K(x_i, y_j), j = 0..i: K_j + sum_m w_m K_m L(y_m, y_j) = -L(x_i, y_j)
        M = np.eye(i + 1) + (Lm[: i + 1, : i + 1] * w[:, None]).T
        rhs = -Lm[i, : i + 1]
        cond = np.linalg.cond(M, 1) if i % 16 == 0 or i == n - 1 else 1.0
        if not np.isfinite(cond) or cond > cond_cap:
            raise SingularOperator(f"Gel'fand-Levitan operator at x = {xs[i]:.4g} is singular")
        sol = np.linalg.solve(M, rhs)
        vals[i, : i + 1] = sol
        diag[i] = sol[-1]
    return TransformationKernel(xs, vals, diag, "gl_K")


def gl_residual(K: TransformationKernel, L: GLKernel) -> float:
    """Max over the grid triangle of |K + int K L + L| with the trapezoid rule."""
    h = _uniform(K.xs)
    Lm = L.matrix
    V = np.where(np.isnan(K.values), 0.0, K.values)
    worst = 0.0
    for i in range(1, K.xs.size):
        w = np.full(i + 1, h)
        w[0] = w[-1] = 0.5 * h
        r = V[i, : i + 1] + (w * V[i, : i + 1]) @ Lm[: i + 1, : i + 1] + Lm[i, : i + 1]
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


def q_from_K(K: TransformationKernel) -> PotentialGrid:
    """q(x) = 2 d/dx K(x,x)."""
    return PotentialGrid(K.xs, 2.0 * deriv4(K.diagonal, K.xs))


def invert(sf: SpectralFunction, X: float = 5.0, dx: float = 0.01, full: bool = False):
    """Potential on [0, X] from a spectral function: rho => L => K => q."""
    xs = np.linspace(0.0, X, int(round(X / dx)) + 1)
    L = build_L(sf, xs)
    K = solve_gl(L)
    q = q_from_K(K)
    return (q, K, L) if full else q


def L_from_K(K: TransformationKernel) -> GLKernel:
    """Recover the profile Lam(z), z = 0, h, ..., 2X, from K by forward substitution.

    At grid x_i the equation at y = x_{i-1} is solved for Lam(z_{2i-1}) and
    the one at y = x_i for Lam(z_{2i}); all other profile values that occur
    are already known. Lam(z_1) is started from Lam(2x) = -K(x,x) + O(x^2)
    at x = h/2.
    """
    xs = K.xs
    h = _uniform(xs)
    n = xs.size
    V = np.where(np.isnan(K.values), 0.0, K.values)
    lam = np.zeros(2 * n - 1)
    if n < 2:
        return GLKernel(xs, h * np.arange(1), lam)
    half = np.interp(0.5 * h, xs, K.diagonal)
    lam[1] = -half

    def solve_for(i, j, top):
        # sum over s = x_m, m = 0..i with trapezoid weights
        w = np.full(i + 1, h)
        w[0] = w[-1] = 0.5 * h
        m = np.arange(i + 1)
        plus = m + j
        minus = np.abs(m - j)
        known = lam.copy()
        known[top] = 0.0
        integ = np.sum(w * V[i, : i + 1] * (known[plus] - known[minus]))
        rest = V[i, j] + integ - known[abs(i - j)]
        coef = 1.0 + w[-1] * V[i, i] if i + j == top else 1.0
        # Lam(z_top) enters through L(x_i, y_j) and the s = x_i node
        return -rest / coef

    for i in range(1, n):
        if i >= 2:
            lam[2 * i - 1] = solve_for(i, i - 1, 2 * i - 1)
        lam[2 * i] = solve_for(i, i, 2 * i)
    return GLKernel(xs, h * np.arange(2 * n - 1), lam)


def goursat_kernel(q: PotentialGrid, X: float | None = None, dx: float | None = None,
                   tol: float = PICARD_TOL, maxiter: int = PICARD_MAXITER) -> TransformationKernel:
    """Transformation kernel K(x,y), 0 <= y <= x <= X, directly from q.

    In xi = x + y, eta = x - y the kernel B(xi, eta) = K(x, y) solves

        B = 1/4 int_eta^xi q(s/2) ds
            + 1/4 int_eta^xi int_0^eta q((s+t)/2) B(s,t) dt ds,

    which is iterated from B_0 (the first term, from the antiderivative of
    the spline of q) with the double integral by cumulative trapezoid sums.

    Raises
    ------
    IterationDiverged
        If the successive differences do not fall below ``tol``.
    """
    X = float(q.xs[-1]) if X is None else X
    dx = float(np.median(q.dx)) if dx is None else dx
    n = int(round(X / dx)) + 1
    xs = np.linspace(0.0, X, n)
    h = xs[1] - xs[0]
    m = 2 * n - 1
    grid = h * np.arange(m)  # xi and eta
    anti = CubicSpline(q.xs, q.qs).antiderivative()
    Q0 = anti(0.5 * grid) - anti(0.0)  # int_0^xi q(s/2) ds = 2 Q(xi/2)
    B0 = 0.5 * (Q0[:, None] - Q0[None, :])
    # q((s+t)/2) on the (s, t) grid, restricted to s + t <= 2X
    S, T = np.meshgrid(grid, grid, indexing="ij")
    inside = (T <= S + 1e-12) & (S + T <= 2 * X + 1e-9)
    qst = np.where(inside, q(np.minimum(0.5 * (S + T), q.xs[-1])), 0.0)
    B = np.where(inside, B0, 0.0)
    for it in range(maxiter):
        g = qst * B
        G = cumtrapz(g, grid, axis=1)  # G[s, eta] = int_0^eta g(s, t) dt
        C = cumtrapz(G, grid, axis=0)  # C[xi, eta] = int_0^xi G(s, eta) ds
        Bn = B0 + 0.25 * (C - np.diagonal(C)[None, :])
        Bn = np.where(inside, Bn, 0.0)
        diff = np.max(np.abs(Bn - B))
        B = Bn
        if not np.isfinite(diff):
            raise IterationDiverged("Goursat iteration produced non-finite values")
        if diff <= tol * max(1.0, np.max(np.abs(B))):
            break
    else:
        raise IterationDiverged(f"Goursat iteration did not converge in {maxiter} steps")
    i = np.arange(n)
    I, J = np.meshgrid(i, i, indexing="ij")
    vals = np.where(J <= I, B[np.minimum(I + J, m - 1), np.abs(I - J)], np.nan)
    return TransformationKernel(xs, vals, np.diagonal(vals).copy(), "gl_K")
