"""Fixed-energy (k = 1) partial waves, phase shifts and the radius of support.

For each l the regular solution phi_l = u_l + int_0^r [u_l(s) v_l(r) - u_l(r) v_l(s)] q phi_l ds
is marched on [0, a] and the physical solution is psi_l = phi_l / (1 + int w_l q phi_l).
With A = int u_l q phi_l and B = 1 - int v_l q phi_l this gives

    a_l = -int u_l q psi_l = -A / (B + iA),   tan(delta_l) = -A / B.

For large l the solution is carried as eta = phi_l / u_l, which stays near 1,
and A is accumulated from logarithms of u_l, so phase shifts far below the
rounding level of O(1) quantities are still resolved.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.special import i0e

from .errors import IterationDiverged, Underflow
from .quadrature import cumtrapz
from .types import PhaseShiftSequence, PotentialGrid, TransformationKernel

L_MAX = 40
N_GRID = 2000
TINY = 1e-300
_RESCALE = 1e200


# -- Riccati-Bessel functions ---------------------------------------------------

@dataclass(frozen=True)
class RiccatiBessel:
    """u_l = r j_l(r) and v_l = r y_l(r) for l = 0..L on a grid, in log form.

    ``logu``, ``logv`` hold log|u_l|, log|v_l| (shape (L+1, n)); ``su``, ``sv``
    the signs. ``P`` = u_l v_l, which is O(1/l) and never overflows.
    """

    rs: np.ndarray
    logu: np.ndarray
    su: np.ndarray
    logv: np.ndarray
    sv: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return self.su * np.exp(self.logu)

    @property
    def v(self) -> np.ndarray:
        return self.sv * np.exp(self.logv)

    @property
    def P(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            out = self.su * self.sv * np.exp(self.logu + self.logv)
        out[:, self.rs == 0] = 0.0
        return out

    def w(self) -> np.ndarray:
        """w_l = i u_l - v_l (outgoing Riccati-Hankel)."""
        return 1j * self.u - self.v


def _miller_j(L: int, r: np.ndarray):
    """log|j_l(r)| and sign for l = 0..L by downward recurrence, normalized by j_0 or j_1."""
    N = L + int(np.max(r)) + 40
    m_hi = np.zeros_like(r)
    m = np.full_like(r, 1e-30)
    off = np.zeros_like(r)
    M = np.empty((L + 2, r.size))
    O = np.empty((L + 2, r.size))
    for n in range(N, 0, -1):
        # j_{n-1} = (2n+1)/r j_n - j_{n+1}
        m_lo = (2 * n + 1) / r * m - m_hi
        m_hi, m = m, m_lo
        big = np.abs(m) > _RESCALE
        if np.any(big):
            m = np.where(big, m / _RESCALE, m)
            m_hi = np.where(big, m_hi / _RESCALE, m_hi)
            off = off + np.where(big, np.log(_RESCALE), 0.0)
        k = n - 1
        if k <= L + 1:
            M[k] = m
            O[k] = off
    j0 = np.sin(r) / r
    j1 = np.sin(r) / r**2 - np.cos(r) / r
    use0 = np.abs(j0) >= np.abs(j1)
    ref = np.where(use0, j0, j1)
    Mref = np.where(use0, M[0], M[1])
    Oref = np.where(use0, O[0], O[1])
    c = np.log(np.abs(ref)) - np.log(np.abs(Mref)) - Oref
    s = np.sign(ref) * np.sign(Mref)
    with np.errstate(divide="ignore"):
        logj = np.log(np.abs(M[: L + 1])) + O[: L + 1] + c
    return logj, np.sign(M[: L + 1]) * s


def _upward_y(L: int, r: np.ndarray):
    """log|y_l(r)| and sign by upward recurrence with rescaling."""
    y_prev = -np.cos(r) / r
    y = -np.cos(r) / r**2 - np.sin(r) / r
    off = np.zeros_like(r)
    logy = np.empty((L + 1, r.size))
    sy = np.empty((L + 1, r.size))
    with np.errstate(divide="ignore"):
        logy[0], sy[0] = np.log(np.abs(y_prev)), np.sign(y_prev)
        if L >= 1:
            logy[1], sy[1] = np.log(np.abs(y)), np.sign(y)
        for n in range(1, L):
            y_next = (2 * n + 1) / r * y - y_prev
            y_prev, y = y, y_next
            big = np.abs(y) > _RESCALE
            if np.any(big):
                y = np.where(big, y / _RESCALE, y)
                y_prev = np.where(big, y_prev / _RESCALE, y_prev)
                off = off + np.where(big, np.log(_RESCALE), 0.0)
            logy[n + 1] = np.log(np.abs(y)) + off
            sy[n + 1] = np.sign(y)
    return logy, sy


def riccati_bessel(L: int, rs) -> RiccatiBessel:
    """Riccati-Bessel functions u_l, v_l, l = 0..L, at the points ``rs`` (r >= 0)."""
    rs = np.asarray(rs, dtype=float)
    logu = np.full((L + 1, rs.size), -np.inf)
    logv = np.full((L + 1, rs.size), np.inf)
    su = np.zeros((L + 1, rs.size))
    sv = -np.ones((L + 1, rs.size))
    pos = rs > 0
    r = rs[pos]
    if r.size:
        lj, sj = _miller_j(L, r)
        ly, sy = _upward_y(L, r)
        logu[:, pos] = lj + np.log(r)
        su[:, pos] = sj
        logv[:, pos] = ly + np.log(r)
        sv[:, pos] = sy
    logv[0, ~pos] = 0.0  # v_0(0) = -1
    return RiccatiBessel(rs, logu, su, logv, sv)


# -- forward problem -------------------------------------------------------------

def _radial_grid(q: PotentialGrid, n: int):
    a = q.support_radius if q.support_radius is not None else float(q.xs[-1])
    a = min(a, float(q.xs[-1])) if q.decay_class != "compact" else a
    if q.is_uniform and q.xs.size - 1 >= n and abs(q.xs[-1] - a) < 1e-12 * max(a, 1.0):
        return q.xs, np.asarray(q.qs)
    rs = np.linspace(0.0, a, n + 1)
    return rs, q(rs)


def _first_zero_bound(ell: int) -> float:
    """Lower bound for the first positive zero of u_l."""
    nu = ell + 0.5
    return nu + 1.85 * nu ** (1 / 3) if ell > 0 else np.pi


@dataclass(frozen=True)
class PartialWave:
    """Per-l integrals and the ratio psi_l/u_l (or phi_l for small l)."""

    ell: int
    A_log: float
    A_sign: float
    B: float
    eta: np.ndarray | None = field(default=None, repr=False)


def _solve_direct(rs, w, u, v, q):
    """phi on the grid for one l by explicit trapezoid march (kernel vanishes on the diagonal)."""
    n = rs.size
    phi = np.empty(n)
    phi[0] = u[0]
    g = np.zeros(n)  # w q phi
    for i in range(1, n):
        phi[i] = u[i] + v[i] * np.dot(u[:i], g[:i]) - u[i] * np.dot(v[:i], g[:i])
        g[i] = w[i] * q[i] * phi[i]
    return phi


def _solve_ratio(rs, w, logu, P, q):
    """eta = phi/u with kernel (u_s/u_r)^2 P(r) - P(s) for all rows at once."""
    nl, n = logu.shape
    eta = np.ones((nl, n))
    G = np.zeros((nl, n))  # w q eta at nodes done so far
    for i in range(1, n):
        ratio = np.exp(2 * (logu[:, :i] - logu[:, i : i + 1]))
        eta[:, i] = 1 + P[:, i] * np.sum(ratio * G[:, :i], axis=1) - np.sum(P[:, :i] * G[:, :i], axis=1)
        G[:, i] = w[i] * q[i] * eta[:, i]
    return eta


def partial_wave_forward(q: PotentialGrid, L: int = L_MAX, n: int = N_GRID,
                         return_waves: bool = False):
    """Phase shifts delta_l, l = 0..L, at k = 1 for a compactly supported q.

    Parameters
    ----------
    q : PotentialGrid
        Potential on [0, a]; the march runs over the support (or the grid).
    L : int
        Largest angular momentum.
    n : int
        Number of intervals of the radial grid when ``q`` is resampled.
    return_waves : bool
        Also return the list of :class:`PartialWave` records.
    """
    rs, qs = _radial_grid(q, n)
    h = np.diff(rs)
    w = np.zeros(rs.size)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    # march weights: the kernel vanishes on the diagonal, so node j < i
    # carries its full trapezoid share and the current node none
    wm = np.zeros(rs.size)
    wm[1:] = h
    wm[1:-1] = 0.5 * (h[:-1] + h[1:])
    wm[0] = 0.5 * h[0]
    a = rs[-1]
    rb = riccati_bessel(L, rs)
    ells = np.arange(L + 1)
    direct = [l for l in ells if _first_zero_bound(l) <= 1.05 * a + 1.0]
    ratio = [l for l in ells if l not in direct]
    waves = {}
    if direct:
        u_all = rb.u
        # v_l(0) is infinite for l > 0 but always meets q phi(0) = 0
        v_all = np.where(np.isfinite(rb.v), rb.v, 0.0)
        for l in direct:
            phi = _solve_direct(rs, wm, u_all[l], v_all[l], qs)
            A = float(np.sum(w * u_all[l] * qs * phi))
            B = 1.0 - float(np.sum(w * v_all[l] * qs * phi))
            waves[l] = PartialWave(l, np.log(abs(A)) if A != 0 else -np.inf, np.sign(A), B, phi)
    if ratio:
        idx = np.array(ratio)
        logu = rb.logu[idx]
        P = rb.P[idx]
        P[:, 0] = 0.0
        eta = _solve_ratio(rs, wm, np.where(np.isfinite(logu), logu, -1e300), P, qs)
        for row, l in enumerate(ratio):
            lu = logu[row]
            top = np.max(lu[np.isfinite(lu)])
            vals = w * np.exp(2 * (lu - top)) * qs * eta[row]
            s = float(np.sum(vals))
            B = 1.0 - float(np.sum(w * P[row] * qs * eta[row]))
            logA = 2 * top + np.log(abs(s)) if s != 0 else -np.inf
            waves[l] = PartialWave(l, logA, np.sign(s), B, eta[row])
    deltas = np.empty(L + 1)
    for l in ells:
        pw = waves[l]
        if not np.isfinite(pw.A_log):
            deltas[l] = 0.0
            continue
        if pw.A_log < np.log(1e-8):
            deltas[l] = -pw.A_sign * np.exp(pw.A_log - np.log(abs(pw.B))) * np.sign(pw.B)
        else:
            A = pw.A_sign * np.exp(pw.A_log)
            deltas[l] = np.arctan(-A / pw.B)
    a_ells = np.exp(1j * deltas) * np.sin(deltas)
    ps = PhaseShiftSequence(ells, deltas, a_ells)
    return (ps, [waves[l] for l in ells]) if return_waves else ps


def asymptotic_a(q: PotentialGrid, ells, n: int = N_GRID) -> np.ndarray:
    """Leading large-l amplitude -int q r^{2l+2} dr (e/(2l+1))^{2l+1}/(4l+2)."""
    rs, qs = _radial_grid(q, n)
    out = []
    for l in np.atleast_1d(ells):
        with np.errstate(divide="ignore"):
            lg = (2 * l + 2) * np.log(rs)
        top = lg[-1]
        integ = np.trapezoid(qs * np.exp(lg - top), rs)
        logpref = (2 * l + 1) * (1 - np.log(2 * l + 1)) - np.log(4 * l + 2)
        out.append(-np.sign(integ) * np.exp(top + logpref + np.log(abs(integ))) if integ else 0.0)
    return np.array(out)


# -- radius of support -------------------------------------------------------------

@dataclass(frozen=True)
class RadiusEstimate:
    """Extrapolated radius with the raw tail and diagnostics.

    ``a_hat`` comes from ``method``; ``richardson`` is the fit
    t_l = a (1 + c/l) and ``log_fit`` the fit that also models the
    power-of-l prefactor. ``tail_std`` is the spread of the raw t_l in the
    fitted range and ``usable`` the range of l with resolvable |delta_l|.
    """

    a_hat: float
    method: str
    ells: np.ndarray
    t: np.ndarray
    richardson: float
    log_fit: float
    tail_std: float
    usable: tuple


def radius_estimate(ps: PhaseShiftSequence, l_min: int = 10, method: str = "log") -> RadiusEstimate:
    """Radius of support from t_l = ((2l+1)/e) |delta_l|^(1/2l).

    The raw sequence approaches a like 1 - O(log l / l). The default
    ``method='log'`` fits

        log|delta_l| = 2l log a + (2l+1) log(e/(2l+1)) - log(4l+2) + C - p log l

    over the tail, which absorbs the edge behaviour of q into (C, p).
    ``method='richardson'`` fits t_l = a (1 + c/l).

    Raises
    ------
    Underflow
        If fewer than four l >= ``l_min`` have resolvable phase shifts.
    """
    ells = np.asarray(ps.ells)
    d = np.abs(np.asarray(ps.deltas))
    ok = (ells >= 1) & np.isfinite(d) & (d > TINY)
    if not ok.any():
        raise Underflow("no nonzero phase shifts; the radius is undefined")
    # usable: contiguous run from l = 1 while |delta| is resolvable
    bad = np.nonzero(~ok & (ells >= 1))[0]
    top = ells[bad[0]] - 1 if bad.size else ells[-1]
    usable = (1, int(top))
    sel = ok & (ells >= l_min) & (ells <= top)
    if np.count_nonzero(sel) < 4:
        raise Underflow(f"only l in [{usable[0]}, {usable[1]}] are resolvable; "
                        f"need at least four values with l >= {l_min}")
    l = ells[sel].astype(float)
    ld = np.log(d[sel])
    t = (2 * l + 1) / np.e * np.exp(ld / (2 * l))
    X = np.column_stack([np.ones_like(l), 1 / l])
    coef, *_ = np.linalg.lstsq(X, t, rcond=None)
    rich = float(coef[0])
    base = (2 * l + 1) * (1 - np.log(2 * l + 1)) - np.log(4 * l + 2)
    X2 = np.column_stack([2 * l, np.ones_like(l), -np.log(l)])
    c2, *_ = np.linalg.lstsq(X2, ld - base, rcond=None)
    logfit = float(np.exp(c2[0]))
    if method not in ("log", "richardson"):
        raise ValueError("method must be 'log' or 'richardson'")
    a_hat = logfit if method == "log" else rich
    return RadiusEstimate(a_hat, method, l.astype(int), t, rich, logfit, float(np.std(t)), usable)


# -- transformation kernel ---------------------------------------------------------

@dataclass(frozen=True)
class FixedEnergyKernel:
    """K(r, rho) on a uniform r-grid plus the solution L(xi, eta) it came from."""

    kernel: TransformationKernel
    xi: np.ndarray
    eta: np.ndarray
    L: np.ndarray
    gamma: float
    iterations: int


def _mu1(q: PotentialGrid, xi):
    """mu_1(xi) = int_{-inf}^xi e^s (1 + |q(e^{s/2})|)/2 ds = (e^xi + 2 int_0^{e^{xi/2}} s|q|)/2."""
    rs = np.exp(0.5 * np.asarray(xi))
    grid = np.linspace(0.0, max(float(np.max(rs)), 1e-12), 4001)
    cum = cumtrapz(grid * np.abs(q(grid)), grid)
    return 0.5 * (rs**2 + 2 * np.interp(rs, grid, cum))


def growth_bound_ratio(res: FixedEnergyKernel, q: PotentialGrid) -> float:
    """max |L| / (c0 I_0(2 sqrt(eta mu_1(xi + eta)))), c0 = (1/2) int s|q|.

    Iterating |L| <= c0 + W|L| gives this Bessel-function bound, whose
    growth is exp(2 [eta mu_1]^(1/2)). Values <= 1 (up to discretization)
    mean the computed kernel obeys it.
    """
    rs = np.linspace(0.0, float(q.xs[-1]), 4001)
    c0 = 0.5 * np.trapezoid(rs * np.abs(q(rs)), rs)
    if c0 == 0:
        return 0.0
    XI, ETA = np.meshgrid(res.xi, res.eta, indexing="ij")
    z = 2 * np.sqrt(ETA * _mu1(q, XI + ETA))
    log_bound = np.log(c0) + np.log(i0e(z)) + z
    with np.errstate(divide="ignore"):
        return float(np.exp(np.max(np.log(np.abs(res.L) + 1e-300) - log_bound)))


def _first_moment(q: PotentialGrid, r) -> np.ndarray:
    """int_0^r s q(s) ds, exact for piecewise-linear q (zero past the grid)."""
    xs = np.asarray(q.xs, dtype=float)
    qs = np.asarray(q.qs, dtype=float)
    slope = np.diff(qs) / np.diff(xs)
    # exact cell integrals of s*(q_j + m (s - x_j))
    h = np.diff(xs)
    cell = qs[:-1] * (xs[1:] ** 2 - xs[:-1] ** 2) / 2 + slope * h**2 * (2 * xs[1:] + xs[:-1]) / 6
    cum = np.concatenate([[0.0], np.cumsum(cell)])
    r = np.clip(np.asarray(r, dtype=float), xs[0], xs[-1])
    j = np.clip(np.searchsorted(xs, r, side="right") - 1, 0, xs.size - 2)
    t = r - xs[j]
    part = qs[j] * (r**2 - xs[j] ** 2) / 2 + slope[j] * t**2 * (2 * r + xs[j]) / 6
    return cum[j] + part


def fixed_energy_kernel(q: PotentialGrid, R: float | None = None, n_r: int = 201,
                        rho_min: float = 1e-3, h: float = 0.01, xi_depth: float = 20.0,
                        tol: float = 1e-12, maxiter: int = 200,
                        gamma: float | None = None) -> FixedEnergyKernel:
    """Transformation kernel K(r, rho) of the fixed-energy problem.

    In xi = ln r + ln rho, eta = ln r - ln rho the function L = K e^{-xi/2}
    solves L = b - int_{-inf}^xi ds int_0^eta dt Q(s,t) L(s,t), which is
    iterated on a rectangle of the (xi, eta) plane with cumulative trapezoid
    sums; the lower xi limit is cut at 2 ln R - ``xi_depth``. Convergence is
    measured in the norm sup e^{-gamma eta}|L|; when the successive
    differences stop contracting, gamma is doubled.

    Raises
    ------
    IterationDiverged
        If no convergence within ``maxiter`` steps.
    """
    R = float(q.xs[-1]) if R is None else R
    xi_max = 2 * np.log(R)
    eta_max = np.log(1.0 / rho_min)
    xi = np.linspace(xi_max - xi_depth, xi_max, int(round(xi_depth / h)) + 1)
    eta = np.linspace(0.0, eta_max, int(round(eta_max / h)) + 1)
    S, T = np.meshgrid(xi, eta, indexing="ij")
    rr = np.exp(0.5 * (S + T))
    Q = 0.25 * (np.exp(S + T) * (1 - q(rr)) - np.exp(S - T))
    Q = np.where(S + T <= xi_max + 1e-9, Q, 0.0)
    # b(xi) = (1/2) int_0^{e^{xi/2}} s q(s) ds
    rg = np.asarray(q.xs)
    b = 0.5 * _first_moment(q, np.exp(0.5 * xi))
    b0 = np.repeat(b[:, None], eta.size, axis=1)
    if gamma is None:
        gamma = 2 * np.exp(xi_max) + 2 * np.trapezoid(rg * np.abs(q.qs), rg) + 1.0
    weight = np.exp(-gamma * eta)[None, :]
    L = b0.copy()
    prev = None
    for it in range(1, maxiter + 1):
        G = cumtrapz(Q * L, eta, axis=1)
        V = -cumtrapz(G, xi, axis=0)
        Ln = b0 + V
        step = np.abs(Ln - L)
        diff = float(np.max(step * weight))
        L = Ln
        if not np.isfinite(diff):
            raise IterationDiverged("fixed-energy kernel iteration produced non-finite values")
        if float(np.max(step)) <= tol * max(1.0, float(np.max(np.abs(L)))):
            break
        if prev is not None and diff > prev and it > 5:
            gamma *= 2
            weight = np.exp(-gamma * eta)[None, :]
        prev = diff
    else:
        raise IterationDiverged(f"no convergence in {maxiter} iterations (gamma = {gamma:.3g})")
    # back to (r, rho) on a uniform r-grid
    rs = np.linspace(0.0, R, n_r)
    spl = RectBivariateSpline(xi, eta, L * np.exp(0.5 * xi)[:, None], kx=3, ky=3)
    vals = np.full((n_r, n_r), np.nan)
    vals[:, 0] = 0.0
    vals[0, 0] = 0.0
    for i in range(1, n_r):
        rho = rs[1 : i + 1]
        x = np.log(rs[i]) + np.log(rho)
        e = np.log(rs[i]) - np.log(rho)
        inside = (e <= eta_max) & (x >= xi[0])
        row = np.zeros(rho.size)
        row[inside] = spl.ev(x[inside], e[inside])
        vals[i, 1 : i + 1] = row
    diag = 0.5 * rs * _first_moment(q, rs)
    # the spline smears the kink of q on y = x; the boundary value is known
    vals[np.arange(n_r), np.arange(n_r)] = diag
    K = TransformationKernel(rs, vals, diag, "fixed_energy_K")
    return FixedEnergyKernel(K, xi, eta, L, float(gamma), it)
