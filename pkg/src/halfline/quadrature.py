"""Quadrature kernels shared by all solvers.

The oscillatory transforms and principal-value integrals here work on data
sampled on a finite grid [0, K] of a function with known parity on the real
axis. Inside the grid the data are interpolated by a cubic spline built on
the mirrored grid (so the spline respects the parity at k = 0) and
integrated with Gauss-Legendre rules panel by panel. Beyond K a two-term
asymptotic model, odd powers for odd data and even powers for even data, is
fitted to the upper half of the grid and integrated in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import sici

from .errors import MalformedGrid, TailNotResolved

_GL_ORDER = 4
_CHUNK = 2_000_000  # max matrix entries per vectorized block


# -- grids and splines -------------------------------------------------------

def symmetric_spline(ks: np.ndarray, vals: np.ndarray, parity: str) -> CubicSpline:
    """Cubic spline of ``vals`` on the grid mirrored to negative k.

    Parameters
    ----------
    ks : ndarray
        Increasing non-negative grid.
    vals : ndarray
        Real samples.
    parity : {'even', 'odd'}
        Symmetry used to extend the data to ``-ks``.
    """
    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(vals, dtype=float)
    sign = 1.0 if parity == "even" else -1.0
    if ks[0] == 0.0:
        v = vals.copy()
        if parity == "odd":
            v[0] = 0.0
        grid = np.concatenate([-ks[:0:-1], ks])
        data = np.concatenate([sign * v[:0:-1], v])
    else:
        grid = np.concatenate([-ks[::-1], ks])
        data = np.concatenate([sign * vals[::-1], vals])
    return CubicSpline(grid, data)


def gauss_panels(edges: np.ndarray, order: int = _GL_ORDER):
    """Gauss-Legendre nodes and weights on each panel between ``edges``."""
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _panel_edges(ks: np.ndarray) -> np.ndarray:
    return ks if ks[0] == 0.0 else np.concatenate([[0.0], ks])


# -- asymptotic tail model ---------------------------------------------------

@dataclass(frozen=True)
class TailModel:
    """Two-term power model c_a / k**p_a + c_b / k**p_b valid for k >= K."""

    K: float
    powers: tuple
    coeffs: tuple
    residual: float

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        return sum(c * k ** (-p) for c, p in zip(self.coeffs, self.powers))


def fit_tail(ks: np.ndarray, vals: np.ndarray, parity: str) -> TailModel:
    """Fit the two-term power model to the upper half [K/2, K] of the data.

    The fit is weighted to equalize relative residuals and is forced through
    the last sample so the interior spline and the tail join continuously at
    ``K = ks[-1]``.
    """
    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(vals, dtype=float)
    K = ks[-1]
    p1, p2 = (1, 3) if parity == "odd" else (2, 4)
    sel = ks >= 0.5 * K
    if np.count_nonzero(sel) < 4:
        sel = slice(-min(ks.size, 8), None)
    k, v = ks[sel], vals[sel]
    vK = vals[-1]
    # v ~ c1 k^-p1 + c2 k^-p2 with c1 = K^p1 (vK - c2 K^-p2), weighted by k^p1
    wt = k**p1
    basis = (k ** (-p2) - (K / k) ** p1 * K ** (-p2)) * wt
    rhs = (v - vK * (K / k) ** p1) * wt
    denom = float(basis @ basis)
    c2 = float(basis @ rhs) / denom if denom > 0 else 0.0
    c1 = K**p1 * (vK - c2 * K ** (-p2))
    model = c1 * k ** (-p1) + c2 * k ** (-p2)
    scale = max(np.max(np.abs(v)), 1e-300)
    res = float(np.max(np.abs(model - v)) / scale)
    return TailModel(float(K), (p1, p2), (float(c1), float(c2)), res)


def _check_decay(vals: np.ndarray, tail_tol: float) -> None:
    scale = np.max(np.abs(vals))
    if scale > 0 and abs(vals[-1]) > tail_tol * scale:
        raise TailNotResolved(
            f"integrand is {abs(vals[-1]):.3e} at the grid end (tolerance "
            f"{tail_tol:.1e} of max); supply a tail model"
        )


# -- exact tail integrals of power laws --------------------------------------

def power_tail_integrals(x: np.ndarray, K: float, nmax: int, right_limit: bool = False):
    """Return arrays ``C[n], S[n]`` with the integrals over k in [K, inf) of
    cos(kx)/k**n and sin(kx)/k**n for n = 1..nmax.

    ``C[1]`` diverges at x = 0 and is returned as ``inf`` there. At x = 0 the
    sine integral with n = 1 is 0, or pi/2 (its limit from x > 0) when
    ``right_limit`` is set.
    """
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    sgn = np.where(x < 0, -1.0, 1.0)
    C = np.zeros((nmax + 1,) + x.shape)
    S = np.zeros((nmax + 1,) + x.shape)
    pos = ax > 0
    si, ci = sici(K * ax[pos])
    c1 = np.full(x.shape, np.inf)
    s1 = np.zeros(x.shape)
    c1[pos] = -ci
    s1[pos] = np.pi / 2 - si
    if right_limit:
        s1[~pos] = np.pi / 2
    C[1], S[1] = c1, s1
    cK, sK = np.cos(K * ax), np.sin(K * ax)
    for n in range(1, nmax):
        cn = np.where(pos, C[n], 0.0)
        C[n + 1] = (cK / K**n - ax * S[n]) / n
        S[n + 1] = (sK / K**n + ax * cn) / n
    S *= sgn
    return C, S


# -- oscillatory transforms --------------------------------------------------

def oscillatory_transform(ks, vals, xs, kind: str = "cos", parity: str | None = None,
                          tail: str | TailModel | None = "fit", tail_tol: float = 1e-8,
                          right_limit: bool = False) -> np.ndarray:
    """Integral over k in [0, inf) of ``vals(k) * cos(k x)`` (or sin).

    Parameters
    ----------
    ks, vals : ndarray
        Samples on an increasing grid starting at or above zero.
    xs : ndarray
        Evaluation points, any sign.
    kind : {'cos', 'sin'}
    parity : {'even', 'odd'}, optional
        Parity of the data used for the spline and the tail model. Defaults
        to even for cosine and odd for sine transforms.
    tail : 'fit', TailModel or None
        How to treat k > K. With None the data must already have decayed.
    right_limit : bool
        Return the limit from x > 0 at x = 0 (matters for 1/k tails).
    """
    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(vals, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if ks.ndim != 1 or vals.shape != ks.shape:
        raise MalformedGrid("ks and samples must be 1-D of equal length")
    if np.any(np.diff(ks) <= 0) or ks[0] < 0:
        raise MalformedGrid("ks must be strictly increasing and non-negative")
    if parity is None:
        parity = "even" if kind == "cos" else "odd"
    if not np.any(vals):
        return np.zeros_like(xs)
    spline = symmetric_spline(ks, vals, parity)
    nodes, weights = gauss_panels(_panel_edges(ks))
    fw = weights * spline(nodes)
    trig = np.cos if kind == "cos" else np.sin
    flat = xs.ravel()
    out = np.empty(flat.size)
    step = max(1, _CHUNK // nodes.size)
    for i in range(0, flat.size, step):
        blk = flat[i:i + step]
        out[i:i + step] = trig(np.outer(blk, nodes)) @ fw
    out = out.reshape(xs.shape)
    if tail is None:
        _check_decay(vals, tail_tol)
        return out
    model = fit_tail(ks, vals, parity) if isinstance(tail, str) else tail
    C, S = power_tail_integrals(xs, model.K, max(model.powers), right_limit)
    T = C if kind == "cos" else S
    for c, p in zip(model.coeffs, model.powers):
        if c != 0.0:
            if kind == "cos" and p == 1:
                raise TailNotResolved("cosine transform of a 1/k tail diverges at x = 0")
            out = out + c * T[p]
    return out


# -- principal-value Cauchy integrals ----------------------------------------

def _tail_I_over(j: int, k: np.ndarray, K: float) -> np.ndarray:
    """I_j(k)/k where I_j is the integral over [K, inf) of 2k/(t^(2j)(t^2-k^2)), k <= K/2."""
    z2 = (k / K) ** 2
    total = np.zeros_like(k)
    term = np.ones_like(k)
    for n in range(60):
        total += term / (2 * j + 2 * n + 1)
        term = term * z2
    return 2.0 * total / K ** (2 * j + 1)


def hilbert_half_line(ks, vals, parity: str, targets=None, tail: str | None = "fit") -> np.ndarray:
    """Principal value over the whole real axis of h(t)/(t - k).

    ``h`` is given on [0, K] and extended by ``parity``. The singularity is
    removed by subtracting h(k) (folded to [0, inf) this is exact because the
    principal value of the integral of 1/(t^2 - k^2) over t > 0 vanishes).
    Targets must lie in [0, K].
    """
    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(vals, dtype=float)
    targets = ks if targets is None else np.asarray(targets, dtype=float)
    K = ks[-1]
    spline = symmetric_spline(ks, vals, parity)
    dspline = spline.derivative()
    nodes, weights = gauss_panels(_panel_edges(ks))
    hn = spline(nodes)
    hk = spline(targets)
    dk = dspline(targets)
    out = np.empty(targets.size)
    step = max(1, _CHUNK // nodes.size)
    for i in range(0, targets.size, step):
        k = targets[i:i + step, None]
        t = nodes[None, :]
        den = t * t - k * k
        if parity == "odd":
            num = 2 * t * hn[None, :] - 2 * k * hk[i:i + step, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = (hk[i:i + step, None] + k * dk[i:i + step, None]) / k
        else:
            num = 2 * k * (hn[None, :] - hk[i:i + step, None])
            lim = np.broadcast_to(dk[i:i + step, None], den.shape)
        close = np.abs(t - k) < 1e-9 * max(K, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = np.where(close, lim, num / np.where(close, 1.0, den))
        out[i:i + step] = integrand @ weights
    if tail is None:
        return out
    model = fit_tail(ks, vals, parity)
    c_a, c_b = model.coeffs
    z = targets / K
    split = z <= 0.5
    tl = np.zeros_like(targets)
    k = targets[split]
    if parity == "odd":
        tl[split] = c_a * _tail_I_over(0, k, K) + c_b * _tail_I_over(1, k, K) \
            - hk[split] * k * _tail_I_over(0, k, K)
    else:
        tl[split] = k * (c_a * _tail_I_over(1, k, K) + c_b * _tail_I_over(2, k, K)
                         - hk[split] * _tail_I_over(0, k, K))
    k = targets[~split]
    d = hk[~split] - model(k)
    zz = np.minimum(z[~split], 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        I0 = np.where(zz < 1 - 1e-12, 2 * np.arctanh(zz), 0.0)
    if parity == "odd":
        tl[~split] = -2 * c_b / (k * k * K) - d * I0
    else:
        tl[~split] = -2 * c_a / (k * K) - 2 * c_b * (k * k / (3 * K**3) + 1 / K) / k**3 - d * I0
    return out + tl


def cauchy_imaginary_axis(ks, vals, parity: str, kappa: float, n_tail: int = 64) -> float:
    """Integral over the real axis of h(t)/(t - i kappa) for kappa > 0.

    No principal value is needed off the axis; the tail beyond K uses the
    fitted power model under the substitution t = K/u.
    """
    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(vals, dtype=float)
    spline = symmetric_spline(ks, vals, parity)
    nodes, weights = gauss_panels(_panel_edges(ks))
    hn = spline(nodes)
    model = fit_tail(ks, vals, parity)
    u, wu = np.polynomial.legendre.leggauss(n_tail)
    u = 0.5 * (u + 1)
    wu = 0.5 * wu
    tn = model.K / u
    tw = wu * model.K / u**2
    hT = model(tn)
    t_all = np.concatenate([nodes, tn])
    w_all = np.concatenate([weights, tw])
    h_all = np.concatenate([hn, hT])
    if parity == "odd":
        return complex(np.sum(w_all * h_all * 2 * t_all / (t_all**2 + kappa**2)))
    return complex(np.sum(w_all * h_all * 2j * kappa / (t_all**2 + kappa**2)))


# -- differentiation and cumulative integrals --------------------------------

def deriv4(y: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Fourth-order finite-difference derivative on a uniform grid.

    Falls back to second-order differences on nonuniform or short grids.
    """
    y = np.asarray(y, dtype=float)
    xs = np.asarray(xs, dtype=float)
    d = np.diff(xs)
    if y.size < 5 or not np.allclose(d, d[0], rtol=1e-9, atol=0):
        return np.gradient(y, xs, edge_order=2)
    h = d[0]
    out = np.empty_like(y)
    out[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    out[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * h)
    out[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h)
    out[-1] = (25 * y[-1] - 48 * y[-2] + 36 * y[-3] - 16 * y[-4] + 3 * y[-5]) / (12 * h)
    out[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * h)
    return out


def cumtrapz(y: np.ndarray, xs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Cumulative trapezoid integral starting from zero at the first node."""
    y = np.moveaxis(np.asarray(y), axis, -1)
    dx = np.diff(xs)
    inc = 0.5 * dx * (y[..., 1:] + y[..., :-1])
    out = np.concatenate([np.zeros(y.shape[:-1] + (1,), dtype=inc.dtype),
                          np.cumsum(inc, axis=-1)], axis=-1)
    return np.moveaxis(out, -1, axis)


def trapezoid_weights(xs: np.ndarray) -> np.ndarray:
    """Weights w with sum(w * y) equal to the trapezoid rule on ``xs``."""
    d = np.diff(xs)
    w = np.zeros(xs.size)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w
