"""Direct problem: Jost and regular solutions, bound states and derived data.

The Jost solution is marched backward from the end of the support. Writing
f(x,k) = exp(ikx) m(x,k) the Volterra equation becomes

    m(x) = 1 + int_x^X (exp(2ik(t-x)) - 1)/(2ik) q(t) m(t) dt,

and the product q*m is interpolated linearly between nodes while the
exponential is integrated exactly. The rule is second order uniformly in k,
so S(k) stays accurate well beyond k*dx ~ 1. On the imaginary axis the
scaled function g = f(x, i kappa) exp(kappa x) is marched with the plain
trapezoid product rule. Both marches are optionally Richardson-extrapolated
from steps dx and dx/2.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import unwrap_from_top
from .errors import NoDecay, NonHerglotz, NonSimpleZero, ResonanceAtZero, UnwrapAmbiguity
from .types import (IFunction, JostData, PotentialGrid, ScatteringData, SpectralFunction,
                    WaveFunctionTable, check_grid)

#: relative size of q at the grid end above which the potential has not decayed
TAIL_TOL = 1e-6
#: |f(0)| below this fraction of max|f| counts as a zero-energy resonance
RESONANCE_TOL = 1e-3
#: relative step of the centered difference for the derivative of f(i kappa)
FDOT_STEP = 1e-5
_K_ZERO = 1e-10


# -- grids -------------------------------------------------------------------

def _extent(q: PotentialGrid, tail_tol: float) -> float:
    if q.support_radius is not None and q.support_radius < q.xs[-1]:
        return float(q.support_radius)
    peak = np.max(np.abs(q.qs))
    if q.decay_class != "compact" and peak > 0 and abs(q.qs[-1]) > tail_tol * peak:
        raise NoDecay(f"|q(x_max)| = {abs(q.qs[-1]):.2e} exceeds {tail_tol:.0e} of max|q|")
    return float(q.xs[-1])


def _default_dx(q: PotentialGrid) -> float:
    if q.decay_class == "compact":
        return 1e-3 * float(q.support_radius)
    return float(np.median(q.dx))


def _march_grid(q: PotentialGrid, X: float, dx: float):
    n = max(2, int(np.ceil(X / dx - 1e-9)))
    xs = np.linspace(0.0, X, n + 1)
    native = q.xs[q.xs <= X]
    if native.size == xs.size and np.allclose(native, xs, rtol=0, atol=1e-12 * max(X, 1)):
        return native, q.qs[: native.size].copy()
    return xs, q(xs)


# -- real-axis Jost march ----------------------------------------------------

def _filon_weights(theta: np.ndarray):
    """E1 = int_0^1 e^{i theta u} du, E2 = int_0^1 u e^{i theta u} du and
    c = (E1 - E2 - 1/2)/(i theta), with series for small theta."""
    theta = np.asarray(theta, dtype=float)
    it = 1j * theta
    small = np.abs(theta) < 0.2
    E1 = np.empty(theta.shape, complex)
    E2 = np.empty(theta.shape, complex)
    C = np.empty(theta.shape, complex)
    z = it[small]
    s1 = np.zeros(z.shape, complex)
    s2 = np.zeros(z.shape, complex)
    sc = np.zeros(z.shape, complex)
    term = np.ones(z.shape, complex)  # z^n / n!
    for n in range(16):
        s1 += term / (n + 1)
        s2 += term / (n + 2)
        sc += term / ((n + 1) * (n + 2) * (n + 3))
        term = term * z / (n + 1)
    E1[small], E2[small] = s1, s2
    C[small] = sc
    big = ~small
    e = np.exp(it[big])
    E1[big] = (e - 1) / it[big]
    E2[big] = e / it[big] - (e - 1) / it[big] ** 2
    C[big] = (E1[big] - E2[big] - 0.5) / it[big]
    return E1, E2, C


def _march_jost(xs: np.ndarray, qs: np.ndarray, ks: np.ndarray, store: bool = False):
    """Backward march; returns f(0,k), f'(0,k) and optionally the full tables."""
    ks = np.asarray(ks, dtype=float)
    nk = ks.size
    zero = np.abs(ks) < _K_ZERO
    kk = np.where(zero, 1.0, ks)
    N = xs.size - 1
    U = np.zeros(nk, complex)
    V = np.zeros(nk, complex)
    D = np.zeros(nk, complex)  # k = 0 column: int_x (t - x) q m dt
    m_next = np.ones(nk, complex)
    g_next = qs[N] * m_next
    if store:
        Mt = np.empty((N + 1, nk), complex)
        Ut = np.empty((N + 1, nk), complex)
        Vt = np.empty((N + 1, nk), complex)
        Mt[N], Ut[N], Vt[N] = m_next, U, V
    h_prev = None
    for i in range(N - 1, -1, -1):
        h = xs[i + 1] - xs[i]
        if h != h_prev or (N - i) % 256 == 0:
            E1, E2, Cs = _filon_weights(2 * ks * h)
            c = np.where(zero, h * h / 6, h * h * Cs)
            rot = np.exp(-2j * ks * h)
            ph = np.exp(2j * ks * xs[i])
            h_prev = h
        else:
            # phase rotated step by step, reset periodically
            ph = ph * rot
        D = D + h * V + h * h / 3 * g_next
        U = U + h * ph * E2 * g_next
        V = V + 0.5 * h * g_next
        base = 1 + (U * np.conj(ph) - V) / (2j * kk)
        base = np.where(zero, 1 + D, base)
        m = base / (1 - c * qs[i])
        g = qs[i] * m
        U = U + h * ph * (E1 - E2) * g
        V = V + 0.5 * h * g
        D = D + h * h / 6 * g
        m_next, g_next = m, g
        if store:
            Mt[i], Ut[i], Vt[i] = m, U, V
    fp0 = 1j * ks - 0.5 * (U + V)
    fp0 = np.where(zero, -V, fp0)
    if not store:
        return m_next, fp0
    e = np.exp(1j * np.outer(xs, ks))
    F = Mt * e
    Fp = 1j * ks * e - 0.5 * (Ut / e + e * Vt)
    Fp[:, zero] = -Vt[:, zero]
    return m_next, fp0, F, Fp


def _richardson(fine, coarse):
    return (4.0 * fine - coarse) / 3.0


def jost_solution(q: PotentialGrid, ks, dx: float | None = None, richardson: bool = True,
                  tail_tol: float = TAIL_TOL) -> WaveFunctionTable:
    """Jost solutions f(x,k) and f'(x,k) on the march grid.

    Parameters
    ----------
    q : PotentialGrid
    ks : array_like
        Real wavenumbers.
    dx : float, optional
        March step. Defaults to 1e-3 times the support radius for compact
        potentials and to the native grid spacing otherwise.
    richardson : bool
        Combine steps dx and dx/2 (the table is returned on the dx grid).

    Raises
    ------
    NoDecay
        If q has not decayed at the end of its grid.
    """
    ks = np.asarray(ks, dtype=float)
    X = _extent(q, tail_tol)
    dx = _default_dx(q) if dx is None else dx
    xs, qs = _march_grid(q, X, dx)
    _, _, F, Fp = _march_jost(xs, qs, ks, store=True)
    if richardson:
        xf, qf = _march_grid(q, X, 0.5 * (xs[1] - xs[0]))
        if xf.size == 2 * xs.size - 1:
            _, _, F2, Fp2 = _march_jost(xf, qf, ks, store=True)
            F = _richardson(F2[::2], F)
            Fp = _richardson(Fp2[::2], Fp)
    return WaveFunctionTable(xs, ks, F, "jost_f", Fp)


def jost_at_zero(q: PotentialGrid, ks, dx: float | None = None, richardson: bool = True,
                 tail_tol: float = TAIL_TOL):
    """Return f(k) = f(0,k) and f'(0,k) without storing the x-table."""
    ks = np.asarray(ks, dtype=float)
    X = _extent(q, tail_tol)
    dx = _default_dx(q) if dx is None else dx
    xs, qs = _march_grid(q, X, dx)
    f, fp = _march_jost(xs, qs, ks)
    if richardson:
        xf, qf = _march_grid(q, X, 0.5 * (xs[1] - xs[0]))
        f2, fp2 = _march_jost(xf, qf, ks)
        f, fp = _richardson(f2, f), _richardson(fp2, fp)
    return f, fp


# -- imaginary-axis march ----------------------------------------------------

def _march_imag(xs: np.ndarray, qs: np.ndarray, kappas: np.ndarray):
    """f(0, i kappa) and f'(0, i kappa) for kappa >= 0 via the scaled function."""
    kap = np.asarray(kappas, dtype=float)
    small = kap < _K_ZERO
    kk = np.where(small, 1.0, kap)
    N = xs.size - 1
    P = np.zeros(kap.size)
    R = np.zeros(kap.size)
    D = np.zeros(kap.size)  # kappa = 0: int_x (t - x) q g dt
    g_next = qs[N] * np.ones(kap.size)
    for i in range(N - 1, -1, -1):
        h = xs[i + 1] - xs[i]
        damp = np.exp(-2 * kap * h)
        D = D + h * P + 0.5 * h * h * g_next
        P = P + 0.5 * h * g_next
        R = damp * R + 0.5 * h * damp * g_next
        # the q_i g_i contributions to P and R cancel in g_i
        gi = 1 + (P - R) / (2 * kk)
        gi = np.where(small, 1 + D, gi)
        g = qs[i] * gi
        P = P + 0.5 * h * g
        R = R + 0.5 * h * g
        g_next = g
        g_val = gi
    fp0 = -kap * g_val - R
    fp0 = np.where(small, -P, fp0)
    return g_val, fp0


class _ImagAxis:
    """Evaluator of f(i kappa) and f'(0, i kappa) with optional Richardson."""

    def __init__(self, q: PotentialGrid, dx, richardson: bool, tail_tol: float):
        X = _extent(q, tail_tol)
        dx = _default_dx(q) if dx is None else dx
        self.grids = [_march_grid(q, X, dx)]
        if richardson:
            h = self.grids[0][0][1] - self.grids[0][0][0]
            self.grids.append(_march_grid(q, X, 0.5 * h))

    def __call__(self, kappas):
        kappas = np.atleast_1d(np.asarray(kappas, dtype=float))
        vals = [_march_imag(xs, qs, kappas) for xs, qs in self.grids]
        if len(vals) == 1:
            return vals[0]
        (f1, p1), (f2, p2) = vals
        return _richardson(f2, f1), _richardson(p2, p1)


@dataclass(frozen=True)
class BoundState:
    """A bound state i k with norming constant s and spectral weight c."""

    k: float
    s: float
    c: float
    fprime0: float
    fdot: complex

    def __iter__(self):
        return iter((self.k, self.s, self.c))


class BoundStateList(list):
    """List of :class:`BoundState` with zero-energy resonance information.

    Attributes
    ----------
    resonance : bool
        Whether f(0) vanishes within the resonance threshold.
    f0 : float
        Computed f(0).
    """

    def __init__(self, items=(), resonance: bool = False, f0: float = 1.0):
        super().__init__(items)
        self.resonance = resonance
        self.f0 = f0

    @property
    def ks(self) -> list:
        return [b.k for b in self]

    @property
    def norming(self) -> list:
        return [b.s for b in self]

    @property
    def weights(self) -> list:
        return [b.c for b in self]


def bound_states(q: PotentialGrid, dx: float | None = None, richardson: bool = True,
                 n_scan: int = 400, fdot_step: float = FDOT_STEP,
                 tail_tol: float = TAIL_TOL, fdot_tol: float = 1e-10) -> BoundStateList:
    """Zeros i k_j of the Jost function with norming constants s_j and weights c_j.

    f(i kappa) is real; it is scanned on a grid of kappa up to
    sqrt(max(-q)) and every sign change is polished with Brent's method.
    The derivative of f(i kappa) in kappa comes from a centered difference
    with step ``fdot_step * k_j``.

    Raises
    ------
    NonSimpleZero
        If the derivative at a zero is below ``fdot_tol``.
    """
    ev = _ImagAxis(q, dx, richardson, tail_tol)
    f0 = float(ev(0.0)[0][0])
    probe = np.linspace(0.0, 10.0, 41)[1:]
    fmax = max(1.0, float(np.max(np.abs(jost_at_zero(q, probe, dx, False, tail_tol)[0]))))
    resonance = abs(f0) < RESONANCE_TOL * fmax
    depth = float(np.max(-q.qs, initial=0.0))
    out = BoundStateList(resonance=resonance, f0=f0)
    if depth <= 0:
        return out
    kmax = np.sqrt(depth) * 1.05
    kap = np.linspace(0.0, kmax, n_scan + 1)[1:]
    fv, _ = ev(kap)
    if resonance:
        # a zero at kappa = 0 is not a bound state; ignore a sign flip right next to it
        fv[0] = fv[1] if fv.size > 1 else fv[0]
    idx = np.nonzero(np.sign(fv[:-1]) * np.sign(fv[1:]) < 0)[0]
    for i in idx:
        k = brentq(lambda z: float(ev(z)[0][0]), kap[i], kap[i + 1], xtol=1e-14, rtol=1e-14)
        step = fdot_step * k
        fa = float(ev(k + step)[0][0])
        fb = float(ev(k - step)[0][0])
        dF = (fa - fb) / (2 * step)
        if abs(dF) < fdot_tol:
            raise NonSimpleZero(f"derivative of f(i kappa) vanishes at kappa = {k:.6g}")
        fp = float(ev(k)[1][0])
        s = 2 * k / (fp * dF)
        c = 2 * k * fp / dF
        out.append(BoundState(float(k), float(s), float(c), fp, complex(-1j * dF)))
    return out


# -- regular and theta solutions ---------------------------------------------

def _march_regular(xs, qs, ks, kind):
    ks = np.asarray(ks, dtype=float)
    kx = np.outer(xs, ks)
    cos = np.cos(kx)
    sinc = xs[:, None] * np.sinc(kx / np.pi)  # sin(kx)/k, equal to x at k = 0
    if kind == "regular_phi":
        u0, u0p = sinc, cos
    else:
        u0, u0p = cos, -(ks**2) * sinc
    n = xs.size
    Y = np.empty_like(u0)
    Yp = np.empty_like(u0)
    C = np.zeros(ks.size)
    Sk = np.zeros(ks.size)
    Y[0], Yp[0] = u0[0], u0p[0]
    for i in range(1, n):
        h = xs[i] - xs[i - 1]
        C = C + 0.5 * h * cos[i - 1] * qs[i - 1] * Y[i - 1]
        Sk = Sk + 0.5 * h * sinc[i - 1] * qs[i - 1] * Y[i - 1]
        # the y_i terms cancel: sin(kx)cos(kx) - cos(kx)sin(kx) = 0
        Y[i] = u0[i] + sinc[i] * C - cos[i] * Sk
        C = C + 0.5 * h * cos[i] * qs[i] * Y[i]
        Sk = Sk + 0.5 * h * sinc[i] * qs[i] * Y[i]
        Yp[i] = u0p[i] + cos[i] * C + ks**2 * sinc[i] * Sk
    return Y, Yp


def regular_solution(q: PotentialGrid, ks, dx: float | None = None, richardson: bool = True,
                     kind: str = "regular_phi") -> WaveFunctionTable:
    """Regular solution phi (phi(0)=0, phi'(0)=1) or theta (theta(0)=1, theta'(0)=0).

    Forward trapezoid-product march of the Volterra equation from x = 0 on
    the whole grid of ``q``.
    """
    if kind not in ("regular_phi", "theta"):
        raise ValueError("kind must be 'regular_phi' or 'theta'")
    ks = np.asarray(ks, dtype=float)
    X = float(q.xs[-1])
    dx = float(np.median(q.dx)) if dx is None else dx
    xs, qs = _march_grid(q, X, dx)
    Y, Yp = _march_regular(xs, qs, ks, kind)
    if richardson:
        xf, qf = _march_grid(q, X, 0.5 * (xs[1] - xs[0]))
        if xf.size == 2 * xs.size - 1:
            Y2, Yp2 = _march_regular(xf, qf, ks, kind)
            Y, Yp = _richardson(Y2[::2], Y), _richardson(Yp2[::2], Yp)
    return WaveFunctionTable(xs, ks, Y, kind, Yp)


# -- derived data ------------------------------------------------------------

def jost_data(q: PotentialGrid, ks, dx: float | None = None, richardson: bool = True,
              bound: BoundStateList | None = None) -> JostData:
    """Jost function, boundary derivative and bound-state zeros of ``q``."""
    ks = np.asarray(ks, dtype=float)
    check_grid(ks, "ks")
    f, fp = jost_at_zero(q, ks, dx, richardson)
    bound = bound_states(q, dx, richardson) if bound is None else bound
    return JostData(ks, f, fp, [b.k for b in bound], [b.fdot for b in bound],
                    resonance=bound.resonance)


def scattering_data(q: PotentialGrid, ks, dx: float | None = None,
                    richardson: bool = True) -> ScatteringData:
    """S(k) = f(-k)/f(k) with the bound states and norming constants of ``q``."""
    ks = np.asarray(ks, dtype=float)
    bound = bound_states(q, dx, richardson)
    jd = jost_data(q, ks, dx, richardson, bound)
    S = np.conj(jd.f) / jd.f
    if ks[0] == 0.0:
        # S(0) = -1 at a resonance and +1 otherwise (f(0) is real)
        S[0] = -1.0 if bound.resonance else 1.0
    index = -2 * len(bound) - (1 if bound.resonance else 0)
    return ScatteringData(ks, S, bound.ks, bound.norming, index)


def phase_shift(sd: ScatteringData, max_step: float = 0.5 * np.pi) -> np.ndarray:
    """Continuous phase shift delta(k) with S = exp(2 i delta), delta(k_max) ~ 0.

    Raises
    ------
    UnwrapAmbiguity
        If arg S changes by more than ``max_step`` between neighbours.
    """
    theta = unwrap_from_top(sd.ks, sd.S, max_step, UnwrapAmbiguity)
    return 0.5 * theta


def spectral_function(jd: JostData, bound=()) -> SpectralFunction:
    """Density sqrt(lambda)/(pi |f|^2) on lambda = k^2 and weights c_j at -k_j^2.

    ``bound`` is a sequence of (k_j, c_j) pairs or :class:`BoundState`.
    """
    ks = np.asarray(jd.ks)
    absf2 = np.abs(jd.f) ** 2
    fmax = np.max(np.abs(jd.f))
    if jd.resonance or abs(jd.f[0]) < RESONANCE_TOL * fmax:
        warnings.warn("f(0) vanishes: the spectral density is peaked at lambda = 0",
                      ResonanceAtZero, stacklevel=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.where(ks > 0, ks / (np.pi * absf2), 0.0)
    if ks[0] == 0 and absf2[0] < (RESONANCE_TOL * fmax) ** 2:
        dens[0] = np.inf
    pts = []
    for b in bound:
        k, c = (b.k, b.c) if isinstance(b, BoundState) else b
        pts.append((-k * k, c))
    return SpectralFunction(ks**2, dens, pts)


def fdot_at_zero(ks, f) -> complex:
    """Extrapolated derivative of f at k = 0 from the two smallest positive nodes."""
    ks = np.asarray(ks, dtype=float)
    f = np.asarray(f, dtype=complex)
    f0 = f[0] if ks[0] == 0 else 0.0
    pos = np.nonzero(ks > 0)[0][:2]
    d = (f[pos] - f0) / ks[pos]
    k1, k2 = ks[pos]
    return complex((k2 * d[0] - k1 * d[1]) / (k2 - k1))


def i_function(jd: JostData, bound=(), tol: float = 1e-6) -> IFunction:
    """I(k) = f'(0,k)/f(k) with residues a_j = i c_j/(2 k_j) at the poles i k_j.

    At a resonance the residue at k = 0 is a_0 = i r_0 with r_0 = -1/fdot(0)^2.

    Raises
    ------
    NonHerglotz
        If Im I(k) is not positive for some k > 0.
    """
    if jd.fprime0 is None:
        raise ValueError("JostData has no f'(0,k) samples")
    ks = np.asarray(jd.ks)
    with np.errstate(divide="ignore", invalid="ignore"):
        I = jd.fprime0 / jd.f
    pos = ks > 0
    if np.any(I.imag[pos] <= 0):
        raise NonHerglotz("Im I(k) <= 0 on k > 0")
    poles, res = [], []
    for b in bound:
        k, c = (b.k, b.c) if isinstance(b, BoundState) else b
        poles.append(k)
        res.append(1j * c / (2 * k))
    a0 = None
    if jd.resonance:
        fd = fdot_at_zero(ks, jd.f)
        a0 = 1j * float(np.real(-1.0 / fd**2))
        if ks[0] == 0:
            I = I.copy()
            I[0] = np.inf
    return IFunction(ks, I, poles, res, jd.resonance, a0)
