"""Krein inversion S => f => H => Gamma => a => q.

For index-zero data the accelerant H(t) = (1/pi) int_0^inf (1/|f|^2 - 1) cos(kt) dk
defines the family

    Gamma_x(t,s) + int_0^x H(t-u) Gamma_x(u,s) du = H(t-s),   0 <= t, s <= x,

and a(x) = 2 Gamma_{2x}(2x, 0), q = a^2 + a'. On a uniform grid the
trapezoid discretization is a symmetric Toeplitz matrix A = I + hT minus a
rank-two correction for the half weights at the ends. The first column g of
A^-1 is carried from one interval length to the next by the Levinson
recursion, and because A is persymmetric, g determines everything needed:
both corner values follow from g[0], g[-1] and a 2x2 Woodbury solve. The
whole family costs O(n^2) and the recursion is sequential in x.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .core import winding_index
from .errors import (GammaCollision, IndexMismatch, MalformedGrid, PositivityViolated,
                     RecursionBreakdown)
from .quadrature import deriv4, oscillatory_transform
from .riemann import blaschke_product, jost_from_S
from .types import JostData, KreinKernel, PotentialGrid, ScatteringData, WaveFunctionTable

BREAKDOWN_TOL = 1e-12
SYMMETRY_SAMPLES = 10


# -- accelerant ---------------------------------------------------------------

def H_from_jost(jd: JostData, ts) -> KreinKernel:
    """Accelerant H(t) on the uniform grid ``ts`` from a Jost function of index 0.

    Raises
    ------
    IndexMismatch
        If ``jd`` has bound states or a zero-energy resonance.
    PositivityViolated
        If 1 + H~(k) = 1/|f(k)|^2 is not positive and finite on the k-grid.
    """
    if len(jd.bound_ks) or jd.resonance:
        raise IndexMismatch("Krein inversion needs index-zero data; reduce the bound states first")
    ks = np.asarray(jd.ks)
    with np.errstate(divide="ignore"):
        one_plus = 1.0 / np.abs(jd.f) ** 2
    if not np.all(np.isfinite(one_plus)) or np.min(one_plus) <= 0:
        raise PositivityViolated("1 + H~(k) must be positive on the whole k-grid")
    ts = np.asarray(ts, dtype=float)
    H = oscillatory_transform(ks, one_plus - 1.0, ts, "cos", "even") / np.pi
    return KreinKernel(ts, H, float(np.min(one_plus)))


def htilde(Hk: KreinKernel, ks) -> np.ndarray:
    """H~(k) = 2 int_0^T H(t) cos(kt) dt from the stored samples."""
    return 2.0 * oscillatory_transform(Hk.ts, Hk.H, np.asarray(ks, dtype=float), "cos",
                                       "even", tail=None, tail_tol=np.inf)


def check_positivity(Hk: KreinKernel, ks) -> float:
    """Minimum of 1 + H~ over ``ks``.

    Raises
    ------
    PositivityViolated
        If the minimum is not positive.
    """
    m = float(np.min(1.0 + htilde(Hk, ks)))
    if not m > 0:
        raise PositivityViolated(f"min of 1 + H~(k) is {m:.3e}")
    return m


# -- the Toeplitz family ------------------------------------------------------

@dataclass(frozen=True)
class KreinFamily:
    """Corner values of the solutions Gamma_{2x} for x on a uniform grid.

    Attributes
    ----------
    corner : Gamma_{2x}(2x, 0)
    origin : Gamma_{2x}(0, 0)
    reflection_max : largest Levinson reflection-coefficient magnitude
    symmetry : max |Gamma_x(t,0) - Gamma_x(x-t,x)| on sampled x
    """

    xs: np.ndarray
    corner: np.ndarray
    origin: np.ndarray
    H0: float
    reflection_max: float
    symmetry: float
    samples: dict = field(default_factory=dict, repr=False)


def _woodbury(g: np.ndarray, h: float):
    """Coefficients for the trapezoid system from the first column g of A^-1."""
    g0, gn = g[0], g[-1]
    Q = np.array([[0.5 * (1 + g0), 0.5 * gn], [0.5 * gn, 0.5 * (1 + g0)]])
    return g0, gn, Q


def _gamma_from_g(g: np.ndarray, h: float, column: str = "first") -> np.ndarray:
    """Full solution Gamma_x(t_i, s) for s = 0 ('first') or s = x ('last')."""
    n = g.size - 1
    e0 = np.zeros(n + 1)
    e0[0] = 1.0
    en = e0[::-1]
    u0 = e0 - g
    un = en - g[::-1]
    _, _, Q = _woodbury(g, h)
    base = (u0 if column == "first" else un) / h
    beta = np.array([base[0], base[-1]])
    c = np.linalg.solve(Q, beta)
    return base + 0.5 * (c[0] * u0 + c[1] * un)


def _corners(g: np.ndarray, h: float):
    """Gamma_x(x, 0) and Gamma_x(0, 0)."""
    g0, gn, Q = _woodbury(g, h)
    beta = np.array([(1 - g0) / h, -gn / h])
    c = np.linalg.solve(Q, beta)
    last = -gn / h + 0.5 * (-gn * c[0] + (1 - g0) * c[1])
    first = (1 - g0) / h + 0.5 * ((1 - g0) * c[0] - gn * c[1])
    return last, first


def _grid_match(Hk: KreinKernel, xs) -> tuple:
    xs = np.asarray(xs, dtype=float)
    h = Hk.dt
    if xs.size > 1 and not np.allclose(np.diff(xs), h, rtol=1e-9, atol=0):
        raise MalformedGrid("the x-grid must have the step of the Krein grid")
    if abs(xs[0]) > 1e-14:
        raise MalformedGrid("the x-grid must start at 0")
    nmax = 2 * (xs.size - 1)
    if nmax > Hk.ts.size - 1:
        raise MalformedGrid(f"H is needed up to t = {2 * xs[-1]:.4g}")
    return xs, h, nmax


def solve_krein_family(Hk: KreinKernel, xs, breakdown_tol: float = BREAKDOWN_TOL,
                       n_samples: int = SYMMETRY_SAMPLES) -> KreinFamily:
    """Levinson solution of the Krein family on the grid ``xs``.

    ``xs`` must share the step of ``Hk.ts`` and 2 max(xs) must lie on that grid.

    Raises
    ------
    RecursionBreakdown
        If a reflection coefficient reaches magnitude 1 within ``breakdown_tol``.
    """
    xs, h, nmax = _grid_match(Hk, xs)
    r = h * np.asarray(Hk.H[: nmax + 1], dtype=float)
    r0 = 1.0 + r[0]
    if r0 <= 0:
        raise RecursionBreakdown("1 + h H(0) is not positive")
    H0 = float(Hk.H[0])
    corner = np.empty(xs.size)
    origin = np.empty(xs.size)
    corner[0] = origin[0] = H0
    sample_n = set(2 * np.unique(np.linspace(1, xs.size - 1, min(n_samples, xs.size - 1))
                                 .astype(int))) if xs.size > 1 else set()
    samples = {}
    sym = 0.0
    g = np.array([1.0 / r0])
    refl = 0.0
    for n in range(1, nmax + 1):
        eps = float(r[n:0:-1] @ g)
        refl = max(refl, abs(eps))
        denom = 1.0 - eps * eps
        if denom < breakdown_tol:
            raise RecursionBreakdown(f"reflection coefficient {eps:.6f} at t = {n * h:.4g}")
        g = (np.append(g, 0.0) - eps * np.append(0.0, g[::-1])) / denom
        if n % 2 == 0:
            i = n // 2
            corner[i], origin[i] = _corners(g, h)
            if n in sample_n:
                first = _gamma_from_g(g, h, "first")
                last = _gamma_from_g(g, h, "last")
                sym = max(sym, float(np.max(np.abs(first - last[::-1]))))
                samples[i] = first
    return KreinFamily(xs, corner, origin, H0, refl, sym, samples)


def krein_matrix(Hk: KreinKernel, n: int) -> np.ndarray:
    """Dense trapezoid matrix I + h H(t_i - t_j) w_j for x = t_n."""
    h = Hk.dt
    idx = np.arange(n + 1)
    T = np.asarray(Hk.H)[np.abs(idx[:, None] - idx[None, :])]
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return np.eye(n + 1) + T * w[None, :]


def solve_krein_dense(Hk: KreinKernel, n: int) -> np.ndarray:
    """Gamma_x(t_i, 0), x = t_n, by a dense LU solve (the oracle for the fast path)."""
    if n == 0:
        return np.array([Hk.H[0]])
    return np.linalg.solve(krein_matrix(Hk, n), np.asarray(Hk.H[: n + 1]))


# -- potential ----------------------------------------------------------------

@dataclass(frozen=True)
class GammaPotential:
    """q from the corner values by both formulas.

    ``potential`` uses q = a^2 + a'; ``q_alt`` is 2 d/dx[Gamma_{2x}(2x,0) - Gamma_{2x}(0,0)].
    """

    potential: PotentialGrid
    a: np.ndarray
    q_alt: np.ndarray
    discrepancy: float
    a0_residual: float


def q_from_gamma(family: KreinFamily) -> GammaPotential:
    """q(x) = a^2 + a' with a(x) = 2 Gamma_{2x}(2x, 0)."""
    xs = family.xs
    a = 2.0 * family.corner
    q = a * a + deriv4(a, xs)
    q_alt = 2.0 * deriv4(family.corner - family.origin, xs)
    disc = float(np.max(np.abs(q - q_alt))) if xs.size else 0.0
    return GammaPotential(PotentialGrid(xs, q), a, q_alt, disc, float(abs(a[0] - 2 * family.H0)))


def riccati_a(q: PotentialGrid, a0: float, xs=None) -> np.ndarray:
    """Solve a' = q - a^2, a(0) = a0, by RK4 on ``xs`` (test utility)."""
    xs = q.xs if xs is None else np.asarray(xs, dtype=float)
    a = np.empty(xs.size)
    a[0] = a0
    for i in range(xs.size - 1):
        x, h = xs[i], xs[i + 1] - xs[i]
        qa, qm, qb = q(x), q(x + 0.5 * h), q(x + h)
        k1 = qa - a[i] ** 2
        y = a[i] + 0.5 * h * k1
        k2 = qm - y * y
        y = a[i] + 0.5 * h * k2
        k3 = qm - y * y
        y = a[i] + h * k3
        k4 = qb - y * y
        a[i + 1] = a[i] + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return a


def E_system(a, xs, ks):
    """E and E_- from E' = ikE - aE_-, E_-' = -ikE_- - aE, E(0) = E_-(0) = 1.

    RK4 on the grid ``xs`` with a spline of ``a`` at the half steps; columns
    (values of k) are independent.

    Returns
    -------
    (WaveFunctionTable, WaveFunctionTable)
        E and E_-, with x-derivatives from the system itself.
    """
    xs = np.asarray(xs, dtype=float)
    ks = np.asarray(ks, dtype=float)
    aspl = CubicSpline(xs, np.asarray(a, dtype=float))
    E = np.empty((xs.size, ks.size), dtype=complex)
    Em = np.empty_like(E)
    E[0] = Em[0] = 1.0
    ik = 1j * ks

    def rhs(x, u, v):
        ax = aspl(x)
        return ik * u - ax * v, -ik * v - ax * u

    for i in range(xs.size - 1):
        x, h = xs[i], xs[i + 1] - xs[i]
        u, v = E[i], Em[i]
        k1 = rhs(x, u, v)
        k2 = rhs(x + 0.5 * h, u + 0.5 * h * k1[0], v + 0.5 * h * k1[1])
        k3 = rhs(x + 0.5 * h, u + 0.5 * h * k2[0], v + 0.5 * h * k2[1])
        k4 = rhs(x + h, u + h * k3[0], v + h * k3[1])
        E[i + 1] = u + h * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6
        Em[i + 1] = v + h * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6
    ax = aspl(xs)[:, None]
    dE = ik * E - ax * Em
    dEm = -ik * Em - ax * E
    return (WaveFunctionTable(xs, ks, E, "krein_E", dE),
            WaveFunctionTable(xs, ks, Em, "krein_Eminus", dEm))


def psi_from_E(E: WaveFunctionTable, Em: WaveFunctionTable):
    """psi = (E - E_-)/2i and its derivative; psi(0) = 0, psi'(0) = k."""
    psi = (E.values - Em.values) / 2j
    dpsi = (E.derivative - Em.derivative) / 2j
    return psi, dpsi


# -- bound states -------------------------------------------------------------

@dataclass(frozen=True)
class Reduction:
    """Index-zero data and what was removed to get them."""

    data: ScatteringData
    removed_ks: tuple
    removed_norming: tuple
    resonance: bool
    gamma: float | None


def reduce_bound_states(sd: ScatteringData, gamma: float = 1.0) -> Reduction:
    """Remove bound states (and a resonance) so that ind S_1 = 0.

    S_1 = S w^2 with w the Blaschke product of the bound states. With a
    resonance, W = w k/(k + i gamma) and S_1 = S W^2/|W|^2 = S w^2 (k - i gamma)/(k + i gamma),
    the unimodular form of S W^2 with the same phase.

    Raises
    ------
    GammaCollision
        If ``gamma`` equals a bound-state wavenumber in the resonance case.
    """
    if sd.index == 0:
        return Reduction(sd, (), (), False, None)
    ks = np.asarray(sd.ks)
    bk = tuple(sd.bound_ks)
    S1 = sd.S * blaschke_product(ks, bk) ** 2
    if sd.resonance:
        if any(abs(gamma - kj) < 1e-12 * max(1.0, kj) for kj in bk):
            raise GammaCollision(f"gamma = {gamma} coincides with a bound state")
        S1 = S1 * (ks - 1j * gamma) / (ks + 1j * gamma)
    ind = winding_index(ks, S1)
    if ind != 0:
        raise IndexMismatch(f"reduced data have index {ind}")
    return Reduction(ScatteringData(ks, S1, [], [], 0), bk, tuple(sd.norming),
                     sd.resonance, gamma if sd.resonance else None)


# -- GL relation ----------------------------------------------------------------

def gl_relation_check(Hk: KreinKernel, jd: JostData) -> float:
    """max |M - H| with M(x) = (1/pi) int_0^inf (1/|f|^2 - 1) cos(kx) dk.

    M comes from the Gel'fand-Levitan profile of the spectral function
    k/(pi |f|^2), which interpolates a different function of k than the
    cosine transform behind H.
    """
    from .gelfand_levitan import gl_M
    from .types import SpectralFunction

    ks = np.asarray(jd.ks)
    sf = SpectralFunction(ks**2, ks / (np.pi * np.abs(jd.f) ** 2), [])
    M = gl_M(sf, Hk.ts)
    return float(np.max(np.abs(M - Hk.H)))


# -- drivers -------------------------------------------------------------------

@dataclass(frozen=True)
class KreinResult:
    """Output of :func:`invert`.

    ``potential`` is the reconstruction of the input data; ``reduced`` the
    Krein potential of the index-zero data (the same unless bound states or
    a resonance were removed).
    """

    potential: PotentialGrid
    reduced: GammaPotential
    kernel: KreinKernel
    family: KreinFamily
    reduction: Reduction
    jost: JostData


def krein_grid(X: float, dx: float):
    xs = np.linspace(0.0, X, int(round(X / dx)) + 1)
    ts = np.linspace(0.0, 2 * xs[-1], 2 * xs.size - 1)
    return xs, ts


def invert(sd: ScatteringData, X: float = 5.0, dx: float = 0.01, gamma: float = 1.0,
           kappa: float | None = None) -> KreinResult:
    """Potential on [0, X] from scattering data by Krein's method.

    Data with bound states or a resonance are first reduced to index zero.
    The Krein potential then belongs to the reduced data; the bound states
    are put back by a Marchenko inversion of the original data.
    """
    from . import marchenko

    red = reduce_bound_states(sd, gamma)
    kw = {} if kappa is None else {"kappa": kappa}
    jd = jost_from_S(red.data, **kw)
    xs, ts = krein_grid(X, dx)
    Hk = H_from_jost(jd, ts)
    fam = solve_krein_family(Hk, xs)
    gp = q_from_gamma(fam)
    if red.removed_ks or red.resonance:
        q = marchenko.invert(sd, X=X, dx=dx)
    else:
        q = gp.potential
    return KreinResult(q, gp, Hk, fam, red, jd)


@dataclass(frozen=True)
class HybridResult:
    potential: PotentialGrid
    x0: float
    seam: float
    krein: PotentialGrid
    marchenko: np.ndarray  # on [x0, X]


def contraction_radius(Hk: KreinKernel) -> float:
    """Largest t with int_0^t |H| < 1 (the end of the grid if never reached)."""
    cum = np.concatenate([[0.0], np.cumsum(0.5 * Hk.dt * (np.abs(Hk.H[1:]) + np.abs(Hk.H[:-1])))])
    over = np.nonzero(cum >= 1.0)[0]
    return float(Hk.ts[over[0] - 1]) if over.size else float(Hk.ts[-1])


def hybrid_invert(sd: ScatteringData, X: float = 5.0, dx: float = 0.01,
                  x0: float | None = None, z_extra: float = 25.0) -> HybridResult:
    """Krein on [0, x0] joined to iterated Marchenko on [x0, X].

    By default x0 is half the length over which int |H| stays below 1 (the
    Krein operator on [0, 2x0] is then a contraction). Index-zero data only.
    """
    from . import marchenko

    if sd.index != 0:
        raise IndexMismatch("the hybrid scheme needs index-zero data")
    jd = jost_from_S(sd)
    xs, ts = krein_grid(X, dx)
    Hk = H_from_jost(jd, ts)
    if x0 is None:
        x0 = 0.5 * contraction_radius(Hk)
    i0 = int(np.clip(round(x0 / dx), 2, xs.size - 3))
    x0 = float(xs[i0])
    fam = solve_krein_family(Hk, xs[: i0 + 1])
    qk = q_from_gamma(fam).potential
    Z = 2 * X + z_extra
    zs = np.linspace(0.0, Z, int(round(Z / dx)) + 1)
    A = marchenko.solve_marchenko(zs, marchenko.build_F(sd, zs), xs[i0:], method="iterate")
    qm = marchenko.q_values_from_diagonal(A.xs, A.diagonal)
    seam = float(abs(qk.qs[-1] - qm[0]))
    q = np.concatenate([qk.qs, qm[1:]])
    return HybridResult(PotentialGrid(xs, q), x0, seam, qk, qm)
