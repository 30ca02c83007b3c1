"""Confining potentials q(r) = r + p(r) from finitely many bound-state data.

The reference problem is q0(r) = r, whose eigenfunctions are shifted Airy
functions. The data {E_j, s_j} differ from the reference data in finitely
many entries, so the Gel'fand-Levitan kernel is degenerate and K(x, .) lives
in the span of the 2J functions Psi_j.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, quad, solve_ivp
from scipy.optimize import brentq

from .airy import airy_ai
from .errors import MalformedGrid, SingularSystem
from .quadrature import deriv4
from .types import PotentialGrid, QuarkoniumData

DR = 1e-3
COND_CAP = 1e12
ODE_RTOL = 1e-12
ODE_ATOL = 1e-14


@dataclass(frozen=True)
class ReferenceLevel:
    """Eigenpair of -u'' + r u = E u with phi(0) = 0, phi'(0) = 1."""

    E: float
    c: float
    s: float

    def __call__(self, r):
        return self.c * airy_ai(np.asarray(r, dtype=float) - self.E)

    def derivative(self, r):
        return self.c * airy_ai(np.asarray(r, dtype=float) - self.E, derivative=True)[1]


def airy_zeros(J: int) -> np.ndarray:
    """First J positive roots E of Ai(-E) = 0."""
    if J < 1:
        raise ValueError("J must be positive")
    out = np.empty(J)
    for j in range(1, J + 1):
        t = 3 * np.pi / 8 * (4 * j - 1)
        guess = t ** (2 / 3) * (1 + 5 / 48 / t**2)
        lo, hi = guess - 0.05, guess + 0.05
        while airy_ai(-lo) * airy_ai(-hi) > 0:
            lo, hi = lo - 0.05, hi + 0.05
        out[j - 1] = brentq(lambda e: airy_ai(-e), lo, hi, xtol=1e-15, rtol=1e-15)
    return out


def airy_reference(J: int) -> list:
    """Reference levels E_j^0 with c_j = 1/Ai'(-E_j^0) and normalizing slope s_j^0."""
    levels = []
    for E in airy_zeros(J):
        c = 1.0 / airy_ai(-E, derivative=True)[1]
        f = lambda z: airy_ai(z) ** 2
        integral = quad(f, -E, 0.0, limit=200, epsabs=1e-15, epsrel=1e-13)[0]
        integral += quad(f, 0.0, 40.0, limit=200, epsabs=1e-15, epsrel=1e-13)[0]
        levels.append(ReferenceLevel(float(E), float(c), float((c * c * integral) ** -0.5)))
    return levels


def reference_data(J: int) -> QuarkoniumData:
    levels = airy_reference(J)
    return QuarkoniumData([lv.E for lv in levels], [lv.s for lv in levels])


def _march(q, E: float, xs: np.ndarray):
    xs = np.asarray(xs, dtype=float)
    sol = solve_ivp(lambda r, y: [y[1], (q(r) - E) * y[0]], (0.0, float(xs[-1])), [0.0, 1.0],
                    method="DOP853", t_eval=xs, rtol=ODE_RTOL, atol=ODE_ATOL)
    return sol.y[0], sol.y[1]


def unperturbed_solution(E: float, xs, derivative: bool = False):
    """phi(x, E) for q0 = r by direct ODE marching from phi(0) = 0, phi'(0) = 1."""
    phi, dphi = _march(lambda r: r, E, xs)
    return (phi, dphi) if derivative else phi


@dataclass(frozen=True)
class QuarkoniumResult:
    """Reconstruction output.

    ``coefficients[i, j]`` holds beta_j(x_i) in K(x_i, y) = sum_j beta_j(x_i) Psi_j(y).
    """

    potential: PotentialGrid
    p: np.ndarray
    diagonal: np.ndarray
    coefficients: np.ndarray
    psi: np.ndarray
    weights: np.ndarray
    reference: list

    def K(self, i: int, y) -> np.ndarray:
        """K(x_i, y) from the degenerate expansion; y must lie on the grid."""
        idx = np.searchsorted(self.potential.xs, y)
        return self.psi[idx] @ self.coefficients[i]


def _default_grid(energies, X: float | None, dr: float) -> np.ndarray:
    if X is None:
        X = max(energies) + 8.0
    return np.linspace(0.0, X, int(round(X / dr)) + 1)


def _spectral_jumps(data: QuarkoniumData, ref: list):
    """Jumps of sigma = rho - rho0 as (Psi evaluators, weights).

    A measured level that coincides with a reference level contributes
    (s^2 - (s^0)^2) times the reference eigenfunction; equal pairs cancel.
    """
    funcs, c = [], []
    used = set()
    for E, w in zip(data.energies, data.weights):
        match = next((j for j, lv in enumerate(ref)
                      if j not in used and abs(E - lv.E) <= 1e-10 * max(1.0, E)), None)
        if match is None:
            funcs.append(lambda x, E=E: unperturbed_solution(E, x))
            c.append(w)
            continue
        used.add(match)
        dw = w - ref[match].s ** 2
        if abs(dw) > 1e-13 * w:
            funcs.append(ref[match])
            c.append(dw)
    for j, lv in enumerate(ref):
        if j not in used:
            funcs.append(lv)
            c.append(-lv.s**2)
    return funcs, np.array(c)


def _airy_tail(a: ReferenceLevel, b: ReferenceLevel, xs: np.ndarray) -> np.ndarray:
    """int_x^inf phi_a phi_b dr in closed form."""
    u, du = a(xs), a.derivative(xs)
    if a is b or a.E == b.E:
        return du * du - (xs - a.E) * u * u
    v, dv = b(xs), b.derivative(xs)
    return (du * v - u * dv) / (a.E - b.E)


def _degenerate_solve(funcs: list, psi: np.ndarray, c: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """beta_j(x) from beta_j + c_j sum_i G_ij beta_i = -c_j Psi_j(x), G_ij = int_0^x Psi_i Psi_j.

    Solved in the symmetric form (C^-1 + G) beta = -Psi with diagonal
    equilibration, which also makes the condition check scale-free.
    """
    m = c.size
    if m == 0:
        return np.zeros((xs.size, 0))
    G = cumulative_simpson(psi[:, :, None] * psi[:, None, :], x=xs, axis=0, initial=0.0)
    M = np.diag(1.0 / c)[None] + G
    # a removed reference level makes -1/s^2 + int_0^x phi^2 small; use the tail form
    full = [j for j, f in enumerate(funcs) if isinstance(f, ReferenceLevel) and c[j] == -f.s**2]
    for j in full:
        for k in full:
            M[:, j, k] = -_airy_tail(funcs[j], funcs[k], xs)
    dd = np.abs(np.diagonal(M, axis1=1, axis2=2))
    d = 1.0 / np.sqrt(np.maximum(dd, np.finfo(float).tiny))
    Ms = d[:, :, None] * M * d[:, None, :]
    cond = np.linalg.cond(Ms[:: max(1, xs.size // 64)])
    if not np.all(np.isfinite(cond)) or np.max(cond) > COND_CAP:
        raise SingularSystem(f"degenerate system condition number {np.max(cond):.3g}")
    y = np.linalg.solve(Ms, (-d * psi)[..., None])[..., 0]
    return d * y


def recover_potential(data: QuarkoniumData, xs=None, n_reference: int | None = None,
                      X: float | None = None, dr: float = DR) -> QuarkoniumResult:
    """Solve the degenerate Gel'fand-Levitan system and return q = r + p.

    Parameters
    ----------
    data
        Measured pairs {E_j, s_j}.
    xs
        Uniform grid starting at 0; built from ``X`` and ``dr`` when omitted.
    n_reference
        Number of reference levels subtracted from the spectral function.
        Defaults to ``data.J``.
    """
    n_ref = data.J if n_reference is None else int(n_reference)
    ref = airy_reference(n_ref) if n_ref else []
    if xs is None:
        xs = _default_grid(list(data.energies) + [lv.E for lv in ref], X, dr)
    xs = np.asarray(xs, dtype=float)
    if xs[0] != 0.0 or np.any(np.diff(xs) <= 0):
        raise MalformedGrid("xs must be increasing and start at 0")
    n = xs.size
    d = np.diff(xs)
    if n >= 5 and np.allclose(d, d[0], rtol=1e-9, atol=0):
        # two ghost nodes keep the centred stencil up to the last returned point
        xs = np.concatenate([xs, xs[-1] + d[0] * np.arange(1, 3)])
    funcs, c = _spectral_jumps(data, ref)
    psi = np.stack([f(xs) for f in funcs], axis=1) if funcs else np.zeros((xs.size, 0))
    beta = _degenerate_solve(funcs, psi, c, xs)
    diag = np.sum(beta * psi, axis=1)
    p = (2 * deriv4(diag, xs))[:n]
    xs, diag, beta, psi = xs[:n], diag[:n], beta[:n], psi[:n]
    q = PotentialGrid(xs, xs + p, decay_class="confining")
    return QuarkoniumResult(q, p, diag, beta, psi, c, ref)


def single_level_p(E0: float, s0: float, xs) -> np.ndarray:
    """Closed-form p(r) when one level is added below the reference spectrum."""
    phi, dphi = unperturbed_solution(E0, xs, derivative=True)
    w = s0 * s0
    D = 1 + w * cumulative_simpson(phi * phi, x=np.asarray(xs, dtype=float), initial=0.0)
    N = w * phi * phi
    dN = 2 * w * phi * dphi
    return -2 * (dN * D - N * w * phi * phi) / D**2


def nystrom_kernel(data: QuarkoniumData, x: float, n_nodes: int = 48,
                   n_reference: int | None = None):
    """K(x, y) at Gauss-Legendre nodes y by a dense solve of the integral equation."""
    n_ref = data.J if n_reference is None else int(n_reference)
    ref = airy_reference(n_ref) if n_ref else []
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    ys = 0.5 * x * (t + 1)
    w = 0.5 * x * w
    grid = np.concatenate([[0.0], ys, [x]])
    funcs, c = _spectral_jumps(data, ref)
    psi = np.stack([f(grid)[1:] for f in funcs], axis=1)
    Lmat = (psi[:-1] * c) @ psi[:-1].T
    Lrow = (psi[-1] * c) @ psi[:-1].T
    # K(x, y_m) + sum_n w_n K(x, y_n) L(y_n, y_m) = -L(x, y_m)
    A = np.eye(n_nodes) + w[:, None] * Lmat
    return ys, np.linalg.solve(A.T, -Lrow)


def _numerov_counts(qv: np.ndarray, h: float, Es: np.ndarray):
    """Node counts and end values of the regular solutions for many energies."""
    f = qv[:, None] - Es[None, :]
    c = h * h / 12.0
    u_prev = np.zeros(Es.size)
    u = h + f[0] * h**3 / 6
    count = np.zeros(Es.size, dtype=int)
    for n in range(1, qv.size - 1):
        u_next = (2 * (1 + 5 * c * f[n]) * u - (1 - c * f[n - 1]) * u_prev) / (1 - c * f[n + 1])
        count += (u_next * u < 0) | ((u == 0) & (u_next * u_prev < 0))
        big = np.abs(u_next) > 1e100
        if big.any():
            u_next[big] *= 1e-100
            u[big] *= 1e-100
        u_prev, u = u, u_next
    return count, u


def shooting_eigenvalues(q, n_levels: int, R: float | None = None, h: float = 1e-3,
                         n_energies: int = 200, rounds: int = 3) -> np.ndarray:
    """Lowest eigenvalues of -u'' + q u on (0, R), u(0) = u(R) = 0, by Numerov shooting.

    Node counting over a fan of energies brackets each level; each round
    shrinks the brackets by a factor ``n_energies``.

    Parameters
    ----------
    q
        PotentialGrid (continued by r past its grid) or a vectorized callable.
    R
        Right end; defaults to the end of the grid.
    """
    if isinstance(q, PotentialGrid):
        grid = q
        X = float(grid.xs[-1])
        R = X if R is None else R
        q = lambda r: np.where(r <= X, grid(np.minimum(r, X)), r)
    if R is None:
        raise ValueError("R is required for a callable potential")
    xs = np.linspace(0.0, R, int(round(R / h)) + 1)
    h = xs[1] - xs[0]
    qv = np.asarray(q(xs), dtype=float)
    lo, hi = float(qv.min()) - 1.0, float(qv.max())
    while _numerov_counts(qv, h, np.array([hi]))[0][0] < n_levels:
        hi = 2 * hi + 1
    Es = np.linspace(lo, hi, n_energies)
    counts, _ = _numerov_counts(qv, h, Es)
    brackets = []
    for n in range(n_levels):
        j = int(np.argmax(counts >= n + 1))
        brackets.append((Es[j - 1], Es[j]))
    a = np.array([br[0] for br in brackets])
    b = np.array([br[1] for br in brackets])
    target = np.arange(1, n_levels + 1)
    for _ in range(rounds):
        fan = np.linspace(a, b, n_energies, axis=1)
        counts, _ = _numerov_counts(qv, h, fan.ravel())
        counts = counts.reshape(fan.shape)
        j = np.argmax(counts >= target[:, None], axis=1)
        rows = np.arange(n_levels)
        a, b = fan[rows, np.maximum(j - 1, 0)], fan[rows, j]
    out = 0.5 * (a + b)
    return np.array(out)
