"""Closed-form test cases with rational Jost functions.

For f(k) = prod (k + i b_n)/(k + i p_n) with p_n > 0 the S-matrix is
rational, the Marchenko function F is a finite sum of exponentials and the
Marchenko equation has a degenerate kernel, so A(x,y) and q(x) follow from a
small linear system. Negative b_n are bound states i|b_n| and b_n = 0 is a
zero-energy resonance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import PotentialGrid, ScatteringData, SpectralFunction


def _cancel(num: list, den: list):
    num, den = list(num), list(den)
    for r in list(num):
        for j, d in enumerate(den):
            if abs(r - d) < 1e-14:
                num.remove(r)
                den.pop(j)
                break
    return num, den


@dataclass(frozen=True)
class RationalJost:
    """f(k) = prod_n (k + i b_n) / (k + i p_n)."""

    b: tuple
    p: tuple

    def f(self, k):
        k = np.asarray(k, dtype=complex)
        out = np.ones_like(k)
        for bn, pn in zip(self.b, self.p):
            out = out * (k + 1j * bn) / (k + 1j * pn)
        return out

    def fdot(self, k):
        """Derivative of f by logarithmic differentiation."""
        k = np.asarray(k, dtype=complex)
        out = np.zeros_like(k)
        for j, bj in enumerate(self.b):
            term = np.ones_like(k)
            for n, (bn, pn) in enumerate(zip(self.b, self.p)):
                if n != j:
                    term = term * (k + 1j * bn)
            for pn in self.p:
                term = term / (k + 1j * pn)
            out = out + term
        for pn in self.p:
            out = out - self.f(k) / (k + 1j * pn)
        return out

    @property
    def bound_ks(self) -> tuple:
        return tuple(sorted(-bn for bn in self.b if bn < 0))

    @property
    def resonance(self) -> bool:
        return any(bn == 0 for bn in self.b)

    @property
    def index(self) -> int:
        return -2 * len(self.bound_ks) - (1 if self.resonance else 0)

    def S(self, k):
        k = np.asarray(k, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.f(-k) / self.f(k)

    def norming(self) -> tuple:
        """s_j = i f(-i k_j) / fdot(i k_j)."""
        return tuple(float(np.real(1j * self.f(-1j * kj) / self.fdot(1j * kj)))
                     for kj in self.bound_ks)

    def weights(self) -> tuple:
        """c_j = -4 k_j^2 / (s_j fdot(i k_j)^2)."""
        return tuple(float(np.real(-4 * kj**2 / (self.fdot(1j * kj) ** 2 * sj)))
                     for kj, sj in zip(self.bound_ks, self.norming()))

    def scattering_data(self, ks) -> ScatteringData:
        ks = np.asarray(ks, dtype=float)
        S = self.S(ks)
        if ks[0] == 0 and self.resonance:
            S[0] = -1.0
        return ScatteringData(ks, S, self.bound_ks, self.norming(), self.index)

    def spectral_function(self, ks) -> SpectralFunction:
        ks = np.asarray(ks, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = ks / (np.pi * np.abs(self.f(ks)) ** 2)
        if ks[0] == 0:
            dens[0] = np.inf if self.resonance else 0.0
        pts = [(-k * k, c) for k, c in zip(self.bound_ks, self.weights())]
        return SpectralFunction(ks**2, dens, pts)

    # -- Marchenko side --------------------------------------------------------

    def _S_roots(self):
        num = [1j * bn for bn in self.b] + [-1j * pn for pn in self.p]
        den = [1j * pn for pn in self.p] + [-1j * bn for bn in self.b]
        return _cancel(num, den)

    def _residues(self, skip_bound: bool = False):
        num, den = self._S_roots()
        out = []
        for j, r in enumerate(den):
            if skip_bound and any(abs(r - 1j * kj) < 1e-14 for kj in self.bound_ks):
                continue
            val = np.prod([r - z for z in num]) / np.prod([r - d for i, d in enumerate(den) if i != j])
            out.append((r, complex(val)))
        return out

    def F(self, x):
        """Marchenko function F(x) for any real x (F_s + F_d)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        up = x >= 0
        for r, res in self._residues(skip_bound=True):
            if r.imag > 0:
                # closing in the upper half plane: i * Res[-S e^{ikx}]
                out[up] += np.real(-1j * res * np.exp(1j * r * x[up]))
            else:
                out[~up] += np.real(1j * res * np.exp(1j * r * x[~up]))
        for kj, sj in zip(self.bound_ks, self.norming()):
            # for x > 0 the bound-state poles of S cancel F_d exactly
            out[~up] += sj * np.exp(-kj * x[~up])
        return out

    def _exponentials(self):
        """F(x) = sum C_m exp(-a_m x) for x > 0."""
        terms = [(r.imag, -1j * res) for r, res in self._residues(True) if r.imag > 0]
        a = np.array([t[0] for t in terms])
        C = np.array([np.real(t[1]) for t in terms])
        return a, C

    def _alpha(self, x):
        a, C = self._exponentials()
        n = a.size
        E = np.exp(-a * x)
        G = C[:, None] * np.outer(E, E) / (a[:, None] + a[None, :])
        b = C * E
        M = np.eye(n) + G
        alpha = np.linalg.solve(M, -b)
        dG = -C[:, None] * np.outer(E, E)
        db = -a * b
        dalpha = np.linalg.solve(M, -db - dG @ alpha)
        return a, alpha, dalpha

    def A(self, x, y):
        """Marchenko kernel A(x, y) for y >= x >= 0."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.asarray(y, dtype=float)
        out = np.empty(np.broadcast(x[:, None], np.atleast_1d(y)[None, :]).shape)
        for i, xi in enumerate(x):
            a, alpha, _ = self._alpha(xi)
            out[i] = np.exp(-np.outer(np.atleast_1d(y), a)) @ alpha
        return out

    def A_diag(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(x.shape)
        for i, xi in enumerate(x):
            a, alpha, _ = self._alpha(xi)
            out[i] = np.exp(-a * xi) @ alpha
        return out

    def q(self, x):
        """q = -2 d/dx A(x,x), differentiated analytically."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(x.shape)
        for i, xi in enumerate(x):
            a, alpha, dalpha = self._alpha(xi)
            out[i] = -2 * np.exp(-a * xi) @ (dalpha - a * alpha)
        return out

    def potential(self, X: float = 20.0, dx: float = 0.01) -> PotentialGrid:
        xs = np.linspace(0.0, X, int(round(X / dx)) + 1)
        return PotentialGrid(xs, self.q(xs))


def resonance_case(nu: float = 1.0) -> RationalJost:
    """f(k) = k/(k + i nu): no bound states, f(0) = 0, q = -2 nu^2 sech^2(nu x)."""
    return RationalJost((0.0,), (nu,))


def bargmann_case(k1: float = 1.0, r1: float = 1.0) -> RationalJost:
    """f(k) = (k - i k1)/(k + i nu1) with nu1^2 = k1^2 + r1: one bound state."""
    return RationalJost((-k1,), (float(np.sqrt(k1 * k1 + r1)),))


def krein_case(nu: float = 1.0, kappa: float = 2.0) -> RationalJost:
    """f(k) = (k + i nu)/(k + i kappa): no zeros in the closed upper half-plane."""
    return RationalJost((nu,), (kappa,))


def sech2(x, nu: float = 1.0):
    return -2 * nu**2 / np.cosh(nu * np.asarray(x)) ** 2


def resonance_A(x, y, nu: float = 1.0):
    return -2 * nu * np.exp(-nu * (x + y)) / (1 + np.exp(-2 * nu * x))


def gl_kernel_closed(x, y, k1: float, r1: float):
    """L(x,y) for the single-pole I-function with weight c_1 = 2 k1 r1."""
    c1 = 2 * k1 * r1
    return (r1 / (2 * k1) * (np.exp(-k1 * np.abs(x - y)) - np.exp(-k1 * (x + y)))
            + c1 * np.sinh(k1 * x) * np.sinh(k1 * y) / k1**2)
