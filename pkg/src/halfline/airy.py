"""Airy function Ai and its derivative.

Maclaurin series in extended precision for |z| <= SWITCH, asymptotic
expansions beyond. Accuracy is about 1e-12 absolute on the real line.
"""
from __future__ import annotations

import numpy as np

SWITCH = 8.0
AI0 = np.longdouble("0.355028053887817239260063186004")
AIP0 = np.longdouble("-0.258819403792806798405183560189")

_N_SERIES = 45


def _series_coefficients(n: int):
    a = np.ones(n, dtype=np.longdouble)
    b = np.ones(n, dtype=np.longdouble)
    for k in range(1, n):
        a[k] = a[k - 1] / ((3 * k - 1) * (3 * k))
        b[k] = b[k - 1] / ((3 * k) * (3 * k + 1))
    return a, b


_A, _B = _series_coefficients(_N_SERIES)
_KS = np.arange(_N_SERIES)


def _horner(c, w):
    out = np.zeros_like(w)
    for ck in c[::-1]:
        out = out * w + ck
    return out


def _series(z: np.ndarray):
    z = np.asarray(z, dtype=np.longdouble)
    w = z**3
    f = _horner(_A, w)
    g = z * _horner(_B, w)
    fp = z * z * _horner((3 * _KS[1:]) * _A[1:], w)
    gp = _horner((3 * _KS + 1) * _B, w)
    ai = AI0 * f + AIP0 * g
    aip = AI0 * fp + AIP0 * gp
    return np.asarray(ai, dtype=float), np.asarray(aip, dtype=float)


def _coefficients(n: int):
    u = np.ones(n)
    for k in range(1, n):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
    v = np.array([1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, n)])
    return u, v


_U, _V = _coefficients(40)


def _truncated(coef: np.ndarray, zeta: np.ndarray, alternating: bool, parity: int | None = None):
    """Sum of an asymptotic series stopped at its smallest term."""
    out = np.zeros_like(zeta)
    done = np.zeros(zeta.shape, dtype=bool)
    last = np.full(zeta.shape, np.inf)
    ks = range(coef.size) if parity is None else range(parity, coef.size, 2)
    for n, k in enumerate(ks):
        sign = (-1.0) ** (n if parity is not None else k) if alternating else 1.0
        term = sign * coef[k] / zeta**k
        grow = np.abs(term) > last
        done |= grow
        out = np.where(done, out, out + term)
        last = np.where(done, last, np.abs(term))
    return out


def _asym_pos(z: np.ndarray):
    zeta = 2.0 / 3.0 * z**1.5
    e = np.exp(-zeta) / (2 * np.sqrt(np.pi))
    ai = e / z**0.25 * _truncated(_U, zeta, True)
    aip = -e * z**0.25 * _truncated(_V, zeta, True)
    return ai, aip


def _asym_neg(z: np.ndarray):
    x = -z
    zeta = 2.0 / 3.0 * x**1.5
    th = zeta + np.pi / 4
    P = _truncated(_U, zeta, True, 0)
    Q = _truncated(_U, zeta, True, 1)
    Pv = _truncated(_V, zeta, True, 0)
    Qv = _truncated(_V, zeta, True, 1)
    ai = (np.sin(th) * P - np.cos(th) * Q) / (np.sqrt(np.pi) * x**0.25)
    aip = -x**0.25 / np.sqrt(np.pi) * (np.cos(th) * Pv + np.sin(th) * Qv)
    return ai, aip


def airy_ai(z, derivative: bool = False):
    """Ai(z), or the pair (Ai(z), Ai'(z)) when ``derivative`` is set."""
    z = np.asarray(z, dtype=float)
    flat = np.atleast_1d(z).ravel()
    ai = np.empty(flat.shape)
    aip = np.empty(flat.shape)
    mid = np.abs(flat) <= SWITCH
    pos = flat > SWITCH
    neg = flat < -SWITCH
    if mid.any():
        ai[mid], aip[mid] = _series(flat[mid])
    if pos.any():
        ai[pos], aip[pos] = _asym_pos(flat[pos])
    if neg.any():
        ai[neg], aip[neg] = _asym_neg(flat[neg])
    ai = ai.reshape(z.shape)
    aip = aip.reshape(z.shape)
    if z.ndim == 0:
        ai, aip = float(ai), float(aip)
    return (ai, aip) if derivative else ai
