"""Scalar Riemann problems on the real axis: f from S, from |f| or from I.

All three conversions reduce to one construction. A function f_0 that is
analytic and zero-free in the upper half-plane with f_0(inf) = 1 is
recovered from its phase beta = arg f_0 (odd in k) or from its log-modulus
alpha = log|f_0| (even in k) on the real axis by

    log f_0 = alpha + i beta,   alpha = H[beta]/pi,   beta = -H[alpha]/pi,

where H is the principal-value Hilbert transform over the real axis.
Off the axis, at k = i kappa, the same Cauchy integrals are evaluated
without a principal value. The bound states enter through the Blaschke
product w(k) and a zero-energy resonance through the factor k/(k + i kappa).
"""
from __future__ import annotations

import numpy as np

from .core import unwrap_from_top, winding_index
from .errors import BranchError, IndexMismatch, KappaCollision, NonHerglotz, ZeroModulus
from .quadrature import cauchy_imaginary_axis, hilbert_half_line
from .types import IFunction, JostData, ScatteringData, SpectralFunction, check_grid

#: default location of the auxiliary pole used in the resonance case
KAPPA = 1.0


def blaschke_product(ks, bound_ks=(), kappa: float | None = None) -> np.ndarray:
    """w(k) = prod (k - i k_j)/(k + i k_j), times k/(k + i kappa) if ``kappa`` is given.

    ``ks`` may be complex.

    Raises
    ------
    KappaCollision
        If ``kappa`` equals one of the ``bound_ks``.
    """
    ks = np.asarray(ks)
    w = np.ones(ks.shape, dtype=complex)
    for kj in bound_ks:
        w *= (ks - 1j * kj) / (ks + 1j * kj)
    if kappa is not None:
        if any(abs(kappa - kj) < 1e-12 * max(1.0, kj) for kj in bound_ks):
            raise KappaCollision(f"kappa = {kappa} coincides with a bound state")
        w *= ks / (ks + 1j * kappa)
    return w


def _blaschke_slope(bound_ks, j: int) -> complex:
    """Derivative of w at its zero i k_j."""
    kj = bound_ks[j]
    val = 1.0 / (2j * kj)
    for l, kl in enumerate(bound_ks):
        if l != j:
            val *= (kj - kl) / (kj + kl)
    return val


def _fdot_bound(f0_at, bound_ks, kappa):
    """fdot(i k_j) for f = f_0 * w * [k/(k + i kappa)]."""
    out = []
    for j, kj in enumerate(bound_ks):
        d = f0_at(kj) * _blaschke_slope(bound_ks, j)
        if kappa is not None:
            d *= kj / (kj + kappa)  # i k/(i k + i kappa)
        out.append(complex(d))
    return out


def _from_phase(ks, beta, tail="fit"):
    """f_0 on the real axis and an evaluator of f_0(i kappa) from beta = arg f_0."""
    alpha = hilbert_half_line(ks, beta, "odd", tail=tail) / np.pi
    f0 = np.exp(alpha + 1j * beta)

    def at(kappa):
        return np.exp(np.real(cauchy_imaginary_axis(ks, beta, "odd", kappa)) / np.pi)

    return f0, at


def _from_logmod(ks, alpha, tail="fit"):
    """f_0 on the real axis and f_0(i kappa) from alpha = log|f_0|."""
    beta = -hilbert_half_line(ks, alpha, "even", tail=tail) / np.pi
    f0 = np.exp(alpha + 1j * beta)

    def at(kappa):
        return np.exp(np.real(cauchy_imaginary_axis(ks, alpha, "even", kappa) / (1j * np.pi)))

    return f0, at


def jost_from_S(sd: ScatteringData, kappa: float = KAPPA,
                max_step: float = 0.5 * np.pi) -> JostData:
    """Jost function from scattering data by factorizing S(-k) = f(k)/f(-k).

    With w the Blaschke product of the bound states, f = f_0 w when the
    index is -2J and f = f_0 w k/(k + i kappa) when it is -2J-1. The phase
    of f_0 is half the continuous argument of S(-k) w^-2 (times
    (k + i kappa)/(k - i kappa) in the odd case), unwrapped from k_max.
    The result does not depend on ``kappa``.

    Raises
    ------
    IndexMismatch
        If the winding of S disagrees with ``sd.index``.
    BranchError
        If arg S jumps by more than ``max_step`` between nodes.
    """
    ks = np.asarray(sd.ks)
    try:
        ind = winding_index(ks, sd.S)
    except Exception as exc:
        raise IndexMismatch(f"winding of S could not be computed: {exc}") from exc
    if ind != sd.index:
        raise IndexMismatch(f"winding of S is {ind} but the data declare {sd.index}")
    bk = list(sd.bound_ks)
    odd = sd.resonance
    kap = kappa if odd else None
    w = blaschke_product(ks, bk)
    G = np.conj(sd.S) / w**2
    if odd:
        blaschke_product(ks, bk, kappa)  # collision check
        G = G * (ks + 1j * kappa) / (ks - 1j * kappa)
    theta = unwrap_from_top(ks, G, max_step, BranchError)
    if abs(theta[0]) > 0.5 and ks[0] == 0:
        raise BranchError(f"arg of the index-free factor is {theta[0]:.3f} at k = 0")
    f0, at = _from_phase(ks, 0.5 * theta)
    f = f0 * blaschke_product(ks, bk, kap)
    fdot = _fdot_bound(at, bk, kap)
    return JostData(ks, f, None, bk, fdot, resonance=odd)


def _extrapolate_even(ks, vals):
    """Value at k = 0 of an even function from the next three nodes."""
    k = ks[1:4]
    v = vals[1:4]
    coef = np.polyfit(k**2, v, 2)
    return float(np.polyval(coef, 0.0))


def jost_from_modulus(ks, absf, bound_ks=(), resonance: bool = False,
                      kappa: float = KAPPA) -> JostData:
    """Jost function from |f(k)| on k >= 0 (Schwarz formula for the half-plane).

    The phase of the zero-free factor is minus the Hilbert transform of
    log|f_0| divided by pi; the modulus is returned unchanged.

    Raises
    ------
    ZeroModulus
        If ``absf`` vanishes at a node with k > 0.
    """
    ks = np.asarray(ks, dtype=float)
    absf = np.asarray(absf, dtype=float)
    check_grid(ks, "ks")
    if np.any(absf[ks > 0] <= 0) or not np.all(np.isfinite(absf[ks > 0])):
        raise ZeroModulus("|f| must be positive and finite for k > 0")
    bk = sorted(float(k) for k in bound_ks)
    kap = kappa if resonance else None
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.log(absf)
        if resonance:
            alpha = alpha + 0.5 * np.log(ks**2 + kappa**2) - np.log(ks)
    if ks[0] == 0 and (resonance or not np.isfinite(alpha[0])):
        alpha[0] = _extrapolate_even(ks, alpha)
    f0, at = _from_logmod(ks, alpha)
    w = blaschke_product(ks, bk, kap)
    f = np.abs(absf) * f0 / np.abs(f0) * w / np.where(np.abs(w) > 0, np.abs(w), 1.0)
    if resonance and ks[0] == 0:
        f[0] = 0.0
    fdot = _fdot_bound(at, bk, kap)
    return JostData(ks, f, None, bk, fdot, resonance=resonance)


def _s_from_jost(jd: JostData) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        S = np.conj(jd.f) / jd.f
    if jd.ks[0] == 0:
        S[0] = -1.0 if jd.resonance else 1.0
    return S


def s_from_spectral(sf: SpectralFunction, kappa: float = KAPPA,
                    resonance: bool | None = None) -> ScatteringData:
    """Scattering data from the spectral function.

    |f(k)|^2 = k/(pi rho'(k^2)), the Jost function follows from its modulus
    and the norming constants from s_j = -4 k_j^2/(fdot(i k_j)^2 c_j).
    A zero-energy resonance is detected from an infinite density at
    lambda = 0 unless ``resonance`` is given.
    """
    lam = np.asarray(sf.lambdas)
    ks = np.sqrt(lam)
    dens = np.asarray(sf.density, dtype=float)
    if resonance is None:
        resonance = bool(lam[0] == 0 and not np.isfinite(dens[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        absf = np.sqrt(ks / (np.pi * dens))
    if lam[0] == 0:
        absf[0] = 0.0 if resonance else np.nan
    if lam[0] == 0 and not resonance:
        absf[0] = np.exp(_extrapolate_even(ks, np.log(absf)))
    bk = list(sf.bound_ks)
    jd = jost_from_modulus(ks, absf, bk, resonance, kappa)
    s = [float(np.real(-4 * k * k / (fd**2 * c))) for k, fd, c in
         zip(jd.bound_ks, jd.fdot_at_bound, _weights_by_k(sf))]
    index = -2 * len(bk) - (1 if resonance else 0)
    return ScatteringData(ks, _s_from_jost(jd), list(jd.bound_ks), s, index)


def _weights_by_k(sf: SpectralFunction):
    pairs = sorted(zip(sf.bound_ks, sf.weights))
    return [c for _, c in pairs]


def scattering_from_ifunction(ifn: IFunction, kappa: float = KAPPA) -> ScatteringData:
    """Scattering data from the I-function.

    |f|^2 = k/Im I(k); the Jost function follows from its modulus and the
    norming constants from s_j = -2 i k_j/(a_j fdot(i k_j)^2).

    Raises
    ------
    NonHerglotz
        If Im I(k) <= 0 for some k > 0.
    """
    ks = np.asarray(ifn.ks)
    imI = np.asarray(ifn.I).imag
    pos = ks > 0
    if np.any(~(imI[pos] > 0)):
        raise NonHerglotz("Im I(k) must be positive for k > 0")
    absf = np.empty(ks.size)
    absf[pos] = np.sqrt(ks[pos] / imI[pos])
    if not np.all(pos):
        if ifn.resonance:
            absf[~pos] = 0.0
        else:
            absf[~pos] = np.exp(_extrapolate_even(ks, np.log(np.where(pos, absf, 1.0))))
    jd = jost_from_modulus(ks, absf, ifn.poles, ifn.resonance, kappa)
    s = [float(np.real(-2j * k / (a * fd**2)))
         for k, a, fd in zip(jd.bound_ks, ifn.residues, jd.fdot_at_bound)]
    index = -2 * len(ifn.poles) - (1 if ifn.resonance else 0)
    return ScatteringData(ks, _s_from_jost(jd), list(jd.bound_ks), s, index)
