import time

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp
from scipy.special import spherical_jn, spherical_yn

from halfline.errors import Underflow
from halfline.fixed_energy import (asymptotic_a, fixed_energy_kernel, growth_bound_ratio,
                                   partial_wave_forward, radius_estimate, riccati_bessel)
from halfline.types import PotentialGrid


def step(a=1.0, height=1.0, n=1000):
    xs = np.linspace(0.0, a, n + 1)
    return PotentialGrid(xs, np.full(n + 1, height), a, "compact")


def rb(l, r):
    """Riccati-Bessel u_l = r j_l, v_l = r y_l and derivatives from scipy."""
    u = r * spherical_jn(l, r)
    du = spherical_jn(l, r) + r * spherical_jn(l, r, derivative=True)
    v = r * spherical_yn(l, r)
    dv = spherical_yn(l, r) + r * spherical_yn(l, r, derivative=True)
    return u, du, v, dv


def shooting_delta(l, height, a):
    """delta_l at k = 1 from the interior log-derivative of -u'' + (l(l+1)/r^2 + q) u = u."""
    r0 = 1e-3
    u0, du0, _, _ = rb(l, r0)

    def rhs(r, y):
        return [y[1], (l * (l + 1) / r**2 + height - 1.0) * y[0]]

    sol = solve_ivp(rhs, (r0, a), [u0, du0], method="DOP853", rtol=1e-12, atol=1e-40)
    L = sol.y[1, -1] / sol.y[0, -1]
    u, du, v, dv = rb(l, a)
    return np.arctan((du - L * u) / (dv - L * v))


@pytest.fixture(scope="module")
def unit_step():
    return partial_wave_forward(step(1.0), return_waves=True)


def test_riccati_bessel():
    rs = np.linspace(0, 3, 31)
    f = riccati_bessel(10, rs)
    for l in (0, 3, 10):
        u, _, v, _ = rb(l, rs[1:])
        np.testing.assert_allclose(f.u[l, 1:], u, rtol=1e-12)
        np.testing.assert_allclose(f.v[l, 1:], v, rtol=1e-12)


def test_zero_potential():
    ps = partial_wave_forward(step(1.0, 0.0))
    np.testing.assert_array_equal(ps.deltas, 0.0)
    with pytest.raises(Underflow):
        radius_estimate(ps)


def test_delta0_closed_form(unit_step):
    ps, _ = unit_step
    # interior solution r, matched to sin(r + delta0) at r = 1
    assert abs(ps.deltas[0] - (np.pi / 4 - 1)) < 1e-6


@pytest.mark.parametrize("l", [0, 1, 2, 5])
@pytest.mark.parametrize("height", [1.0, -3.0])
def test_delta_vs_shooting(l, height):
    ps = partial_wave_forward(step(1.0, height), L=max(l, 1))
    ref = shooting_delta(l, height, 1.0)
    assert abs(ps.deltas[l] - ref) <= 1e-5 * abs(ref) + 1e-10


@pytest.mark.parametrize("height", [1.0, -2.0])
def test_direct_march_wide_support(height):
    # a = 3 sends the low l through the direct march, which meets v_l(0) = -inf
    ps = partial_wave_forward(step(3.0, height), L=12)
    assert np.all(np.isfinite(ps.deltas))
    for l in (0, 1, 2, 5, 10):
        ref = shooting_delta(l, height, 3.0)
        assert abs(ps.deltas[l] - ref) <= 2e-5 * abs(ref) + 1e-10


def test_riccati_bessel_origin():
    rb = riccati_bessel(3, [0.0])
    np.testing.assert_array_equal(rb.u[:, 0], 0.0)
    assert rb.v[0, 0] == -1.0 and np.all(np.isinf(rb.v[1:, 0]))


def test_amplitudes_consistent(unit_step):
    ps, _ = unit_step
    np.testing.assert_allclose(ps.a_ells, np.exp(1j * ps.deltas) * np.sin(ps.deltas), atol=0)


def test_large_l_ratio(unit_step):
    _, waves = unit_step
    dev = {l: np.max(np.abs(waves[l].eta - 1)) for l in (20, 30, 40)}
    # psi_l = u_l (1 + O(1/l))
    assert dev[30] * 30 <= 1.1 * dev[20] * 20
    assert dev[40] * 40 <= 1.1 * dev[30] * 30


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_super_decay(a):
    ps = partial_wave_forward(step(a))
    l = np.arange(5, 41)
    g = np.log(np.abs(ps.deltas[l])) + 2 * l * np.log(2 * l / (np.e * a))
    assert np.all(g <= g[0] + 1e-9)


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_asymptotic_amplitude(a):
    q = step(a)
    ps = partial_wave_forward(q)
    l = np.arange(20, 41)
    asy = asymptotic_a(q, l)
    assert np.max(np.abs(ps.a_ells[l].real / asy - 1)) < 0.1


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_radius(a):
    t = time.perf_counter()
    est = radius_estimate(partial_wave_forward(step(a), L=40))
    assert abs(est.a_hat - a) < 0.1 * a
    assert time.perf_counter() - t < 30
    assert est.usable[1] == 40


def test_radius_amplitude_independent():
    a1 = radius_estimate(partial_wave_forward(step(1.0, 1.0))).a_hat
    a2 = radius_estimate(partial_wave_forward(step(1.0, 2.0))).a_hat
    assert abs(a2 / a1 - 1) < 0.05


def test_radius_richardson_variant():
    est = radius_estimate(partial_wave_forward(step(1.0)), method="richardson")
    assert est.method == "richardson" and est.a_hat == est.richardson
    assert abs(est.a_hat - 1.0) < 0.2


@pytest.fixture(scope="module")
def kernel():
    q = step(1.0, 1.0, 2000)
    return q, fixed_energy_kernel(q)


def test_kernel_zero():
    res = fixed_energy_kernel(step(1.0, 0.0))
    assert np.nanmax(np.abs(res.kernel.values)) == 0.0


def test_kernel_boundary(kernel):
    q, res = kernel
    # the diagonal of the solved L: K(r,r) = L(xi, 0) e^{xi/2}, r = e^{xi/2}
    rs = np.exp(0.5 * res.xi[::200])
    diag = res.L[::200, 0] * rs
    exact = np.array([0.5 * r * quad(lambda s: s * q(s), 0, r)[0] for r in rs])
    assert np.max(np.abs(diag - exact)) < 1e-8
    K = res.kernel
    assert np.max(np.abs(K.values[:, 0])) == 0.0
    # the interpolated values approach the diagonal continuously
    near = K.values[np.arange(2, K.xs.size), np.arange(1, K.xs.size - 1)]
    assert np.max(np.abs(near - K.diagonal[2:])) < 5e-3


def test_kernel_growth_bound(kernel):
    q, res = kernel
    assert growth_bound_ratio(res, q) <= 1.0


@pytest.mark.parametrize("l", [1, 3])
def test_kernel_transforms_free_solutions(kernel, l):
    """phi_l(r) = u_l(r) + int_0^r K(r, rho) u_l(rho) rho^-2 drho."""
    q, res = kernel
    K = res.kernel
    r = K.xs[-1]
    rho = K.xs[1:]
    u = rb(l, rho)[0]
    integ = np.trapezoid(K.values[-1, 1:] * u / rho**2, rho)
    phi = rb(l, r)[0] + integ
    r0 = 1e-3
    u0, du0, _, _ = rb(l, r0)
    sol = solve_ivp(lambda s, y: [y[1], (l * (l + 1) / s**2 + q(s) - 1.0) * y[0]],
                    (r0, r), [u0, du0], method="DOP853", rtol=1e-12, atol=1e-40)
    assert abs(phi - sol.y[0, -1]) < 1e-4
