import numpy as np
import pytest
from scipy.special import airy as sp_airy

from halfline import quarkonium as Q
from halfline.airy import airy_ai
from halfline.errors import SingularSystem
from halfline.types import QuarkoniumData


@pytest.fixture(scope="module")
def ref3():
    return Q.airy_reference(3)


@pytest.fixture(scope="module")
def perturbed(ref3):
    data = QuarkoniumData([2.0, ref3[1].E, ref3[2].E], [1.3, ref3[1].s, ref3[2].s])
    return data, Q.recover_potential(data, n_reference=3)


def test_airy_against_scipy():
    z = np.concatenate([np.linspace(-30, 12, 4001), [-8.0, 8.0, -8.0001, 8.0001]])
    ai, aip = airy_ai(z, derivative=True)
    ref_ai, ref_aip, _, _ = sp_airy(z)
    scale = np.maximum(1.0, np.abs(z) ** 0.25)
    assert np.max(np.abs(ai - ref_ai)) < 1e-11
    assert np.max(np.abs(aip - ref_aip) / scale) < 1e-11


def test_airy_scalar_and_series_values():
    assert airy_ai(0.0) == pytest.approx(0.355028053887817239, abs=1e-15)
    assert isinstance(airy_ai(1.0), float)


def test_first_airy_zero(ref3):
    assert ref3[0].E == pytest.approx(2.33810741045976703849, abs=1e-10)


def test_reference_roots_and_normalization(ref3):
    from scipy.integrate import quad
    for lv in ref3:
        assert abs(airy_ai(-lv.E)) < 1e-12
        integral = quad(lambda r: lv(r) ** 2, 0, 40, limit=400, epsabs=1e-14)[0]
        assert integral * lv.s**2 == pytest.approx(1.0, abs=1e-9)
        assert lv.c * airy_ai(-lv.E, derivative=True)[1] == pytest.approx(1.0)


def test_airy_zeros_rejects_nonpositive():
    with pytest.raises(ValueError):
        Q.airy_zeros(0)


def test_unperturbed_small_x():
    xs = np.linspace(0, 1e-3, 11)
    for E in (0.5, 3.0, 10.0):
        assert np.allclose(Q.unperturbed_solution(E, xs), xs, atol=1e-9)


def test_unperturbed_matches_airy_at_eigenvalue(ref3):
    # marching past r ~ 10 lets roundoff seed the growing Bi component
    xs = np.linspace(0, 10, 2001)
    for lv in ref3:
        phi = Q.unperturbed_solution(lv.E, xs)
        assert np.max(np.abs(phi - lv(xs))) < 1e-6
        assert abs(phi[-1]) < 1e-3 * np.max(np.abs(phi))


def test_unperturbed_grows_off_eigenvalue(ref3):
    xs = np.linspace(0, 12, 1201)
    for E in (ref3[0].E + 0.1, 3.0, ref3[1].E - 0.2):
        phi = Q.unperturbed_solution(E, xs)
        assert abs(phi[-1]) > 100 * np.max(np.abs(phi[: 400]))


def test_reference_data_gives_zero_potential():
    res = Q.recover_potential(Q.reference_data(3))
    assert np.max(np.abs(res.p)) < 1e-12
    assert np.allclose(res.potential.qs, res.potential.xs)


def test_single_level_closed_form(ref3):
    # one level below the spectrum, lowest two reference levels kept
    data = QuarkoniumData([1.5, ref3[0].E, ref3[1].E], [1.2, ref3[0].s, ref3[1].s])
    res = Q.recover_potential(data, n_reference=2)
    xs = res.potential.xs
    closed = Q.single_level_p(1.5, 1.2, xs)
    assert np.max(np.abs(res.p - closed)) < 1e-6


def test_forward_consistency_by_shooting(perturbed):
    data, res = perturbed
    E = Q.shooting_eigenvalues(res.potential, data.J)
    assert np.max(np.abs(E - np.asarray(data.energies))) < 1e-3


def test_shooting_oracle_on_reference(ref3):
    E = Q.shooting_eigenvalues(lambda r: r, 3, R=14.0)
    assert np.allclose(E, [lv.E for lv in ref3], atol=1e-4)


def test_degenerate_equals_nystrom(perturbed):
    data, res = perturbed
    xs = res.potential.xs
    funcs, _ = Q._spectral_jumps(data, res.reference)
    for x in (1.0, 3.0, 6.0):
        i = int(round(x / (xs[1] - xs[0])))
        ys, K = Q.nystrom_kernel(data, xs[i], n_reference=3)
        psi = np.stack([f(ys) for f in funcs], axis=1)
        assert np.max(np.abs(psi @ res.coefficients[i] - K)) < 1e-8 * max(1.0, np.max(np.abs(K)))


def test_kernel_from_coefficients(perturbed):
    _, res = perturbed
    i = 2000
    y = res.potential.xs[:i + 1]
    assert res.K(i, y)[-1] == pytest.approx(res.diagonal[i])


def test_perturbation_locality(perturbed):
    # p decays like (r - E)^(-3/2) past the turning point, far slower than 1e-4 here
    data, res = perturbed
    xs = res.potential.xs
    beyond = xs > data.energies[-1] + 4.0
    assert np.max(np.abs(res.p[beyond])) < 1e-4


def test_singular_system():
    # physical data never hit this; weights (-1, 1/2) on one function vanish the determinant at x = 2
    xs = np.linspace(0, 4, 65)
    psi = np.ones((xs.size, 2))
    funcs = [lambda x: np.ones_like(x)] * 2
    with pytest.raises(SingularSystem):
        Q._degenerate_solve(funcs, psi, np.array([-1.0, 0.5]), xs)


def test_malformed_grid(ref3):
    from halfline.errors import MalformedGrid
    with pytest.raises(MalformedGrid):
        Q.recover_potential(Q.reference_data(1), xs=np.linspace(1, 5, 10))
