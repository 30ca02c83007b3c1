import numpy as np
import pytest

from halfline.core import fourier_cos_transform, validate_scattering_data, winding_index
from halfline.errors import MalformedGrid, NonIntegerWinding, TailNotResolved, ZeroCrossing
from halfline.types import ScatteringData


def test_validate_free_data(kgrid):
    rep = validate_scattering_data(ScatteringData(kgrid, np.ones_like(kgrid)))
    assert rep.passed, rep.to_dict()
    assert rep.checks["index"]["value"] == 0


def test_validate_bound_state_data(bargmann, kgrid):
    rep = validate_scattering_data(bargmann.scattering_data(kgrid))
    assert rep.passed, rep.failures()
    assert rep.checks["index"]["value"] == -2


def test_validate_resonance_data(resonance, kgrid):
    rep = validate_scattering_data(resonance.scattering_data(kgrid))
    assert rep.passed, rep.failures()
    assert rep.checks["index"]["value"] == -1


def test_validate_reports_instead_of_raising(kgrid):
    S = np.exp(1j * np.linspace(0, 1, kgrid.size)) * 1.01
    rep = validate_scattering_data(ScatteringData(kgrid, S))
    assert not rep.passed
    assert "unitarity" in rep.failures() and "S_at_infinity" in rep.failures()


def test_validate_malformed_grid():
    class Bad:
        ks = np.array([0.0, 2.0, 1.0])
    with pytest.raises(MalformedGrid):
        validate_scattering_data(Bad())


def test_winding_examples(resonance, bargmann, kgrid):
    assert winding_index(kgrid, np.ones_like(kgrid)) == 0
    assert winding_index(kgrid, bargmann.S(kgrid)) == -2
    assert winding_index(kgrid, resonance.scattering_data(kgrid).S) == -1


def test_winding_errors(kgrid):
    with pytest.raises(ZeroCrossing):
        winding_index(kgrid, kgrid - 1.0)
    with pytest.raises(MalformedGrid):
        winding_index(kgrid, np.full(kgrid.size, np.nan))
    # phase runs a quarter turn and stops: not an integer winding
    g = np.exp(0.5j * np.pi * np.exp(-kgrid))
    with pytest.raises(NonIntegerWinding):
        winding_index(kgrid, g)


def test_winding_additive(resonance, bargmann, krein12, kgrid):
    gs = [c.scattering_data(kgrid).S for c in (resonance, bargmann, krein12)]
    for a in gs:
        for b in gs:
            assert winding_index(kgrid, a * b) == winding_index(kgrid, a) + winding_index(kgrid, b)


def test_cos_transform_zero():
    ks = np.linspace(0, 10, 101)
    np.testing.assert_array_equal(fourier_cos_transform(ks, np.zeros(101), [0.0, 1.0]), 0.0)


def test_cos_transform_lorentzian(kgrid):
    val = fourier_cos_transform(kgrid, 1 / (kgrid**2 + 1), [1.0])[0]
    exact = np.pi / 2 * np.exp(-1.0)
    assert abs(val - exact) / exact < 1e-6


def test_cos_transform_exponential():
    ts = np.linspace(0, 40, 40001)
    ks = np.array([0.0, 1.0, 2.0])
    val = fourier_cos_transform(ts, np.exp(-ts), ks, tail=None)
    exact = 1 / (1 + ks**2)
    assert np.max(np.abs(val / exact - 1)) < 1e-6


def test_cos_transform_tail_not_resolved():
    ts = np.linspace(0, 5, 501)
    with pytest.raises(TailNotResolved):
        fourier_cos_transform(ts, np.exp(-ts), [1.0], tail=None)


def test_cos_transform_round_trip():
    ts = np.linspace(0, 3, 601)
    g = np.where(ts < 2, np.cos(np.pi * ts / 4) ** 4, 0.0)
    ks = np.linspace(0, 400, 40001)
    G = fourier_cos_transform(ts, g, ks, tail=None, tail_tol=1.0)
    back = fourier_cos_transform(ks, G, ts[20:380], "inverse")
    assert np.max(np.abs(back - g[20:380])) < 1e-6
