import json

import numpy as np
import pytest

from halfline import benchmarks as bm
from halfline import io
from halfline.cli import main
from halfline.errors import ConfigError, ZeroResponse
from halfline.pipeline import run_pipeline, validate_config, wave_reduction
from halfline.types import PotentialGrid, QuarkoniumData

FAST = {"X": 3.0, "dx": 0.02, "k_max": 100.0, "dk": 0.05, "X_potential": 15.0}


def _zero_potential(path):
    xs = np.linspace(0, 10, 501)
    io.save_json(PotentialGrid(xs, np.zeros_like(xs)), path)
    return path


# -- configuration -------------------------------------------------------------

def test_defaults_filled():
    cfg = validate_config({"pipeline": "forward", "input": {"benchmark": "sech2"}})
    assert cfg["grid"]["dk"] == 0.025
    assert cfg["tolerances"]["q"] == 1e-3


@pytest.mark.parametrize("cfg, path", [
    ({"input": {"benchmark": "sech2"}}, "config.pipeline"),
    ({"pipeline": "nope", "input": {"benchmark": "sech2"}}, "config.pipeline"),
    ({"pipeline": "forward"}, "config.input"),
    ({"pipeline": "forward", "input": {"benchmark": "sech2", "potential": "q.json"}}, "config.input"),
    ({"pipeline": "forward", "input": {"benchmark": "bogus"}}, "config.input.benchmark"),
    ({"pipeline": "forward", "input": {"benchmark": "sech2"}, "grid": {"dx": -1}}, "config.grid.dx"),
    ({"pipeline": "forward", "input": {"benchmark": "sech2"}, "grid": {"k_max": "big"}}, "config.grid.k_max"),
    ({"pipeline": "forward", "input": {"benchmark": "sech2"}, "tolerances": {"q": 0}}, "config.tolerances.q"),
])
def test_config_errors_name_field(cfg, path):
    with pytest.raises(ConfigError, match=path.replace(".", r"\.")):
        validate_config(cfg)


def test_config_missing_file(tmp_path):
    cfg = {"pipeline": "forward", "input": {"potential": str(tmp_path / "missing.json")}}
    with pytest.raises(ConfigError, match=r"config\.input\.potential"):
        run_pipeline(cfg)


# -- pipelines -----------------------------------------------------------------

def test_forward_zero_potential(tmp_path):
    cfg = {"pipeline": "forward", "input": {"potential": str(_zero_potential(tmp_path / "q.json"))},
           "grid": FAST, "output": {"dir": str(tmp_path / "out")}}
    rep = run_pipeline(cfg)
    assert rep["passed"]
    sd = io.load_json(tmp_path / "out" / "scattering.json")
    assert np.max(np.abs(sd.S - 1)) < 1e-12
    cols = io.read_csv(tmp_path / "out" / "scattering.csv")
    assert list(cols) == ["k", "ReS", "ImS"]
    assert (tmp_path / "out" / "report.json").exists()


def test_roundtrip_sech2():
    rep = run_pipeline({"pipeline": "roundtrip", "input": {"benchmark": "sech2", "nu": 1.0},
                        "grid": {"X": 3.0, "dx": 0.01}})
    assert rep["checks"]["roundtrip_q"]["value"] < 1e-3
    assert rep["passed"]


def test_compare_table(tmp_path):
    rep = run_pipeline({"pipeline": "compare", "input": {"benchmark": "krein"},
                        "grid": {"X": 2.0, "dx": 0.02}, "output": {"dir": str(tmp_path)}})
    tab = rep["_tables"]["compare"]
    assert tab.shape[1] == 4
    assert rep["passed"], rep["checks"]
    header = (tmp_path / "compare.csv").read_text().splitlines()[0]
    assert header == "x,q_marchenko,q_gl,q_krein"
    exact = bm.krein_case().q(tab[:, 0])
    assert np.max(np.abs(tab[:, 1:] - exact[:, None])) < 2e-3 * np.max(np.abs(exact))


def test_single_method_pipelines():
    for name in ("marchenko", "gl", "krein"):
        rep = run_pipeline({"pipeline": name, "input": {"benchmark": "krein"}, "grid": {"X": 2.0, "dx": 0.02}})
        assert rep["passed"], (name, rep["checks"])
        assert f"{name}_vs_exact" in rep["checks"]


def test_reports_deterministic(tmp_path):
    texts = []
    for d in ("a", "b"):
        cfg = {"pipeline": "forward", "input": {"benchmark": "bargmann"}, "grid": FAST,
               "output": {"dir": str(tmp_path / d)}}
        run_pipeline(cfg)
        rep = json.loads((tmp_path / d / "report.json").read_text())
        rep["config"]["output"]["dir"] = None
        texts.append(json.dumps(rep, sort_keys=True))
        texts.append((tmp_path / d / "scattering.json").read_text())
    assert texts[0] == texts[2]
    assert texts[1] == texts[3]


# -- wave-equation reduction ---------------------------------------------------

def test_wave_free():
    ks = np.linspace(0, 20, 401)
    wr = wave_reduction([1.0], [0.0], ks)
    assert np.max(np.abs(wr.jost.f - 1)) < 1e-14
    assert not wr.jost.resonance


def test_wave_synthetic_roundtrip():
    # a(t) = (kappa - nu) e^{-nu (t - 1)} is the inverse transform of e^{ik}/f(k) - e^{ik}
    nu, kappa = 1.0, 2.0
    case = bm.krein_case(nu, kappa)
    ts = np.linspace(1.0, 41.0, 40001)
    a = (kappa - nu) * np.exp(-nu * (ts - 1))
    ks = np.linspace(0, 50, 1001)
    wr = wave_reduction(ts, a, ks)
    assert np.max(np.abs(wr.jost.f - case.f(ks))) < 1e-3
    assert wr.scattering.index == 0


def test_wave_resonance_flagged():
    # a(t) = nu for t > 1 reproduces f = k/(k + i nu)
    nu = 1.0
    ks = np.linspace(0, 20, 401)
    wr = wave_reduction([1.0, 2.0], [nu, nu], ks, constant_tail=True)
    assert wr.jost.resonance
    assert wr.scattering.index == -1
    assert np.max(np.abs(wr.jost.f - bm.resonance_case(nu).f(wr.jost.ks))) < 1e-10


def test_wave_zero_response():
    with pytest.raises(ZeroResponse):
        wave_reduction([1.0, 2.0], [0.0, 0.0], np.linspace(0, 5, 11), impulses=())


# -- command line --------------------------------------------------------------

def test_cli_forward_zero(tmp_path, capsys):
    q = _zero_potential(tmp_path / "q.json")
    assert main(["forward", str(q), "--k-max", "20", "--dk", "0.1", "-o", str(tmp_path / "o")]) == 0
    sd = io.load_json(tmp_path / "o" / "scattering.json")
    assert np.allclose(sd.S, 1)
    assert "index = 0" in capsys.readouterr().out


def test_cli_forward_csv(tmp_path):
    xs = np.linspace(0, 1, 101)
    io.write_csv(tmp_path / "q.csv", "potential", xs, np.ones_like(xs))
    assert main(["forward", str(tmp_path / "q.csv"), "--decay-class", "compact", "--support", "1",
                 "--k-max", "20", "--dk", "0.1"]) == 0


def test_cli_convert(tmp_path, capsys):
    sd = bm.resonance_case().scattering_data(np.linspace(0, 100, 2001))
    io.save_json(sd, tmp_path / "s.json")
    assert main(["convert", str(tmp_path / "s.json"), "--to", "jost", "-o", str(tmp_path)]) == 0
    assert "ScatteringData -> JostData" in capsys.readouterr().out
    jd = io.load_json(tmp_path / "jost.json")
    assert jd.resonance
    assert main(["convert", str(tmp_path / "s.json"), "--to", "csv", "-o", str(tmp_path)]) == 0
    assert (tmp_path / "scattering.csv").exists()


def test_cli_inversions():
    common = ["--benchmark", "krein", "--X", "2", "--dx", "0.02"]
    assert main(["invert-marchenko", *common]) == 0
    assert main(["invert-gl", *common]) == 0
    assert main(["invert-krein", *common]) == 0
    assert main(["invert-krein", *common, "--hybrid"]) == 0


def test_cli_check_failure_exit_1():
    # a tolerance nobody meets
    assert main(["invert-marchenko", "--benchmark", "krein", "--X", "2", "--dx", "0.05",
                 "--tol", "1e-14"]) == 1


def test_cli_phase_shifts_and_radius(tmp_path, capsys):
    assert main(["phase-shifts", "--step", "1", "--L", "20", "-o", str(tmp_path)]) == 0
    assert "l =  0" in capsys.readouterr().out
    assert main(["radius", str(tmp_path / "phase_shifts.json"), "--expect", "1"]) == 0
    assert main(["radius", "--step", "1", "--expect", "3"]) == 1


def test_cli_quarkonium(tmp_path):
    from halfline.quarkonium import airy_reference
    ref = airy_reference(2)
    doc = {"energies": [1.6, ref[1].E], "slopes": [1.1, ref[1].s]}
    (tmp_path / "d.json").write_text(json.dumps(doc))
    assert main(["quarkonium", str(tmp_path / "d.json"), "-o", str(tmp_path)]) == 0
    q = io.load_json(tmp_path / "potential.json")
    assert q.decay_class == "confining"
    io.save_json(QuarkoniumData(doc["energies"], doc["slopes"]), tmp_path / "typed.json")
    assert main(["quarkonium", str(tmp_path / "typed.json")]) == 0


def test_cli_wave_reduce(tmp_path, capsys):
    ts = np.linspace(1.0, 31.0, 30001)
    a = np.exp(-(ts - 1))
    np.savetxt(tmp_path / "a.csv", np.column_stack([ts, a]), delimiter=",", header="t,a", comments="")
    assert main(["wave-reduce", str(tmp_path / "a.csv"), "--invert", "-o", str(tmp_path)]) == 0
    assert "resonance: False" in capsys.readouterr().out
    q = io.load_json(tmp_path / "potential.json")
    exact = bm.krein_case(1.0, 2.0).q(q.xs)
    assert np.max(np.abs(q.qs - exact)) < 5e-2


def test_cli_roundtrip_and_compare(tmp_path, capsys):
    assert main(["roundtrip", "--benchmark", "sech2", "--X", "3", "-o", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "report.json").read_text())["passed"]
    assert main(["compare", "--benchmark", "krein", "--X", "2", "--dx", "0.02"]) == 0
    assert "q_marchenko" in capsys.readouterr().out


def test_cli_pipeline_config_file(tmp_path):
    cfg = {"input": {"benchmark": "bargmann"}, "grid": {"X": 2.0, "dx": 0.02}}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert main(["roundtrip", "--config", str(tmp_path / "c.json")]) == 0


@pytest.mark.parametrize("argv", [
    ["forward", "/nonexistent/q.json"],
    ["invert-marchenko"],
    ["roundtrip"],
    ["invert-marchenko", "--benchmark", "sech2", "--param", "bad"],
    ["invert-marchenko", "--benchmark", "sech2", "--param", "k1=1"],
    ["convert", "/nonexistent.json", "--to", "jost"],
])
def test_cli_input_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
