import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from bbir.cli import main
from bbir.fourier_fit import ImpulseResponse, load_taps, save_taps
from bbir.touchstone import NetworkData, load_touchstone, write_touchstone
from bbir.transient import load_sim_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _cfg(tmp_path, **sections):
    data = yaml.safe_load((CONFIGS / "harness.yaml").read_text())
    for key, val in sections.items():
        data.setdefault(key, {}).update(val)
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(data))
    return str(path)


def test_synth_harness(tmp_path, capsys):
    assert main(["synth", "--config", _cfg(tmp_path)]) == 0
    out = tmp_path / "out" / "harness.s1p"
    data_lines = [l for l in out.read_text().splitlines() if l and l[0] not in "!#"]
    assert len(data_lines) == 201
    net = load_touchstone(out)
    assert net.freqs_hz[0] == 9.5e9 and net.freqs_hz[-1] == 10.5e9
    assert "201 points" in capsys.readouterr().out


def test_synth_matched_network_all_zero(tmp_path):
    cfg = _cfg(tmp_path, network={"sections": [{"z0_ohm": 50.0, "delay_s": 1e-9}], "load_ohm": 50.0})
    assert main(["synth", "--config", cfg]) == 0
    assert np.all(load_touchstone(tmp_path / "out" / "harness.s1p").s == 0)


@pytest.mark.parametrize(
    "sections",
    [
        {"band": {"f_start_hz": 10.5e9, "f_stop_hz": 9.5e9}},
        {"fit": {"tol": "abc"}},
        {"bogus": {}},
        {"source": {"kind": "square"}},
    ],
)
def test_bad_config_exit_2(tmp_path, sections):
    assert main(["synth", "--config", _cfg(tmp_path, **sections)]) == 2


def test_yaml_exponent_without_dot(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("fit:\n  tol: 1e-3\nband:\n  f_start_hz: 9.5e9\n  f_stop_hz: 10.5e9\n")
    assert main(["synth", "--config", str(path), "--output", str(tmp_path / "x.s1p")]) == 0


def test_fit_constant_file(tmp_path):
    src = tmp_path / "const.s1p"
    src.write_text(write_touchstone(NetworkData(np.linspace(1e9, 2e9, 11), np.full(11, 0.2 - 0.1j))))
    rep = tmp_path / "rep.json"
    args = ["fit", "--input", str(src), "--tol", "1e-9", "--report", str(rep),
            "--taps", str(tmp_path / "t.csv"), "--table", str(tmp_path / "tbl.csv")]
    assert main(args) == 0
    report = json.loads(rep.read_text())
    assert report["order_n"] == 0
    assert report["max_abs_error"] < 1e-12
    table = (tmp_path / "tbl.csv").read_text().splitlines()
    assert table[0] == "offset_rad,freq_hz,re_data_s11,im_data_s11,re_model_s11,im_model_s11"
    assert len(table) == 12


def test_fit_underdetermined_exit_3(tmp_path):
    src = tmp_path / "three.s1p"
    src.write_text(write_touchstone(NetworkData([1e9, 1.5e9, 2e9], [0.1, 0.2, 0.3])))
    assert main(["fit", "--input", str(src), "--order", "10", "--taps", str(tmp_path / "t.csv")]) == 3


def test_fit_parse_error_exit_2(tmp_path):
    src = tmp_path / "bad.s1p"
    src.write_text("# GHZ Z RI R 50\n1 0 0\n2 0 0\n")
    assert main(["fit", "--input", str(src)]) == 2
    assert main(["fit", "--input", str(tmp_path / "missing.s1p")]) == 2


def test_fit_unreachable_tolerance_exit_4(tmp_path):
    cfg = _cfg(tmp_path)
    assert main(["synth", "--config", cfg]) == 0
    assert main(["fit", "--config", cfg, "--n-max", "8"]) == 4


def test_fit_csv_input_needs_no_port_hint(tmp_path):
    from bbir.touchstone import write_csv

    src = tmp_path / "d.csv"
    src.write_text(write_csv(NetworkData(np.linspace(1e9, 2e9, 21), np.linspace(0, 0.5, 21))))
    assert main(["fit", "--input", str(src), "--order", "3", "--taps", str(tmp_path / "t.csv"),
                 "--report", str(tmp_path / "r.json"), "--table", str(tmp_path / "tb.csv")]) == 0


def test_sim_matched_trivial(tmp_path):
    taps = tmp_path / "zero.csv"
    save_taps(taps, ImpulseResponse(np.zeros(4), 2 * math.pi * 0.5e9, 10e9, 50.0))
    cfg = _cfg(tmp_path, source={"kind": "constant", "value_v": 1.0})
    wf = tmp_path / "wf.csv"
    assert main(["sim", "--config", cfg, "--taps", str(taps), "--n-steps", "10", "--output", str(wf)]) == 0
    res = load_sim_csv(wf)
    assert np.all(res.b == 0)
    np.testing.assert_allclose(res.i, 1 / 100, rtol=1e-14)


def test_sim_impulse_reproduces_taps(tmp_path, rng):
    ir = ImpulseResponse(rng.normal(size=7) + 1j * rng.normal(size=7), 2 * math.pi * 0.5e9, 10e9, 50.0)
    taps = tmp_path / "taps.csv"
    save_taps(taps, ir)
    cfg = _cfg(tmp_path, source={"kind": "impulse", "value_v": 2 * math.sqrt(50.0)})
    wf = tmp_path / "wf.csv"
    assert main(["sim", "--config", cfg, "--taps", str(taps), "--n-steps", "12", "--output", str(wf)]) == 0
    res = load_sim_csv(wf)
    np.testing.assert_allclose(res.b[:7, 0], ir.taps[:, 0, 0], atol=1e-15)


def test_compare_self_and_zero_threshold(tmp_path):
    cfg = _cfg(tmp_path, source={"kind": "constant"})
    taps = tmp_path / "taps.csv"
    save_taps(taps, ImpulseResponse([0.1, 0.05j], 2 * math.pi * 0.5e9, 10e9, 50.0))
    wf = tmp_path / "wf.csv"
    assert main(["sim", "--config", cfg, "--taps", str(taps), "--output", str(wf)]) == 0
    rep = tmp_path / "cmp.json"
    args = ["compare", "--config", cfg, "--waveform", str(wf), "--reference", str(wf), "--output", str(rep)]
    assert main(args + ["--threshold", "0"]) == 0
    assert json.loads(rep.read_text())["max_rel_err"] == 0.0

    other = tmp_path / "wf2.csv"
    save_taps(taps, ImpulseResponse([0.1, 0.06j], 2 * math.pi * 0.5e9, 10e9, 50.0))
    assert main(["sim", "--config", cfg, "--taps", str(taps), "--output", str(other)]) == 0
    # matched source: a is tap-independent, i differs through b
    assert main(["compare", "--config", cfg, "--waveform", str(other), "--reference", str(wf),
                 "--threshold", "0", "--output", str(rep)]) == 1


def test_compare_length_mismatch(tmp_path):
    cfg = _cfg(tmp_path, source={"kind": "constant"})
    taps = tmp_path / "taps.csv"
    save_taps(taps, ImpulseResponse([0.1], 2 * math.pi * 0.5e9, 10e9, 50.0))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sim", "--config", cfg, "--taps", str(taps), "--n-steps", "5", "--output", str(a)]) == 0
    assert main(["sim", "--config", cfg, "--taps", str(taps), "--n-steps", "6", "--output", str(b)]) == 0
    assert main(["compare", "--config", cfg, "--waveform", str(a), "--reference", str(b)]) == 3


def test_wide_period_pipeline(tmp_path, capsys):
    cfg = tmp_path / "wide.yaml"
    cfg.write_text((CONFIGS / "harness_wide.yaml").read_text())
    for cmd in ("synth", "fit", "sim", "compare"):
        assert main([cmd, "--config", str(cfg)]) == 0, cmd
    report = json.loads((tmp_path / "out_wide" / "compare.json").read_text())
    assert report["max_rel_err"] < 1e-2
    assert report["warmup_steps"] == load_taps(tmp_path / "out_wide" / "taps.csv").order_n + 1
