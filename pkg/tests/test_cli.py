import json

import pytest

from hitseries.cli import DEFAULTS, config_hash, load_config, main, validate_config


def run(tmp_path, *args, name="out.json"):
    out = tmp_path / name
    code = main([*args, "--output", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_mc_hit_identity(tmp_path):
    code, text = run(tmp_path, "mc-hit", "--x", "1", "--n-paths", "100000", "--n-cells", "256", "--seed", "5")
    assert code == 0
    rec = json.loads(text)
    assert rec["method"] == "mc_bridge" and rec["seed"] == 5 and len(rec["config_hash"]) == 64
    assert abs(rec["p_hat"] - 0.31731) < 3 * rec["stderr"] + 1e-3
    for key in ("p_hat", "stderr", "n_paths", "n_cells", "seed", "method"):
        assert key in rec


def test_series_zero_beta_equals_order_zero_kernel(tmp_path):
    args = ["--preset", "partial_bridge", "--beta", "0", "--x", "0.8", "--n-max", "2", "--time-grid", "16"]
    code, series = run(tmp_path, "series-hit", *args)
    assert code == 0
    code, kernels = run(tmp_path, "kernels", *args, name="k.json")
    assert code == 0
    assert json.loads(series)["value"] == json.loads(kernels)["n0"]


def test_series_and_oracle_agree_within_declared_tolerance(tmp_path):
    args = ["--preset", "partial_bridge", "--beta", "0.3", "--x", "1"]
    s = json.loads(run(tmp_path, "series-hit", *args)[1])
    o = json.loads(run(tmp_path, "oracle-hit", *args, name="o.json")[1])
    assert abs(s["value"] - o["p_hat"]) <= s["declared_tolerance"]
    assert s["tail_bound_kind"] == "empirical"
    assert set(s["per_order"]) == {"0", "1", "2", "3"}
    assert s["convergence"]["passed"]
    assert s["config_hash"] == o["config_hash"]


def test_validate_exits_zero(tmp_path):
    code, text = run(tmp_path, "validate")
    assert code == 0 and json.loads(text)["passed"]


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"mc": {"bogus": 1}}')
    assert main(["mc-hit", "--config", str(bad)]) == 2
    assert "mc.bogus" in capsys.readouterr().err
    bad.write_text('{"mc": {\n "seed": }')
    assert main(["mc-hit", "--config", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["mc-hit", "--beta", "1.0"]) == 2
    assert main(["mc-hit", "--x", "0", "--b", "0"]) == 2
    assert main(["mc-hit", "--n-paths", "10"]) == 2
    assert main(["oracle-hit", "--preset", "kernel_preset"]) == 2
    assert main(["mc-hit", "--config", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["mc-hit", "--no-such-flag"])
    assert exc.value.code == 2


def test_numeric_errors_exit_three(tmp_path, capsys):
    code, _ = run(tmp_path, "series-hit", "--preset", "fourier_rank", "--betas", "0.3,0.3", "--frequencies", "0,-1")
    assert code == 3
    assert "NonOrthonormalBasis" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"domain": {"x": 2.0}, "oracle": {"quad_order": 40}}))
    code, text = run(tmp_path, "oracle-hit", "--config", str(cfg), "--x", "0.5")
    rec = json.loads(text)
    assert code == 0 and rec["x"] == 0.5


def test_csv_outputs_have_sidecar(tmp_path):
    code, text = run(tmp_path, "sample", "--n-cells", "8", "--sample-paths", "3", "--preset", "partial_bridge", name="s.csv")
    assert code == 0
    lines = text.split("\n")
    assert lines[0] == "path,t,coord,value" and len(lines) == 1 + 3 * 9 + 1
    assert "\r" not in text
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert meta["command"] == "sample" and meta["seed"] == 0
    code, text = run(tmp_path, "covariance", "--n-cells", "4", name="c.csv")
    assert text.splitlines()[0] == "s,t,value" and len(text.splitlines()) == 26
    code, text = run(tmp_path, "kernels", "--preset", "fourier_rank", "--time-grid", "8", "--n-max", "2", "--format", "csv", name="k.csv")
    assert code == 0 and text.splitlines()[0] == "n,multi_index,value"
    assert len(text.splitlines()) == 1 + 1 + 2 + 3


def test_csv_to_stdout_puts_meta_on_stderr(capsys):
    assert main(["covariance", "--n-cells", "2"]) == 0
    out, err = capsys.readouterr()
    assert out.startswith("s,t,value\n")
    assert json.loads(err)["command"] == "covariance"


def test_config_hash_ignores_output_and_workers():
    a = validate_config(load_config(None))
    b = validate_config({**a, "workers": 4, "output": {"format": "csv", "path": "x"}})
    assert config_hash(a) == config_hash(b)
    c = validate_config({**a, "mc": {**a["mc"], "seed": 1}})
    assert config_hash(a) != config_hash(c)


def test_every_field_has_default():
    cfg = validate_config(load_config(None))
    assert set(cfg) == set(DEFAULTS)
