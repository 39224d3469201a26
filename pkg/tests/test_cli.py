import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from koopman_attractors.cache import TrajectoryCache
from koopman_attractors.cli import main
from koopman_attractors.flow import builtin

SMALL = {
    "name": "small",
    "experiments": [
        {"name": "decay", "flow": {"builtin": "decay"}, "grid": {"h": 0.1},
         "sets": ["zero", "whole"],
         "sampler": {"kind": "gaussian", "n": 100, "seed": 0},
         "checks": [{"property": "attractive", "eps": 0.1, "T": 50},
                    {"property": "milnor", "eps": 0.1, "T": 50, "sets": ["zero"]},
                    {"property": "weak", "eps": 0.1, "T": 50}],
         "estimators": [{"kind": "minimal_attractor", "eps": 0.1, "dt": 0.1, "burn_in": 25,
                         "horizon": 50, "reference": [[0.0], [3.141592653589793]]},
                        {"kind": "minimal_center", "eps": 0.1, "dt": 0.1, "burn_in": 25,
                         "horizon": 50}]},
        {"name": "cycle", "flow": {"finite": [1, 2, 0, 2, 5, 6, 4]},
         "sets": [{"name": "first", "points": [[0], [1], [2]]}],
         "checks": [{"property": "attractive", "eps": 0.5, "T": 30}]},
    ],
    "oracle": {"systems": 5, "max_n": 6, "seed": 1},
}


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(yaml.safe_dump(SMALL))
    return p


def test_list_builtins(capsys):
    assert main(["list-builtins"]) == 0
    out = capsys.readouterr().out
    for name in ("translation", "decay", "hilmy", "north_south"):
        assert f"{name}:" in out
    assert "hilmy.cfg" in out


def test_verify_oracle(tmp_path, capsys):
    assert main(["verify-oracle", "--systems", "20", "--max-n", "8", "--seed", "2",
                 "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "0 mismatches" in out and "minimal_sets: 20 systems checked" in out
    doc = json.loads((tmp_path / "oracle.json").read_text())
    assert doc["oracle"]["n_systems"] == 20 and doc["oracle"]["n_mismatches"] == 0


def test_run_small_config(small_cfg, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", str(small_cfg), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "decay/zero/attractive: fails" in text
    assert "decay/zero/milnor: holds" in text
    assert "cycle/first/attractive: fails" in text
    rep = json.loads((out / "report.json").read_text())
    assert rep["summary"]["n_errors"] == 0 and rep["oracle"]["n_mismatches"] == 0
    est = {e["label"]: e for e in rep["experiments"][0]["estimates"]}
    assert est["minimal_attractor"]["hausdorff_to_reference"] <= 0.1
    assert (out / est["minimal_attractor"]["points_csv"]).read_text().startswith("x0\n")
    assert (out / est["minimal_attractor"]["plot_svg"]).read_text().lstrip().startswith("<")
    curves = [v["curve_csv"] for v in rep["experiments"][0]["verdicts"] if "curve_csv" in v]
    assert curves and all((out / c).read_text().startswith("t,value") for c in curves)
    assert "wall_clock_seconds" in json.loads((out / "timing.json").read_text())


def test_reports_are_byte_identical(small_cfg, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["run", str(small_cfg), "--out", str(a)]) == 0
    # warm cache in the same directory
    first = (a / "report.json").read_bytes()
    assert main(["run", str(small_cfg), "--out", str(a)]) == 0
    timing = json.loads((a / "timing.json").read_text())["wall_clock_seconds"]
    assert timing["cache"]["hits"] > 0
    assert (a / "report.json").read_bytes() == first
    assert main(["run", str(small_cfg), "--out", str(b), "--no-cache"]) == 0
    assert not (b / "cache").exists()
    assert (b / "report.json").read_bytes() == first
    assert main(["--threads", "3", "run", str(small_cfg), "--out", str(c)]) == 0
    assert (c / "report.json").read_bytes() == first


def test_corrupt_cache_entry_is_recomputed(small_cfg, tmp_path):
    out = tmp_path / "o"
    main(["run", str(small_cfg), "--out", str(out)])
    ref = (out / "report.json").read_bytes()
    for f in (out / "cache").glob("*.npz"):
        f.write_bytes(b"garbage")
    assert main(["run", str(small_cfg), "--out", str(out)]) == 0
    assert (out / "report.json").read_bytes() == ref


def test_cache_key_semantics(tmp_path):
    cache = TrajectoryCache(tmp_path)
    _, coarse = builtin("hilmy", dt_internal=0.01)
    _, fine = builtin("hilmy", dt_internal=0.005)
    x = np.array([[1.5, 0.0]])
    assert cache.key("orbit", coarse, x, 0.1) != cache.key("orbit", fine, x, 0.1)
    assert cache.key("orbit", coarse, x, 0.1) != cache.key("orbit", coarse, x, 0.2)
    assert cache.key("orbit", coarse, x, 0.1) == cache.key("orbit", coarse, x.copy(), 0.1)
    calls = []

    def compute():
        calls.append(1)
        return coarse.evaluate(5.0, x)

    a = cache.get_or_compute("orbit", coarse, x, 0.1, compute)
    b = cache.get_or_compute("orbit", coarse, x, 0.1, compute)
    assert len(calls) == 1 and cache.hits == 1
    assert np.array_equal(a, b)


def test_invalid_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(yaml.safe_dump({"experiments": [
        {"name": "x", "flow": {"builtin": "decay"}, "checks": [{"property": "attractive",
                                                               "eps": -1}]}]}))
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "experiments[0].checks[0].eps" in capsys.readouterr().err


def test_checker_error_exit_code(tmp_path):
    # a non-invariant point set is an error, not a verdict
    cfg = tmp_path / "err.cfg"
    cfg.write_text(yaml.safe_dump({"experiments": [
        {"name": "x", "flow": {"builtin": "decay"},
         "sets": [{"name": "one", "points": [[1.0]]}],
         "checks": [{"property": "attractive", "eps": 0.1, "T": 10}]}]}))
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 1
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["experiments"][0]["errors"][0]["set"] == "one"


def test_bad_arguments():
    with pytest.raises(SystemExit) as ei:
        main(["verify-oracle", "--max-n", "1"])
    assert ei.value.code == 2
    with pytest.raises(SystemExit):
        main(["--threads", "0", "list-builtins"])


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "koopman_attractors", "list-builtins"],
                       capture_output=True, text=True, check=True)
    assert "hilmy" in r.stdout
