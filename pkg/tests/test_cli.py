import json

import pytest

from sublevel import cli
from sublevel.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main
from sublevel.diagnostics import InequalityCheck, ProbeResult

RUN = """
[problem]
kind = logistic
m = 150
n = 20
data_seed = 2

[budget]
max_iters = {iters}

[output]
timing = off

[method.newton]

[method.sigmasvd]
coarse_dim = 0.5n
rank = 0.2n

[method.gd]
"""

ESCAPE = """
[problem]
kind = nls
distribution = saddle
m = 200
n = 12
data_seed = 4

[budget]
max_iters = 8
x0 = probe

[escape]
method = sigmasvd
sweep = coarse_dim
values = 0.5n, 0.9n
trials = 3
reference_iters = 30

[method.sigmasvd]
coarse_dim = 0.5n
rank = 2
mode = truncated
resample = fixed

[method.gd]
"""


def _config(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--config", _config(tmp_path, RUN.format(iters=5)), "--out", str(out)])
    assert code == EXIT_OK
    for label in ("newton", "sigmasvd", "gd"):
        assert (out / f"{label}.csv").read_text().startswith("k,f,grad_norm,")
        summary = json.loads((out / f"{label}.json").read_text())
        assert summary["method"] == label
        assert summary["metadata"]["f_star"] is not None
    assert (out / "config.ini").exists()
    assert (out / "convergence.svg").exists()


def test_run_with_zero_iterations(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", _config(tmp_path, RUN.format(iters=0)), "--out", str(out)]) == EXIT_OK
    for label in ("newton", "sigmasvd", "gd"):
        assert len((out / f"{label}.csv").read_text().splitlines()) == 2


def test_run_is_reproducible(tmp_path):
    """With timing off two runs produce byte-identical artifacts."""
    config = _config(tmp_path, RUN.format(iters=6))
    main(["run", "--config", config, "--out", str(tmp_path / "a"), "--seed", "3"])
    main(["run", "--config", config, "--out", str(tmp_path / "b"), "--seed", "3"])
    for name in ("newton.csv", "sigmasvd.csv", "sigmasvd.json", "gd.json", "config.ini"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_profile(tmp_path, capsys):
    config = _config(tmp_path, RUN.format(iters=2))
    assert main(["run", "--config", config, "--out", str(tmp_path / "out"), "--profile"]) == EXIT_OK
    assert "sublevel phase profile" in capsys.readouterr().out


def test_unknown_method_is_a_config_error(tmp_path, capsys):
    config = _config(tmp_path, RUN.format(iters=2) + "\n[method.bfgs]\n")
    assert main(["run", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    assert "method" in capsys.readouterr().out


def test_sizes_checked_against_problem(tmp_path):
    text = RUN.format(iters=2).replace("coarse_dim = 0.5n", "coarse_dim = 20")
    assert main(["run", "--config", _config(tmp_path, text), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_probe_start_needs_saddle_data(tmp_path):
    text = RUN.format(iters=2).replace("[budget]", "[budget]\nx0 = probe")
    assert main(["run", "--config", _config(tmp_path, text), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.ini")]) == EXIT_CONFIG


def test_escape_ignores_thread_count(tmp_path):
    config = _config(tmp_path, ESCAPE)
    assert main(["escape", "--config", config, "--out", str(tmp_path / "one"), "--threads", "1"]) == EXIT_OK
    assert main(["escape", "--config", config, "--out", str(tmp_path / "many"), "--threads", "8"]) == EXIT_OK
    one = (tmp_path / "one" / "escape.csv").read_text()
    assert one == (tmp_path / "many" / "escape.csv").read_text()
    rows = one.splitlines()
    assert rows[0] == "method,sweep,value,probability,successes,trials,threshold"
    assert [row.split(",")[:3] for row in rows[1:]] == [
        ["sigmasvd", "0.5n", "6"], ["sigmasvd", "0.9n", "11"], ["gd", "-", "0"]]


def test_escape_needs_a_method(tmp_path):
    text = ESCAPE.replace("method = sigmasvd\nsweep", "sweep")
    assert main(["escape", "--config", _config(tmp_path, text), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_verify_reports_failures(monkeypatch, capsys):
    failing = ProbeResult("made-up", (InequalityCheck("a <= b", 2.0, 1.0, False),))
    monkeypatch.setattr(cli, "run_probes", lambda seed: [failing, ProbeResult("fine")])
    assert main(["verify"]) == EXIT_FAILED
    out = capsys.readouterr().out
    assert "made-up" in out and "a <= b" in out


def test_verify_json(capsys):
    assert main(["verify", "--json"]) == EXIT_OK
    results = json.loads(capsys.readouterr().out)
    assert {r["name"] for r in results} == {
        "lemma-chain", "suboptimality", "phase", "degeneracy", "newton-quadratic"}
    assert all(r["passed"] for r in results)


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert "sublevel" in capsys.readouterr().out
