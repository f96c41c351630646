import json
import math
import re

import pytest

from qanneal.cli import EXIT_CONFIG, EXIT_ORACLE, main
from qanneal.harness import (ConfigError, ExperimentConfig, OracleLimitError, OracleRecord, audit,
                             emit_plot_data, parse_list, precompute_oracle, read_summary, run_experiment)
from qanneal.records import fmt, read_columns
from qanneal.spins import ferromagnet
from qanneal.tsp import euclidean_instance

ANNEAL_CFG = """
[experiment]
kind = anneal
seed = 42
replicas = 3

[params]
problem = sk
disorder_seed = 5
sweeps = 300
residual = true

[sweep]
n = 6, 8
"""


@pytest.mark.parametrize("text, want", [
    ("1, 2, 3", [1, 2, 3]),
    ("0.1:0.3:0.1", [0.1, 0.2, 0.3]),
    ("0.05:0.45:0.01", None),
    ("a, b", ["a", "b"]),
])
def test_parse_list(text, want):
    got = parse_list(text)
    if want is None:
        assert len(got) == 41 and got[0] == 0.05 and got[-1] == 0.45
    else:
        assert got == want


@pytest.mark.parametrize("text", [
    "[params]\nx = 1\n",
    "[experiment]\nkind = anneal\n",
    "[experiment]\nkind = warp\nseed = 1\n",
    "[experiment]\nkind = anneal\nseed = -1\n[params]\nproblem = sk\nsweeps = 1\n",
    "[experiment]\nkind = anneal\nseed = 1\n[params]\nproblem = sk\n",
    "[experiment]\nkind = anneal\nseed = 1\n[params]\nproblem = sk\nsweeps = 1\ncolour = red\n",
    "[experiment]\nkind = anneal\nseed = 1\n[extras]\n",
    "[experiment]\nkind = quench\nseed = 1\n[params]\nS = 10\n[sweep]\ngamma_f = 0.5:0.1:0.1\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(text)


def test_canonical_text_round_trip_and_hash():
    cfg = ExperimentConfig.from_text(ANNEAL_CFG)
    again = ExperimentConfig.from_text(cfg.to_text())
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()
    reordered = ANNEAL_CFG.replace("disorder_seed = 5\nsweeps = 300", "sweeps = 300\ndisorder_seed = 5")
    assert ExperimentConfig.from_text(reordered).config_hash() == cfg.config_hash()
    commented = ANNEAL_CFG.replace("problem = sk", "problem = sk   # inline note")
    assert ExperimentConfig.from_text(commented).config_hash() == cfg.config_hash()
    assert ExperimentConfig.from_text(ANNEAL_CFG.replace("seed = 42", "seed = 43")).config_hash() \
        != cfg.config_hash()


def test_points_cartesian_product():
    cfg = ExperimentConfig("quench", 1, 1, {"J": 1.0}, {"S": [10, 20], "gamma_f": [0.1, 0.2, 0.3]})
    pts = cfg.points()
    assert len(pts) == 6
    assert pts[0] == {"J": 1.0, "S": 10, "gamma_f": 0.1}
    assert pts[-1] == {"J": 1.0, "S": 20, "gamma_f": 0.3}


def test_oracle_record_round_trip_and_limits():
    rec = precompute_oracle(ferromagnet(6))
    assert rec.value == -15.0 and rec.count == 2
    assert OracleRecord.loads(rec.dumps()) == rec
    tour = precompute_oracle(euclidean_instance(7, 1))
    assert OracleRecord.loads(tour.dumps()).value == tour.value
    with pytest.raises(OracleLimitError):
        precompute_oracle(ferromagnet(25))
    with pytest.raises(OracleLimitError):
        precompute_oracle(euclidean_instance(11, 1))


def test_run_experiment_layout_and_audit(tmp_path):
    cfg = ExperimentConfig.from_text(ANNEAL_CFG)
    man = run_experiment(cfg, tmp_path)
    assert man.config_hash == cfg.config_hash()
    assert set(man.oracles) == {"p0000", "p0001"}
    assert sum(k.startswith("runs/") for k in man.files) == 6
    summ = read_summary(tmp_path)
    assert summ["n"] == [6.0, 8.0]
    assert all(v >= 0 for v in summ["residual_energy_mean"])
    assert audit(tmp_path) == []

    (tmp_path / "runs" / "p0000_r0001.tsv").write_text("tampered\n")
    (tmp_path / "stray.txt").write_text("x")
    probs = audit(tmp_path)
    assert any("checksum mismatch" in p for p in probs)
    assert any("unreferenced file stray.txt" in p for p in probs)
    (tmp_path / "summary.tsv").unlink()
    assert any("missing file summary.tsv" in p for p in audit(tmp_path))


def test_workers_do_not_change_results(tmp_path):
    cfg = ExperimentConfig.from_text(ANNEAL_CFG)
    a = run_experiment(cfg, tmp_path / "a", workers=1)
    b = run_experiment(cfg, tmp_path / "b", workers=2)
    assert a.digest() == b.digest()
    assert (tmp_path / "a" / "summary.tsv").read_bytes() == (tmp_path / "b" / "summary.tsv").read_bytes()


def test_plot_data_grouping(tmp_path):
    cfg = ExperimentConfig("quench", 3, 1, {"J": 1.0, "periods": 5},
                           {"S": [8, 12], "gamma_f": [0.3, 0.1, 0.2]})
    run_experiment(cfg, tmp_path)
    paths = emit_plot_data(tmp_path, "gamma_f", "O", group_by="S")
    assert len(paths) == 2
    cols, _ = read_columns(paths[0])
    assert list(cols["gamma_f"]) == [0.1, 0.2, 0.3]
    assert audit(tmp_path) == []
    with pytest.raises(KeyError):
        emit_plot_data(tmp_path, "gamma_f", "nothing")


def write_cfg(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_success_prints_17_digits(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[experiment]\nkind = oracle\nseed = 1\n[params]\nproblem = sk\n"
                              "disorder_seed = 3\n[sweep]\nn = 7, 9\n")
    assert main(["oracle", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0].startswith("config_hash\t")
    value = float(lines[-1].split("\t")[lines[2].split("\t").index("value_mean")])
    rec = json.loads((tmp_path / "o" / "oracles" / "p0001.json").read_text())
    assert fmt(value) == rec["value"]
    assert re.search(r"-\d\.\d{16}", out)
    assert main(["audit", "--out", str(tmp_path / "o"), "--config", cfg]) == 0


@pytest.mark.parametrize("argv_tail, text", [
    (["--config", "{missing}"], None),
    (["--config", "{cfg}"], "[experiment]\nkind = anneal\nseed = 1\n[params]\nproblem = sk\n"),
    (["--config", "{cfg}"], "[experiment]\nkind = quench\nseed = 1\n[params]\nS = 4\ngamma_f = 0.2\n"),
    (["--config", "{cfg}", "--seed", "-4"], "[experiment]\nkind = anneal\nseed = 1\n"),
    (["--config", "{cfg}", "--workers", "0"],
     "[experiment]\nkind = anneal\nseed = 1\n[params]\nproblem = ferro\nn = 4\nsweeps = 10\n"),
    (["--config", "{cfg}"],
     "[experiment]\nkind = anneal\nseed = 1\n[params]\nproblem = torus\nsweeps = 10\n"),
])
def test_cli_config_errors_exit_2(tmp_path, argv_tail, text):
    cfg = write_cfg(tmp_path, text) if text else None
    argv = ["anneal"] + [a.format(missing=str(tmp_path / "nope.ini"), cfg=cfg) for a in argv_tail]
    argv += ["--out", str(tmp_path / "r")]
    assert main(argv) == EXIT_CONFIG


def test_cli_unknown_subcommand_exit_2():
    assert main(["teleport"]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG


def test_cli_oracle_limit_exit_3(tmp_path):
    cfg = write_cfg(tmp_path, "[experiment]\nkind = anneal\nseed = 1\n[params]\nproblem = sk\nn = 30\n"
                              "sweeps = 10\nresidual = true\n")
    assert main(["anneal", "--config", cfg, "--out", str(tmp_path / "r")]) == EXIT_ORACLE


def test_cli_seed_override_changes_hash(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[experiment]\nkind = kcs\nseed = 1\n[params]\nn = 50\nmode = quantum\n"
                              "x0 = 5\ntau = 50\nmax_sweeps = 2000\nchi = 2\ng = 1\n")
    assert main(["kcs", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    h1 = capsys.readouterr().out.splitlines()[0]
    assert main(["kcs", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "2"]) == 0
    h2 = capsys.readouterr().out.splitlines()[0]
    assert h1 != h2


@pytest.mark.parametrize("text", [
    "[experiment]\nkind = tdse\nseed = 0\n[params]\ntask = gap\nl = 4\n",
    "[experiment]\nkind = tdse\nseed = 0\n[params]\ntask = spatial\nN = 100\ntau = 2.0\n",
    "[experiment]\nkind = tsp\nseed = 0\n[params]\nn = 8\nmethod = ca\nsweeps = 200\noptimum = true\n",
    "[experiment]\nkind = pimc\nseed = 0\nreplicas = 2\n[params]\nproblem = ferro\nn = 6\nsweeps = 200\n",
])
def test_every_driver_runs_and_audits(tmp_path, text):
    cfg = ExperimentConfig.from_text(text)
    run_experiment(cfg, tmp_path)
    assert audit(tmp_path) == []
    summ = read_summary(tmp_path)
    assert all(math.isfinite(v) for k, vs in summ.items() if k.endswith("_mean") for v in vs)
