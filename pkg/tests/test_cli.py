import io
import subprocess
import sys

import numpy as np
import pytest

from stormac import cli
from stormac import experiment as ex
from stormac.mdp import load_mdp


def _main(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_mdp_defaults_and_byte_identity(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    code, out, _ = _main(["gen-mdp", "--out", str(a), "--lambda-trials", "20"], capsys)
    assert code == 0 and "J* = 8.04690949728" in out
    assert _main(["gen-mdp", "--out", str(b), "--lambda-trials", "20"], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    m = load_mdp(a)
    assert m.P.shape == (10, 5, 10) and m.gamma == 0.9


def test_gen_mdp_trivial(tmp_path, capsys):
    p = tmp_path / "t.txt"
    code, out, _ = _main(["gen-mdp", "--S", "1", "--A", "1", "--gamma", "0.5", "--out", str(p),
                          "--lambda-trials", "5"], capsys)
    m = load_mdp(p)
    expected = m.R[0, 0] / 0.5
    assert code == 0 and f"J* = {expected:.12g}" in out


def test_gen_mdp_unwritable_path(tmp_path, capsys):
    code, _, err = _main(["gen-mdp", "--out", str(tmp_path / "missing" / "x.txt"), "--lambda-trials", "1"], capsys)
    assert code == 2 and "I/O" in err


def test_usage_errors(capsys):
    assert _main([], capsys)[0] == 1
    assert _main(["run", "--bogus"], capsys)[0] == 1
    assert _main(["run", "--gamma", "1.5"], capsys)[0] == 1
    assert _main(["verify", "--trials", "0"], capsys)[0] == 1


def test_run_one_iteration_grid(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, text, _ = _main(["run", "--seeds", "1", "--iterations", "1", "--out", str(out)], capsys)
    assert code == 0
    rows = ex.read_csv(out)
    assert [(r["algo"], r["k"]) for r in rows] == [("storm", "0"), ("storm", "1"), ("baseline", "0"), ("baseline", "1")]
    assert list(rows[0].keys()) == list(ex.RESULT_COLUMNS)
    assert rows[0]["gdl_ok"] in ("0", "1") and rows[0]["diverged_at"] == ""
    agg = ex.read_csv(tmp_path / "r_aggregate.csv")
    assert list(agg[0].keys()) == list(ex.AGGREGATE_COLUMNS)
    raw = out.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_csv_numbers_have_12_significant_digits(tmp_path, capsys):
    out = tmp_path / "r.csv"
    _main(["run", "--seeds", "1", "--iterations", "3", "--algo", "storm", "--out", str(out)], capsys)
    row = ex.read_csv(out)[0]
    assert row["J"] == format(float(row["J"]), ".12g")
    assert len(row["J"].replace(".", "").replace("-", "").lstrip("0")) <= 12


def test_aggregate_mean_equals_per_seed_mean(tmp_path, capsys):
    out = tmp_path / "r.csv"
    _main(["run", "--seeds", "3", "--iterations", "200", "--log-every", "50", "--out", str(out)], capsys)
    rows = ex.read_csv(out)
    for agg in ex.read_csv(tmp_path / "r_aggregate.csv"):
        per = [r for r in rows if r["algo"] == agg["algo"] and r["k"] == agg["k"]]
        assert len(per) == 3 == int(agg["n_seeds"])
        for f in ("J", "a", "z", "y", "w", "x"):
            assert abs(np.mean([float(r[f]) for r in per]) - float(agg[f + "_mean"])) < 1e-9 * max(1.0, abs(float(agg[f + "_mean"])))


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# small run\nS = 3\nA = 2\niterations = 20\nseeds = 2\nalgo = storm\ncb = 0.5\nlog-every = 10\n")
    out = tmp_path / "r.csv"
    code, _, _ = _main(["run", "--config", str(cfg), "--seeds", "1", "--out", str(out)], capsys)
    assert code == 0
    rows = ex.read_csv(out)
    assert {r["seed"] for r in rows} == {"0"} and [r["k"] for r in rows] == ["0", "10", "20"]


def test_config_text_errors():
    with pytest.raises(ex.ParameterError):
        ex.parse_config_text("nonsense line")
    with pytest.raises(ex.ParameterError):
        ex.parse_config_text("colour = red")
    with pytest.raises(ex.ParameterError):
        ex.parse_config_text("S = three")
    assert ex.parse_config_text("out = x.csv\nmdp = m.txt") == {"output_path": "x.csv", "mdp_path": "m.txt"}


def test_run_from_mdp_file(tmp_path, capsys):
    mdp_path = tmp_path / "m.txt"
    _main(["gen-mdp", "--S", "3", "--A", "2", "--mdp-seed", "4", "--out", str(mdp_path), "--lambda-trials", "2"], capsys)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    _main(["run", "--mdp", str(mdp_path), "--seeds", "1", "--iterations", "30", "--out", str(a)], capsys)
    _main(["run", "--S", "3", "--A", "2", "--mdp-seed", "4", "--seeds", "1", "--iterations", "30", "--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_run_figures(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, text, _ = _main(["run", "--seeds", "2", "--iterations", "300", "--log-every", "20", "--out", str(out),
                           "--figures"], capsys)
    assert code == 0
    for name in ("r_suboptimality.png", "r_lyapunov.png", "r_critic_error.png"):
        assert (tmp_path / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


@pytest.mark.filterwarnings("ignore:overflow encountered:RuntimeWarning")
def test_all_seeds_diverged_exit_code(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, text, _ = _main(["run", "--algo", "storm", "--seeds", "2", "--iterations", "50", "--beta-scale", "1e300",
                           "--out", str(out)], capsys)
    assert code == 4 and "diverged at iteration" in text
    rows = ex.read_csv(out)
    assert rows and all(r["diverged_at"] != "" for r in rows)


def test_verify_passes_and_negative_control(capsys):
    code, out, _ = _main(["verify", "--trials", "1"], capsys)
    assert code == 0 and out.count("PASS") == 5
    code, out, _ = _main(["verify", "--trials", "50"], capsys)
    assert code == 0
    code, out, _ = _main(["verify", "--trials", "20", "--corrupt-gamma", "0.05"], capsys)
    assert code == 3 and "bellman_rewrite  FAIL" in out


def _write_synthetic(path, values):
    lines = ["algo,seed,k,a"]
    for k, v in values:
        lines.append(f"storm,0,{k},{v!r}")
    path.write_text("\n".join(lines) + "\n")


def test_rate_synthetic(tmp_path, capsys):
    p = tmp_path / "s.csv"
    _write_synthetic(p, [(k, float(k) ** -0.5) for k in range(100, 20001, 100)])
    code, out, _ = _main(["rate", str(p)], capsys)
    assert code == 0
    slope = float(out.split("slope=")[1].split()[0])
    assert abs(slope + 0.5) < 1e-6
    _write_synthetic(p, [(k, 0.7) for k in range(100, 20001, 100)])
    code, out, _ = _main(["rate", str(p)], capsys)
    assert abs(float(out.split("slope=")[1].split()[0])) < 1e-6


def test_rate_missing_column(tmp_path, capsys):
    p = tmp_path / "s.csv"
    _write_synthetic(p, [(k, 1.0) for k in range(1, 30)])
    assert _main(["rate", str(p), "--field", "z"], capsys)[0] == 1
    assert _main(["rate", str(tmp_path / "nope.csv")], capsys)[0] == 2


def test_results_order_independent_of_workers():
    cfg = ex.ExperimentConfig(S=3, A=2, iterations=40, seeds=3, log_every=20)
    serial = ex.results_csv_text(ex.run_experiment(cfg))
    pooled = ex.results_csv_text(ex.run_experiment(ex.with_overrides(cfg, workers=2)))
    assert serial == pooled


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "stormac.cli", "verify", "--trials", "1"], capture_output=True, text=True)
    assert res.returncode == 0 and "ode_domination" in res.stdout


def test_cmd_functions_write_to_stream(tmp_path):
    buf = io.StringIO()
    assert cli.cmd_verify(1, 0, out=buf) == 0
    assert len(buf.getvalue().splitlines()) == 5
