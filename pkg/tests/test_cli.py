"""End-to-end CLI tests: exit codes, output files, config and seed plumbing."""

import numpy as np
import pytest

from kernmem import (
    SweepConfig,
    capacity_sweep,
    generate_patterns,
    read_rows,
    save_patterns,
)
from kernmem.cli import main

CAP_HEADER = "experiment,rule,n,beta,p,success_rate,seed"
NOISE_HEADER = "experiment,rule,n,beta,m0,mean_final_overlap,std_final_overlap,trials,seed"
TIMING_HEADER = "experiment,rule,n,beta,p,trial,learn_seconds,threads,seed"


@pytest.fixture(autouse=True)
def _no_ambient_seed(monkeypatch):
    monkeypatch.delenv("KERNMEM_SEED", raising=False)


def _run(argv):
    return main(argv)


def _usage_error(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    return info.value.code


class TestUsageErrors:
    def test_no_subcommand(self):
        assert _usage_error([]) == 2

    def test_unknown_flag(self):
        assert _usage_error(["capacity", "--frobnicate", "1"]) == 2

    def test_negative_lambda(self):
        assert _usage_error(["capacity", "--lambda", "-1"]) == 2

    def test_threshold_above_one(self):
        assert _usage_error(["capacity", "--threshold", "1.5"]) == 2

    def test_threshold_zero(self):
        assert _usage_error(["capacity", "--threshold", "0"]) == 2

    def test_bad_rule_name(self):
        assert _usage_error(["capacity", "--rules", "krr,frobnicate"]) == 2

    def test_bad_seed_text(self):
        assert _usage_error(["capacity", "--seed", "3.5"]) == 2

    def test_seed_out_of_range(self):
        assert _usage_error(["capacity", "--seed", str(2**64)]) == 2

    def test_bad_grid_text(self):
        assert _usage_error(["capacity", "--betas", "0.1,oops"]) == 2

    def test_noise_m0_outside_unit_interval(self):
        assert _usage_error(["noise", "--n", "40", "--m0-grid", "0.5,1.2"]) == 2

    def test_recall_m0_outside_range(self, tmp_path):
        path = tmp_path / "pats.txt"
        save_patterns(generate_patterns(20, 2, seed=1), path)
        assert _usage_error(
            ["recall", "--rule", "krr", "--patterns", str(path), "--m0", "1.5"]
        ) == 2

    def test_recall_pattern_index_out_of_range(self, tmp_path):
        path = tmp_path / "pats.txt"
        save_patterns(generate_patterns(20, 2, seed=1), path)
        assert _usage_error(
            ["recall", "--rule", "krr", "--patterns", str(path), "--pattern-index", "2"]
        ) == 2

    def test_missing_config_file(self):
        assert _usage_error(["capacity", "--config", "/nonexistent/kernmem.conf"]) == 2

    def test_malformed_config_line(self, tmp_path):
        conf = tmp_path / "bad.conf"
        conf.write_text("this line has no equals sign\n")
        assert _usage_error(["capacity", "--config", str(conf)]) == 2

    def test_bad_env_seed(self, monkeypatch):
        monkeypatch.setenv("KERNMEM_SEED", "not-a-seed")
        assert _usage_error(["capacity", "--n", "20", "--betas", "0.1"]) == 2


class TestRuntimeErrors:
    def test_recall_missing_pattern_file(self, capsys):
        code = _run(["recall", "--rule", "krr", "--patterns", "/nonexistent/p.txt"])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_unwritable_output_directory(self, tmp_path, capsys):
        code = _run(
            [
                "capacity",
                "--n", "20",
                "--rules", "krr",
                "--betas", "0.1",
                "--out", str(tmp_path / "no" / "such" / "dir" / "cap.csv"),
            ]
        )
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestCapacityCommand:
    def test_end_to_end_with_plot(self, tmp_path, capsys):
        out = tmp_path / "cap.csv"
        plot = tmp_path / "cap.svg"
        code = _run(
            [
                "capacity",
                "--n", "40",
                "--rules", "krr",
                "--betas", "0.1,0.2",
                "--seed", "3",
                "--out", str(out),
                "--plot", str(plot),
            ]
        )
        assert code == 0
        text = out.read_text()
        assert text.splitlines()[0] == CAP_HEADER
        assert len(text.splitlines()) == 3
        assert plot.stat().st_size > 500
        stdout = capsys.readouterr().out
        assert f"wrote {out}" in stdout
        assert f"wrote {plot}" in stdout
        assert "capacity krr" in stdout

    def test_matches_library_sweep(self, tmp_path):
        out = tmp_path / "cap.csv"
        _run(
            [
                "capacity",
                "--n", "40",
                "--rules", "hebbian,krr",
                "--betas", "0.1,0.3",
                "--seed", "11",
                "--out", str(out),
            ]
        )
        want = capacity_sweep(
            SweepConfig(n=40, rules=("hebbian", "krr"), beta_grid=(0.1, 0.3), seed=11)
        )
        assert read_rows(out) == want

    def test_range_grid_syntax(self, tmp_path):
        out = tmp_path / "cap.csv"
        code = _run(
            [
                "capacity",
                "--n", "40",
                "--rules", "krr",
                "--betas", "0.1:0.3:0.1",
                "--seed", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        assert [row.beta for row in read_rows(out)] == [0.1, 0.2, 0.3]


class TestNoiseCommand:
    def test_end_to_end(self, tmp_path, capsys):
        out = tmp_path / "noise.csv"
        code = _run(
            [
                "noise",
                "--n", "40",
                "--rules", "krr",
                "--beta", "0.2",
                "--m0-grid", "0.0,1.0",
                "--noise-trials", "2",
                "--seed", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == NOISE_HEADER
        assert len(lines) == 3
        assert "noise krr" in capsys.readouterr().out


class TestTimingCommand:
    def test_end_to_end(self, tmp_path, capsys):
        out = tmp_path / "timing.csv"
        code = _run(
            [
                "timing",
                "--n", "40",
                "--rules", "krr",
                "--betas", "0.2",
                "--trials", "2",
                "--seed", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == TIMING_HEADER
        # Two trial rows plus mean and std.
        assert len(lines) == 5
        rows = read_rows(out)
        assert [row.trial for row in rows] == ["0", "1", "mean", "std"]
        assert all(row.threads == 1 for row in rows)
        assert "timing krr" in capsys.readouterr().out

    def test_hebbian_rejected_at_runtime(self, tmp_path, capsys):
        code = _run(
            [
                "timing",
                "--n", "40",
                "--rules", "hebbian",
                "--betas", "0.2",
                "--out", str(tmp_path / "t.csv"),
            ]
        )
        assert code == 1
        assert "hebbian" in capsys.readouterr().err


class TestRecallCommand:
    def test_trajectory_and_status(self, tmp_path, capsys):
        path = tmp_path / "pats.txt"
        save_patterns(generate_patterns(60, 3, seed=2), path)
        code = _run(
            [
                "recall",
                "--rule", "krr",
                "--patterns", str(path),
                "--m0", "0.6",
                "--seed", "5",
            ]
        )
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("step 0: overlap +0.6")
        assert all(l.startswith("step ") for l in lines[:-1])
        assert lines[-1].startswith("success: final overlap +1.0000")
        assert "fixed point" in lines[-1]

    def test_failure_status_below_threshold(self, tmp_path, capsys):
        # The exact negation of a stored pattern is itself a fixed point of
        # the sign dynamics under symmetric weights, so the run ends at
        # overlap -1 and misses the success threshold.
        path = tmp_path / "pats.txt"
        save_patterns(generate_patterns(61, 2, seed=4), path)
        code = _run(
            [
                "recall",
                "--rule", "hebbian",
                "--patterns", str(path),
                "--m0=-1.0",
            ]
        )
        assert code == 0
        last = capsys.readouterr().out.splitlines()[-1]
        assert last.startswith("failure: final overlap -1.0000")


class TestSelftestCommand:
    def test_all_checks_pass(self, capsys):
        assert _run(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "10/10 checks passed" in out
        assert "FAIL" not in out


class TestConfigAndSeedPlumbing:
    def test_config_supplies_defaults(self, tmp_path):
        conf = tmp_path / "kernmem.conf"
        conf.write_text("n = 40\nrules = krr\nbetas = 0.1,0.2\nseed = 7\n# comment\n")
        out = tmp_path / "cap.csv"
        code = _run(["capacity", "--config", str(conf), "--out", str(out)])
        assert code == 0
        want = capacity_sweep(SweepConfig(n=40, rules=("krr",), beta_grid=(0.1, 0.2), seed=7))
        assert read_rows(out) == want

    def test_explicit_flag_overrides_config(self, tmp_path):
        conf = tmp_path / "kernmem.conf"
        conf.write_text("n = 40\nrules = krr\nbetas = 0.1\nseed = 7\n")
        out = tmp_path / "cap.csv"
        _run(["capacity", "--config", str(conf), "--seed", "9", "--out", str(out)])
        want = capacity_sweep(SweepConfig(n=40, rules=("krr",), beta_grid=(0.1,), seed=9))
        assert read_rows(out) == want

    def test_config_equals_form(self, tmp_path):
        conf = tmp_path / "kernmem.conf"
        conf.write_text("n = 40\nrules = krr\nbetas = 0.1\n")
        out = tmp_path / "cap.csv"
        assert _run(["capacity", f"--config={conf}", "--out", str(out)]) == 0
        assert out.read_text().splitlines()[0] == CAP_HEADER
        assert read_rows(out)[0].n == 40

    def test_env_seed_matches_explicit_seed(self, tmp_path, monkeypatch):
        base = [
            "capacity",
            "--n", "40",
            "--rules", "krr",
            "--betas", "0.1",
        ]
        flagged = tmp_path / "flag.csv"
        _run(base + ["--seed", "7", "--out", str(flagged)])

        monkeypatch.setenv("KERNMEM_SEED", "7")
        env_out = tmp_path / "env.csv"
        _run(base + ["--out", str(env_out)])
        assert env_out.read_bytes() == flagged.read_bytes()

    def test_explicit_seed_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KERNMEM_SEED", "7")
        base = ["capacity", "--n", "40", "--rules", "krr", "--betas", "0.1"]
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        _run(base + ["--seed", "9", "--out", str(a)])
        monkeypatch.delenv("KERNMEM_SEED")
        _run(base + ["--seed", "9", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_default_seed_is_zero(self, tmp_path):
        out = tmp_path / "cap.csv"
        _run(["capacity", "--n", "40", "--rules", "krr", "--betas", "0.1", "--out", str(out)])
        want = capacity_sweep(SweepConfig(n=40, rules=("krr",), beta_grid=(0.1,), seed=0))
        assert read_rows(out) == want

    def test_gamma_scale_changes_results_shape_not_schema(self, tmp_path):
        out = tmp_path / "cap.csv"
        code = _run(
            [
                "capacity",
                "--n", "40",
                "--rules", "krr",
                "--betas", "0.2",
                "--gamma-scale", "2.0",
                "--out", str(out),
            ]
        )
        assert code == 0
        rows = read_rows(out)
        assert len(rows) == 1 and rows[0].n == 40
