import csv
import json

import numpy as np
import pytest

from rnnsearch import cli
from rnnsearch.bo import Strategy
from rnnsearch.encoding import Scheme
from rnnsearch.exceptions import BadStrategyCode

FAST = [
    "--max-evals", "2", "--init", "3", "--q", "4", "--epochs", "2",
    "--proposal-budget", "60", "--trees", "20", "--neuron-max", "20",
]


def read_trace(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestParseStrategy:
    def test_constraint_size(self):
        s = cli.parse_strategy("C--S")
        assert s == Strategy(True, False, False, Scheme.SIZE)

    def test_warm_infeasible_flag(self):
        s = cli.parse_strategy("-WIF")
        assert s == Strategy(False, True, True, Scheme.FLAG)

    def test_infeasible_size_incompatible(self):
        with pytest.raises(BadStrategyCode) as err:
            cli.parse_strategy("--IS")
        assert err.value.position == 2

    def test_wrong_letter_position_reported(self):
        with pytest.raises(BadStrategyCode) as err:
            cli.parse_strategy("X--S")
        assert err.value.position == 0
        with pytest.raises(BadStrategyCode) as err:
            cli.parse_strategy("C-X-")
        assert err.value.position == 2

    def test_bad_scheme_letter(self):
        with pytest.raises(BadStrategyCode) as err:
            cli.parse_strategy("C--Q")
        assert err.value.position == 3

    def test_wrong_length(self):
        with pytest.raises(BadStrategyCode):
            cli.parse_strategy("C--")


class TestSearchCommand:
    def test_emits_all_three_files(self, tmp_path):
        out = tmp_path / "run"
        rc = cli.main(["search", *FAST, "--seed", "5", "--out", str(out)])
        assert rc == 0
        assert (out / "trace.csv").exists()
        assert (out / "result.json").exists()
        assert (out / "model.npy").exists()
        payload = json.loads((out / "result.json").read_text())
        for key in (
            "strategy", "best_genotype", "best_architecture", "best_mrs", "test_mae",
            "test_mape", "wall_clock_ms", "mrs_calls", "infeasible_proposals",
        ):
            assert key in payload
        weights = np.load(out / "model.npy")
        assert weights.ndim == 1 and np.all(np.isfinite(weights))

    def test_trace_has_the_pinned_columns(self, tmp_path):
        out = tmp_path / "run"
        cli.main(["search", *FAST, "--seed", "5", "--out", str(out)])
        rows = read_trace(out / "trace.csv")
        assert list(rows[0].keys()) == [
            "iter", "genotype", "feasible", "duplicate", "mrs_mu", "mrs_sigma",
            "mrs_prob", "objective_used", "best_so_far", "wall_ms",
        ]
        assert len(rows) == 3 + 2  # init rows plus loop rows

    def test_init_only_run_still_emits(self, tmp_path):
        out = tmp_path / "run"
        rc = cli.main(["search", *FAST, "--max-evals", "0", "--seed", "5", "--out", str(out)])
        assert rc == 0
        assert len(read_trace(out / "trace.csv")) == 3

    def test_identical_seeds_byte_identical_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cli.main(["search", *FAST, "--seed", "9", "--out", str(a)])
        cli.main(["search", *FAST, "--seed", "9", "--out", str(b)])
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
        assert (a / "result.json").read_bytes() == (b / "result.json").read_bytes()

    def test_different_seed_changes_the_trace(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cli.main(["search", *FAST, "--seed", "9", "--out", str(a)])
        cli.main(["search", *FAST, "--seed", "10", "--out", str(b)])
        assert (a / "trace.csv").read_bytes() != (b / "trace.csv").read_bytes()

    def test_best_so_far_column_monotone(self, tmp_path):
        out = tmp_path / "run"
        cli.main(["search", *FAST, "--seed", "11", "--out", str(out)])
        vals = [float(r["best_so_far"]) for r in read_trace(out / "trace.csv")]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_emit_timings_fills_wall_columns(self, tmp_path):
        out = tmp_path / "run"
        cli.main(["search", *FAST, "--seed", "5", "--out", str(out), "--emit-timings"])
        rows = read_trace(out / "trace.csv")
        assert all(r["wall_ms"] != "" for r in rows)
        payload = json.loads((out / "result.json").read_text())
        assert payload["wall_clock_ms"]["total"] > 0

    def test_csv_problem_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        series = np.cumsum(rng.standard_normal((120, 2)), axis=0)
        p = tmp_path / "series.csv"
        p.write_text("u,v\n" + "\n".join(",".join(repr(float(x)) for x in row) for row in series) + "\n")
        out = tmp_path / "run"
        rc = cli.main([
            "search", *FAST, "--problem", "csv", "--csv", str(p), "--targets", "v",
            "--normalize", "--lookback-max", "6", "--seed", "3", "--out", str(out),
        ])
        assert rc == 0
        payload = json.loads((out / "result.json").read_text())
        assert payload["config"]["problem"] == "csv"

    def test_bad_strategy_is_a_clean_error(self, tmp_path, capsys):
        rc = cli.main(["search", "--strategy", "Q--S", "--out", str(tmp_path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_numpy_fallback_reproduces_the_numba_trace(self, tmp_path):
        # both forest backends grow bit-identical trees, so the whole search
        # trajectory must match across backends for the same seed
        import os
        import subprocess
        import sys

        args = ["search", *FAST, "--seed", "77", "--epochs", "1"]
        a, b = tmp_path / "numba", tmp_path / "numpy"
        assert cli.main(args + ["--out", str(a)]) == 0
        env = dict(os.environ, RNNSEARCH_DISABLE_NUMBA="1")
        subprocess.run(
            [sys.executable, "-m", "rnnsearch.cli", *args, "--out", str(b)],
            check=True,
            env=env,
            capture_output=True,
        )
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


class TestTrainCommand:
    def test_trains_explicit_architecture(self, tmp_path):
        out = tmp_path / "run"
        rc = cli.main([
            "train", "--layers", "4;3", "--lookback", "5", "--epochs", "2",
            "--seed", "2", "--out", str(out),
        ])
        assert rc == 0
        payload = json.loads((out / "result.json").read_text())
        assert payload["architecture"]["layer_sizes"] == [4, 3]
        assert np.isfinite(payload["test_mae"])

    def test_missing_layers_rejected(self, tmp_path, capsys):
        rc = cli.main(["train", "--lookback", "5", "--out", str(tmp_path)])
        assert rc == 1


class TestTimecmpCommand:
    def test_smoke_run_writes_summary(self, tmp_path):
        out = tmp_path / "run"
        rc = cli.main([
            "timecmp", "--n-archs", "2", "--q", "4", "--epochs-short", "1",
            "--neuron-max", "10", "--seed", "4", "--out", str(out),
        ])
        assert rc == 0
        lines = (out / "timing.csv").read_text().splitlines()
        assert lines[0] == "row,layers,lookback,mrs_seconds,adam_seconds"
        assert len(lines) == 1 + 2 + 5  # header, rows, five summary stats

    def test_summary_recomputable_from_rows(self, tmp_path):
        out = tmp_path / "run"
        cli.main([
            "timecmp", "--n-archs", "3", "--q", "4", "--epochs-short", "1",
            "--neuron-max", "10", "--seed", "4", "--out", str(out),
        ])
        lines = (out / "timing.csv").read_text().splitlines()[1:]
        rows = [l.split(",") for l in lines[:3]]
        stats = {l.split(",")[0]: l.split(",") for l in lines[3:]}
        mrs = [float(r[3]) for r in rows]
        assert float(stats["median"][3]) == pytest.approx(float(np.median(mrs)))
        assert float(stats["mean"][4]) == pytest.approx(
            float(np.mean([float(r[4]) for r in rows]))
        )


class TestTradeoffCommand:
    def test_single_q_reduces_to_search(self, tmp_path):
        out = tmp_path / "run"
        rc = cli.main([
            "tradeoff", *FAST, "--q-list", "4", "--reps", "1", "--seed", "6",
            "--out", str(out),
        ])
        assert rc == 0
        lines = (out / "tradeoff.csv").read_text().splitlines()
        assert lines[0] == "q,rep,seed,best_mrs,test_mae"
        assert len(lines) == 2

    def test_row_count_is_reps_per_q(self, tmp_path):
        out = tmp_path / "run"
        rc = cli.main([
            "tradeoff", *FAST, "--q-list", "4,6", "--reps", "2", "--seed", "6",
            "--out", str(out),
        ])
        assert rc == 0
        lines = (out / "tradeoff.csv").read_text().splitlines()[1:]
        assert len(lines) == 4
        per_q = {}
        for line in lines:
            q = line.split(",")[0]
            per_q[q] = per_q.get(q, 0) + 1
        assert per_q == {"4": 2, "6": 2}


class TestConfigFile:
    def test_file_sets_and_flags_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nmax_evals = 1\ninit = 3\nq = 4\nepochs = 1\nneuron_max = 10\nproposal_budget = 50\ntrees=15\n")
        out = tmp_path / "run"
        rc = cli.main(["search", "--config", str(cfg), "--seed", "8", "--out", str(out), "--max-evals", "2"])
        assert rc == 0
        payload = json.loads((out / "result.json").read_text())
        assert payload["config"]["max_evals"] == 2  # flag wins
        assert payload["config"]["init"] == 3  # from file

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("no_such_key = 1\n")
        rc = cli.main(["search", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 1
