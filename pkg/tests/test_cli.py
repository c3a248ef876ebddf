import json
import subprocess
import sys

import pytest

import whatif as wi
from whatif.cli import main, read_bench_csv, summarize
from whatif.scm import query_to_json, scm_to_json

TWO_NODE = {
    "nodes": [
        {"id": "x", "kind": "prior", "p": 0.5},
        {"id": "y", "kind": "dependent", "parents": ["x"], "theta": [1.0], "q": 0.2},
    ]
}
FLIP_QUERY = {
    "evidence": {"y": 1},
    "do": {"id": "x", "value": 1, "type": "CF"},
    "predict": "y",
}


@pytest.fixture
def two_node_files(tmp_path):
    model = tmp_path / "model.json"
    query = tmp_path / "query.json"
    model.write_text(json.dumps(TWO_NODE))
    query.write_text(json.dumps(FLIP_QUERY))
    return str(model), str(query)


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestRun:
    def test_sampled_estimate(self, two_node_files, capsys):
        model, query = two_node_files
        code, out, err = run_cli(
            ["run", "--model", model, "--query", query,
             "--samples", "20000", "--seed", "2"],
            capsys,
        )
        assert code == 0
        doc = json.loads(out)
        assert abs(doc["estimate"] - 0.8) < 0.01
        assert doc["n_samples"] == 20000
        assert doc["seed"] == 2
        assert doc["n_rejected"] == 0
        assert doc["ess"] > 0
        assert doc["wall_seconds"] > 0

    def test_lazy_engine_matches_eager(self, two_node_files, capsys):
        model, query = two_node_files
        _, out_e, _ = run_cli(
            ["run", "--model", model, "--query", query,
             "--samples", "5000", "--seed", "3", "--engine", "eager"],
            capsys,
        )
        _, out_l, _ = run_cli(
            ["run", "--model", model, "--query", query,
             "--samples", "5000", "--seed", "3", "--engine", "lazy"],
            capsys,
        )
        assert json.loads(out_e)["estimate"] == json.loads(out_l)["estimate"]

    def test_exact_engine(self, two_node_files, capsys):
        model, query = two_node_files
        code, out, _ = run_cli(
            ["run", "--model", model, "--query", query, "--engine", "exact"],
            capsys,
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["estimate"] == pytest.approx(0.8, abs=1e-12)
        assert doc["n_samples"] == 0
        assert doc["ess"] == 0.0

    def test_schema_violation_exits_one_and_names_the_node(self, tmp_path, capsys):
        model = tmp_path / "model.json"
        bad = {
            "nodes": [
                {"id": "x", "kind": "prior", "p": 0.5},
                {"id": "y", "kind": "dependent", "parents": ["x"],
                 "theta": [0.7], "q": 0.2},
            ]
        }
        model.write_text(json.dumps(bad))
        query = tmp_path / "query.json"
        query.write_text(json.dumps(FLIP_QUERY))
        code, out, err = run_cli(
            ["run", "--model", str(model), "--query", str(query)], capsys
        )
        assert code == 1
        assert out == ""
        assert "node 'y'" in err and "theta" in err

    def test_invalid_json_exits_one_with_line(self, tmp_path, capsys):
        model = tmp_path / "model.json"
        model.write_text('{"nodes": [\n!]}')
        query = tmp_path / "query.json"
        query.write_text(json.dumps(FLIP_QUERY))
        code, _, err = run_cli(
            ["run", "--model", str(model), "--query", str(query)], capsys
        )
        assert code == 1
        assert "invalid JSON at line 2" in err

    def test_degenerate_posterior_exits_two(self, tmp_path, capsys):
        # x is surely True and y copies it noiselessly; observing y=False
        # rejects every sample
        model = tmp_path / "model.json"
        model.write_text(
            json.dumps(
                {
                    "nodes": [
                        {"id": "x", "kind": "prior", "p": 1.0},
                        {"id": "y", "kind": "dependent", "parents": ["x"],
                         "theta": [1.0], "q": 0.0},
                        {"id": "z", "kind": "dependent", "parents": ["y"],
                         "theta": [1.0], "q": 0.5},
                    ]
                }
            )
        )
        query = tmp_path / "query.json"
        query.write_text(
            json.dumps(
                {
                    "evidence": {"y": 0},
                    "do": {"id": "y", "value": 1, "type": "CF"},
                    "predict": "z",
                }
            )
        )
        code, out, err = run_cli(
            ["run", "--model", str(model), "--query", str(query), "--samples", "50"],
            capsys,
        )
        assert code == 2
        assert "degenerate posterior" in err

    def test_dump_traces_writes_jsonl(self, two_node_files, tmp_path, capsys):
        model, query = two_node_files
        dump = tmp_path / "traces.jsonl"
        code, _, _ = run_cli(
            ["run", "--model", model, "--query", query, "--samples", "20",
             "--dump-traces", str(dump)],
            capsys,
        )
        assert code == 0
        lines = dump.read_text().splitlines()
        assert len(lines) == 20
        first = json.loads(lines[0])
        assert first["sample_index"] == 0
        assert set(first["choices"]) >= {"x", "y", "y::noise"}
        assert "log_weight" in first

    def test_console_script_entry_point(self, two_node_files):
        model, query = two_node_files
        proc = subprocess.run(
            [sys.executable, "-m", "whatif.cli", "run", "--model", model,
             "--query", query, "--samples", "500", "--seed", "0"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "estimate" in json.loads(proc.stdout)


class TestBench:
    def bench(self, tmp_path, capsys, name="bench.csv", extra=()):
        out = tmp_path / name
        code, stdout, _ = run_cli(
            ["bench", "--models", "3", "--blocks", "6", "--samples", "100,400",
             "--seed", "0", "--out", str(out), "--no-timing", *extra],
            capsys,
        )
        assert code == 0
        return out, stdout

    def test_csv_shape_and_sorting(self, tmp_path, capsys):
        path, _ = self.bench(tmp_path, capsys)
        text = path.read_text()
        header = text.splitlines()[0]
        assert header == (
            "model_id,n_samples,engine,estimate,exact_value,abs_error,"
            "ess,n_rejected,wall_seconds,seed"
        )
        rows = read_bench_csv(str(path))
        assert len(rows) == 3 * (1 + 2 * 2)  # exact + 2 engines x 2 budgets
        keys = [(r.model_id, r.engine, r.n_samples) for r in rows]
        assert keys == sorted(keys)

    def test_output_is_reproducible_byte_for_byte(self, tmp_path, capsys):
        a, _ = self.bench(tmp_path, capsys, "a.csv")
        b, _ = self.bench(tmp_path, capsys, "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_model_workers_do_not_change_output(self, tmp_path, capsys):
        a, _ = self.bench(tmp_path, capsys, "serial.csv")
        b, _ = self.bench(tmp_path, capsys, "pooled.csv", extra=("--workers", "2"))
        assert a.read_bytes() == b.read_bytes()

    def test_rows_are_consistent(self, tmp_path, capsys):
        path, _ = self.bench(tmp_path, capsys)
        rows = read_bench_csv(str(path))
        by_engine = {}
        for r in rows:
            assert r.abs_error == abs(r.estimate - r.exact_value)
            if r.engine == "exact":
                assert r.n_samples == 0 and r.ess == 0.0 and r.n_rejected == 0
                assert r.abs_error == 0.0
            else:
                assert 0 < r.ess <= r.n_samples
                by_engine.setdefault((r.model_id, r.n_samples), {})[r.engine] = r
        for pair in by_engine.values():
            # same derived seed, so lazy and eager agree bitwise
            assert pair["eager"].estimate == pair["lazy"].estimate
            assert pair["eager"].seed == pair["lazy"].seed

    def test_summary_lines_match_rows(self, tmp_path, capsys):
        path, stdout = self.bench(tmp_path, capsys)
        rows = read_bench_csv(str(path))
        summary = summarize(rows)
        assert {(e, n) for e, n, *_ in summary} == {
            ("eager", 100), ("eager", 400), ("lazy", 100), ("lazy", 400)
        }
        for engine, n, mean, p10, p90 in summary:
            assert p10 <= mean <= p90 or p10 <= p90  # percentiles ordered
            assert f"{engine} n={n}" in stdout
