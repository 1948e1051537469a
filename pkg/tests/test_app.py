import csv
import json

import pytest
import yaml

from abcnas import cli
from abcnas.checkpoint import ResumeError, checkpoint_load, checkpoint_save
from abcnas.colony import ColonyConfig, ColonyState, make_rng
from abcnas.config import ConfigError, config_hash, load_config, parse_config
from abcnas.history import HEADER, CsvHistory, read_history
from abcnas.runner import CHECKPOINT_FILE, CONFIG_FILE, HISTORY_FILE, SUMMARY_FILE, run_search
from abcnas.space import ArchitectureSpace

DENSE_SPACE = {
    "depth": 3,
    "vocabulary": [{"id": f"dense{u}", "kind": "dense", "units": u} for u in (8, 16, 32, 64)],
}


def surrogate_config(tmp_path, **colony):
    data = {
        "mode": "nas",
        "colony": {"num_food_sources": 4, "abandonment_limit": 3, "iterations": 8, "seed": 1, **colony},
        "space": DENSE_SPACE,
        "evaluation": {"strategy": "surrogate"},
        "output_dir": str(tmp_path / "out"),
    }
    return parse_config(data)


def lfe_config(tmp_path, name="lfe"):
    return parse_config(
        {
            "mode": "nas",
            "colony": {"num_food_sources": 3, "abandonment_limit": 2, "iterations": 4, "seed": 0},
            "space": {"depth": 2, "vocabulary": DENSE_SPACE["vocabulary"][:3]},
            "evaluation": {"lfe": {"epsilon_epochs": 1, "full_train_epochs": 5}},
            "dataset": {"name": "moons", "n_samples": 200},
            "output_dir": str(tmp_path / name),
        }
    )


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


class TestConfig:
    def test_minimal_nas_defaults(self):
        cfg = parse_config({"mode": "nas"})
        assert cfg.colony.num_food_sources == 7 and cfg.colony.num_onlookers == 7
        assert cfg.colony.abandonment_limit == 5 and cfg.colony.iterations == 10
        assert cfg.evaluation.strategy == "lfe" and cfg.evaluation.lfe.epsilon_epochs == 7
        assert cfg.evaluation.full_train is True and cfg.evaluation.memoize is True
        assert cfg.space.depth == 5 and len(cfg.space.vocabulary) == 10
        assert cfg.dataset.name == "moons"

    def test_benchmark_defaults(self):
        cfg = parse_config({"mode": "benchmark", "benchmark": {"function": "rastrigin", "dimension": 3}})
        assert (cfg.benchmark.lower, cfg.benchmark.upper) == (-5.12, 5.12)
        assert cfg.evaluation.memoize is False

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="colonysize: unknown key"):
            parse_config({"mode": "nas", "colonysize": 3})
        with pytest.raises(ConfigError, match="colony.limit: unknown key"):
            parse_config({"mode": "nas", "colony": {"limit": 3}})

    @pytest.mark.parametrize(
        "data",
        [
            {"mode": "benchmark", "space": {}},
            {"mode": "benchmark", "evaluation": {"strategy": "lfe"}},
            {"mode": "nas", "benchmark": {}},
            {"mode": "nas", "evaluation": {"strategy": "surrogate"}, "dataset": {}},
            {"mode": "nas", "evaluation": {"strategy": "surrogate", "full_train": True}},
            {"mode": "nas", "evaluation": {"surrogate_seed": 1}},
            {"mode": "nas", "evaluation": {"lfe": {"epsilon_epochs": 10}}},
            {"mode": "nas", "colony": {"num_food_sources": 0}},
            {"mode": "nas", "space": {"depth": 2, "vocabulary": []}},
            {"mode": "search"},
            [],
        ],
    )
    def test_invalid(self, data):
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_resolved_snapshot_is_fixed_point(self, tmp_path):
        cfg = surrogate_config(tmp_path)
        run_search(cfg)
        snap = tmp_path / "out" / CONFIG_FILE
        again = load_config(snap)
        assert again == cfg
        assert config_hash(again) == config_hash(cfg)
        write_yaml(tmp_path / "twice.yaml", again.to_dict())
        assert load_config(tmp_path / "twice.yaml") == cfg

    def test_hash_ignores_runtime_keys(self, tmp_path):
        a = surrogate_config(tmp_path)
        b = a.model_copy(update={"output_dir": "/elsewhere", "workers": 4})
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(a.with_seed(2))

    def test_yaml_error_reports_line(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("mode: nas\ncolony:\n  seed: [1,\n")
        with pytest.raises(ConfigError, match="line"):
            load_config(bad)

    def test_seed_override(self, tmp_path):
        path = write_yaml(tmp_path / "c.yaml", {"mode": "nas"})
        cfg = load_config(path, seed=9)
        assert cfg.colony.seed == 9 and cfg.evaluation.seed == 9


class TestHistory:
    def test_header_exact(self):
        assert HEADER == (
            "iteration,phase,source_index,candidate,objective,fitness,trials,cache_hit,elapsed_seconds,is_global_best"
        )

    def test_rows_match_summary(self, tmp_path):
        summary = run_search(surrogate_config(tmp_path))
        path = tmp_path / "out" / HISTORY_FILE
        rows = read_history(path)
        assert len(rows) == summary["evaluation_events"]
        assert path.read_text().splitlines()[0] == HEADER
        assert all(0.0 <= float(r["objective"]) <= 1.0 for r in rows)
        assert all(float(r["elapsed_seconds"]) == 0.0 for r in rows)
        assert {r["phase"] for r in rows} == {"scout", "employee", "onlooker"}
        best = min(float(r["objective"]) for r in rows)
        assert summary["best"]["objective"] == best

    def test_byte_identical_rerun(self, tmp_path):
        run_search(surrogate_config(tmp_path))
        first = (tmp_path / "out" / HISTORY_FILE).read_bytes()
        run_search(surrogate_config(tmp_path))
        assert (tmp_path / "out" / HISTORY_FILE).read_bytes() == first

    def test_lfe_run_writes_full_train_row(self, tmp_path):
        cfg = lfe_config(tmp_path)
        summary = run_search(cfg)
        rows = read_history(tmp_path / "lfe" / HISTORY_FILE)
        assert rows[-1]["phase"] == "full_train" and rows[-1]["source_index"] == "-1"
        assert rows[-1]["candidate"] == summary["best"]["candidate"]
        assert "test_accuracy" in summary["full_train"]["metrics"]
        assert (tmp_path / "lfe" / "best.params").exists()
        assert all(0.0 <= float(r["objective"]) <= 1.0 for r in rows)

    def test_resume_with_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            CsvHistory(tmp_path / "nope.csv", keep_rows=3)


class TestCheckpoint:
    def _state(self):
        space = ArchitectureSpace(3)
        from abcnas.colony import Colony
        from abcnas.evaluation import SurrogateStrategy

        colony = Colony(ColonyConfig(3, 3, 2, 2, 0), space, SurrogateStrategy(space, 0))
        colony.run()
        return space, colony.state

    def test_round_trip(self, tmp_path):
        space, state = self._state()
        path = checkpoint_save(state, tmp_path / "c.json", space, "abc")
        loaded, cache, payload = checkpoint_load(path, space, "abc")
        assert loaded.to_dict(space) == state.to_dict(space)
        assert cache is None and payload["history_rows"] == state.events
        assert loaded.rng.random() == state.rng.random()

    def test_refusals(self, tmp_path):
        space, state = self._state()
        path = checkpoint_save(state, tmp_path / "c.json", space, "abc")
        with pytest.raises(ResumeError, match="config"):
            checkpoint_load(path, space, "other")
        payload = json.loads(path.read_text())
        payload["version"] = 99
        path.write_text(json.dumps(payload))
        with pytest.raises(ResumeError, match="version"):
            checkpoint_load(path, space, "abc")
        path.write_text("{not json")
        with pytest.raises(ResumeError, match="corrupt"):
            checkpoint_load(path, space, "abc")
        with pytest.raises(ResumeError):
            checkpoint_load(tmp_path / "missing.json", space)

    def test_state_from_dict_rejects_garbage(self):
        with pytest.raises((KeyError, TypeError, ValueError)):
            ColonyState.from_dict({"config": {}}, ArchitectureSpace(2))

    def test_interrupt_and_resume_equals_uninterrupted(self, tmp_path):
        full = surrogate_config(tmp_path).model_copy(update={"output_dir": str(tmp_path / "full")})
        split = surrogate_config(tmp_path).model_copy(update={"output_dir": str(tmp_path / "split")})
        reference = run_search(full)
        partial = run_search(split, stop_after=4)
        assert partial["status"] == "interrupted" and partial["iterations"] == 4
        resumed = run_search(split, resume=True)
        assert resumed["status"] == "completed"
        for name in (HISTORY_FILE, SUMMARY_FILE):
            assert (tmp_path / "split" / name).read_bytes() == (tmp_path / "full" / name).read_bytes()
        assert resumed == reference

    def test_crash_after_checkpoint_then_resume(self, tmp_path, monkeypatch):
        ref_cfg = surrogate_config(tmp_path).model_copy(update={"output_dir": str(tmp_path / "ref")})
        run_search(ref_cfg)
        cfg = surrogate_config(tmp_path)
        original = CsvHistory.__call__
        limit = 30

        def failing(self, record):
            if self.rows >= limit:
                raise OSError("disk full")
            original(self, record)

        monkeypatch.setattr(CsvHistory, "__call__", failing)
        with pytest.raises(Exception):
            run_search(cfg)
        monkeypatch.setattr(CsvHistory, "__call__", original)
        saved = json.loads((tmp_path / "out" / CHECKPOINT_FILE).read_text())
        assert 0 < saved["history_rows"] <= limit
        run_search(cfg, resume=True)
        assert (tmp_path / "out" / HISTORY_FILE).read_bytes() == (tmp_path / "ref" / HISTORY_FILE).read_bytes()

    def test_resume_refuses_changed_config(self, tmp_path):
        cfg = surrogate_config(tmp_path)
        run_search(cfg, stop_after=2)
        with pytest.raises(ResumeError):
            run_search(cfg.with_seed(5), resume=True)

    def test_resume_completed_is_noop(self, tmp_path):
        cfg = surrogate_config(tmp_path)
        first = run_search(cfg)
        assert run_search(cfg, resume=True) == first

    def test_lfe_resume(self, tmp_path):
        ref = run_search(lfe_config(tmp_path, "a"))
        run_search(lfe_config(tmp_path, "b"), stop_after=2)
        again = run_search(lfe_config(tmp_path, "b"), resume=True)
        assert again["best"] == ref["best"]
        assert (tmp_path / "a" / HISTORY_FILE).read_bytes() == (tmp_path / "b" / HISTORY_FILE).read_bytes()


class TestCli:
    def _config(self, tmp_path, data=None):
        data = data or {
            "mode": "nas",
            "colony": {"num_food_sources": 3, "iterations": 3},
            "space": DENSE_SPACE,
            "evaluation": {"strategy": "surrogate"},
        }
        return str(write_yaml(tmp_path / "cfg.yaml", data))

    def test_run_ok(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert cli.main(["run", "--config", self._config(tmp_path), "--out", str(out)]) == 0
        assert "best candidate:" in capsys.readouterr().out
        assert (out / HISTORY_FILE).exists() and (out / SUMMARY_FILE).exists()

    def test_config_error_exit_2(self, tmp_path, capsys):
        path = self._config(tmp_path, {"mode": "nas", "colonysize": 3})
        assert cli.main(["run", "--config", path, "--out", str(tmp_path / "o")]) == 2
        err = capsys.readouterr().err.strip().splitlines()
        assert err == ["error: config: colonysize: unknown key"]

    def test_missing_config_exit_2(self, tmp_path, capsys):
        assert cli.main(["run", "--config", str(tmp_path / "none.yaml")]) == 2
        assert capsys.readouterr().err.startswith("error: config:")

    def test_runtime_error_exit_3(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert cli.main(["run", "--config", self._config(tmp_path), "--out", str(blocker / "sub")]) == 3
        assert capsys.readouterr().err.startswith("error: runtime:")

    def test_resume_refusal_exit_4(self, tmp_path, capsys):
        out = str(tmp_path / "o")
        path = self._config(tmp_path)
        assert cli.main(["run", "--config", path, "--out", out, "--quiet"]) == 0
        assert cli.main(["resume", "--config", path, "--out", out, "--seed", "7"]) == 4
        assert capsys.readouterr().err.startswith("error: resume:")
        assert cli.main(["resume", "--out", str(tmp_path / "empty")]) == 4

    def test_resume_from_snapshot(self, tmp_path):
        out = tmp_path / "o"
        cli.main(["run", "--config", self._config(tmp_path), "--out", str(out), "--quiet"])
        assert cli.main(["resume", "--out", str(out), "--quiet"]) == 0

    def test_benchmark(self, tmp_path, capsys):
        code = cli.main(["benchmark", "sphere", "--dimension", "3", "--iterations", "30", "--out", str(tmp_path / "b")])
        assert code == 0
        summary = json.loads((tmp_path / "b" / SUMMARY_FILE).read_text())
        assert summary["mode"] == "benchmark" and summary["best"]["objective"] < 1e-2
        with open(tmp_path / "b" / HISTORY_FILE) as fh:
            assert next(csv.reader(fh)) == HEADER.split(",")

    def test_evaluate(self, tmp_path, capsys):
        path = self._config(tmp_path)
        assert cli.main(["evaluate", "--config", path, "dense64|dense32|dense32"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["objective"] <= 1e-12
        assert cli.main(["evaluate", "--config", path, "dense64|bogus|dense32"]) == 2
        assert "unknown operation 'bogus' at position 1" in capsys.readouterr().err


def test_rng_state_survives_json():
    rng = make_rng(3)
    rng.random(5)
    state = json.loads(json.dumps(rng.bit_generator.state))
    other = make_rng(0)
    other.bit_generator.state = state
    assert other.random() == rng.random()
