"""Run orchestration: config -> domain + strategy -> colony -> files on disk."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

from .benchmarks import BenchmarkStrategy, ContinuousBox, get_benchmark
from .checkpoint import ResumeError, checkpoint_load, checkpoint_save
from .colony import PHASE_FULL_TRAIN, Colony, HistoryRecord, fitness_transform
from .config import RunConfig, config_hash, save_resolved
from .datasets import load_dataset
from .evaluation import LfeStrategy, SurrogateStrategy
from .history import CsvHistory
from .space import ArchitectureSpace, VisitedCache

logger = logging.getLogger(__name__)

HISTORY_FILE = "history.csv"
SUMMARY_FILE = "summary.json"
CONFIG_FILE = "config.resolved.yaml"
CHECKPOINT_FILE = "checkpoint.json"
PARAMS_FILE = "best.params"


@dataclass
class Setup:
    domain: object
    strategy: object
    space: ArchitectureSpace | None = None


def build_setup(cfg: RunConfig) -> Setup:
    if cfg.mode == "benchmark":
        b = cfg.benchmark
        return Setup(ContinuousBox.cube(b.lower, b.upper, b.dimension), BenchmarkStrategy(get_benchmark(b.function)))
    space = cfg.space.build()
    ev = cfg.evaluation
    if ev.strategy == "surrogate":
        return Setup(space, SurrogateStrategy(space, ev.surrogate_seed), space)
    d = cfg.dataset
    dataset = load_dataset(
        d.name,
        seed=d.seed,
        validation_fraction=ev.lfe.validation_fraction,
        test_fraction=d.test_fraction,
        n_samples=d.n_samples,
        noise=d.noise,
        centers=d.centers,
        images=d.images,
        labels=d.labels,
        limit=d.limit,
    )
    return Setup(space, LfeStrategy(space, dataset, ev.lfe.to_lfe_config(), seed=ev.seed), space)


def _public_metrics(metrics: dict, record_timing: bool) -> dict:
    if record_timing:
        return dict(metrics)
    return {k: v for k, v in metrics.items() if k != "seconds"}


def run_search(cfg: RunConfig, resume: bool = False, stop_after: int | None = None, echo=None) -> dict:
    """Execute (or resume) a full run and return the summary that was written.

    ``stop_after`` ends the search at that iteration barrier as if interrupted;
    the run stays resumable from its checkpoint.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_resolved(cfg, out / CONFIG_FILE)
    digest = config_hash(cfg)
    setup = build_setup(cfg)
    colony_cfg = cfg.colony_config
    ckpt_path = out / CHECKPOINT_FILE

    state, cache, keep_rows = None, None, None
    if resume:
        state, cache, payload = checkpoint_load(ckpt_path, setup.domain, digest)
        if payload.get("completed"):
            summary_path = out / SUMMARY_FILE
            if summary_path.exists():
                return json.loads(summary_path.read_text())
            raise ResumeError("checkpoint marks the run completed but the summary is missing")
        keep_rows = payload["history_rows"]
    if cache is None and cfg.evaluation.memoize:
        cache = VisitedCache()

    started = time.monotonic()
    with CsvHistory(out / HISTORY_FILE, keep_rows=keep_rows) as history:
        colony = Colony(
            colony_cfg,
            setup.domain,
            setup.strategy,
            cache=cache,
            sinks=[history],
            workers=cfg.workers,
            record_timing=cfg.record_timing,
            state=state,
        )
        interrupted = False

        def barrier(st) -> bool:
            nonlocal interrupted
            history.flush()
            every = cfg.checkpoint_every
            if every and st.iteration % every == 0:
                checkpoint_save(st, ckpt_path, setup.domain, digest, cache, history.rows)
            timed_out = cfg.max_seconds is not None and time.monotonic() - started > cfg.max_seconds
            if (stop_after is not None and st.iteration >= stop_after) or timed_out:
                if not colony.finished:
                    interrupted = True
                    checkpoint_save(st, ckpt_path, setup.domain, digest, cache, history.rows)
                    return True
            return False

        state = colony.run(on_iteration=barrier)
        best = state.global_best
        summary = {
            "mode": cfg.mode,
            "status": "interrupted" if interrupted else "completed",
            "config_hash": digest,
            "iterations": state.iteration,
            "best": {
                "candidate": setup.domain.encode(best.position),
                "objective": best.objective,
                "fitness": best.fitness,
                "metrics": _public_metrics(best.metrics, cfg.record_timing),
            },
            "evaluations": state.evaluations,
        }
        if interrupted:
            summary["evaluation_events"] = history.rows
            _write_summary(out, summary)
            return summary

        if cfg.mode == "nas" and cfg.evaluation.full_train:
            start = time.perf_counter()
            result = setup.strategy.full_train(best.position, params_path=out / PARAMS_FILE)
            history(
                HistoryRecord(
                    iteration=state.iteration,
                    phase=PHASE_FULL_TRAIN,
                    source_index=-1,
                    candidate=setup.domain.encode(best.position),
                    objective=result.objective,
                    fitness=fitness_transform(result.objective),
                    trials=0,
                    cache_hit=False,
                    elapsed_seconds=round(time.perf_counter() - start, 6) if cfg.record_timing else 0.0,
                    is_global_best=False,
                )
            )
            summary["full_train"] = {
                "objective": result.objective,
                "metrics": _public_metrics(result.metrics, cfg.record_timing),
            }
        history.flush()
        summary["evaluation_events"] = history.rows
        checkpoint_save(state, ckpt_path, setup.domain, digest, cache, history.rows, completed=True)
    _write_summary(out, summary)
    return summary


def _write_summary(out: Path, summary: dict):
    (out / SUMMARY_FILE).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def evaluate_candidate(cfg: RunConfig, encoding: str) -> dict:
    """One-off evaluation of a candidate given in canonical string form."""
    setup = build_setup(cfg)
    position = setup.domain.decode(encoding)
    result = setup.strategy.evaluate(position)
    return {
        "candidate": setup.domain.encode(position),
        "objective": result.objective,
        "fitness": fitness_transform(result.objective),
        "metrics": result.metrics,
    }
