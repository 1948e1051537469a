"""Versioned JSON checkpoints of the colony state, written at iteration barriers."""

from __future__ import annotations

import json
import os
from pathlib import Path

from .colony import ColonyState, SearchDomain
from .space import VisitedCache

FORMAT = "abcnas-checkpoint"
VERSION = 1


class ResumeError(RuntimeError):
    """A checkpoint cannot be used to resume this run."""


def checkpoint_save(
    state: ColonyState,
    path,
    domain: SearchDomain,
    config_hash: str,
    cache: VisitedCache | None = None,
    history_rows: int | None = None,
    completed: bool = False,
) -> Path:
    path = Path(path)
    payload = {
        "format": FORMAT,
        "version": VERSION,
        "config_hash": config_hash,
        "completed": completed,
        "history_rows": state.events if history_rows is None else history_rows,
        "state": state.to_dict(domain),
        "cache": cache.to_dict() if cache is not None else None,
    }
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload))
    os.replace(tmp, path)
    return path


def checkpoint_load(path, domain: SearchDomain, config_hash: str | None = None):
    """Return ``(state, cache, payload)``; raises ``ResumeError`` on any mismatch."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError:
        raise ResumeError(f"no checkpoint at {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ResumeError(f"corrupt checkpoint {path}: {exc}") from None
    if not isinstance(payload, dict) or payload.get("format") != FORMAT:
        raise ResumeError(f"{path} is not an {FORMAT} file")
    if payload.get("version") != VERSION:
        raise ResumeError(f"checkpoint version {payload.get('version')} is not supported (expected {VERSION})")
    if config_hash is not None and payload.get("config_hash") != config_hash:
        raise ResumeError(
            f"checkpoint was written for config {payload.get('config_hash', '?')[:12]}, "
            f"current config is {config_hash[:12]}"
        )
    try:
        state = ColonyState.from_dict(payload["state"], domain)
    except (KeyError, TypeError, ValueError) as exc:
        raise ResumeError(f"corrupt checkpoint state: {exc}") from None
    cache = VisitedCache.from_dict(payload["cache"]) if payload.get("cache") is not None else None
    return state, cache, payload
