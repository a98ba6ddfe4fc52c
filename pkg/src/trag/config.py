"""Run configuration: one dataclass mirroring the CLI flags 1:1, plus a
human-editable ``key = value`` file format. Unknown keys are rejected.

The training.* block records the fine-tuning settings users need when
training encoder/generator checkpoints externally; nothing in this package
consumes it at runtime.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)

TRAINING_DEFAULTS = {
    "batch_size": 128,
    "epochs": 2,
    "learning_rate": 3e-5,
    "grad_accumulation_steps": 64,
}


@dataclass
class RunConfig:
    corpus: str | None = None
    qa: str | None = None
    index_dir: str = "idx"
    out: str | None = None
    seed: int = 17
    budget: int = 512
    bm25_k1: float = 0.9
    bm25_b: float = 0.4
    pool: int = 100
    k: int = 3
    negatives: int = 1
    dim: int = 128
    ann_threshold: int = 1000
    hnsw_m: int = 48
    ef_construction: int = 200
    ef_search: int = 100
    n_docs: int = 5
    beam: int = 4
    max_len: int = 32
    temperature: float = 1.0
    heatmap_threshold: float = 0.5
    generator: str = "toy"
    training: dict = field(default_factory=lambda: dict(TRAINING_DEFAULTS))

    def log_resolved(self, command: str) -> None:
        log.info("resolved config for %s: %s", command,
                 json.dumps(dataclasses.asdict(self), sort_keys=True))


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    target = _FIELD_TYPES[name]
    raw = raw.strip()
    if raw.lower() in ("none", "null", ""):
        return None
    if target.startswith("int"):
        return int(raw)
    if target.startswith("float"):
        return float(raw)
    return raw


def load_config(path: str | Path) -> RunConfig:
    """Parse ``key = value`` lines; '#' starts a comment. ``training.x``
    keys land in the training block."""
    cfg = RunConfig()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key.startswith("training."):
                sub = key.split(".", 1)[1]
                if sub not in TRAINING_DEFAULTS:
                    raise ValueError(f"{path}:{line_no}: unknown key {key!r}")
                cfg.training[sub] = (float(raw) if "." in raw or "e" in raw.lower()
                                     else int(raw))
                continue
            if key not in _FIELD_TYPES or key == "training":
                raise ValueError(f"{path}:{line_no}: unknown key {key!r}")
            setattr(cfg, key, _coerce(key, raw))
    return cfg


def save_config(cfg: RunConfig, path: str | Path) -> None:
    lines = ["# run configuration; keys mirror CLI flags (dashes become underscores)"]
    for f in dataclasses.fields(cfg):
        if f.name == "training":
            continue
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {value if value is not None else 'none'}")
    lines.append("")
    lines.append("# settings for training checkpoints externally; unused at runtime")
    for key, value in cfg.training.items():
        lines.append(f"training.{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
