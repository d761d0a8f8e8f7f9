"""Deterministic JSON rendering and batch persistence.

Reports and persisted batches must be byte-stable across runs and thread
counts, so floats are rendered with a fixed 17-significant-digit format
(enough for exact float64 round trips) and dictionaries keep insertion
order.  The batch format is versioned JSON with no binary payloads:

    {"format": "ndpinfer-batch", "version": 1,
     "seed": ..., "log_scale_factor": ..., "trimmed": ...,
     "config": {...}, "counts": [[...]],
     "log_weights": [...],
     "sims": [{"cluster_of": [...], "roots": {"<row>": [theta...]}}]}
"""

from __future__ import annotations

import io
import json

import numpy as np

from .engine import SimulationBatch
from .errors import ValidationError
from .model import ModelConfig, ObservationArray

BATCH_FORMAT = "ndpinfer-batch"
BATCH_VERSION = 1


def format_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValidationError(f"cannot render non-finite number {x!r}")
    return format(float(x), ".17g")


def dumps(obj, indent: int = 2) -> str:
    """Render JSON with .17g floats; dict insertion order is preserved."""
    buf = io.StringIO()
    _write(buf, obj, indent, 0)
    buf.write("\n")
    return buf.getvalue()


def _write(buf, obj, indent, level):
    pad = " " * (indent * (level + 1))
    closing = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            buf.write("{}")
            return
        buf.write("{\n")
        for i, (k, v) in enumerate(obj.items()):
            buf.write(pad + json.dumps(str(k)) + ": ")
            _write(buf, v, indent, level + 1)
            buf.write(",\n" if i < len(obj) - 1 else "\n")
        buf.write(closing + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            buf.write("[]")
            return
        buf.write("[\n")
        for i, v in enumerate(items):
            buf.write(pad)
            _write(buf, v, indent, level + 1)
            buf.write(",\n" if i < len(items) - 1 else "\n")
        buf.write(closing + "]")
    elif isinstance(obj, bool) or obj is None:
        buf.write(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        buf.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        buf.write(format_float(float(obj)))
    elif isinstance(obj, str):
        buf.write(json.dumps(obj, ensure_ascii=False))
    else:
        raise ValidationError(f"cannot serialize object of type {type(obj).__name__}")


def save_batch(batch: SimulationBatch, path) -> None:
    sims = []
    for k in range(batch.K):
        cluster = batch.cluster_of[k]
        roots = {}
        for m in np.unique(cluster):
            roots[str(int(m))] = [float(x) for x in batch.root_thetas[batch.row_slot[k, m]]]
        sims.append(
            {"cluster_of": [int(c) for c in cluster], "roots": roots}
        )
    doc = {
        "format": BATCH_FORMAT,
        "version": BATCH_VERSION,
        "seed": batch.seed,
        "log_scale_factor": batch.log_scale_factor,
        "trimmed": batch.trimmed,
        "config": batch.config.to_dict(),
        "counts": [[int(c) for c in row] for row in batch.data.counts],
        "log_weights": [float(w) for w in batch.log_weights],
        "sims": sims,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(doc))


def load_batch(path) -> SimulationBatch:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != BATCH_FORMAT:
        raise ValidationError(f"not a {BATCH_FORMAT} file")
    if doc.get("version") != BATCH_VERSION:
        raise ValidationError(f"unsupported batch version {doc.get('version')!r}")
    config = ModelConfig.from_dict(doc["config"])
    data = ObservationArray(counts=np.asarray(doc["counts"], dtype=np.int64))
    K = len(doc["log_weights"])
    M, L = data.M, data.L
    cluster = np.zeros((K, M), dtype=np.int32)
    row_slot = np.zeros((K, M), dtype=np.int64)
    flats = []
    offset = 0
    for k, sim in enumerate(doc["sims"]):
        cl = np.asarray(sim["cluster_of"], dtype=np.int32)
        if cl.shape != (M,):
            raise ValidationError(f"simulation {k} has a malformed cluster map")
        cluster[k] = cl
        slot_of_root = {}
        for root_str in sorted(sim["roots"], key=int):
            vec = np.asarray(sim["roots"][root_str], dtype=float)
            if vec.shape != (L,):
                raise ValidationError(f"simulation {k} root {root_str} has wrong length")
            slot_of_root[int(root_str)] = offset
            flats.append(vec)
            offset += 1
        try:
            row_slot[k] = [slot_of_root[int(c)] for c in cl]
        except KeyError as exc:
            raise ValidationError(f"simulation {k} references missing root {exc}") from None
    return SimulationBatch(
        config=config,
        data=data,
        seed=int(doc["seed"]),
        log_scale_factor=float(doc["log_scale_factor"]),
        log_weights=np.asarray(doc["log_weights"], dtype=float),
        cluster_of=cluster,
        row_slot=row_slot,
        root_thetas=np.vstack(flats) if flats else np.zeros((0, L)),
        trimmed=int(doc.get("trimmed", 0)),
    )
