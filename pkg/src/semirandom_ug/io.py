"""JSON formats for instances, truth sidecars, solutions, weights, labelings and reports.

Every document carries ``"format_version": 1``.  Writers sort keys and use a fixed
float repr, so equal objects always serialise to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import CorruptionRecord, Labeling, UGInstance, VectorSolution
from .lp import LPWeights

FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_plain(doc), sort_keys=True, indent=1) + "\n"


def write_json(path, doc: dict) -> None:
    Path(path).write_text(dumps(doc))


def read_json(path) -> dict:
    doc = json.loads(Path(path).read_text())
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: expected format_version {FORMAT_VERSION}, found {version!r}")
    return doc


def _versioned(kind, body):
    return {"format_version": FORMAT_VERSION, "kind": kind, **body}


# --- instances ------------------------------------------------------------------

def instance_to_json(inst: UGInstance) -> dict:
    if inst.is_linear:
        edges = [{"u": int(u), "v": int(v), "shift": int(s)}
                 for u, v, s in zip(inst.eu, inst.ev, inst.shifts)]
    else:
        edges = [{"u": int(u), "v": int(v), "perm": p.tolist()}
                 for u, v, p in zip(inst.eu, inst.ev, inst.perms)]
    return _versioned("instance", {"n": inst.n, "k": inst.k, "linear": inst.is_linear, "edges": edges})


def instance_from_json(doc: dict) -> UGInstance:
    try:
        n, k, edges = int(doc["n"]), int(doc["k"]), doc["edges"]
        pairs = [(e["u"], e["v"]) for e in edges]
        if doc.get("linear", False):
            return UGInstance.linear(n, k, pairs, [e["shift"] for e in edges])
        return UGInstance.from_edges(n, k, pairs, perms=[e["perm"] for e in edges])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed instance document: {exc}") from exc


def truth_to_json(rec: CorruptionRecord) -> dict:
    body = {
        "corrupted": rec.corrupted,
        "original_constraints": rec.original_perms,
        "original_shifts": rec.original_shifts,
        "planted": None if rec.planted is None else rec.planted.x,
        "model": rec.model,
        "meta": rec.meta,
    }
    return _versioned("truth", body)


def truth_from_json(doc: dict, k: int) -> CorruptionRecord:
    planted = doc.get("planted")
    return CorruptionRecord(
        np.asarray(doc["corrupted"], dtype=np.int64),
        np.asarray(doc["original_constraints"], dtype=np.int64).reshape(len(doc["corrupted"]), -1),
        None if planted is None else Labeling(planted, k),
        doc.get("model"),
        None if doc.get("original_shifts") is None else np.asarray(doc["original_shifts"]),
        doc.get("meta", {}),
    )


def truth_path(instance_path) -> Path:
    p = Path(instance_path)
    return p.with_name(p.stem + ".truth.json")


# --- solver outputs -----------------------------------------------------------

def solution_to_json(sol: VectorSolution, objective=None, residuals=None, status=None) -> dict:
    body = {"n": sol.n, "k": sol.k, "d": sol.d, "flavor": sol.flavor,
            "vectors": sol.vectors.reshape(-1), "objective": objective,
            "residuals": residuals or {}, "status": status}
    return _versioned("solution", body)


def solution_from_json(doc: dict) -> VectorSolution:
    n, k, d = int(doc["n"]), int(doc["k"]), int(doc["d"])
    vec = np.asarray(doc["vectors"], dtype=np.float64)
    if vec.size != n * k * d:
        raise FormatError("vector array does not match n * k * d")
    return VectorSolution(vec.reshape(n, k, d), doc["flavor"])


def weights_to_json(w: LPWeights) -> dict:
    return _versioned("weights", {"n": w.n, "k": w.k, "x": w.x.reshape(-1), "objective": w.objective})


def weights_from_json(doc: dict) -> LPWeights:
    n, k = int(doc["n"]), int(doc["k"])
    return LPWeights(np.asarray(doc["x"], dtype=np.float64).reshape(n, k), float(doc["objective"]))


def labeling_to_json(lab: Labeling, extra: dict | None = None) -> dict:
    return _versioned("labeling", {"k": lab.k, "x": lab.x, **(extra or {})})


def labeling_from_json(doc: dict) -> Labeling:
    return Labeling(np.asarray(doc["x"], dtype=np.int64), int(doc["k"]))


def report_to_json(report: dict) -> dict:
    return _versioned("report", {"report": report})
