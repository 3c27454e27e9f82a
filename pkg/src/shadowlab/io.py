"""Artifact writers: RFC-4180 CSV with 17 significant digits, JSON reports and certificates."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .shadowing import Certificate

__all__ = ["fmt", "write_csv", "write_json", "to_jsonable", "write_certificate", "read_certificate"]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(r.get(h)) for h in header])


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def write_certificate(path, cert: Certificate, model: dict, forward_only: bool) -> None:
    """Certificate plus the model it refers to, so it can be replayed on its own."""
    write_json(path, {"model": model, "forward_only": bool(forward_only), "certificate": cert.to_dict()})


def read_certificate(path):
    """Returns ``(certificate, model, forward_only)``; ``model`` is None for a bare certificate."""
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if "certificate" in d:
        return Certificate.from_dict(d["certificate"]), d.get("model"), d.get("forward_only")
    return Certificate.from_dict(d), None, None
