"""
Versioned CSV/JSON persistence.

Every CSV starts with a schema comment line ``# kssim-<kind>-v1 <json meta>``
so downstream consumers can refuse unknown layouts.  Float formatting is
fixed at full precision, making byte-identical reruns possible for identical
config + seed (timestamps are confined to the run manifest).
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"

SCHEMAS = {
    "profile": "kssim-profile-v1",
    "envelopes": "kssim-envelopes-v1",
    "spectra": "kssim-spectra-v1",
    "trajectory": "kssim-trajectory-v1",
    "epsconv": "kssim-epsconv-v1",
    "sweep": "kssim-sweep-v1",
}


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % float(x)
    return str(x)


def write_csv(path, kind: str, meta: dict, columns: list, rows) -> None:
    """CSV with a schema header comment carrying JSON metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"# {SCHEMAS[kind]} " + json.dumps(meta, sort_keys=True)
    lines = [header, ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path):
    """Returns (schema_tag, meta, columns, rows as float arrays where possible)."""
    path = Path(path)
    with path.open(encoding="utf-8") as f:
        header = f.readline().strip()
        if not header.startswith("# kssim-"):
            raise ValueError(f"{path}: missing kssim schema header")
        tag, _, rest = header[2:].partition(" ")
        meta = json.loads(rest) if rest else {}
        columns = f.readline().strip().split(",")
        rows = [line.strip().split(",") for line in f if line.strip()]
    return tag, meta, columns, rows


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):  # before int: bool is an int subclass
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonify(payload), sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def config_hash(config: dict) -> str:
    canon = json.dumps(_jsonify(config), sort_keys=True).encode()
    return hashlib.sha256(canon).hexdigest()


def write_manifest(out_dir, config: dict, wall_time: float) -> None:
    import scipy

    from . import __version__

    write_json(Path(out_dir) / "manifest.json", {
        "config": config,
        "config_hash": config_hash(config),
        "versions": {"kssim": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time_s": wall_time,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    })
