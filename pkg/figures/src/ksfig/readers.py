"""
Readers for the versioned CSV/JSON artifacts.

Every CSV starts with ``# kssim-<kind>-v1 <json meta>``; inputs whose schema
tag is unknown or mismatched are refused.  This package never imports the
solver: files are the only coupling.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

KNOWN_SCHEMAS = {
    "profile": "kssim-profile-v1",
    "envelopes": "kssim-envelopes-v1",
    "spectra": "kssim-spectra-v1",
    "trajectory": "kssim-trajectory-v1",
    "epsconv": "kssim-epsconv-v1",
    "sweep": "kssim-sweep-v1",
}


class SchemaError(ValueError):
    """Unknown or mismatched artifact schema."""


def read_table(path, expect_kind: str):
    """Parse one versioned CSV into (meta, {column: float array})."""
    path = Path(path)
    with path.open(encoding="utf-8") as f:
        header = f.readline().strip()
        if not header.startswith("# "):
            raise SchemaError(f"{path}: missing schema header line")
        tag, _, rest = header[2:].partition(" ")
        expected = KNOWN_SCHEMAS.get(expect_kind)
        if expected is None:
            raise SchemaError(f"unknown artifact kind {expect_kind!r}")
        if tag != expected:
            raise SchemaError(f"{path}: schema {tag!r}, expected {expected!r}")
        meta = json.loads(rest) if rest else {}
        columns = f.readline().strip().split(",")
        raw = [line.strip().split(",") for line in f if line.strip()]
    if raw and len(raw[0]) != len(columns):
        raise SchemaError(f"{path}: row width does not match header")
    data = {}
    for j, name in enumerate(columns):
        vals = []
        for row in raw:
            try:
                vals.append(float(row[j]))
            except ValueError:
                vals.append(np.nan)
        data[name] = np.asarray(vals)
    return meta, data


def read_decay_fit(path) -> dict:
    fit = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(fit, dict) or "stable" not in fit:
        raise SchemaError(f"{path}: not a decay-fit artifact")
    return fit
