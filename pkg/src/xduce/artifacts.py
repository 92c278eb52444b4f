"""Reading input tables and writing manifest-stamped tables and fit reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import __version__


@dataclass
class RunManifest:
    command: str
    config: str | None = None
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    seed: int | None = None
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def header_lines(self) -> list[str]:
        out = []
        for k, v in asdict(self).items():
            if isinstance(v, list):
                v = ",".join(v)
            out.append(f"# {k}: {'' if v is None else v}")
        return out


def read_table(path, required, optional=()) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Numeric columns from a CSV with optional ``# key: value`` header lines.

    Missing optional columns are absent from the result; an empty cell in
    an optional column drops that column.
    """
    header: dict[str, str] = {}
    body = []
    with open(path, newline="") as fh:
        for ln in fh:
            if ln.startswith("#"):
                k, _, v = ln[1:].partition(":")
                header[k.strip()] = v.strip()
            elif ln.strip():
                body.append(ln)
    rows = list(csv.DictReader(body))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    cols = rows[0].keys()
    missing = [c for c in required if c not in cols]
    if missing:
        raise ValueError(f"{path}: missing column(s) {', '.join(missing)}")
    out = {}
    for c in list(required) + [c for c in optional if c in cols]:
        vals = [r[c] for r in rows]
        if c in optional and any(v in ("", None) for v in vals):
            continue
        try:
            out[c] = np.array([float(v) for v in vals])
        except ValueError as exc:
            raise ValueError(f"{path}: column {c}: {exc}") from None
    return out, header


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_safe(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_json_safe(x) for x in v]
    return v


def format_table(rows: list[dict], manifest: RunManifest, fmt: str = "csv", extra_header: dict | None = None) -> str:
    """Rows as CSV (manifest in ``#`` lines) or JSON lines (manifest as the first object)."""
    buf = io.StringIO()
    if fmt == "csv":
        for ln in manifest.header_lines():
            buf.write(ln + "\n")
        for k, v in (extra_header or {}).items():
            buf.write(f"# {k}: {v}\n")
        if rows:
            w = csv.writer(buf, lineterminator="\n")
            keys = list(rows[0])
            w.writerow(keys)
            for r in rows:
                w.writerow([_fmt(r[k]) for k in keys])
    elif fmt == "json-lines":
        buf.write(json.dumps({"manifest": asdict(manifest), **(extra_header or {})}) + "\n")
        for r in rows:
            buf.write(json.dumps(_json_safe(r)) + "\n")
    else:
        raise ValueError("format must be 'csv' or 'json-lines'")
    return buf.getvalue()


def format_report(reports: dict, manifest: RunManifest, fmt: str = "csv") -> str:
    """Fit reports: a YAML document, or JSON lines when ``fmt`` is ``json-lines``."""
    if fmt == "json-lines":
        lines = [json.dumps({"manifest": asdict(manifest)})]
        lines += [json.dumps({"name": k, **_json_safe(v)}) for k, v in reports.items()]
        return "\n".join(lines) + "\n"
    doc = {"manifest": asdict(manifest), **_json_safe(reports)}
    return yaml.safe_dump(doc, sort_keys=False)


def emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        print(text, end="")
    else:
        Path(out).write_text(text)
