"""Verification reports: records, serialization and Monte Carlo merging.

A report file is line-delimited JSON.  The first line is a header holding
the only nondeterministic field (the wall-clock timestamp) plus the config
hash; every later line is deterministic given the configuration, so two runs
of the same configuration have byte-identical bodies.

Line schema (``"kind"`` field)::

    header   {"kind": "header", "schema": 1, "suite": ..., "config_hash": ..., "created": ...}
    summary  {"kind": "summary", "status": ..., "metrics": {...}, "settings": {...}, "provenance": {...}}
    row      {"kind": "row", ...one table row...}
    chunk    {"kind": "chunk", "cell": ..., "chunk": i, "n": ..., "s1": ..., "s2": ...}

Chunk lines carry raw Monte Carlo sums per (cell, seed chunk); they make
partial runs mergeable (:func:`merge_reports`).
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

__all__ = [
    "PASS",
    "FAIL",
    "INCONCLUSIVE",
    "EXIT_CODES",
    "EstimateReport",
    "ChunkStats",
    "MergeError",
    "config_hash",
    "atomic_write",
    "read_report",
    "merge_reports",
    "register_summarizer",
    "bundle_reports",
    "unbundle",
    "worst_status",
]

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
EXIT_CODES = {PASS: 0, FAIL: 1, INCONCLUSIVE: 3}
SCHEMA_VERSION = 1


class MergeError(ValueError):
    """Reports cannot be merged (different configurations or overlapping chunks)."""


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    """Stable SHA-256 prefix of a JSON-able configuration."""
    return hashlib.sha256(_dumps(config).encode()).hexdigest()[:16]


@dataclass
class ChunkStats:
    """Sums of a Monte Carlo estimator over one seed chunk of one cell."""

    cell: str
    chunk: int
    n: int
    s1: float
    s2: float

    def record(self) -> dict:
        return {"kind": "chunk", "cell": self.cell, "chunk": self.chunk, "n": self.n, "s1": self.s1, "s2": self.s2}


def combine_chunks(chunks) -> dict:
    """Mean and standard error per cell, summing chunks in chunk order.

    Each chunk is an independent batch of iid estimator draws, so the
    combined estimate is the pooled mean and its error bar the pooled
    standard error.
    """
    cells: dict = {}
    for c in sorted(chunks, key=lambda c: (c.cell, c.chunk)):
        acc = cells.setdefault(c.cell, [0, 0.0, 0.0])
        acc[0] += c.n
        acc[1] += c.s1
        acc[2] += c.s2
    out = {}
    for cell, (n, s1, s2) in cells.items():
        mean = s1 / n
        var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
        out[cell] = (mean, math.sqrt(var / n), n)
    return out


@dataclass
class EstimateReport:
    """Outcome of a verification run.

    Parameters
    ----------
    suite
        Name of the check that produced the report.
    status
        ``"pass"``, ``"fail"`` or ``"inconclusive"``.
    metrics
        Headline numbers (maxima, slopes, violations).
    rows
        Table rows (one dict per cell), exported to CSV.
    settings
        Tolerances, seeds, sample counts, defining-function mode.
    provenance
        Human-readable description of the property under test.
    chunks
        Raw Monte Carlo sums (optional).
    """

    suite: str
    status: str
    metrics: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    chunks: list = field(default_factory=list)
    #: nondeterministic run facts (wall time), written to the header line only
    header_extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.status not in EXIT_CODES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    @property
    def config_hash(self) -> str:
        return config_hash({"suite": self.suite, "settings": self.settings})

    # -- serialization ---------------------------------------------------------
    def body_lines(self) -> list:
        lines = [
            _dumps({"kind": "summary", "suite": self.suite, "status": self.status, "metrics": self.metrics,
                    "settings": self.settings, "provenance": self.provenance})
        ]
        lines += [_dumps({"kind": "row", **row}) for row in self.rows]
        lines += [_dumps(c.record()) for c in sorted(self.chunks, key=lambda c: (c.cell, c.chunk))]
        return lines

    def header_line(self, timestamp: str | None = None) -> str:
        ts = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
        return _dumps({"kind": "header", "schema": SCHEMA_VERSION, "suite": self.suite,
                       "config_hash": self.config_hash, "created": ts, **self.header_extra})

    def to_jsonl(self, timestamp: str | None = None) -> str:
        return "\n".join([self.header_line(timestamp)] + self.body_lines()) + "\n"

    def write(self, path, timestamp: str | None = None) -> None:
        atomic_write(path, self.to_jsonl(timestamp))

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.rows:
            cols = sorted({k for r in self.rows for k in r})
            writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            writer.writeheader()
            for r in self.rows:
                writer.writerow({k: _jsonable(v) for k, v in r.items()})
        return buf.getvalue()

    def write_csv(self, path) -> None:
        atomic_write(path, self.to_csv())

    def summary_line(self) -> str:
        head = ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.metrics.items()) if not isinstance(v, (dict, list)))
        return f"[{self.status.upper():>12}] {self.suite}: {head}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_report(path) -> tuple:
    """Return ``(header, EstimateReport)`` from a report file."""
    with open(path) as fh:
        recs = [json.loads(line) for line in fh if line.strip()]
    if not recs or recs[0].get("kind") != "header":
        raise ValueError(f"{path} is not a report file")
    header = recs[0]
    summary = next(r for r in recs if r["kind"] == "summary")
    rows = [{k: v for k, v in r.items() if k != "kind"} for r in recs if r["kind"] == "row"]
    chunks = [ChunkStats(r["cell"], r["chunk"], r["n"], r["s1"], r["s2"]) for r in recs if r["kind"] == "chunk"]
    rep = EstimateReport(summary["suite"], summary["status"], summary["metrics"], rows,
                         summary["settings"], summary["provenance"], chunks)
    return header, rep


#: suite name -> function(settings, chunks, rows) -> EstimateReport
_SUMMARIZERS: dict = {}


def register_summarizer(suite: str):
    """Register the function that rebuilds a ``suite`` report from pooled chunks.

    The function receives the merged settings, the pooled chunk list and the
    deterministic (non Monte Carlo) rows of the first input report.
    """

    def deco(fn):
        _SUMMARIZERS[suite] = fn
        return fn

    return deco


def _strip_chunks(obj):
    if isinstance(obj, dict):
        return {k: _strip_chunks(v) for k, v in obj.items() if k != "chunks"}
    if isinstance(obj, list):
        return [_strip_chunks(v) for v in obj]
    return obj


def _chunk_range(chunks):
    ids = sorted({c.chunk for c in chunks})
    if not ids:
        return []
    return [ids[0], ids[-1] + 1] if ids == list(range(ids[0], ids[-1] + 1)) else ids


def worst_status(statuses) -> str:
    """``fail`` beats ``inconclusive`` beats ``pass``."""
    statuses = list(statuses)
    if FAIL in statuses:
        return FAIL
    if INCONCLUSIVE in statuses:
        return INCONCLUSIVE
    return PASS


def bundle_reports(suite: str, parts: dict, context: dict | None = None) -> EstimateReport:
    """Combine named sub-reports into one suite report.

    The status is the worst part status.  Rows gain a ``check`` column,
    chunk cells are prefixed with ``"<part>/"`` and each part's suite name,
    settings and provenance are kept so a bundle can be merged part by part.
    """
    metrics, rows, chunks, meta = {}, [], [], {}
    for name, rep in parts.items():
        if "/" in name:
            raise ValueError("part names may not contain '/'")
        metrics[name] = {"status": rep.status, **rep.metrics}
        rows += [{"check": name, **r} for r in rep.rows]
        chunks += [ChunkStats(f"{name}/{c.cell}", c.chunk, c.n, c.s1, c.s2) for c in rep.chunks]
        meta[name] = {"suite": rep.suite, "settings": rep.settings, "provenance": rep.provenance}
    settings = {"bundle": True, "parts": meta, "context": context or {}}
    status = worst_status(r.status for r in parts.values())
    return EstimateReport(suite, status, metrics=metrics, rows=rows, settings=settings,
                          provenance={"checks": sorted(parts)}, chunks=chunks)


def unbundle(report: EstimateReport) -> dict:
    """Inverse of :func:`bundle_reports` (sub-reports keyed by part name)."""
    if not report.settings.get("bundle"):
        raise ValueError(f"report {report.suite!r} is not a bundle")
    out = {}
    for name, meta in report.settings["parts"].items():
        m = dict(report.metrics[name])
        status = m.pop("status")
        rows = [{k: v for k, v in r.items() if k != "check"} for r in report.rows if r.get("check") == name]
        pre = name + "/"
        chunks = [ChunkStats(c.cell[len(pre):], c.chunk, c.n, c.s1, c.s2)
                  for c in report.chunks if c.cell.startswith(pre)]
        out[name] = EstimateReport(meta["suite"], status, m, rows, meta["settings"], meta["provenance"], chunks)
    return out


def _pool(reports) -> list:
    seen = set()
    chunks = []
    for r in reports:
        for c in r.chunks:
            key = (c.cell, c.chunk)
            if key in seen:
                raise MergeError(f"chunk {c.chunk} of cell {c.cell} appears in more than one report")
            seen.add(key)
            chunks.append(c)
    return chunks


def merge_reports(reports) -> EstimateReport:
    """Merge partial Monte Carlo reports of one configuration.

    Reports must share suite and settings except for chunk ranges; chunk
    ids must be disjoint.  Estimates and error bars are recomputed from the
    pooled sums by the suite's registered summarizer.  Bundles are merged
    part by part; parts without Monte Carlo chunks are deterministic and
    taken from the first report.
    """
    reports = list(reports)
    if not reports:
        raise MergeError("nothing to merge")

    def base(r):
        return config_hash({"suite": r.suite, "settings": _strip_chunks(r.settings)})

    h0 = base(reports[0])
    for r in reports[1:]:
        if base(r) != h0:
            raise MergeError("reports come from different configurations (config hash mismatch)")
    first = reports[0]
    if first.settings.get("bundle"):
        split = [unbundle(r) for r in reports]
        parts = {}
        for name, rep in split[0].items():
            if rep.chunks:
                parts[name] = merge_reports([s[name] for s in split])
            else:
                parts[name] = rep
        return bundle_reports(first.suite, parts, first.settings.get("context"))
    chunks = _pool(reports)
    fn = _SUMMARIZERS.get(first.suite)
    if fn is None or not chunks:
        raise MergeError(f"suite {first.suite!r} has no Monte Carlo merge rule")
    settings = dict(first.settings)
    settings["chunks"] = _chunk_range(chunks)
    return fn(settings, chunks, first.rows)
