"""CSV persistence for event logs and traces.

Files carry their metadata in '# key=value' header comments so a log or trace
round-trips without a sidecar. Writes go through a temp file and os.replace
so a crashed run never leaves a truncated CSV behind.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .markov import EventLog
from .trace import FluorescenceTrace


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to path atomically (temp file + rename in the same dir)."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_header(lines: list[str]) -> dict[str, str]:
    meta: dict[str, str] = {}
    for line in lines:
        body = line.lstrip("#").strip()
        if "=" in body:
            key, _, val = body.partition("=")
            meta[key.strip()] = val.strip()
    return meta


def _split_file(path: str | Path) -> tuple[dict[str, str], list[str]]:
    """Return (header metadata, data lines incl. the column header row)."""
    header: list[str] = []
    data: list[str] = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                header.append(line)
            elif line.strip():
                data.append(line)
    return _parse_header(header), data


def _require(meta: dict[str, str], keys: tuple[str, ...], path) -> None:
    missing = [k for k in keys if k not in meta]
    if missing:
        raise ValueError(f"{path}: missing header field(s) {missing}")


def write_event_csv(log: EventLog, path: str | Path) -> None:
    buf = io.StringIO()
    buf.write(f"# n0={log.n0}\n# duration_s={log.duration!r}\n# seed={log.seed}\n")
    writer = csv.writer(buf)
    writer.writerow(["time_s", "kind", "n_before", "n_after"])
    for t, k, nb, na in zip(log.times, log.kinds, log.n_before, log.n_after):
        writer.writerow([repr(float(t)), int(k), int(nb), int(na)])
    atomic_write_text(path, buf.getvalue())


def read_event_csv(path: str | Path) -> EventLog:
    meta, data = _split_file(path)
    _require(meta, ("n0", "duration_s", "seed"), path)
    rows = list(csv.reader(data))
    if not rows or rows[0][:2] != ["time_s", "kind"]:
        raise ValueError(f"{path}: missing event column header")
    body = rows[1:]
    return EventLog(
        times=np.array([float(r[0]) for r in body], dtype=np.float64),
        kinds=np.array([int(r[1]) for r in body], dtype=np.int8),
        n_before=np.array([int(r[2]) for r in body], dtype=np.int64),
        n0=int(meta["n0"]), duration=float(meta["duration_s"]),
        seed=int(meta["seed"]))


def write_trace_csv(trace: FluorescenceTrace, path: str | Path) -> None:
    buf = io.StringIO()
    buf.write(f"# bin_width_s={trace.bin_width!r}\n"
              f"# per_atom_rate_hz={trace.per_atom_rate!r}\n"
              f"# bg_rate_hz={trace.bg_rate!r}\n"
              f"# seed={trace.seed}\n")
    writer = csv.writer(buf)
    writer.writerow(["t_start_s", "counts"])
    for i, c in enumerate(trace.counts):
        writer.writerow([repr(i * trace.bin_width), int(c)])
    atomic_write_text(path, buf.getvalue())


def read_trace_csv(path: str | Path) -> FluorescenceTrace:
    meta, data = _split_file(path)
    _require(meta, ("bin_width_s", "per_atom_rate_hz", "bg_rate_hz", "seed"), path)
    rows = list(csv.reader(data))
    if not rows or rows[0] != ["t_start_s", "counts"]:
        raise ValueError(f"{path}: missing trace column header")
    return FluorescenceTrace(
        bin_width=float(meta["bin_width_s"]),
        counts=np.array([int(r[1]) for r in rows[1:]], dtype=np.int64),
        per_atom_rate=float(meta["per_atom_rate_hz"]),
        bg_rate=float(meta["bg_rate_hz"]), seed=int(meta["seed"]))


def write_table_csv(path: str | Path, columns: dict[str, np.ndarray],
                    header: dict[str, object] | None = None) -> None:
    """Generic column-table writer used by the CLI outputs."""
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    if arrays and any(len(a) != len(arrays[0]) for a in arrays):
        raise ValueError("columns differ in length")
    buf = io.StringIO()
    for key, val in (header or {}).items():
        buf.write(f"# {key}={val!r}\n" if isinstance(val, float) else f"# {key}={val}\n")
    writer = csv.writer(buf)
    writer.writerow(names)
    rows = zip(*arrays) if arrays else []
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating))
                         else v for v in row])
    atomic_write_text(path, buf.getvalue())
