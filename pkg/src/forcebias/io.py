"""CSV and JSON formats.

Trials: ``trial,stimulus_n,response_n``. Traces: ``run,k,phase,force_n`` with
``phase`` either ``robot`` (force ``r_k``) or ``human`` (force ``h_k``).
Numbers are written with 17 significant digits so files re-read exactly.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .dynamics import InteractionTrace
from .fitting import ReproductionTrial

__all__ = [
    "SchemaError",
    "TRIAL_HEADER",
    "TRACE_HEADER",
    "fmt",
    "trials_to_csv",
    "trials_from_csv",
    "traces_to_csv",
    "traces_from_csv",
    "rows_to_csv",
    "write_text",
    "dump_json",
    "blob_hash",
]

TRIAL_HEADER = ("trial", "stimulus_n", "response_n")
TRACE_HEADER = ("run", "k", "phase", "force_n")


class SchemaError(ValueError):
    """Input file does not follow the expected format."""


def fmt(x: float) -> str:
    return f"{x:.17g}"


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def trials_to_csv(trials: Sequence[ReproductionTrial]) -> str:
    return rows_to_csv(TRIAL_HEADER, ((i, t.stimulus, t.response) for i, t in enumerate(trials)))


def _read_rows(text: str, header: Sequence[str]) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise SchemaError(f"empty file; expected header {','.join(header)}")
    if tuple(f.strip() for f in reader.fieldnames) != tuple(header):
        raise SchemaError(f"bad header {reader.fieldnames}; expected {','.join(header)}")
    rows = list(reader)
    if not rows:
        raise SchemaError("file has a header but no rows")
    return rows


def _number(value: str, line: int, column: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise SchemaError(f"row {line}: {column}={value!r} is not a number") from None
    if not math.isfinite(x):
        raise SchemaError(f"row {line}: {column} is not finite")
    return x


def trials_from_csv(text: str) -> list[ReproductionTrial]:
    out = []
    for i, row in enumerate(_read_rows(text, TRIAL_HEADER), start=2):
        r = _number(row["stimulus_n"], i, "stimulus_n")
        h = _number(row["response_n"], i, "response_n")
        try:
            out.append(ReproductionTrial(r, h))
        except ValueError as exc:
            raise SchemaError(f"row {i}: {exc}") from None
    return out


def traces_to_csv(traces: Sequence[InteractionTrace]) -> str:
    def rows():
        for run, trace in enumerate(traces):
            for k, r, h in trace.entries():
                yield run, k, "robot", r
                yield run, k + 1, "human", h

    return rows_to_csv(TRACE_HEADER, rows())


def traces_from_csv(text: str) -> list[InteractionTrace]:
    runs: dict[int, tuple[list, list]] = {}
    for i, row in enumerate(_read_rows(text, TRACE_HEADER), start=2):
        try:
            run, k = int(row["run"]), int(row["k"])
        except ValueError:
            raise SchemaError(f"row {i}: run and k must be integers") from None
        force = _number(row["force_n"], i, "force_n")
        robot, human = runs.setdefault(run, ([], []))
        if row["phase"] == "robot":
            if k != len(robot):
                raise SchemaError(f"row {i}: robot phase k={k} out of order")
            robot.append(force)
        elif row["phase"] == "human":
            if k != len(human) + 1:
                raise SchemaError(f"row {i}: human phase k={k} out of order")
            human.append(force)
        else:
            raise SchemaError(f"row {i}: unknown phase {row['phase']!r}")
    try:
        return [InteractionTrace(tuple(r), tuple(h)) for _, (r, h) in sorted(runs.items())]
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def blob_hash(data: bytes) -> str:
    """Content hash in the style of ``git hash-object``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
