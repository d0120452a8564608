"""CSV and text I/O shared by the pipeline stages."""

from __future__ import annotations

import io
import os
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import MissingColumn, ParseError

# kinds understood by parse_columns
STR, INT, FLOAT = "str", "int", "float"


def read_raw_csv(path) -> pd.DataFrame:
    """Read a CSV keeping every cell as text (blank cells stay ``""``)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise MissingColumn(["<header row>"], str(path)) from None


def parse_columns(raw: pd.DataFrame, kinds: dict, optional=(), source: str = "") -> pd.DataFrame:
    """Convert text columns to typed columns, collecting row-numbered failures.

    ``kinds`` maps column name to one of ``"str"``, ``"int"``, ``"float"``.
    Columns listed in ``optional`` may be absent (filled with NaN) and may hold
    blank cells; every other column must be present and non-blank.  Reported
    row numbers are 1-based file lines, the header being line 1.
    """
    missing = [c for c in kinds if c not in raw.columns and c not in optional]
    if missing:
        raise MissingColumn(missing, source)

    out = {}
    problems = []
    lines = np.arange(len(raw)) + 2
    for col, kind in kinds.items():
        if col not in raw.columns:
            out[col] = pd.Series(np.nan, index=raw.index, dtype=float)
            continue
        text = raw[col].astype(str).str.strip()
        blank = text == ""
        if kind == STR:
            bad = blank
            out[col] = text
        else:
            num = pd.to_numeric(text.where(~blank), errors="coerce")
            bad = num.isna() & ~blank
            if kind == INT:
                bad |= num.notna() & (num != np.round(num))
            if col not in optional:
                bad |= blank
            if kind == INT and not bad.any() and not blank.any():
                num = num.astype(np.int64)
            out[col] = num
        for i in np.flatnonzero(bad.to_numpy()):
            problems.append((int(lines[i]), col, raw[col].iloc[i]))
    if problems:
        problems.sort()
        r, c, _ = problems[0]
        raise ParseError(r, c, problems)
    return pd.DataFrame(out, index=raw.index)


def frame_to_csv_bytes(frame: pd.DataFrame) -> bytes:
    buf = io.StringIO()
    frame.to_csv(buf, index=False, na_rep="", lineterminator="\n")
    return buf.getvalue().encode("utf-8")


def atomic_write(path, data) -> Path:
    """Write ``data`` (bytes or str) via a temp file and rename, so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(frame: pd.DataFrame, path) -> Path:
    return atomic_write(path, frame_to_csv_bytes(frame))


def read_key_value(path) -> dict:
    """Parse a flat ``key = value`` text file.  ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, "<line>", [(lineno, "<line>", line)])
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out
