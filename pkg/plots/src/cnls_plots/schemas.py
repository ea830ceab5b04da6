"""Readers for the documented cnls CSV layouts.

These are deliberately independent of the cnls package: figures consume
files only, so they can never disagree with what a run wrote.  Leading
'# key=value' comment lines are skipped.  A header mismatch raises with the
offending or missing column named.
"""

from __future__ import annotations

import numpy as np

NORM_SERIES_COLUMNS = ["t", "value", "kind", "s", "p", "q", "r"]
LEDGER_COLUMNS = ["t", "E", "corr1", "corr2", "corr3", "corr4", "modE", "dmodE_dt", "residual"]
BANDS_COLUMNS = ["j", "weighted_l1l2"]


class SchemaError(ValueError):
    pass


def _read_rows(path, expected: list[str]) -> list[list[str]]:
    header: list[str] | None = None
    rows: list[list[str]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if header is None:
                header = parts
                missing = [c for c in expected if c not in header]
                if missing:
                    raise SchemaError(f"{path}: missing column {missing[0]!r} (header {header})")
                extra = [c for c in header if c not in expected]
                if extra:
                    raise SchemaError(f"{path}: unexpected column {extra[0]!r}")
                continue
            if len(parts) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
            rows.append(parts)
    if header is None:
        raise SchemaError(f"{path}: empty file, expected header {expected}")
    return rows


def _columns(path, expected: list[str], numeric: list[str]) -> dict[str, np.ndarray]:
    rows = _read_rows(path, expected)
    out: dict[str, np.ndarray] = {}
    for name in numeric:
        i = expected.index(name)
        try:
            out[name] = np.array([float(r[i]) for r in rows])
        except ValueError as exc:
            raise SchemaError(f"{path}: non-numeric entry in column {name!r}: {exc}") from exc
    return out


def read_norm_series(path) -> dict[str, np.ndarray]:
    return _columns(path, NORM_SERIES_COLUMNS, ["t", "value"])


def read_ledger(path) -> dict[str, np.ndarray]:
    return _columns(path, LEDGER_COLUMNS, LEDGER_COLUMNS)


def read_bands(path) -> dict[str, np.ndarray]:
    return _columns(path, BANDS_COLUMNS, BANDS_COLUMNS)
