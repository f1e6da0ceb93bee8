"""Reading datasets and configs, writing reports."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from .types import Dataset, _json_default


class DataFormatError(ValueError):
    pass


def _label(tok: str, lineno: int) -> int:
    try:
        v = float(tok)
    except ValueError:
        raise DataFormatError(f"line {lineno}: non-numeric label {tok!r}") from None
    if v == 1.0:
        return 1
    if v in (-1.0, 0.0):
        return -1
    raise DataFormatError(f"line {lineno}: label {tok!r} not in {{-1, +1}} or {{0, 1}}")


def _read_csv(lines):
    rows, labels, width = [], [], None
    for lineno, line in lines:
        toks = [t.strip() for t in line.split(",")]
        if width is None:
            width = len(toks)
            if width < 2:
                raise DataFormatError(f"line {lineno}: need at least one feature and a label")
        elif len(toks) != width:
            raise DataFormatError(f"line {lineno}: {len(toks)} fields, expected {width}")
        try:
            rows.append([float(t) for t in toks[:-1]])
        except ValueError:
            raise DataFormatError(f"line {lineno}: non-numeric feature") from None
        labels.append(_label(toks[-1], lineno))
    return rows, labels


def _read_sparse(lines):
    entries, labels, dim = [], [], 0
    for lineno, line in lines:
        toks = line.split()
        labels.append(_label(toks[0], lineno))
        feats = {}
        for tok in toks[1:]:
            idx, sep, val = tok.partition(":")
            try:
                i, v = int(idx), float(val)
            except ValueError:
                raise DataFormatError(f"line {lineno}: bad entry {tok!r}") from None
            if not sep or i < 1:
                raise DataFormatError(f"line {lineno}: bad entry {tok!r} (indices are 1-based)")
            feats[i - 1] = v
            dim = max(dim, i)
        entries.append(feats)
    rows = np.zeros((len(entries), max(dim, 1)))
    for r, feats in enumerate(entries):
        for i, v in feats.items():
            rows[r, i] = v
    return rows, labels


def parse_dataset(text: str, fmt: str = "csv", name: str = "dataset") -> Dataset:
    lines = [(k, ln.strip()) for k, ln in enumerate(text.splitlines(), 1)]
    lines = [(k, ln) for k, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise DataFormatError("no examples found")
    if fmt == "csv":
        rows, labels = _read_csv(lines)
    elif fmt == "sparse":
        rows, labels = _read_sparse(lines)
    else:
        raise DataFormatError(f"unknown format {fmt!r}")
    return Dataset(np.asarray(rows, dtype=float), np.asarray(labels), name)


def load_dataset(path, fmt: str | None = None) -> Dataset:
    """CSV (label in the last column) or sparse ``label idx:val ...`` lines."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "sparse"
    return parse_dataset(path.read_text(), fmt, path.stem)


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"config line {lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def load_config(path) -> dict[str, str]:
    return parse_config(Path(path).read_text())


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default, ensure_ascii=False) + "\n"


def write_text(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")
