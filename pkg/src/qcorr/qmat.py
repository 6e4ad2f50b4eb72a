"""QMAT v1 matrix text format and atomic file writes.

Layout::

    QMAT 1
    <rows> <cols>
    DIMS <d1> <d2>        (optional, bipartite density matrices only)
    <re> <im>             (rows*cols lines, row-major)

Numbers are written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = "QMAT 1"


def format_real(x: float) -> str:
    return f"{float(x):.16e}"


def dumps_qmat(m, dims: tuple[int, int] | None = None) -> str:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or min(m.shape) < 1:
        raise FormatError(f"QMAT holds nonempty 2-d matrices, got shape {m.shape}")
    lines = [MAGIC, f"{m.shape[0]} {m.shape[1]}"]
    if dims is not None:
        d1, d2 = dims
        if d1 * d2 != m.shape[0]:
            raise FormatError(f"DIMS {d1}x{d2} inconsistent with {m.shape[0]} rows")
        lines.append(f"DIMS {d1} {d2}")
    lines.extend(f"{format_real(z.real)} {format_real(z.imag)}" for z in m.ravel())
    return "\n".join(lines) + "\n"


def loads_qmat(text: str) -> tuple[np.ndarray, tuple[int, int] | None]:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != MAGIC:
        raise FormatError("missing 'QMAT 1' header")
    try:
        rows, cols = (int(t) for t in lines[1].split())
    except (IndexError, ValueError) as exc:
        raise FormatError("second line must be '<rows> <cols>'") from exc
    if rows < 1 or cols < 1:
        raise FormatError(f"bad shape {rows}x{cols}")
    body = lines[2:]
    dims = None
    if body and body[0].startswith("DIMS"):
        parts = body[0].split()
        try:
            dims = (int(parts[1]), int(parts[2]))
        except (IndexError, ValueError) as exc:
            raise FormatError("DIMS line must be 'DIMS <d1> <d2>'") from exc
        if len(parts) != 3 or dims[0] < 1 or dims[1] < 1 or dims[0] * dims[1] != rows:
            raise FormatError(f"DIMS {parts[1:]} inconsistent with {rows} rows")
        body = body[1:]
    if len(body) != rows * cols:
        raise FormatError(f"expected {rows * cols} entries, found {len(body)}")
    out = np.empty(rows * cols, dtype=complex)
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 2:
            raise FormatError(f"entry line {i + 1}: expected '<re> <im>', got {ln!r}")
        try:
            out[i] = complex(float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise FormatError(f"entry line {i + 1}: {exc}") from exc
    return out.reshape(rows, cols), dims


def atomic_write_text(path, text: str) -> None:
    """Write-then-rename so a failed run never leaves a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_qmat(path, m, dims: tuple[int, int] | None = None) -> None:
    atomic_write_text(path, dumps_qmat(m, dims))


def read_qmat(path) -> tuple[np.ndarray, tuple[int, int] | None]:
    return loads_qmat(Path(path).read_text())
