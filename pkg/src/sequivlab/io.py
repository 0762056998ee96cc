"""File formats: matrix dumps, CSV tables and atomic writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

MATRIX_COLUMNS = ("row", "col", "re", "im")


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload):
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    atomic_write_text(path, buf.getvalue())


def write_trajectory_csv(path, trajectory):
    write_csv(path, ("t", "x", "v"), trajectory.rows().tolist())


def write_matrix_csv(path, matrix, dx, mode, **extra):
    """Row-major (row, col, re, im) dump with a ``#`` header carrying N, dx and mode."""
    M = np.asarray(matrix)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("matrix dumps need a square matrix")
    head = {"N": n, "dx": repr(float(dx)), "mode": mode}
    head.update({k: v for k, v in extra.items()})
    lines = [f"# {k}={v}" for k, v in head.items()]
    lines.append(",".join(MATRIX_COLUMNS))
    rows, cols = np.divmod(np.arange(n * n), n)
    flat = M.reshape(-1)
    body = "\n".join(f"{r},{c},{re!r},{im!r}" for r, c, re, im in
                     zip(rows.tolist(), cols.tolist(), flat.real.tolist(), flat.imag.tolist()))
    atomic_write_text(path, "\n".join(lines) + "\n" + body + "\n")


def read_matrix_csv(path):
    """Inverse of ``write_matrix_csv``; returns (matrix, header dict)."""
    header = {}
    data_lines = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key.strip()] = value.strip()
            elif line.strip():
                data_lines.append(line)
    if not data_lines or data_lines[0].strip() != ",".join(MATRIX_COLUMNS):
        raise ValueError(f"{path}: missing column header {','.join(MATRIX_COLUMNS)}")
    n = int(header["N"])
    raw = np.loadtxt(data_lines[1:], delimiter=",", ndmin=2)
    if raw.shape[0] != n * n:
        raise ValueError(f"{path}: expected {n * n} entries, found {raw.shape[0]}")
    M = np.zeros((n, n), dtype=complex)
    M[raw[:, 0].astype(int), raw[:, 1].astype(int)] = raw[:, 2] + 1j * raw[:, 3]
    header["N"] = n
    header["dx"] = float(header["dx"])
    return M, header
