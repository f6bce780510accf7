"""Deterministic file output: CSV tables, PGM rasters, atomic writes."""
from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path

import numpy as np

COMPONENTS = {"A11": (0, 0), "A12": (0, 1), "A21": (1, 0), "A22": (1, 1)}


def fmt(x) -> str:
    """17 significant digits; inf/nan spelled out, None as empty."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def atomic_write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def csv_text(header, rows, seed=None) -> str:
    lines = []
    if seed is not None:
        lines.append(f"# seed={seed}")
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows, seed=None) -> Path:
    return atomic_write_text(path, csv_text(header, rows, seed))


def raster_rows(raster):
    ny, nx = raster.shape
    for j in range(ny):
        for i in range(nx):
            A = raster.grad[j, i]
            yield (raster.x[i], raster.y[j], A[0, 0], A[0, 1], A[1, 0], A[1, 1])


def write_raster_csv(path, raster, seed=None) -> Path:
    return write_csv(path, ("x", "y", "A11", "A12", "A21", "A22"), raster_rows(raster), seed)


def pgm_bytes(raster, component: str = "A12") -> tuple[bytes, float, float]:
    """Binary P5 image of one gradient component, linearly scaled to 0..255.

    Row 0 of the image is the top of the domain.
    """
    if component not in COMPONENTS:
        raise ValueError(f"component must be one of {sorted(COMPONENTS)}")
    a, b = COMPONENTS[component]
    vals = raster.grad[:, :, a, b][::-1]
    lo, hi = float(vals.min()), float(vals.max())
    if hi > lo:
        img = np.rint((vals - lo) / (hi - lo) * 255.0)
    else:
        img = np.zeros_like(vals)
    ny, nx = vals.shape
    head = f"P5\n{nx} {ny}\n255\n".encode("ascii")
    return head + img.astype(np.uint8).tobytes(), lo, hi


def write_pgm(path, raster, component: str = "A12") -> tuple[Path, Path]:
    """Write the image plus a ``.meta.txt`` sidecar holding the scaling bounds."""
    data, lo, hi = pgm_bytes(raster, component)
    path = Path(path)
    atomic_write_bytes(path, data)
    meta = path.with_name(path.name + ".meta.txt")
    atomic_write_text(meta, f"component={component}\nmin={fmt(lo)}\nmax={fmt(hi)}\n"
                            f"nx={raster.shape[1]}\nny={raster.shape[0]}\n")
    return path, meta


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    nx, ny = (int(t) for t in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(ny, nx)
