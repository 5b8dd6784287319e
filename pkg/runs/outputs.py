# runs/outputs.py
"""
Result files.

curve.csv holds one row per continuation point. Each dumped field is a pair
field_<lambda>.f64 (little-endian float64, row-major over the grid) and
field_<lambda>.meta (JSON); when several paths reach the same lambda the
stem becomes field_<path>_<lambda>. Every file is written to a temporary name in the
target directory and renamed into place.
"""

import csv
import io
import json
import logging
import os
import tempfile
from collections import Counter
from pathlib import Path

import numpy as np

from continuation.sweeps import CurveResult
from physics.nonlinearities import Model
from spectral.grids import Field, Grid, power

logger = logging.getLogger(__name__)

CURVE_FILENAME = "curve.csv"
CURVE_HEADER = ["lambda", "power", "newton_iters", "mean_gmres_iters", "converged"]
FIELD_DTYPE = "<f8"


class OutputError(OSError):
    """A result file could not be written or read; the message names the path."""


def _number(value: float) -> str:
    return format(float(value), ".17g")


def _atomic_write(path: Path, payload: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        handle, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(handle, "wb") as stream:
                stream.write(payload)
            os.replace(temporary, path)
        except BaseException:
            if os.path.exists(temporary):
                os.unlink(temporary)
            raise
    except OSError as exc:
        raise OutputError(f"{path}: {exc.strerror or exc}") from exc


def field_stem(lambda_: float, label: str | None = None) -> str:
    """field_<lambda> (or field_<label>_<lambda>) with the shortest round-trip repr of lambda."""
    if label:
        return f"field_{label}_{float(lambda_)!r}"
    return f"field_{float(lambda_)!r}"


def curve_csv(result: CurveResult) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for point in result.points:
        writer.writerow(
            [
                _number(point.lambda_),
                _number(point.power),
                point.newton_iters,
                _number(point.mean_gmres_iters),
                "true" if point.converged else "false",
            ]
        )
    return buffer.getvalue()


def field_metadata(field: Field, lambda_: float, model: Model | None = None, **extra) -> dict:
    grid = field.grid
    meta = {
        "d": grid.d,
        "n": grid.n,
        "box_len": grid.box_len,
        "origin_offset": grid.origin_offset,
        "lambda": float(lambda_),
        "power": power(field),
        "dtype": FIELD_DTYPE,
        "order": "C",
    }
    if model is not None:
        meta["model"] = model.describe()
    meta.update(extra)
    return meta


def write_field(
    field: Field, lambda_: float, out_dir, model: Model | None = None, label: str | None = None, **extra
) -> Path:
    """Writes the .f64/.meta pair and returns the path of the .f64 file."""
    out_dir = Path(out_dir)
    stem = field_stem(lambda_, label)
    data_path = out_dir / f"{stem}.f64"
    meta = field_metadata(field, lambda_, model, **extra)
    _atomic_write(data_path, np.ascontiguousarray(field.values, dtype=FIELD_DTYPE).tobytes())
    _atomic_write(out_dir / f"{stem}.meta", (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode())
    return data_path


def emit_outputs(result: CurveResult, out_dir, model: Model | None = None) -> list[Path]:
    """
    curve.csv plus every field kept in ``result``; returns the paths written.

    A lambda reached by more than one path gets the path label in its file names.
    """
    out_dir = Path(out_dir)
    curve_path = out_dir / CURVE_FILENAME
    _atomic_write(curve_path, curve_csv(result).encode())
    written = [curve_path]
    shared = Counter(lambda_ for _, lambda_ in result.fields)
    for label, lambda_ in sorted(result.fields, key=lambda key: (key[1], key[0])):
        stem_label = label if shared[lambda_] > 1 else None
        written.append(write_field(result.fields[label, lambda_], lambda_, out_dir, model, label=stem_label))
    logger.info("Wrote %d point(s) and %d field(s) to %s", len(result.points), len(result.fields), out_dir)
    return written


def read_field(path) -> tuple[Field, dict]:
    """
    Reads a dump back from either file of the pair (or their common stem).

    Raises OutputError for unreadable files and ValueError for inconsistent ones.
    """
    path = Path(path)
    stem = path.with_name(path.stem) if path.suffix in (".f64", ".meta") else path
    data_path = stem.parent / f"{stem.name}.f64"
    meta_path = stem.parent / f"{stem.name}.meta"
    try:
        meta = json.loads(meta_path.read_text())
        raw = data_path.read_bytes()
    except OSError as exc:
        raise OutputError(f"{exc.filename or path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{meta_path}: malformed metadata ({exc}).") from exc
    try:
        grid = Grid(
            d=int(meta["d"]),
            n=int(meta["n"]),
            box_len=float(meta["box_len"]),
            origin_offset=float(meta.get("origin_offset", -0.5 * float(meta["box_len"]))),
        )
    except KeyError as exc:
        raise ValueError(f"{meta_path}: missing key {exc}.") from exc
    values = np.frombuffer(raw, dtype=meta.get("dtype", FIELD_DTYPE))
    if values.size != grid.size:
        raise ValueError(f"{data_path}: {values.size} values for a grid of {grid.size} points.")
    return Field(grid, values.astype(np.float64)), meta
