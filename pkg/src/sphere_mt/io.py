"""Bit-stable file formats for fields, reports, and sweep tables.

FieldFile: one JSON header line followed by the node values as raw
little-endian float64 in row-major (theta outer, phi inner) order; a
pure-JSON variant embeds the values as a number array for small grids.
The header carries the grid shape, creation parameters, and a sha256 of
the payload, so corruption is detected on read.

Reports serialize dataclasses to JSON; floats go through Python's
shortest round-trip repr, which reloads bit-exactly.  Non-finite values
are mapped to null so serialized output never contains NaN.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io as _io
import json
from pathlib import Path

import numpy as np

from .errors import FormatError, NonFiniteFieldError
from .grid import ScalarField, build_grid

FORMAT_VERSION = 1


def _header(field: ScalarField, encoding: str, params: dict | None,
            payload_hash: str) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "field",
        "encoding": encoding,
        "n_theta": field.grid.n_theta,
        "n_phi": field.grid.n_phi,
        "count": field.grid.n_nodes,
        "params": params or {},
        "sha256": payload_hash,
    }


def write_field(path, field: ScalarField, params: dict | None = None,
                encoding: str = "binary") -> None:
    """Persist a field; write->read reproduces values bit-exactly."""
    path = Path(path)
    values = np.ascontiguousarray(field.values, dtype="<f8")
    payload = values.tobytes()
    digest = hashlib.sha256(payload).hexdigest()
    if encoding == "binary":
        header = _header(field, "binary", params, digest)
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            fh.write(payload)
    elif encoding == "json":
        header = _header(field, "json", params, digest)
        header["values"] = values.ravel().tolist()
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(header, fh, sort_keys=True)
            fh.write("\n")
    else:
        raise ValueError(f"unknown encoding {encoding!r}")


def read_field(path) -> ScalarField:
    """Load a FieldFile, rebuilding its grid from the header shape."""
    data = Path(path).read_bytes()
    newline = data.find(b"\n")
    if newline < 0:
        newline = len(data)
    try:
        header = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable field header: {exc}") from exc
    if not isinstance(header, dict) or header.get("kind") != "field":
        raise FormatError("not a field file")
    if header.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {header.get('format_version')}")

    try:
        n_theta = int(header["n_theta"])
        n_phi = int(header["n_phi"])
        count = int(header["count"])
        encoding = header["encoding"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed field header: {exc}") from exc
    if count != n_theta * n_phi:
        raise FormatError("header count does not match grid shape")

    if encoding == "binary":
        payload = data[newline + 1:]
        if len(payload) != 8 * count:
            raise FormatError(
                f"payload length {len(payload)} != {8 * count} bytes")
        if hashlib.sha256(payload).hexdigest() != header.get("sha256"):
            raise FormatError("payload hash mismatch (corrupted file)")
        values = np.frombuffer(payload, dtype="<f8").astype(float)
    elif encoding == "json":
        values = np.asarray(header.get("values", []), dtype=float)
        if values.size != count:
            raise FormatError(f"expected {count} values, found {values.size}")
        digest = hashlib.sha256(
            np.ascontiguousarray(values, dtype="<f8").tobytes()).hexdigest()
        if digest != header.get("sha256"):
            raise FormatError("value hash mismatch (corrupted file)")
    else:
        raise FormatError(f"unknown encoding {encoding!r}")

    grid = build_grid(n_theta, n_phi)
    try:
        return ScalarField(grid, values.reshape(n_theta, n_phi))
    except NonFiniteFieldError as exc:
        raise FormatError(f"field payload is not finite: {exc}") from exc


def to_jsonable(obj):
    """Recursively convert reports to JSON-ready structures.

    numpy scalars/arrays become Python numbers/lists, dataclasses become
    dicts tagged with their type name, ScalarField collapses to a shape
    and range summary (full payloads belong in FieldFiles), and every
    non-finite float becomes null.
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, ScalarField):
        return {
            "type": "ScalarField",
            "n_theta": obj.grid.n_theta,
            "n_phi": obj.grid.n_phi,
            "min": to_jsonable(obj.values.min()),
            "max": to_jsonable(obj.values.max()),
        }
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = to_jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True)


def write_report(path, obj) -> None:
    Path(path).write_text(report_json(obj) + "\n", encoding="utf-8")


def read_report(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"unreadable report: {exc}") from exc


def format_cell(v) -> str:
    """CSV cell: floats via round-trip repr, everything else via str."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(target, header: list[str], rows) -> str:
    """Write a sweep table; returns the CSV text.

    target may be a path or None (text only).
    """
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    text = buf.getvalue()
    if target is not None:
        Path(target).write_text(text, encoding="utf-8")
    return text
