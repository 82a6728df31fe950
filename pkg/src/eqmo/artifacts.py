"""Deterministic artifact emission: CSV/JSON writers and a hashed manifest.

Every float is rendered with 17 significant digits (lossless for binary64),
JSON objects are emitted with sorted keys, and files are written atomically
(temp file + rename in the target directory). Reruns with identical inputs
therefore produce byte-identical files, which the manifest records as sha256
digests.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import IoError


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise IoError(f"refusing to serialize non-finite value {x!r}")
    return f"{x:.17g}"


def _cell(x: object) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format_float(float(x))
    return str(x)


def render_json(obj: object, indent: int = 0) -> str:
    """Canonical JSON text: sorted keys, 17-significant-digit floats.

    The stdlib encoder pins float formatting to repr, which is shortest
    round-trip rather than fixed-precision; rendering by hand keeps the
    serialized-float contract explicit.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        parts = []
        for key in sorted(obj):
            parts.append(f'{inner}"{_escape(str(key))}": {render_json(obj[key], indent + 1)}')
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            return "[]"
        parts = [f"{inner}{render_json(item, indent + 1)}" for item in items]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return f'"{_escape(obj)}"'
    raise IoError(f"cannot serialize {type(obj).__name__} to JSON")


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _escape(s: str) -> str:
    out = []
    for ch in s:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return "".join(out)


def render_csv(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def atomic_write_text(path: str, text: str) -> None:
    """Write via a sibling temp file and rename, so partial files never land
    under the final name."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-artifact-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f"failed to write {path}: {exc}") from exc


@dataclass(frozen=True)
class Table:
    """Columnar result destined for csv or json rendering."""

    header: tuple[str, ...]
    rows: tuple[tuple[object, ...], ...]

    @classmethod
    def from_columns(cls, header: Sequence[str], *columns: Sequence[object]) -> "Table":
        lengths = {len(c) for c in columns}
        if len(lengths) > 1:
            raise IoError(f"ragged table columns: lengths {sorted(lengths)}")
        rows = tuple(zip(*columns)) if columns else ()
        return cls(tuple(header), tuple(tuple(row) for row in rows))

    def to_json_obj(self) -> list[dict[str, object]]:
        return [dict(zip(self.header, row)) for row in self.rows]


def emit_outputs(results: Mapping[str, object], fmt: str, out_dir: str) -> dict[str, str]:
    """Write named results into out_dir and a manifest.json of sha256 digests.

    Table values honor ``fmt`` (csv or json); plain mappings always serialize
    as JSON. Returns {relative_path: sha256}.
    """
    if fmt not in ("csv", "json"):
        raise IoError(f"format must be csv or json, got {fmt!r}")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out_dir}: {exc}") from exc
    manifest: dict[str, str] = {}
    for name in sorted(results):
        value = results[name]
        if isinstance(value, Table):
            if fmt == "csv":
                filename = f"{name}.csv"
                text = render_csv(value.header, value.rows)
            else:
                filename = f"{name}.json"
                text = render_json(value.to_json_obj()) + "\n"
        else:
            filename = f"{name}.json"
            text = render_json(value) + "\n"
        atomic_write_text(os.path.join(out_dir, filename), text)
        manifest[filename] = hashlib.sha256(text.encode("utf-8")).hexdigest()
    manifest_text = render_json({"files": manifest}) + "\n"
    atomic_write_text(os.path.join(out_dir, "manifest.json"), manifest_text)
    return manifest
