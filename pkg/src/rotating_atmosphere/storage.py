"""Artifacts on disk: dense matrix container, JSON and CSV writers, run manifest.

Matrix container: a 64-byte little-endian header followed by the entries in
row-major order as IEEE doubles (complex entries as ``re, im`` pairs)::

    bytes 0-7    magic  b"RATMMAT1"
    bytes 8-15   N      uint64, the matrix is N x N
    bytes 16-19  dtype  uint32, 1 = real float64, 2 = complex128
    bytes 20-63  zero padding
"""
import csv
import hashlib
import json
import platform
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from .errors import ConfigError, NumericError

MAGIC = b"RATMMAT1"
HEADER_SIZE = 64
DTYPES = {1: np.dtype("<f8"), 2: np.dtype("<c16")}
_HEAD = struct.Struct("<8sQI")


def write_matrix(path, mat):
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("container holds square matrices only")
    code = 2 if np.iscomplexobj(mat) else 1
    header = _HEAD.pack(MAGIC, mat.shape[0], code).ljust(HEADER_SIZE, b"\0")
    body = np.ascontiguousarray(mat, dtype=DTYPES[code]).tobytes(order="C")
    Path(path).write_bytes(header + body)


def read_matrix(path):
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE:
        raise NumericError("truncated matrix container", path=str(path))
    magic, n, code = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise NumericError("not a matrix container", path=str(path))
    if code not in DTYPES:
        raise NumericError("unknown dtype code in container", code=code)
    dt = DTYPES[code]
    expected = HEADER_SIZE + n * n * dt.itemsize
    if len(data) != expected:
        raise NumericError("container size does not match its header", size=len(data), expected=expected)
    return np.frombuffer(data, dtype=dt, offset=HEADER_SIZE).reshape(n, n).copy()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj):
    """Deterministic JSON text (sorted keys, shortest round-trip floats)."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def read_csv_points(path, columns=("x", "y", "z")):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in columns):
            raise ConfigError(f"CSV needs columns {', '.join(columns)}", field=str(path))
        try:
            return np.array([[float(r[c]) for c in columns] for r in reader])
        except ValueError as exc:
            raise ConfigError(f"non-numeric entry in {path}", field=str(path)) from exc


def file_hash(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions():
    from . import __version__
    return {"rotating_atmosphere": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


@dataclass
class RunManifest:
    command: str
    config: dict
    tolerances: dict
    versions: dict = field(default_factory=versions)
    started: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished: str = None
    artifacts: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)  # run facts that are not configuration (timings, exit code)

    def add(self, path):
        path = Path(path)
        self.artifacts[path.name] = file_hash(path)

    def config_hash(self):
        return hashlib.sha256(dumps(self.config).encode()).hexdigest()

    def content_hash(self):
        """Hash over all emitted artifacts, independent of timestamps."""
        joined = "".join(f"{k}:{v}\n" for k, v in sorted(self.artifacts.items()))
        return hashlib.sha256(joined.encode()).hexdigest()

    def write(self, out_dir):
        self.finished = datetime.now(timezone.utc).isoformat()
        rec = {"command": self.command, "config": self.config, "config_hash": self.config_hash(),
               "tolerances": self.tolerances, "versions": self.versions, "started": self.started,
               "finished": self.finished, "artifacts": self.artifacts, "content_hash": self.content_hash(),
               "run": self.extra}
        path = Path(out_dir) / "manifest.json"
        write_json(path, rec)
        return path
