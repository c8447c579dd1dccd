"""Files: SSKM binary matrices, CSV exports and run manifests.

SSKM layout (little endian)::

    offset  size  field
    0       4     magic b"SSKM"
    4       4     u32 format version (1)
    8       8     u64 rows
    16      8     u64 cols
    24      8*r*c row-major IEEE-754 float64 entries

All writes go to a temporary file in the target directory and are renamed
into place.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
import struct
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from . import __version__
from .conclab.stats import ConcentrationReport
from .errors import FormatError, RejectedInputError
from .subspace import Subspace

PathLike = Union[str, os.PathLike]

MAGIC = b"SSKM"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
REPORT_COLUMNS = ("lemma", "n", "trials", "failures", "p_hat", "wilson_lo", "wilson_hi")


def atomic_write(path: PathLike, data: bytes) -> Path:
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


def matrix_bytes(a: np.ndarray) -> bytes:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise RejectedInputError("only 2-D matrices can be stored")
    rows, cols = a.shape
    return _HEADER.pack(MAGIC, VERSION, rows, cols) + np.ascontiguousarray(a, dtype="<f8").tobytes()


def parse_matrix(data: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(data) < _HEADER.size:
        raise FormatError(f"{source}: too short for an SSKM header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{source}: unsupported SSKM version {version}")
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise FormatError(f"{source}: expected {expected} bytes for {rows}x{cols}, got {len(data)}")
    a = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    return a.astype(np.float64)


def save_matrix(a: np.ndarray, path: PathLike) -> Path:
    return atomic_write(path, matrix_bytes(a))


def load_matrix(path: PathLike) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror or exc}") from exc
    return parse_matrix(data, str(path))


def save_subspace(x: Subspace, path: PathLike) -> Path:
    return save_matrix(x.basis, path)


def load_subspace(path: PathLike) -> Subspace:
    """Read a basis and check it is orthonormal."""
    a = load_matrix(path)
    try:
        return Subspace.from_basis(a)
    except RejectedInputError as exc:
        raise FormatError(f"{path}: not a valid subspace basis ({exc})") from exc


def matrix_csv(a: np.ndarray) -> str:
    """Plain-text export; ``repr`` floats round-trip exactly."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(a, dtype=np.float64):
        w.writerow(repr(float(x)) for x in row)
    return buf.getvalue()


def read_matrix_csv(path: PathLike) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: not a rectangular matrix")
    return np.array(rows, dtype=np.float64)


def _num(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def report_csv(report: ConcentrationReport) -> str:
    """Report as CSV text; the decay fit (if any) trails as a ``#fit`` comment."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    lemma = report.config.lemma_id
    for c in report.cells:
        w.writerow([lemma, c.n, c.trials, c.failures, _num(c.p_hat), _num(c.wilson_lo), _num(c.wilson_hi)])
    for c in report.cells:
        if c.degenerate or c.excluded:
            buf.write(f"#skipped n={c.n} degenerate={c.degenerate} excluded={c.excluded}\n")
    if report.fit is not None:
        f = report.fit
        buf.write(f"#fit slope={_num(f.slope)} intercept={_num(f.intercept)} r2={_num(f.r2)}\n")
    return buf.getvalue()


def parse_report_csv(text: str) -> tuple[list[dict], Optional[dict]]:
    """Rows (as dicts) and the fit line (or ``None``) of a report CSV."""
    rows = []
    fit = None
    lines = text.splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    for ln in lines:
        if ln.startswith("#fit "):
            fit = {k: float(v) for k, v in (kv.split("=", 1) for kv in ln[5:].split())}
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
        raise FormatError(f"unexpected report columns {reader.fieldnames}")
    for r in reader:
        rows.append(r)
    return rows, fit


def sha256_file(path: PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Provenance of one CLI invocation and the files it wrote."""

    command: str
    config: dict
    master_seed: Optional[int]
    started: str
    finished: str = ""
    outputs: list = field(default_factory=list)
    tool_version: str = __version__

    def add(self, path: PathLike) -> None:
        p = Path(path)
        self.outputs.append({"path": str(p), "sha256": sha256_file(p), "bytes": p.stat().st_size})

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def write(self, path: PathLike) -> Path:
        self.finished = now()
        return atomic_write(path, self.to_json().encode())

    @classmethod
    def read(cls, path: PathLike) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text())
            return cls(**data)
        except (OSError, ValueError, TypeError) as exc:
            raise FormatError(f"{path}: not a run manifest ({exc})") from exc


def verify_manifest(manifest: RunManifest) -> list[str]:
    """Paths whose current contents no longer match the recorded hash."""
    bad = []
    for out in manifest.outputs:
        p = Path(out["path"])
        if not p.exists() or sha256_file(p) != out["sha256"]:
            bad.append(str(p))
    return bad


def write_text(path: PathLike, text: str) -> Path:
    return atomic_write(path, text.encode())


def write_json(path: PathLike, obj) -> Path:
    return write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path: PathLike):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
