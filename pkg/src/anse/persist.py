"""Run-directory files: binary snapshots, the diagnostics CSV and the manifest."""

from __future__ import annotations

import csv
import json
import os
import struct
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRecord
from .flow import FlowState
from .spectral import ScalarSpectrum, SpectralGrid, YBasis

MAGIC = b"ANSE"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIId")


class MissingArtifact(FileNotFoundError):
    pass


class SnapshotError(ValueError):
    pass


def encode_snapshot(s: FlowState) -> bytes:
    """Little-endian header, the Hermitian half of psi (k1 = 0..nx/2, k2 = 1..ny-1), then ubar."""
    g = s.grid
    half = np.asarray(s.psi.coeffs)[: g.nx // 2 + 1, 1 : g.ny]
    inter = np.empty(half.shape + (2,), dtype="<f8")
    inter[..., 0] = half.real
    inter[..., 1] = half.imag
    ubar = np.asarray(s.ubar, dtype="<f8")
    return _HEADER.pack(MAGIC, SNAPSHOT_VERSION, g.nx, g.ny, float(s.time)) + inter.tobytes() + ubar.tobytes()


def decode_snapshot(data: bytes, dealias_fraction="2/3") -> FlowState:
    if len(data) < _HEADER.size:
        raise SnapshotError("snapshot truncated before the header ends")
    magic, version, nx, ny, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    n_psi = (nx // 2 + 1) * (ny - 1) * 2
    expected = _HEADER.size + 8 * (n_psi + ny + 1)
    if len(data) != expected:
        raise SnapshotError(f"snapshot has {len(data)} bytes, expected {expected} for {nx}x{ny}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    inter = flat[:n_psi].reshape(nx // 2 + 1, ny - 1, 2)
    half = inter[..., 0] + 1j * inter[..., 1]
    grid = SpectralGrid(nx, ny, dealias_fraction)
    c = np.zeros(grid.shape, dtype=complex)
    c[: nx // 2 + 1, 1:ny] = half
    for k in range(1, nx // 2):
        c[nx - k] = np.conj(c[k])
    c[nx // 2] = 0.0
    psi = ScalarSpectrum(grid, YBasis.SINE, c)
    return FlowState(psi, flat[n_psi:].astype(float), float(t))


def write_snapshot(path, s: FlowState) -> None:
    _atomic_write(Path(path), encode_snapshot(s))


def read_snapshot(path, dealias_fraction="2/3") -> FlowState:
    return decode_snapshot(Path(path).read_bytes(), dealias_fraction)


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def format_value(v) -> str:
    """Shortest round-trip decimal; None becomes an empty field."""
    if v is None:
        return ""
    return repr(float(v))


class DiagnosticsWriter:
    """Streams one CSV row per record, flushing after each row."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="", encoding="utf-8")
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(CSV_COLUMNS)
        self._fh.flush()

    def write(self, rec: DiagnosticsRecord) -> None:
        self._csv.writerow([format_value(v) for v in rec.csv_values()])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_diagnostics(path) -> dict[str, np.ndarray]:
    """Columns of a diagnostics CSV as float arrays (empty fields become nan)."""
    path = Path(path)
    if not path.is_file():
        raise MissingArtifact(f"no diagnostics file at {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise MissingArtifact(f"{path} does not have the diagnostics header")
    body = rows[1:]
    return {
        name: np.array([float(r[i]) if r[i] else np.nan for r in body]) for i, name in enumerate(CSV_COLUMNS)
    }


def write_manifest(path, manifest: dict) -> None:
    _atomic_write(Path(path), (json.dumps(manifest, indent=2) + "\n").encode("utf-8"))


def read_manifest(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifact(f"no manifest at {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def snapshot_name(step: int) -> str:
    return f"snapshot_{step:08d}.bin"


def list_snapshots(run_dir) -> list[Path]:
    return sorted(Path(run_dir).glob("snapshot_*.bin"))


def write_audit_csv(path, rows: Iterable[str]) -> None:
    _atomic_write(Path(path), "".join(rows).encode("utf-8"))


def resolve_run_dir(run_dir: str, env: Optional[dict] = None) -> Path:
    """ANSE_OUTPUT_DIR, when set, replaces the parent of relative run directories."""
    env = os.environ if env is None else env
    base = env.get("ANSE_OUTPUT_DIR")
    p = Path(run_dir)
    if base and not p.is_absolute():
        return Path(base) / p
    return p
