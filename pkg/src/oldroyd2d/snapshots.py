"""Binary snapshot persistence with a bit-exact round trip.

Layout (all integers little-endian):

    bytes 0..3    magic "OLDB"
    bytes 4..7    format version, u32
    bytes 8..11   collocation points per axis N, u32
    bytes 12..15  mode cutoff K, u32
    bytes 16..23  simulation time t, f64
    velocity block:  component i in (0, 1); for each, the retained square of
                     modes k1 = -K..K (outer), k2 = -K..K (inner), row-major;
                     each coefficient as f64 (re, im) interleaved
    stress block:    components (0,0), (0,1), (1,0), (1,1) in index order,
                     same mode ordering and encoding
    trailer:         CRC32 of every preceding byte, u32

Total size: 24 + 6*(2K+1)^2*16 + 4 bytes.  Reading verifies magic, version,
length, and CRC and reconstructs the state exactly (f64 coefficients round-trip
bit-identically).
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .galerkin import State
from .spectral import GridSpec, SpectralTensorField, SpectralVectorField

__all__ = ["SnapshotError", "write_snapshot", "read_snapshot", "snapshot_size", "MAGIC", "VERSION"]

MAGIC = b"OLDB"
VERSION = 1
_HEADER = struct.Struct("<4sIIId")


class SnapshotError(Exception):
    """Malformed snapshot file (magic, version, size, or CRC mismatch)."""


def snapshot_size(grid: GridSpec) -> int:
    """Exact file size in bytes for a snapshot on this grid."""
    modes = (2 * grid.cutoff + 1) ** 2
    return _HEADER.size + 6 * modes * 16 + 4


def _square_indices(grid: GridSpec) -> np.ndarray:
    ks = np.arange(-grid.cutoff, grid.cutoff + 1)
    return ks % grid.modes_per_axis


def _encode_block(coeffs: np.ndarray, idx: np.ndarray) -> bytes:
    sub = coeffs[..., idx[:, None], idx[None, :]]
    out = np.empty(sub.shape + (2,), dtype="<f8")
    out[..., 0] = sub.real
    out[..., 1] = sub.imag
    return out.tobytes()


def _decode_block(data: bytes, idx: np.ndarray, comp_shape: tuple, n: int) -> np.ndarray:
    side = idx.size
    raw = np.frombuffer(data, dtype="<f8").reshape(comp_shape + (side, side, 2))
    sub = raw[..., 0] + 1j * raw[..., 1]
    full = np.zeros(comp_shape + (n, n), dtype=np.complex128)
    full[..., idx[:, None], idx[None, :]] = sub
    return full


def write_snapshot(path, state: State) -> None:
    """Write the state; the byte stream is a pure function of the state."""
    grid = state.grid
    idx = _square_indices(grid)
    payload = _HEADER.pack(MAGIC, VERSION, grid.modes_per_axis, grid.cutoff, state.t)
    payload += _encode_block(state.v.coeffs, idx)
    payload += _encode_block(state.tau.coeffs, idx)
    payload += struct.pack("<I", zlib.crc32(payload))
    with open(path, "wb") as fh:
        fh.write(payload)


def read_snapshot(path) -> State:
    """Read and verify a snapshot; bit-exact inverse of :func:`write_snapshot`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size + 4:
        raise SnapshotError("truncated snapshot: missing header")
    magic, version, n, cutoff, t = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    try:
        grid = GridSpec(int(n))
    except ValueError as exc:
        raise SnapshotError(f"invalid grid in snapshot: {exc}")
    if cutoff != grid.cutoff:
        raise SnapshotError(f"cutoff {cutoff} does not match grid cutoff {grid.cutoff}")
    expected = snapshot_size(grid)
    if len(data) != expected:
        raise SnapshotError(f"snapshot has {len(data)} bytes, expected {expected}")
    stored_crc = struct.unpack_from("<I", data, expected - 4)[0]
    actual_crc = zlib.crc32(data[: expected - 4])
    if stored_crc != actual_crc:
        raise SnapshotError(
            f"CRC mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}"
        )
    idx = _square_indices(grid)
    modes = (2 * grid.cutoff + 1) ** 2
    v_bytes = 2 * modes * 16
    offset = _HEADER.size
    v_full = _decode_block(data[offset : offset + v_bytes], idx, (2,), n)
    offset += v_bytes
    tau_full = _decode_block(data[offset : offset + 2 * v_bytes], idx, (2, 2), n)
    return State(
        SpectralVectorField(v_full, grid),
        SpectralTensorField(tau_full, grid),
        t,
    )
