"""Dataset ingestion and the d x M data-matrix abstraction.

Columns are samples, rows are features. Loaders return raw (uncentered)
matrices; `preprocess` centers each feature row and optionally divides by
the sample standard deviation (M-1 denominator).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

IDX_MAGIC_IMAGES = 0x00000803
IDX_MAGIC_VECTOR = 0x00000801

GRM1_MAGIC = b"GRM1"
GRM1_VERSION = 1


class FormatError(ValueError):
    """Input file does not match the declared container format."""


@dataclass(frozen=True)
class DataMatrix:
    """Immutable d x M matrix of feature rows by sample columns."""

    values: np.ndarray
    centered: bool = False
    standardized: bool = False
    source: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("values must be a 2-d array")
        # M = 1 is allowed so a single sample can still form a rank-1 Gram
        if v.shape[0] < 2 or v.shape[1] < 1:
            raise ValueError(f"need d >= 2 and M >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values contain non-finite entries")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def M(self) -> int:
        return self.values.shape[1]


def load_idx(path) -> DataMatrix:
    """Read an IDX (MNIST-style) file; images become feature columns in [0, 1]."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise FormatError(f"{path}: truncated IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic == IDX_MAGIC_IMAGES:
        ndim = 3
    elif magic == IDX_MAGIC_VECTOR:
        ndim = 1
    else:
        raise FormatError(f"{path}: unsupported IDX magic 0x{magic:08x}")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{path}: truncated IDX dimension header")
    dims = struct.unpack(">" + "I" * ndim, raw[4:header])
    count = int(np.prod(dims))
    payload = np.frombuffer(raw, dtype=np.uint8, offset=header)
    if payload.size != count:
        raise FormatError(
            f"{path}: payload has {payload.size} bytes, header declares {count}"
        )
    if ndim == 3:
        n, rows, cols = dims
        mat = payload.reshape(n, rows * cols).T.astype(np.float64) / 255.0
    else:
        # rank-1: a single flat signal, exposed as one sample column
        mat = payload.astype(np.float64).reshape(-1, 1) / 255.0
    return DataMatrix(mat, source=str(path))


def save_raw(x: DataMatrix, path) -> None:
    """Write the GRM1 container (column-major float64, little-endian)."""
    flags = (1 if x.centered else 0) | (2 if x.standardized else 0)
    with open(path, "wb") as fh:
        fh.write(GRM1_MAGIC)
        fh.write(struct.pack("<I", GRM1_VERSION))
        fh.write(struct.pack("<QQB", x.d, x.M, flags))
        fh.write(np.asfortranarray(x.values).tobytes(order="F"))


def load_raw(path) -> DataMatrix:
    """Read a GRM1 file written by `save_raw`; round trips are bit-exact."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != GRM1_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != GRM1_VERSION:
        raise FormatError(f"{path}: unsupported GRM1 version {version}")
    d, M, flags = struct.unpack("<QQB", raw[8:25])
    if d < 2 or M < 1:
        raise FormatError(f"{path}: invalid dimensions d={d}, M={M}")
    need = d * M * 8
    body = raw[25:]
    if len(body) != need:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {need}")
    vals = np.frombuffer(body, dtype="<f8").reshape((d, M), order="F")
    return DataMatrix(
        vals.copy(),
        centered=bool(flags & 1),
        standardized=bool(flags & 2),
        source=str(path),
    )


def load_csv(path, samples_as_columns: bool = True, header: bool = False) -> DataMatrix:
    """Read a rectangular numeric CSV into a DataMatrix."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln]
    if header:
        lines = lines[1:]
    width = None
    for ln in lines:
        cells = ln.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(f"{path}: ragged row with {len(cells)} cells, expected {width}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise FormatError(f"{path}: non-numeric cell ({exc})") from None
    mat = np.asarray(rows, dtype=np.float64)
    if not samples_as_columns:
        mat = mat.T
    return DataMatrix(mat, source=str(path))


def preprocess(x: DataMatrix, standardize: bool = False) -> DataMatrix:
    """Center each feature row; optionally rescale to unit sample std (M-1).

    Zero-variance rows are zeroed, never divided. Idempotent.
    """
    v = x.values - x.values.mean(axis=1, keepdims=True)
    if standardize:
        sd = v.std(axis=1, ddof=1, keepdims=True)
        nz = sd[:, 0] > 0
        v[nz] /= sd[nz]
    return replace(x, values=v, centered=True, standardized=standardize)
