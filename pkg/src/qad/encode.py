"""Dataset ingestion and amplitude encoding."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, EncodingError
from .qcore import StateVector, make_state

ROUND_TRIP_TOL = 1e-10


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n) - 1).bit_length()


def log2_int(n: int) -> int:
    return int(n).bit_length() - 1


@dataclass(frozen=True, eq=False)
class NormedVector:
    """Unit amplitude vector plus the norm it was divided by."""

    unit: np.ndarray
    scale: float

    def __post_init__(self):
        unit = np.array(self.unit, dtype=complex).reshape(-1)
        unit.setflags(write=False)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "scale", float(self.scale))
        if self.scale < 0:
            raise EncodingError(f"scale must be nonnegative, got {self.scale}")

    @classmethod
    def from_vector(cls, v) -> "NormedVector":
        """Normalize any nonzero vector (no length restriction)."""
        v = np.asarray(v, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise EncodingError("cannot encode the zero vector")
        return cls(v / norm, norm)

    def raw(self) -> np.ndarray:
        return self.scale * self.unit

    def real(self) -> np.ndarray:
        """Raw vector as a float array (imaginary parts must vanish)."""
        raw = self.raw()
        if np.max(np.abs(raw.imag), initial=0.0) > 1e-12:
            raise EncodingError("vector has non-negligible imaginary part")
        return raw.real.copy()

    def __len__(self):
        return self.unit.size


def amplitude_encode(v) -> NormedVector:
    """Encode ``v`` as the amplitudes of a ``log2(len(v))``-qubit state."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if not is_power_of_two(v.size):
        raise EncodingError(f"amplitude encoding needs a power-of-two length, got {v.size}")
    return NormedVector.from_vector(v)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Training samples, zero-padded to a power-of-two feature count.

    ``rows`` has shape ``(M, d_padded)``; ``feature_mask`` marks the genuine
    columns.  ``scales`` holds each row's norm before normalization (all ones
    when the rows were not rescaled).
    """

    rows: np.ndarray
    feature_mask: np.ndarray
    normalized: bool
    scales: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        mask = np.array(self.feature_mask, dtype=bool).reshape(-1)
        scales = np.array(self.scales, dtype=float).reshape(-1)
        if rows.ndim != 2 or rows.shape[1] != mask.size:
            raise DataFormatError(f"rows shape {rows.shape} does not match mask of length {mask.size}")
        if scales.size != rows.shape[0]:
            raise DataFormatError("one scale per row is required")
        if rows.shape[0] < 2:
            raise DataFormatError(f"need at least 2 samples, got {rows.shape[0]}")
        if np.any(rows[:, ~mask] != 0.0):
            raise DataFormatError("padded columns must be zero")
        for a in (rows, mask, scales):
            a.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "feature_mask", mask)
        object.__setattr__(self, "scales", scales)

    @classmethod
    def from_array(cls, array, normalize_rows: bool = True) -> "Dataset":
        """Build a dataset from an ``(M, d)`` array, padding ``d`` to a power of two."""
        x = np.asarray(array, dtype=float)
        if x.ndim != 2:
            raise DataFormatError(f"expected a 2-D array, got shape {x.shape}")
        m, d = x.shape
        if m < 2:
            raise DataFormatError(f"need at least 2 samples, got {m}")
        if d < 1:
            raise DataFormatError("need at least one feature")
        if not np.all(np.isfinite(x)):
            raise DataFormatError("data contains non-finite values")
        scales = np.ones(m)
        if normalize_rows:
            scales = np.linalg.norm(x, axis=1)
            zero = np.flatnonzero(scales == 0.0)
            if zero.size:
                raise DataFormatError(f"row {zero[0]} is all zeros and cannot be normalized")
            x = x / scales[:, None]
        d_padded = next_power_of_two(d)
        rows = np.zeros((m, d_padded))
        rows[:, :d] = x
        mask = np.zeros(d_padded, dtype=bool)
        mask[:d] = True
        return cls(rows, mask, normalize_rows, scales)

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return int(self.feature_mask.sum())

    @property
    def d_padded(self) -> int:
        return self.rows.shape[1]

    @property
    def genuine(self) -> np.ndarray:
        return self.rows[:, self.feature_mask]

    def has_unit_rows(self, tol: float = 1e-10) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.rows, axis=1) - 1.0) <= tol))

    def pad(self, v) -> np.ndarray:
        """Embed a genuine-length vector into the padded feature space."""
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size == self.d_padded:
            return v.copy()
        if v.size != self.n_features:
            raise DataFormatError(
                f"vector has {v.size} entries; expected {self.n_features} or {self.d_padded}"
            )
        out = np.zeros(self.d_padded)
        out[self.feature_mask] = v
        return out

    def prepare_test(self, v) -> NormedVector:
        """Apply this dataset's preprocessing to a test vector and encode it."""
        v = self.pad(v)
        if self.normalized:
            norm = np.linalg.norm(v)
            if norm == 0.0:
                raise DataFormatError("test vector is all zeros and cannot be normalized")
            v = v / norm
        return amplitude_encode(v)

    def row(self, i: int) -> NormedVector:
        if not -self.n_samples <= i < self.n_samples:
            raise DataFormatError(f"row index {i} out of range for {self.n_samples} samples")
        return amplitude_encode(self.rows[i])


def _read_text(source) -> tuple[str, str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            raw = fh.read()
        label = os.fspath(source)
    elif isinstance(source, (bytes, bytearray)):
        raw, label = bytes(source), "<bytes>"
    else:
        raw = source.read()
        label = getattr(source, "name", "<stream>")
    if isinstance(raw, str):
        return raw, label
    try:
        return raw.decode("utf-8-sig"), label
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{label}: not valid UTF-8 ({exc})") from exc


def parse_csv(source, header: bool = False) -> np.ndarray:
    """Parse numeric CSV into a float matrix, reporting line/column on failure."""
    text, label = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    rows: list[list[float]] = []
    width = None
    for lineno, record in enumerate(reader, start=1):
        if header and lineno == 1:
            continue
        if not record or all(not cell.strip() for cell in record):
            continue
        values = []
        for col, cell in enumerate(record, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise DataFormatError(
                    f"{label}:{lineno}: column {col}: non-numeric cell {cell.strip()!r}"
                ) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DataFormatError(
                f"{label}:{lineno}: ragged row with {len(values)} columns, expected {width}"
            )
        rows.append(values)
    if not rows:
        raise DataFormatError(f"{label}: no data rows")
    return np.array(rows, dtype=float)


def load_dataset(source, normalize_rows: bool = True, header: bool = False) -> Dataset:
    """Read a training set from a CSV path, bytes, or file-like object."""
    return Dataset.from_array(parse_csv(source, header=header), normalize_rows=normalize_rows)


def build_training_superposition(data: Dataset) -> StateVector:
    """``(1/sqrt(M)) sum_i |x^i>|i>`` over ``feature`` and ``index`` registers."""
    m = data.n_samples
    if not is_power_of_two(m):
        raise EncodingError(
            f"the training superposition needs M to be a power of two, got M={m}; "
            "truncate or augment the training set"
        )
    norms = np.linalg.norm(data.rows, axis=1)
    if np.any(norms == 0.0):
        raise EncodingError(f"row {int(np.flatnonzero(norms == 0.0)[0])} is zero")
    units = data.rows / norms[:, None]
    # amplitude of |j>_feature |i>_index is unit(x^i)_j / sqrt(M)
    amps = units.T / np.sqrt(m)
    layout = [("feature", log2_int(data.d_padded)), ("index", log2_int(m))]
    return make_state(amps, layout)
