"""Adapter catalog: low-rank pairs indexed by (adapter, modality).

A catalog holds one rank-r pair per combination of adapter and modality,
stored densely so a combined index ``a * num_modalities + m`` addresses
storage directly. Catalogs round-trip through a small binary container
(magic ``PTRT``) with a fixed little-endian layout.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ShapeError
from .linalg import DTYPE

MAGIC = b"PTRT"
VERSION = 1
_HEADER = struct.Struct("<4s5I")  # magic, version, num_adapters, num_modalities, d, r


@dataclass
class LoraPair:
    """One low-rank update: down-projection A (d, r) and up-projection B (r, d)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.A = np.ascontiguousarray(self.A, dtype=DTYPE)
        self.B = np.ascontiguousarray(self.B, dtype=DTYPE)
        if self.A.ndim != 2 or self.B.ndim != 2:
            raise ShapeError("LoraPair factors must be 2-D")
        d, r = self.A.shape
        if self.B.shape != (r, d):
            raise ShapeError(f"B must be {(r, d)} to match A {self.A.shape}, got {self.B.shape}")

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def r(self):
        return self.A.shape[1]


class AdapterCatalog:
    """Dense table of LoraPairs over all (adapter, modality) combinations.

    Storage is two arrays of shape (num_adapters * num_modalities, d, r)
    and (..., r, d); entry order follows the combined index.
    """

    def __init__(self, num_adapters, num_modalities, d, r):
        if num_adapters < 1 or num_modalities < 1:
            raise ShapeError("catalog needs at least one adapter and one modality")
        if d < 1 or r < 1:
            raise ShapeError("d and r must be positive")
        self.num_adapters = int(num_adapters)
        self.num_modalities = int(num_modalities)
        self.d = int(d)
        self.r = int(r)
        n = self.num_adapters * self.num_modalities
        self._A = np.zeros((n, self.d, self.r), dtype=DTYPE)
        self._B = np.zeros((n, self.r, self.d), dtype=DTYPE)

    @property
    def num_entries(self):
        return self.num_adapters * self.num_modalities

    def composite_index(self, adapter, modality):
        """Combined storage index for (adapter, modality), both 0-based."""
        a, m = int(adapter), int(modality)
        if not 0 <= a < self.num_adapters:
            raise IndexError(f"adapter {a} out of range [0, {self.num_adapters})")
        if not 0 <= m < self.num_modalities:
            raise IndexError(f"modality {m} out of range [0, {self.num_modalities})")
        return a * self.num_modalities + m

    def set_pair(self, adapter, modality, pair):
        if pair.d != self.d or pair.r != self.r:
            raise ShapeError(
                f"pair has (d, r) = {(pair.d, pair.r)}, catalog expects {(self.d, self.r)}"
            )
        c = self.composite_index(adapter, modality)
        self._A[c] = pair.A
        self._B[c] = pair.B

    def get_pair(self, adapter, modality):
        c = self.composite_index(adapter, modality)
        return LoraPair(self._A[c].copy(), self._B[c].copy())

    def factors(self, index):
        """Views of (A, B) at a combined index. Do not mutate."""
        i = int(index)
        if not 0 <= i < self.num_entries:
            raise IndexError(f"combined index {i} out of range [0, {self.num_entries})")
        return self._A[i], self._B[i]

    def save(self, path):
        """Write the catalog to ``path`` in the PTRT container format."""
        with open(path, "wb") as f:
            f.write(_HEADER.pack(MAGIC, VERSION, self.num_adapters,
                                 self.num_modalities, self.d, self.r))
            for i in range(self.num_entries):
                f.write(self._A[i].astype("<f4").tobytes(order="C"))
                f.write(self._B[i].astype("<f4").tobytes(order="C"))

    @classmethod
    def load(cls, path):
        """Read a PTRT container. Raises FormatError with a byte offset."""
        with open(path, "rb") as f:
            blob = f.read()
        if len(blob) < _HEADER.size:
            raise FormatError(f"header truncated: {len(blob)} bytes", offset=len(blob))
        magic, version, na, nm, d, r = _HEADER.unpack_from(blob, 0)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
        if version != VERSION:
            raise FormatError(f"unsupported version {version}", offset=4)
        if min(na, nm, d, r) < 1:
            raise FormatError(f"non-positive dimension in header: {(na, nm, d, r)}", offset=8)
        entry = 2 * d * r * 4
        expected = _HEADER.size + na * nm * entry
        if len(blob) != expected:
            raise FormatError(
                f"payload is {len(blob) - _HEADER.size} bytes, expected {expected - _HEADER.size}",
                offset=min(len(blob), expected),
            )
        cat = cls(na, nm, d, r)
        pos = _HEADER.size
        half = d * r * 4
        for i in range(na * nm):
            a = np.frombuffer(blob, dtype="<f4", count=d * r, offset=pos).reshape(d, r)
            b = np.frombuffer(blob, dtype="<f4", count=d * r, offset=pos + half).reshape(r, d)
            cat._A[i] = a
            cat._B[i] = b
            pos += entry
        return cat


def random_catalog(num_adapters, num_modalities, d, r, rng, scale=0.1):
    """Catalog with independent N(0, scale^2) factor entries."""
    cat = AdapterCatalog(num_adapters, num_modalities, d, r)
    n = cat.num_entries
    cat._A[:] = rng.normal(0.0, scale, size=(n, d, r)).astype(DTYPE)
    cat._B[:] = rng.normal(0.0, scale, size=(n, r, d)).astype(DTYPE)
    return cat
