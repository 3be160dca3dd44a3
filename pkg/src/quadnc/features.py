"""Histogram features: 160 relative frequencies over [-8, 8]."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptyFeatureError, InputError
from .sampler import QuadratureBatch, make_rng

NBINS = 160
BIN_WIDTH = 0.1


@dataclass(frozen=True, eq=False)
class FeatureVector:
    bins: np.ndarray
    kept: int
    dropped: int = 0

    def __post_init__(self):
        b = np.asarray(self.bins, dtype=np.float64)
        if b.shape != (NBINS,):
            raise InputError(f"feature vector needs {NBINS} bins, got shape {b.shape}")
        object.__setattr__(self, "bins", b)

    def to_csv_row(self) -> str:
        return ",".join(["%.17g" % v for v in self.bins.tolist()] + [str(self.kept), str(self.dropped)])

    @classmethod
    def from_csv_row(cls, row: str) -> "FeatureVector":
        parts = row.strip().split(",")
        if len(parts) != NBINS + 2:
            raise InputError(f"feature row needs {NBINS + 2} fields, got {len(parts)}")
        return cls(np.array([float(p) for p in parts[:NBINS]]), int(parts[NBINS]), int(parts[NBINS + 1]))


def csv_header() -> str:
    return ",".join([f"bin{i}" for i in range(NBINS)] + ["kept", "dropped"])


def featurize_values(values: np.ndarray) -> FeatureVector:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InputError("empty batch")
    counts, dropped = kernels.bin_counts(values)
    kept = int(values.size - dropped)
    if kept == 0:
        raise EmptyFeatureError(f"all {values.size} events lie outside [-8, 8]")
    return FeatureVector(bins=counts / kept, kept=kept, dropped=dropped)


def featurize(batch: QuadratureBatch) -> FeatureVector:
    """Normalized histogram of the batch.

    Bin ``i`` covers ``[-8 + 0.1 i, -8 + 0.1 (i + 1))``; x = 8 goes to the
    last bin.  Events outside [-8, 8] are counted in ``dropped``.
    """
    return featurize_values(batch.values)


def subsample(batch: QuadratureBatch, size: int, seed: int) -> np.ndarray:
    n = len(batch)
    if not 1 <= size <= n:
        raise InputError(f"subsample size must lie in [1, {n}], got {size}")
    if size == n:
        return batch.values
    idx = make_rng(seed).choice(n, size=size, replace=False)
    return batch.values[idx]


def featurize_subsample(batch: QuadratureBatch, size: int, seed: int) -> FeatureVector:
    return featurize_values(subsample(batch, size, seed))
