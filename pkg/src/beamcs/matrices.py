"""Measurement matrices: the five random baselines plus the learned kind.

All matrices are real m x n with m < n.  The two complex constructions
(partial Fourier and phase shifter) are realified by expanding each
complex row into two real rows (real part, imaginary part), so m real
measurements carry m/2 complex ones.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class MatrixKind(enum.Enum):
    LEARNED = "learned"
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"
    PARTIAL_FOURIER = "partial_fourier"
    SELECTION = "selection"
    PHASE_SHIFTER = "phase_shifter"


# Stable numeric tags, used for RNG stream separation and in the file format.
KIND_TAGS: dict[MatrixKind, int] = {
    MatrixKind.LEARNED: 0,
    MatrixKind.GAUSSIAN: 1,
    MatrixKind.BERNOULLI: 2,
    MatrixKind.PARTIAL_FOURIER: 3,
    MatrixKind.SELECTION: 4,
    MatrixKind.PHASE_SHIFTER: 5,
}
KINDS_BY_TAG = {tag: kind for kind, tag in KIND_TAGS.items()}

# Kinds built from a complex (m/2) x n matrix; they require even m.
COMPLEX_KINDS = (MatrixKind.PARTIAL_FOURIER, MatrixKind.PHASE_SHIFTER)


@dataclass(frozen=True)
class MeasurementMatrix:
    """Immutable real m x n linear map with its provenance."""

    data: np.ndarray
    kind: MatrixKind
    seed: int = 0
    num_angles: int = 0  # phase-shifter quantization levels; 0 elsewhere

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {data.shape}")
        if data.shape[0] >= data.shape[1]:
            raise ValueError(
                f"expected m < n, got shape {data.shape}"
            )
        if not np.isfinite(data).all():
            raise ValueError("matrix entries must be finite")
        if self.kind is MatrixKind.PHASE_SHIFTER and self.num_angles < 1:
            raise ValueError("phase-shifter matrices need num_angles >= 1")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def num_measurements(self) -> int:
        return self.data.shape[0]

    @property
    def num_columns(self) -> int:
        return self.data.shape[1]


def _kind_rng(kind: MatrixKind, seed: int) -> np.random.Generator:
    # Separate stream per kind so one seed yields independent baselines.
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(KIND_TAGS[kind],))
    )


def realify_rows(complex_rows: np.ndarray) -> np.ndarray:
    """Expand each complex row into two real rows [Re; Im]."""
    half_m, n = complex_rows.shape
    out = np.empty((2 * half_m, n))
    out[0::2] = complex_rows.real
    out[1::2] = complex_rows.imag
    return out


def generate_baseline(
    kind: MatrixKind,
    num_measurements: int,
    num_columns: int,
    seed: int = 0,
    num_angles: int = 4,
) -> MeasurementMatrix:
    """Construct one of the five random baseline matrices.

    Entry conventions: Gaussian entries are N(0, 1/m); Bernoulli entries
    are +-1/sqrt(m); selection entries are 0/1 equiprobable; partial
    Fourier draws m/2 distinct rows of the unitary n-point DFT; phase
    shifter entries are exp(j*xi)/sqrt(n) with xi uniform over num_angles
    quantized phases.  Deterministic in (kind, m, n, seed, num_angles).
    """
    m, n = num_measurements, num_columns
    if kind is MatrixKind.LEARNED:
        raise ValueError("learned matrices come from training, not generation")
    if m < 1 or m >= n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    if kind in COMPLEX_KINDS and m % 2 != 0:
        raise ValueError(f"{kind.value} needs an even m (row pairs), got {m}")

    rng = _kind_rng(kind, seed)
    if kind is MatrixKind.GAUSSIAN:
        data = rng.standard_normal((m, n)) / math.sqrt(m)
    elif kind is MatrixKind.BERNOULLI:
        data = (2.0 * rng.integers(0, 2, size=(m, n)) - 1.0) / math.sqrt(m)
    elif kind is MatrixKind.SELECTION:
        data = rng.integers(0, 2, size=(m, n)).astype(float)
    elif kind is MatrixKind.PARTIAL_FOURIER:
        # m < n guarantees m/2 distinct rows exist in the n-point DFT
        rows = rng.choice(n, size=m // 2, replace=False)
        cols = np.arange(n)
        dft_rows = np.exp(-2j * np.pi * np.outer(rows, cols) / n) / math.sqrt(n)
        data = realify_rows(dft_rows)
    elif kind is MatrixKind.PHASE_SHIFTER:
        xi = rng.integers(0, num_angles, size=(m // 2, n)) * (2.0 * np.pi / num_angles)
        data = realify_rows(np.exp(1j * xi) / math.sqrt(n))
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown kind {kind}")

    return MeasurementMatrix(
        data=data,
        kind=kind,
        seed=seed,
        num_angles=num_angles if kind is MatrixKind.PHASE_SHIFTER else 0,
    )


def measure(matrix: MeasurementMatrix, values: np.ndarray) -> np.ndarray:
    """Compress a channel vector (or a column-stacked batch): y = Phi h."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != matrix.num_columns:
        raise ValueError(
            f"dimension mismatch: matrix has {matrix.num_columns} columns, "
            f"vector has leading dimension {values.shape[0]}"
        )
    return matrix.data @ values
