"""Sliding sub-aperture combining across snapshots.

A length-m combiner f is shifted one element per snapshot across the
physical array. Over a block of n_v consecutive snapshots the scalar
outputs then behave, for a single path at angle u, like measurements taken
by a virtual n_v-element array:

    y_t = sqrt(P) * alpha * beta_t(u) * phi_{n_v}(u) + noise,

with beta_t(u) = f_t^H phi_m(u). The virtual aperture is what restores
angle sensitivity lost by scalar combining.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .arrays import SlaGeometry
from .beams import Beamformer
from .channel import ChannelParams, antenna_snapshot, combine

if TYPE_CHECKING:
    from .arrays import AngularGrid


@dataclass(frozen=True)
class SvamConfig:
    """Physical aperture, virtual size, and optional sparse geometry.

    For a dense array the combiner length is m = n - n_v + 1. For a sparse
    geometry the shifts follow the element positions and m = n - p[n_v - 1].
    """

    n: int
    n_v: int
    geometry: SlaGeometry | None = None

    def __post_init__(self) -> None:
        if self.n < 1 or self.n_v < 1:
            raise ValueError("array and virtual sizes must be positive")
        if self.n_v > self.n:
            raise ValueError(f"virtual size {self.n_v} exceeds aperture {self.n}")
        if self.geometry is not None:
            if len(self.geometry) != self.n_v:
                raise ValueError(
                    f"geometry has {len(self.geometry)} elements, expected {self.n_v}"
                )
            if self.geometry.positions[-1] >= self.n:
                raise ValueError("geometry does not fit inside the aperture")

    @property
    def offsets(self) -> tuple[int, ...]:
        if self.geometry is None:
            return tuple(range(self.n_v))
        return self.geometry.positions

    @property
    def combiner_length(self) -> int:
        return self.n - self.offsets[-1]


def svam_combiner(
    f: Beamformer | np.ndarray, snapshot_index: int, config: SvamConfig
) -> np.ndarray:
    """Full-length combiner for a snapshot: the sub-aperture beamformer
    zero-padded at the shift position the snapshot index selects."""
    weights = f.weights if isinstance(f, Beamformer) else np.asarray(f)
    m = config.combiner_length
    if len(weights) != m:
        raise ValueError(f"beamformer has {len(weights)} taps, geometry needs {m}")
    offset = config.offsets[snapshot_index % config.n_v]
    w = np.zeros(config.n, dtype=complex)
    w[offset : offset + m] = weights
    return w


def benchmark_combiner(
    f: Beamformer | np.ndarray, snapshot_index: int, n_v: int
) -> np.ndarray:
    """Full-aperture reference combiner: the same unit-norm beamformer is
    reused for all n_v snapshots of the block."""
    weights = f.weights if isinstance(f, Beamformer) else np.asarray(f)
    norm = np.linalg.norm(weights)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"benchmark combiner must be unit norm, got {norm}")
    if n_v < 1:
        raise ValueError("block size must be positive")
    return np.array(weights, dtype=complex)


@dataclass(frozen=True)
class SegmentMeasurement:
    """Scalar combiner outputs of one n_v-snapshot block."""

    values: np.ndarray
    index: int


def measure_segment(
    f: Beamformer | np.ndarray,
    params: ChannelParams,
    config: SvamConfig,
    segment_index: int,
    rng: np.random.Generator,
) -> SegmentMeasurement:
    """Slide the combiner across one block of snapshots and collect outputs."""
    if segment_index < 0:
        raise ValueError("segment index must be nonnegative")
    values = np.empty(config.n_v, dtype=complex)
    base = segment_index * config.n_v
    for r in range(config.n_v):
        w = svam_combiner(f, base + r, config)
        x = antenna_snapshot(params, config.n, rng)
        values[r] = combine(w, x)
    return SegmentMeasurement(values=values, index=segment_index)


class MeasurementHistory:
    """Everything the inference engine needs about past segments.

    Stores the raw segments and beamformer log, plus running per-grid
    statistics that make posterior updates O(grid) per segment: the response
    rows beta_t(u_i), the accumulated gain sum |beta|^2, the matched inner
    products sum_t beta_t^*(u_i) phi^H y_t, and the total measured power.
    """

    def __init__(self, config: SvamConfig):
        self.config = config
        self.segments: list[SegmentMeasurement] = []
        self.beamformers: list[Beamformer | np.ndarray] = []
        self._grid: AngularGrid | None = None
        self._beta_rows: list[np.ndarray] = []
        self._gain: np.ndarray | None = None
        self._matched: np.ndarray | None = None
        self._power: float = 0.0

    @property
    def segment_count(self) -> int:
        return len(self.segments)

    @property
    def n_v(self) -> int:
        return self.config.n_v

    @property
    def grid(self) -> "AngularGrid":
        if self._grid is None:
            raise ValueError("history is empty; no grid bound yet")
        return self._grid

    def append(
        self,
        segment: SegmentMeasurement,
        beamformer: Beamformer | np.ndarray,
        grid: "AngularGrid",
    ) -> "MeasurementHistory":
        if len(segment.values) != self.config.n_v:
            raise ValueError(
                f"segment carries {len(segment.values)} snapshots, "
                f"expected {self.config.n_v}"
            )
        if segment.index != self.segment_count:
            raise ValueError(
                f"segment index {segment.index} out of order, "
                f"expected {self.segment_count}"
            )
        if self._grid is None:
            self._grid = grid
            g = grid.size
            self._gain = np.zeros(g)
            self._matched = np.zeros(g, dtype=complex)
        elif grid is not self._grid:
            raise ValueError("history is bound to a different grid")

        weights = (
            beamformer.weights
            if isinstance(beamformer, Beamformer)
            else np.asarray(beamformer)
        )
        beta = weights.conj() @ grid.manifold(len(weights))
        matched_row = grid.manifold(self.config.n_v).conj().T @ segment.values

        self.segments.append(segment)
        self.beamformers.append(beamformer)
        self._beta_rows.append(beta)
        self._gain += np.abs(beta) ** 2
        self._matched += beta.conj() * matched_row
        self._power += float(np.vdot(segment.values, segment.values).real)
        return self

    @property
    def beta_matrix(self) -> np.ndarray:
        """(segments, grid) response values beta_t(u_i)."""
        return np.array(self._beta_rows)

    @property
    def cumulative_gain(self) -> np.ndarray:
        """Per-grid sum of |beta_t(u_i)|^2 over all stored segments."""
        if self._gain is None:
            raise ValueError("history is empty")
        return self._gain

    @property
    def matched_statistic(self) -> np.ndarray:
        """Per-grid sum_t beta_t^*(u_i) * phi_{n_v}(u_i)^H y_t."""
        if self._matched is None:
            raise ValueError("history is empty")
        return self._matched

    @property
    def total_power(self) -> float:
        """Squared norm of all stored measurements."""
        return self._power

    def stacked(self) -> np.ndarray:
        """All segment values concatenated in time order."""
        if not self.segments:
            raise ValueError("history is empty")
        return np.concatenate([s.values for s in self.segments])
