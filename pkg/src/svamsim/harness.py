"""Seeded Monte Carlo experiment drivers, metrics, and CSV emission.

Conventions (not physics, just bookkeeping): the transmit power is 1 and
the path gain has unit magnitude with phase uniform on [0, 2pi), so the
per-antenna SNR in dB maps to the noise power as sigma^2 = 10^(-SNR/10)
exactly. True angles are drawn uniformly from the candidate grid, so a
perfect run has zero error. Per-trial generators are spawned from the
experiment seed keyed by trial index alone; shrinking or growing the
trial count never changes earlier trials, and paired comparisons across
sweep points see identical channel realizations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .adaptive import AdaptConfig, TrialRecord, run_alignment, run_hiepm_known_alpha
from .arrays import AngularGrid, RegionOfInterest
from .beams import (
    BeamSpec,
    FirDesignParams,
    HierarchicalCodebook,
    build_hierarchical_codebook,
    design_beamformer,
)
from .channel import ChannelParams
from .crb import crb_benchmark, crb_general, crb_svam, crb_unknown_alpha, gain_condition_sufficient
from .sensing import SvamConfig, svam_combiner

EXPERIMENT_KINDS = (
    "rmse_vs_snr",
    "rmse_vs_snapshots",
    "gain_over_time",
    "noise_mismatch",
    "codebook_compare",
    "crb_sweep",
)

CSV_COLUMNS = (
    "experiment",
    "snr_db",
    "n_v",
    "p_thresh",
    "noise_scale",
    "t",
    "trial_count",
    "metric_name",
    "value",
)


def u_from_theta(theta: float) -> float:
    """Electrical angle for a physical direction of arrival in radians."""
    if not -math.pi / 2 <= theta < math.pi / 2:
        raise ValueError("physical angle must lie in [-pi/2, pi/2)")
    return math.sin(theta)


def theta_from_u(u: float) -> float:
    return math.asin(u)


def noise_variance_from_snr(snr_db: float) -> float:
    """Per-antenna noise power for unit signal power; +inf SNR means none."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """One reproducible experiment: a sweep grid plus fixed sizes and seed."""

    experiment: str
    n: int = 64
    n_v: tuple[int, ...] = (4,)
    grid_size: int = 64
    total_snapshots: int = 120
    trials: int = 100
    snr_db: tuple[float, ...] = (-10.0,)
    p_thresh: tuple[float, ...] = (0.6,)
    noise_scale: tuple[float, ...] = (1.0,)
    roi: RegionOfInterest = field(default_factory=lambda: RegionOfInterest(0.0, 1.0))
    seed: int = 0
    codebook: str = "flexible"
    out: str | None = None

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENT_KINDS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; expected one of "
                f"{', '.join(EXPERIMENT_KINDS)}"
            )
        if self.trials < 1:
            raise ValueError("need at least one trial")
        for axis in ("n_v", "snr_db", "p_thresh", "noise_scale"):
            if len(getattr(self, axis)) == 0:
                raise ValueError(f"sweep axis {axis} is empty")
        for n_v in self.n_v:
            if self.total_snapshots % n_v:
                raise ValueError(
                    f"block size {n_v} must divide {self.total_snapshots} snapshots"
                )

    def adapt(self, n_v: int, p_thresh: float, noise_scale: float = 1.0) -> AdaptConfig:
        return AdaptConfig(
            n=self.n,
            n_v=n_v,
            total_snapshots=self.total_snapshots,
            roi=self.roi,
            grid_size=self.grid_size,
            p_thresh=p_thresh,
            codebook=self.codebook,
            noise_scale=noise_scale,
        )


@dataclass(frozen=True)
class MetricRow:
    """One CSV record: sweep coordinates plus a named metric value.

    Coordinates that do not apply to a metric are None and serialize to
    empty cells; infinite values serialize to the literal token inf.
    """

    experiment: str
    snr_db: float
    n_v: int
    p_thresh: float | None
    noise_scale: float | None
    t: int | None
    trial_count: int
    metric_name: str
    value: float


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Independent per-trial stream; depends on (seed, trial) only."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def draw_channel(
    grid: AngularGrid, snr_db: float, rng: np.random.Generator
) -> ChannelParams:
    """Single-path channel for one trial: on-grid angle, unit-modulus gain."""
    u_true = float(grid.points[int(rng.integers(grid.size))])
    alpha = np.exp(2j * np.pi * rng.uniform())
    return ChannelParams.single_path(
        alpha, u_true, power=1.0, noise_variance=noise_variance_from_snr(snr_db)
    )


def run_adaptive_trials(
    config: AdaptConfig,
    snr_db: float,
    trials: int,
    seed: int,
    codebook: HierarchicalCodebook | None = None,
) -> list[TrialRecord]:
    grid = AngularGrid(config.roi, config.grid_size)
    if config.codebook == "hierarchical" and codebook is None:
        codebook = build_hierarchical_codebook(
            config.roi,
            config.depth(),
            config.svam().combiner_length,
            config.fir,
            grid_size=config.grid_size,
        )
    records = []
    for trial in range(trials):
        rng = trial_generator(seed, trial)
        channel = draw_channel(grid, snr_db, rng)
        records.append(
            run_alignment(config, channel, rng, trial_index=trial, codebook=codebook)
        )
    return records


def run_hiepm_trials(
    config: AdaptConfig,
    snr_db: float,
    trials: int,
    seed: int,
    codebook: HierarchicalCodebook,
    mode: str = "svam",
) -> list[TrialRecord]:
    grid = AngularGrid(config.roi, config.grid_size)
    records = []
    for trial in range(trials):
        rng = trial_generator(seed, trial)
        channel = draw_channel(grid, snr_db, rng)
        records.append(
            run_hiepm_known_alpha(
                config, channel, codebook, rng, mode=mode, trial_index=trial
            )
        )
    return records


def rmse(estimates, truths) -> float:
    estimates = np.asarray(estimates, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if estimates.shape != truths.shape or estimates.ndim != 1 or len(estimates) == 0:
        raise ValueError("need equally many estimates and truths, at least one pair")
    return float(np.sqrt(np.mean((estimates - truths) ** 2)))


def records_rmse(records: list[TrialRecord]) -> float:
    return rmse([r.estimate for r in records], [r.true_angle for r in records])


def bootstrap_rmse_interval(
    squared_errors,
    resamples: int = 2000,
    confidence: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the RMSE of a trial batch."""
    sq = np.asarray(squared_errors, dtype=float)
    if sq.ndim != 1 or len(sq) == 0:
        raise ValueError("need a nonempty vector of squared errors")
    if not (0.0 < confidence < 1.0):
        raise ValueError("confidence must lie in (0, 1)")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xB007,)))
    idx = rng.integers(len(sq), size=(resamples, len(sq)))
    stats = np.sqrt(sq[idx].mean(axis=1))
    tail = 100.0 * (1.0 - confidence) / 2.0
    lo, hi = np.percentile(stats, [tail, 100.0 - tail])
    return float(lo), float(hi)


def _db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def _rmse_rows(config: ExperimentConfig) -> list[MetricRow]:
    rows = []
    for snr in config.snr_db:
        for n_v in config.n_v:
            for p in config.p_thresh:
                records = run_adaptive_trials(
                    config.adapt(n_v, p), snr, config.trials, config.seed
                )
                rows.append(
                    MetricRow(
                        config.experiment, snr, n_v, p, None, None,
                        config.trials, "rmse", records_rmse(records),
                    )
                )
    return rows


def _rmse_vs_snapshots_rows(config: ExperimentConfig) -> list[MetricRow]:
    rows = []
    for snr in config.snr_db:
        for n_v in config.n_v:
            for p in config.p_thresh:
                records = run_adaptive_trials(
                    config.adapt(n_v, p), snr, config.trials, config.seed
                )
                grid = AngularGrid(config.roi, config.grid_size)
                for t in range(len(records[0].segments)):
                    ests = [grid.points[r.segments[t].mode_index] for r in records]
                    rows.append(
                        MetricRow(
                            config.experiment, snr, n_v, p, None, t,
                            config.trials, "rmse",
                            rmse(ests, [r.true_angle for r in records]),
                        )
                    )
    return rows


def _gain_rows(config: ExperimentConfig) -> list[MetricRow]:
    rows = []
    for snr in config.snr_db:
        for n_v in config.n_v:
            for p in config.p_thresh:
                records = run_adaptive_trials(
                    config.adapt(n_v, p), snr, config.trials, config.seed
                )
                for t in range(len(records[0].segments)):
                    gains = [r.segments[t].gain_at_truth for r in records]
                    for name, value in (
                        ("mean_gain_db", _db(float(np.mean(gains)))),
                        ("min_gain_db", _db(float(np.min(gains)))),
                        ("max_gain_db", _db(float(np.max(gains)))),
                    ):
                        rows.append(
                            MetricRow(
                                config.experiment, snr, n_v, p, None, t,
                                config.trials, name, value,
                            )
                        )
    return rows


def _noise_mismatch_rows(config: ExperimentConfig) -> list[MetricRow]:
    rows = []
    for snr in config.snr_db:
        for n_v in config.n_v:
            for p in config.p_thresh:
                for scale in config.noise_scale:
                    records = run_adaptive_trials(
                        config.adapt(n_v, p, noise_scale=scale),
                        snr, config.trials, config.seed,
                    )
                    rows.append(
                        MetricRow(
                            config.experiment, snr, n_v, p, scale, None,
                            config.trials, "rmse", records_rmse(records),
                        )
                    )
    return rows


def _codebook_compare_rows(config: ExperimentConfig) -> list[MetricRow]:
    rows = []
    for snr in config.snr_db:
        for n_v in config.n_v:
            for p in config.p_thresh:
                for mode in ("flexible", "hierarchical"):
                    adapt = AdaptConfig(
                        n=config.n, n_v=n_v,
                        total_snapshots=config.total_snapshots,
                        roi=config.roi, grid_size=config.grid_size,
                        p_thresh=p, codebook=mode,
                    )
                    records = run_adaptive_trials(
                        adapt, snr, config.trials, config.seed
                    )
                    rows.append(
                        MetricRow(
                            config.experiment, snr, n_v, p, None, None,
                            config.trials, f"rmse_{mode}", records_rmse(records),
                        )
                    )
    return rows


def region_beam_bank(
    n: int, n_v: int, total_snapshots: int, roi: RegionOfInterest,
    fir: FirDesignParams = FirDesignParams(),
) -> np.ndarray:
    """Non-adaptive bank: the region-covering beam repeated every segment."""
    m = SvamConfig(n=n, n_v=n_v).combiner_length
    f = design_beamformer(BeamSpec(roi.center, roi.width), m, fir)
    return np.tile(f.weights[:, None], (1, total_snapshots // n_v))


def expanded_combiners(bank: np.ndarray, n: int, n_v: int) -> np.ndarray:
    """Full N x L combiner matrix from a per-segment sub-aperture bank."""
    cfg = SvamConfig(n=n, n_v=n_v)
    cols = [
        svam_combiner(bank[:, t], t * n_v + l, cfg)
        for t in range(bank.shape[1])
        for l in range(n_v)
    ]
    return np.stack(cols, axis=1)


def _crb_rows(config: ExperimentConfig) -> list[MetricRow]:
    rows = []
    grid = AngularGrid(config.roi, config.grid_size)
    region = BeamSpec(config.roi.center, config.roi.width)
    for snr in config.snr_db:
        noise_var = noise_variance_from_snr(snr)
        for n_v in config.n_v:
            segments = config.total_snapshots // n_v
            bank = region_beam_bank(
                config.n, n_v, config.total_snapshots, config.roi
            )
            w = expanded_combiners(bank, config.n, n_v)
            full = design_beamformer(region, config.n)
            bench_bank = np.tile(full.weights[:, None], (1, segments))
            for i, u in enumerate(grid.points):
                u = float(u)
                svam = crb_svam(bank, n_v, u, 1.0, 1.0, noise_var)
                bench = crb_benchmark(bench_bank, n_v, u, 1.0, 1.0, noise_var)
                unknown = crb_unknown_alpha(w, u, 1.0, 1.0, noise_var)
                for name, value in (
                    ("crb_svam", svam.bound),
                    ("crb_benchmark", bench.bound),
                    ("crb_unknown_alpha", unknown.bound),
                ):
                    rows.append(
                        MetricRow(
                            config.experiment, snr, n_v, None, None, i,
                            0, name, value,
                        )
                    )
    return rows


def run_experiment(config: ExperimentConfig) -> list[MetricRow]:
    """Run every sweep point of the configured study and aggregate metrics."""
    dispatch = {
        "rmse_vs_snr": _rmse_rows,
        "rmse_vs_snapshots": _rmse_vs_snapshots_rows,
        "gain_over_time": _gain_rows,
        "noise_mismatch": _noise_mismatch_rows,
        "codebook_compare": _codebook_compare_rows,
        "crb_sweep": _crb_rows,
    }
    return dispatch[config.experiment](config)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def emit_csv(rows: list[MetricRow], path: str) -> None:
    """Write metric rows with a fixed column order and 12-digit floats."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow(
                    [
                        row.experiment,
                        _cell(row.snr_db),
                        _cell(row.n_v),
                        _cell(row.p_thresh),
                        _cell(row.noise_scale),
                        _cell(row.t),
                        _cell(row.trial_count),
                        row.metric_name,
                        _cell(row.value),
                    ]
                )
    except OSError as exc:
        raise OSError(f"cannot write metrics CSV to {path!r}: {exc}") from exc


def write_trajectories(records: list[TrialRecord], path: str) -> None:
    """Per-segment trace of each trial: beam, gain at truth, confidence."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                [
                    "trial", "true_angle", "t", "beam_direction", "beamwidth",
                    "gain_db_at_truth", "peak_prob", "mode_index", "estimate",
                ]
            )
            for rec in records:
                for t, seg in enumerate(rec.segments):
                    writer.writerow(
                        [
                            _cell(rec.trial_index),
                            _cell(rec.true_angle),
                            _cell(t),
                            _cell(seg.beam.direction),
                            _cell(seg.beam.beamwidth),
                            _cell(_db(seg.gain_at_truth)),
                            _cell(seg.peak_prob),
                            _cell(seg.mode_index),
                            _cell(rec.estimate),
                        ]
                    )
    except OSError as exc:
        raise OSError(f"cannot write trajectory CSV to {path!r}: {exc}") from exc


def crb_table(
    scheme: str,
    n: int,
    n_v: int,
    total_snapshots: int,
    grid: AngularGrid,
    snr_db: float,
    beam: BeamSpec | None = None,
    fir: FirDesignParams = FirDesignParams(),
) -> list[dict]:
    """Bound sweep over the grid for one scheme and a fixed (repeated) beam.

    general expands the sliding combiners explicitly and must match svam;
    benchmark repeats a full-aperture beam; unknown-alpha drops the
    known-gain assumption on the expanded combiners.
    """
    if scheme not in ("general", "benchmark", "svam", "unknown-alpha"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if total_snapshots % n_v:
        raise ValueError("block size must divide the snapshot count")
    noise_var = noise_variance_from_snr(snr_db)
    roi = grid.roi
    if beam is None:
        beam = BeamSpec(roi.center, roi.width)
    m = SvamConfig(n=n, n_v=n_v).combiner_length if scheme != "benchmark" else n
    f = design_beamformer(beam, m, fir)
    segments = total_snapshots // n_v
    bank = np.tile(f.weights[:, None], (1, segments))
    out = []
    for u in grid.points:
        u = float(u)
        g_term = None
        holds = None
        if scheme == "svam":
            res = crb_svam(bank, n_v, u, 1.0, 1.0, noise_var)
            g_term = res.gain_term
            holds, _, _ = gain_condition_sufficient(bank, u)
        elif scheme == "benchmark":
            res = crb_benchmark(bank, n_v, u, 1.0, 1.0, noise_var)
        elif scheme == "general":
            res = crb_general(expanded_combiners(bank, n, n_v), u, 1.0, 1.0, noise_var)
        else:
            res = crb_unknown_alpha(
                expanded_combiners(bank, n, n_v), u, 1.0, 1.0, noise_var
            )
        out.append(
            {
                "u": u,
                "N": n,
                "N_v": n_v,
                "L": total_snapshots,
                "scheme": scheme,
                "bound": res.bound,
                "g_term": g_term,
                "condition_holds": holds,
            }
        )
    return out


def write_crb_csv(rows: list[dict], path: str) -> None:
    columns = ["u", "N", "N_v", "L", "scheme", "bound", "g_term", "condition_holds"]
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                record = []
                for col in columns:
                    v = row[col]
                    if isinstance(v, bool):
                        record.append("true" if v else "false")
                    else:
                        record.append(_cell(v))
                writer.writerow(record)
    except OSError as exc:
        raise OSError(f"cannot write CRB CSV to {path!r}: {exc}") from exc


_LIST_FIELDS = {"n_v", "snr_db", "p_thresh", "noise_scale"}
_INT_FIELDS = {"n", "grid_size", "total_snapshots", "trials", "seed"}
_STR_FIELDS = {"experiment", "codebook", "out"}


def parse_config_file(path: str) -> dict:
    """key = value experiment settings; '#' comments; lists comma-separated.

    Returns keyword arguments for ExperimentConfig.
    """
    kwargs: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in _LIST_FIELDS:
                kwargs[key] = tuple(float(v) for v in value.split(","))
                if key == "n_v":
                    kwargs[key] = tuple(int(v) for v in kwargs[key])
            elif key in _INT_FIELDS:
                kwargs[key] = int(value)
            elif key in _STR_FIELDS:
                kwargs[key] = value
            elif key == "roi":
                left, right = (float(v) for v in value.split(","))
                kwargs[key] = RegionOfInterest(left, right)
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return kwargs


def config_from_file(path: str, **overrides) -> ExperimentConfig:
    kwargs = parse_config_file(path)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs)
