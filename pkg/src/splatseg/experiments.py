"""Stage-agreement, robustness, and timing experiments over the pipeline.

Each experiment returns a dataclass that serializes to the shared JSON
report shape ``{experiment, seed, scene, rows}`` via
:func:`report_json`. All randomness flows through the documented seeded
generator, so reports are reproducible bit for bit (timing fields
excepted -- wall time is hardware noise by definition).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .labeling import AggregationConfig, aggregate_labels, label_agreement
from .metrics import SegMetrics, compute_metrics
from .rasterize import RasterConfig, render_instance_mask
from .refine import RefineConfig, refine_mask
from .rng import SplitMix64
from .scene import GaussianScene, InstanceMask2D, ViewSet
from .synthetic import subsample_views


@dataclass
class PhaseStats:
    """Wall-clock summary of one pipeline phase, in milliseconds."""

    median_ms: float
    p95_ms: float
    samples_ms: list[float] = field(default_factory=list)

    @classmethod
    def from_samples(cls, samples: list[float]) -> "PhaseStats":
        arr = np.asarray(samples, dtype=np.float64)
        return cls(
            median_ms=float(np.median(arr)),
            p95_ms=float(np.percentile(arr, 95)),
            samples_ms=[float(s) for s in samples],
        )

    def to_dict(self) -> dict:
        return {
            "median_ms": self.median_ms,
            "p95_ms": self.p95_ms,
            "samples_ms": self.samples_ms,
        }


@dataclass
class BenchReport:
    """Timing of the two pipeline stages: mask-to-label aggregation, and
    per-frame label rendering plus refinement."""

    aggregation: PhaseStats
    render: PhaseStats
    refine: PhaseStats
    views: int
    resolution: tuple[int, int]
    num_gaussians: int
    repetitions: int

    def to_rows(self) -> list[dict]:
        return [
            {"phase": "aggregation", **self.aggregation.to_dict()},
            {"phase": "render", **self.render.to_dict()},
            {"phase": "refine", **self.refine.to_dict()},
        ]

    def to_dict(self) -> dict:
        return {
            "views": self.views,
            "resolution": list(self.resolution),
            "num_gaussians": self.num_gaussians,
            "repetitions": self.repetitions,
            "rows": self.to_rows(),
        }


@dataclass
class StageAgreementReport:
    """Stage-2 (aggregate, re-render, refine) masks scored against the
    Stage-1 input masks treated as ground truth."""

    macc: float
    miou: float
    per_view: list[SegMetrics]
    empty: bool = False

    def to_rows(self) -> list[dict]:
        return [
            {"view": i, **m.to_dict()} for i, m in enumerate(self.per_view)
        ]

    def to_dict(self) -> dict:
        return {
            "macc": self.macc,
            "miou": self.miou,
            "empty": self.empty,
            "rows": self.to_rows(),
        }


@dataclass
class RobustnessRow:
    subset_size: int
    agreement: float
    median_ms: float
    samples_ms: list[float]
    view_ids: list[int]

    def to_dict(self) -> dict:
        return {
            "subset_size": self.subset_size,
            "agreement": self.agreement,
            "median_ms": self.median_ms,
            "samples_ms": self.samples_ms,
            "view_ids": self.view_ids,
        }


def stage_agreement_experiment(
    scene: GaussianScene,
    views: ViewSet,
    masks: list[InstanceMask2D],
    agg_config: AggregationConfig | None = None,
    raster_config: RasterConfig | None = None,
    refine_config: RefineConfig | None = None,
) -> StageAgreementReport:
    """Measure how faithfully re-rendered labels reproduce the input masks.

    Aggregates the input masks into 3D labels, renders and refines a mask
    per view, and scores each against the corresponding input mask. The
    report averages per-view mAcc over all views and mIoU over views with
    nonempty ground truth (``empty`` set when every view is empty).
    """
    assignment = aggregate_labels(scene, views, masks, agg_config, raster_config)
    per_view = []
    for camera, reference in zip(views.cameras, masks):
        coarse = render_instance_mask(scene, assignment, camera, raster_config)
        refined = refine_mask(coarse, config=refine_config)
        per_view.append(compute_metrics(refined, reference))
    macc = float(np.mean([m.macc for m in per_view]))
    nonempty = [m.miou for m in per_view if not m.empty_gt]
    if nonempty:
        return StageAgreementReport(
            macc=macc, miou=float(np.mean(nonempty)), per_view=per_view
        )
    return StageAgreementReport(macc=macc, miou=0.0, per_view=per_view, empty=True)


def robustness_experiment(
    scene: GaussianScene,
    views: ViewSet,
    masks: list[InstanceMask2D],
    subset_sizes: list[int],
    seed: int,
    agg_config: AggregationConfig | None = None,
    raster_config: RasterConfig | None = None,
    reps: int = 5,
) -> list[RobustnessRow]:
    """Label-agreement and aggregation-time curve over view subsets.

    For each requested size, draws that many (view, mask) pairs with the
    seeded generator, aggregates them, and reports label agreement against
    the full-set assignment plus the median aggregation wall time over
    ``reps`` runs. A subset equal to the full set agrees exactly 1.0.
    """
    if reps < 1:
        raise ContractError("reps must be at least 1")
    full = aggregate_labels(scene, views, masks, agg_config, raster_config)
    rng = SplitMix64(seed)
    rows = []
    for size in subset_sizes:
        sub_views, sub_masks = subsample_views(views, masks, size, rng)
        samples = []
        assignment = None
        for _ in range(reps):
            t0 = time.perf_counter()
            assignment = aggregate_labels(
                scene, sub_views, sub_masks, agg_config, raster_config
            )
            samples.append((time.perf_counter() - t0) * 1e3)
        agreement = label_agreement(full, assignment)
        rows.append(
            RobustnessRow(
                subset_size=size,
                agreement=agreement,
                median_ms=float(np.median(samples)),
                samples_ms=samples,
                view_ids=list(sub_views.ids),
            )
        )
    return rows


def bench_pipeline(
    scene: GaussianScene,
    views: ViewSet,
    masks: list[InstanceMask2D],
    agg_config: AggregationConfig | None = None,
    raster_config: RasterConfig | None = None,
    refine_config: RefineConfig | None = None,
    reps: int = 5,
) -> BenchReport:
    """Median/p95 wall time of aggregation, per-frame mask rendering, and
    per-frame refinement. ``reps`` must be at least 3 to make the median
    meaningful; one warm-up aggregation runs untimed first."""
    if reps < 3:
        raise ContractError("reps must be at least 3")
    assignment = aggregate_labels(scene, views, masks, agg_config, raster_config)  # warm-up

    agg_samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        assignment = aggregate_labels(scene, views, masks, agg_config, raster_config)
        agg_samples.append((time.perf_counter() - t0) * 1e3)

    render_samples = []
    refine_samples = []
    for _ in range(reps):
        for camera in views.cameras:
            t0 = time.perf_counter()
            coarse = render_instance_mask(scene, assignment, camera, raster_config)
            t1 = time.perf_counter()
            refine_mask(coarse, config=refine_config)
            t2 = time.perf_counter()
            render_samples.append((t1 - t0) * 1e3)
            refine_samples.append((t2 - t1) * 1e3)

    width, height = views.resolution
    return BenchReport(
        aggregation=PhaseStats.from_samples(agg_samples),
        render=PhaseStats.from_samples(render_samples),
        refine=PhaseStats.from_samples(refine_samples),
        views=len(views),
        resolution=(width, height),
        num_gaussians=scene.count,
        repetitions=reps,
    )


def report_json(experiment: str, seed: int | None, scene: str, rows: list[dict], **extra) -> dict:
    """The shared report envelope: {experiment, seed, scene, rows, ...}."""
    doc = {"experiment": experiment, "seed": seed, "scene": scene, "rows": rows}
    doc.update(extra)
    return doc


def write_csv(path, rows: list[dict]) -> None:
    """Flatten report rows to CSV (list-valued fields joined with ';')."""
    if not rows:
        raise ContractError("no rows to write")
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            flat = {
                k: (";".join(str(x) for x in v) if isinstance(v, list) else v)
                for k, v in row.items()
            }
            writer.writerow(flat)
