"""Seeded synthetic scenes: clustered Gaussians with ground-truth labels,
camera orbits, rendered GT masks, and mask corruption models.

Everything here is deterministic under its seed via the documented
counter-based generator (:mod:`splatseg.rng`), and the standard fixture
lives in the package as JSON data so ports can share it byte for byte.

Draw order (the determinism contract of :func:`generate_scene`):

1. cluster centres by rejection sampling, 3 uniforms per candidate;
2. per-instance primitive counts, one integer each, in instance order;
3. per primitive, in instance order then primitive order: 3 normals
   (position offset), 3 uniforms (scale), 4 normals (rotation), and
   1 uniform (opacity).
"""

from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ConfigError, ContractError
from .geometry import Camera
from .rasterize import RasterConfig, render_instance_mask
from .rng import SplitMix64
from .scene import GaussianScene, InstanceMask2D, LabelAssignment, ViewSet, validate_mask

_CENTER_ATTEMPTS = 10000


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic scene, orbit, and render resolution."""

    num_instances: int
    primitives_per_instance: tuple[int, int]
    cluster_spread: float
    opacity_range: tuple[float, float]
    scale_range: tuple[float, float]
    camera_count: int
    orbit_radius: float
    orbit_height: float
    resolution: tuple[int, int]
    focal_px: float
    seed: int

    def __post_init__(self) -> None:
        if self.num_instances < 1:
            raise ConfigError("num_instances must be at least 1")
        if self.camera_count < 1:
            raise ConfigError("camera_count must be at least 1")
        lo, hi = self.primitives_per_instance
        if not (0 < lo <= hi):
            raise ConfigError("primitives_per_instance range must be positive")
        if self.cluster_spread <= 0:
            raise ConfigError("cluster_spread must be positive")
        for name in ("opacity_range", "scale_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ConfigError(f"{name} must be positive and ordered")
        if self.opacity_range[1] >= 1.0:
            raise ConfigError("opacity_range must stay below 1")
        if self.orbit_radius <= 0 or self.focal_px <= 0:
            raise ConfigError("orbit_radius and focal_px must be positive")
        w, h = self.resolution
        if w < 8 or h < 8:
            raise ConfigError("resolution must be at least 8x8")

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown SynthSpec keys: {sorted(unknown)}")
        missing = known - set(data)
        if missing:
            raise ConfigError(f"missing SynthSpec keys: {sorted(missing)}")
        data = dict(data)
        for name in ("primitives_per_instance", "opacity_range", "scale_range", "resolution"):
            data[name] = tuple(data[name])
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "num_instances": self.num_instances,
            "primitives_per_instance": list(self.primitives_per_instance),
            "cluster_spread": self.cluster_spread,
            "opacity_range": list(self.opacity_range),
            "scale_range": list(self.scale_range),
            "camera_count": self.camera_count,
            "orbit_radius": self.orbit_radius,
            "orbit_height": self.orbit_height,
            "resolution": list(self.resolution),
            "focal_px": self.focal_px,
            "seed": self.seed,
        }


def standard_spec() -> SynthSpec:
    """The anchor fixture every experiment and test references."""
    text = resources.files("splatseg").joinpath("data/standard_scene.json").read_text()
    return SynthSpec.from_dict(json.loads(text))


def _instance_palette(k: int) -> np.ndarray:
    """Visually distinct per-instance colors (golden-ratio hue walk)."""
    colors = np.empty((k, 3))
    for i in range(k):
        hue = (i * 0.6180339887498949) % 1.0
        colors[i] = colorsys.hsv_to_rgb(hue, 0.72, 0.95)
    return colors


def generate_scene(spec: SynthSpec) -> tuple[GaussianScene, LabelAssignment]:
    """Build K well-separated Gaussian clusters, one instance each.

    Cluster centres are rejection-sampled in the unit box [-1, 1]^3 under
    a minimum separation of 4x ``cluster_spread``; an infeasible spec
    raises :class:`ConfigError` suggesting smaller K or spread.
    """
    rng = SplitMix64(spec.seed)
    k = spec.num_instances
    min_sep = 4.0 * spec.cluster_spread

    centers: list[np.ndarray] = []
    attempts = 0
    while len(centers) < k:
        if attempts >= _CENTER_ATTEMPTS:
            raise ConfigError(
                f"could not place {k} cluster centres with separation {min_sep:.3g} "
                "in the unit box; reduce num_instances or cluster_spread"
            )
        attempts += 1
        cand = rng.uniform(3, lo=-1.0, hi=1.0)
        if all(np.linalg.norm(cand - c) >= min_sep for c in centers):
            centers.append(cand)

    lo, hi = spec.primitives_per_instance
    counts = [int(rng.integers(lo, hi + 1)) for _ in range(k)]
    total = sum(counts)

    positions = np.empty((total, 3))
    scales = np.empty((total, 3))
    rotations = np.empty((total, 4))
    opacities = np.empty(total)
    labels = np.empty(total, dtype=np.int64)
    palette = _instance_palette(k)
    colors = np.empty((total, 3))

    row = 0
    for inst in range(k):
        for _ in range(counts[inst]):
            positions[row] = centers[inst] + rng.normal(3) * spec.cluster_spread
            scales[row] = rng.uniform(3, lo=spec.scale_range[0], hi=spec.scale_range[1])
            q = rng.normal(4)
            norm = np.linalg.norm(q)
            rotations[row] = q / norm if norm > 1e-12 else (1.0, 0.0, 0.0, 0.0)
            opacities[row] = rng.uniform(lo=spec.opacity_range[0], hi=spec.opacity_range[1])
            colors[row] = palette[inst]
            labels[row] = inst + 1
            row += 1

    scene = GaussianScene(
        positions=positions,
        scales=scales,
        rotations=rotations,
        opacities=opacities,
        colors=colors,
    )
    scene.validate()
    gt = LabelAssignment(
        labels=labels,
        num_instances=k,
        provenance={"mode": "synthetic-ground-truth", "seed": str(spec.seed)},
    )
    gt.validate(scene)
    return scene, gt


def generate_orbit(spec: SynthSpec) -> ViewSet:
    """T cameras on a horizontal circle, all looking at the origin,
    uniformly spaced in azimuth starting at 0."""
    width, height = spec.resolution
    cameras = []
    for t in range(spec.camera_count):
        az = 2.0 * np.pi * t / spec.camera_count
        eye = (
            spec.orbit_radius * np.cos(az),
            spec.orbit_radius * np.sin(az),
            spec.orbit_height,
        )
        cameras.append(
            Camera.look_at(
                eye,
                (0.0, 0.0, 0.0),
                width=width,
                height=height,
                fx=spec.focal_px,
                id=t,
            )
        )
    return ViewSet(cameras=cameras)


def generate_gt_masks(
    scene: GaussianScene,
    gt_labels: LabelAssignment,
    views: ViewSet,
    raster_config: RasterConfig | None = None,
) -> list[InstanceMask2D]:
    """Render ground-truth labels per view: ideal input masks for
    closed-loop tests."""
    return [
        render_instance_mask(scene, gt_labels, cam, raster_config)
        for cam in views.cameras
    ]


@dataclass(frozen=True)
class CorruptionModel:
    """Seeded mask damage: ``erosion`` shrinks every instance boundary by a
    disk radius, ``dropout`` zeroes each remaining nonzero pixel with
    probability p, ``id_flips`` reassigns each surviving nonzero pixel, with
    probability q, to a random other ID from the mask's original nonzero ID
    set. Applied in that order."""

    dropout: float = 0.0
    erosion: int = 0
    id_flips: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.dropout <= 1.0 and 0.0 <= self.id_flips <= 1.0):
            raise ConfigError("dropout and id_flips must lie in [0, 1]")
        if self.erosion < 0:
            raise ConfigError("erosion must be non-negative")


def corrupt_masks(
    masks: list[InstanceMask2D],
    model: CorruptionModel,
    seed: int,
) -> list[InstanceMask2D]:
    """Apply the corruption model to each mask in order.

    The seeded stream is consumed mask by mask: one uniform per pixel for
    dropout, two per pixel for ID flips, drawn whether or not the pixel is
    nonzero, so consumption is a function of shape alone."""
    from scipy import ndimage

    rng = SplitMix64(seed)
    out = []
    for mask in masks:
        m = validate_mask(mask).copy()
        if model.erosion > 0:
            span = np.arange(-model.erosion, model.erosion + 1)
            yy, xx = np.meshgrid(span, span, indexing="ij")
            disk = xx * xx + yy * yy <= model.erosion * model.erosion
            kept = np.zeros_like(m)
            for i in np.unique(m):
                if i == 0:
                    continue
                core = ndimage.binary_erosion(m == i, structure=disk)
                kept[core] = i
            m = kept
        if model.dropout > 0:
            u = rng.uniform(m.size).reshape(m.shape)
            m[(m != 0) & (u < model.dropout)] = 0
        if model.id_flips > 0:
            ids = np.unique(mask)
            ids = ids[ids != 0]
            u = rng.uniform(m.size).reshape(m.shape)
            pick = rng.uniform(m.size).reshape(m.shape)
            if ids.size >= 2:
                flip = (m != 0) & (u < model.id_flips)
                slot = np.floor(pick * (ids.size - 1)).astype(np.int64)
                slot = np.minimum(slot, ids.size - 2)
                own = np.searchsorted(ids, m)  # m nonzero where flip
                chosen = np.where(slot >= own, slot + 1, slot)
                m[flip] = ids[np.minimum(chosen, ids.size - 1)][flip]
        out.append(m.astype(np.uint16))
    return out


def subsample_views(
    views: ViewSet,
    masks: list[InstanceMask2D],
    size: int,
    rng: SplitMix64,
) -> tuple[ViewSet, list[InstanceMask2D]]:
    """Draw ``size`` distinct (view, mask) pairs with a seeded partial
    Fisher-Yates shuffle; order follows the draw."""
    t = len(views)
    if size > t:
        raise ContractError(f"subset size {size} exceeds view count {t}")
    if size < 1:
        raise ContractError("subset size must be at least 1")
    if len(masks) != t:
        raise ContractError("masks must parallel views")
    pool = list(range(t))
    chosen = []
    for i in range(size):
        j = i + rng.integers(0, t - i)
        pool[i], pool[j] = pool[j], pool[i]
        chosen.append(pool[i])
    sub = ViewSet(
        cameras=[views.cameras[i] for i in chosen],
        ids=[views.ids[i] for i in chosen],
    )
    return sub, [masks[i] for i in chosen]
