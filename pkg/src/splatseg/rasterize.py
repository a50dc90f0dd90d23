"""Tile-based software splatting: color/alpha/depth/index rendering.

Three public operations share one projection + binning + compositing core:

* :func:`rasterize` -- full render (color, alpha, expected depth, and the
  per-pixel index of the dominant contributing primitive).
* :func:`render_instance_mask` -- renders instance IDs directly by
  accumulating per-ID blending weight, skipping color entirely.
* :func:`render_idx_votes` -- fused "render index map, look up mask IDs,
  group into (gaussian, id, count) votes" used by label aggregation.

Determinism: primitives are depth-sorted globally with the stable key
``(depth, primitive index)``, per-pixel contribution is decided by an
analytic footprint cut rather than tile membership, and tiles write
disjoint pixels. Results are therefore identical across tile sizes and
thread counts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .errors import ConfigError
from .geometry import (
    COVARIANCE_REGULARIZATION,
    Camera,
    camera_space,
    world_covariances,
)
from .scene import GaussianScene, InstanceMask2D, LabelAssignment, validate_mask


@dataclass(frozen=True)
class RasterConfig:
    """Tunables of the splatting compositor.

    ``contribution_floor`` is the occupancy threshold: a pixel whose
    accumulated alpha stays below it reports index -1 (and renders mask
    ID 0), so near-transparent fringes never vote.
    """

    tile_size: int = 16
    alpha_cutoff: float = 1.0 / 255.0
    transmittance_stop: float = 1e-4
    contribution_floor: float = 0.5
    footprint_radius_sigma: float = 3.0
    first_hit_index: bool = False  # ablation: index the nearest contributor instead

    def __post_init__(self) -> None:
        if self.tile_size < 4:
            raise ConfigError("tile_size must be at least 4")
        for name in ("alpha_cutoff", "transmittance_stop", "contribution_floor"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ConfigError(f"{name} must lie in (0, 1)")
        if self.footprint_radius_sigma <= 0:
            raise ConfigError("footprint_radius_sigma must be positive")


@dataclass
class RenderStats:
    """Bookkeeping emitted alongside a render."""

    culled: int = 0
    skipped_non_psd: int = 0
    elapsed_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "culled": self.culled,
            "skipped_non_psd": self.skipped_non_psd,
            "elapsed_ms": self.elapsed_ms,
        }


@dataclass
class RenderOutput:
    """Full render result.

    ``idx_image[v, u]`` is the index of the primitive with the largest
    blending weight at that pixel, or -1 where accumulated alpha falls
    below the contribution floor.
    """

    color: NDArray[np.float64]
    alpha: NDArray[np.float64]
    depth: NDArray[np.float64]
    idx_image: NDArray[np.int64]
    stats: RenderStats = field(default_factory=RenderStats)


@dataclass
class VoteList:
    """Sparse (gaussian_index, instance_id, count) vote triples."""

    gaussian_index: NDArray[np.int64]
    instance_id: NDArray[np.int64]
    count: NDArray[np.int64]

    def __len__(self) -> int:
        return len(self.gaussian_index)

    def __iter__(self):
        return iter(
            zip(
                self.gaussian_index.tolist(),
                self.instance_id.tolist(),
                self.count.tolist(),
            )
        )

    @property
    def total(self) -> int:
        return int(self.count.sum())

    @classmethod
    def empty(cls) -> "VoteList":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy())


class _Prepared:
    """Projected, sorted, tile-binned splats ready for compositing."""

    __slots__ = (
        "means",
        "conics",
        "depths",
        "opacities",
        "colors",
        "orig_index",
        "tile_offsets",
        "tile_items",
        "culled",
        "non_psd",
    )

    def __init__(self, **kw):
        for k, v in kw.items():
            setattr(self, k, v)


def _prepare(scene: GaussianScene, camera: Camera, config: RasterConfig) -> _Prepared | None:
    """Project to 2D, cull, sort front-to-back, bin to tiles.

    Returns None when nothing survives culling.
    """
    n = scene.count
    if n == 0:
        return None
    width, height = camera.width, camera.height

    cam = camera_space(camera, scene.positions)
    z = cam[:, 2]
    in_front = z > camera.near_plane
    culled = int(n - in_front.sum())
    if culled == n:
        return None
    idx = np.flatnonzero(in_front)
    cam = cam[idx]
    z = z[idx]

    u = camera.fx * cam[:, 0] / z + camera.cx
    v = camera.fy * cam[:, 1] / z + camera.cy

    cov3d = world_covariances(scene.scales[idx], scene.rotations[idx])
    m = len(idx)
    jac = np.zeros((m, 2, 3), dtype=np.float64)
    jac[:, 0, 0] = camera.fx / z
    jac[:, 0, 2] = -camera.fx * cam[:, 0] / (z * z)
    jac[:, 1, 1] = camera.fy / z
    jac[:, 1, 2] = -camera.fy * cam[:, 1] / (z * z)
    jw = jac @ camera.rotation
    cov2d = jw @ cov3d @ np.swapaxes(jw, 1, 2)
    a = cov2d[:, 0, 0] + COVARIANCE_REGULARIZATION
    b = 0.5 * (cov2d[:, 0, 1] + cov2d[:, 1, 0])  # symmetrize against fp drift
    c = cov2d[:, 1, 1] + COVARIANCE_REGULARIZATION

    det = a * c - b * b
    psd_ok = (det > 0) & (a > 0) & (c > 0) & np.isfinite(det) & np.isfinite(u) & np.isfinite(v)
    non_psd = int((~psd_ok).sum())

    mid = 0.5 * (a + c)
    spread = np.sqrt(np.maximum(0.25 * (a - c) ** 2 + b * b, 0.0))
    lam_max = mid + spread
    radius = config.footprint_radius_sigma * np.sqrt(np.maximum(lam_max, 0.0))

    on_screen = (
        psd_ok
        & (u + radius >= 0.0)
        & (u - radius <= float(width))
        & (v + radius >= 0.0)
        & (v - radius <= float(height))
    )
    culled += int((psd_ok & ~on_screen).sum())
    keep = np.flatnonzero(on_screen)
    if keep.size == 0:
        return None

    orig = idx[keep]
    order = np.lexsort((orig, z[keep]))  # stable: depth asc, then primitive index
    keep = keep[order]
    orig = idx[keep].astype(np.int64)

    means = np.ascontiguousarray(np.stack([u[keep], v[keep]], axis=1))
    inv_det = 1.0 / det[keep]
    conics = np.ascontiguousarray(
        np.stack([c[keep] * inv_det, -b[keep] * inv_det, a[keep] * inv_det], axis=1)
    )
    depths = np.ascontiguousarray(z[keep])
    opac = np.ascontiguousarray(scene.opacities[idx[keep]])
    colors = np.ascontiguousarray(scene.colors[idx[keep]])

    rk = radius[keep]
    uk, vk = means[:, 0], means[:, 1]
    x0 = np.clip(np.floor(uk - rk) - 1, 0, width - 1).astype(np.int64)
    x1 = np.clip(np.ceil(uk + rk) + 1, 0, width - 1).astype(np.int64)
    y0 = np.clip(np.floor(vk - rk) - 1, 0, height - 1).astype(np.int64)
    y1 = np.clip(np.ceil(vk + rk) + 1, 0, height - 1).astype(np.int64)

    ts = config.tile_size
    n_tx = (width + ts - 1) // ts
    n_ty = (height + ts - 1) // ts
    tx0, tx1 = x0 // ts, x1 // ts
    ty0, ty1 = y0 // ts, y1 // ts

    counts = np.zeros(n_tx * n_ty, dtype=np.int64)
    _kernels.count_tile_hits(tx0, tx1, ty0, ty1, n_tx, counts)
    offsets = np.zeros(n_tx * n_ty + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    items = np.empty(int(offsets[-1]), dtype=np.int64)
    _kernels.fill_tile_lists(tx0, tx1, ty0, ty1, n_tx, offsets[:-1].copy(), items)

    return _Prepared(
        means=means,
        conics=conics,
        depths=depths,
        opacities=opac,
        colors=colors,
        orig_index=orig,
        tile_offsets=offsets,
        tile_items=items,
        culled=culled,
        non_psd=non_psd,
    )


def _blank_output(camera: Camera, stats: RenderStats) -> RenderOutput:
    h, w = camera.height, camera.width
    return RenderOutput(
        color=np.zeros((h, w, 3)),
        alpha=np.zeros((h, w)),
        depth=np.zeros((h, w)),
        idx_image=np.full((h, w), -1, dtype=np.int64),
        stats=stats,
    )


def rasterize(
    scene: GaussianScene,
    camera: Camera,
    config: RasterConfig | None = None,
) -> RenderOutput:
    """Render a Gaussian scene into color, alpha, depth, and index maps.

    Primitives are projected with the local affine (EWA) approximation,
    culled against the frustum, depth-sorted, and alpha-composited front
    to back per pixel: ``alpha_i = min(0.99, opacity_i * exp(-d^T C^-1 d / 2))``,
    contributions below ``alpha_cutoff`` skipped, traversal stopping once
    transmittance drops under ``transmittance_stop``.

    Primitives whose projected covariance is not positive definite even
    after regularization are skipped and counted in ``stats``.
    """
    config = config or RasterConfig()
    t0 = time.perf_counter()
    prep = _prepare(scene, camera, config)
    if prep is None:
        stats = RenderStats(culled=scene.count, skipped_non_psd=0)
        out = _blank_output(camera, stats)
        out.stats.elapsed_ms = (time.perf_counter() - t0) * 1e3
        return out

    h, w = camera.height, camera.width
    color = np.zeros((h, w, 3))
    alpha = np.zeros((h, w))
    depth = np.zeros((h, w))
    weight = np.zeros((h, w))
    best = np.empty((h, w), dtype=np.int64)
    _kernels.composite_tiles(
        prep.means,
        prep.conics,
        prep.depths,
        prep.opacities,
        prep.colors,
        prep.tile_offsets,
        prep.tile_items,
        h,
        w,
        config.tile_size,
        config.alpha_cutoff,
        config.transmittance_stop,
        config.footprint_radius_sigma**2,
        config.first_hit_index,
        True,
        color,
        alpha,
        depth,
        weight,
        best,
    )
    idx = np.where(
        (best >= 0) & (alpha >= config.contribution_floor),
        prep.orig_index[np.maximum(best, 0)],
        -1,
    )
    stats = RenderStats(culled=prep.culled, skipped_non_psd=prep.non_psd)
    stats.elapsed_ms = (time.perf_counter() - t0) * 1e3
    return RenderOutput(color=color, alpha=alpha, depth=depth, idx_image=idx, stats=stats)


def render_instance_mask(
    scene: GaussianScene,
    labels: LabelAssignment,
    camera: Camera,
    config: RasterConfig | None = None,
) -> InstanceMask2D:
    """Render per-Gaussian instance labels into a 2D instance mask.

    Runs the same front-to-back traversal as :func:`rasterize` but
    accumulates blending weight per instance ID (label 0 feeds a
    background bucket). A pixel takes the ID of the heaviest bucket when
    that bucket holds more than ``contribution_floor`` of the pixel's
    total weight; otherwise it is background. Ties break toward the
    smaller ID.
    """
    config = config or RasterConfig()
    labels.validate(scene)
    prep = _prepare(scene, camera, config)
    h, w = camera.height, camera.width
    mask = np.zeros((h, w), dtype=np.uint16)
    if prep is None:
        return mask
    lab = np.ascontiguousarray(np.asarray(labels.labels, dtype=np.int64)[prep.orig_index])
    _kernels.composite_label_tiles(
        prep.means,
        prep.conics,
        prep.opacities,
        lab,
        prep.tile_offsets,
        prep.tile_items,
        h,
        w,
        config.tile_size,
        config.alpha_cutoff,
        config.transmittance_stop,
        config.footprint_radius_sigma**2,
        config.contribution_floor,
        mask,
    )
    return mask


def render_idx_votes(
    scene: GaussianScene,
    camera: Camera,
    mask: InstanceMask2D,
    config: RasterConfig | None = None,
) -> VoteList:
    """Render the index map and group (index, mask ID) pairs into votes.

    Equivalent to ``rasterize`` followed by flattening ``idx_image`` with
    the mask, dropping pixels with index -1, and counting unique pairs --
    fused so callers never materialize color images just to vote.
    Background mask IDs are counted too; only unoccupied pixels are
    excluded.
    """
    config = config or RasterConfig()
    mask = validate_mask(mask, camera)
    prep = _prepare(scene, camera, config)
    if prep is None:
        return VoteList.empty()
    h, w = camera.height, camera.width
    alpha = np.zeros((h, w))
    weight = np.zeros((h, w))
    best = np.empty((h, w), dtype=np.int64)
    dummy_color = np.zeros((1, 1, 3))
    dummy_depth = np.zeros((1, 1))
    _kernels.composite_tiles(
        prep.means,
        prep.conics,
        prep.depths,
        prep.opacities,
        prep.colors,
        prep.tile_offsets,
        prep.tile_items,
        h,
        w,
        config.tile_size,
        config.alpha_cutoff,
        config.transmittance_stop,
        config.footprint_radius_sigma**2,
        config.first_hit_index,
        False,
        dummy_color,
        alpha,
        dummy_depth,
        weight,
        best,
    )
    occupied = (best >= 0) & (alpha >= config.contribution_floor)
    if not occupied.any():
        return VoteList.empty()
    gauss = prep.orig_index[best[occupied]]
    ids = mask[occupied].astype(np.int64)
    packed = gauss * 65536 + ids  # IDs are < 65536 by mask contract
    uniq, counts = np.unique(packed, return_counts=True)
    return VoteList(
        gaussian_index=uniq // 65536,
        instance_id=uniq % 65536,
        count=counts.astype(np.int64),
    )


def set_thread_count(n: int) -> int:
    """Set the compositor's thread count, clamped to what numba allows.

    Returns the thread count actually in effect. Pixel results never
    depend on it; only wall time does.
    """
    import numba

    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def warmup(config: RasterConfig | None = None) -> None:
    """Force JIT compilation of the compositing kernels on a tiny scene."""
    scene = GaussianScene(
        positions=np.array([[0.0, 0.0, 2.0], [0.1, 0.0, 2.5]]),
        scales=np.full((2, 3), 0.2),
        rotations=np.array([[1.0, 0.0, 0.0, 0.0]] * 2),
        opacities=np.array([0.9, 0.9]),
        colors=np.full((2, 3), 0.5),
    )
    cam = Camera(
        width=8,
        height=8,
        fx=8.0,
        fy=8.0,
        cx=4.0,
        cy=4.0,
        world_to_camera=np.eye(4),
    )
    cfg = config or RasterConfig(tile_size=4)
    rasterize(scene, cam, cfg)
    labels = LabelAssignment(labels=np.array([1, 2], dtype=np.int64), num_instances=2)
    render_instance_mask(scene, labels, cam, cfg)
    render_idx_votes(scene, cam, np.zeros((8, 8), dtype=np.uint16), cfg)
