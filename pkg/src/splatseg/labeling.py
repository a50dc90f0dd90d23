"""Instance label aggregation: fuse per-view 2D mask votes into 3D labels.

Every Gaussian collects, across all views, one vote per pixel (``render``
mode) or one vote per view (``centroid`` mode) for the instance ID it was
observed under. Its final label is the most-voted ID, ties broken toward
the smaller ID. Background (ID 0) votes count: a primitive seen mostly
over background correctly resolves to 0.

The histogram is sparse -- a sorted array of ``(gaussian, id)`` keys packed
into int64 -- because real scenes have millions of primitives and hundreds
of IDs, which makes the dense count matrix memory-hostile. The dense form
survives only as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, ContractError
from .geometry import Camera, camera_space
from .rasterize import RasterConfig, VoteList, rasterize, render_idx_votes
from .scene import (
    GaussianScene,
    InstanceMask2D,
    LabelAssignment,
    MAX_INSTANCE_ID,
    ViewSet,
    validate_mask,
)

TIE_BREAK = "smallest-id"

_PACK = 65536  # key = gaussian_index * _PACK + instance_id; valid since IDs <= 65535


@dataclass(frozen=True)
class AggregationConfig:
    """How votes are collected and turned into labels.

    ``render`` mode votes through the rendered per-pixel index map
    (occlusion-correct; the default). ``centroid`` mode projects each
    primitive's centre and looks the ID up in the mask directly, with a
    depth-buffer occlusion test: the vote is dropped when the pixel's
    rendered surface is nearer than the centre by more than
    ``centroid_depth_tolerance`` (relative).
    """

    mode: str = "render"
    min_votes: int = 1
    centroid_depth_tolerance: float = 0.01

    def __post_init__(self) -> None:
        if self.mode not in ("render", "centroid"):
            raise ConfigError(f"unknown aggregation mode {self.mode!r}")
        if self.min_votes < 1:
            raise ConfigError("min_votes must be at least 1")
        if self.centroid_depth_tolerance < 0:
            raise ConfigError("centroid_depth_tolerance must be non-negative")


class VoteHistogram:
    """Sparse (gaussian_index, instance_id) -> count accumulator.

    Internally a sorted unique int64 key array plus parallel counts;
    merging is a sorted reduction, so accumulation order never affects
    the result.
    """

    def __init__(self, num_gaussians: int) -> None:
        if num_gaussians < 0:
            raise ContractError("num_gaussians must be non-negative")
        self.num_gaussians = int(num_gaussians)
        self._keys = np.zeros(0, dtype=np.int64)
        self._counts = np.zeros(0, dtype=np.int64)

    @property
    def max_id_seen(self) -> int:
        """Largest instance ID holding at least one vote (0 if empty)."""
        if self._keys.size == 0:
            return 0
        return int((self._keys % _PACK).max())

    @property
    def total_votes(self) -> int:
        return int(self._counts.sum())

    def add(self, votes, view_id=None) -> "VoteHistogram":
        """Fold a view's votes in. ``votes`` is a :class:`VoteList` or any
        sequence of (gaussian_index, instance_id, count) triples.

        Raises :class:`ContractError` (naming ``view_id`` when given) on
        out-of-range indices or IDs.
        """
        if isinstance(votes, VoteList):
            gauss, ids, counts = votes.gaussian_index, votes.instance_id, votes.count
        else:
            arr = np.asarray(list(votes) if not isinstance(votes, np.ndarray) else votes)
            if arr.size == 0:
                return self
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise ContractError("votes must be (index, id, count) triples")
            gauss, ids, counts = arr[:, 0], arr[:, 1], arr[:, 2]
        gauss = np.asarray(gauss, dtype=np.int64)
        ids = np.asarray(ids, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        if gauss.size == 0:
            return self
        where = "" if view_id is None else f" (view {view_id})"
        if gauss.min() < 0 or gauss.max() >= self.num_gaussians:
            raise ContractError(
                f"gaussian index out of range [0, {self.num_gaussians}){where}"
            )
        if ids.min() < 0 or ids.max() > MAX_INSTANCE_ID:
            raise ContractError(f"instance ID out of range{where}")
        if counts.min() < 0:
            raise ContractError(f"negative vote count{where}")
        nz = counts > 0
        if not nz.all():
            gauss, ids, counts = gauss[nz], ids[nz], counts[nz]
        if gauss.size == 0:
            return self
        new_keys = gauss * _PACK + ids
        keys = np.concatenate([self._keys, new_keys])
        counts_all = np.concatenate([self._counts, counts])
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        counts_all = counts_all[order]
        uniq, starts = np.unique(keys, return_index=True)
        self._keys = uniq
        self._counts = np.add.reduceat(counts_all, starts)
        return self

    def merge(self, other: "VoteHistogram") -> "VoteHistogram":
        """Fold another histogram in (commutative, associative)."""
        if other.num_gaussians != self.num_gaussians:
            raise ContractError("histograms cover different scenes")
        return self.add(
            VoteList(
                gaussian_index=other._keys // _PACK,
                instance_id=other._keys % _PACK,
                count=other._counts.copy(),
            )
        )

    def items(self):
        """Triples (gaussian_index, instance_id, count), key-sorted."""
        return VoteList(
            gaussian_index=self._keys // _PACK,
            instance_id=self._keys % _PACK,
            count=self._counts.copy(),
        )

    def to_dense(self, num_ids: int | None = None) -> NDArray[np.int64]:
        """Materialize the dense count matrix (instances as columns 0..K).

        Intended for inspection and small scenes only.
        """
        k = self.max_id_seen if num_ids is None else num_ids
        dense = np.zeros((self.num_gaussians, k + 1), dtype=np.int64)
        if self._keys.size:
            dense[self._keys // _PACK, self._keys % _PACK] = self._counts
        return dense

    def argmax_labels(self, min_votes: int = 1) -> NDArray[np.int64]:
        """Per-Gaussian most-voted ID; ties toward the smaller ID.

        Gaussians whose total votes fall below ``min_votes`` get label 0.
        """
        labels = np.zeros(self.num_gaussians, dtype=np.int64)
        if self._keys.size == 0:
            return labels
        gauss = self._keys // _PACK
        ids = self._keys % _PACK
        starts = np.flatnonzero(np.r_[True, np.diff(gauss) != 0])
        totals = np.add.reduceat(self._counts, starts)
        seg_max = np.maximum.reduceat(self._counts, starts)
        seg_of = np.repeat(np.arange(len(starts)), np.diff(np.r_[starts, len(gauss)]))
        # first (i.e. smallest-ID, keys being sorted) position hitting the max
        pos = np.arange(len(gauss))
        hit = np.where(self._counts == seg_max[seg_of], pos, len(gauss))
        first_hit = np.minimum.reduceat(hit, starts)
        winner = ids[first_hit]
        winner[totals < min_votes] = 0
        labels[gauss[starts]] = winner
        return labels


def accumulate_view(hist: VoteHistogram, votes, view_id=None) -> VoteHistogram:
    """Add one view's votes to a histogram (in place; returns it)."""
    return hist.add(votes, view_id=view_id)


def _centroid_votes(
    scene: GaussianScene,
    camera: Camera,
    mask: InstanceMask2D,
    agg: AggregationConfig,
    raster_config: RasterConfig,
) -> VoteList:
    """One vote per primitive whose centre projects, unoccluded, into the view.

    Occlusion is tested against the rendered depth buffer: on an occupied
    pixel (alpha above the contribution floor) a centre deeper than the
    rendered depth by more than the relative tolerance does not vote.
    Unoccupied pixels never occlude.
    """
    render = rasterize(scene, camera, raster_config)
    cam = camera_space(camera, scene.positions)
    z = cam[:, 2]
    in_front = z > camera.near_plane
    safe_z = np.where(in_front, z, 1.0)
    u = camera.fx * cam[:, 0] / safe_z + camera.cx
    v = camera.fy * cam[:, 1] / safe_z + camera.cy
    valid = in_front & (u >= 0) & (u < camera.width) & (v >= 0) & (v < camera.height)
    if not valid.any():
        return VoteList.empty()
    px = np.floor(u[valid]).astype(np.int64)
    py = np.floor(v[valid]).astype(np.int64)
    depth_at = render.depth[py, px]
    occupied = render.alpha[py, px] >= raster_config.contribution_floor
    occluded = occupied & (z[valid] > depth_at * (1.0 + agg.centroid_depth_tolerance))
    voters = np.flatnonzero(valid)[~occluded]
    if voters.size == 0:
        return VoteList.empty()
    ids = mask[py[~occluded], px[~occluded]].astype(np.int64)
    return VoteList(
        gaussian_index=voters.astype(np.int64),
        instance_id=ids,
        count=np.ones(voters.size, dtype=np.int64),
    )


def aggregate_labels(
    scene: GaussianScene,
    views: ViewSet,
    masks: list[InstanceMask2D],
    config: AggregationConfig | None = None,
    raster_config: RasterConfig | None = None,
) -> LabelAssignment:
    """Fuse per-view instance masks into one label per Gaussian.

    For every view the scene is rendered and each occupied pixel casts a
    vote pairing its dominant primitive with the mask's ID there
    (``render`` mode), or each unoccluded projected centre casts one vote
    (``centroid`` mode). Labels are the per-primitive vote argmax with
    ties toward the smaller ID; primitives with fewer than ``min_votes``
    total votes stay 0.

    The result is independent of view order.
    """
    config = config or AggregationConfig()
    raster_config = raster_config or RasterConfig()
    if len(views) == 0:
        raise ContractError("T >= 1 required: need at least one view")
    if len(masks) != len(views):
        raise ContractError(f"{len(masks)} masks for {len(views)} views")
    views.resolution  # raises on mixed resolutions
    checked = [validate_mask(m, cam) for m, cam in zip(masks, views.cameras)]

    hist = VoteHistogram(scene.count)
    for (view_id, camera), mask in zip(views, checked):
        if config.mode == "render":
            votes = render_idx_votes(scene, camera, mask, raster_config)
        else:
            votes = _centroid_votes(scene, camera, mask, config, raster_config)
        hist.add(votes, view_id=view_id)

    labels = hist.argmax_labels(min_votes=config.min_votes)
    num_instances = int(labels.max()) if labels.size else 0
    assignment = LabelAssignment(
        labels=labels,
        num_instances=num_instances,
        provenance={
            "mode": config.mode,
            "views": str(len(views)),
            "tie_break": TIE_BREAK,
        },
    )
    assignment.validate(scene)
    return assignment


def label_agreement(
    a: LabelAssignment,
    b: LabelAssignment,
    restrict_to: NDArray[np.bool_] | None = None,
    nonzero_reference: bool = False,
) -> float:
    """Fraction of primitives with identical labels in ``a`` and ``b``.

    ``restrict_to`` limits the comparison to a boolean subset;
    ``nonzero_reference`` further limits it to primitives labeled nonzero
    in ``a``. An empty comparison set yields 1.0 (vacuous agreement).
    """
    la = np.asarray(a.labels)
    lb = np.asarray(b.labels)
    if la.shape != lb.shape:
        raise ContractError(f"label lengths differ: {la.shape} vs {lb.shape}")
    sel = np.ones(la.shape, dtype=bool)
    if restrict_to is not None:
        restrict_to = np.asarray(restrict_to, dtype=bool)
        if restrict_to.shape != la.shape:
            raise ContractError("restrict_to length must match labels")
        sel &= restrict_to
    if nonzero_reference:
        sel &= la != 0
    n = int(sel.sum())
    if n == 0:
        return 1.0
    return float(np.count_nonzero(la[sel] == lb[sel]) / n)
