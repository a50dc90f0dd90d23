"""Core data containers: Gaussian scenes, instance masks, label assignments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import ContractError
from .geometry import Camera

# Instance masks are plain uint16 rasters: mask[v, u] is the instance ID at
# pixel (u, v), with 0 meaning background. Keeping them as bare arrays (rather
# than a wrapper type) lets all of numpy/scipy apply directly.
InstanceMask2D = NDArray[np.uint16]

MAX_INSTANCE_ID = 65535


def validate_mask(mask, camera: Camera | None = None) -> InstanceMask2D:
    """Check an instance mask and return it as a contiguous uint16 array.

    Raises :class:`ContractError` on wrong rank, values above
    ``MAX_INSTANCE_ID``, or (if ``camera`` is given) a resolution mismatch.
    """
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ContractError(f"instance mask must be 2D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ContractError(f"instance mask must be integer-typed, got {arr.dtype}")
    if arr.size and (arr.min() < 0 or arr.max() > MAX_INSTANCE_ID):
        raise ContractError(
            f"instance IDs must lie in [0, {MAX_INSTANCE_ID}]"
        )
    if camera is not None and arr.shape != (camera.height, camera.width):
        raise ContractError(
            f"mask shape {arr.shape} does not match camera "
            f"{camera.height}x{camera.width}"
        )
    return np.ascontiguousarray(arr, dtype=np.uint16)


@dataclass
class GaussianScene:
    """An unordered set of anisotropic 3D Gaussian primitives.

    All per-primitive arrays use *activated* values: linear scales, opacity
    in [0, 1], unit quaternions ``(w, x, y, z)``, RGB colors in [0, 1].

    ``raw`` optionally holds the original on-disk vertex records so the
    scene can be re-saved without perturbing any stored attribute.
    """

    positions: NDArray[np.float64]
    scales: NDArray[np.float64]
    rotations: NDArray[np.float64]
    opacities: NDArray[np.float64]
    colors: NDArray[np.float64]
    raw: np.ndarray | None = None

    @property
    def count(self) -> int:
        return len(self.positions)

    def validate(self) -> None:
        """Raise :class:`ContractError` on any broken invariant."""
        n = self.count
        shapes = {
            "positions": (n, 3),
            "scales": (n, 3),
            "rotations": (n, 4),
            "opacities": (n,),
            "colors": (n, 3),
        }
        for name, want in shapes.items():
            arr = getattr(self, name)
            if arr.shape != want:
                raise ContractError(f"{name} must have shape {want}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ContractError(f"{name} contains non-finite values")
        if n == 0:
            return
        if self.scales.min() <= 0:
            raise ContractError("scales must be strictly positive")
        if self.opacities.min() < 0 or self.opacities.max() > 1:
            raise ContractError("opacities must lie in [0, 1]")
        norms = np.linalg.norm(self.rotations, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-6:
            raise ContractError("rotation quaternions must be unit length")
        if self.raw is not None and len(self.raw) != n:
            raise ContractError("raw record count does not match primitive count")

    @classmethod
    def empty(cls) -> "GaussianScene":
        return cls(
            positions=np.zeros((0, 3)),
            scales=np.zeros((0, 3)),
            rotations=np.zeros((0, 4)),
            opacities=np.zeros(0),
            colors=np.zeros((0, 3)),
        )


@dataclass
class LabelAssignment:
    """Per-primitive instance labels for a :class:`GaussianScene`.

    ``labels[i]`` is the instance ID of primitive ``i``; 0 means unassigned
    or background. Valid nonzero IDs are ``1 .. num_instances``.
    ``provenance`` records how the assignment was produced and travels with
    it through save/load.
    """

    labels: NDArray[np.int64]
    num_instances: int
    provenance: dict[str, str] = field(default_factory=dict)

    def validate(self, scene: GaussianScene | None = None) -> None:
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ContractError("labels must be a 1D array")
        if labels.size:
            if labels.min() < 0 or labels.max() > self.num_instances:
                raise ContractError(
                    f"labels must lie in [0, {self.num_instances}]"
                )
        if self.num_instances < 0 or self.num_instances > MAX_INSTANCE_ID:
            raise ContractError("num_instances out of range")
        if scene is not None and len(labels) != scene.count:
            raise ContractError(
                f"{len(labels)} labels for {scene.count} primitives"
            )


@dataclass
class ViewSet:
    """An ordered collection of cameras with stable integer view IDs."""

    cameras: list[Camera]
    ids: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.ids:
            self.ids = [cam.id for cam in self.cameras]
        if len(self.ids) != len(self.cameras):
            raise ContractError("one ID per camera required")
        if len(set(self.ids)) != len(self.ids):
            raise ContractError("view IDs must be unique")

    def __len__(self) -> int:
        return len(self.cameras)

    def __iter__(self):
        return iter(zip(self.ids, self.cameras))

    @property
    def resolution(self) -> tuple[int, int]:
        """Common ``(width, height)``; views with mixed sizes are an error."""
        if not self.cameras:
            raise ContractError("empty view set has no resolution")
        sizes = {(c.width, c.height) for c in self.cameras}
        if len(sizes) != 1:
            raise ContractError(f"views have mixed resolutions: {sorted(sizes)}")
        return next(iter(sizes))
