"""Pinhole camera model and the projection math shared by renderer and labeler.

Conventions
-----------
* ``world_to_camera`` is a 4x4 rigid transform. Camera space has x right,
  y down, z forward; z is the depth used everywhere.
* A world point maps to image coordinates ``u = fx * x / z + cx`` and
  ``v = fy * y / z + cy``.
* Integer pixel ``(i, j)`` covers the half-open square
  ``[i, i+1) x [j, j+1)``, so a continuous point ``(u, v)`` belongs to
  pixel ``(floor(u), floor(v))`` and the centre of pixel ``(i, j)`` is
  ``(i + 0.5, j + 0.5)``.
* A projection is valid when ``z > near_plane`` and ``(u, v)`` lies in
  ``[0, W) x [0, H)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, ContractError

DEFAULT_NEAR_PLANE = 0.01

# Added to both diagonal entries of every projected 2D covariance. Keeps the
# footprint at least ~a pixel wide so tiny splats cannot vanish between
# pixel centres, and keeps the matrix invertible.
COVARIANCE_REGULARIZATION = 0.3


@dataclass(frozen=True, eq=False)
class Camera:
    """Pinhole camera with a world-to-camera rigid transform.

    Raises :class:`ConfigError` if the intrinsics are out of range, the
    last row of the transform is not ``(0, 0, 0, 1)`` (tolerance 1e-9), or
    the rotation block is not orthonormal within 1e-6.
    """

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    world_to_camera: NDArray[np.float64]
    near_plane: float = DEFAULT_NEAR_PLANE
    id: int = 0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ConfigError("camera resolution must be at least 1x1")
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigError("focal lengths fx, fy must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigError("principal point must lie inside the image")
        if self.near_plane <= 0:
            raise ConfigError("near_plane must be positive")
        m = np.asarray(self.world_to_camera, dtype=np.float64)
        if m.shape != (4, 4):
            raise ConfigError("world_to_camera must be a 4x4 matrix")
        if not np.all(np.isfinite(m)):
            raise ConfigError("world_to_camera contains non-finite values")
        if np.max(np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > 1e-9:
            raise ConfigError("last row of world_to_camera must be (0, 0, 0, 1)")
        r = m[:3, :3]
        if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-6:
            raise ConfigError("rotation block of world_to_camera is not orthonormal")
        if np.linalg.det(r) < 0:
            raise ConfigError("rotation block of world_to_camera is a reflection")
        object.__setattr__(self, "world_to_camera", np.ascontiguousarray(m))

    @property
    def rotation(self) -> NDArray[np.float64]:
        """World-to-camera rotation, shape (3, 3)."""
        return self.world_to_camera[:3, :3]

    @property
    def translation(self) -> NDArray[np.float64]:
        """World-to-camera translation, shape (3,)."""
        return self.world_to_camera[:3, 3]

    @property
    def position(self) -> NDArray[np.float64]:
        """Camera centre in world coordinates."""
        return -self.rotation.T @ self.translation

    @classmethod
    def look_at(
        cls,
        eye,
        target,
        up=(0.0, 0.0, 1.0),
        *,
        width: int,
        height: int,
        fx: float,
        fy: float | None = None,
        cx: float | None = None,
        cy: float | None = None,
        near_plane: float = DEFAULT_NEAR_PLANE,
        id: int = 0,
    ) -> "Camera":
        """Build a camera at ``eye`` whose optical axis passes through ``target``."""
        eye = np.asarray(eye, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        up = np.asarray(up, dtype=np.float64)
        forward = target - eye
        norm = np.linalg.norm(forward)
        if norm < 1e-12:
            raise ConfigError("look_at eye and target coincide")
        forward = forward / norm
        right = np.cross(forward, up)
        rnorm = np.linalg.norm(right)
        if rnorm < 1e-9:
            raise ConfigError("look_at view direction is parallel to up")
        right = right / rnorm
        down = np.cross(forward, right)
        rot = np.stack([right, down, forward])
        m = np.eye(4)
        m[:3, :3] = rot
        m[:3, 3] = -rot @ eye
        return cls(
            width=width,
            height=height,
            fx=fx,
            fy=fx if fy is None else fy,
            cx=width / 2.0 if cx is None else cx,
            cy=height / 2.0 if cy is None else cy,
            world_to_camera=m,
            near_plane=near_plane,
            id=id,
        )


def quaternion_to_rotation(q) -> NDArray[np.float64]:
    """Convert unit quaternions ``(w, x, y, z)`` to rotation matrices.

    Accepts shape ``(4,)`` or ``(N, 4)``; returns ``(3, 3)`` or ``(N, 3, 3)``.
    Inputs are normalized before conversion.
    """
    q = np.asarray(q, dtype=np.float64)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    norm = np.linalg.norm(q, axis=1, keepdims=True)
    if np.any(norm < 1e-12):
        raise ContractError("zero-norm quaternion")
    w, x, y, z = (q / norm).T
    rot = np.empty((len(q), 3, 3), dtype=np.float64)
    rot[:, 0, 0] = 1 - 2 * (y * y + z * z)
    rot[:, 0, 1] = 2 * (x * y - w * z)
    rot[:, 0, 2] = 2 * (x * z + w * y)
    rot[:, 1, 0] = 2 * (x * y + w * z)
    rot[:, 1, 1] = 1 - 2 * (x * x + z * z)
    rot[:, 1, 2] = 2 * (y * z - w * x)
    rot[:, 2, 0] = 2 * (x * z - w * y)
    rot[:, 2, 1] = 2 * (y * z + w * x)
    rot[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return rot[0] if single else rot


def camera_space(camera: Camera, points) -> NDArray[np.float64]:
    """Transform world points of shape (..., 3) into camera space."""
    pts = np.asarray(points, dtype=np.float64)
    return pts @ camera.rotation.T + camera.translation


def project_points(camera: Camera, points):
    """Project world points to continuous image coordinates.

    Parameters
    ----------
    points : array_like, shape (N, 3)

    Returns
    -------
    uv : ndarray, shape (N, 2)
        Image coordinates; meaningless where ``valid`` is False.
    depth : ndarray, shape (N,)
        Camera-space z.
    valid : ndarray of bool, shape (N,)
        True where ``z > near_plane`` and ``(u, v)`` falls inside the image.
    """
    cam = camera_space(camera, points)
    cam = np.atleast_2d(cam)
    z = cam[:, 2]
    in_front = z > camera.near_plane
    safe_z = np.where(in_front, z, 1.0)
    u = camera.fx * cam[:, 0] / safe_z + camera.cx
    v = camera.fy * cam[:, 1] / safe_z + camera.cy
    uv = np.stack([u, v], axis=1)
    valid = (
        in_front
        & (u >= 0.0)
        & (u < camera.width)
        & (v >= 0.0)
        & (v < camera.height)
    )
    return uv, z, valid


def project_point(camera: Camera, point):
    """Project one world point; returns ``(u, v)`` or None if invalid."""
    uv, _, valid = project_points(camera, np.asarray(point, dtype=np.float64)[None, :])
    if not valid[0]:
        return None
    return float(uv[0, 0]), float(uv[0, 1])


def world_covariances(scales, rotations) -> NDArray[np.float64]:
    """3D covariances ``R S S^T R^T`` from linear scales and quaternions.

    Accepts ``(3,)``/``(4,)`` or batched ``(N, 3)``/``(N, 4)``.
    """
    s = np.asarray(scales, dtype=np.float64)
    single = s.ndim == 1
    s = np.atleast_2d(s)
    rot = quaternion_to_rotation(rotations)
    if rot.ndim == 2:
        rot = rot[None]
    m = rot * s[:, None, :]  # columns of R scaled: R @ diag(s)
    cov = m @ np.swapaxes(m, 1, 2)
    return cov[0] if single else cov


def world_covariance(scale, rotation) -> NDArray[np.float64]:
    """Single-primitive convenience wrapper around :func:`world_covariances`."""
    return world_covariances(scale, rotation)


def projection_jacobian(camera: Camera, cam_point) -> NDArray[np.float64]:
    """Jacobian of the pinhole projection at a camera-space point, shape (2, 3)."""
    x, y, z = np.asarray(cam_point, dtype=np.float64)
    if z <= camera.near_plane:
        raise ContractError("point is behind the near plane")
    return np.array(
        [
            [camera.fx / z, 0.0, -camera.fx * x / (z * z)],
            [0.0, camera.fy / z, -camera.fy * y / (z * z)],
        ]
    )


def project_covariances(
    camera: Camera,
    positions,
    cov3d,
    regularization: float = COVARIANCE_REGULARIZATION,
) -> NDArray[np.float64]:
    """Project world covariances to 2D image covariances.

    Uses the local affine approximation ``J W Sigma W^T J^T`` with ``W`` the
    world-to-camera rotation and ``J`` the pinhole Jacobian at each centre,
    then adds ``regularization`` to both diagonal entries.

    All points must satisfy ``z > near_plane``; violating that is a
    :class:`ContractError`.
    """
    pos = np.asarray(positions, dtype=np.float64)
    single = pos.ndim == 1
    pos = np.atleast_2d(pos)
    cov = np.asarray(cov3d, dtype=np.float64)
    if cov.ndim == 2:
        cov = cov[None]
    cam = camera_space(camera, pos)
    z = cam[:, 2]
    if np.any(z <= camera.near_plane):
        bad = int(np.argmax(z <= camera.near_plane))
        raise ContractError(
            f"primitive {bad} is behind the near plane (z={z[bad]:.6g})"
        )
    n = len(pos)
    jac = np.zeros((n, 2, 3), dtype=np.float64)
    jac[:, 0, 0] = camera.fx / z
    jac[:, 0, 2] = -camera.fx * cam[:, 0] / (z * z)
    jac[:, 1, 1] = camera.fy / z
    jac[:, 1, 2] = -camera.fy * cam[:, 1] / (z * z)
    jw = jac @ camera.rotation
    out = jw @ cov @ np.swapaxes(jw, 1, 2)
    out[:, 0, 0] += regularization
    out[:, 1, 1] += regularization
    return out[0] if single else out


def project_covariance(camera: Camera, position, cov3d, regularization: float = COVARIANCE_REGULARIZATION):
    """Single-primitive convenience wrapper around :func:`project_covariances`."""
    return project_covariances(camera, position, cov3d, regularization)
