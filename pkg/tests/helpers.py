"""Shared scene/camera builders for the tests."""

from __future__ import annotations

import struct

import numpy as np

import splatseg as ss

PLY_PROPS = (
    "x", "y", "z",
    "scale_0", "scale_1", "scale_2",
    "rot_0", "rot_1", "rot_2", "rot_3",
    "opacity",
    "f_dc_0", "f_dc_1", "f_dc_2",
)


def make_scene(rng: np.random.Generator, n: int, opacity=(0.3, 0.99)) -> ss.GaussianScene:
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return ss.GaussianScene(
        positions=rng.uniform(-1, 1, (n, 3)),
        scales=rng.uniform(0.02, 0.25, (n, 3)),
        rotations=q,
        opacities=rng.uniform(*opacity, n),
        colors=rng.uniform(0, 1, (n, 3)),
    )


def orbit_camera(azimuth: float, *, radius=3.0, height=0.5, size=64, focal=58.0, cam_id=0) -> ss.Camera:
    eye = np.array([radius * np.cos(azimuth), radius * np.sin(azimuth), height])
    return ss.Camera.look_at(
        eye=eye,
        target=np.zeros(3),
        width=size,
        height=size,
        fx=focal,
        fy=focal,
        cx=size / 2,
        cy=size / 2,
        id=cam_id,
    )


def identity_camera(size=16, focal=None, cam_id=0) -> ss.Camera:
    focal = focal if focal is not None else float(size)
    return ss.Camera(
        width=size,
        height=size,
        fx=focal,
        fy=focal,
        cx=size / 2,
        cy=size / 2,
        world_to_camera=np.eye(4),
        id=cam_id,
    )


def single_gaussian(position=(0.0, 0.0, 2.0), scale=0.2, opacity=0.95, color=(1.0, 0.0, 0.0)) -> ss.GaussianScene:
    return ss.GaussianScene(
        positions=np.array([position], dtype=np.float64),
        scales=np.full((1, 3), scale, dtype=np.float64),
        rotations=np.array([[1.0, 0.0, 0.0, 0.0]]),
        opacities=np.array([float(opacity)]),
        colors=np.array([color], dtype=np.float64),
    )


def build_ply(columns: dict[str, np.ndarray], comments: list[str] | None = None) -> bytes:
    """Hand-assemble a binary_little_endian PLY from float32 columns."""
    names = list(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    header = ["ply", "format binary_little_endian 1.0"]
    for c in comments or []:
        header.append(f"comment {c}")
    header.append(f"element vertex {n}")
    header.extend(f"property float {name}" for name in names)
    header.append("end_header")
    body = bytearray()
    for i in range(n):
        for name in names:
            body += struct.pack("<f", float(columns[name][i]))
    return ("\n".join(header) + "\n").encode("ascii") + bytes(body)


def raw_gaussian_columns(
    n: int,
    rng: np.random.Generator | None = None,
    *,
    opacity_logit=None,
    f_dc=None,
    log_scale=None,
) -> dict[str, np.ndarray]:
    rng = rng or np.random.default_rng(0)
    cols = {}
    for name in ("x", "y", "z"):
        cols[name] = rng.uniform(-1, 1, n).astype(np.float32)
    for i in range(3):
        vals = rng.uniform(-3.5, -1.5, n) if log_scale is None else np.full(n, log_scale)
        cols[f"scale_{i}"] = vals.astype(np.float32)
    quats = rng.normal(size=(n, 4)).astype(np.float32) if n else np.zeros((0, 4), np.float32)
    for i in range(4):
        cols[f"rot_{i}"] = quats[:, i] if n else np.zeros(0, np.float32)
    if n and np.any(np.all(quats == 0, axis=1)):
        cols["rot_0"] = cols["rot_0"] + 1.0
    op = rng.uniform(-2, 2, n) if opacity_logit is None else np.full(n, opacity_logit)
    cols["opacity"] = op.astype(np.float32)
    for i in range(3):
        vals = rng.uniform(-1, 1, n) if f_dc is None else np.full(n, f_dc)
        cols[f"f_dc_{i}"] = vals.astype(np.float32)
    return cols
