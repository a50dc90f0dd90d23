import numpy as np
import pytest

import oracles
import splatseg as ss
from splatseg import geometry
from splatseg.errors import ConfigError, ContractError

from helpers import identity_camera


def test_identity_extrinsics_camera_is_valid():
    cam = identity_camera(size=100, focal=100.0)
    assert cam.width == cam.height == 100
    assert np.allclose(cam.rotation, np.eye(3))
    assert np.allclose(cam.position, 0.0)


def test_point_on_optical_axis_projects_to_principal_point():
    cam = identity_camera(size=100, focal=100.0)
    for depth in (0.5, 1.0, 7.3):
        assert geometry.project_point(cam, np.array([0.0, 0.0, depth])) == (50.0, 50.0)


def test_point_behind_near_plane_projects_to_none():
    cam = identity_camera(size=100, focal=100.0)
    assert geometry.project_point(cam, np.array([0.0, 0.0, -1.0])) is None
    assert geometry.project_point(cam, np.array([0.0, 0.0, 0.0])) is None
    assert geometry.project_point(cam, np.array([0.0, 0.0, cam.near_plane])) is None


def test_pinhole_example_offset_point():
    cam = identity_camera(size=100, focal=100.0)
    u, v = geometry.project_point(cam, np.array([0.1, 0.0, 1.0]))
    assert u == pytest.approx(60.0, abs=1e-12)
    assert v == pytest.approx(50.0, abs=1e-12)


def test_project_points_matches_scalar_path():
    rng = np.random.default_rng(5)
    cam = identity_camera(size=64, focal=60.0)
    pts = rng.uniform(-1, 1, (50, 3))
    pts[:, 2] = rng.uniform(-0.5, 3.0, 50)
    uv, depth, valid = geometry.project_points(cam, pts)
    for i, p in enumerate(pts):
        scalar = geometry.project_point(cam, p)
        if scalar is None:
            assert not valid[i]
        else:
            assert valid[i]
            assert uv[i] == pytest.approx(scalar, abs=1e-12)
            assert depth[i] == pytest.approx(p[2], abs=1e-12)


def test_camera_space_applies_world_to_camera():
    rng = np.random.default_rng(2)
    cam = ss.Camera.look_at(
        eye=np.array([2.0, -1.0, 1.5]), target=np.zeros(3),
        width=32, height=32, fx=30.0, cx=16.0, cy=16.0,
    )
    pts = rng.uniform(-1, 1, (20, 3))
    expected = pts @ cam.rotation.T + cam.translation
    assert np.allclose(geometry.camera_space(cam, pts), expected, atol=1e-12)


def test_look_at_axis_passes_through_target():
    for az in np.linspace(0, 2 * np.pi, 9):
        eye = np.array([3 * np.cos(az), 3 * np.sin(az), 1.1])
        cam = ss.Camera.look_at(eye=eye, target=np.zeros(3), width=64, height=64, fx=58.0)
        # the camera-frame forward axis is the third row of the rotation
        forward = cam.rotation[2]
        closest = eye + forward * np.dot(-eye, forward)
        assert np.linalg.norm(closest) < 1e-6


def test_camera_rejects_bad_intrinsics():
    with pytest.raises(ConfigError):
        ss.Camera(width=0, height=10, fx=5.0, fy=5.0, cx=1.0, cy=1.0, world_to_camera=np.eye(4))
    with pytest.raises(ConfigError):
        ss.Camera(width=10, height=10, fx=-5.0, fy=5.0, cx=1.0, cy=1.0, world_to_camera=np.eye(4))
    with pytest.raises(ConfigError):
        ss.Camera(width=10, height=10, fx=5.0, fy=5.0, cx=1.0, cy=1.0, world_to_camera=np.eye(3))
    with pytest.raises(ConfigError):
        ss.Camera(width=10, height=10, fx=5.0, fy=5.0, cx=1.0, cy=1.0,
                  world_to_camera=np.diag([1.0, 2.0, 1.0, 1.0]))


def test_quaternion_identity_and_known_rotation():
    assert np.allclose(geometry.quaternion_to_rotation([1, 0, 0, 0]), np.eye(3))
    half = np.sqrt(0.5)
    rz90 = geometry.quaternion_to_rotation([half, 0.0, 0.0, half])
    assert np.allclose(rz90 @ np.array([1.0, 0, 0]), [0.0, 1.0, 0.0], atol=1e-12)


def test_quaternion_is_renormalized():
    q = np.array([2.0, 0.0, 0.0, 0.0])
    assert np.allclose(geometry.quaternion_to_rotation(q), np.eye(3), atol=1e-6)


def test_world_covariance_axis_aligned_scales():
    cov = geometry.world_covariance(np.array([1.0, 2.0, 3.0]), np.array([1.0, 0, 0, 0]))
    assert np.allclose(cov, np.diag([1.0, 4.0, 9.0]), atol=1e-12)


def test_world_covariance_z_rotation_swaps_xy_variances():
    half = np.sqrt(0.5)
    cov = geometry.world_covariance(np.array([1.0, 2.0, 3.0]), np.array([half, 0, 0, half]))
    assert np.allclose(cov, np.diag([4.0, 1.0, 9.0]), atol=1e-9)


def test_world_covariance_isotropic_under_any_rotation():
    rng = np.random.default_rng(3)
    for _ in range(10):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        cov = geometry.world_covariance(np.full(3, 0.7), q)
        assert np.allclose(cov, 0.49 * np.eye(3), atol=1e-9)


def test_world_covariances_batch_matches_scalar():
    rng = np.random.default_rng(4)
    scales = rng.uniform(0.1, 2.0, (8, 3))
    quats = rng.normal(size=(8, 4))
    quats /= np.linalg.norm(quats, axis=1, keepdims=True)
    batch = geometry.world_covariances(scales, quats)
    for i in range(8):
        assert np.allclose(batch[i], geometry.world_covariance(scales[i], quats[i]), atol=1e-12)
    assert np.allclose(batch, [oracles.world_cov(s, q) for s, q in zip(scales, quats)], atol=1e-9)


def test_projection_jacobian_matches_finite_differences():
    cam = identity_camera(size=64, focal=60.0)
    rng = np.random.default_rng(6)
    eps = 1e-6
    for _ in range(20):
        z = rng.uniform(0.8, 3.0)
        p = np.array([rng.uniform(-0.3, 0.3) * z, rng.uniform(-0.3, 0.3) * z, z])
        jac = geometry.projection_jacobian(cam, p)
        for axis in range(3):
            dp = np.zeros(3)
            dp[axis] = eps
            hi = np.array(geometry.project_point(cam, p + dp))
            lo = np.array(geometry.project_point(cam, p - dp))
            fd = (hi - lo) / (2 * eps)
            assert np.allclose(jac[:, axis], fd, atol=1e-4)


def test_projected_covariance_isotropic_on_axis():
    cam = identity_camera(size=64, focal=60.0)
    cov3d = 0.04 * np.eye(3)
    cov2d = geometry.project_covariance(cam, np.array([0.0, 0.0, 2.0]), cov3d)
    assert cov2d[0, 0] == pytest.approx(cov2d[1, 1], rel=1e-12)
    assert cov2d[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_projected_covariance_shrinks_quadratically_with_depth():
    cam = identity_camera(size=64, focal=60.0)
    cov3d = 0.04 * np.eye(3)
    near = geometry.project_covariance(cam, np.array([0.0, 0.0, 1.0]), cov3d, regularization=0.0)
    far = geometry.project_covariance(cam, np.array([0.0, 0.0, 2.0]), cov3d, regularization=0.0)
    assert far[0, 0] == pytest.approx(near[0, 0] / 4.0, rel=1e-9)


def test_projected_covariance_regularization_floor():
    cam = identity_camera(size=64, focal=60.0)
    cov2d = geometry.project_covariance(cam, np.array([0.0, 0.0, 2.0]), np.zeros((3, 3)))
    assert np.allclose(cov2d, 0.3 * np.eye(2), atol=1e-12)


def test_projected_covariance_rejects_points_behind_near_plane():
    cam = identity_camera(size=64, focal=60.0)
    with pytest.raises(ContractError):
        geometry.project_covariance(cam, np.array([0.0, 0.0, -1.0]), np.eye(3))


def test_project_covariances_batch_matches_scalar():
    cam = identity_camera(size=64, focal=60.0)
    rng = np.random.default_rng(8)
    pts = np.column_stack([rng.uniform(-0.5, 0.5, 6), rng.uniform(-0.5, 0.5, 6), rng.uniform(0.8, 3.0, 6)])
    covs = np.stack([oracles.world_cov(rng.uniform(0.1, 0.4, 3), [1, 0, 0, 0]) for _ in range(6)])
    batch = geometry.project_covariances(cam, pts, covs)
    for i in range(6):
        assert np.allclose(batch[i], geometry.project_covariance(cam, pts[i], covs[i]), atol=1e-12)
