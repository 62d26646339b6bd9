# -*- coding: utf-8 -*-
# Copyright (C) 2024 The flowloc developers
#
# This program is free software; you can redistribute it and/or modify it under
# the terms of the GNU General Public License as published by the Free Software
# Foundation; version 3.
#
# This program is distributed in the hope that it will be useful, but WITHOUT
# ANY WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS
# FOR A PARTICULAR PURPOSE.  See the GNU General Public License for more
# details.
#
# You should have received a copy of the GNU General Public License along with
# this program; if not, write to the Free Software Foundation, Inc.,
# 51 Franklin Street, Fifth Floor, Boston, MA 02110-1301 USA

"""SE(3) pose algebra, pinhole camera and projection primitives

Poses map world points into the camera frame: p_cam = R p_world + t.
The camera frame is x right, y down, z forward.
"""

from dataclasses import dataclass, field
import logging
import numpy as np
from scipy.spatial.transform import Rotation
from flowloc import settings
from flowloc.tools import BehindCameraError, ConfigError, derive_rng

logger = logging.getLogger(__name__)


def _frozen(array, shape):
    array = np.array(array, dtype=np.float64).reshape(shape)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class PoseSE3:
    """Rigid world to camera transform. rotation is a unit quaternion in (x, y, z, w) order"""

    rotation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0, 1.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        quat = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        norm = np.linalg.norm(quat)
        if not np.isfinite(norm) or norm == 0:
            raise ValueError("Invalid rotation quaternion {}".format(quat))
        object.__setattr__(self, "rotation", _frozen(quat / norm, 4))
        object.__setattr__(self, "translation", _frozen(self.translation, 3))

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_rotation(cls, rotation, translation=(0.0, 0.0, 0.0)):
        """Build from a scipy Rotation"""
        return cls(rotation.as_quat(), translation)

    @classmethod
    def from_matrix(cls, matrix):
        """Build from a 3x4 or 4x4 [R|t] matrix"""
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(Rotation.from_matrix(matrix[:3, :3]).as_quat(), matrix[:3, 3])

    @property
    def rot(self):
        return Rotation.from_quat(self.rotation)

    @property
    def rotation_matrix(self):
        return self.rot.as_matrix()

    def matrix(self):
        result = np.eye(4)
        result[:3, :3] = self.rotation_matrix
        result[:3, 3] = self.translation
        return result

    def camera_center(self):
        return -self.rotation_matrix.T @ self.translation

    def __eq__(self, other):
        if not isinstance(other, PoseSE3):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(self.translation, other.translation)

    def __hash__(self):
        return hash((self.rotation.tobytes(), self.translation.tobytes()))

    def __repr__(self):
        return "PoseSE3(rotation={}, translation={})".format(self.rotation.tolist(), self.translation.tolist())


@dataclass(frozen=True)
class CameraIntrinsics:

    fx: float = settings.DEFAULT_FOCAL
    fy: float = settings.DEFAULT_FOCAL
    cx: float = settings.DEFAULT_IMAGE_WIDTH / 2
    cy: float = settings.DEFAULT_IMAGE_HEIGHT / 2
    width: int = settings.DEFAULT_IMAGE_WIDTH
    height: int = settings.DEFAULT_IMAGE_HEIGHT

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("camera", "image size must be positive, got {}x{}".format(self.width, self.height))
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("camera", "focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ConfigError("camera", "principal point ({}, {}) outside the image".format(self.cx, self.cy))

    @property
    def matrix(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def shape(self):
        return (self.height, self.width)


@dataclass(frozen=True)
class PerturbBounds:

    max_transl_per_axis: float = settings.DEFAULT_MAX_TRANSL_PER_AXIS
    max_rot_per_axis: float = settings.DEFAULT_MAX_ROT_PER_AXIS

    def __post_init__(self):
        if self.max_transl_per_axis < 0 or self.max_rot_per_axis < 0:
            raise ConfigError("perturb", "bounds must be non-negative")

    def is_zero(self):
        return self.max_transl_per_axis == 0 and self.max_rot_per_axis == 0


def transform_point(T, p_world):
    """Map world points, a single (3,) vector or a (N, 3) array, into the camera frame"""
    p_world = np.asarray(p_world, dtype=np.float64)
    return p_world @ T.rotation_matrix.T + T.translation


def project_point(K, p_cam):
    """Pinhole projection of a single camera frame point, no bounds clamping"""
    x, y, z = np.asarray(p_cam, dtype=np.float64)
    if not z > 0:
        raise BehindCameraError("Point {} has non-positive depth".format((x, y, z)))
    return np.array([K.fx * x / z + K.cx, K.fy * y / z + K.cy])


def project_points(K, p_cam):
    """Vectorized projection. Returns (uv, in_front); uv rows of points with z <= 0 are nan"""
    p_cam = np.asarray(p_cam, dtype=np.float64).reshape(-1, 3)
    z = p_cam[:, 2]
    in_front = z > 0
    uv = np.full((len(p_cam), 2), np.nan)
    zf = z[in_front]
    uv[in_front, 0] = K.fx * p_cam[in_front, 0] / zf + K.cx
    uv[in_front, 1] = K.fy * p_cam[in_front, 1] / zf + K.cy
    return uv, in_front


def h_project(K, T, p_world):
    return project_point(K, transform_point(T, p_world))


def skew(vectors):
    """Cross product matrices of a (3,) vector or a (N, 3) array"""
    vectors = np.asarray(vectors, dtype=np.float64)
    result = np.zeros(vectors.shape[:-1] + (3, 3))
    x, y, z = vectors[..., 0], vectors[..., 1], vectors[..., 2]
    result[..., 0, 1], result[..., 0, 2] = -z, y
    result[..., 1, 0], result[..., 1, 2] = z, -x
    result[..., 2, 0], result[..., 2, 1] = -y, x
    return result


def h_project_jacobian(K, T, p_world):
    """Projection of world points under T with the derivative w.r.t. a right perturbation T.exp(xi)

    Returns (uv, in_front, J) with J of shape (N, 2, 6), columns ordered as xi = (omega, v).
    """
    p_world = np.asarray(p_world, dtype=np.float64).reshape(-1, 3)
    R = T.rotation_matrix
    p_cam = transform_point(T, p_world)
    uv, in_front = project_points(K, p_cam)

    x, y = p_cam[:, 0], p_cam[:, 1]
    z = np.where(in_front, p_cam[:, 2], 1.0)
    d_proj = np.zeros((len(p_world), 2, 3))
    d_proj[:, 0, 0] = K.fx / z
    d_proj[:, 0, 2] = -K.fx * x / z ** 2
    d_proj[:, 1, 1] = K.fy / z
    d_proj[:, 1, 2] = -K.fy * y / z ** 2

    # d p_cam / d xi = R [-[p]x | I]
    d_point = np.concatenate([-R @ skew(p_world), np.broadcast_to(R, (len(p_world), 3, 3))], axis=2)
    jacobian = d_proj @ d_point
    jacobian[~in_front] = 0.0
    return uv, in_front, jacobian


def pose_compose(a, b):
    """a after b: p -> a(b(p))"""
    rotation = a.rot * b.rot
    return PoseSE3(rotation.as_quat(), a.rotation_matrix @ b.translation + a.translation)


def pose_inverse(a):
    inverse = a.rot.inv()
    return PoseSE3(inverse.as_quat(), -(inverse.as_matrix() @ a.translation))


def se3_exp(xi):
    """Exponential map of a twist xi = (omega, v)"""
    xi = np.asarray(xi, dtype=np.float64).reshape(6)
    omega, v = xi[:3], xi[3:]
    theta = np.linalg.norm(omega)
    W = skew(omega)
    W2 = W @ W
    if theta < settings.SMALL_ANGLE_THRESHOLD:
        V = np.eye(3) + W / 2 + W2 / 6
    else:
        half = theta / 2
        V = np.eye(3) + (2 * np.sin(half) ** 2 / theta ** 2) * W + ((theta - np.sin(theta)) / theta ** 3) * W2
    return PoseSE3(Rotation.from_rotvec(omega).as_quat(), V @ v)


def se3_log(T):
    """Inverse of se3_exp for rotation angles below pi"""
    omega = T.rot.as_rotvec()
    theta = np.linalg.norm(omega)
    W = skew(omega)
    W2 = W @ W
    if theta < settings.SMALL_ANGLE_THRESHOLD:
        V_inv = np.eye(3) - W / 2 + W2 / 12
    else:
        half = theta / 2
        V_inv = np.eye(3) - W / 2 + ((1 - half / np.tan(half)) / theta ** 2) * W2
    return np.concatenate([omega, V_inv @ T.translation])


def retract(T, xi):
    """Right-multiplicative update T.exp(xi)"""
    return pose_compose(T, se3_exp(xi))


def pose_error(a, b):
    """(geodesic rotation angle in degrees, distance between camera centers in meters)"""
    rot_deg = np.degrees((a.rot * b.rot.inv()).magnitude())
    transl_m = np.linalg.norm(a.camera_center() - b.camera_center())
    return float(rot_deg), float(transl_m)


def perturb_pose(T, bounds, seed):
    """Random disturbance of T: uniform per-axis shift of the camera center and uniform per-axis rotation vector

    seed is an integer or a numpy Generator to draw from.
    """
    if bounds.is_zero():
        return T
    rng = derive_rng(seed)
    center = T.camera_center() + rng.uniform(-bounds.max_transl_per_axis, bounds.max_transl_per_axis, 3)
    delta = Rotation.from_rotvec(np.radians(rng.uniform(-bounds.max_rot_per_axis, bounds.max_rot_per_axis, 3)))
    rotation = delta * T.rot
    return PoseSE3(rotation.as_quat(), -(rotation.as_matrix() @ center))


def look_at(position, forward, up=(0.0, 0.0, 1.0)):
    """World to camera pose of a camera at position looking along forward, image y pointing away from up"""
    position = np.asarray(position, dtype=np.float64)
    z_axis = np.asarray(forward, dtype=np.float64)
    z_axis = z_axis / np.linalg.norm(z_axis)
    x_axis = np.cross(z_axis, np.asarray(up, dtype=np.float64))
    x_axis = x_axis / np.linalg.norm(x_axis)
    y_axis = np.cross(z_axis, x_axis)
    R = np.stack([x_axis, y_axis, z_axis])
    return PoseSE3(Rotation.from_matrix(R).as_quat(), -(R @ position))
