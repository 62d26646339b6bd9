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

"""Tests for the SE(3) and projection primitives"""

import numpy as np
from scipy.spatial.transform import Rotation
from ..tools import LoggedTestCase, frustum_points, small_camera, street_pose
from flowloc.geometry import CameraIntrinsics, PerturbBounds, PoseSE3, h_project, h_project_jacobian, look_at, \
    perturb_pose, pose_compose, pose_error, pose_inverse, project_point, project_points, retract, se3_exp, se3_log, \
    transform_point
from flowloc.tools import BehindCameraError, ConfigError


def random_pose(rng):
    return PoseSE3(Rotation.from_rotvec(rng.uniform(-1.0, 1.0, 3)).as_quat(), rng.uniform(-5.0, 5.0, 3))


class TestPoseSE3(LoggedTestCase):
    """Pose algebra"""

    def setUp(self):
        super().setUp()
        self.rng = np.random.default_rng(42)

    def test_quaternion_is_normalized(self):
        """Rotations given as non unit quaternions are normalized"""
        pose = PoseSE3([0.0, 0.0, 0.0, 2.0], [1.0, 2.0, 3.0])
        self.assertTrue(np.allclose(pose.rotation, [0.0, 0.0, 0.0, 1.0]))
        self.assertEqual(pose, PoseSE3([0.0, 0.0, 0.0, 1.0], [1.0, 2.0, 3.0]))

    def test_zero_quaternion_refused(self):
        """A zero quaternion isn't a rotation"""
        with self.assertRaises(ValueError):
            PoseSE3([0.0, 0.0, 0.0, 0.0])

    def test_pose_is_immutable(self):
        """Pose arrays can't be modified in place"""
        pose = PoseSE3()
        with self.assertRaises(ValueError):
            pose.translation[0] = 1.0

    def test_matrix_round_trip(self):
        """from_matrix(matrix()) gives the same transform"""
        pose = random_pose(self.rng)
        self.assertTrue(np.allclose(PoseSE3.from_matrix(pose.matrix()).matrix(), pose.matrix()))

    def test_compose_with_inverse(self):
        """A pose composed with its inverse is the identity, on both sides"""
        for _ in range(10):
            pose = random_pose(self.rng)
            self.assertTrue(np.allclose(pose_compose(pose, pose_inverse(pose)).matrix(), np.eye(4)))
            self.assertTrue(np.allclose(pose_compose(pose_inverse(pose), pose).matrix(), np.eye(4)))

    def test_compose_order(self):
        """pose_compose(a, b) applies b first"""
        a, b = random_pose(self.rng), random_pose(self.rng)
        point = self.rng.normal(size=3)
        self.assertTrue(np.allclose(transform_point(pose_compose(a, b), point),
                                    transform_point(a, transform_point(b, point))))

    def test_camera_center(self):
        """The camera center maps to the camera frame origin"""
        pose = random_pose(self.rng)
        self.assertTrue(np.allclose(transform_point(pose, pose.camera_center()), np.zeros(3)))

    def test_exp_log_round_trip(self):
        """se3_log inverts se3_exp below pi"""
        for _ in range(20):
            xi = np.concatenate([self.rng.uniform(-1.0, 1.0, 3), self.rng.uniform(-10.0, 10.0, 3)])
            self.assertTrue(np.allclose(se3_log(se3_exp(xi)), xi, atol=1e-9))

    def test_exp_small_angle(self):
        """Tiny rotations use the series expansion without losing the translation"""
        xi = np.array([1e-12, 0.0, 0.0, 1.0, 2.0, 3.0])
        pose = se3_exp(xi)
        self.assertTrue(np.allclose(pose.translation, [1.0, 2.0, 3.0]))
        self.assertTrue(np.allclose(se3_log(pose), xi, atol=1e-12))

    def test_retract_zero(self):
        """A zero update keeps the pose"""
        pose = random_pose(self.rng)
        self.assertTrue(np.allclose(retract(pose, np.zeros(6)).matrix(), pose.matrix()))


class TestProjection(LoggedTestCase):
    """Pinhole projection and its Jacobian"""

    def setUp(self):
        super().setUp()
        self.K = small_camera()

    def test_principal_point(self):
        """Points on the optical axis land on the principal point"""
        self.assertTrue(np.allclose(project_point(self.K, [0.0, 0.0, 5.0]), [self.K.cx, self.K.cy]))

    def test_behind_camera(self):
        """Projecting a point with non positive depth raises"""
        with self.assertRaises(BehindCameraError):
            project_point(self.K, [1.0, 1.0, 0.0])
        with self.assertRaises(BehindCameraError):
            project_point(self.K, [1.0, 1.0, -3.0])

    def test_vectorized_projection(self):
        """Points behind the camera get nan coordinates and a false in_front flag"""
        uv, in_front = project_points(self.K, [[0.0, 0.0, 2.0], [0.0, 0.0, -2.0], [2.0, 1.0, 4.0]])
        self.assertEqual(in_front.tolist(), [True, False, True])
        self.assertTrue(np.all(np.isnan(uv[1])))
        self.assertTrue(np.allclose(uv[2], [self.K.fx * 0.5 + self.K.cx, self.K.fy * 0.25 + self.K.cy]))

    def test_h_project_composes(self):
        """h_project is the projection of the transformed point"""
        pose = street_pose(3.0, 1.0, 0.3)
        point = frustum_points(pose, 1, seed=3)[0]
        self.assertTrue(np.allclose(h_project(self.K, pose, point),
                                    project_point(self.K, transform_point(pose, point))))

    def test_jacobian_matches_finite_differences(self):
        """Analytic projection Jacobian agrees with central differences"""
        rng = np.random.default_rng(7)
        eps = 1e-6
        for trial in range(20):
            pose = street_pose(*rng.uniform(-5.0, 5.0, 2), heading=rng.uniform(-np.pi, np.pi))
            points = frustum_points(pose, 5, seed=trial)
            perturbed = retract(pose, rng.normal(0.0, 0.05, 6))
            _, in_front, jacobian = h_project_jacobian(self.K, perturbed, points)
            self.assertTrue(in_front.all())
            numeric = np.zeros_like(jacobian)
            for axis in range(6):
                step = np.zeros(6)
                step[axis] = eps
                plus, _ = project_points(self.K, transform_point(retract(perturbed, step), points))
                minus, _ = project_points(self.K, transform_point(retract(perturbed, -step), points))
                numeric[:, :, axis] = (plus - minus) / (2 * eps)
            scale = np.max(np.abs(jacobian))
            self.assertLess(np.max(np.abs(jacobian - numeric)) / scale, 1e-4)

    def test_jacobian_zero_behind_camera(self):
        """Rows of points behind the camera are zeroed"""
        _, in_front, jacobian = h_project_jacobian(self.K, PoseSE3(), [[0.0, 0.0, -1.0]])
        self.assertFalse(in_front[0])
        self.assertTrue(np.all(jacobian == 0))


class TestCameraIntrinsics(LoggedTestCase):
    """Camera validation"""

    def test_matrix(self):
        """K matrix layout"""
        K = small_camera()
        self.assertTrue(np.allclose(K.matrix, [[160.0, 0.0, 160.0], [0.0, 160.0, 60.0], [0.0, 0.0, 1.0]]))
        self.assertEqual(K.shape, (120, 320))

    def test_invalid(self):
        """Non positive sizes, focal lengths and an outside principal point are refused"""
        with self.assertRaises(ConfigError):
            CameraIntrinsics(width=0)
        with self.assertRaises(ConfigError):
            CameraIntrinsics(fx=-1.0)
        with self.assertRaises(ConfigError):
            CameraIntrinsics(cx=5000.0)


class TestPoseError(LoggedTestCase):
    """pose_error, perturb_pose and look_at"""

    def test_same_pose(self):
        """A pose has no error against itself"""
        pose = street_pose(2.0, 3.0, 0.5)
        self.assertEqual(pose_error(pose, pose), (0.0, 0.0))

    def test_known_errors(self):
        """Shifting the camera by one meter and rolling it by 10 degrees"""
        pose = street_pose()
        shifted = street_pose(1.0, 0.0)
        self.assertAlmostEqual(pose_error(pose, shifted)[1], 1.0)
        self.assertAlmostEqual(pose_error(pose, shifted)[0], 0.0)
        rolled = pose_compose(PoseSE3.from_rotation(Rotation.from_euler("z", 10.0, degrees=True)), pose)
        rot_deg, transl_m = pose_error(rolled, pose)
        self.assertAlmostEqual(rot_deg, 10.0)
        self.assertAlmostEqual(transl_m, 0.0)

    def test_look_at(self):
        """look_at puts the camera at position with the optical axis along forward and y pointing down"""
        pose = look_at([1.0, 2.0, 3.0], [0.0, 1.0, 0.0])
        self.assertTrue(np.allclose(pose.camera_center(), [1.0, 2.0, 3.0]))
        self.assertTrue(np.allclose(pose.rotation_matrix[2], [0.0, 1.0, 0.0]))
        self.assertTrue(np.allclose(pose.rotation_matrix[1], [0.0, 0.0, -1.0]))
        uv = h_project(small_camera(), pose, [1.0, 12.0, 3.0])
        self.assertTrue(np.allclose(uv, [160.0, 60.0]))

    def test_perturb_zero_bounds(self):
        """Zero bounds return the pose itself"""
        pose = street_pose()
        self.assertIs(perturb_pose(pose, PerturbBounds(0.0, 0.0), 3), pose)

    def test_perturb_deterministic_and_bounded(self):
        """Same seed, same disturbance; shifts and rotations stay within the per-axis bounds"""
        pose = street_pose(4.0, -2.0, 1.0)
        bounds = PerturbBounds()
        self.assertEqual(perturb_pose(pose, bounds, 11), perturb_pose(pose, bounds, 11))
        self.assertNotEqual(perturb_pose(pose, bounds, 11), perturb_pose(pose, bounds, 12))
        for seed in range(50):
            perturbed = perturb_pose(pose, bounds, seed)
            shift = perturbed.camera_center() - pose.camera_center()
            self.assertTrue(np.all(np.abs(shift) <= bounds.max_transl_per_axis + 1e-9))
            rot_deg, _ = pose_error(perturbed, pose)
            self.assertLessEqual(rot_deg, np.sqrt(3) * bounds.max_rot_per_axis + 1e-9)

    def test_negative_bounds(self):
        """Negative bounds are refused"""
        with self.assertRaises(ConfigError):
            PerturbBounds(-1.0, 1.0)
