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

"""Tests for the global map, its index and local crops"""

import numpy as np
from ..tools import LoggedTestCase, street_pose
from flowloc.geometry import look_at, pose_compose, pose_inverse, se3_exp, transform_point
from flowloc.maps import CropExtents, GlobalMap, PointCloud, aggregate_scans, crop_frame, crop_local, downsample, \
    in_crop
from flowloc.tools import ConfigError, LengthMismatchError


class TestPointCloud(LoggedTestCase):
    """Point cloud ids and lookups"""

    def test_default_ids(self):
        """Ids default to the point positions"""
        cloud = PointCloud(np.zeros((3, 3)))
        self.assertEqual(cloud.ids.tolist(), [0, 1, 2])
        self.assertEqual(len(cloud), 3)

    def test_empty(self):
        cloud = PointCloud()
        self.assertEqual(len(cloud), 0)
        self.assertEqual(cloud.points.shape, (0, 3))

    def test_lookup(self):
        """Points are found by id whatever the id order"""
        cloud = PointCloud([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]], ids=[30, 10, 20])
        self.assertTrue(np.allclose(cloud.lookup([20, 30]), [[2.0, 2.0, 2.0], [0.0, 0.0, 0.0]]))

    def test_lookup_unknown(self):
        cloud = PointCloud([[0.0, 0.0, 0.0]], ids=[4])
        with self.assertRaises(KeyError):
            cloud.lookup([5])

    def test_invalid(self):
        """Non finite points and mismatched ids are refused"""
        with self.assertRaises(ValueError):
            PointCloud([[0.0, np.nan, 0.0]])
        with self.assertRaises(LengthMismatchError):
            PointCloud(np.zeros((2, 3)), ids=[1])

    def test_subset_keeps_ids(self):
        cloud = PointCloud(np.arange(12.0).reshape(4, 3), ids=[5, 6, 7, 8])
        subset = cloud.subset([1, 3])
        self.assertEqual(subset.ids.tolist(), [6, 8])
        self.assertTrue(np.allclose(subset.lookup([8]), [[9.0, 10.0, 11.0]]))


class TestGlobalMap(LoggedTestCase):
    """Voxel index queries"""

    def test_query_box_superset(self):
        """Every point in the box is returned, sorted"""
        rng = np.random.default_rng(1)
        points = rng.uniform(-50.0, 50.0, (2000, 3))
        global_map = GlobalMap(PointCloud(points), voxel_size=4.0)
        lower, upper = np.array([-10.0, -5.0, -50.0]), np.array([20.0, 15.0, 50.0])
        found = global_map.query_box(lower, upper)
        inside = np.flatnonzero(np.all((points >= lower) & (points <= upper), axis=1))
        self.assertTrue(set(inside.tolist()) <= set(found.tolist()))
        self.assertTrue(np.all(np.diff(found) > 0))

    def test_query_empty_map(self):
        global_map = GlobalMap(PointCloud())
        self.assertEqual(len(global_map.query_box([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])), 0)

    def test_invalid_voxel_size(self):
        with self.assertRaises(ConfigError):
            GlobalMap(PointCloud(), voxel_size=0.0)


class TestCrop(LoggedTestCase):
    """Heading aligned local crops"""

    def setUp(self):
        super().setUp()
        self.points = np.array([
            [50.0, 0.0, 0.0],  # ahead
            [-5.0, 3.0, 0.0],  # slightly behind
            [-20.0, 0.0, 0.0],  # too far behind
            [50.0, 30.0, 0.0],  # too far on the left
            [99.0, -24.0, 5.0],  # front right corner
            [101.0, 0.0, 0.0],  # too far ahead
            [50.0, 0.0, 100.0],  # high above
        ])
        self.global_map = GlobalMap(PointCloud(self.points, ids=np.arange(7) + 100))

    def test_crop_along_x(self):
        """The box spans 100 m forward, 10 m backward and 25 m on each side, unbounded in height"""
        crop = crop_local(self.global_map, street_pose(), CropExtents())
        self.assertEqual(crop.ids.tolist(), [100, 101, 104, 106])

    def test_crop_follows_heading(self):
        """Turning the camera by 90 degrees turns the box"""
        crop = crop_local(self.global_map, street_pose(heading=np.pi / 2), CropExtents())
        self.assertEqual(crop.ids.tolist(), [101, 102])

    def test_crop_matches_predicate(self):
        """crop_local returns exactly the points of in_crop, in map order"""
        rng = np.random.default_rng(3)
        points = rng.uniform(-150.0, 150.0, (5000, 3))
        global_map = GlobalMap(PointCloud(points))
        pose = street_pose(10.0, -20.0, 0.7)
        crop = crop_local(global_map, pose, CropExtents(60.0, 5.0, 15.0))
        expected = np.flatnonzero(in_crop(points, pose, CropExtents(60.0, 5.0, 15.0)))
        self.assertEqual(crop.ids.tolist(), expected.tolist())

    def test_crop_frame_looking_down(self):
        """A camera looking straight down still gets a horizontal crop frame"""
        pose = look_at([0.0, 0.0, 10.0], [0.0, 0.0, -1.0], up=(1.0, 0.0, 0.0))
        _, forward, left = crop_frame(pose)
        self.assertAlmostEqual(forward[2], 0.0)
        self.assertAlmostEqual(np.linalg.norm(forward), 1.0)
        self.assertAlmostEqual(float(forward @ left), 0.0)

    def test_invalid_extents(self):
        with self.assertRaises(ConfigError):
            CropExtents(forward=0.0)


class TestDownsample(LoggedTestCase):
    """Voxel centroid downsampling"""

    def test_centroids(self):
        """Points sharing a voxel are replaced by their centroid"""
        global_map = GlobalMap(PointCloud([[0.01, 0.01, 0.01], [0.03, 0.05, 0.07], [0.55, 0.55, 0.55]]))
        result = downsample(global_map, 0.1)
        self.assertEqual(len(result), 2)
        self.assertTrue(np.allclose(result.cloud.points, [[0.02, 0.03, 0.04], [0.55, 0.55, 0.55]]))

    def test_one_point_per_voxel(self):
        """No two output points share a voxel"""
        rng = np.random.default_rng(5)
        result = downsample(GlobalMap(PointCloud(rng.uniform(0.0, 2.0, (3000, 3)))), 0.5)
        keys = np.floor(result.cloud.points / 0.5).astype(int)
        self.assertEqual(len(np.unique(keys, axis=0)), len(keys))
        self.assertLessEqual(len(result), 64)

    def test_idempotent(self):
        rng = np.random.default_rng(8)
        once = downsample(GlobalMap(PointCloud(rng.uniform(-3.0, 3.0, (5000, 3)))), 0.4)
        twice = downsample(once, 0.4)
        self.assertEqual(len(twice), len(once))
        np.testing.assert_allclose(np.sort(twice.cloud.points, axis=0), np.sort(once.cloud.points, axis=0))

    def test_empty(self):
        self.assertEqual(len(downsample(GlobalMap(PointCloud()), 0.1)), 0)

    def test_invalid_resolution(self):
        with self.assertRaises(ConfigError):
            downsample(GlobalMap(PointCloud()), 0.0)


class TestAggregateScans(LoggedTestCase):

    def test_back_to_world(self):
        """Sensor frame scans are mapped back to the world through the inverse of their pose"""
        rng = np.random.default_rng(2)
        world = [rng.uniform(-10.0, 10.0, (50, 3)) for _ in range(2)]
        poses = [street_pose(0.0, 0.0), street_pose(5.0, 2.0, 0.4)]
        scans = [PointCloud(transform_point(pose, points)) for pose, points in zip(poses, world)]
        result = aggregate_scans(scans, poses)
        self.assertTrue(np.allclose(result.cloud.points, np.concatenate(world)))

    def test_equivariance(self):
        """Poses pre-composed by G give the original aggregate moved by G"""
        rng = np.random.default_rng(3)
        scans = [PointCloud(rng.uniform(-10.0, 10.0, (40, 3))) for _ in range(3)]
        poses = [street_pose(0.0, 0.0), street_pose(4.0, -1.0, 0.3), street_pose(9.0, 2.0, -0.2)]
        G = se3_exp([0.2, -0.1, 0.7, 3.0, -5.0, 1.0])
        moved = aggregate_scans(scans, [pose_compose(pose, pose_inverse(G)) for pose in poses])
        expected = transform_point(G, aggregate_scans(scans, poses).cloud.points)
        np.testing.assert_allclose(moved.cloud.points, expected, rtol=0, atol=1e-9)

    def test_length_mismatch(self):
        with self.assertRaises(LengthMismatchError):
            aggregate_scans([PointCloud()], [])
