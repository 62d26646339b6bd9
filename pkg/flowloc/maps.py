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

"""Global LiDAR map: aggregation, voxel downsampling, spatial index and local crops"""

from dataclasses import dataclass
import logging
import numpy as np
from flowloc import settings
from flowloc.geometry import pose_inverse, transform_point
from flowloc.tools import ConfigError, LengthMismatchError

logger = logging.getLogger(__name__)


class PointCloud:
    """World frame points with unique integer ids"""

    def __init__(self, points=None, ids=None):
        points = np.zeros((0, 3)) if points is None else np.asarray(points, dtype=np.float64)
        self.points = points.reshape(-1, 3)
        if ids is None:
            ids = np.arange(len(self.points), dtype=np.int64)
        self.ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        if len(self.ids) != len(self.points):
            raise LengthMismatchError("{} ids for {} points".format(len(self.ids), len(self.points)))
        if not np.all(np.isfinite(self.points)):
            raise ValueError("Point cloud has non finite coordinates")
        self._sorter = None

    def __len__(self):
        return len(self.points)

    def lookup(self, ids):
        """Points of the given ids (all must exist)"""
        if self._sorter is None:
            self._sorter = np.argsort(self.ids, kind="stable")
        ids = np.asarray(ids, dtype=np.int64)
        positions = np.searchsorted(self.ids, ids, sorter=self._sorter)
        indices = self._sorter[np.clip(positions, 0, max(len(self.ids) - 1, 0))]
        if len(ids) and (len(self.ids) == 0 or np.any(self.ids[indices] != ids)):
            raise KeyError("Unknown point ids")
        return self.points[indices]

    def subset(self, indices):
        return PointCloud(self.points[indices], self.ids[indices])

    def transformed(self, T):
        return PointCloud(transform_point(T, self.points), self.ids)


@dataclass(frozen=True)
class CropExtents:

    forward: float = settings.DEFAULT_CROP_FORWARD
    backward: float = settings.DEFAULT_CROP_BACKWARD
    lateral: float = settings.DEFAULT_CROP_LATERAL

    def __post_init__(self):
        for name in ("forward", "backward", "lateral"):
            if not getattr(self, name) > 0:
                raise ConfigError("crop.{}".format(name), "must be positive")

    @property
    def max_dimension(self):
        return max(self.forward, self.backward, self.lateral)


class GlobalMap:
    """A point cloud with a uniform voxel hash over it"""

    def __init__(self, cloud, voxel_size=None):
        if voxel_size is None:
            voxel_size = CropExtents().max_dimension / settings.INDEX_CELLS_PER_CROP
        if not voxel_size > 0:
            raise ConfigError("map.voxel_size", "must be positive")
        self.cloud = cloud
        self.voxel_size = float(voxel_size)
        self._build_index()

    def _build_index(self):
        keys = np.floor(self.cloud.points / self.voxel_size).astype(np.int64)
        if len(keys) == 0:
            self._cells = np.zeros((0, 3), dtype=np.int64)
            self._order = np.zeros(0, dtype=np.int64)
            self._starts = np.zeros(1, dtype=np.int64)
            return
        self._cells, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        self._order = np.argsort(inverse, kind="stable")
        counts = np.bincount(inverse, minlength=len(self._cells))
        self._starts = np.concatenate([[0], np.cumsum(counts)])
        logger.debug("Indexed {} points in {} cells of {} m".format(len(keys), len(self._cells), self.voxel_size))

    def __len__(self):
        return len(self.cloud)

    @property
    def cell_count(self):
        return len(self._cells)

    def query_box(self, lower, upper):
        """Indices of the points of every cell intersecting the [lower, upper] box (a superset of the box content)"""
        lower_cell = np.floor(np.asarray(lower) / self.voxel_size)
        upper_cell = np.floor(np.asarray(upper) / self.voxel_size)
        hit = np.all((self._cells >= lower_cell) & (self._cells <= upper_cell), axis=1)
        cells = np.flatnonzero(hit)
        if len(cells) == 0:
            return np.zeros(0, dtype=np.int64)
        chunks = [self._order[self._starts[c]:self._starts[c + 1]] for c in cells]
        return np.sort(np.concatenate(chunks))


def crop_frame(pose):
    """Camera center with the horizontal forward and left axes of the yaw-only crop frame"""
    center = pose.camera_center()
    optical_axis = pose.rotation_matrix[2]
    forward = np.array([optical_axis[0], optical_axis[1], 0.0])
    norm = np.linalg.norm(forward)
    if norm < 1e-9:
        # looking straight up or down
        forward = np.array([1.0, 0.0, 0.0])
    else:
        forward /= norm
    left = np.array([-forward[1], forward[0], 0.0])
    return center, forward, left


def in_crop(points, pose, extents):
    """Box predicate of crop_local over (N, 3) world points"""
    center, forward, left = crop_frame(pose)
    relative = np.asarray(points).reshape(-1, 3) - center
    along = relative @ forward
    across = relative @ left
    return (along >= -extents.backward) & (along <= extents.forward) & (np.abs(across) <= extents.lateral)


def crop_local(global_map, pose, extents):
    """Points of the map inside the heading-aligned box around the camera, keeping map order"""
    center, forward, left = crop_frame(pose)
    corners = np.array([center + a * forward + b * left
                        for a in (-extents.backward, extents.forward)
                        for b in (-extents.lateral, extents.lateral)])
    lower = corners.min(axis=0)
    upper = corners.max(axis=0)
    lower[2], upper[2] = -np.inf, np.inf
    candidates = global_map.query_box(lower, upper)
    inside = in_crop(global_map.cloud.points[candidates], pose, extents)
    crop = global_map.cloud.subset(candidates[inside])
    logger.debug("Cropped {} of {} points".format(len(crop), len(global_map)))
    return crop


def downsample(global_map, resolution=settings.DEFAULT_MAP_RESOLUTION):
    """Replace the points of each resolution-sized voxel by their centroid"""
    if not resolution > 0:
        raise ConfigError("map.resolution", "must be positive, got {}".format(resolution))
    points = global_map.cloud.points
    if len(points) == 0:
        return GlobalMap(PointCloud(), global_map.voxel_size)
    keys = np.floor(points / resolution).astype(np.int64)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    counts = np.bincount(inverse)
    centroids = np.stack([np.bincount(inverse, weights=points[:, axis]) for axis in range(3)], axis=1)
    centroids /= counts[:, None]
    logger.info("Downsampled {} points to {} at {} m".format(len(points), len(centroids), resolution))
    return GlobalMap(PointCloud(centroids), global_map.voxel_size)


def aggregate_scans(scans, poses, voxel_size=None):
    """Merge sensor frame scans into one world frame map. poses map world to sensor"""
    if len(scans) != len(poses):
        raise LengthMismatchError("{} scans but {} poses".format(len(scans), len(poses)))
    world_points = [transform_point(pose_inverse(pose), scan.points) for scan, pose in zip(scans, poses)]
    points = np.concatenate(world_points) if world_points else np.zeros((0, 3))
    return GlobalMap(PointCloud(points), voxel_size)
