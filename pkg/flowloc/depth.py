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

"""Synthetic depth maps rendered from the LiDAR map and ground truth image to depth flows"""

from dataclasses import dataclass
import logging
import numpy as np
from flowloc import settings
from flowloc.flow import FlowField, round_pixels
from flowloc.geometry import project_points, transform_point

logger = logging.getLogger(__name__)


@dataclass
class DepthMap:
    """depth and source_id are only meaningful where valid; source_id is -1 elsewhere"""

    depth: np.ndarray
    valid: np.ndarray
    source_id: np.ndarray

    @classmethod
    def empty(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape, dtype=bool), np.full(shape, -1, dtype=np.int64))

    @property
    def shape(self):
        return self.valid.shape

    @property
    def width(self):
        return self.valid.shape[1]

    @property
    def height(self):
        return self.valid.shape[0]

    @property
    def valid_count(self):
        return int(self.valid.sum())

    def valid_pixels(self):
        """(u, v) integer coordinates of the valid pixels, in raster order"""
        v, u = np.nonzero(self.valid)
        return np.stack([u, v], axis=1)


def render_depth(cloud, K, T):
    """Z-buffered nearest pixel rasterization of the cloud seen from T

    Depth ties within ZBUFFER_TIE_EPSILON go to the smaller point id.
    """
    result = DepthMap.empty(K.shape)
    if len(cloud) == 0:
        return result
    p_cam = transform_point(T, cloud.points)
    uv, in_front = project_points(K, p_cam)
    z = p_cam[:, 2]
    pixels = round_pixels(np.where(in_front[:, None], uv, -1.0))
    inside = in_front & (pixels[:, 0] >= 0) & (pixels[:, 0] < K.width) & (pixels[:, 1] >= 0) & \
        (pixels[:, 1] < K.height)
    if not inside.any():
        return result
    pixel_index = pixels[inside, 1] * K.width + pixels[inside, 0]
    depth = z[inside]
    ids = cloud.ids[inside]

    order = np.lexsort((ids, depth, pixel_index))
    pixel_index, depth, ids = pixel_index[order], depth[order], ids[order]
    group_start = np.ones(len(order), dtype=bool)
    group_start[1:] = pixel_index[1:] != pixel_index[:-1]
    group = np.cumsum(group_start) - 1
    nearest = depth[group_start][group]
    contenders = depth <= nearest + settings.ZBUFFER_TIE_EPSILON

    pixel_index, depth, ids = pixel_index[contenders], depth[contenders], ids[contenders]
    order = np.lexsort((ids, pixel_index))
    pixel_index, depth, ids = pixel_index[order], depth[order], ids[order]
    winner = np.ones(len(order), dtype=bool)
    winner[1:] = pixel_index[1:] != pixel_index[:-1]

    result.depth.flat[pixel_index[winner]] = depth[winner]
    result.valid.flat[pixel_index[winner]] = True
    result.source_id.flat[pixel_index[winner]] = ids[winner]
    logger.debug("Rendered {} points to {} pixels".format(int(inside.sum()), result.valid_count))
    return result


def remove_occlusions(d, cone_aperture_deg=settings.DEFAULT_OCCLUSION_APERTURE_DEG,
                      window=settings.DEFAULT_OCCLUSION_WINDOW):
    """Invalidate pixels hidden behind a nearer neighbor of the window

    p is hidden by q when z_q < z_p and z_p - z_q > tan(aperture) * |p - q| * z_q.
    """
    height, width = d.shape
    slope = np.tan(np.radians(cone_aperture_deg))
    radius = window // 2
    depth = np.where(d.valid, d.depth, np.inf)
    padded = np.pad(depth, radius, constant_values=np.inf)
    occluded = np.zeros(d.shape, dtype=bool)
    for dv in range(-radius, radius + 1):
        for du in range(-radius, radius + 1):
            if du == 0 and dv == 0:
                continue
            neighbor = padded[radius + dv:radius + dv + height, radius + du:radius + du + width]
            distance = np.hypot(du, dv)
            with np.errstate(invalid="ignore"):
                occluded |= (neighbor < depth) & (depth - neighbor > slope * distance * neighbor)
    valid = d.valid & ~occluded
    logger.debug("Occlusion removal dropped {} of {} pixels".format(int((d.valid & occluded).sum()), d.valid_count))
    return DepthMap(np.where(valid, d.depth, 0.0), valid, np.where(valid, d.source_id, -1))


def render_synthetic_depth(cloud, K, T, cone_aperture_deg=settings.DEFAULT_OCCLUSION_APERTURE_DEG,
                           window=settings.DEFAULT_OCCLUSION_WINDOW):
    return remove_occlusions(render_depth(cloud, K, T), cone_aperture_deg, window)


def depth_flow(d, cloud, K, T_init, T_target):
    """Image to depth flow of an already rendered depth map toward a target pose

    Flow is h(K, T_target, P) - h(K, T_init, P) of the source point P of each valid pixel, stored at that pixel.
    """
    flow_du = np.zeros(d.shape)
    flow_dv = np.zeros(d.shape)
    valid = np.zeros(d.shape, dtype=bool)
    if d.valid_count == 0:
        return FlowField(flow_du, flow_dv, valid)
    points = cloud.lookup(d.source_id[d.valid])
    uv_init, _ = project_points(K, transform_point(T_init, points))
    uv_target, in_front = project_points(K, transform_point(T_target, points))
    v, u = np.nonzero(d.valid)
    flow_du[v, u] = np.where(in_front, uv_target[:, 0] - uv_init[:, 0], 0.0)
    flow_dv[v, u] = np.where(in_front, uv_target[:, 1] - uv_init[:, 1], 0.0)
    valid[v, u] = in_front
    return FlowField(flow_du, flow_dv, valid)


def gt_depth_flow(cloud, K, T_init, T_gt, cone_aperture_deg=settings.DEFAULT_OCCLUSION_APERTURE_DEG,
                  window=settings.DEFAULT_OCCLUSION_WINDOW):
    return depth_flow(render_synthetic_depth(cloud, K, T_init, cone_aperture_deg, window), cloud, K, T_init, T_gt)


def depth_map_points(d, cloud):
    """Source points of the valid pixels of d in raster order, with their (u, v) pixels"""
    return cloud.lookup(d.source_id[d.valid]), d.valid_pixels()
