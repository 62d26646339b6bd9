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

"""Flow fields and their algebra: warping, cross-modal consistency and endpoint errors

Image to depth flows live on the depth map lattice: the flow stored at depth pixel q tells where the
point rendered at q is seen in the camera image. Image to image flows live on the image lattice.
"""

from dataclasses import dataclass
import logging
import numpy as np
from flowloc.tools import DimensionMismatchError, EmptyMaskError

logger = logging.getLogger(__name__)


class FlowField:
    """Per-pixel (du, dv) displacement with a validity mask. Invalid pixels hold zeros"""

    def __init__(self, du, dv, valid):
        self.valid = np.asarray(valid, dtype=bool)
        self.du = np.where(self.valid, np.asarray(du, dtype=np.float64), 0.0)
        self.dv = np.where(self.valid, np.asarray(dv, dtype=np.float64), 0.0)
        if not (self.du.shape == self.dv.shape == self.valid.shape) or self.valid.ndim != 2:
            raise DimensionMismatchError("du {}, dv {} and valid {} must share a 2D shape".format(
                self.du.shape, self.dv.shape, self.valid.shape))
        if not (np.all(np.isfinite(self.du)) and np.all(np.isfinite(self.dv))):
            raise ValueError("Flow field holds non finite displacements on its valid mask")

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape), np.ones(shape, dtype=bool))

    @classmethod
    def invalid(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape, dtype=bool))

    @classmethod
    def from_vectors(cls, vectors, valid):
        vectors = np.asarray(vectors, dtype=np.float64)
        return cls(vectors[..., 0], vectors[..., 1], valid)

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
    def vectors(self):
        return np.stack([self.du, self.dv], axis=-1)

    def masked(self, keep):
        return FlowField(self.du, self.dv, self.valid & keep)

    def shifted(self, offset):
        """Same field with a constant (du, dv) added on the valid mask"""
        return FlowField(self.du + offset[0], self.dv + offset[1], self.valid)

    def __sub__(self, other):
        check_dimensions(self, other)
        return FlowField(self.du - other.du, self.dv - other.dv, self.valid & other.valid)

    def __add__(self, other):
        check_dimensions(self, other)
        return FlowField(self.du + other.du, self.dv + other.dv, self.valid & other.valid)


def check_dimensions(*fields):
    shapes = {f.shape for f in fields}
    if len(shapes) > 1:
        raise DimensionMismatchError("Fields of different sizes: {}".format(sorted(shapes)))


@dataclass(frozen=True)
class FlowTriplet:
    """Current image to depth, next image to depth and current to next image flows"""

    f_c2d: FlowField
    f_n2d: FlowField
    f_c2n: FlowField

    def __post_init__(self):
        check_dimensions(self.f_c2d, self.f_n2d, self.f_c2n)

    @property
    def shape(self):
        return self.f_c2d.shape


def round_pixels(uv):
    """Nearest lattice pixel of real coordinates, halves rounded up"""
    return np.floor(np.asarray(uv) + 0.5).astype(np.int64)


def lattice_coordinates(shape):
    v, u = np.mgrid[0:shape[0], 0:shape[1]]
    return u, v


def anchor_owners(pixels, flows, shape):
    """Anchor depth pixels in the image and resolve shared anchors

    pixels are (N, 2) integer (u, v) depth lattice positions, flows their (N, 2) displacements.
    Returns (anchors, owns): each anchor is round(pixel + flow); owns is false for anchors outside the image
    and for every pixel but the first one in raster order landing on a shared anchor.
    """
    height, width = shape
    pixels = np.asarray(pixels, dtype=np.int64).reshape(-1, 2)
    anchors = round_pixels(pixels + np.asarray(flows).reshape(-1, 2))
    inside = (anchors[:, 0] >= 0) & (anchors[:, 0] < width) & (anchors[:, 1] >= 0) & (anchors[:, 1] < height)
    owns = np.zeros(len(pixels), dtype=bool)
    candidates = np.flatnonzero(inside)
    if len(candidates):
        raster = pixels[candidates, 1] * width + pixels[candidates, 0]
        anchor_index = anchors[candidates, 1] * width + anchors[candidates, 0]
        order = np.lexsort((raster, anchor_index))
        first = np.ones(len(order), dtype=bool)
        first[1:] = anchor_index[order][1:] != anchor_index[order][:-1]
        owns[candidates[order[first]]] = True
    return anchors, owns


def back_pointer_field(f_depth):
    """Image lattice field pointing from each owned anchor back to its depth pixel"""
    u, v = lattice_coordinates(f_depth.shape)
    valid = f_depth.valid
    pixels = np.stack([u[valid], v[valid]], axis=1)
    anchors, owns = anchor_owners(pixels, np.stack([f_depth.du[valid], f_depth.dv[valid]], axis=1), f_depth.shape)
    du = np.zeros(f_depth.shape)
    dv = np.zeros(f_depth.shape)
    back_valid = np.zeros(f_depth.shape, dtype=bool)
    au, av = anchors[owns, 0], anchors[owns, 1]
    du[av, au] = pixels[owns, 0] - au
    dv[av, au] = pixels[owns, 1] - av
    back_valid[av, au] = True
    return FlowField(du, dv, back_valid)


def warp(field, base):
    """Backward bilinear warp: output(p) = field(p + base(p))

    Output is invalid where base is invalid, the sample point leaves the image or a corner with non-zero
    interpolation weight is invalid in field.
    """
    check_dimensions(field, base)
    height, width = base.shape
    u, v = lattice_coordinates(base.shape)
    x = u + base.du
    y = v + base.dv
    inside = base.valid & (x >= 0) & (x <= width - 1) & (y >= 0) & (y <= height - 1)
    x = np.where(inside, x, 0.0)
    y = np.where(inside, y, 0.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    wx = x - x0
    wy = y - y0
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)

    du = np.zeros(base.shape)
    dv = np.zeros(base.shape)
    valid = inside.copy()
    for xs, ys, weight in ((x0, y0, (1 - wx) * (1 - wy)), (x1, y0, wx * (1 - wy)),
                           (x0, y1, (1 - wx) * wy), (x1, y1, wx * wy)):
        used = weight > 0
        valid &= ~used | field.valid[ys, xs]
        du += weight * field.du[ys, xs]
        dv += weight * field.dv[ys, xs]
    return FlowField(du, dv, valid)


def consistency_residual(triplet):
    """Warped difference of the two image to depth flows minus the image to image flow"""
    difference = triplet.f_n2d - triplet.f_c2d
    equivalent = warp(difference, back_pointer_field(triplet.f_c2d))
    return equivalent - triplet.f_c2n


def masked_mean_norm(field):
    if not field.valid.any():
        raise EmptyMaskError("No valid pixel to average over")
    return float(np.mean(np.hypot(field.du[field.valid], field.dv[field.valid])))


def epe(f_pre, f_gt):
    """Mean endpoint error over pixels valid in both fields"""
    check_dimensions(f_pre, f_gt)
    return masked_mean_norm(f_pre - f_gt)


def total_loss(f_c2d_pre, f_c2d_gt, f_n2d_pre, f_n2d_gt, triplet):
    return epe(f_c2d_pre, f_c2d_gt) + epe(f_n2d_pre, f_n2d_gt) + masked_mean_norm(consistency_residual(triplet))
