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

"""Flow oracle: ground truth derived flows with a configurable error model

It stands in for a flow estimation network: the true frame poses replace the captured images.
"""

from dataclasses import dataclass
import logging
import numpy as np
from flowloc.depth import depth_flow, render_synthetic_depth
from flowloc.flow import FlowField, FlowTriplet, anchor_owners
from flowloc.frontend import BaseFlowProvider
from flowloc.tools import ConfigError, derive_rng

logger = logging.getLogger(__name__)

CURRENT_DEPTH, NEXT_DEPTH, IMAGE = range(3)


@dataclass(frozen=True)
class FlowNoiseModel:
    """Per-pixel error model of the oracle

    gaussian_sigma: isotropic Gaussian noise (pixels). outlier_fraction of the valid pixels get a vector of exactly
    outlier_magnitude in a uniform direction. dropout_fraction of all pixels are invalidated. bias_sigma draws one
    constant offset per frame and image to depth field. Image to image noise is scaled by image_flow_sigma_scale.
    """

    gaussian_sigma: float = 0.0
    outlier_fraction: float = 0.0
    outlier_magnitude: float = 0.0
    dropout_fraction: float = 0.0
    seed: int = 0
    bias_sigma: float = 0.0
    image_flow_sigma_scale: float = 1.0

    def __post_init__(self):
        for name in ("outlier_fraction", "dropout_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError("noise.{}".format(name), "must be in [0, 1]")
        for name in ("gaussian_sigma", "outlier_magnitude", "bias_sigma", "image_flow_sigma_scale"):
            if getattr(self, name) < 0:
                raise ConfigError("noise.{}".format(name), "must be non-negative")

    @property
    def is_noiseless(self):
        return self.gaussian_sigma == 0 and self.outlier_fraction == 0 and self.dropout_fraction == 0 and \
            self.bias_sigma == 0


def apply_noise(field, noise, frame, field_code):
    """Corrupt a flow field with the model, deterministically for (noise.seed, frame, field_code)"""
    if noise.is_noiseless:
        return field
    rng = derive_rng(noise.seed, frame, field_code)
    shape = field.shape
    sigma = noise.gaussian_sigma * (noise.image_flow_sigma_scale if field_code == IMAGE else 1.0)
    du = field.du + rng.normal(0.0, sigma, shape) if sigma > 0 else field.du.copy()
    dv = field.dv + rng.normal(0.0, sigma, shape) if sigma > 0 else field.dv.copy()
    if noise.bias_sigma > 0 and field_code != IMAGE:
        bias = rng.normal(0.0, noise.bias_sigma, 2)
        du += bias[0]
        dv += bias[1]
    if noise.outlier_fraction > 0:
        outliers = rng.random(shape) < noise.outlier_fraction
        angle = rng.uniform(0.0, 2 * np.pi, shape)
        du = np.where(outliers, noise.outlier_magnitude * np.cos(angle), du)
        dv = np.where(outliers, noise.outlier_magnitude * np.sin(angle), dv)
    valid = field.valid
    if noise.dropout_fraction > 0:
        valid = valid & (rng.random(shape) >= noise.dropout_fraction)
    return FlowField(du, dv, valid)


def visible_in_image(field, K):
    """Keep the pixels whose flow target lands inside the camera image"""
    v, u = np.mgrid[0:field.height, 0:field.width]
    x = u + field.du
    y = v + field.dv
    return field.masked((x > -0.5) & (x < K.width - 0.5) & (y > -0.5) & (y < K.height - 0.5))


def image_flow(gt_cur, gt_next, K):
    """Exact current to next image flow of the co-visible points, stored at their current image anchors"""
    shape = gt_cur.shape
    v, u = np.nonzero(gt_cur.valid)
    pixels = np.stack([u, v], axis=1)
    anchors, owns = anchor_owners(pixels, np.stack([gt_cur.du[v, u], gt_cur.dv[v, u]], axis=1), shape)
    owns &= gt_next.valid[v, u]
    au, av = anchors[owns, 0], anchors[owns, 1]
    du = np.zeros(shape)
    dv = np.zeros(shape)
    valid = np.zeros(shape, dtype=bool)
    du[av, au] = gt_next.du[v[owns], u[owns]] - gt_cur.du[v[owns], u[owns]]
    dv[av, au] = gt_next.dv[v[owns], u[owns]] - gt_cur.dv[v[owns], u[owns]]
    valid[av, au] = True
    return FlowField(du, dv, valid)


def ground_truth_flows(cloud, K, T_init, T_gt_cur, T_gt_next, depth=None):
    """Noiseless triplet; flows of a missing next frame are all invalid"""
    if depth is None:
        depth = render_synthetic_depth(cloud, K, T_init)
    gt_cur = visible_in_image(depth_flow(depth, cloud, K, T_init, T_gt_cur), K)
    if T_gt_next is None:
        return FlowTriplet(gt_cur, FlowField.invalid(depth.shape), FlowField.invalid(depth.shape))
    gt_next = visible_in_image(depth_flow(depth, cloud, K, T_init, T_gt_next), K)
    return FlowTriplet(gt_cur, gt_next, image_flow(gt_cur, gt_next, K))


def oracle_flows(cloud, K, T_init, T_gt_cur, T_gt_next, noise, frame=0, depth=None):
    """Ground truth flows of the frame pair corrupted by the noise model

    Each field draws from its own stream, so two pairs sharing a frame index reuse the same draws.
    """
    truth = ground_truth_flows(cloud, K, T_init, T_gt_cur, T_gt_next, depth)
    triplet = FlowTriplet(apply_noise(truth.f_c2d, noise, frame, CURRENT_DEPTH),
                          apply_noise(truth.f_n2d, noise, frame, NEXT_DEPTH),
                          apply_noise(truth.f_c2n, noise, frame, IMAGE))
    logger.debug("Oracle flows of frame {}: {} / {} / {} valid pixels".format(
        frame, int(triplet.f_c2d.valid.sum()), int(triplet.f_n2d.valid.sum()), int(triplet.f_c2n.valid.sum())))
    return triplet


class OracleFlowProvider(BaseFlowProvider):

    provider_name = "oracle"
    description = "Ground truth derived flows with a configurable error model"

    def __init__(self, noise=None):
        self.noise = FlowNoiseModel() if noise is None else noise

    def estimate(self, request):
        return oracle_flows(request.cloud, request.K, request.T_init, request.T_obs_cur, request.T_obs_next,
                            self.noise, frame=request.frame, depth=request.depth)
