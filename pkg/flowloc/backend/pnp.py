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

"""2D-3D correspondences from image to depth flows and robust PnP"""

from collections import namedtuple
from dataclasses import dataclass
import logging
import numpy as np
from flowloc import settings
from flowloc.backend import Term, levenberg_marquardt
from flowloc.geometry import h_project_jacobian
from flowloc.tools import ConfigError, DegenerateConfigurationError, DimensionMismatchError, \
    TooFewCorrespondencesError, derive_rng, stride_subsample

logger = logging.getLogger(__name__)

MINIMAL_SAMPLE = 4

Correspondence = namedtuple("Correspondence", ["p_world", "x_img", "weight"])
PoseEstimate = namedtuple("PoseEstimate", ["pose", "converged", "initial_cost", "final_cost", "iterations"])
RansacResult = namedtuple("RansacResult", ["pose", "inliers", "success", "hypotheses", "inlier_rmse"])


class CorrespondenceSet:
    """Arrays of 3D world points, observed pixels and weights; iterates as Correspondence tuples"""

    def __init__(self, points=None, pixels=None, weights=None, depth_pixels=None):
        self.points = np.zeros((0, 3)) if points is None else np.asarray(points, dtype=np.float64).reshape(-1, 3)
        self.pixels = np.zeros((0, 2)) if pixels is None else np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
        if weights is None:
            weights = np.ones(len(self.points))
        self.weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if not (len(self.points) == len(self.pixels) == len(self.weights)):
            raise DimensionMismatchError("{} points, {} pixels and {} weights".format(
                len(self.points), len(self.pixels), len(self.weights)))
        if np.any(self.weights < 0):
            raise ValueError("Correspondence weights must be non-negative")
        # (u, v) depth map pixels the points were rendered at, when known
        self.depth_pixels = None if depth_pixels is None else np.asarray(depth_pixels, dtype=np.int64).reshape(-1, 2)

    @classmethod
    def from_list(cls, correspondences):
        correspondences = list(correspondences)
        if not correspondences:
            return cls()
        return cls([c.p_world for c in correspondences], [c.x_img for c in correspondences],
                    [c.weight for c in correspondences])

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        for point, pixel, weight in zip(self.points, self.pixels, self.weights):
            yield Correspondence(point, pixel, weight)

    def subset(self, indices):
        depth_pixels = None if self.depth_pixels is None else self.depth_pixels[indices]
        return CorrespondenceSet(self.points[indices], self.pixels[indices], self.weights[indices], depth_pixels)

    def capped(self, cap):
        """Deterministic stride subsample of at most cap correspondences"""
        return self.subset(stride_subsample(len(self), cap))


@dataclass(frozen=True)
class RansacConfig:

    max_iters: int = settings.DEFAULT_RANSAC_MAX_ITERS
    inlier_threshold: float = settings.DEFAULT_RANSAC_THRESHOLD
    min_inliers: int = settings.DEFAULT_RANSAC_MIN_INLIERS
    confidence: float = settings.DEFAULT_RANSAC_CONFIDENCE
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("ransac.max_iters", "must be >= 1")
        if not self.inlier_threshold > 0:
            raise ConfigError("ransac.inlier_threshold", "must be positive")
        if self.min_inliers < 0:
            raise ConfigError("ransac.min_inliers", "must be non-negative")
        if not 0 < self.confidence < 1:
            raise ConfigError("ransac.confidence", "must be in (0, 1)")


def correspondences_from_flow(d, f, cloud):
    """One correspondence per pixel valid in both the depth map and the flow: (source point, pixel + flow)"""
    if d.shape != f.shape:
        raise DimensionMismatchError("Depth map {} and flow {} sizes differ".format(d.shape, f.shape))
    joint = d.valid & f.valid
    v, u = np.nonzero(joint)
    points = cloud.lookup(d.source_id[v, u])
    pixels = np.stack([u + f.du[v, u], v + f.dv[v, u]], axis=1)
    return CorrespondenceSet(points, pixels, depth_pixels=np.stack([u, v], axis=1))


def reprojection_residuals(K, T, corrs):
    """(residuals, in_front, jacobian) of h(K, T, P) - x; rows of points behind the camera are zero"""
    uv, in_front, jacobian = h_project_jacobian(K, T, corrs.points)
    residuals = np.where(in_front[:, None], uv - corrs.pixels, 0.0)
    return residuals, in_front, jacobian


def reprojection_term(K, T, corrs, weight=1.0, block=0, blocks=1):
    """Residual term of one pose of a state of blocks poses"""
    residuals, in_front, jacobian = reprojection_residuals(K, T, corrs)
    full = np.zeros((int(in_front.sum()), 2, 6 * blocks))
    full[:, :, 6 * block:6 * block + 6] = jacobian[in_front]
    scaled = np.sqrt(corrs.weights[in_front])
    return Term(residuals[in_front] * scaled[:, None], full * scaled[:, None, None], weight,
                int((~in_front).sum()))


def reprojection_errors(K, T, corrs):
    """Pixel reprojection error norms, inf behind the camera"""
    residuals, in_front, _ = reprojection_residuals(K, T, corrs)
    return np.where(in_front, np.linalg.norm(residuals, axis=1), np.inf)


def check_correspondences(corrs):
    if len(corrs) < MINIMAL_SAMPLE:
        raise TooFewCorrespondencesError("{} correspondences, at least {} needed".format(len(corrs), MINIMAL_SAMPLE))
    if is_degenerate(corrs.points):
        raise DegenerateConfigurationError("Correspondence points are collinear")


def is_degenerate(points, tolerance=1e-9):
    """True when the points are (almost) collinear or coincident"""
    centered = points - points.mean(axis=0)
    singular = np.linalg.svd(centered, compute_uv=False)
    return singular[0] == 0 or singular[1] < tolerance * singular[0]


def _fit(corrs, K, T0, huber_delta, max_iters):
    def evaluate(state):
        return [reprojection_term(K, state[0], corrs)]
    result = levenberg_marquardt(evaluate, (T0,), huber_delta=huber_delta, max_iters=max_iters)
    return PoseEstimate(result.state[0], result.converged, result.initial_energy, result.final_energy,
                        result.iterations)


def refine_pose(corrs, K, T0, huber_delta=settings.DEFAULT_HUBER_DELTA, max_iters=settings.REFINE_MAX_ITERS):
    """Damped Gauss-Newton minimization of the Huber reprojection cost from T0

    Returns a PoseEstimate whose cost never exceeds the cost at T0.
    """
    check_correspondences(corrs)
    return _fit(corrs, K, T0, huber_delta, max_iters)


def _inlier_rmse(K, pose, corrs, inliers):
    if not inliers.any():
        return np.inf
    errors = reprojection_errors(K, pose, corrs.subset(inliers))
    return float(np.sqrt(np.mean(errors ** 2)))


def _required_hypotheses(inlier_ratio, confidence):
    if inlier_ratio >= 1:
        return 0
    if inlier_ratio <= 0:
        return np.inf
    return np.log(1 - confidence) / np.log(1 - inlier_ratio ** MINIMAL_SAMPLE)


def solve_pnp_ransac(corrs, K, T_init, cfg=RansacConfig(), huber_delta=settings.DEFAULT_HUBER_DELTA):
    """Pose maximizing the inlier count, hypotheses refined from T_init on random minimal samples

    The first hypothesis is the robust refinement of T_init over all correspondences. Sampling stops once the
    confidence bound of the best inlier ratio is reached. When fewer than min_inliers support the best hypothesis,
    T_init is returned with success False.
    """
    check_correspondences(corrs)
    rng = derive_rng(cfg.seed)
    count = len(corrs)

    best_pose = _fit(corrs, K, T_init, huber_delta, settings.REFINE_MAX_ITERS).pose
    best_inliers = reprojection_errors(K, best_pose, corrs) < cfg.inlier_threshold
    hypotheses = 1
    while hypotheses < min(cfg.max_iters, _required_hypotheses(best_inliers.mean(), cfg.confidence)):
        hypotheses += 1
        sample = rng.choice(count, MINIMAL_SAMPLE, replace=False)
        if is_degenerate(corrs.points[sample], tolerance=1e-6):
            continue
        pose = _fit(corrs.subset(sample), K, T_init, None, settings.HYPOTHESIS_MAX_ITERS).pose
        inliers = reprojection_errors(K, pose, corrs) < cfg.inlier_threshold
        if inliers.sum() > best_inliers.sum():
            best_pose, best_inliers = pose, inliers
    logger.debug("RANSAC: {} hypotheses, {} of {} inliers".format(hypotheses, int(best_inliers.sum()), count))

    if best_inliers.sum() < max(cfg.min_inliers, MINIMAL_SAMPLE):
        logger.debug("RANSAC failed: {} inliers, {} required".format(int(best_inliers.sum()), cfg.min_inliers))
        return RansacResult(T_init, best_inliers, False, hypotheses, np.inf)

    pose = best_pose
    inliers = best_inliers
    for _ in range(2):
        inlier_set = corrs.subset(inliers)
        if is_degenerate(inlier_set.points):
            break
        refit = _fit(inlier_set, K, pose, huber_delta, settings.REFINE_MAX_ITERS).pose
        refined_inliers = reprojection_errors(K, refit, corrs) < cfg.inlier_threshold
        # pose and inliers stay a matching pair
        if refined_inliers.sum() < max(cfg.min_inliers, MINIMAL_SAMPLE):
            break
        pose, inliers = refit, refined_inliers
    return RansacResult(pose, inliers, True, hypotheses, _inlier_rmse(K, pose, corrs, inliers))
