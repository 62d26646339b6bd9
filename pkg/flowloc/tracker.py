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

"""Online tracking loop

Every step crops the map around the carried initial pose, renders one synthetic depth map, asks the flow provider
for the flows of the frame (pair) and turns them into poses. Modes:
  - frame_by_frame: PnP on the current frame only
  - loose_coupled: PnP candidate or VO propagated candidate, picked on the inlier reprojection RMSE
  - multi_view: PnP on both frames of the (current, next) pair, then joint refinement under the consistency energy
  - visual_odometry: VO oracle integration only
"""

from collections import namedtuple
from dataclasses import dataclass, field, replace
import logging
import numpy as np
from flowloc import settings
from flowloc.backend.joint_optimizer import EnergyConfig, optimize_pair, sample_consistency_points
from flowloc.backend.pnp import MINIMAL_SAMPLE, RansacConfig, correspondences_from_flow, solve_pnp_ransac
from flowloc.depth import render_synthetic_depth
from flowloc.evaluation import Trajectory
from flowloc.flow import FlowField, FlowTriplet
from flowloc.frontend import FlowRequest, get_provider
from flowloc.frontend.oracle import FlowNoiseModel
from flowloc.geometry import CameraIntrinsics, PerturbBounds, PoseSE3, pose_compose, pose_error, pose_inverse, \
    perturb_pose
from flowloc.maps import CropExtents, crop_local
from flowloc.synth import outage_kinds
from flowloc.tools import ConfigError, DegenerateConfigurationError, StageTimer, TooFewCorrespondencesError, \
    derive_seed

logger = logging.getLogger(__name__)

MODES = ("frame_by_frame", "loose_coupled", "multi_view", "visual_odometry")
CURRENT_BRANCH, NEXT_BRANCH = range(2)
STAGES = ("crop", "render", "flow", "pnp", "optimize")

DIAGNOSTICS_COLUMNS = ["frame", "status", "rot_err_deg", "transl_err_cm", "inliers_cur", "inliers_next",
                       "e_initial", "e_final", "iterations"] + ["ms_{}".format(stage) for stage in STAGES] + \
    ["ms_total"]

StepResult = namedtuple("StepResult", ["pose", "next_pose", "status", "inliers_cur", "inliers_next",
                                       "initial_energy", "final_energy", "iterations", "trace", "ms"])
Localization = namedtuple("Localization", ["result", "corrs"])
TrackingRun = namedtuple("TrackingRun", ["trajectory", "diagnostics", "complete", "energy_trace", "state"])


@dataclass(frozen=True)
class TrackerConfig:

    mode: str = "multi_view"
    crop: CropExtents = field(default_factory=CropExtents)
    K: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    noise: FlowNoiseModel = field(default_factory=FlowNoiseModel)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    loose_reproj_threshold: float = settings.DEFAULT_LOOSE_REPROJ_THRESHOLD
    failure_threshold: float = settings.DEFAULT_FAILURE_THRESHOLD
    max_correspondences: int = settings.DEFAULT_MAX_CORRESPONDENCES
    consistency_cap: int = settings.DEFAULT_CONSISTENCY_CAP
    occlusion_aperture: float = settings.DEFAULT_OCCLUSION_APERTURE_DEG
    occlusion_window: int = settings.DEFAULT_OCCLUSION_WINDOW
    flow_provider: str = "oracle"
    init_bounds: PerturbBounds = field(default_factory=PerturbBounds)
    init_seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError("mode", "must be one of {}, got {}".format(", ".join(MODES), self.mode))
        if self.loose_reproj_threshold < 0:
            raise ConfigError("tracker.loose_reproj_threshold", "must be non-negative")
        if not self.failure_threshold > 0:
            raise ConfigError("tracker.failure_threshold", "must be positive")
        if self.max_correspondences < MINIMAL_SAMPLE:
            raise ConfigError("tracker.max_correspondences", "must be >= {}".format(MINIMAL_SAMPLE))
        if self.consistency_cap < 1:
            raise ConfigError("tracker.consistency_cap", "must be >= 1")
        if not 0 < self.occlusion_aperture < 90:
            raise ConfigError("render.occlusion_aperture", "must be in (0, 90) degrees")
        if self.occlusion_window < 3 or self.occlusion_window % 2 == 0:
            raise ConfigError("render.occlusion_window", "must be an odd number >= 3")


@dataclass(frozen=True)
class TrackerState:
    """Value passed from step to step. velocity is the last estimated frame to frame motion, if any"""

    T_init_next: PoseSE3
    frame_index: int = 0
    history: Trajectory = field(default_factory=Trajectory)
    failed: bool = False
    velocity: PoseSE3 = None


def init(T0):
    return TrackerState(T0)


def relative_motion(T_from, T_to):
    return pose_compose(T_to, pose_inverse(T_from))


def mask_outages(triplet, cur_kinds, next_kinds):
    """Drop the flows touched by the outage kinds of the current and next frames"""
    shape = triplet.shape
    f_c2d, f_n2d, f_c2n = triplet.f_c2d, triplet.f_n2d, triplet.f_c2n
    if cur_kinds:
        f_c2d = FlowField.invalid(shape)
    if next_kinds:
        f_n2d = FlowField.invalid(shape)
    if "blackout" in cur_kinds or "blackout" in next_kinds:
        f_c2n = FlowField.invalid(shape)
    return FlowTriplet(f_c2d, f_n2d, f_c2n)


class Tracker:
    """Step functions of every mode, sharing a flow provider and the scripted outages of the sequence

    dump, when given, is called with (frame, depth map, flow triplet) for every rendered frame.
    """

    def __init__(self, config, outages=(), dump=None):
        self.config = config
        self.outages = list(outages)
        self.dump = dump
        self.provider = get_provider(config.flow_provider, noise=config.noise)

    def render(self, global_map, T_init, timer):
        """(crop, synthetic depth map) of the map seen from T_init"""
        with timer.stage("crop"):
            crop = crop_local(global_map, T_init, self.config.crop)
        with timer.stage("render"):
            depth = render_synthetic_depth(crop, self.config.K, T_init, self.config.occlusion_aperture,
                                           self.config.occlusion_window)
        return crop, depth

    def flows(self, frame, crop, depth, T_init, T_gt_cur, T_gt_next, timer):
        """Provider flows of the frame (pair), outages applied"""
        with timer.stage("flow"):
            request = FlowRequest(frame, crop, depth, self.config.K, T_init, T_gt_cur, T_gt_next)
            triplet = self.provider.estimate(request)
            next_kinds = outage_kinds(self.outages, frame + 1) if T_gt_next is not None else set()
            triplet = mask_outages(triplet, outage_kinds(self.outages, frame), next_kinds)
        if self.dump is not None:
            self.dump(frame, depth, triplet)
        return triplet

    def localize(self, depth, flow, crop, T_init, frame, branch, timer):
        """PnP of one frame; result is None when the correspondences can't constrain a pose"""
        with timer.stage("pnp"):
            corrs = correspondences_from_flow(depth, flow, crop).capped(self.config.max_correspondences)
            ransac = replace(self.config.ransac, seed=derive_seed(self.config.ransac.seed, frame, branch))
            try:
                result = solve_pnp_ransac(corrs, self.config.K, T_init, ransac, self.config.energy.huber_delta)
            except (TooFewCorrespondencesError, DegenerateConfigurationError) as e:
                logger.debug("Frame {}: no PnP ({})".format(frame, e))
                return Localization(None, corrs)
        return Localization(result, corrs)

    @staticmethod
    def succeeded(localization):
        return localization.result is not None and localization.result.success

    @staticmethod
    def _inlier_count(localization):
        if localization.result is None or not localization.result.success:
            return 0
        return int(localization.result.inliers.sum())

    @staticmethod
    def _advance(state, pose, T_init_next, velocity=None):
        return replace(state, T_init_next=T_init_next, frame_index=state.frame_index + 1,
                       history=state.history.appended(pose), velocity=velocity)

    @staticmethod
    def _fail(state):
        return replace(state, failed=True)

    def step_frame_by_frame(self, state, global_map, T_gt_cur):
        """PnP on the current frame from the previous pose"""
        timer = StageTimer()
        frame = state.frame_index
        T_init = state.T_init_next
        crop, depth = self.render(global_map, T_init, timer)
        triplet = self.flows(frame, crop, depth, T_init, T_gt_cur, None, timer)
        localization = self.localize(depth, triplet.f_c2d, crop, T_init, frame, CURRENT_BRANCH, timer)
        inliers = self._inlier_count(localization)
        if not self.succeeded(localization):
            logger.warning("Frame {}: PnP failed, tracking lost".format(frame))
            return self._fail(state), StepResult(None, None, "failed", 0, 0, None, None, 0, [], timer.ms)
        pose = localization.result.pose
        velocity = relative_motion(state.history[-1], pose) if len(state.history) else None
        return self._advance(state, pose, pose, velocity), \
            StepResult(pose, None, "pnp", inliers, 0, None, None, 0, [], timer.ms)

    def step_loose_coupled(self, state, global_map, T_gt_cur, vo_relative):
        """PnP candidate when its inlier RMSE is below the threshold, VO propagated candidate otherwise"""
        timer = StageTimer()
        frame = state.frame_index
        T_init = state.T_init_next
        crop, depth = self.render(global_map, T_init, timer)
        triplet = self.flows(frame, crop, depth, T_init, T_gt_cur, None, timer)
        localization = self.localize(depth, triplet.f_c2d, crop, T_init, frame, CURRENT_BRANCH, timer)
        vo_candidate = T_init if vo_relative is None else pose_compose(vo_relative, T_init)
        if self.succeeded(localization) and \
                localization.result.inlier_rmse < self.config.loose_reproj_threshold:
            pose, status = localization.result.pose, "pnp"
        else:
            pose, status = vo_candidate, "vo"
            logger.debug("Frame {}: VO candidate selected".format(frame))
        velocity = relative_motion(state.history[-1], pose) if len(state.history) else None
        return self._advance(state, pose, pose, velocity), \
            StepResult(pose, None, status, self._inlier_count(localization), 0, None, None, 0, [], timer.ms)

    def step_visual_odometry(self, state, vo_relative):
        pose = state.T_init_next if vo_relative is None else pose_compose(vo_relative, state.T_init_next)
        return self._advance(state, pose, pose, vo_relative), \
            StepResult(pose, None, "vo", 0, 0, None, None, 0, [], {})

    def step_multi_view(self, state, global_map, T_gt_cur, T_gt_next):
        """Joint refinement of the (current, next) pair; both poses start from the carried initial pose

        The last frame of a sequence (T_gt_next None) falls back to the single frame step. A degenerate pair
        problem keeps the PnP poses when the current frame has one and loses track otherwise.
        """
        if T_gt_next is None:
            return self.step_frame_by_frame(state, global_map, T_gt_cur)
        timer = StageTimer()
        cfg = self.config
        frame = state.frame_index
        T_init = state.T_init_next
        crop, depth = self.render(global_map, T_init, timer)
        triplet = self.flows(frame, crop, depth, T_init, T_gt_cur, T_gt_next, timer)
        cur = self.localize(depth, triplet.f_c2d, crop, T_init, frame, CURRENT_BRANCH, timer)
        nxt = self.localize(depth, triplet.f_n2d, crop, T_init, frame, NEXT_BRANCH, timer)
        cur_ok, next_ok = self.succeeded(cur), self.succeeded(nxt)
        failed = StepResult(None, None, "failed", 0, 0, None, None, 0, [], timer.ms)

        with timer.stage("optimize"):
            if cur_ok:
                T_cur0 = cur.result.pose
                corrs_cur = cur.corrs.subset(cur.result.inliers)
                candidates = np.zeros(depth.shape, dtype=bool)
                candidates[corrs_cur.depth_pixels[:, 1], corrs_cur.depth_pixels[:, 0]] = True
            else:
                T_cur0, corrs_cur, candidates = T_init, None, None
            if next_ok:
                T_next0 = nxt.result.pose
                corrs_next = nxt.corrs.subset(nxt.result.inliers)
            else:
                # constant velocity prediction
                T_next0 = T_cur0 if state.velocity is None else pose_compose(state.velocity, T_cur0)
                corrs_next = None
            points = sample_consistency_points(depth, crop, cfg.K, T_init, T_cur0, triplet.f_c2n, candidates,
                                               cfg.consistency_cap)

            if not cur_ok and not next_ok:
                if len(points) < max(cfg.ransac.min_inliers, MINIMAL_SAMPLE):
                    logger.warning("Frame {}: PnP failed on both frames and {} consistency points left, tracking "
                                   "lost".format(frame, len(points)))
                    return self._fail(state), failed
                joint = optimize_pair(T_cur0, T_next0, None, None, points, cfg.K, cfg.energy, fix_cur=True)
                if joint.degenerate:
                    logger.warning("Frame {}: consistency only problem is degenerate, tracking lost".format(frame))
                    return self._fail(state), failed
                status = "rescued"
                logger.warning("Frame {}: PnP failed on both frames, next pose rescued from {} consistency "
                               "points".format(frame, len(points)))
            else:
                joint = optimize_pair(T_cur0, T_next0, corrs_cur, corrs_next, points, cfg.K, cfg.energy)
                if joint.degenerate:
                    if not cur_ok:
                        logger.warning("Frame {}: PnP failed on the current frame and the pair problem is "
                                       "degenerate, tracking lost".format(frame))
                        return self._fail(state), failed
                    logger.warning("Frame {}: pair problem is degenerate, keeping the PnP poses".format(frame))
                    status = "pnp"
                else:
                    status = "joint" if cur_ok and next_ok else "degraded"
                if status == "degraded":
                    logger.warning("Frame {}: PnP failed on the {} frame, relying on the consistency term".format(
                        frame, "next" if cur_ok else "current"))

        if status == "pnp":
            T_cur, T_next = T_cur0, T_next0
            result = StepResult(T_cur, T_next, status, self._inlier_count(cur), self._inlier_count(nxt),
                                None, None, 0, [], timer.ms)
        else:
            T_cur, T_next = joint.T_cur_star, joint.T_next_star
            result = StepResult(T_cur, T_next, status, self._inlier_count(cur), self._inlier_count(nxt),
                                joint.initial_energy, joint.final_energy, joint.iterations, joint.trace, timer.ms)
        return self._advance(state, T_cur, T_next, relative_motion(T_cur, T_next)), result

    def step(self, state, global_map, T_gt_cur, T_gt_next=None, vo_relative=None):
        """Dispatch to the step of the configured mode"""
        mode = self.config.mode
        if mode == "frame_by_frame":
            return self.step_frame_by_frame(state, global_map, T_gt_cur)
        if mode == "loose_coupled":
            return self.step_loose_coupled(state, global_map, T_gt_cur, vo_relative)
        if mode == "visual_odometry":
            return self.step_visual_odometry(state, vo_relative)
        return self.step_multi_view(state, global_map, T_gt_cur, T_gt_next)

    def branch_poses(self, scenario, progress=None):
        """PnP poses of the current and next frame depth flows of every frame pair, None where PnP fails

        Each pair starts from its own GPS-like disturbance of the current ground truth pose.
        """
        cur_poses, next_poses = [], []
        pair_count = max(len(scenario) - 1, 0)
        for frame in range(pair_count):
            T_gt_cur, T_gt_next = scenario.gt[frame], scenario.gt[frame + 1]
            T_init = perturb_pose(T_gt_cur, self.config.init_bounds, derive_seed(self.config.init_seed, frame))
            timer = StageTimer()
            crop, depth = self.render(scenario.global_map, T_init, timer)
            triplet = self.flows(frame, crop, depth, T_init, T_gt_cur, T_gt_next, timer)
            for branch, flow, poses in ((CURRENT_BRANCH, triplet.f_c2d, cur_poses),
                                        (NEXT_BRANCH, triplet.f_n2d, next_poses)):
                localization = self.localize(depth, flow, crop, T_init, frame, branch, timer)
                poses.append(localization.result.pose if self.succeeded(localization) else None)
            if progress is not None:
                progress(frame + 1, pair_count)
        return cur_poses, next_poses


def _format(value, pattern="{:.6g}"):
    return "" if value is None else pattern.format(value)


def diagnostics_row(frame, result, T_gt):
    if result.pose is None:
        rot_err = transl_err = None
    else:
        rot_err, transl_err = pose_error(result.pose, T_gt)
        transl_err *= 100
    ms = [result.ms.get(stage, 0.0) for stage in STAGES]
    return [frame, result.status, _format(rot_err), _format(transl_err), result.inliers_cur, result.inliers_next,
            _format(result.initial_energy), _format(result.final_energy), result.iterations] + \
        ["{:.3f}".format(value) for value in ms] + ["{:.3f}".format(sum(ms))]


def initial_pose(config, T_gt0):
    """GPS-like initialization: the first ground truth pose under a random disturbance"""
    return perturb_pose(T_gt0, config.init_bounds, config.init_seed)


def run(config, scenario, progress=None, dump=None):
    """Track the whole scenario, stopping at the first failure

    progress, when given, is called with (frames done, frame count) after every step. dump is handed to the Tracker.
    """
    frame_count = len(scenario)
    if frame_count == 0:
        return TrackingRun(Trajectory(), [], True, [], None)
    tracker = Tracker(config, scenario.outages, dump)
    state = init(initial_pose(config, scenario.gt[0]))
    rows = []
    energy_trace = []
    for frame in range(frame_count):
        T_gt_cur = scenario.gt[frame]
        T_gt_next = scenario.gt[frame + 1] if frame + 1 < frame_count else None
        vo_relative = scenario.vo_relative[frame - 1] if frame > 0 else None
        state, result = tracker.step(state, scenario.global_map, T_gt_cur, T_gt_next, vo_relative)
        rows.append(diagnostics_row(frame, result, T_gt_cur))
        energy_trace.extend([frame, iteration, energy] for iteration, energy in enumerate(result.trace))
        if progress is not None:
            progress(frame + 1, frame_count)
        if state.failed:
            logger.warning("Tracking interrupted at frame {} of {}".format(frame, frame_count))
            break
    logger.info("{} mode tracked {} of {} frames".format(config.mode, len(state.history), frame_count))
    return TrackingRun(state.history, rows, not state.failed, energy_trace, state)


def branch_poses(config, scenario, progress=None):
    return Tracker(config, scenario.outages).branch_poses(scenario, progress)
