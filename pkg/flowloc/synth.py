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

"""Synthetic worlds: corridor scenes, camera trajectories, a drifting VO oracle and scripted flow outages"""

from dataclasses import dataclass, field
import logging
import numpy as np
import os
from scipy.spatial.transform import Rotation
from flowloc import settings
from flowloc.depth import render_depth
from flowloc.evaluation import Trajectory
from flowloc.formats import read_cloud, read_kitti_poses, read_yaml, write_cloud, write_kitti_poses, write_yaml
from flowloc.geometry import PoseSE3, look_at, pose_compose, pose_inverse
from flowloc.maps import GlobalMap, PointCloud
from flowloc.tools import ConfigError, ScenarioError, derive_rng

logger = logging.getLogger(__name__)

PROFILES = ("straight", "arc", "s_curve")
OUTAGE_KINDS = ("depth", "blackout")

SCENE_FILENAME = "scene.xyz"
GT_FILENAME = "gt_poses.txt"
VO_FILENAME = "vo_relative.txt"
MANIFEST_FILENAME = "manifest.yaml"


@dataclass(frozen=True)
class SceneConfig:
    """Corridor scene: ground plane, facades on both sides set back per block, and poles

    Densities are points per square meter. Without an explicit path the corridor runs extent meters along world x.
    """

    extent: float = 200.0
    ground_density: float = 2.0
    facade_density: float = 2.0
    pole_count: int = 20
    seed: int = 0
    half_width: float = 8.0
    facade_height: float = 12.0
    margin: float = 110.0
    block_length: float = 10.0
    setbacks: tuple = (0.0, 2.0, 4.0)
    pole_height: float = 6.0

    def __post_init__(self):
        if not self.extent > 0:
            raise ConfigError("scene.extent", "must be positive")
        for name in ("ground_density", "facade_density", "pole_count", "margin"):
            if getattr(self, name) < 0:
                raise ConfigError("scene.{}".format(name), "must be non-negative")
        for name in ("half_width", "facade_height", "block_length"):
            if not getattr(self, name) > 0:
                raise ConfigError("scene.{}".format(name), "must be positive")
        if not 0 < self.pole_height <= self.facade_height:
            raise ConfigError("scene.pole_height", "must be in (0, facade_height]")


@dataclass(frozen=True)
class TrajectoryConfig:

    frame_count: int = 100
    speed: float = 1.0  # m/frame
    turn_rate: float = 1.0  # deg/frame
    profile: str = "straight"
    seed: int = 0

    def __post_init__(self):
        if self.frame_count < 1:
            raise ConfigError("trajectory.frame_count", "must be >= 1")
        if self.speed < 0:
            raise ConfigError("trajectory.speed", "must be non-negative")
        if self.profile not in PROFILES:
            raise ConfigError("trajectory.profile", "must be one of {}".format(", ".join(PROFILES)))


@dataclass(frozen=True)
class VoOracleConfig:

    rot_drift_sigma: float = 0.0  # deg/frame
    transl_drift_sigma: float = 0.0  # m/frame
    seed: int = 0

    def __post_init__(self):
        if self.rot_drift_sigma < 0:
            raise ConfigError("vo.rot_drift_sigma", "must be non-negative")
        if self.transl_drift_sigma < 0:
            raise ConfigError("vo.transl_drift_sigma", "must be non-negative")


@dataclass(frozen=True)
class Outage:
    """Frames [start, start + length) lose their flows; length None runs to the end of the sequence

    kind "depth" drops the image to depth flows only, "blackout" every flow touching the frames.
    """

    start: int
    length: int = None
    kind: str = "blackout"

    def __post_init__(self):
        if self.start < 0:
            raise ConfigError("outages.start", "must be non-negative")
        if self.length is not None and self.length < 1:
            raise ConfigError("outages.length", "must be >= 1 or null")
        if self.kind not in OUTAGE_KINDS:
            raise ConfigError("outages.kind", "must be one of {}".format(", ".join(OUTAGE_KINDS)))

    def covers(self, frame):
        if frame is None or frame < self.start:
            return False
        return self.length is None or frame < self.start + self.length

    def to_dict(self):
        return {"start": self.start, "length": self.length, "kind": self.kind}


def _polyline(path):
    """Segment origins, cumulative arc length, unit tangents and left normals of a (M, 2) path"""
    path = np.asarray(path, dtype=np.float64)
    segments = np.diff(path, axis=0)
    lengths = np.linalg.norm(segments, axis=1)
    keep = lengths > 1e-9
    segments, lengths = segments[keep], lengths[keep]
    tangents = segments / lengths[:, None]
    normals = np.stack([-tangents[:, 1], tangents[:, 0]], axis=1)
    starts = np.concatenate([[0.0], np.cumsum(lengths)])
    return path[:-1][keep], starts, tangents, normals


def corridor_path(centers, margin, fallback_heading=0.0):
    """Ground path through the (N, 2) or (N, 3) centers, extended by margin at both ends along the end tangents"""
    centers = np.asarray(centers, dtype=np.float64).reshape(len(centers), -1)[:, :2]
    deduplicated = centers[np.concatenate([[True], np.linalg.norm(np.diff(centers, axis=0), axis=1) > 1e-9])]
    if len(deduplicated) < 2:
        direction = np.array([np.cos(fallback_heading), np.sin(fallback_heading)])
        first = last = direction
        deduplicated = deduplicated[:1]
    else:
        first = deduplicated[1] - deduplicated[0]
        last = deduplicated[-1] - deduplicated[-2]
        first, last = first / np.linalg.norm(first), last / np.linalg.norm(last)
    return np.concatenate([[deduplicated[0] - margin * first], deduplicated, [deduplicated[-1] + margin * last]])


def _along_path(path, s):
    """Positions, tangents and normals at arc lengths s of the path"""
    origins, starts, tangents, normals = _polyline(path)
    segment = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(tangents) - 1)
    positions = origins[segment] + (s - starts[segment])[:, None] * tangents[segment]
    return positions, tangents[segment], normals[segment]


def generate_scene(cfg, path=None):
    """Point cloud of a corridor following path, a (M, 2) or (M, 3) ground polyline in the world xy plane

    Without path the corridor runs along world x from 0 to cfg.extent. The path is extended by cfg.margin at both
    ends. z of every point lies in [0, facade_height].
    """
    if path is None:
        path = [[0.0, 0.0], [cfg.extent, 0.0]]
    path = corridor_path(path, cfg.margin)
    length = _polyline(path)[1][-1]
    rng = derive_rng(cfg.seed)
    parts = []

    count = int(round(cfg.ground_density * length * 2 * cfg.half_width))
    if count:
        s = rng.uniform(0.0, length, count)
        lateral = rng.uniform(-cfg.half_width, cfg.half_width, count)
        positions, _, normals = _along_path(path, s)
        xy = positions + lateral[:, None] * normals
        parts.append(np.column_stack([xy, np.zeros(count)]))

    blocks = int(np.ceil(length / cfg.block_length)) + 1
    for side in (1.0, -1.0):
        setbacks = rng.choice(np.asarray(cfg.setbacks, dtype=np.float64), blocks)
        count = int(round(cfg.facade_density * length * cfg.facade_height))
        if not count:
            continue
        s = rng.uniform(0.0, length, count)
        z = rng.uniform(0.0, cfg.facade_height, count)
        positions, _, normals = _along_path(path, s)
        offset = side * (cfg.half_width + setbacks[(s // cfg.block_length).astype(np.int64)])
        parts.append(np.column_stack([positions + offset[:, None] * normals, z]))

    if cfg.pole_count:
        s = rng.uniform(0.0, length, cfg.pole_count)
        side = rng.choice([-1.0, 1.0], cfg.pole_count)
        positions, _, normals = _along_path(path, s)
        bases = positions + (side * (cfg.half_width - 1.0))[:, None] * normals
        heights = np.arange(0.0, cfg.pole_height + 1e-9, 0.1)
        for base in bases:
            parts.append(np.column_stack([np.tile(base, (len(heights), 1)), heights]))

    points = np.concatenate(parts) if parts else np.zeros((0, 3))
    logger.info("Generated a {:.0f} m corridor scene of {} points".format(length, len(points)))
    return PointCloud(points)


def _headings(cfg):
    """Heading (radians) of every frame of the profile"""
    k = np.arange(cfg.frame_count, dtype=np.float64)
    turn = np.radians(cfg.turn_rate)
    if cfg.profile == "straight":
        return np.zeros(cfg.frame_count)
    if cfg.profile == "arc":
        return k * turn
    phase = derive_rng(cfg.seed).uniform(0.0, 2 * np.pi)
    period = settings.S_CURVE_PERIOD
    # peak heading change per frame is turn
    amplitude = turn * period / (2 * np.pi)
    return amplitude * np.sin(2 * np.pi * k / period + phase)


def generate_trajectory(cfg):
    """Level camera poses at CAMERA_HEIGHT driving speed meters per frame along the profile

    Consecutive positions are joined by a chord of the mean heading of its two ends, so steps are exactly speed long.
    """
    headings = _headings(cfg)
    chords = (headings[:-1] + headings[1:]) / 2
    steps = cfg.speed * np.column_stack([np.cos(chords), np.sin(chords)])
    xy = np.concatenate([np.zeros((1, 2)), np.cumsum(steps, axis=0)])
    poses = [look_at([x, y, settings.CAMERA_HEIGHT], [np.cos(h), np.sin(h), 0.0])
             for (x, y), h in zip(xy, headings)]
    return Trajectory(poses, timestamps=np.arange(cfg.frame_count) / 10.0)


def relative_pose(T_from, T_to):
    """Delta with T_to = Delta . T_from, world to camera poses"""
    return pose_compose(T_to, pose_inverse(T_from))


def vo_oracle(traj_gt, cfg):
    """Relative poses between consecutive frames, left-composed with seeded Gaussian drift"""
    rng = derive_rng(cfg.seed)
    relatives = []
    for T_from, T_to in zip(traj_gt.poses, traj_gt.poses[1:]):
        delta = relative_pose(T_from, T_to)
        if cfg.rot_drift_sigma > 0 or cfg.transl_drift_sigma > 0:
            rotvec = np.radians(rng.normal(0.0, cfg.rot_drift_sigma, 3))
            translation = rng.normal(0.0, cfg.transl_drift_sigma, 3)
            delta = pose_compose(PoseSE3.from_rotation(Rotation.from_rotvec(rotvec), translation), delta)
        relatives.append(delta)
    return relatives


def integrate_vo(T0, relatives):
    """Trajectory chaining relative poses from T0"""
    poses = [T0]
    for delta in relatives:
        poses.append(pose_compose(delta, poses[-1]))
    return Trajectory(poses)


@dataclass
class Scenario:
    """Everything a tracking run consumes: map, ground truth, VO oracle output and scripted outages"""

    cloud: PointCloud
    gt: Trajectory
    vo_relative: list
    outages: list = field(default_factory=list)
    _global_map: GlobalMap = field(default=None, repr=False)

    def __len__(self):
        return len(self.gt)

    @property
    def global_map(self):
        if self._global_map is None:
            self._global_map = GlobalMap(self.cloud)
        return self._global_map


def outage_kinds(outages, frame):
    """Set of the kinds of the outages covering frame"""
    return {outage.kind for outage in outages if outage.covers(frame)}


def check_visibility(cloud, gt, K, min_pixels=settings.MIN_VISIBLE_PIXELS):
    for frame, pose in enumerate(gt):
        visible = render_depth(cloud, K, pose).valid_count
        if visible < min_pixels:
            raise ScenarioError("Frame {} sees {} valid pixels, at least {} required".format(
                frame, visible, min_pixels))


def build_scenario(scene_cfg, traj_cfg, vo_cfg, K, outages=(), min_visible_pixels=settings.MIN_VISIBLE_PIXELS):
    """Trajectory first, then a corridor scene along it and the VO oracle"""
    gt = generate_trajectory(traj_cfg)
    centers = gt.positions()
    cloud = generate_scene(scene_cfg, centers if len(centers) > 1 else None)
    if min_visible_pixels:
        check_visibility(cloud, gt, K, min_visible_pixels)
    scenario = Scenario(cloud, gt, vo_oracle(gt, vo_cfg), list(outages))
    logger.info("Built a scenario of {} frames over {} points".format(len(gt), len(cloud)))
    return scenario


def save_scenario(scenario, directory, manifest):
    """Write scene cloud, ground truth poses, VO relative poses and manifest into directory"""
    os.makedirs(directory, exist_ok=True)
    write_cloud(os.path.join(directory, SCENE_FILENAME), scenario.cloud.points)
    write_kitti_poses(os.path.join(directory, GT_FILENAME), scenario.gt.poses)
    write_kitti_poses(os.path.join(directory, VO_FILENAME), scenario.vo_relative)
    manifest = dict(manifest)
    manifest["outages"] = [outage.to_dict() for outage in scenario.outages]
    write_yaml(os.path.join(directory, MANIFEST_FILENAME), manifest)


def load_scenario(directory):
    """(Scenario, manifest) of a directory written by save_scenario"""
    paths = {name: os.path.join(directory, name) for name in (SCENE_FILENAME, GT_FILENAME)}
    for path in paths.values():
        if not os.path.isfile(path):
            message = "Missing scenario file {}".format(path)
            logger.error(message)
            raise ScenarioError(message)
    cloud = PointCloud(read_cloud(paths[SCENE_FILENAME]))
    gt = Trajectory(read_kitti_poses(paths[GT_FILENAME]))
    vo_path = os.path.join(directory, VO_FILENAME)
    vo_relative = read_kitti_poses(vo_path) if os.path.isfile(vo_path) else \
        [relative_pose(a, b) for a, b in zip(gt.poses, gt.poses[1:])]
    if len(gt) and len(vo_relative) != len(gt) - 1:
        message = "{} VO relative poses for {} frames".format(len(vo_relative), len(gt))
        logger.error(message)
        raise ScenarioError(message)
    manifest_path = os.path.join(directory, MANIFEST_FILENAME)
    manifest = (read_yaml(manifest_path) or {}) if os.path.isfile(manifest_path) else {}
    outages = [Outage(**entry) for entry in manifest.get("outages") or []]
    return Scenario(cloud, gt, vo_relative, outages), manifest
