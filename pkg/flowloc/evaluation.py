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

"""Trajectory metrics: ATE, RPE, pose error statistics and reports"""

from collections import namedtuple
from dataclasses import asdict, dataclass, fields
import logging
import numpy as np
import os
from scipy.spatial.transform import Rotation
from flowloc import settings
from flowloc.formats import read_kitti_poses, write_csv, write_kitti_poses
from flowloc.geometry import pose_error
from flowloc.tools import LengthMismatchError

logger = logging.getLogger(__name__)

RpeStats = namedtuple("RpeStats", ["transl_mean", "transl_std", "rot_mean", "rot_std", "transl_errors",
                                   "rot_errors"])
PoseErrorStats = namedtuple("PoseErrorStats", ["rot_mean", "rot_median", "rot_std", "transl_mean", "transl_median",
                                               "transl_std", "failure_rate", "rot_errors", "transl_errors"])


class Trajectory:
    """Time ordered world to camera poses with optional timestamps"""

    def __init__(self, poses=None, timestamps=None):
        self.poses = [] if poses is None else list(poses)
        if timestamps is not None:
            timestamps = [float(stamp) for stamp in timestamps]
            if len(timestamps) != len(self.poses):
                raise LengthMismatchError("{} timestamps for {} poses".format(len(timestamps), len(self.poses)))
            if any(b < a for a, b in zip(timestamps, timestamps[1:])):
                raise ValueError("Timestamps must be non-decreasing")
        self.timestamps = timestamps

    def __len__(self):
        return len(self.poses)

    def __getitem__(self, index):
        if isinstance(index, slice):
            stamps = None if self.timestamps is None else self.timestamps[index]
            return Trajectory(self.poses[index], stamps)
        return self.poses[index]

    def __iter__(self):
        return iter(self.poses)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.poses == other.poses and self.timestamps == other.timestamps

    __hash__ = None

    def appended(self, pose, timestamp=None):
        """New trajectory with pose added at the end"""
        stamps = None if self.timestamps is None else self.timestamps + [timestamp]
        return Trajectory(self.poses + [pose], stamps)

    def positions(self):
        """(N, 3) camera centers"""
        return np.array([pose.camera_center() for pose in self.poses]).reshape(-1, 3)

    def camera_to_world(self):
        """(N, 4, 4) camera to world matrices"""
        return np.array([np.linalg.inv(pose.matrix()) for pose in self.poses]).reshape(-1, 4, 4)


def _check_lengths(est, gt):
    if len(est) != len(gt):
        message = "Estimated trajectory has {} poses, ground truth {}".format(len(est), len(gt))
        raise LengthMismatchError(message)


def align_rigid(source, target):
    """Rotation R and translation t minimizing |R source + t - target| over (N, 3) point pairs"""
    source_mean = source.mean(axis=0)
    target_mean = target.mean(axis=0)
    covariance = (target - target_mean).T @ (source - source_mean)
    U, _, Vt = np.linalg.svd(covariance)
    correction = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt)) or 1.0])
    R = U @ correction @ Vt
    return R, target_mean - R @ source_mean


def ate(est, gt, align=False):
    """RMSE of the camera center differences, after a best-fit rigid alignment of est when align is set"""
    _check_lengths(est, gt)
    if len(est) == 0:
        return 0.0
    est_positions = est.positions()
    gt_positions = gt.positions()
    if align:
        R, t = align_rigid(est_positions, gt_positions)
        est_positions = est_positions @ R.T + t
    return float(np.sqrt(np.mean(np.sum((est_positions - gt_positions) ** 2, axis=1))))


def _relative_errors(est_matrices, gt_matrices, pairs):
    transl_errors = []
    rot_errors = []
    for i, j in pairs:
        est_relative = np.linalg.inv(est_matrices[i]) @ est_matrices[j]
        gt_relative = np.linalg.inv(gt_matrices[i]) @ gt_matrices[j]
        error = np.linalg.inv(gt_relative) @ est_relative
        transl_errors.append(np.linalg.norm(error[:3, 3]))
        rot_errors.append(np.degrees(Rotation.from_matrix(error[:3, :3]).magnitude()))
    return np.array(transl_errors), np.array(rot_errors)


def _rpe_stats(transl_errors, rot_errors):
    if len(transl_errors) == 0:
        return RpeStats(0.0, 0.0, 0.0, 0.0, transl_errors, rot_errors)
    return RpeStats(float(np.mean(transl_errors)), float(np.std(transl_errors)), float(np.mean(rot_errors)),
                    float(np.std(rot_errors)), transl_errors, rot_errors)


def rpe(est, gt, delta=1):
    """Relative pose error over all frame pairs (i, i + delta)"""
    _check_lengths(est, gt)
    if delta < 1:
        raise ValueError("RPE delta must be >= 1")
    if len(est) <= delta:
        raise LengthMismatchError("Trajectory of {} poses too short for a delta of {}".format(len(est), delta))
    pairs = [(i, i + delta) for i in range(len(est) - delta)]
    return _rpe_stats(*_relative_errors(est.camera_to_world(), gt.camera_to_world(), pairs))


def rpe_by_distance(est, gt, distance):
    """Relative pose error over pairs separated by at least distance meters of ground truth path"""
    _check_lengths(est, gt)
    if not distance > 0:
        raise ValueError("RPE distance must be positive")
    positions = gt.positions()
    travelled = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(positions, axis=0), axis=1))])
    pairs = []
    for i in range(len(gt)):
        j = int(np.searchsorted(travelled, travelled[i] + distance, side="left"))
        if j < len(gt):
            pairs.append((i, j))
    return _rpe_stats(*_relative_errors(est.camera_to_world(), gt.camera_to_world(), pairs))


def pose_error_stats(est, gt, fail_threshold=settings.DEFAULT_FAILURE_THRESHOLD):
    """Mean, median and std of per-frame errors; a frame fails when its translation error is above the threshold"""
    _check_lengths(est, gt)
    errors = np.array([pose_error(e, g) for e, g in zip(est, gt)]).reshape(-1, 2)
    rot_errors, transl_errors = errors[:, 0], errors[:, 1]
    if len(errors) == 0:
        return PoseErrorStats(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, rot_errors, transl_errors)
    return PoseErrorStats(float(np.mean(rot_errors)), float(np.median(rot_errors)), float(np.std(rot_errors)),
                          float(np.mean(transl_errors)), float(np.median(transl_errors)),
                          float(np.std(transl_errors)), float(np.mean(transl_errors > fail_threshold)),
                          rot_errors, transl_errors)


@dataclass
class MetricsReport:
    """Report columns, in csv order"""

    ate_rmse: float = 0.0
    rpe_transl_mean: float = 0.0
    rpe_transl_std: float = 0.0
    rpe_rot_mean: float = 0.0
    rpe_rot_std: float = 0.0
    rot_mean: float = 0.0
    rot_median: float = 0.0
    rot_std: float = 0.0
    transl_mean: float = 0.0
    transl_median: float = 0.0
    transl_std: float = 0.0
    failure_rate: float = 0.0
    complete: bool = True
    frames: int = 0
    expected_frames: int = 0

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return [_format_value(value) for value in asdict(self).values()]


def _format_value(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return "{:.9g}".format(value)
    return value


def evaluate(est, gt, align=False, delta=1, distance=None, fail_threshold=settings.DEFAULT_FAILURE_THRESHOLD,
             allow_prefix=False):
    """MetricsReport of est against gt

    With allow_prefix, a shorter estimate (an interrupted run) is evaluated against the matching ground truth
    prefix and reported incomplete.
    """
    expected = len(gt)
    if allow_prefix and len(est) < len(gt):
        gt = gt[:len(est)]
    _check_lengths(est, gt)
    report = MetricsReport(complete=len(est) == expected, frames=len(est), expected_frames=expected)
    if len(est) == 0:
        return report
    report.ate_rmse = ate(est, gt, align)
    if distance is not None:
        relative = rpe_by_distance(est, gt, distance)
    elif len(est) > delta:
        relative = rpe(est, gt, delta)
    else:
        relative = None
    if relative is not None:
        report.rpe_transl_mean, report.rpe_transl_std = relative.transl_mean, relative.transl_std
        report.rpe_rot_mean, report.rpe_rot_std = relative.rot_mean, relative.rot_std
    stats = pose_error_stats(est, gt, fail_threshold)
    report.rot_mean, report.rot_median, report.rot_std = stats.rot_mean, stats.rot_median, stats.rot_std
    report.transl_mean, report.transl_median, report.transl_std = \
        stats.transl_mean, stats.transl_median, stats.transl_std
    report.failure_rate = stats.failure_rate
    return report


def format_report(report):
    """Human readable table: translation errors in cm, rotation errors in degrees"""
    lines = [
        "{:<26}{:>14}".format("metric", "value"),
        "{:<26}{:>14.4f}".format("ATE RMSE [m]", report.ate_rmse),
        "{:<26}{:>14.4f}".format("RPE transl mean [cm]", report.rpe_transl_mean * 100),
        "{:<26}{:>14.4f}".format("RPE transl std [cm]", report.rpe_transl_std * 100),
        "{:<26}{:>14.4f}".format("RPE rot mean [deg]", report.rpe_rot_mean),
        "{:<26}{:>14.4f}".format("RPE rot std [deg]", report.rpe_rot_std),
        "{:<26}{:>14.4f}".format("transl mean [cm]", report.transl_mean * 100),
        "{:<26}{:>14.4f}".format("transl median [cm]", report.transl_median * 100),
        "{:<26}{:>14.4f}".format("transl std [cm]", report.transl_std * 100),
        "{:<26}{:>14.4f}".format("rot mean [deg]", report.rot_mean),
        "{:<26}{:>14.4f}".format("rot median [deg]", report.rot_median),
        "{:<26}{:>14.4f}".format("rot std [deg]", report.rot_std),
        "{:<26}{:>14.2f}".format("fail [%]", report.failure_rate * 100),
        "{:<26}{:>14}".format("complete", "yes" if report.complete else "no"),
        "{:<26}{:>14}".format("frames", "{}/{}".format(report.frames, report.expected_frames)),
    ]
    return "\n".join(lines)


def emit_report(report, path):
    """Write the report as csv at path and as a text table next to it"""
    write_csv(path, MetricsReport.columns(), [report.row()])
    with open(os.path.splitext(path)[0] + ".txt", "w") as f:
        f.write(format_report(report) + "\n")
    logger.info("Metrics written to {}".format(path))


def write_per_frame(path, est, gt):
    """Plot ready csv: frame, estimated camera center and pose errors"""
    rows = []
    for frame, (e, g) in enumerate(zip(est, gt)):
        x, y, z = e.camera_center()
        rot_err, transl_err = pose_error(e, g)
        rows.append([frame] + [_format_value(float(value)) for value in (x, y, z, rot_err, transl_err)])
    write_csv(path, ["frame", "x", "y", "z", "rot_err", "transl_err"], rows)


def load_trajectory(path):
    return Trajectory(read_kitti_poses(path))


def save_trajectory(path, trajectory):
    write_kitti_poses(path, trajectory.poses)


BranchStats = namedtuple("BranchStats", ["rot_mean", "rot_median", "transl_mean", "transl_median", "failures"])


def branch_pose_stats(poses, gt):
    """Error statistics of single branch PnP poses against gt; None poses count as failures"""
    if len(poses) != len(gt):
        raise LengthMismatchError("{} branch poses for {} ground truth poses".format(len(poses), len(gt)))
    errors = np.array([pose_error(pose, truth) for pose, truth in zip(poses, gt) if pose is not None]).reshape(-1, 2)
    failures = sum(pose is None for pose in poses)
    if len(errors) == 0:
        return BranchStats(0.0, 0.0, 0.0, 0.0, failures)
    return BranchStats(float(np.mean(errors[:, 0])), float(np.median(errors[:, 0])), float(np.mean(errors[:, 1])),
                       float(np.median(errors[:, 1])), failures)
