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

"""On-disk formats: KITTI pose files, point clouds, flow and depth dumps, csv tables and yaml manifests

KITTI files hold camera to world 3x4 matrices while PoseSE3 maps world to camera: readers and writers invert.
"""

import csv
import logging
import numpy as np
import os
from flowloc import settings
from flowloc.flow import FlowField
from flowloc.geometry import PoseSE3, pose_inverse
from flowloc.tools import MalformedFileError
import yaml

logger = logging.getLogger(__name__)

CLOUD_HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("count", "<u8")])
FLOW_HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("width", "<u4"), ("height", "<u4")])

TEXT_CLOUD_EXTENSIONS = (".xyz", ".txt")
BINARY_CLOUD_EXTENSIONS = (".xmpc", ".bin")


def _malformed(path, line_number, reason):
    error = MalformedFileError(path, line_number, reason)
    logger.error(str(error))
    return error


def _parse_rows(path, field_count):
    """Float rows of a whitespace separated text file, blank lines skipped"""
    rows = []
    with open(path) as f:
        for line_number, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != field_count:
                raise _malformed(path, line_number, "expected {} fields, got {}".format(field_count, len(fields)))
            try:
                values = [float(value) for value in fields]
            except ValueError:
                raise _malformed(path, line_number, "non numeric field")
            if not all(np.isfinite(values)):
                raise _malformed(path, line_number, "non finite value")
            rows.append(values)
    return rows


def read_kitti_poses(path):
    """World to camera poses of a KITTI odometry pose file"""
    poses = []
    for row in _parse_rows(path, 12):
        matrix = np.array(row).reshape(3, 4)
        poses.append(pose_inverse(PoseSE3.from_matrix(matrix)))
    logger.debug("Read {} poses from {}".format(len(poses), path))
    return poses


def format_kitti_pose(pose):
    precision = settings.KITTI_SIGNIFICANT_DIGITS - 1
    return " ".join("{:.{}e}".format(value, precision) for value in pose_inverse(pose).matrix()[:3].reshape(-1))


def write_kitti_poses(path, poses):
    with open(path, "w") as f:
        for pose in poses:
            f.write(format_kitti_pose(pose) + "\n")


def read_xyz(path):
    rows = _parse_rows(path, 3)
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


def write_xyz(path, points):
    with open(path, "w") as f:
        for x, y, z in np.asarray(points).reshape(-1, 3):
            f.write("{:.9g} {:.9g} {:.9g}\n".format(x, y, z))


def read_binary_cloud(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < CLOUD_HEADER.itemsize:
        raise _malformed(path, 0, "truncated header")
    header = np.frombuffer(raw[:CLOUD_HEADER.itemsize], dtype=CLOUD_HEADER)[0]
    if header["magic"] != settings.CLOUD_MAGIC:
        raise _malformed(path, 0, "bad magic {!r}".format(header["magic"]))
    if header["version"] != settings.FORMAT_VERSION:
        raise _malformed(path, 0, "unsupported version {}".format(header["version"]))
    count = int(header["count"])
    payload = raw[CLOUD_HEADER.itemsize:]
    if len(payload) != count * 12:
        raise _malformed(path, 0, "{} points announced, {} bytes of payload".format(count, len(payload)))
    return np.frombuffer(payload, dtype="<f4").reshape(count, 3).astype(np.float64)


def write_binary_cloud(path, points):
    points = np.asarray(points).reshape(-1, 3)
    header = np.array([(settings.CLOUD_MAGIC, settings.FORMAT_VERSION, len(points))], dtype=CLOUD_HEADER)
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(points.astype("<f4").tobytes())


def read_cloud(path):
    """(N, 3) points of a text or binary cloud file, chosen by extension"""
    extension = os.path.splitext(path)[1].lower()
    if extension in BINARY_CLOUD_EXTENSIONS:
        return read_binary_cloud(path)
    return read_xyz(path)


def write_cloud(path, points):
    extension = os.path.splitext(path)[1].lower()
    if extension in BINARY_CLOUD_EXTENSIONS:
        write_binary_cloud(path, points)
    else:
        write_xyz(path, points)


def write_flow(path, field):
    """Dump du, dv and valid as float32 planes after a 16 bytes header"""
    header = np.array([(settings.FLOW_MAGIC, settings.FORMAT_VERSION, field.width, field.height)], dtype=FLOW_HEADER)
    with open(path, "wb") as f:
        f.write(header.tobytes())
        for plane in (field.du, field.dv, field.valid):
            f.write(plane.astype("<f4").tobytes())


def read_flow(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < FLOW_HEADER.itemsize:
        raise _malformed(path, 0, "truncated header")
    header = np.frombuffer(raw[:FLOW_HEADER.itemsize], dtype=FLOW_HEADER)[0]
    if header["magic"] != settings.FLOW_MAGIC:
        raise _malformed(path, 0, "bad magic {!r}".format(header["magic"]))
    width, height = int(header["width"]), int(header["height"])
    planes = np.frombuffer(raw[FLOW_HEADER.itemsize:], dtype="<f4")
    if len(planes) != 3 * width * height:
        raise _malformed(path, 0, "payload doesn't match {}x{}".format(width, height))
    du, dv, valid = planes.reshape(3, height, width).astype(np.float64)
    return FlowField(du, dv, valid > 0.5)


def write_depth_pgm(path, depth_map, scale=settings.DEPTH_PGM_SCALE):
    """16 bits binary graymap, value = depth * scale, 0 where invalid"""
    values = np.where(depth_map.valid, np.round(depth_map.depth * scale), 0).clip(0, 65535).astype(">u2")
    with open(path, "wb") as f:
        f.write("P5\n# scale {}\n{} {}\n65535\n".format(scale, depth_map.width, depth_map.height).encode("ascii"))
        f.write(values.tobytes())


def read_depth_pgm(path):
    """(depth, valid) of a graymap written by write_depth_pgm"""
    with open(path, "rb") as f:
        raw = f.read()
    tokens = []
    scale = 1.0
    position = 0
    while len(tokens) < 4:
        end = raw.index(b"\n", position)
        line = raw[position:end].decode("ascii")
        position = end + 1
        if line.startswith("#"):
            fields = line[1:].split()
            if len(fields) == 2 and fields[0] == "scale":
                scale = float(fields[1])
            continue
        tokens.extend(line.split())
    if tokens[0] != "P5":
        raise _malformed(path, 1, "not a binary graymap")
    width, height = int(tokens[1]), int(tokens[2])
    values = np.frombuffer(raw[position:position + 2 * width * height], dtype=">u2").reshape(height, width)
    return values.astype(np.float64) / scale, values > 0


def dump_frame(directory, frame, depth_map, triplet):
    """Write the depth map and the three flows of a frame as <frame>_depth.pgm and <frame>_<flow>.flo"""
    prefix = os.path.join(directory, "{:06d}".format(frame))
    write_depth_pgm(prefix + "_depth.pgm", depth_map)
    for name in ("c2d", "n2d", "c2n"):
        write_flow("{}_{}.flo".format(prefix, name), getattr(triplet, "f_" + name))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path):
    """(header, rows) of a csv file, values kept as strings"""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        return [], []
    return rows[0], rows[1:]


def write_yaml(path, content):
    with open(path, "w") as f:
        yaml.safe_dump(content, f, default_flow_style=False, sort_keys=False)


def read_yaml(path):
    with open(path) as f:
        try:
            return yaml.safe_load(f)
        except yaml.YAMLError as e:
            line = getattr(getattr(e, "problem_mark", None), "line", -1) + 1
            raise _malformed(path, line, "invalid yaml: {}".format(e))
