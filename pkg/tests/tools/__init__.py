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

"""Common tools between tests"""

# DO NOT IMPORT HERE flowloc.* directly, only lazy import it in function.
from io import StringIO
from contextlib import suppress
import importlib
import logging
import os
import xdg.BaseDirectory
from unittest import TestCase

logger = logging.getLogger(__name__)

FLOWLOC = "flowloc"


class LoggedTestCase(TestCase):
    """A base TestCase class which asserts if there is a warning or error unless self.expect_warn_error is True"""

    def setUp(self):
        super().setUp()
        self.error_warn_logs = StringIO()
        self.__handler = logging.StreamHandler(self.error_warn_logs)
        self.__handler.setLevel(logging.WARNING)
        logging.root.addHandler(self.__handler)
        self.expect_warn_error = False

    def tearDown(self):
        super().tearDown()
        logging.root.removeHandler(self.__handler)
        if self.expect_warn_error:
            self.assertNotEqual(self.error_warn_logs.getvalue(), "")
        else:
            self.assertEqual(self.error_warn_logs.getvalue(), "")
        self.error_warn_logs.close()


def get_data_dir():
    """Return absolute data dir path"""
    return os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'data'))


def get_root_dir():
    """Return absolute project root dir path"""
    return os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))


def change_xdg_path(key, value=None, remove=False):
    if value:
        os.environ[key] = value
    if remove:
        with suppress(KeyError):
            os.environ.pop(key)
    import flowloc.tools
    importlib.reload(xdg.BaseDirectory)
    with suppress(KeyError):
        flowloc.tools.Singleton._instances.pop(flowloc.tools.ConfigHandler)
    flowloc.tools.load_first_config = xdg.BaseDirectory.load_first_config


def small_camera():
    """A 320x120 camera, fast to render"""
    from flowloc.geometry import CameraIntrinsics
    return CameraIntrinsics(fx=160.0, fy=160.0, cx=160.0, cy=60.0, width=320, height=120)


def frustum_points(pose, count, seed=0, depth=(4.0, 30.0), K=None):
    """World points seen by pose at depths within depth, spread over the whole image"""
    import numpy as np
    from flowloc.geometry import pose_inverse, transform_point
    K = small_camera() if K is None else K
    rng = np.random.default_rng(seed)
    z = rng.uniform(depth[0], depth[1], count)
    u = rng.uniform(0, K.width - 1, count)
    v = rng.uniform(0, K.height - 1, count)
    p_cam = np.column_stack([(u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, z])
    return transform_point(pose_inverse(pose), p_cam)


def street_pose(x=0.0, y=0.0, heading=0.0):
    """Level camera at the synthetic trajectory height looking along heading"""
    import numpy as np
    from flowloc import settings
    from flowloc.geometry import look_at
    return look_at([x, y, settings.CAMERA_HEIGHT], [np.cos(heading), np.sin(heading), 0.0])


def small_scenario(frame_count=4, profile="straight", outages=(), vo=None, seed=0):
    """Scenario of a short corridor seen through the default camera"""
    from flowloc.geometry import CameraIntrinsics
    from flowloc.synth import SceneConfig, TrajectoryConfig, VoOracleConfig, build_scenario
    scene = SceneConfig(extent=50.0, margin=60.0, pole_count=10, seed=seed)
    trajectory = TrajectoryConfig(frame_count=frame_count, profile=profile, seed=seed + 1)
    vo = VoOracleConfig(seed=seed + 2) if vo is None else vo
    return build_scenario(scene, trajectory, vo, CameraIntrinsics(), outages)
