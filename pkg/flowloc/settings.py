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

VERSION = "0.1.0"

CONFIG_FILENAME = "flowloc"
LOG_CFG_ENVIRON_VARIABLE = "LOG_CFG"
LOG_LEVEL_ENVIRON_VARIABLE = "FLOWLOC_LOG_LEVEL"

# geometry
SMALL_ANGLE_THRESHOLD = 1e-8
DEFAULT_MAX_TRANSL_PER_AXIS = 2.0  # meters
DEFAULT_MAX_ROT_PER_AXIS = 10.0  # degrees

# camera, 960x320 crops
DEFAULT_IMAGE_WIDTH = 960
DEFAULT_IMAGE_HEIGHT = 320
DEFAULT_FOCAL = 480.0

# map
DEFAULT_MAP_RESOLUTION = 0.1
DEFAULT_CROP_FORWARD = 100.0
DEFAULT_CROP_BACKWARD = 10.0
DEFAULT_CROP_LATERAL = 25.0
INDEX_CELLS_PER_CROP = 32

# rendering
DEFAULT_OCCLUSION_APERTURE_DEG = 10.0
DEFAULT_OCCLUSION_WINDOW = 7
ZBUFFER_TIE_EPSILON = 1e-9

# ransac / refinement
DEFAULT_RANSAC_THRESHOLD = 2.0
DEFAULT_RANSAC_CONFIDENCE = 0.99
DEFAULT_RANSAC_MAX_ITERS = 1000
DEFAULT_RANSAC_MIN_INLIERS = 20
DEFAULT_HUBER_DELTA = 2.0
REFINE_MAX_ITERS = 50
HYPOTHESIS_MAX_ITERS = 10

# joint optimizer
DEFAULT_LAMBDA0 = 1e-4
DEFAULT_REL_TOL = 1e-6
DEFAULT_ENERGY_MAX_ITERS = 50
LAMBDA_UP = 10.0
LAMBDA_DOWN = 2.0
STATIONARITY_TOLERANCE = 1e-3

# tracker
DEFAULT_CONSISTENCY_CAP = 2000
DEFAULT_MAX_CORRESPONDENCES = 3000
DEFAULT_LOOSE_REPROJ_THRESHOLD = 2.0
DEFAULT_FAILURE_THRESHOLD = 4.0  # meters

# synthetic world
CAMERA_HEIGHT = 1.7
S_CURVE_PERIOD = 120  # frames
MIN_VISIBLE_PIXELS = 500

# evaluation / formats
KITTI_SIGNIFICANT_DIGITS = 12
CLOUD_MAGIC = b"XMPC"
FLOW_MAGIC = b"XMFL"
FORMAT_VERSION = 1
DEPTH_PGM_SCALE = 256.0

# seed offsets from the master seed
SEED_OFFSETS = {
    "scene": 0,
    "trajectory": 1,
    "vo": 2,
    "noise": 3,
    "ransac": 4,
    "init": 5,
}
