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

"""Build a global map from sensor frame scans and their poses"""

from gettext import gettext as _
import logging
import os
from flowloc.commands import BaseCommand, EXIT_OK
from flowloc.config import load_config
from flowloc.formats import BINARY_CLOUD_EXTENSIONS, TEXT_CLOUD_EXTENSIONS, read_cloud, read_kitti_poses, \
    write_cloud
from flowloc.maps import PointCloud, aggregate_scans, downsample
from flowloc.ui import UI

logger = logging.getLogger(__name__)


def list_scans(directory):
    """Cloud files of directory, in name order"""
    extensions = TEXT_CLOUD_EXTENSIONS + BINARY_CLOUD_EXTENSIONS
    names = sorted(name for name in os.listdir(directory) if os.path.splitext(name)[1].lower() in extensions)
    return [os.path.join(directory, name) for name in names]


class MapCommand(BaseCommand):

    def __init__(self):
        super().__init__("map", _("Aggregate scans into a downsampled global map"))

    def setup_parser(self, parser):
        parser.add_argument("--scans", required=True, help=_("Directory of sensor frame scans, one file per pose"))
        parser.add_argument("--poses", required=True, help=_("World to sensor poses of the scans, KITTI format"))
        parser.add_argument("--out", required=True, help=_("Map file to write (.xyz or .xmpc)"))
        parser.add_argument("--config", help=_("Experiment configuration file, for its map.resolution"))
        parser.add_argument("--resolution", type=float,
                            help=_("Voxel size in meters, overriding the configuration map.resolution"))

    def run(self, args):
        resolution = args.resolution
        if resolution is None:
            resolution = load_config(args.config).map_resolution
        paths = list_scans(args.scans)
        if not paths:
            raise FileNotFoundError("No scan found in {}".format(args.scans))
        logger.info("Aggregating {} scans".format(len(paths)))
        scans = [PointCloud(read_cloud(path)) for path in paths]
        global_map = downsample(aggregate_scans(scans, read_kitti_poses(args.poses)), resolution)
        directory = os.path.dirname(args.out)
        if directory:
            os.makedirs(directory, exist_ok=True)
        write_cloud(args.out, global_map.cloud.points)
        UI.display(_("Map of {} points written to {}").format(len(global_map), args.out))
        return EXIT_OK
