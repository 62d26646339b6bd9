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

"""Generate a synthetic scenario: corridor scene, ground truth trajectory and VO oracle"""

from gettext import gettext as _
import logging
import os
from time import perf_counter
from flowloc.commands import BaseCommand, EXIT_OK, add_quiet_argument, add_seed_argument, build_manifest
from flowloc.config import load_config
from flowloc.synth import GT_FILENAME, MANIFEST_FILENAME, SCENE_FILENAME, VO_FILENAME, build_scenario, \
    save_scenario
from flowloc.ui import UI

logger = logging.getLogger(__name__)


class SynthCommand(BaseCommand):

    def __init__(self):
        super().__init__("synth", _("Generate a synthetic scenario"))

    def setup_parser(self, parser):
        parser.add_argument("--config", help=_("Experiment configuration file (built-in defaults if not set)"))
        parser.add_argument("--out", required=True, help=_("Scenario directory to write"))
        add_seed_argument(parser)
        add_quiet_argument(parser)

    def run(self, args):
        start = perf_counter()
        config = load_config(args.config, {"seed": args.seed})
        scenario = build_scenario(config.scene, config.trajectory, config.vo, config.tracker.K, config.outages)
        artifacts = [SCENE_FILENAME, GT_FILENAME, VO_FILENAME, MANIFEST_FILENAME]
        manifest = build_manifest("synth", config, artifacts, perf_counter() - start)
        save_scenario(scenario, args.out, manifest)
        UI.display(_("Scenario of {} frames and {} points written to {}").format(
            len(scenario), len(scenario.cloud), os.path.abspath(args.out)))
        return EXIT_OK
