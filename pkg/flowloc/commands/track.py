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

"""Track a camera along a scenario and write trajectory, diagnostics and metrics"""

from dataclasses import replace
from functools import partial
from gettext import gettext as _
import logging
import os
from time import perf_counter
from flowloc.commands import BaseCommand, EXIT_INTERRUPTED, EXIT_OK, add_quiet_argument, add_seed_argument, \
    build_manifest
from flowloc.config import load_config
from flowloc.evaluation import evaluate, emit_report, format_report, save_trajectory, write_per_frame
from flowloc.formats import dump_frame, write_csv, write_yaml
from flowloc.synth import load_scenario
from flowloc.tracker import DIAGNOSTICS_COLUMNS, MODES, STAGES, run
from flowloc.ui import UI

logger = logging.getLogger(__name__)

TRAJECTORY_FILENAME = "trajectory.txt"
DIAGNOSTICS_FILENAME = "diagnostics.csv"
ENERGY_TRACE_FILENAME = "energy_trace.csv"
PER_FRAME_FILENAME = "per_frame.csv"
METRICS_FILENAME = "metrics.csv"
MANIFEST_FILENAME = "manifest.yaml"


class TrackCommand(BaseCommand):

    def __init__(self):
        super().__init__("track", _("Track a camera along a scenario"))

    def setup_parser(self, parser):
        parser.add_argument("--config", help=_("Experiment configuration file or run manifest"))
        parser.add_argument("--scenario", required=True, help=_("Scenario directory written by synth"))
        parser.add_argument("--out", required=True, help=_("Run directory to write"))
        parser.add_argument("--mode", choices=MODES, help=_("Tracking mode, overriding the configuration one"))
        parser.add_argument("--dump-dir", help=_("Directory to write the depth map and flows of every frame into"))
        add_seed_argument(parser)
        add_quiet_argument(parser)

    def run(self, args):
        start = perf_counter()
        config = load_config(args.config, {"mode": args.mode, "seed": args.seed})
        # nothing is written before the inputs are known to be readable
        scenario, _manifest = load_scenario(args.scenario)
        scenario = replace(scenario, outages=scenario.outages + config.outages)

        dump = None
        if args.dump_dir:
            os.makedirs(args.dump_dir, exist_ok=True)
            dump = partial(dump_frame, args.dump_dir)
        tracking = run(config.tracker, scenario, UI.progress(_("Tracking"), len(scenario)), dump)
        UI.finish_progress()

        os.makedirs(args.out, exist_ok=True)
        paths = {name: os.path.join(args.out, name) for name in (TRAJECTORY_FILENAME, DIAGNOSTICS_FILENAME,
                                                                  ENERGY_TRACE_FILENAME, PER_FRAME_FILENAME,
                                                                  METRICS_FILENAME, MANIFEST_FILENAME)}
        save_trajectory(paths[TRAJECTORY_FILENAME], tracking.trajectory)
        write_csv(paths[DIAGNOSTICS_FILENAME], DIAGNOSTICS_COLUMNS, tracking.diagnostics)
        write_csv(paths[ENERGY_TRACE_FILENAME], ["frame", "iteration", "energy"],
                  [[frame, iteration, "{:.9g}".format(energy)] for frame, iteration, energy in tracking.energy_trace])
        gt = scenario.gt[:len(tracking.trajectory)]
        write_per_frame(paths[PER_FRAME_FILENAME], tracking.trajectory, gt)
        report = evaluate(tracking.trajectory, scenario.gt, fail_threshold=config.tracker.failure_threshold,
                          allow_prefix=True)
        emit_report(report, paths[METRICS_FILENAME])

        stage_ms = {stage: 0.0 for stage in STAGES}
        for row in tracking.diagnostics:
            for stage, value in zip(STAGES, row[DIAGNOSTICS_COLUMNS.index("ms_crop"):]):
                stage_ms[stage] += float(value)
        artifacts = list(paths.values()) + [os.path.splitext(paths[METRICS_FILENAME])[0] + ".txt"]
        manifest = build_manifest("track", config, artifacts, perf_counter() - start,
                                  scenario=os.path.abspath(args.scenario), complete=tracking.complete,
                                  frames=len(tracking.trajectory), expected_frames=len(scenario),
                                  stage_ms={stage: round(value, 3) for stage, value in stage_ms.items()})
        write_yaml(paths[MANIFEST_FILENAME], manifest)

        UI.display(format_report(report))
        if not tracking.complete:
            logger.info("Exiting with the interrupted status")
            return EXIT_INTERRUPTED
        return EXIT_OK
