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

"""Compare tracking modes on paired seeds and scenarios"""

from dataclasses import replace
from gettext import gettext as _
import logging
import numpy as np
import os
from time import perf_counter
from flowloc.commands import BaseCommand, EXIT_OK, add_quiet_argument, add_seed_argument, build_manifest
from flowloc.config import load_config
from flowloc.evaluation import ate, branch_pose_stats, pose_error_stats
from flowloc.formats import write_csv, write_yaml
from flowloc.synth import build_scenario
from flowloc.tracker import branch_poses, run
from flowloc.ui import UI

logger = logging.getLogger(__name__)

ABLATION_FILENAME = "ablation.csv"
BRANCHES_FILENAME = "branches.csv"
MANIFEST_FILENAME = "manifest.yaml"

ABLATION_COLUMNS = ["mode", "transl_mean_cm", "transl_std_cm", "transl_median_cm", "rot_mean_deg", "rot_std_deg",
                    "rot_median_deg", "ate_m", "fail_pct", "complete", "ms_per_frame", "runs"]
BRANCHES_COLUMNS = ["branch", "rot_mean_deg", "rot_median_deg", "transl_mean_cm", "transl_median_cm", "failures"]


class ModeAccumulator:
    """Per-frame errors and run outcomes of one mode over every seed"""

    def __init__(self, mode):
        self.mode = mode
        self.rot_errors = []
        self.transl_errors = []
        self.ate = []
        self.failed_frames = 0
        self.expected_frames = 0
        self.complete = True
        self.ms = 0.0
        self.runs = 0

    def add(self, tracking, gt, elapsed_ms, fail_threshold):
        tracked = len(tracking.trajectory)
        stats = pose_error_stats(tracking.trajectory, gt[:tracked], fail_threshold)
        self.rot_errors.extend(stats.rot_errors)
        self.transl_errors.extend(stats.transl_errors)
        self.ate.append(ate(tracking.trajectory, gt[:tracked]))
        # frames never reached count as failed
        self.failed_frames += int(np.sum(stats.transl_errors > fail_threshold)) + len(gt) - tracked
        self.expected_frames += len(gt)
        self.complete = self.complete and tracking.complete
        self.ms += elapsed_ms
        self.runs += 1

    def row(self):
        rot = np.array(self.rot_errors)
        transl = np.array(self.transl_errors) * 100
        if len(rot):
            values = [transl.mean(), transl.std(), np.median(transl), rot.mean(), rot.std(), np.median(rot)]
        else:
            values = [0.0] * 6
        values.append(float(np.mean(self.ate)) if self.ate else 0.0)
        values.append(100.0 * self.failed_frames / self.expected_frames if self.expected_frames else 0.0)
        ms_per_frame = self.ms / self.expected_frames if self.expected_frames else 0.0
        return [self.mode] + ["{:.6g}".format(value) for value in values] + \
            [int(self.complete), "{:.3f}".format(ms_per_frame), self.runs]


def format_table(header, rows):
    widths = [max(len(str(value)) for value in column) for column in zip(header, *rows)]
    lines = ["  ".join(str(value).rjust(width) for value, width in zip(line, widths)) for line in [header] + rows]
    return "\n".join(lines)


class AblateCommand(BaseCommand):

    def __init__(self):
        super().__init__("ablate", _("Run several tracking modes on identical seeds and scenarios"))

    def setup_parser(self, parser):
        parser.add_argument("--config", help=_("Experiment configuration file (ablate section: modes, seeds)"))
        parser.add_argument("--out", required=True, help=_("Directory to write the comparison into"))
        add_seed_argument(parser)
        add_quiet_argument(parser)

    def run(self, args):
        start = perf_counter()
        config = load_config(args.config, {"seed": args.seed})
        accumulators = [ModeAccumulator(mode) for mode in config.ablate_modes]
        branches = {"current": ([], []), "next": ([], [])}

        for index in range(config.ablate_seeds):
            seeded = config.reseeded(config.seed + index)
            logger.info("Seed {} of {}: master seed {}".format(index + 1, config.ablate_seeds, seeded.seed))
            scenario = build_scenario(seeded.scene, seeded.trajectory, seeded.vo, seeded.tracker.K, seeded.outages)
            for accumulator in accumulators:
                tracker_config = replace(seeded.tracker, mode=accumulator.mode)
                run_start = perf_counter()
                tracking = run(tracker_config, scenario,
                               UI.progress("{} seed {}".format(accumulator.mode, seeded.seed), len(scenario)))
                UI.finish_progress()
                accumulator.add(tracking, scenario.gt, (perf_counter() - run_start) * 1000.0,
                                seeded.tracker.failure_threshold)
            if config.ablate_branches:
                cur_poses, next_poses = branch_poses(seeded.tracker, scenario)
                branches["current"][0].extend(cur_poses)
                branches["current"][1].extend(scenario.gt.poses[:-1])
                branches["next"][0].extend(next_poses)
                branches["next"][1].extend(scenario.gt.poses[1:])

        os.makedirs(args.out, exist_ok=True)
        artifacts = [os.path.join(args.out, name) for name in (ABLATION_FILENAME, "ablation.txt", MANIFEST_FILENAME)]
        rows = [accumulator.row() for accumulator in accumulators]
        write_csv(artifacts[0], ABLATION_COLUMNS, rows)
        table = format_table(ABLATION_COLUMNS, rows)
        with open(artifacts[1], "w") as f:
            f.write(table + "\n")
        if config.ablate_branches:
            branch_rows = []
            for name, (poses, gt) in branches.items():
                stats = branch_pose_stats(poses, gt)
                branch_rows.append([name] + ["{:.6g}".format(value) for value in (
                    stats.rot_mean, stats.rot_median, stats.transl_mean * 100, stats.transl_median * 100)] +
                    [stats.failures])
            artifacts.append(os.path.join(args.out, BRANCHES_FILENAME))
            write_csv(artifacts[-1], BRANCHES_COLUMNS, branch_rows)
            table += "\n\n" + format_table(BRANCHES_COLUMNS, branch_rows)
        write_yaml(artifacts[2], build_manifest("ablate", config, artifacts, perf_counter() - start,
                                                modes=list(config.ablate_modes), seeds=config.ablate_seeds))
        UI.display(table)
        return EXIT_OK
