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

"""Evaluate an estimated trajectory against the ground truth"""

from gettext import gettext as _
import logging
import os
from flowloc import settings
from flowloc.commands import BaseCommand, EXIT_OK, add_quiet_argument
from flowloc.evaluation import emit_report, evaluate, format_report, load_trajectory, write_per_frame
from flowloc.ui import UI

logger = logging.getLogger(__name__)


class EvalCommand(BaseCommand):

    def __init__(self):
        super().__init__("eval", _("Compute ATE, RPE and pose error statistics of a trajectory"))

    def setup_parser(self, parser):
        parser.add_argument("--est", required=True, help=_("Estimated trajectory, KITTI format"))
        parser.add_argument("--gt", required=True, help=_("Ground truth trajectory, KITTI format"))
        parser.add_argument("--out", help=_("Metrics csv to write; a text table and per frame errors go next to it"))
        parser.add_argument("--align", action="store_true", help=_("Rigidly align the estimate before the ATE"))
        parser.add_argument("--rpe-delta", type=int, default=1, help=_("RPE frame delta (default: %(default)s)"))
        parser.add_argument("--rpe-distance", type=float,
                            help=_("RPE over pairs this many meters apart instead of a frame delta"))
        parser.add_argument("--fail-threshold", type=float, default=settings.DEFAULT_FAILURE_THRESHOLD,
                            help=_("Translation error in meters above which a frame fails (default: %(default)s)"))
        parser.add_argument("--prefix", action="store_true",
                            help=_("Evaluate a shorter estimate against the matching ground truth prefix"))
        add_quiet_argument(parser)

    def run(self, args):
        est = load_trajectory(args.est)
        gt = load_trajectory(args.gt)
        report = evaluate(est, gt, align=args.align, delta=args.rpe_delta, distance=args.rpe_distance,
                          fail_threshold=args.fail_threshold, allow_prefix=args.prefix)
        if args.out:
            directory = os.path.dirname(args.out)
            if directory:
                os.makedirs(directory, exist_ok=True)
            emit_report(report, args.out)
            write_per_frame(os.path.splitext(args.out)[0] + "_per_frame.csv", est, gt[:len(est)])
        UI.display(format_report(report))
        return EXIT_OK
