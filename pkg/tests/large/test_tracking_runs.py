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


"""Full tracking runs on the shipped experiments"""

from dataclasses import replace
import os
import numpy as np
from ..tools import LoggedTestCase, get_root_dir
from flowloc.config import config_from_dict, load_config
from flowloc.evaluation import ate
from flowloc.geometry import pose_error
from flowloc.synth import build_scenario, integrate_vo
from flowloc.tracker import run


def scenario_of(config):
    return build_scenario(config.scene, config.trajectory, config.vo, config.tracker.K, config.outages)


class TestOutageCompletion(LoggedTestCase):
    """Three short flow losses: only the modes with a second source of motion get through"""

    def test_completion_by_mode(self):
        self.expect_warn_error = True
        config = load_config(os.path.join(get_root_dir(), "data", "configs", "outages.yaml"), user_defaults=False)
        scenario = scenario_of(config)
        outcomes = {}
        for mode in ("frame_by_frame", "loose_coupled", "multi_view"):
            tracking = run(replace(config.tracker, mode=mode), scenario)
            outcomes[mode] = tracking
            energies = [energy for _, _, energy in tracking.energy_trace]
            self.assertTrue(all(np.isfinite(energies)), mode)
        self.assertFalse(outcomes["frame_by_frame"].complete)
        self.assertEqual(len(outcomes["frame_by_frame"].trajectory), 60)
        self.assertTrue(outcomes["loose_coupled"].complete)
        self.assertTrue(outcomes["multi_view"].complete)
        statuses = [row[1] for row in outcomes["multi_view"].diagnostics]
        self.assertNotIn("failed", statuses)
        # both frames of a pair inside an outage
        self.assertEqual(statuses.count("rescued"), 6)


class TestModeDominance(LoggedTestCase):
    """Correlated flow noise on paired seeds: refining frame pairs beats single frame PnP"""

    def final_pair_error(self, tracking, scenario):
        """Translation error of the last frame refined by a pair step, inf when tracking never got there"""
        frame = len(scenario) - 2
        if len(tracking.trajectory) <= frame:
            return np.inf
        return pose_error(tracking.trajectory[frame], scenario.gt[frame])[1]

    def test_multi_view_against_frame_by_frame(self):
        errors = {"frame_by_frame": [], "multi_view": []}
        for seed in range(50):
            config = config_from_dict({"seed": seed, "trajectory": {"frame_count": 8, "profile": "s_curve"},
                                       "noise": {"gaussian_sigma": 2.0, "outlier_fraction": 0.1,
                                                 "outlier_magnitude": 30.0, "bias_sigma": 1.0}})
            scenario = scenario_of(config)
            for mode, mode_errors in errors.items():
                mode_errors.append(self.final_pair_error(run(replace(config.tracker, mode=mode), scenario), scenario))
        # lost frames are allowed, not required
        self.expect_warn_error = self.error_warn_logs.getvalue() != ""
        self.assertLessEqual(np.median(errors["multi_view"]), np.median(errors["frame_by_frame"]))


class TestDriftContrast(LoggedTestCase):
    """Integrated VO drifts away while map tracking stays close to the ground truth

    20 seeds of 400 frames: the longest test of the suite.
    """

    def test_vo_against_multi_view(self):
        ratios = []
        for seed in range(20):
            config = config_from_dict({"seed": seed, "noise": {"gaussian_sigma": 1.0},
                                       "vo": {"transl_drift_sigma": 0.05},
                                       "trajectory": {"frame_count": 400, "profile": "s_curve"}})
            scenario = scenario_of(config)
            vo = integrate_vo(scenario.gt[0], scenario.vo_relative)
            tracking = run(config.tracker, scenario)
            self.assertTrue(tracking.complete, seed)
            ratios.append(ate(vo, scenario.gt) / ate(tracking.trajectory, scenario.gt))
        # degraded pair steps are allowed, not required
        self.expect_warn_error = self.error_warn_logs.getvalue() != ""
        self.assertGreaterEqual(np.median(ratios), 10.0)
