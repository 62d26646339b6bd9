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


"""Tests for experiment configuration"""

import os
import shutil
import tempfile
from ..tools import LoggedTestCase, change_xdg_path, get_data_dir, get_root_dir
from flowloc import settings
from flowloc.config import DEFAULTS, config_from_dict, load_config, merge
from flowloc.formats import write_yaml
from flowloc.synth import Outage
from flowloc.tools import ConfigError, MalformedFileError, Singleton


class TestMerge(LoggedTestCase):

    def test_nested_update(self):
        merged = merge({"a": 1, "b": {"c": 2, "d": 3}}, {"b": {"d": 4}})
        self.assertEqual(merged, {"a": 1, "b": {"c": 2, "d": 4}})

    def test_base_untouched(self):
        base = {"b": {"c": 2}}
        merge(base, {"b": {"c": 5}})
        self.assertEqual(base, {"b": {"c": 2}})

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as context:
            merge(DEFAULTS, {"tracker": {"bogus": 1}})
        self.assertEqual(context.exception.field, "tracker.bogus")

    def test_section_not_mapping(self):
        with self.assertRaises(ConfigError) as context:
            merge(DEFAULTS, {"noise": 3})
        self.assertEqual(context.exception.field, "noise")


class TestExperimentConfig(LoggedTestCase):
    """Typed configuration"""

    def test_defaults(self):
        config = config_from_dict()
        self.assertEqual(config.mode, "multi_view")
        self.assertEqual(config.tracker.mode, "multi_view")
        self.assertEqual(config.tracker.K.width, settings.DEFAULT_IMAGE_WIDTH)
        self.assertEqual(config.trajectory.frame_count, 100)
        self.assertEqual(config.outages, [])
        self.assertFalse(config.ablate_branches)

    def test_seeds_derived_from_master(self):
        config = config_from_dict({"seed": 10})
        self.assertEqual(config.scene.seed, 10 + settings.SEED_OFFSETS["scene"])
        self.assertEqual(config.trajectory.seed, 10 + settings.SEED_OFFSETS["trajectory"])
        self.assertEqual(config.vo.seed, 10 + settings.SEED_OFFSETS["vo"])
        self.assertEqual(config.tracker.noise.seed, 10 + settings.SEED_OFFSETS["noise"])
        self.assertEqual(config.tracker.ransac.seed, 10 + settings.SEED_OFFSETS["ransac"])
        self.assertEqual(config.tracker.init_seed, 10 + settings.SEED_OFFSETS["init"])

    def test_explicit_seed_kept(self):
        config = config_from_dict({"seed": 1, "noise": {"seed": 99}})
        self.assertEqual(config.tracker.noise.seed, 99)
        reseeded = config.reseeded(5)
        self.assertEqual(reseeded.seed, 5)
        self.assertEqual(reseeded.tracker.noise.seed, 99)
        self.assertEqual(reseeded.scene.seed, 5)

    def test_overrides(self):
        config = config_from_dict({"mode": "loose_coupled", "seed": 2}, {"mode": "frame_by_frame", "seed": None})
        self.assertEqual(config.mode, "frame_by_frame")
        self.assertEqual(config.seed, 2)

    def test_with_mode(self):
        config = config_from_dict({"seed": 3}).with_mode("visual_odometry")
        self.assertEqual(config.tracker.mode, "visual_odometry")
        self.assertEqual(config.seed, 3)

    def test_resolved_mapping_reloads(self):
        config = config_from_dict({"seed": 4, "outages": [{"start": 2, "length": 1}]})
        resolved = config.to_dict()
        self.assertEqual(resolved["noise"]["seed"], 4 + settings.SEED_OFFSETS["noise"])
        self.assertEqual(config_from_dict(resolved).to_dict(), resolved)

    def test_outages(self):
        config = config_from_dict({"outages": [{"start": 5, "length": 2, "kind": "depth"}, {"start": 9}]})
        self.assertEqual(config.outages, [Outage(5, 2, "depth"), Outage(9)])

    def test_invalid_values(self):
        for mapping, field in (({"mode": "slam"}, "mode"),
                               ({"seed": -1}, "seed"),
                               ({"seed": 1.5}, "seed"),
                               ({"trajectory": {"frame_count": 0}}, "trajectory.frame_count"),
                               ({"map": {"resolution": 0}}, "map.resolution"),
                               ({"noise": {"dropout_fraction": 2.0}}, "noise.dropout_fraction"),
                               ({"ablate": {"modes": []}}, "ablate.modes"),
                               ({"ablate": {"modes": ["slam"]}}, "ablate.modes"),
                               ({"ablate": {"seeds": 0}}, "ablate.seeds"),
                               ({"ablate": {"branches": "yes"}}, "ablate.branches"),
                               ({"outages": {"start": 1}}, "outages"),
                               ({"outages": [3]}, "outages.0"),
                               ({"outages": [{"begin": 3}]}, "outages.0")):
            with self.assertRaises(ConfigError) as context:
                config_from_dict(mapping)
            self.assertEqual(context.exception.field, field, mapping)

    def test_sections_typed(self):
        with self.assertRaises(ConfigError) as context:
            config_from_dict({"camera": {"fx": -1.0}})
        self.assertTrue(context.exception.field.startswith("camera"))


class TestLoadConfig(LoggedTestCase):
    """Experiment files, manifests and user defaults"""

    def setUp(self):
        super().setUp()
        self.tempdir = tempfile.mkdtemp()

    def tearDown(self):
        Singleton._instances = {}
        change_xdg_path('XDG_CONFIG_HOME', remove=True)
        shutil.rmtree(self.tempdir)
        super().tearDown()

    def write(self, name, content):
        path = os.path.join(self.tempdir, name)
        write_yaml(path, content)
        return path

    def test_experiment_file(self):
        config = load_config(self.write("exp.yaml", {"mode": "loose_coupled", "noise": {"gaussian_sigma": 2.0}}),
                             user_defaults=False)
        self.assertEqual(config.mode, "loose_coupled")
        self.assertEqual(config.tracker.noise.gaussian_sigma, 2.0)

    def test_manifest(self):
        """A run manifest reproduces its run"""
        original = config_from_dict({"seed": 8, "trajectory": {"frame_count": 7}})
        path = self.write("manifest.yaml", {"tool": "flowloc", "config": original.to_dict()})
        self.assertEqual(load_config(path, user_defaults=False).to_dict(), original.to_dict())

    def test_no_file(self):
        self.assertEqual(load_config(user_defaults=False).to_dict(), config_from_dict().to_dict())

    def test_unknown_key_in_file(self):
        with self.assertRaises(ConfigError):
            load_config(self.write("exp.yaml", {"trajectroy": {"frame_count": 3}}), user_defaults=False)

    def test_invalid_yaml(self):
        self.expect_warn_error = True
        path = os.path.join(self.tempdir, "bad.yaml")
        with open(path, "w") as f:
            f.write("seed: [1\n")
        with self.assertRaises(MalformedFileError):
            load_config(path, user_defaults=False)

    def test_user_defaults(self):
        """xdg config file values sit below the experiment file"""
        change_xdg_path('XDG_CONFIG_HOME', os.path.join(get_data_dir(), 'configs', 'valid'))
        config = load_config(self.write("exp.yaml", {"trajectory": {"frame_count": 20}}))
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.tracker.noise.gaussian_sigma, 0.5)
        self.assertEqual(config.trajectory.frame_count, 20)

    def test_user_defaults_ignored(self):
        change_xdg_path('XDG_CONFIG_HOME', os.path.join(get_data_dir(), 'configs', 'valid'))
        self.assertEqual(load_config(user_defaults=False).seed, 0)

    def test_invalid_user_defaults(self):
        self.expect_warn_error = True
        change_xdg_path('XDG_CONFIG_HOME', os.path.join(get_data_dir(), 'configs', 'invalid'))
        self.assertEqual(load_config().seed, 0)

    def test_shipped_experiments(self):
        directory = os.path.join(get_root_dir(), "data", "configs")
        names = sorted(os.listdir(directory))
        self.assertIn("default.yaml", names)
        for name in names:
            config = load_config(os.path.join(directory, name), user_defaults=False)
            self.assertGreaterEqual(config.trajectory.frame_count, 1, name)
