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

"""Experiment configuration

Precedence: built-in defaults < user defaults (xdg config file) < experiment file < command line overrides.
Seeds left to null derive from the master seed with the offsets of settings.SEED_OFFSETS.
"""

import copy
from dataclasses import dataclass, field
import logging
from flowloc import settings
from flowloc.backend.joint_optimizer import EnergyConfig
from flowloc.backend.pnp import RansacConfig
from flowloc.formats import read_yaml
from flowloc.frontend.oracle import FlowNoiseModel
from flowloc.geometry import CameraIntrinsics, PerturbBounds
from flowloc.maps import CropExtents
from flowloc.synth import Outage, SceneConfig, TrajectoryConfig, VoOracleConfig
from flowloc.tools import ConfigError, ConfigHandler
from flowloc.tracker import MODES, TrackerConfig

logger = logging.getLogger(__name__)

DEFAULTS = {
    "mode": "multi_view",
    "seed": 0,
    "camera": {
        "fx": settings.DEFAULT_FOCAL,
        "fy": settings.DEFAULT_FOCAL,
        "cx": settings.DEFAULT_IMAGE_WIDTH / 2,
        "cy": settings.DEFAULT_IMAGE_HEIGHT / 2,
        "width": settings.DEFAULT_IMAGE_WIDTH,
        "height": settings.DEFAULT_IMAGE_HEIGHT,
    },
    "crop": {
        "forward": settings.DEFAULT_CROP_FORWARD,
        "backward": settings.DEFAULT_CROP_BACKWARD,
        "lateral": settings.DEFAULT_CROP_LATERAL,
    },
    "map": {
        "resolution": settings.DEFAULT_MAP_RESOLUTION,
    },
    "render": {
        "occlusion_aperture": settings.DEFAULT_OCCLUSION_APERTURE_DEG,
        "occlusion_window": settings.DEFAULT_OCCLUSION_WINDOW,
    },
    "noise": {
        "gaussian_sigma": 0.0,
        "outlier_fraction": 0.0,
        "outlier_magnitude": 0.0,
        "dropout_fraction": 0.0,
        "bias_sigma": 0.0,
        "image_flow_sigma_scale": 1.0,
        "seed": None,
    },
    "ransac": {
        "max_iters": settings.DEFAULT_RANSAC_MAX_ITERS,
        "inlier_threshold": settings.DEFAULT_RANSAC_THRESHOLD,
        "min_inliers": settings.DEFAULT_RANSAC_MIN_INLIERS,
        "confidence": settings.DEFAULT_RANSAC_CONFIDENCE,
        "seed": None,
    },
    "energy": {
        "w_consist": 1.0,
        "w_reproj": 1.0,
        "huber_delta": settings.DEFAULT_HUBER_DELTA,
        "max_iters": settings.DEFAULT_ENERGY_MAX_ITERS,
        "rel_tol": settings.DEFAULT_REL_TOL,
        "lambda0": settings.DEFAULT_LAMBDA0,
    },
    "tracker": {
        "loose_reproj_threshold": settings.DEFAULT_LOOSE_REPROJ_THRESHOLD,
        "failure_threshold": settings.DEFAULT_FAILURE_THRESHOLD,
        "max_correspondences": settings.DEFAULT_MAX_CORRESPONDENCES,
        "consistency_cap": settings.DEFAULT_CONSISTENCY_CAP,
        "flow_provider": "oracle",
        "init_max_transl": settings.DEFAULT_MAX_TRANSL_PER_AXIS,
        "init_max_rot": settings.DEFAULT_MAX_ROT_PER_AXIS,
        "init_seed": None,
    },
    "scene": {
        "extent": 200.0,
        "ground_density": 2.0,
        "facade_density": 2.0,
        "pole_count": 20,
        "half_width": 8.0,
        "facade_height": 12.0,
        "margin": 110.0,
        "seed": None,
    },
    "trajectory": {
        "frame_count": 100,
        "speed": 1.0,
        "turn_rate": 1.0,
        "profile": "straight",
        "seed": None,
    },
    "vo": {
        "rot_drift_sigma": 0.0,
        "transl_drift_sigma": 0.0,
        "seed": None,
    },
    "outages": [],
    "ablate": {
        "modes": ["frame_by_frame", "loose_coupled", "multi_view"],
        "seeds": 1,
        "branches": False,
    },
}


def merge(base, update, prefix=""):
    """Copy of base updated with the keys of update; keys unknown to base are refused"""
    result = copy.deepcopy(base)
    if update is None:
        return result
    if not isinstance(update, dict):
        raise ConfigError(prefix.rstrip(".") or "config", "must be a mapping")
    for key, value in update.items():
        name = "{}{}".format(prefix, key)
        if key not in base:
            raise ConfigError(name, "unknown key")
        if isinstance(base[key], dict):
            result[key] = merge(base[key], value, name + ".")
        else:
            result[key] = copy.deepcopy(value)
    return result


def _build(section, cls, values):
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(section, str(e))


def _check_int(name, value, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(name, "must be an integer, got {!r}".format(value))
    if minimum is not None and value < minimum:
        raise ConfigError(name, "must be >= {}".format(minimum))
    return value


@dataclass
class ExperimentConfig:
    """Typed view of one resolved configuration mapping"""

    mode: str
    seed: int
    tracker: TrackerConfig
    scene: SceneConfig
    trajectory: TrajectoryConfig
    vo: VoOracleConfig
    outages: list
    map_resolution: float
    ablate_modes: list
    ablate_seeds: int
    ablate_branches: bool = False
    source: dict = field(default_factory=dict, repr=False)
    resolved: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, mapping):
        """Validate a mapping holding every section (merge it over DEFAULTS first)"""
        resolved = copy.deepcopy(mapping)
        seed = _check_int("seed", resolved["seed"], 0)

        def seed_of(section, key="seed", offset="seed"):
            value = resolved[section][key]
            if value is None:
                value = seed + settings.SEED_OFFSETS[offset]
            resolved[section][key] = _check_int("{}.{}".format(section, key), value, 0)
            return resolved[section][key]

        if resolved["mode"] not in MODES:
            raise ConfigError("mode", "must be one of {}, got {}".format(", ".join(MODES), resolved["mode"]))
        _check_int("trajectory.frame_count", resolved["trajectory"]["frame_count"], 1)

        camera = _build("camera", CameraIntrinsics, resolved["camera"])
        crop = _build("crop", CropExtents, resolved["crop"])
        noise = _build("noise", FlowNoiseModel, dict(resolved["noise"], seed=seed_of("noise", offset="noise")))
        ransac = _build("ransac", RansacConfig, dict(resolved["ransac"], seed=seed_of("ransac", offset="ransac")))
        energy = _build("energy", EnergyConfig, resolved["energy"])
        tracker_section = resolved["tracker"]
        init_bounds = _build("tracker", PerturbBounds, {"max_transl_per_axis": tracker_section["init_max_transl"],
                                                        "max_rot_per_axis": tracker_section["init_max_rot"]})
        tracker = _build("tracker", TrackerConfig, {
            "mode": resolved["mode"],
            "crop": crop,
            "K": camera,
            "noise": noise,
            "ransac": ransac,
            "energy": energy,
            "loose_reproj_threshold": tracker_section["loose_reproj_threshold"],
            "failure_threshold": tracker_section["failure_threshold"],
            "max_correspondences": tracker_section["max_correspondences"],
            "consistency_cap": tracker_section["consistency_cap"],
            "occlusion_aperture": resolved["render"]["occlusion_aperture"],
            "occlusion_window": resolved["render"]["occlusion_window"],
            "flow_provider": tracker_section["flow_provider"],
            "init_bounds": init_bounds,
            "init_seed": seed_of("tracker", "init_seed", "init"),
        })
        scene = _build("scene", SceneConfig, dict(resolved["scene"], seed=seed_of("scene", offset="scene")))
        trajectory = _build("trajectory", TrajectoryConfig,
                            dict(resolved["trajectory"], seed=seed_of("trajectory", offset="trajectory")))
        vo = _build("vo", VoOracleConfig, dict(resolved["vo"], seed=seed_of("vo", offset="vo")))

        if not isinstance(resolved["outages"], list):
            raise ConfigError("outages", "must be a list")
        outages = []
        for index, entry in enumerate(resolved["outages"]):
            if not isinstance(entry, dict):
                raise ConfigError("outages.{}".format(index), "must be a mapping")
            outages.append(_build("outages.{}".format(index), Outage, entry))

        if not resolved["map"]["resolution"] > 0:
            raise ConfigError("map.resolution", "must be positive")
        modes = resolved["ablate"]["modes"]
        if not isinstance(modes, list) or not modes:
            raise ConfigError("ablate.modes", "must be a non-empty list")
        for mode in modes:
            if mode not in MODES:
                raise ConfigError("ablate.modes", "unknown mode {}".format(mode))
        ablate_seeds = _check_int("ablate.seeds", resolved["ablate"]["seeds"], 1)
        if not isinstance(resolved["ablate"]["branches"], bool):
            raise ConfigError("ablate.branches", "must be a boolean")

        return cls(resolved["mode"], seed, tracker, scene, trajectory, vo, outages, resolved["map"]["resolution"],
                   list(modes), ablate_seeds, resolved["ablate"]["branches"], source=copy.deepcopy(mapping),
                   resolved=resolved)

    def to_dict(self):
        """Resolved mapping, every seed explicit; loading it back gives the same configuration"""
        return copy.deepcopy(self.resolved)

    def reseeded(self, seed):
        """Same configuration under another master seed; seeds set explicitly in the sources stay"""
        return ExperimentConfig.from_dict(dict(copy.deepcopy(self.source), seed=seed))

    def with_mode(self, mode):
        return ExperimentConfig.from_dict(dict(copy.deepcopy(self.source), mode=mode))


def config_from_dict(mapping=None, overrides=None, user_defaults=False):
    """ExperimentConfig of a partial mapping over the defaults"""
    merged = copy.deepcopy(DEFAULTS)
    if user_defaults:
        user_config = ConfigHandler().config
        if user_config:
            logger.debug("Applying user defaults")
            merged = merge(merged, user_config)
    merged = merge(merged, mapping)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    return ExperimentConfig.from_dict(merged)


def load_config(path=None, overrides=None, user_defaults=True):
    """Configuration of an experiment file (or of a run manifest carrying a config mapping)

    overrides maps top-level keys (mode, seed) to command line values, None meaning unset.
    """
    mapping = None
    if path is not None:
        mapping = read_yaml(path)
        if isinstance(mapping, dict) and isinstance(mapping.get("config"), dict):
            logger.debug("Using the config mapping of manifest {}".format(path))
            mapping = mapping["config"]
    config = config_from_dict(mapping, overrides, user_defaults)
    logger.info("Configuration loaded: {} mode, seed {}".format(config.mode, config.seed))
    return config
