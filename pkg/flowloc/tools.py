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

from contextlib import contextmanager
import logging
import numpy as np
from time import perf_counter
from flowloc import settings
from xdg.BaseDirectory import load_first_config
import yaml
import yaml.scanner
import yaml.parser

logger = logging.getLogger(__name__)


class Singleton(type):

    _instances = {}

    def __call__(cls, *args, **kwargs):
        if cls not in cls._instances:
            cls._instances[cls] = super(Singleton, cls).__call__(*args, **kwargs)
        return cls._instances[cls]


class ConfigHandler(metaclass=Singleton):
    """User level defaults, read once from the xdg config directory"""

    def __init__(self):
        """Load the config"""
        self._config = {}
        config_file = load_first_config(settings.CONFIG_FILENAME)
        logger.debug("Opening {}".format(config_file))
        try:
            with open(config_file) as f:
                self._config = yaml.safe_load(f) or {}
        except (TypeError, FileNotFoundError):
            logger.info("No user configuration file found")
        except (yaml.scanner.ScannerError, yaml.parser.ParserError) as e:
            logger.error("Invalid configuration file found: {}".format(e))
        if not isinstance(self._config, dict):
            logger.error("User configuration {} isn't a mapping, ignoring it".format(config_file))
            self._config = {}

    @property
    def config(self):
        return self._config


class NoneDict(dict):
    """We don't use a defaultdict(lambda: None) as it's growing everytime something is requested"""
    def __getitem__(self, key):
        return dict.get(self, key)


class FlowlocError(Exception):
    """Base class of every error raised by flowloc"""


class ConfigError(FlowlocError):
    """Invalid configuration value, the message names the field"""

    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__("{}: {}".format(field, reason))


class MalformedFileError(FlowlocError):
    """Unparsable input file"""

    def __init__(self, path, line_number, reason):
        self.path = path
        self.line_number = line_number
        super().__init__("{}:{}: {}".format(path, line_number, reason))


class BehindCameraError(FlowlocError):
    """A point with a non-positive depth was projected"""


class DimensionMismatchError(FlowlocError):
    """Per-pixel fields of different sizes were combined"""


class EmptyMaskError(FlowlocError):
    """A masked statistic was requested over an empty mask"""


class LengthMismatchError(FlowlocError):
    """Paired sequences don't have the same length"""


class TooFewCorrespondencesError(FlowlocError):
    """Not enough 2D-3D correspondences to solve for a pose"""


class DegenerateConfigurationError(FlowlocError):
    """Correspondences don't constrain the pose (collinear points)"""


class EmptyResidualError(FlowlocError):
    """No residual survived the visibility checks"""


class ScenarioError(FlowlocError):
    """A generated or loaded scenario breaks its guarantees"""


def derive_rng(seed, *keys):
    """Return an independent numpy Generator for seed and a tuple of integer keys

    The same (seed, keys) always gives the same stream."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + [int(key) for key in keys]))


def derive_seed(seed, *keys):
    """Integer seed derived from seed and integer keys"""
    return int(np.random.SeedSequence([int(seed)] + [int(key) for key in keys]).generate_state(1)[0])


def stride_subsample(count, cap):
    """Indices of a deterministic stride subsample of count items, at most cap of them"""
    if cap is None or count <= cap:
        return np.arange(count)
    return np.linspace(0, count - 1, cap).round().astype(np.int64)


class StageTimer:
    """Accumulate wall-clock milliseconds per named stage"""

    def __init__(self):
        self.ms = {}

    @contextmanager
    def stage(self, name):
        start = perf_counter()
        try:
            yield
        finally:
            self.ms[name] = self.ms.get(name, 0.0) + (perf_counter() - start) * 1000.0

    def total(self):
        return sum(self.ms.values())
