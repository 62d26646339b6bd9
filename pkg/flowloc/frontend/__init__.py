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


"""Flow front-end: providers turning a frame pair into image to depth and image to image flows"""

import abc
from collections import namedtuple
from importlib import import_module
import inspect
import logging
import os
import pkgutil
import sys
from flowloc.tools import ConfigError, NoneDict

logger = logging.getLogger(__name__)

# T_obs_cur / T_obs_next stand for the captured images: the true poses of the frames, only used by providers
# simulating an estimation network. T_obs_next is None on the last frame.
FlowRequest = namedtuple("FlowRequest", ["frame", "cloud", "depth", "K", "T_init", "T_obs_cur", "T_obs_next"])


class BaseFlowProvider(metaclass=abc.ABCMeta):
    """Base class of flow providers, registered by name"""

    providers = NoneDict()
    provider_name = None
    description = ""

    @abc.abstractmethod
    def estimate(self, request):
        """Return the FlowTriplet of request. Flows touching a missing next frame are all invalid"""


def _is_providerclass(o):
    return inspect.isclass(o) and issubclass(o, BaseFlowProvider) and not inspect.isabstract(o)


def load_module(module_abs_name):
    logger.debug("New provider module: {}".format(module_abs_name))
    if module_abs_name not in sys.modules:
        import_module(module_abs_name)
    module = sys.modules[module_abs_name]
    for class_name, ProviderClass in inspect.getmembers(module, _is_providerclass):
        if ProviderClass.__module__ != module_abs_name:
            continue
        prog_name = ProviderClass.provider_name
        if BaseFlowProvider.providers[prog_name] is ProviderClass:
            continue
        if prog_name in BaseFlowProvider.providers:
            logger.warning("There is already a registered provider with {} as a name. Don't register the second one."
                           .format(prog_name))
            continue
        logger.debug("Found provider: {}".format(class_name))
        BaseFlowProvider.providers[prog_name] = ProviderClass


def load_providers():
    """Load all provider modules of this package"""
    for loader, module_name, ispkg in pkgutil.iter_modules(path=[os.path.dirname(__file__)]):
        load_module("{}.{}".format(__package__, module_name))
    return BaseFlowProvider.providers


def get_provider(name, **kwargs):
    """Instantiate the provider registered as name"""
    ProviderClass = load_providers()[name]
    if ProviderClass is None:
        message = "Unknown flow provider {}, available: {}".format(name, ", ".join(sorted(BaseFlowProvider.providers)))
        logger.error(message)
        raise ConfigError("tracker.flow_provider", message)
    return ProviderClass(**kwargs)
