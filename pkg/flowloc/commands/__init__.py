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

"""Experiment commands: each module of this package registers its subcommands"""

import abc
from gettext import gettext as _
from importlib import import_module
import inspect
import logging
import os
import pkgutil
import sys
from flowloc import settings
from flowloc.tools import NoneDict

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INTERRUPTED = 2
# 128 + SIGINT, as shells report it
EXIT_ABORTED = 130


class BaseCommand(metaclass=abc.ABCMeta):
    """A flowloc subcommand"""

    commands = NoneDict()

    def __init__(self, name, description):
        self.name = name
        self.description = description
        if self.name in BaseCommand.commands:
            logger.warning("There is already a registered command with {} as a name. Don't register the second one."
                           .format(self.name))
        else:
            BaseCommand.commands[self.name] = self

    def install_parser(self, parser):
        """Install and return the command subparser"""
        command_parser = parser.add_parser(self.name, help=self.description, description=self.description)
        self.setup_parser(command_parser)
        return command_parser

    @abc.abstractmethod
    def setup_parser(self, parser):
        """Add the command arguments"""

    @abc.abstractmethod
    def run(self, args):
        """Run the command and return its exit code"""


def add_quiet_argument(parser):
    parser.add_argument("--quiet", action="store_true", help=_("Don't display the progress bar"))


def add_seed_argument(parser):
    parser.add_argument("--seed", type=int, help=_("Master seed, overriding the configuration one"))


def build_manifest(command, config=None, artifacts=(), timings=None, **extra):
    """Provenance record of a command run"""
    manifest = {
        "tool": "flowloc",
        "version": settings.VERSION,
        "command": command,
    }
    if config is not None:
        resolved = config.to_dict()
        manifest["config"] = resolved
        manifest["seeds"] = {section: resolved[section]["seed"]
                             for section in ("noise", "ransac", "scene", "trajectory", "vo")}
        manifest["seeds"]["master"] = resolved["seed"]
        manifest["seeds"]["init"] = resolved["tracker"]["init_seed"]
    manifest["artifacts"] = sorted(os.path.basename(path) for path in artifacts)
    if timings is not None:
        manifest["wall_clock_s"] = round(float(timings), 3)
    manifest.update(extra)
    return manifest


def _is_commandclass(o):
    return inspect.isclass(o) and issubclass(o, BaseCommand) and not inspect.isabstract(o)


def load_module(module_abs_name):
    """Instantiate every command class of module_abs_name, registering them"""
    logger.debug("New command module: {}".format(module_abs_name))
    if module_abs_name not in sys.modules:
        import_module(module_abs_name)
    module = sys.modules[module_abs_name]
    for class_name, CommandClass in inspect.getmembers(module, _is_commandclass):
        if CommandClass.__module__ != module_abs_name:
            continue
        if any(type(command) is CommandClass for command in BaseCommand.commands.values()):
            continue
        logger.debug("Found command: {}".format(class_name))
        CommandClass()


def load_commands():
    """Load all command modules of this package"""
    for loader, module_name, ispkg in pkgutil.iter_modules(path=[os.path.dirname(__file__)]):
        load_module("{}.{}".format(__package__, module_name))
    return BaseCommand.commands
