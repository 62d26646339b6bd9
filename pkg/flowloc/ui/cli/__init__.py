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

"""Module for loading the command line interface"""

import argcomplete
import logging
from progressbar import ProgressBar
import sys
from flowloc.commands import BaseCommand, EXIT_ABORTED, EXIT_ERROR
from flowloc.tools import FlowlocError
from flowloc.ui import UI

logger = logging.getLogger(__name__)


class CliUI(UI):

    def __init__(self, quiet=False):
        # set this UI as current
        super().__init__(self)
        self.quiet = quiet
        self._bar = None

    def _display(self, message):
        print(message)

    def _progress(self, label, total):
        if self.quiet or not total:
            return lambda done, total: None
        self._finish_progress()
        logger.info("{}: {} frames".format(label, total))
        self._bar = ProgressBar(max_value=total, fd=sys.stderr)

        def update(done, total):
            self._bar.update(min(done, total))
        return update

    def _finish_progress(self):
        if self._bar is not None:
            self._bar.finish()
            self._bar = None


def run_command_for_args(args):
    """Run correct command for args and return its exit code"""
    # Singleton: reset the quiet flag on an existing instance
    CliUI().quiet = getattr(args, "quiet", False)
    command = BaseCommand.commands[args.command]
    try:
        return command.run(args)
    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return EXIT_ABORTED
    except (FlowlocError, OSError) as e:
        logger.error(str(e))
        return EXIT_ERROR
    finally:
        UI.finish_progress()


def main(parser, args_to_parse=None):
    """Main entry point of the cli command"""
    commands_parser = parser.add_subparsers(help='Experiment step', dest="command")
    for command in BaseCommand.commands.values():
        command.install_parser(commands_parser)

    argcomplete.autocomplete(parser)
    # autocomplete will stop there. Can start more expensive operations now.

    args = parser.parse_args(sys.argv[1:] if args_to_parse is None else args_to_parse)

    if not args.command:
        parser.print_help()
        return 0

    return run_command_for_args(args)
