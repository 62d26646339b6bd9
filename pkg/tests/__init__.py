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

"""Ensure we keep a sane formatting syntax"""

import os
import pycodestyle
from .tools import get_root_dir
import flowloc
from unittest import TestCase


class CodeCheck(TestCase):

    def test_pycodestyle(self):
        """Proceed a pycodestyle checking

        Note that we have a .pycodestyle config file for maximum line length tweak
        and excluding the virtualenv dir."""
        style = pycodestyle.StyleGuide(config_file=os.path.join(get_root_dir(), '.pycodestyle'))

        # we want to use either local or system flowloc, but always local tests files
        flowloc_dir = os.path.dirname(flowloc.__file__)
        results = style.check_files([flowloc_dir, os.path.join(get_root_dir(), "tests"),
                                     os.path.join(get_root_dir(), "bin")])
        self.assertEqual(results.get_statistics(), [])
