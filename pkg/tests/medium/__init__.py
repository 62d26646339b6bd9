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


"""Medium tests: the command line run as a separate process"""

import os
import shutil
import subprocess
import sys
import tempfile
from ..tools import LoggedTestCase, get_root_dir
from flowloc.formats import write_yaml


class ProcessTests(LoggedTestCase):
    """Run flowloc in a subprocess, from the source tree, with no user configuration"""

    def setUp(self):
        super().setUp()
        self.tempdir = tempfile.mkdtemp()
        self.env = dict(os.environ, XDG_CONFIG_HOME=os.path.join(self.tempdir, "config"))
        for key in ("LOG_CFG", "FLOWLOC_LOG_LEVEL"):
            self.env.pop(key, None)

    def tearDown(self):
        shutil.rmtree(self.tempdir)
        super().tearDown()

    def path(self, *names):
        return os.path.join(self.tempdir, *names)

    def flowloc(self, *args):
        """CompletedProcess of flowloc args, text output captured"""
        return subprocess.run([sys.executable, "-m", "flowloc"] + [str(arg) for arg in args], cwd=get_root_dir(),
                              env=self.env, stdout=subprocess.PIPE, stderr=subprocess.PIPE, universal_newlines=True)

    def experiment(self, name="experiment.yaml", **sections):
        """Path of a short corridor experiment file"""
        mapping = {"seed": 1, "scene": {"extent": 50.0, "margin": 60.0, "pole_count": 10},
                   "trajectory": {"frame_count": 3}}
        mapping.update(sections)
        path = self.path(name)
        write_yaml(path, mapping)
        return path
