#
# Unit tests for the command-line front end.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#
import os
import shutil
import tempfile
from unittest import TestCase

from hottlab import cli
from hottlab.instancefile import read_instance

CONFIG = """
experiment.name    = tiny
experiment.horizon = 12
experiment.seeds   = 1 2
instance.generator = triad
instance.sigma2    = 0.05
policy.etc.kind = etc
policy.etc.explore_rounds = 4
policy.am.kind = am
"""

class CliTests(TestCase):
  def setUp(self):
    self.directory = tempfile.mkdtemp()
    self.config = self.write("tiny.cfg", CONFIG)

  def tearDown(self):
    shutil.rmtree(self.directory)

  def write(self, name, text):
    path = os.path.join(self.directory, name)
    with open(path, "w") as f:
      f.write(text)
    return path

  def out(self, *parts):
    return os.path.join(self.directory, *parts)

  def testRun(self):
    code = cli.main(["run", "--config", self.config, "--out", self.out("res"),
                     "--quiet"])
    self.assertEqual(code, cli.EXIT_OK)
    for name in ("tiny.csv", "tiny.svg", "tiny-instant.svg"):
      assert os.path.exists(self.out("res", name)), name

  def testRunSubset(self):
    code = cli.main(["run", "--config", self.config, "--out", self.out("res"),
                     "--policy", "am", "--seed", "4", "--quiet"])
    self.assertEqual(code, cli.EXIT_OK)
    with open(self.out("res", "tiny.csv")) as f:
      lines = f.read().splitlines()
    self.assertEqual(len(lines), 1 + 12)
    assert all(",am,4," in line for line in lines[1:])

  def testCompareAndPlot(self):
    cli.main(["run", "--config", self.config, "--out", self.out("res"),
              "--quiet"])
    csv = self.out("res", "tiny.csv")
    self.assertEqual(cli.main(["compare", csv]), cli.EXIT_OK)
    self.assertEqual(cli.main(["plot", csv, "--out", self.out("p.svg"),
                               "--kind", "instant"]), cli.EXIT_OK)
    assert os.path.exists(self.out("p.svg"))

  def testGen(self):
    code = cli.main(["gen", "--config", self.config, "--out",
                     self.out("x.inst")])
    self.assertEqual(code, cli.EXIT_OK)
    self.assertEqual(read_instance(self.out("x.inst")).M, 3)

  def testBadConfig(self):
    self.assertEqual(cli.main(["run", "--config", self.out("missing.cfg")]),
                     cli.EXIT_CONFIG)
    bad = self.write("bad.cfg", "experiment.horizon = -3\n")
    self.assertEqual(cli.main(["run", "--config", bad]), cli.EXIT_CONFIG)

  def testUnknownPolicyKind(self):
    cfg = self.write("magic.cfg", CONFIG + "policy.m.kind = magic\n")
    code = cli.main(["run", "--config", cfg, "--out", self.out("res"),
                     "--quiet"])
    self.assertEqual(code, cli.EXIT_CONFIG)
