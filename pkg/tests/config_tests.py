#
# Unit tests for experiment configuration files.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#
import os
import tempfile
from unittest import TestCase

from hottlab import config
from hottlab.config import (ConfigError, ConfigSyntaxError, ConfigValueError,
                            ExperimentConfig, PolicySpec, loads_config,
                            load_config)

SAMPLE = """
# a comment
experiment.name    = sample
experiment.horizon = 50    # trailing comment
experiment.seeds   = 3 4
instance.generator = triad
instance.sigma2    = 0.01
oracle.lambda      = 0.5
policy.etc.kind = etc
policy.etc.explore_rounds = 10
policy.pce.kind = pce
policy.pce.oracle.solver = nuclear
policy.pce.oracle.lambda = 0.2
"""

class ScalarTests(TestCase):
  def testScalars(self):
    self.assertEqual(config.parse_scalar("12"), 12)
    self.assertEqual(config.parse_scalar("0.25"), 0.25)
    self.assertEqual(config.parse_scalar("1e-3"), 0.001)
    self.assertEqual(config.parse_scalar("TRUE"), True)
    self.assertEqual(config.parse_scalar("false"), False)
    self.assertEqual(config.parse_scalar("none"), None)
    self.assertEqual(config.parse_scalar("altmin"), "altmin")

  def testLists(self):
    self.assertEqual(config.parse_value("1 2 3"), [1, 2, 3])
    self.assertEqual(config.parse_value("  7 "), 7)
    self.assertRaises(ConfigSyntaxError, config.parse_value, "   ")


class GrammarTests(TestCase):
  def testParseLines(self):
    entries = config.parse_lines(["a.b = 1", "", "# skip", "c = x y"])
    self.assertEqual(entries, {"a.b": 1, "c": ["x", "y"]})

  def testMissingEquals(self):
    self.assertRaises(ConfigSyntaxError, config.parse_lines, ["a.b 1"])

  def testBadKey(self):
    self.assertRaises(ConfigSyntaxError, config.parse_lines, ["a..b = 1"])
    self.assertRaises(ConfigSyntaxError, config.parse_lines, ["1a = 1"])

  def testDuplicate(self):
    self.assertRaises(ConfigSyntaxError, config.parse_lines,
                      ["a = 1", "a = 2"])

  def testEmptyValue(self):
    self.assertRaises(ConfigSyntaxError, config.parse_lines, ["a ="])


class ExperimentConfigTests(TestCase):
  def testSample(self):
    cfg = loads_config(SAMPLE)
    self.assertEqual(cfg.experiment["name"], "sample")
    self.assertEqual(cfg.horizon, 50)
    self.assertEqual(cfg.seeds, [3, 4])
    self.assertEqual(cfg.instance["generator"], "triad")
    self.assertEqual(cfg.instance["M"], 200)
    self.assertEqual(cfg.oracle, {"lam": 0.5})
    self.assertEqual([p.name for p in cfg.policies], ["etc", "pce"])
    etc, pce = cfg.policies
    self.assertEqual(etc.kind, "etc")
    self.assertEqual(etc.params, {"explore_rounds": 10})
    self.assertEqual(pce.oracle, {"solver": "nuclear", "lam": 0.2})

  def testScalarSeed(self):
    cfg = loads_config("experiment.seeds = 9")
    self.assertEqual(cfg.seeds, [9])

  def testUnknownKeys(self):
    self.assertRaises(ConfigValueError, loads_config, "experiment.colour = red")
    self.assertRaises(ConfigValueError, loads_config, "instance.K = 3")
    self.assertRaises(ConfigValueError, loads_config, "results.path = x")
    self.assertRaises(ConfigValueError, loads_config,
                      "policy.a.oracle.x.y = 1\npolicy.a.kind = am")

  def testValidation(self):
    self.assertRaises(ConfigValueError, loads_config, "experiment.horizon = 0")
    self.assertRaises(ConfigValueError, loads_config, "experiment.horizon = 2.5")
    self.assertRaises(ConfigValueError, loads_config, "experiment.seeds = a b")
    self.assertRaises(ConfigValueError, loads_config, "experiment.threads = 0")
    self.assertRaises(ConfigValueError, loads_config, "policy.a.B = 3")
    self.assertRaises(ConfigValueError, ExperimentConfig,
                      policies=[PolicySpec("a", "am"), PolicySpec("a", "etc")])

  def testOnly(self):
    cfg = loads_config(SAMPLE).only(["pce"])
    self.assertEqual([p.name for p in cfg.policies], ["pce"])
    self.assertRaises(ConfigValueError, loads_config(SAMPLE).only, ["pes"])

  def testWithExperiment(self):
    cfg = loads_config(SAMPLE)
    other = cfg.with_experiment(seeds=[1, 2, 3])
    self.assertEqual(other.seeds, [1, 2, 3])
    self.assertEqual(cfg.seeds, [3, 4])

  def testShippedConfigsLoad(self):
    root = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
    for name in ("block.cfg", "simplex.cfg"):
      cfg = load_config(os.path.join(root, name))
      assert cfg.policies, name

  def testLoadErrors(self):
    self.assertRaises(ConfigError, load_config, "/nonexistent/lab.cfg")
    fd, path = tempfile.mkstemp(suffix=".cfg")
    with os.fdopen(fd, "w") as f:
      f.write("experiment.horizon\n")
    try:
      self.assertRaises(ConfigSyntaxError, load_config, path)
    finally:
      os.remove(path)
