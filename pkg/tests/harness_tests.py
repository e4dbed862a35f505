#
# Unit tests for experiment orchestration and CSV results.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#
import os
import shutil
import tempfile
from unittest import TestCase

import numpy as np

from hottlab import harness
from hottlab.acceptance import hull_extreme_violations
from hottlab.config import ExperimentConfig, PolicySpec
from hottlab.harness import (RunResult, HarnessError, UnknownPolicy,
                             CSV_COLUMNS, run_experiment, build_instance)
from hottlab.model import triad_instance, generate_hull_instance

def small_config(policies=None, seeds=(1, 2, 3), horizon=10, **instance):
  spec = {"generator": "triad", "sigma2": 0.1}
  spec.update(instance)
  if policies is None:
    policies = [PolicySpec("etc", "etc", {"explore_rounds": 3}),
                PolicySpec("am", "am")]
  return ExperimentConfig({"name": "small", "horizon": horizon,
                           "seeds": list(seeds)}, spec, policies)

class InstanceTests(TestCase):
  def testPerSeedInstances(self):
    cfg = small_config(generator="block", M=6, N=6, r=2)
    a, b = build_instance(cfg, 1), build_instance(cfg, 2)
    assert not np.array_equal(a.R, b.R)
    assert np.array_equal(a.R, build_instance(cfg, 1).R)

  def testSharedInstance(self):
    cfg = small_config(generator="block", M=6, N=6, r=2, seed=17)
    assert np.array_equal(build_instance(cfg, 1).R, build_instance(cfg, 2).R)

  def testRescale(self):
    cfg = small_config(generator="hull", M=5, N=6, r=2)
    cfg = cfg.with_experiment(rescale=True)
    self.assertAlmostEqual(np.abs(build_instance(cfg, 1).R).max(), 1.0)

  def testUnknownGenerator(self):
    cfg = small_config(generator="spiral")
    self.assertRaises(HarnessError, build_instance, cfg, 1)

  def testFileNeedsPath(self):
    cfg = small_config(generator="file")
    self.assertRaises(HarnessError, build_instance, cfg, 1)


class RunTests(TestCase):
  def testDeterministic(self):
    a = run_experiment(small_config())
    b = run_experiment(small_config(), threads=3)
    for key, trace in a.traces.items():
      assert np.array_equal(trace.cumulative_general(),
                            b.traces[key].cumulative_general())
    self.assertEqual(sorted(a.traces), sorted(b.traces))

  def testAggregates(self):
    result = run_experiment(small_config())
    curves = result.curves("etc")
    self.assertEqual(curves.shape, (3, 10))
    assert np.allclose(result.mean_curve("etc"), curves.mean(axis=0))
    assert np.allclose(result.se_curve("etc"),
                       curves.std(axis=0, ddof=1) / np.sqrt(3))
    mean, se = result.final("etc")
    self.assertAlmostEqual(mean, curves[:, -1].mean())
    self.assertRaises(ValueError, result.curves, "etc", "best")

  def testSingleSeedHasNoSpread(self):
    result = run_experiment(small_config(seeds=(5,)))
    assert not result.se_curve("am").any()

  def testFailedCellIsRecorded(self):
    policies = [PolicySpec("etc", "etc", {"explore_rounds": 3}),
                PolicySpec("broken", "etc")]
    result = run_experiment(small_config(policies))
    self.assertEqual(sorted(result.failures),
                     [("broken", 1), ("broken", 2), ("broken", 3)])
    assert "explore_rounds" in result.failures[("broken", 1)]
    self.assertEqual(len(result.cells("etc")), 3)
    self.assertEqual(result.cells("broken"), [])

  def testUnknownPolicy(self):
    cfg = small_config([PolicySpec("x", "magic")])
    self.assertRaises(UnknownPolicy, run_experiment, cfg)

  def testGapGuess(self):
    cfg = small_config([PolicySpec("pes", "pes", {"B": 2})], seeds=(1,),
                       horizon=20)
    result = run_experiment(cfg)
    self.assertEqual(result.failures, {})
    self.assertEqual(len(result.traces[("pes", 1)]), 20)


class CsvTests(TestCase):
  def setUp(self):
    self.directory = tempfile.mkdtemp()

  def tearDown(self):
    shutil.rmtree(self.directory)

  def path(self, name):
    return os.path.join(self.directory, name)

  def testRowsAndRoundTrip(self):
    result = run_experiment(small_config())
    harness.emit_csv(result, self.path("a.csv"))
    frame = harness.result_frame(result)
    self.assertEqual(list(frame.columns), CSV_COLUMNS)
    self.assertEqual(len(frame), 2 * 3 * 10)
    self.assertEqual(frame["round"].tolist()[:3], [1, 2, 3])

    back = harness.read_csv(self.path("a.csv"))
    self.assertEqual(back.name, "small")
    self.assertEqual(back.horizon, 10)
    self.assertEqual(back.policies, ["etc", "am"])
    self.assertEqual(back.seeds, [1, 2, 3])
    for key, trace in result.traces.items():
      assert np.array_equal(back.traces[key].cumulative_general(),
                            trace.cumulative_general())
      assert np.array_equal(back.traces[key].cumulative_simple(),
                            trace.cumulative_simple())
      assert np.array_equal(back.traces[key].phases(), trace.phases())

  def testHeaderOnly(self):
    harness.emit_csv(RunResult("empty", 5, [], [], {}), self.path("e.csv"))
    with open(self.path("e.csv")) as f:
      self.assertEqual(f.read(), ",".join(CSV_COLUMNS) + "\n")
    self.assertEqual(harness.read_csv(self.path("e.csv")).policies, [])

  def testMissingColumns(self):
    with open(self.path("bad.csv"), "w") as f:
      f.write("run_id,policy\nx,y\n")
    self.assertRaises(HarnessError, harness.read_csv, self.path("bad.csv"))

  def testMerge(self):
    a = run_experiment(small_config([PolicySpec("am", "am")]))
    b = run_experiment(small_config([PolicySpec("etc", "etc",
                                                {"explore_rounds": 3})]))
    merged = harness.merge_results([a, b])
    self.assertEqual(merged.policies, ["am", "etc"])
    self.assertEqual(len(merged.traces), 6)
    self.assertRaises(HarnessError, harness.merge_results, [a, a])

  def testSummary(self):
    result = run_experiment(small_config())
    rows = harness.summary_rows(result)
    self.assertEqual(sorted(r[0] for r in rows), ["am", "etc"])
    assert rows[0][1] <= rows[1][1]
    self.assertEqual(rows[0][3], 3)


class HullPropertyTests(TestCase):
  def testHullInstances(self):
    for seed in range(5):
      self.assertEqual(hull_extreme_violations(generate_hull_instance(12, 9, 3,
                                                                   seed)), [])

  def testCounterExample(self):
    self.assertEqual(hull_extreme_violations(triad_instance()), [])
