#
# Unit tests for the matrix-completion oracle.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#
import math
import os
import tempfile
from unittest import TestCase

import numpy as np

from hottlab import matcomp
from hottlab.environment import Environment
from hottlab.matcomp import (OracleConfig, OracleParameterError,
                             OracleContractError, SampleMask,
                             AveragedObservations, EstimatePlan)
from hottlab.model import triad_instance

def low_rank(n, m, r, seed):
  rng = np.random.default_rng(seed)
  return rng.standard_normal((n, r)).dot(rng.standard_normal((m, r)).T) / r

def triad_env(horizon=100, sigma2=0.0):
  return Environment(triad_instance(sigma2=sigma2), horizon,
                     np.random.default_rng(1))

class OracleConfigTests(TestCase):
  def testDefaults(self):
    config = OracleConfig()
    self.assertEqual(config.solver, "altmin")
    self.assertEqual(config.rank, None)
    self.assertEqual(config.C_p, 4.0)

  def testOverrides(self):
    config = OracleConfig(rank=3, solver="nuclear")
    other = config.copy(rank=2)
    self.assertEqual(config.rank, 3)
    self.assertEqual(other.rank, 2)
    self.assertEqual(other.solver, "nuclear")

  def testValidation(self):
    self.assertRaises(OracleParameterError, OracleConfig, p=0.0)
    self.assertRaises(OracleParameterError, OracleConfig, s=0)
    self.assertRaises(OracleParameterError, OracleConfig, solver="magic")
    self.assertRaises(OracleParameterError, OracleConfig, colour="red")


class SamplingTests(TestCase):
  def testPlanMask(self):
    rng = np.random.default_rng(3)
    mask = matcomp.plan_mask(np.arange(40), np.arange(5, 25), 0.05, rng, s=3)
    self.assertEqual(mask.omega.shape, (40, 20))
    assert mask.omega.any(axis=1).all()
    self.assertEqual(mask.m, mask.b * 3)
    for u, j in mask.pairs():
      assert 0 <= u < 40 and 5 <= j < 25

  def testFullMask(self):
    mask = matcomp.plan_mask([0, 1], [0, 1, 2], 1.0, np.random.default_rng(0))
    assert mask.omega.all()
    self.assertEqual(mask.b, 3)
    self.assertEqual(len(mask), 6)

  def testMaskShapeChecked(self):
    self.assertRaises(OracleContractError, SampleMask, [0, 1], [0],
                      np.ones((1, 1), dtype=bool))

  def testCollect(self):
    env = triad_env()
    mask = SampleMask([0, 1, 2], [0, 1, 2], np.ones((3, 3), dtype=bool), 2)
    obs, rounds, partial = matcomp.collect(env, mask, 2, None,
                                           np.random.default_rng(0))
    self.assertEqual(rounds, 6)
    assert not partial
    assert np.all(obs.counts == 2)
    assert np.allclose(obs.means(), env.model.R)

  def testCollectTruncated(self):
    env = triad_env(horizon=4)
    mask = SampleMask([0, 1, 2], [0, 1, 2], np.ones((3, 3), dtype=bool), 2)
    obs, rounds, partial = matcomp.collect(env, mask, 2, None,
                                           np.random.default_rng(0))
    self.assertEqual(rounds, 4)
    assert partial
    assert env.finished

  def testCollectPadsOffOmega(self):
    env = triad_env()
    omega = np.array([[True, True, False], [True, False, False]])
    mask = SampleMask([0, 1], [0, 1, 2], omega, 3)
    off = lambda: np.zeros(3, dtype=int)
    obs, rounds, _ = matcomp.collect(env, mask, 3, off, np.random.default_rng(0))
    self.assertEqual(rounds, 6)
    self.assertEqual(obs.counts.tolist(), [[3, 3, 0], [3, 0, 0]])

  def testCollectNeedsOffPolicy(self):
    env = triad_env()
    mask = SampleMask([0], [0, 1], np.ones((1, 2), dtype=bool))
    self.assertRaises(OracleContractError, matcomp.collect, env, mask, 1,
                      None, np.random.default_rng(0))


class ObservationTests(TestCase):
  def testAveraging(self):
    obs = AveragedObservations([4, 2], [7, 3, 5])
    obs.add([2, 2, 4], [5, 5, 3], [1.0, 2.0, -1.0])
    Z = obs.means()
    self.assertEqual(obs.user_set.tolist(), [2, 4])
    self.assertEqual(obs.item_set.tolist(), [3, 5, 7])
    self.assertEqual(Z[0, 1], 1.5)
    self.assertEqual(Z[1, 0], -1.0)
    self.assertEqual(len(obs), 2)
    self.assertEqual(sorted(obs.keys()), [(2, 5), (4, 3)])

  def testOutsideBlock(self):
    obs = AveragedObservations([0, 1], [0, 1])
    self.assertRaises(OracleContractError, obs.add, [0], [2], [1.0])

  def testDump(self):
    obs = AveragedObservations([0, 3], [1, 2])
    obs.add([0, 0, 3], [1, 1, 2], [0.1, 0.2, 0.3])
    fd, path = tempfile.mkstemp()
    os.close(fd)
    try:
      matcomp.dump_observations(obs, path)
      back = matcomp.load_observations(path)
    finally:
      os.remove(path)
    assert np.array_equal(back.counts, obs.counts)
    assert np.allclose(back.means(), obs.means())

  def testLoadRejectsOtherFiles(self):
    fd, path = tempfile.mkstemp()
    with os.fdopen(fd, "w") as f:
      f.write("hello\nworld\n")
    try:
      self.assertRaises(OracleContractError, matcomp.load_observations, path)
    finally:
      os.remove(path)


class SolverTests(TestCase):
  def testSoftThreshold(self):
    X, s = matcomp.soft_threshold(np.diag([3.0, 1.0]), 2.0)
    assert np.allclose(X, np.diag([1.0, 0.0]))
    assert np.allclose(s, [1.0, 0.0])

  def testBalancedBlocks(self):
    blocks = matcomp.balanced_blocks(10, 3, np.random.default_rng(0))
    self.assertEqual(len(blocks), 4)
    self.assertEqual(sorted(np.concatenate(blocks).tolist()), list(range(10)))
    assert max(len(b) for b in blocks) - min(len(b) for b in blocks) <= 1

  def testRidgeRows(self):
    Z = np.array([[1.0, 2.0], [3.0, -1.0]])
    X = matcomp.ridge_rows(np.ones((2, 2)), Z, np.eye(2), 0.0)
    assert np.allclose(X, Z)

  def testAltminRecovers(self):
    R = low_rank(20, 20, 2, 4)
    mask = np.random.default_rng(5).random((20, 20)) < 0.6
    config = OracleConfig(tolerance=1e-14, max_iterations=2000)
    result = matcomp.complete_altmin(np.where(mask, R, 0.0), mask, 2, config)
    assert np.abs(result.estimate - R).max() < 1e-3, \
           "altmin error %g" % np.abs(result.estimate - R).max()

  def testNuclearFullMask(self):
    R = low_rank(6, 15, 2, 1)
    result = matcomp.complete_nuclear(R, np.ones(R.shape, dtype=bool), 0.0,
                                      OracleConfig(), np.random.default_rng(0))
    assert result.converged
    assert np.allclose(result.estimate, R)

  def testNuclearPartialMask(self):
    errors = []
    config = OracleConfig(max_iterations=3000, tolerance=1e-12)
    for seed in range(5):
      R = low_rank(20, 20, 1, seed)
      mask = np.random.default_rng(seed + 10).random(R.shape) < 0.6
      result = matcomp.complete_nuclear(np.where(mask, R, 0.0), mask, 0.0,
                                        config, np.random.default_rng(seed))
      errors.append(np.abs(result.estimate - R).max())
    assert np.median(errors) <= 1e-2, errors

  def testNuclearLargeLambdaGivesZero(self):
    R = low_rank(8, 8, 2, 3)
    mask = np.random.default_rng(0).random(R.shape) < 0.5
    Z = np.where(mask, R, 0.0)
    result = matcomp.complete_nuclear(Z, mask, 1e6 * np.linalg.norm(Z),
                                      OracleConfig(), np.random.default_rng(0))
    assert result.converged
    assert not result.estimate.any()

  def testNuclearObjectiveDecreases(self):
    R = low_rank(12, 12, 2, 2)
    mask = np.random.default_rng(1).random(R.shape) < 0.7
    result = matcomp.complete_nuclear(np.where(mask, R, 0.0), mask, 0.05,
                                      OracleConfig(max_iterations=200),
                                      np.random.default_rng(0))
    for history in result.history:
      for a, b in zip(history, history[1:]):
        assert b <= a + 1e-9

  def testAltminNeedsRank(self):
    obs = AveragedObservations([0], [0])
    obs.add([0], [0], [1.0])
    plan = EstimatePlan(1.0, 1, 0.0, None)
    self.assertRaises(OracleParameterError, matcomp.solve, obs, plan,
                      OracleConfig(), np.random.default_rng(0))


class OracleTests(TestCase):
  def testPlanDerivation(self):
    config = OracleConfig(rank=2)
    plan = matcomp.plan_estimate(np.arange(50), np.arange(20), 0.5, config,
                                 0.5, np.random.default_rng(0))
    log_d2 = math.log(20)
    self.assertEqual(plan.p, 1.0)
    self.assertEqual(plan.s, int(math.ceil((2 * 0.5 * 2 / (0.5 * log_d2))**2)))
    self.assertAlmostEqual(plan.lam, 2 * 0.5 * math.sqrt(20))
    assert plan.mask.omega.all()

  def testForcedPlan(self):
    config = OracleConfig(p=0.5, s=3, lam=0.1)
    plan = matcomp.plan_estimate(np.arange(10), np.arange(10), 0.1, config,
                                 1.0, np.random.default_rng(0))
    self.assertEqual((plan.p, plan.s, plan.lam), (0.5, 3, 0.1))

  def testPlanRejectsAccuracy(self):
    self.assertRaises(OracleParameterError, matcomp.plan_estimate,
                      [0], [0], 0.0, OracleConfig(), 1.0,
                      np.random.default_rng(0))

  def testEstimateSimple(self):
    env = triad_env()
    result = matcomp.estimate_simple(env, [0, 1, 2], [0, 1, 2], 0.1,
                                     OracleConfig(rank=2), None,
                                     np.random.default_rng(0))
    self.assertEqual(result.rounds_used, 3)
    self.assertEqual(env.t, 3)
    assert not result.partial
    assert result.max_error(env.model.R) < 1e-6
