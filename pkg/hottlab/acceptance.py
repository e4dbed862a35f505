#
# The acceptance suite.  Each criterion builds its own fixtures from
# fixed seeds, runs the relevant part of the lab at full size, and
# reports pass/fail with a one-line detail.  The unit tests exercise
# the same properties at reduced sizes.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import filecmp
import math
import os
import shutil
import tempfile
import time
from collections import namedtuple

import numpy as np

from .clusterelim import PhasedClusterElim, PceConfig, prune_items
from .config import ExperimentConfig, PolicySpec
from .detelim import (DeterminantElim, DetElimConfig, ColumnFamily,
                      SplitEstimates, HadamardViolation, required_d,
                      sample_items, coverage, mu_exact, mu_hat, instant_bound)
from .environment import Environment
from .harness import run_experiment, emit_csv
from .lablogging import log
from .matcomp import OracleConfig, complete_altmin, complete_nuclear
from .model import (generate_hull_instance, generate_simplex_instance,
                    generate_block_instance, triad_instance, verify_hott,
                    best_worst_items, hott_is_det_maximal, compute_gaps,
                    subset_index)
from .seeding import substream

CriterionResult = namedtuple("CriterionResult", "number name passed detail seconds")


def hull_extreme_violations(model, tolerance=1e-12):
  """Users whose best or worst item is not hott although the hull
  extreme on that side is a hott vertex rather than the origin."""
  best, worst = best_worst_items(model)
  hott = list(model.hott)
  bad = []
  for u in range(model.M):
    row = model.R[u]
    hott_row = row[hott]
    if hott_row.max() > tolerance and best[u] not in hott \
       and row[best[u]] > hott_row.max() + tolerance:
      bad.append(u)
    elif hott_row.min() < -tolerance and worst[u] not in hott \
         and row[worst[u]] < hott_row.min() - tolerance:
      bad.append(u)
  return bad

def _random_hull_instances(count, seed):
  rng = np.random.default_rng(seed)
  models = []
  while len(models) < count:
    r = int(rng.integers(1, 4))
    M = int(rng.integers(r, 51))
    N = int(rng.integers(r + 1, 21))
    model = generate_hull_instance(M, N, r, rng)
    if verify_hott(model)[0]:
      models.append(model)
  return models


class AcceptanceSuite(object):
  """Criteria 1 to 10.  THREADS bounds the replicate pool of the
  experiment-level criteria."""

  NAMES = {
    1: "best/worst items are hott",
    2: "determinant dominance",
    3: "counter-example fixture",
    4: "matrix completion sanity",
    5: "coverage Monte Carlo",
    6: "DeterminantElim correctness",
    7: "PhasedClusterElim correctness",
    8: "PES beats the baselines",
    9: "determinant estimator unbiased",
    10: "determinism",
  }

  def __init__(self, threads=1):
    self.threads = threads
    self.hadamard_trips = 0
    self._hull_models = None

  def hull_models(self):
    if self._hull_models is None:
      self._hull_models = _random_hull_instances(200, 2024)
    return self._hull_models

  def criterion_1(self):
    models = self.hull_models()
    failing = sum(1 for m in models if hull_extreme_violations(m))
    return failing == 0, "%d of %d instances violate" % (failing, len(models))

  def criterion_2(self):
    models = self.hull_models()
    failing = sum(1 for m in models if not hott_is_det_maximal(m))
    return failing == 0, "%d of %d instances not maximal" % (failing, len(models))

  def criterion_3(self):
    eps = 0.2
    model = triad_instance(p=0.5, eps=eps)
    gaps = compute_gaps(model)
    gaps_ok = gaps.delta_hott == 1.0 and abs(gaps.delta - 2 * eps / 3) < 1e-12
    threshold = PceConfig().threshold
    missed = []
    for k in (1.0 / 80, 1.0 / 40, 1.0 / 20, 1.0 / 10, 1.0 / 5):
      T = prune_items(np.ones((model.M, model.N), dtype=bool), model.R,
                      threshold * k)
      if not (T[2] & T[0]).any():
        missed.append(k)
    return gaps_ok and not missed, \
      "delta_hott=%r delta=%r, u3 apart from u1 at k in %s" \
      % (gaps.delta_hott, gaps.delta, missed)

  def criterion_4(self):
    exact_alt, exact_nuc, ratios = [], [], []
    config = OracleConfig(max_iterations=5000, tolerance=1e-13)
    for seed in range(20):
      rng = np.random.default_rng(seed)
      A = rng.standard_normal((20, 2))
      B = rng.standard_normal((20, 2))
      R = A.dot(B.T) / 2.0
      mask = rng.random((20, 20)) < 0.5
      Z = np.where(mask, R, 0.0)
      exact_alt.append(np.abs(complete_altmin(Z, mask, 2, config).estimate - R).max())
      exact_nuc.append(np.abs(complete_nuclear(Z, mask, 1e-4, config, rng)
                              .estimate - R).max())
      errors = []
      noise = rng.standard_normal((20, 20))
      for s in (1, 4):
        noisy = np.where(mask, R + 0.5 * noise / math.sqrt(s), 0.0)
        errors.append(float(np.median(np.abs(
          complete_altmin(noisy, mask, 2, config).estimate - R))))
      ratios.append(errors[0] / errors[1])
    alt, nuc, ratio = (float(np.median(x)) for x in (exact_alt, exact_nuc, ratios))
    passed = alt <= 1e-4 and nuc <= 1e-2 and 1.0 <= ratio <= 4.0
    return passed, "altmin %.2e, nuclear %.2e, median error ratio " \
                   "s=1/s=4 %.2f" % (alt, nuc, ratio)

  def criterion_5(self):
    M, N, r, delta, n = 1000, 20, 2, 0.1, 10
    d = required_d(n, delta, N, M, r)
    family = ColumnFamily(subset_index(N, r))
    rng = np.random.default_rng(5)
    full = 0
    for _ in range(200):
      sampled, _ = sample_items(family, d, rng, M, N)
      if min(len(h) for h in coverage(family, sampled)) >= n:
        full += 1
    return full >= 180, "d=%d, full coverage in %d/200 trials" % (d, full)

  def _detelim_seed(self, seed):
    model = generate_simplex_instance(60, 8, 2, substream(seed, "instance"),
                                      0.2, sigma2=0.01)
    env = Environment(model, 30000, substream(seed, "noise"),
                      keep_history=True)
    policy = DeterminantElim(env, DetElimConfig(), substream(seed, "policy"))
    family = ColumnFamily(subset_index(model.N, model.r))
    mus = [mu_exact(model.R, c) for c in family.columns]
    top = tuple(family.columns[int(np.argmax(mus))])
    try:
      policy.run()
    except HadamardViolation:
      self.hadamard_trips += 1
      raise

    alive = all(rec["hott_alive"] for rec in policy.records)
    unique = len(policy.family) == 1 and tuple(model.hott) in policy.family
    bounds_ok = True
    simple = env.trace.increments("simple")
    for t, slates, _ in env.history:
      shown = set(tuple(int(x) for x in row) for row in slates)
      bound = max(instant_bound(model.V, model.hott, c) for c in shown)
      if simple[t] > bound + 1e-12:
        bounds_ok = False
        break
    return alive, unique, top in policy.family, bounds_ok

  def criterion_6(self):
    outcomes = [self._detelim_seed(seed) for seed in range(20)]
    alive = sum(o[0] for o in outcomes)
    unique = sum(o[0] and o[1] for o in outcomes)
    top = sum(o[2] for o in outcomes)
    bounds = all(o[3] for o in outcomes)
    passed = unique >= 19 and top == 20 and bounds
    return passed, ("hott alive %d/20, unique survivor %d/20, top column "
                    "alive %d/20, instant bound held: %s"
                    % (alive, unique, top, bounds))

  def _pce_seed(self, model, horizon, seed):
    env = Environment(model, horizon, substream(seed, "noise"))
    policy = PhasedClusterElim(env, OracleConfig(), PceConfig(),
                               substream(seed, "policy"))
    policy.run()
    gaps = compute_gaps(model)
    best = np.argmax(model.R, axis=1)
    seeds = policy.seeds
    stage1 = seeds is not None and \
             len(set(int(best[s]) for s in seeds)) == model.r and \
             policy.stage1_phases <= math.ceil(math.log2(40.0 / gaps.delta_hott))
    alive = all(rec["hott_alive"] for rec in policy.records)
    regret = env.trace.increments("general")
    quarter = len(regret) // 4
    first, last = regret[:quarter].mean(), regret[-quarter:].mean()
    decays = last <= 0.1 * first
    return stage1, alive, decays

  def criterion_7(self):
    outcomes = []
    for seed in range(20):
      triad = triad_instance(sigma2=0.0025, replicas=10)
      outcomes.append(self._pce_seed(triad, 5000, seed))
      block = generate_block_instance(60, 60, 2, substream(seed, "instance"))
      block = block.rescaled().with_noise(0.0025)
      outcomes.append(self._pce_seed(block, 6000, seed))
    total = len(outcomes)
    stage1, alive, decays = (sum(o[i] for o in outcomes) for i in range(3))
    passed = stage1 >= 0.95 * total and alive >= 0.95 * total and \
             decays == total
    return passed, ("stage 1 ok %d/%d, best item alive %d/%d, regret decays "
                    "%d/%d" % (stage1, total, alive, total, decays, total))

  def criterion_8(self):
    policies = [PolicySpec("pes", "pes", {"B": 25})]
    policies += [PolicySpec("etc%d" % m, "etc", {"explore_rounds": m})
                 for m in (25, 50, 75)]
    policies.append(PolicySpec("am", "am"))
    config = ExperimentConfig(
      {"name": "block", "horizon": 300, "seeds": [1, 2, 3, 4, 5]},
      {"generator": "block", "M": 200, "N": 200, "r": 4, "sigma2": 0.25},
      policies)
    result = run_experiment(config, threads=self.threads)
    if result.failures:
      return False, "failed cells: %s" % sorted(result.failures)
    finals = dict((p, result.final(p, "general")[0]) for p in result.policies)
    pes = finals.pop("pes")
    passed = all(pes < other for other in finals.values())
    return passed, "pes %.2f vs %s" % (pes, ", ".join(
      "%s %.2f" % (k, v) for k, v in sorted(finals.items())))

  def criterion_9(self):
    model = generate_simplex_instance(10, 4, 2, 9, 0.2, sigma2=0.01)
    J = model.hott
    family = ColumnFamily([J])
    sampled = np.ones((model.M, model.N), dtype=bool)
    rng = np.random.default_rng(9)
    sigma = 0.1
    draws = []
    for _ in range(500):
      R1 = model.R + sigma * rng.standard_normal(model.R.shape)
      R2 = model.R + sigma * rng.standard_normal(model.R.shape)
      try:
        draws.append(mu_hat(SplitEstimates(R1, R2, sampled, family), J,
                            10**5, rng))
      except HadamardViolation:
        self.hadamard_trips += 1
    exact = mu_exact(model.R, J)
    mean = float(np.mean(draws))
    se = float(np.std(draws, ddof=1) / math.sqrt(len(draws)))
    passed = abs(mean - exact) <= 3 * se and self.hadamard_trips == 0
    return passed, "mean %.5f, exact %.5f, se %.5f, Hadamard trips %d" \
                   % (mean, exact, se, self.hadamard_trips)

  def criterion_10(self):
    policies = [PolicySpec("pce", "pce"), PolicySpec("detelim", "detelim"),
                PolicySpec("etc", "etc", {"explore_rounds": 20}),
                PolicySpec("am", "am"), PolicySpec("pes", "pes", {"B": 10})]
    config = ExperimentConfig(
      {"name": "determinism", "horizon": 300, "seeds": [3, 4]},
      {"generator": "simplex", "M": 20, "N": 6, "r": 2, "sigma2": 0.01},
      policies)
    directory = tempfile.mkdtemp(prefix="hottlab-")
    try:
      paths = []
      for i, threads in enumerate((1, max(2, self.threads))):
        path = os.path.join(directory, "run%d.csv" % i)
        emit_csv(run_experiment(config, threads=threads), path)
        paths.append(path)
      same = filecmp.cmp(paths[0], paths[1], shallow=False)
    finally:
      shutil.rmtree(directory)
    return same, "serial and parallel CSVs identical: %s" % same

  def run(self, only=None):
    """Yield a CriterionResult per selected criterion, in order."""
    for number in sorted(self.NAMES):
      if only and number not in only:
        continue
      started = time.time()
      try:
        passed, detail = getattr(self, "criterion_%d" % number)()
      except Exception as e:
        passed, detail = False, "%s: %s" % (type(e).__name__, e)
      seconds = time.time() - started
      log("Acceptance %d: %s (%s)" % (number, passed, detail))
      yield CriterionResult(number, self.NAMES[number], bool(passed), detail,
                            seconds)
