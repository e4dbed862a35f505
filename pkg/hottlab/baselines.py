#
# The comparison policies: Explore-Then-Commit, online alternating
# minimization, and the simplified phased elimination that clusters
# users once with k-means.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import math

import numpy as np

from .kmeans import kmeans
from .lablogging import log, warn, log_phase
from .matcomp import (OracleConfig, AveragedObservations, EstimatePlan,
                      ridge_rows, spectral_factors, solve)

class BaselineError(Exception):
  "General exception for the baseline policies."


class AmConfig(object):
  """Online alternating minimization: RIDGE weight of each update,
  EPSILON exploration rate (divided by sqrt(t) when DECAY), RANK of the
  factors (defaults to the instance rank)."""

  DEFAULTS = {"ridge": 0.1, "epsilon": 0.05, "decay": True, "rank": None}

  def __init__(self, **overrides):
    for key, value in self.DEFAULTS.items():
      setattr(self, key, value)
    for key, value in overrides.items():
      if key not in self.DEFAULTS:
        raise BaselineError("unknown AM parameter '%s'" % key)
      setattr(self, key, value)
    if not 0.0 <= self.epsilon <= 1.0:
      raise BaselineError("exploration rate must lie in [0, 1]")


class PesConfig(object):
  """Simplified phased elimination: B initial exploration rounds,
  DELTA initial gap guess, D number of clusters (defaults to the
  instance rank), FRACTION of members an item must survive in, GROWTH
  of B (and shrink of DELTA) per phase, N_INIT k-means restarts."""

  DEFAULTS = {"B": 25, "delta": None, "d": None, "fraction": 0.7,
              "growth": 3, "n_init": 10}

  def __init__(self, **overrides):
    for key, value in self.DEFAULTS.items():
      setattr(self, key, value)
    for key, value in overrides.items():
      if key not in self.DEFAULTS:
        raise BaselineError("unknown PES parameter '%s'" % key)
      setattr(self, key, value)
    if self.B < 1:
      raise BaselineError("B must be at least 1")
    if self.delta is not None and self.delta <= 0:
      raise BaselineError("the gap guess must be positive")
    if self.d is not None and self.d < 1:
      raise BaselineError("d must be at least 1")
    if self.n_init < 1:
      raise BaselineError("n_init must be at least 1")


def _complete(obs, config, rank, sigma, rng):
  """Complete the observed block at the given rank."""
  frac = max(float(np.mean(obs.observed)), 1e-12)
  config = config.copy(rank=max(1, min(rank, *obs.sums.shape)))
  lam = config.lam
  if lam is None:
    lam = config.C_lambda * sigma * math.sqrt(min(obs.sums.shape) * frac)
  plan = EstimatePlan(frac, 1, lam, None)
  return solve(obs, plan, config, rng).estimate

def explore_uniform(env, rounds, rng, obs):
  """Show every user a uniformly random item for ROUNDS rounds."""
  users = np.arange(env.M)
  for _ in range(rounds):
    items = rng.integers(0, env.N, size=env.M)
    obs.add(users, items, env.play(items))


#--------- Explore-Then-Commit -----------

def run_etc(env, explore_rounds, oracle_config=None, rng=None):
  """Explore uniformly for EXPLORE_ROUNDS rounds, complete once, then
  recommend each user's estimated best item until the horizon."""
  if explore_rounds >= env.horizon:
    raise BaselineError("exploration must end before the horizon")
  rng = rng if rng is not None else np.random.default_rng()
  config = oracle_config or OracleConfig()
  obs = AveragedObservations(np.arange(env.M), np.arange(env.N))
  env.trace.mark_phase(0)
  explore_uniform(env, explore_rounds, rng, obs)

  estimate = _complete(obs, config, config.rank or env.model.r,
                       env.model.sigma, rng)
  commit = np.argmax(estimate, axis=1)
  log("ETC: committing after %d rounds" % explore_rounds)
  env.trace.mark_phase(1)
  while not env.finished:
    env.play(commit)
  return env.trace


#--------- Alternating minimization -----------

def run_am(env, am_config=None, rng=None, init=None):
  """Epsilon-greedy play on the current factor product, with one ridge
  sweep per round over all data gathered so far.  INIT optionally
  gives starting factors (U, V)."""
  config = am_config or AmConfig()
  rng = rng if rng is not None else np.random.default_rng()
  rank = config.rank or env.model.r
  M, N = env.M, env.N
  users = np.arange(M)
  obs = AveragedObservations(users, np.arange(N))
  X = Y = None
  if init is not None:
    X = np.array(init[0], dtype=float)
    Y = np.array(init[1], dtype=float)

  env.trace.mark_phase(0)
  while not env.finished:
    t = env.t + 1
    if X is None:
      items = rng.integers(0, N, size=M)
    else:
      items = np.argmax(X.dot(Y.T), axis=1)
      rate = config.epsilon / math.sqrt(t) if config.decay else config.epsilon
      explore = rng.random(M) < rate
      items[explore] = rng.integers(0, N, size=int(explore.sum()))
    obs.add(users, items, env.play(items))

    Z = obs.means()
    W = obs.counts.astype(float)
    if X is None:
      X, Y = spectral_factors(Z, W, rank)
      continue
    seen_rows = W.sum(axis=1) > 0
    X[seen_rows] = ridge_rows(W[seen_rows], Z[seen_rows], Y, config.ridge)
    seen_cols = W.sum(axis=0) > 0
    Y[seen_cols] = ridge_rows(W.T[seen_cols], Z.T[seen_cols], X, config.ridge)
  return env.trace


#--------- Simplified phased elimination -----------

def robust_intersection(sets, fraction=0.7):
  """Items present in at least ceil(FRACTION * n) of the n boolean rows
  of SETS."""
  sets = np.asarray(sets, dtype=bool)
  need = int(math.ceil(round(fraction * len(sets), 9)))
  return sets.sum(axis=0) >= need

def threshold_sets(estimate, allowed, delta):
  """Per row, the allowed items within DELTA of the row's best allowed
  estimate."""
  scores = np.where(allowed, estimate, -np.inf)
  best = scores.max(axis=1)
  return allowed & (best[:, np.newaxis] - estimate <= delta)


class PhasedElimSimplified(object):
  """One run of the simplified phased elimination."""

  def __init__(self, env, pes_config=None, oracle_config=None, rng=None):
    self.env = env
    self.config = pes_config or PesConfig()
    if self.config.delta is None:
      raise BaselineError("PES needs a gap guess")
    self.oracle = oracle_config or OracleConfig()
    self.rng = rng if rng is not None else np.random.default_rng()
    self.d = self.config.d or env.model.r
    self.rank = self.oracle.rank or env.model.r
    self.labels = None
    self.active = []
    self.records = []

  def _cluster_sets(self, T, members):
    common = robust_intersection(T[members], self.config.fraction)
    if not common.any():
      warn("PES: empty robust intersection, using the union")
      self.env.trace.flag("robust_fallback")
      return T[members].any(axis=0), True
    return common, False

  def _record(self, phase, B, delta, rounds, flags):
    best = np.argmax(self.env.model.R, axis=1)
    alive = all(self.active[self.labels[u]][best[u]]
                for u in range(self.env.M))
    record = {"phase": phase, "eps": delta, "n": B, "rounds": rounds,
              "groups": [int(a.sum()) for a in self.active],
              "hott_alive": alive, "flags": flags or None}
    self.records.append(record)
    log_phase("pes", record)

  def _exploit(self, estimate):
    items = np.empty(self.env.M, dtype=int)
    for u in range(self.env.M):
      allowed = self.active[self.labels[u]]
      items[u] = np.argmax(np.where(allowed, estimate[u], -np.inf))
    while not self.env.finished:
      self.env.play(items)

  def run(self):
    env, rng = self.env, self.rng
    B = self.config.B
    delta = self.config.delta
    M, N = env.M, env.N

    env.trace.mark_phase(0)
    obs = AveragedObservations(np.arange(M), np.arange(N))
    rounds = min(B, env.remaining)
    explore_uniform(env, rounds, rng, obs)
    estimate = _complete(obs, self.oracle, self.rank, env.model.sigma, rng)

    everything = np.ones((M, N), dtype=bool)
    T = threshold_sets(estimate, everything, delta)
    union = T.any(axis=0)
    k = min(self.d, M)
    self.labels, _, history = kmeans(estimate[:, union], k, rng,
                                     n_init=self.config.n_init)
    log("PES: k-means objective %s" % history[-1])

    flags = []
    self.active = []
    for i in range(k):
      members = np.flatnonzero(self.labels == i)
      if len(members) == 0:
        self.active.append(union.copy())
        continue
      common, fell_back = self._cluster_sets(T, members)
      if fell_back:
        flags.append("robust_fallback")
      self.active.append(common)
    self._record(0, B, delta, rounds, flags)

    phase = 1
    while not env.finished:
      B *= self.config.growth
      delta /= self.config.growth
      if B > env.remaining:
        log("PES: partial phase %d, exploiting" % phase)
        env.trace.mark_phase(phase)
        self._exploit(estimate)
        break

      env.trace.mark_phase(phase)
      clusters = [np.flatnonzero(self.labels == i) for i in range(k)]
      per_cluster = [AveragedObservations(members, np.flatnonzero(self.active[i]))
                     for i, members in enumerate(clusters)]
      for _ in range(B):
        items = np.empty(M, dtype=int)
        for i, members in enumerate(clusters):
          pool = np.flatnonzero(self.active[i])
          items[members] = pool[rng.integers(0, len(pool), size=len(members))]
        values = env.play(items)
        for i, members in enumerate(clusters):
          if len(members):
            per_cluster[i].add(members, items[members], values[members])

      flags = []
      for i, members in enumerate(clusters):
        if len(members) == 0:
          continue
        pool = np.flatnonzero(self.active[i])
        block = _complete(per_cluster[i], self.oracle, self.rank,
                          env.model.sigma, rng)
        estimate[np.ix_(members, pool)] = block
        allowed = np.zeros((len(members), N), dtype=bool)
        allowed[:, pool] = True
        T[members] = threshold_sets(estimate[members], allowed, delta)
        common, fell_back = self._cluster_sets(T, members)
        if fell_back:
          flags.append("robust_fallback")
        self.active[i] = common
      self._record(phase, B, delta, B, flags)
      phase += 1
    return env.trace


def run_pes(env, pes_config=None, oracle_config=None, rng=None):
  return PhasedElimSimplified(env, pes_config, oracle_config, rng).run()
