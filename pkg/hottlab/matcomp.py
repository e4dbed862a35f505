#
# The offline matrix-completion oracle.  An estimate of a sub-matrix
# of R is bought with simulated rounds: a random sampling mask is
# planned, every masked entry is observed s times through the
# environment, and the averaged entries are completed by one of two
# solvers (alternating least squares, or nuclear-norm proximal
# descent).
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import math
from collections import namedtuple

import numpy as np
from scipy.linalg import svd, svdvals

from .lablogging import log, warn

class OracleError(Exception):
  "General exception for the completion oracle"

class OracleParameterError(OracleError):
  "Oracle parameters out of range."

class OracleContractError(OracleError):
  "A caller broke a precondition of the oracle."

# Smallest ridge ever applied in a least-squares solve.
RIDGE_FLOOR = 1e-8

# Lambda path of the nuclear-norm solver: each stage shrinks lambda by
# CONTINUATION_RATIO, from the largest singular value of the data down
# to CONTINUATION_FLOOR times it.  Intermediate stages stop at
# STAGE_TOLERANCE.
CONTINUATION_RATIO = 0.25
CONTINUATION_FLOOR = 1e-6
STAGE_TOLERANCE = 1e-6


class OracleConfig(object):
  """Parameters of the completion oracle.

  P, S and LAM are normally derived from the requested accuracy; set
  them to force a value.  C_P, C_S and C_LAMBDA scale the derived
  schedules, MU is the assumed incoherence."""

  DEFAULTS = {
    "p": None,
    "s": None,
    "lam": None,
    "C_p": 4.0,
    "c_s": 2.0,
    "C_lambda": 2.0,
    "mu": 2.0,
    "solver": "altmin",
    "rank": None,
    "ridge": 0.0,
    "max_iterations": 500,
    "tolerance": 1e-10,
  }

  def __init__(self, **overrides):
    for key, value in self.DEFAULTS.items():
      setattr(self, key, value)
    self.update(**overrides)

  def update(self, **overrides):
    for key, value in overrides.items():
      if key not in self.DEFAULTS:
        raise OracleParameterError("unknown oracle parameter '%s'" % key)
      setattr(self, key, value)
    self.validate()
    return self

  def copy(self, **overrides):
    other = OracleConfig(**self.as_dict())
    return other.update(**overrides)

  def as_dict(self):
    return dict((key, getattr(self, key)) for key in self.DEFAULTS)

  def validate(self):
    if self.p is not None and not 0.0 < self.p <= 1.0:
      raise OracleParameterError("p must lie in (0, 1]")
    if self.s is not None and self.s < 1:
      raise OracleParameterError("s must be at least 1")
    if self.lam is not None and self.lam < 0:
      raise OracleParameterError("lambda must be non-negative")
    if self.ridge < 0:
      raise OracleParameterError("ridge must be non-negative")
    if self.solver not in SOLVERS:
      raise OracleParameterError("unknown solver '%s'" % self.solver)
    if self.rank is not None and self.rank < 1:
      raise OracleParameterError("rank must be at least 1")


class SampleMask(object):
  """The entries Omega of USER_SET x ITEM_SET to be observed.

  OMEGA is a boolean matrix in local coordinates: OMEGA[i, j] refers to
  user USER_SET[i] and item ITEM_SET[j]."""

  def __init__(self, user_set, item_set, omega, s=1):
    self.user_set = np.asarray(user_set, dtype=int)
    self.item_set = np.asarray(item_set, dtype=int)
    self.omega = np.asarray(omega, dtype=bool)
    if self.omega.shape != (len(self.user_set), len(self.item_set)):
      raise OracleContractError("mask shape does not match its index sets")
    self.b = int(self.omega.sum(axis=1).max()) if self.omega.size else 0
    self.s = int(s)

  @property
  def m(self):
    return self.b * self.s

  def __len__(self):
    return int(self.omega.sum())

  def pairs(self):
    """Omega as a list of global (user, item) pairs."""
    rows, cols = np.nonzero(self.omega)
    return [(int(self.user_set[i]), int(self.item_set[j]))
            for i, j in zip(rows, cols)]


class AveragedObservations(object):
  """Running means of the noisy samples of USER_SET x ITEM_SET."""

  def __init__(self, user_set, item_set):
    self.user_set = np.unique(np.asarray(user_set, dtype=int))
    self.item_set = np.unique(np.asarray(item_set, dtype=int))
    shape = (len(self.user_set), len(self.item_set))
    self.sums = np.zeros(shape)
    self.counts = np.zeros(shape, dtype=int)

  def _locate(self, index_set, values):
    values = np.asarray(values, dtype=int)
    pos = np.searchsorted(index_set, values)
    pos = np.minimum(pos, len(index_set) - 1)
    if np.any(index_set[pos] != values):
      raise OracleContractError("observation outside the estimated block")
    return pos

  def add(self, users, items, values):
    """Accumulate samples; USERS, ITEMS and VALUES are parallel arrays
    of global indices and rewards."""
    rows = self._locate(self.user_set, users)
    cols = self._locate(self.item_set, items)
    np.add.at(self.sums, (rows, cols), np.asarray(values, dtype=float))
    np.add.at(self.counts, (rows, cols), 1)

  @property
  def observed(self):
    return self.counts > 0

  def means(self):
    """The matrix Z: sample means where observed, zero elsewhere."""
    Z = np.zeros(self.sums.shape)
    seen = self.observed
    Z[seen] = self.sums[seen] / self.counts[seen]
    return Z

  def keys(self):
    rows, cols = np.nonzero(self.observed)
    return [(int(self.user_set[i]), int(self.item_set[j]))
            for i, j in zip(rows, cols)]

  def __len__(self):
    return int(self.observed.sum())


EstimatePlan = namedtuple("EstimatePlan", "p s lam mask")
Completion = namedtuple("Completion", "estimate converged iterations history")


class OracleResult(object):
  """The outcome of one oracle call."""

  def __init__(self, estimate, user_set, item_set, rounds_used, partial,
               converged, observations, plan):
    self.estimate = estimate
    self.user_set = user_set
    self.item_set = item_set
    self.rounds_used = rounds_used
    # the horizon ended before every masked entry had s samples
    self.partial = partial
    self.converged = converged
    self.observations = observations
    self.plan = plan

  def max_error(self, R):
    """Realized entrywise error against the ground truth R."""
    block = R[np.ix_(self.user_set, self.item_set)]
    return float(np.abs(self.estimate - block).max())


#--------- Sampling and collection -----------

def plan_mask(user_set, item_set, p, rng, s=1):
  """Draw Omega with independent Bernoulli(P) membership.  A user
  whose row came out empty gets one uniformly random item."""
  user_set = np.asarray(user_set, dtype=int)
  item_set = np.asarray(item_set, dtype=int)
  if len(user_set) == 0 or len(item_set) == 0:
    raise OracleParameterError("empty user or item set")
  if not 0.0 < p <= 1.0:
    raise OracleParameterError("p must lie in (0, 1]")
  omega = rng.random((len(user_set), len(item_set))) < p
  empty = np.flatnonzero(~omega.any(axis=1))
  if len(empty):
    omega[empty, rng.integers(0, len(item_set), size=len(empty))] = True
  return SampleMask(user_set, item_set, omega, s)

def collect(env, mask, s, off_policy, rng):
  """Spend up to mask.b * S rounds observing every entry of Omega S
  times.  Returns (observations, rounds_used, partial).

  Within each block of b rounds every user of the mask sees each of its
  Omega items once; users with fewer items are padded with items off
  their Omega row, and those samples are thrown away.  Users outside
  the mask are served OFF_POLICY(), a length-M item vector."""
  obs = AveragedObservations(mask.user_set, mask.item_set)
  b = mask.b
  n_users = len(mask.user_set)
  n_items = len(mask.item_set)
  excluded = np.setdiff1d(np.arange(env.M), mask.user_set)
  if len(excluded) and off_policy is None:
    raise OracleContractError("users outside the mask need an off-policy")

  # schedule[i, c] is the local item user i sees at column c, or -1
  lengths = mask.omega.sum(axis=1)
  schedule = np.full((n_users, b), -1, dtype=int)
  for i in range(n_users):
    schedule[i, :lengths[i]] = np.flatnonzero(mask.omega[i])

  total = b * s
  rounds = min(total, env.remaining)
  partial = rounds < total
  if partial:
    log("Oracle collection truncated at %d of %d rounds" % (rounds, total))

  for t in range(rounds):
    if len(excluded):
      items = np.asarray(off_policy(), dtype=int)
      if items.size == 0:
        raise OracleContractError("off-policy returned an empty slate")
      items = items.copy()
    else:
      items = np.zeros(env.M, dtype=int)

    real = schedule[:, t % b] >= 0
    local = schedule[:, t % b].copy()
    pad = np.flatnonzero(~real)
    while len(pad):
      draw = rng.integers(0, n_items, size=len(pad))
      local[pad] = draw
      # padding must stay off the user's Omega row
      pad = pad[mask.omega[pad, draw]]

    items[mask.user_set] = mask.item_set[local]
    values = env.play(items)
    obs.add(mask.user_set[real], mask.item_set[local[real]],
            values[mask.user_set[real]])
  return obs, rounds, partial


#--------- Solvers -----------

def soft_threshold(X, tau):
  """Proximal operator of TAU times the nuclear norm.  Returns the
  thresholded matrix and its singular values."""
  U, s, Vt = svd(X, full_matrices=False)
  shrunk = np.maximum(s - tau, 0.0)
  return (U * shrunk).dot(Vt), shrunk

def balanced_blocks(n_long, n_short, rng):
  """Split range(N_LONG) into ceil(N_LONG / N_SHORT) random blocks of
  near-equal size."""
  k = max(1, int(math.ceil(n_long / float(max(n_short, 1)))))
  return [np.sort(block) for block in
          np.array_split(rng.permutation(n_long), k)]

def _objective(Z, W, X, lam, singular=None):
  if singular is None:
    singular = svdvals(X)
  residual = np.where(W, X - Z, 0.0)
  return 0.5 * float((residual**2).sum()) + lam * float(np.sum(singular))

def _accelerated(Z, W, X, lam, max_iterations, tolerance, history):
  """Accelerated proximal descent at one LAM from the warm start X.
  Momentum is dropped whenever a step would raise the objective."""
  objective = _objective(Z, W, X, lam)
  Y, t = X, 1.0
  for iterations in range(1, max_iterations + 1):
    # Gradient of the squared loss has Lipschitz constant 1.
    new, shrunk = soft_threshold(np.where(W, Z, Y), lam)
    value = _objective(Z, W, new, lam, shrunk)
    if value > objective and t > 1.0:
      Y, t = X, 1.0
      continue
    t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
    Y = new + ((t - 1.0) / t_next) * (new - X)
    change = np.linalg.norm(new - X)
    previous, objective = objective, value
    X, t = new, t_next
    history.append(value)
    if change <= tolerance or \
       abs(previous - value) <= tolerance * abs(previous):
      return X, True, iterations
  return X, False, max_iterations

def _nuclear_block(Z, W, lam, max_iterations, tolerance):
  # Continuation: solve along a decreasing lambda path, each stage warm
  # started from the last, before the target LAM.
  X = np.zeros(Z.shape)
  history = []
  iterations = 0
  start = float(svdvals(np.where(W, Z, 0.0))[0]) if Z.size else 0.0
  level = start * CONTINUATION_RATIO
  floor = max(lam, start * CONTINUATION_FLOOR)
  while level > floor:
    X, _, its = _accelerated(Z, W, X, level, max_iterations,
                             max(tolerance, STAGE_TOLERANCE), history)
    iterations += its
    level *= CONTINUATION_RATIO
  X, converged, its = _accelerated(Z, W, X, lam, max_iterations, tolerance,
                                   history)
  return X, converged, iterations + its, history

def complete_nuclear(Z, mask, lam, config, rng):
  """Nuclear-norm regularized completion of Z on the observed MASK, one
  roughly square block at a time."""
  if lam < 0:
    raise OracleParameterError("lambda must be non-negative")
  Z = np.asarray(Z, dtype=float)
  W = np.asarray(mask, dtype=bool)
  n_rows, n_cols = Z.shape
  Q = np.zeros(Z.shape)
  converged = True
  iterations = 0
  history = []

  by_columns = n_cols >= n_rows
  n_long, n_short = (n_cols, n_rows) if by_columns else (n_rows, n_cols)
  for block in balanced_blocks(n_long, n_short, rng):
    if by_columns:
      X, ok, its, hist = _nuclear_block(Z[:, block], W[:, block], lam,
                                        config.max_iterations, config.tolerance)
      Q[:, block] = X
    else:
      X, ok, its, hist = _nuclear_block(Z[block], W[block], lam,
                                        config.max_iterations, config.tolerance)
      Q[block] = X
    converged = converged and ok
    iterations = max(iterations, its)
    history.append(hist)

  if not converged:
    warn("Nuclear-norm solver did not converge within %d iterations a stage"
         % config.max_iterations)
  return Completion(Q, converged, iterations, history)

def ridge_rows(W, Z, F, ridge):
  """Solve, for every row i, the weighted ridge problem
  min_x sum_j W[i,j] (Z[i,j] - F[j].x)^2 + RIDGE |x|^2."""
  r = F.shape[1]
  A = np.einsum("ij,jk,jl->ikl", W, F, F) + max(ridge, RIDGE_FLOOR) * np.eye(r)
  rhs = (W * Z).dot(F)
  return np.linalg.solve(A, rhs[:, :, np.newaxis])[:, :, 0]

def spectral_factors(Z, W, r):
  """Rank-R factors of the zero-filled Z, rescaled by the observed
  fraction."""
  fraction = max(float(np.mean(W > 0)), 1e-12)
  U, s, Vt = svd(np.where(W > 0, Z, 0.0) / fraction, full_matrices=False)
  root = np.sqrt(s[:r])
  return U[:, :r] * root, Vt[:r].T * root

def complete_altmin(Z, mask, r, config):
  """Alternating ridge least squares from a spectral start.  MASK may
  hold per-entry weights instead of booleans."""
  if r < 1:
    raise OracleParameterError("rank must be at least 1")
  Z = np.asarray(Z, dtype=float)
  W = np.asarray(mask, dtype=float)
  r = min(r, min(Z.shape))
  X, Y = spectral_factors(Z, W, r)
  Q = X.dot(Y.T)
  history = []
  converged = False
  iterations = 0
  for iterations in range(1, config.max_iterations + 1):
    X = ridge_rows(W, Z, Y, config.ridge)
    Y = ridge_rows(W.T, Z.T, X, config.ridge)
    new = X.dot(Y.T)
    change = np.linalg.norm(new - Q) / max(np.linalg.norm(Q), 1e-12)
    history.append(float(np.sum(W * (new - Z)**2)))
    Q = new
    if change <= config.tolerance:
      converged = True
      break
  if not converged:
    log("Alternating minimization hit %d iterations" % config.max_iterations)
  return Completion(Q, converged, iterations, history)

def _solve_altmin(obs, plan, config, rng):
  if config.rank is None:
    raise OracleParameterError("the altmin solver needs a rank")
  return complete_altmin(obs.means(), obs.observed, config.rank, config)

def _solve_nuclear(obs, plan, config, rng):
  return complete_nuclear(obs.means(), obs.observed, plan.lam, config, rng)

SOLVERS = {
  "altmin": _solve_altmin,
  "nuclear": _solve_nuclear,
}

def solve(obs, plan, config, rng):
  return SOLVERS[config.solver](obs, plan, config, rng)


#--------- The oracle -----------

def plan_estimate(user_set, item_set, eta, config, sigma, rng):
  """Derive (p, s, lambda) for accuracy ETA and draw the mask."""
  if eta <= 0:
    raise OracleParameterError("target accuracy must be positive")
  d2 = min(len(user_set), len(item_set))
  log_d2 = max(math.log(max(d2, 1)), 1.0)
  rank = config.rank or 1

  if config.p is not None:
    p = config.p
  else:
    p = min(1.0, config.C_p * config.mu**2 * log_d2**3 / d2)
  if config.s is not None:
    s = int(config.s)
  else:
    s = max(1, int(math.ceil((config.c_s * sigma * rank / (eta * log_d2))**2)))
  if config.lam is not None:
    lam = config.lam
  else:
    lam = config.C_lambda * sigma * math.sqrt(d2 * p)

  mask = plan_mask(user_set, item_set, p, rng, s)
  return EstimatePlan(p, s, lam, mask)

def estimate_simple(env, user_set, item_set, eta, config, off_policy, rng,
                    plan=None):
  """Estimate R on USER_SET x ITEM_SET to entrywise accuracy ETA,
  spending simulated rounds on ENV.  A PLAN from plan_estimate() may be
  passed in when the caller already drew one."""
  if plan is None:
    plan = plan_estimate(user_set, item_set, eta, config, env.model.sigma, rng)
  obs, rounds, partial = collect(env, plan.mask, plan.s, off_policy, rng)
  if partial:
    warn("Oracle ran out of horizon: %d of %d rounds" % (rounds, plan.mask.m))
    env.trace.flag("oracle_partial")
  if len(obs) == 0:
    estimate = np.zeros(obs.sums.shape)
    converged = False
  else:
    completion = solve(obs, plan, config, rng)
    estimate = completion.estimate
    converged = completion.converged
  if not converged:
    env.trace.flag("oracle_unconverged")
  log("Oracle: %dx%d block, p=%.3g s=%d lambda=%.3g, %d rounds"
      % (len(obs.user_set), len(obs.item_set), plan.p, plan.s, plan.lam,
         rounds))
  return OracleResult(estimate, obs.user_set, obs.item_set, rounds, partial,
                      converged, obs, plan)


#--------- Observation dumps -----------

def dump_observations(obs, path):
  """Write one 'u j mean count' record per observed entry."""
  Z = obs.means()
  with open(path, "w", newline="\n") as f:
    f.write("users %s\n" % " ".join(str(u) for u in obs.user_set))
    f.write("items %s\n" % " ".join(str(j) for j in obs.item_set))
    rows, cols = np.nonzero(obs.observed)
    for i, j in zip(rows, cols):
      f.write("%d %d %r %d\n" % (obs.user_set[i], obs.item_set[j],
                                 float(Z[i, j]), obs.counts[i, j]))

def load_observations(path):
  with open(path) as f:
    lines = [line.split() for line in f if line.strip()]
  if len(lines) < 2 or lines[0][0] != "users" or lines[1][0] != "items":
    raise OracleContractError("'%s' is not an observation dump" % path)
  obs = AveragedObservations([int(u) for u in lines[0][1:]],
                             [int(j) for j in lines[1][1:]])
  for fields in lines[2:]:
    u, j, mean, count = int(fields[0]), int(fields[1]), float(fields[2]), \
                        int(fields[3])
    rows = obs._locate(obs.user_set, [u])
    cols = obs._locate(obs.item_set, [j])
    obs.sums[rows, cols] = mean * count
    obs.counts[rows, cols] = count
  return obs
