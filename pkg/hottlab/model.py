#
# The simulated world: a low-rank reward matrix R = U V^T with a set
# of 'hott' items, the instance generators, gap computation, regret
# accounting, and brute-force oracles for the structural properties
# the algorithms rely upon.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import itertools

import numpy as np
from scipy.optimize import linprog
from scipy.special import comb

from .lablogging import log, warn

class ModelError(Exception):
  "General exception for the reward model"

class ModelParameterError(ModelError):
  "Instance dimensions or parameters out of range."

class ModelGenerationError(ModelError):
  "Instance generation gave up after its bounded number of retries."

class ModelContractError(ModelError):
  "A caller broke a precondition (malformed slate, singular hott block)."

# Slack allowed on hull-feasibility constraints.
HULL_TOLERANCE = 1e-9

# Above this many r-subsets, brute-force determinant tables are not
# built and subset averages fall back to Monte Carlo.
SUBSET_CAP = 10**5


def as_generator(seed):
  """Accept either a seed or an existing numpy Generator."""
  if isinstance(seed, np.random.Generator):
    return seed
  return np.random.default_rng(seed)


class RewardModel(object):
  """Ground truth of one simulated instance.

  U is M x r (user embeddings), V is N x r (item embeddings), HOTT the
  ascending r-tuple of hott item indices and SIGMA2 the noise variance.
  Instances are immutable once built."""

  def __init__(self, U, V, hott, sigma2, unnormalized=False, setting=None):
    U = np.array(U, dtype=float)
    V = np.array(V, dtype=float)
    if U.ndim != 2 or V.ndim != 2 or U.shape[1] != V.shape[1]:
      raise ModelParameterError("U and V must be M x r and N x r")
    r = U.shape[1]
    hott = tuple(int(i) for i in hott)
    if len(hott) != r:
      raise ModelParameterError("need exactly r=%d hott items, got %d"
                                % (r, len(hott)))
    if any(b <= a for a, b in zip(hott, hott[1:])):
      raise ModelParameterError("hott indices must be strictly ascending")
    if hott[0] < 0 or hott[-1] >= V.shape[0]:
      raise ModelParameterError("hott index out of range")
    if sigma2 < 0:
      raise ModelParameterError("negative noise variance")

    R = U.dot(V.T)
    if not unnormalized and np.abs(R).max() > 1 + 1e-12:
      raise ModelParameterError(
        "rewards exceed [-1, 1]; flag the instance as unnormalized")

    for array in (U, V, R):
      array.setflags(write=False)
    self.U = U
    self.V = V
    self.R = R
    self.hott = hott
    self.sigma2 = float(sigma2)
    self.unnormalized = bool(unnormalized)
    # 'block', 'simplex', 'hull', 'triad' or None; informational only
    self.setting = setting

  @property
  def M(self):
    return self.U.shape[0]

  @property
  def N(self):
    return self.V.shape[0]

  @property
  def r(self):
    return self.U.shape[1]

  @property
  def sigma(self):
    return float(np.sqrt(self.sigma2))

  def with_noise(self, sigma2):
    """Return the same instance with noise variance SIGMA2."""
    return RewardModel(self.U, self.V, self.hott, sigma2,
                       self.unnormalized, self.setting)

  def rescaled(self):
    """Return the instance divided by max|R|, so that max|R| = 1.  The
    noise shrinks by the same factor, leaving the problem unchanged up
    to units."""
    scale = float(np.abs(self.R).max())
    if scale == 0.0 or (scale == 1.0 and not self.unnormalized):
      return self
    log("Rescaling instance by 1/%g" % scale)
    return RewardModel(self.U / scale, self.V, self.hott,
                       self.sigma2 / scale**2, unnormalized=False,
                       setting=self.setting)


#--------- Generators -----------

def generate_block_instance(M, N, r, seed, sigma2=0.25):
  """The experimental construction: one-hot users, trimmed-Gaussian
  items, and r hott items forming 2*alpha times the identity."""
  if r < 1 or M < r or N < 2 * r:
    raise ModelParameterError("need M >= r >= 1 and N >= 2r (M=%d N=%d r=%d)"
                              % (M, N, r))
  rng = as_generator(seed)
  U = np.zeros((M, r))
  U[np.arange(M), np.arange(M) % r] = 1.0

  body = np.maximum(rng.standard_normal((N - r, r)), 0.0)
  alpha = float(body.max())
  if alpha <= 0.0:
    alpha = 1.0
  # Rows whose L1 norm exceeds 2*alpha would leave the hull of the
  # hott rows for r > 2.
  l1 = body.sum(axis=1)
  over = l1 > 2 * alpha
  body[over] *= (2 * alpha / l1[over])[:, np.newaxis]
  if over.any():
    log("Block instance: rescaled %d item rows into the hull" % over.sum())

  V = np.vstack([body, 2 * alpha * np.eye(r)])
  hott = tuple(range(N - r, N))
  return RewardModel(U, V, hott, sigma2, unnormalized=(2 * alpha > 1),
                     setting="block")

def generate_simplex_instance(M, N, r, seed, planted_margin, sigma2=0.01,
                              max_retries=100):
  """Setting-2 instance: every row of U and V lies in the simplex.

  The r hott rows sit at (1 - margin) e_j plus a small simplex
  perturbation; every other item is lambda . V_A with lambda >= 0 and
  sum(lambda) <= 1 - margin, which keeps det^2(V_A) strictly maximal."""
  if not 0.0 < planted_margin < 1.0:
    raise ModelParameterError("planted_margin must lie in (0, 1)")
  if r < 1 or M < r or N < r:
    raise ModelParameterError("need M >= r >= 1 and N >= r")
  rng = as_generator(seed)
  m = planted_margin
  others_count = N - r

  for attempt in range(max_retries):
    U = rng.dirichlet(np.ones(r), size=M)
    hott = np.sort(rng.choice(N, size=r, replace=False))
    VA = (1 - m) * np.eye(r) + 0.5 * m * rng.dirichlet(np.ones(r), size=r)
    lam = rng.dirichlet(np.ones(r + 1), size=others_count)[:, :r] * (1 - m)
    V = np.empty((N, r))
    V[hott] = VA
    others = np.setdiff1d(np.arange(N), hott)
    V[others] = lam.dot(VA)

    model = RewardModel(U, V, hott, sigma2, setting="simplex")
    if abs(np.linalg.det(VA)) < 1e-9:
      log("Simplex instance attempt %d: singular hott block" % attempt)
      continue
    if comb(N, r, exact=True) > SUBSET_CAP or hott_is_det_maximal(model):
      return model
    log("Simplex instance attempt %d: hott block not strictly maximal"
        % attempt)

  raise ModelGenerationError("no strictly determinant-maximal instance "
                             "after %d retries" % max_retries)

def generate_hull_instance(M, N, r, seed, sigma2=0.0):
  """Signed instance: Gaussian users and hott rows, every other item a
  strict sub-convex combination of the hott rows.  Rewards take both
  signs, so best and worst items are both exercised."""
  if r < 1 or M < 1 or N <= r:
    raise ModelParameterError("need M >= 1, r >= 1 and N > r")
  rng = as_generator(seed)
  U = rng.standard_normal((M, r))
  VA = rng.standard_normal((r, r))
  lam = rng.dirichlet(np.ones(r + 1), size=N - r)[:, :r]
  hott = np.sort(rng.choice(N, size=r, replace=False))
  V = np.empty((N, r))
  V[hott] = VA
  V[np.setdiff1d(np.arange(N), hott)] = lam.dot(VA)
  return RewardModel(U, V, hott, sigma2, unnormalized=True, setting="hull")

def triad_instance(p=0.5, eps=0.2, sigma2=0.0, replicas=1):
  """The three-user counter-example, rows tiled REPLICAS times."""
  base = np.array([[1.0, 0.0], [0.0, 1.0], [p, p - eps]])
  U = np.tile(base, (replicas, 1))
  V = np.array([[1.0, 0.0], [0.0, 1.0], [1.0 / 3, 2.0 / 3]])
  return RewardModel(U, V, (0, 1), sigma2, setting="triad")


#--------- Feedback and regret -----------

def observe(model, u, item, rng):
  """Noisy reward samples of ITEM for user U.  Scalar indices give a
  float; index arrays broadcast and give an array of their shape."""
  value = model.R[u, item]
  if np.ndim(value) == 0:
    value = float(value)
    if model.sigma2 > 0:
      value += float(rng.normal(0.0, model.sigma))
    return value
  value = np.array(value, dtype=float)
  if model.sigma2 > 0:
    value += rng.normal(0.0, model.sigma, size=value.shape)
  return value

def best_worst_items(model):
  """Per-user best and worst items, ties toward the lower index."""
  return np.argmax(model.R, axis=1), np.argmin(model.R, axis=1)

def regret_increments(model, recommendations):
  """Return the (general, simple) regret of one round.

  RECOMMENDATIONS is either one item per user or an M x S slate.  For
  slates the general increment is the mean regret of the slate items."""
  recs = np.asarray(recommendations, dtype=int)
  if recs.ndim == 1:
    recs = recs[:, np.newaxis]
  if recs.ndim != 2 or recs.shape[0] != model.M or recs.shape[1] < 1:
    raise ModelContractError("recommendations must give every user a slate")
  if recs.shape[1] > 1:
    ordered = np.sort(recs, axis=1)
    if np.any(ordered[:, 1:] == ordered[:, :-1]):
      raise ModelContractError("duplicate item within a user's slate")
  R = model.R
  best = R.max(axis=1)
  got = R[np.arange(model.M)[:, np.newaxis], recs]
  general = float(np.mean(best[:, np.newaxis] - got))
  simple = float(np.mean(best - got.max(axis=1)))
  return general, simple

def regret_step(trace, model, recommendations, mode):
  """Add one round to TRACE.  Regret always uses expected rewards,
  never the noisy samples."""
  general, simple = regret_increments(model, recommendations)
  if mode == "general":
    if np.ndim(recommendations) == 2 and np.shape(recommendations)[1] != 1:
      raise ModelContractError("general regret takes one item per user")
    trace.record(general, general)
  elif mode == "simple":
    trace.record(general, simple)
  else:
    raise ModelContractError("unknown regret mode %r" % (mode,))
  return trace


#--------- Gaps -----------

class GapReport(object):
  """Problem-dependent gaps of an instance."""

  def __init__(self, delta, delta_hott, delta_det, kappa, cluster_sizes,
               opinionated_users, degenerate=False):
    self.delta = delta
    self.delta_hott = delta_hott
    # None when C(N, r) is beyond the enumeration cap
    self.delta_det = delta_det
    self.kappa = kappa
    self.cluster_sizes = tuple(cluster_sizes)
    self.opinionated_users = tuple(opinionated_users)
    # some user's two best items tie
    self.degenerate = degenerate

  def as_tuple(self):
    return (self.delta, self.delta_hott, self.delta_det, self.kappa,
            self.cluster_sizes, self.opinionated_users, self.degenerate)

def compute_gaps(model, det_cap=SUBSET_CAP):
  R = model.R
  M, N, r = model.M, model.N, model.r
  if N < 2:
    raise ModelParameterError("gaps need at least two items")
  rows = np.arange(M)

  # Stable sort keeps the lower index first among equal rewards.
  order = np.argsort(-R, axis=1, kind="stable")
  top_gaps = R[rows, order[:, 0]] - R[rows, order[:, 1]]
  delta = float(top_gaps.min())
  degenerate = delta <= 0.0
  if degenerate:
    warn("Instance has a user whose two best items tie")

  # Each user belongs to the cluster of its best hott item.  With r = 1
  # the origin, which is always part of the hull, is the competitor.
  hott_rewards = R[:, list(model.hott)]
  labels = np.argmax(hott_rewards, axis=1)
  if r == 1:
    user_gaps = hott_rewards[:, 0]
  else:
    ranked = np.sort(hott_rewards, axis=1)
    user_gaps = ranked[:, -1] - ranked[:, -2]

  cluster_sizes = np.bincount(labels, minlength=r)
  opinionated = []
  cluster_gaps = []
  for i in range(r):
    members = np.flatnonzero(labels == i)
    if len(members) == 0:
      opinionated.append(None)
      continue
    top = members[np.argmax(user_gaps[members])]
    opinionated.append(int(top))
    cluster_gaps.append(user_gaps[top])
  delta_hott = float(min(cluster_gaps))
  kappa = float(cluster_sizes.min() * r / M)

  delta_det = None
  if comb(N, r, exact=True) <= det_cap:
    subsets, det2 = det2_table(model.V, r)
    hott_row = _subset_position(subsets, model.hott)
    others = np.delete(det2, hott_row)
    if len(others):
      delta_det = float(det2[hott_row] - others.max())
    else:
      delta_det = float(det2[hott_row])

  return GapReport(delta, delta_hott, delta_det, kappa,
                   [int(c) for c in cluster_sizes], opinionated, degenerate)


#--------- Brute-force oracles -----------

def hull_witness(V, hott, i):
  """Return lambda >= 0 with sum(lambda) <= 1 and V[i] = lambda . V_A,
  or None when no such lambda exists."""
  V = np.asarray(V, dtype=float)
  target = V[i]
  r = V.shape[1]
  if not np.any(target):
    return np.zeros(r)
  VA = V[list(hott)]
  slack = HULL_TOLERANCE * max(1.0, np.abs(target).max())

  if abs(np.linalg.det(VA)) > 1e-12:
    # The feasible set is a single point; solve for it exactly.
    lam = np.linalg.solve(VA.T, target)
    if lam.min() >= -HULL_TOLERANCE and lam.sum() <= 1 + HULL_TOLERANCE:
      return np.maximum(lam, 0.0)
    return None

  res = linprog(np.zeros(r), A_ub=np.ones((1, r)), b_ub=[1.0],
                A_eq=VA.T, b_eq=target, bounds=[(0, None)] * r,
                method="highs")
  if res.status != 0:
    return None
  lam = res.x
  if np.abs(VA.T.dot(lam) - target).max() > slack:
    return None
  return lam

def verify_hott(model):
  """Check that every item lies in the hull of the hott items and the
  origin.  Returns (True, {item: lambda}) or (False, first_bad_item)."""
  witnesses = {}
  for i in range(model.N):
    if i in model.hott:
      continue
    lam = hull_witness(model.V, model.hott, i)
    if lam is None:
      log("Item %d lies outside the hott hull" % i)
      return False, i
    witnesses[i] = lam
  return True, witnesses

def subset_index(n, r):
  """All ascending r-subsets of range(n), one per row."""
  return np.array(list(itertools.combinations(range(n), r)),
                  dtype=int).reshape(-1, r)

def random_subsets(n, r, count, rng):
  """COUNT uniform r-subsets of range(n), drawn with replacement among
  subsets.  Each row is ascending."""
  out = np.sort(rng.integers(0, n, size=(count, r)), axis=1)
  while True:
    bad = np.any(out[:, 1:] == out[:, :-1], axis=1) if r > 1 else \
          np.zeros(count, dtype=bool)
    if not bad.any():
      return out
    out[bad] = np.sort(rng.integers(0, n, size=(bad.sum(), r)), axis=1)

def _subset_position(subsets, subset):
  hits = np.flatnonzero(np.all(subsets == np.asarray(subset), axis=1))
  return int(hits[0])

def det2_table(V, r):
  """Squared determinant of every r-subset of the rows of V."""
  subsets = subset_index(V.shape[0], r)
  dets = np.linalg.det(np.asarray(V)[subsets])
  return subsets, dets**2

def hott_is_det_maximal(model):
  subsets, det2 = det2_table(model.V, model.r)
  hott_row = _subset_position(subsets, model.hott)
  others = np.delete(det2, hott_row)
  return bool(len(others) == 0 or det2[hott_row] > others.max())

def average_subset_det2(X, cap=SUBSET_CAP, rng=None, samples=SUBSET_CAP):
  """Average of det^2 over all r-row subsets of the n x r matrix X.

  Exact when C(n, r) <= CAP, otherwise uniform Monte Carlo over SAMPLES
  subsets.  Returns (mean, standard error); the error is 0 when exact."""
  X = np.asarray(X, dtype=float)
  n, r = X.shape
  if n < r:
    raise ModelParameterError("need at least r rows")
  if comb(n, r, exact=True) <= cap:
    det2 = np.linalg.det(X[subset_index(n, r)])**2
    return float(det2.mean()), 0.0
  rng = as_generator(rng)
  det2 = np.linalg.det(X[random_subsets(n, r, samples, rng)])**2
  return float(det2.mean()), float(det2.std(ddof=1) / np.sqrt(samples))

def c_avg(model, cap=SUBSET_CAP, rng=None):
  """Average squared determinant of r users' embeddings."""
  return average_subset_det2(model.U, cap, rng)[0]

def c_max(model):
  """Squared determinant of the hott item embeddings."""
  return float(np.linalg.det(model.V[list(model.hott)])**2)
