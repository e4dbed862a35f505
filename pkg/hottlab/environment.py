#
# The simulation clock.  An Environment owns one instance, the noise
# stream of one run and the regret trace that run accrues.  Policies
# only ever see noisy samples; regret is charged against the ground
# truth on every round they spend.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

from collections import namedtuple

import numpy as np

from .model import observe, regret_step
from .trace import RegretTrace

class SimulationError(Exception):
  "General exception for the simulation clock"

class HorizonExhausted(SimulationError):
  "A round was requested after the horizon ended."

class SlateError(SimulationError):
  "Recommendations do not have one well-formed slate per user."

Observation = namedtuple("Observation", "t u item value")


class Environment(object):

  def __init__(self, model, horizon, rng, trace=None, keep_history=False):
    if horizon < 1:
      raise SimulationError("horizon must be at least one round")
    self.model = model
    self.horizon = int(horizon)
    self._rng = rng
    self.trace = trace if trace is not None else RegretTrace(None, None)
    self.t = 0
    # (t, recommendations, values) per round, when requested
    self.history = [] if keep_history else None

  @property
  def M(self):
    return self.model.M

  @property
  def N(self):
    return self.model.N

  @property
  def remaining(self):
    return self.horizon - self.t

  @property
  def finished(self):
    return self.t >= self.horizon

  def _advance(self, recs, values):
    if self.history is not None:
      self.history.append((self.t, recs.copy(), values.copy()))
    self.t += 1

  def play(self, items):
    """One round in which every user is shown a single item.  Returns
    the vector of noisy rewards, one per user."""
    if self.finished:
      raise HorizonExhausted("round %d past horizon %d"
                             % (self.t, self.horizon))
    items = np.asarray(items, dtype=int)
    if items.shape != (self.M,):
      raise SlateError("expected one item per user, got shape %s"
                       % (items.shape,))
    values = observe(self.model, np.arange(self.M), items, self._rng)
    regret_step(self.trace, self.model, items, "general")
    self._advance(items, values)
    return values

  def play_slates(self, slates):
    """One round in which every user is shown a slate of distinct items.
    Returns an M x S array of noisy rewards."""
    if self.finished:
      raise HorizonExhausted("round %d past horizon %d"
                             % (self.t, self.horizon))
    slates = np.asarray(slates, dtype=int)
    if slates.ndim != 2 or slates.shape[0] != self.M:
      raise SlateError("expected an M x S slate array, got shape %s"
                       % (slates.shape,))
    rows = np.arange(self.M)[:, np.newaxis]
    values = observe(self.model, rows, slates, self._rng)
    regret_step(self.trace, self.model, slates, "simple")
    self._advance(slates, values)
    return values

  def observations(self):
    """Yield every recorded single-item sample as an Observation."""
    if self.history is None:
      return
    for t, recs, values in self.history:
      if recs.ndim != 1:
        continue
      for u in range(len(recs)):
        yield Observation(t, u, int(recs[u]), float(values[u]))
