#
# A class which accumulates the regret of one policy over one run.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import numpy as np


class RegretTrace(object):
  """Per-round regret increments of one (policy, seed) pair.

  Both regret notions are recorded for every round: the general
  regret of single-item recommendations and the simplified regret of
  a slate, each already normalized by the number of users.  The
  cumulative curves are derived on demand."""

  def __init__(self, policy_id, seed):
    self.policy_id = policy_id
    self.seed = seed
    self._general = []
    self._simple = []
    self._phase = []
    self._current_phase = 0
    # round index (0-based) at which each phase began
    self.phase_starts = []
    # degenerate outcomes hit during the run, e.g. 'stage1_incomplete'
    self.flags = set()
    # cumulative columns exactly as read back from a file
    self._parsed = None

  def __len__(self):
    return len(self._general)

  def record(self, general, simple):
    """Append one round's increments."""
    self._general.append(float(general))
    self._simple.append(float(simple))
    self._phase.append(self._current_phase)

  def mark_phase(self, phase):
    """Rounds recorded from now on belong to PHASE."""
    self._current_phase = int(phase)
    self.phase_starts.append(len(self._general))

  def flag(self, name):
    self.flags.add(name)

  def increments(self, mode="general"):
    if mode == "general":
      return np.array(self._general)
    elif mode == "simple":
      return np.array(self._simple)
    raise ValueError("unknown regret mode %r" % (mode,))

  def cumulative_general(self):
    if self._parsed is not None:
      return self._parsed[0].copy()
    return np.cumsum(self._general)

  def cumulative_simple(self):
    if self._parsed is not None:
      return self._parsed[1].copy()
    return np.cumsum(self._simple)

  def phases(self):
    return np.array(self._phase, dtype=int)

  @classmethod
  def from_cumulative(cls, policy_id, seed, general, simple, phases):
    """Rebuild a trace from cumulative columns, e.g. a parsed CSV."""
    trace = cls(policy_id, seed)
    general = np.asarray(general, dtype=float)
    simple = np.asarray(simple, dtype=float)
    trace._general = list(np.diff(general, prepend=0.0))
    trace._simple = list(np.diff(simple, prepend=0.0))
    trace._parsed = (general.copy(), simple.copy())
    trace._phase = [int(p) for p in phases]
    previous = None
    for i, p in enumerate(trace._phase):
      if p != previous:
        trace.phase_starts.append(i)
        previous = p
    return trace
