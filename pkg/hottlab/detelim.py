#
# DeterminantElim: phased elimination of r-columns for slate
# recommendation.  Each phase samples items per user, shows slates
# until every sampled item has two halves of observations, estimates
# the average squared determinant of every surviving r-column from the
# two independent halves, and drops the columns that fall too far
# behind.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import math

import numpy as np
from scipy.special import comb

from .lablogging import log, warn, log_phase
from .model import (subset_index, random_subsets, average_subset_det2,
                    c_avg, c_max, SUBSET_CAP)

class DetElimError(Exception):
    "General exception for DeterminantElim."

class DetElimParameterError(DetElimError):
    "Parameters out of range, or a problem too large to enumerate."

class CoverageError(DetElimError):
    "Fewer than r users cover an r-column."

class HadamardViolation(DetElimError):
    "A determinant exceeded Hadamard's bound."

class SlateScheduleError(DetElimError):
    "A sampled item lies in no surviving r-column."

# Largest number of r-columns the algorithm will enumerate.
FAMILY_CAP = 10**6


class DetElimConfig(object):
    """Knobs of DeterminantElim.

    DELTA is the failure probability fed to the coverage bound; D_MULT
    and N_MULT scale the first sample size and the per-column user
    target; REPS forces the per-half repeat count; SUBSET_CAP bounds
    the r-subsets averaged per estimate."""

    DEFAULTS = {"delta": 0.1, "d_mult": 0.1, "n_mult": 0.01, "reps": None,
                "subset_cap": SUBSET_CAP, "repeat_surplus": True}

    def __init__(self, **overrides):
        for key, value in self.DEFAULTS.items():
            setattr(self, key, value)
        for key, value in overrides.items():
            if key not in self.DEFAULTS:
                raise DetElimParameterError("unknown parameter '%s'" % key)
            setattr(self, key, value)
        if not 0.0 < self.delta < 1.0:
            raise DetElimParameterError("delta must lie in (0, 1)")
        if self.d_mult <= 0 or self.n_mult <= 0:
            raise DetElimParameterError("multipliers must be positive")


class ColumnFamily(object):
    """The surviving r-columns, one ascending tuple per row of COLUMNS."""

    def __init__(self, columns, phase=1):
        self.columns = np.asarray(columns, dtype=int)
        self.phase = phase

    def __len__(self):
        return len(self.columns)

    def items(self):
        """The union Y of all surviving columns."""
        return np.unique(self.columns)

    def index(self, column):
        hits = np.flatnonzero(np.all(self.columns == np.asarray(column), axis=1))
        return int(hits[0]) if len(hits) else None

    def __contains__(self, column):
        return self.index(column) is not None

    def subset(self, keep, phase=None):
        return ColumnFamily(self.columns[keep],
                            self.phase + 1 if phase is None else phase)


def subset_constant(r):
    return 2.0**(r + 1) * r**(1 + r / 2.0)

def _coverage_rhs(n_target, delta, N, M, r):
    total = 12 * math.log(1.0 / delta) + r * math.log(N) + 2 * n_target
    return (total / float(M))**(1.0 / r)

def required_d(n_target, delta, N, M, r, with_flag=False):
    """Smallest d < N with d / (N - d) at least the coverage bound.
    Falls back to N - 1 when no such d exists."""
    if n_target < 1 or not 0.0 < delta < 1.0:
        raise DetElimParameterError("need n_target >= 1 and delta in (0, 1)")
    rhs = _coverage_rhs(n_target, delta, N, M, r)
    for d in range(1, N):
        if d / float(N - d) >= rhs:
            return (d, False) if with_flag else d
    log("required_d: bound infeasible for N=%d, capping at %d" % (N, N - 1))
    d = max(N - 1, 1)
    return (d, True) if with_flag else d


class PhaseSchedule(object):
    """Sizes of one phase: D sampled items per user, N_TARGET users per
    column, EPS confidence width, REPS observations per half."""

    def __init__(self, phase, d, d_raw, n_target, eps, reps):
        self.phase = phase
        self.d = d
        # d before clamping to the surviving items; grows 4x per phase
        self.d_raw = d_raw
        self.n_target = n_target
        self.eps = eps
        self.reps = reps

    @classmethod
    def for_phase(cls, phase, config, M, N, pool, r, horizon, previous=None,
                  sigma2=0.0):
        """Schedule for PHASE given POOL surviving items out of N."""
        C_r = subset_constant(r)
        n_target = int(math.ceil(config.n_mult * C_r * 4**phase *
                                 (r * math.log(N) + math.log(horizon))))
        n_target = max(n_target, 1)
        floor, capped = required_d(n_target, config.delta, pool, M, r,
                                   with_flag=True) if pool > 1 else (1, False)
        if capped:
            floor = pool
        if previous is None:
            d_raw = int(math.ceil(config.d_mult * N * M**(-1.0 / r) * C_r))
        else:
            d_raw = 4 * previous.d_raw
        d_raw = max(d_raw, floor, 1)
        d = min(d_raw, pool)

        if config.reps is not None:
            reps = int(config.reps)
        else:
            reps = max(1, int(math.ceil(sigma2 *
                                        math.log(M * N * horizon))))
        if config.repeat_surplus and d_raw > pool:
            # Phase length keeps growing with d once every item is sampled.
            reps *= int(math.ceil(d_raw / float(pool)))
        return cls(phase, d, d_raw, n_target, 2.0**(-phase), reps)


class SplitEstimates(object):
    """Two independent half-sample mean matrices over the sampled
    entries, with the per-column user coverage."""

    def __init__(self, R1, R2, sampled, family):
        self.R1 = R1
        self.R2 = R2
        self.sampled = sampled
        self.coverage = coverage(family, sampled)

    def n(self, j):
        return len(self.coverage[j])


def sample_items(family, d, rng, M, N):
    """Each of M users draws D distinct items uniformly from the union of
    the family.  Returns the M x N sampled mask and whether D had to be
    clamped."""
    pool = family.items()
    clamped = d > len(pool)
    if clamped:
        warn("Sample size %d exceeds the %d surviving items" % (d, len(pool)))
        d = len(pool)
    sampled = np.zeros((M, N), dtype=bool)
    picks = np.argsort(rng.random((M, len(pool))), axis=1)[:, :d]
    sampled[np.arange(M)[:, np.newaxis], pool[picks]] = True
    return sampled, clamped

def coverage(family, sampled):
    """H_J for every column: the users whose sample holds all of J."""
    return [np.flatnonzero(sampled[:, column].all(axis=1))
            for column in family.columns]

def _user_slates(columns, by_item, items, reps):
    need = dict((int(z), 2 * reps) for z in items)
    chosen = []
    while True:
        deficient = [z for z in need if need[z] > 0]
        if not deficient:
            return chosen
        target = max(deficient, key=lambda z: (need[z], -z))
        candidates = by_item.get(target)
        if not candidates:
            raise SlateScheduleError("item %d is in no surviving column"
                                     % target)
        best = max(candidates,
                   key=lambda j: (sum(1 for x in columns[j] if need.get(x, 0) > 0),
                                  -j))
        chosen.append(best)
        for x in columns[best]:
            if need.get(x, 0) > 0:
                need[x] -= 1

def plan_slates(family, sampled, reps):
    """Greedy cover: per user, repeatedly show a column holding its most
    under-observed sampled item, preferring columns that serve the most
    under-observed items.  Returns one list of column indices per user."""
    columns = [tuple(int(x) for x in c) for c in family.columns]
    by_item = {}
    for j, column in enumerate(columns):
        for x in column:
            by_item.setdefault(x, []).append(j)
    cache = {}
    schedule = []
    for row in sampled:
        key = tuple(np.flatnonzero(row))
        if key not in cache:
            cache[key] = _user_slates(columns, by_item, key, reps)
        schedule.append(cache[key])
    return schedule

def run_phase_recommendations(env, family, sampled, reps, filler=0,
                              schedule=None, limit=None):
    """Show slates until every sampled entry has 2 * REPS observations;
    the first REPS feed R1, the rest R2.  Users done early see the
    FILLER column.  LIMIT cuts the phase short after that many rounds.
    Returns (SplitEstimates, rounds_used)."""
    M = env.M
    if schedule is None:
        schedule = plan_slates(family, sampled, reps)
    rounds = max(len(s) for s in schedule)
    if limit is not None:
        rounds = min(rounds, limit)
    plan = np.full((M, rounds), filler, dtype=int)
    real = np.zeros((M, rounds), dtype=bool)
    for u, slates in enumerate(schedule):
        shown = slates[:rounds]
        plan[u, :len(shown)] = shown
        real[u, :len(shown)] = True

    shape = (M, sampled.shape[1])
    counts = np.zeros(shape, dtype=int)
    sum1 = np.zeros(shape)
    sum2 = np.zeros(shape)
    users = np.arange(M)
    for t in range(rounds):
        slates = family.columns[plan[:, t]]
        values = env.play_slates(slates)
        for j in range(slates.shape[1]):
            items = slates[:, j]
            take = real[:, t] & sampled[users, items] & \
                   (counts[users, items] < 2 * reps)
            u, x, v = users[take], items[take], values[take, j]
            first = counts[u, x] < reps
            sum1[u[first], x[first]] += v[first]
            sum2[u[~first], x[~first]] += v[~first]
            counts[u, x] += 1

    R1 = np.where(sampled, sum1 / reps, 0.0)
    R2 = np.where(sampled, sum2 / reps, 0.0)
    return SplitEstimates(R1, R2, sampled, family), rounds


#--------- Determinant estimates -----------

def _hadamard_check(dets, X):
    a = float(np.abs(X).max()) if X.size else 0.0
    r = X.shape[-1]
    bound = a**r * r**(r / 2.0)
    if np.abs(dets).max() > bound * (1 + 1e-9) + 1e-300:
        raise HadamardViolation("determinant %g above bound %g"
                                % (np.abs(dets).max(), bound))

def mu_exact(R, J, user_subset_cap=SUBSET_CAP, rng=None):
    """Average det^2 of R restricted to columns J over all r-subsets of
    users; Monte Carlo beyond the cap."""
    R = np.asarray(R, dtype=float)
    mean, stderr = average_subset_det2(R[:, list(J)], user_subset_cap, rng)
    if stderr:
        log("mu_exact(%s): Monte Carlo standard error %g" % (list(J), stderr))
    return mean

def mu_hat(split, J, subset_cap, rng, users=None):
    """Split-sample estimate of mu_J over the users covering J: the
    mean over r-subsets of det(R1 block) * det(R2 block)."""
    J = list(J)
    r = len(J)
    if users is None:
        users = np.flatnonzero(split.sampled[:, J].all(axis=1))
    n = len(users)
    if n < r:
        raise CoverageError("only %d users cover %s" % (n, J))
    X1 = split.R1[np.ix_(users, J)]
    X2 = split.R2[np.ix_(users, J)]
    if comb(n, r, exact=True) <= subset_cap:
        subsets = subset_index(n, r)
    else:
        subsets = random_subsets(n, r, subset_cap, rng)
    det1 = np.linalg.det(X1[subsets])
    det2 = np.linalg.det(X2[subsets])
    _hadamard_check(det1, X1)
    _hadamard_check(det2, X2)
    return float(np.mean(det1 * det2))

def eliminate(family, mu_hats, eps):
    """Keep the columns within 2 * EPS of the best estimate.  Columns
    without an estimate (NaN) are kept."""
    mu_hats = np.asarray(mu_hats, dtype=float)
    known = ~np.isnan(mu_hats)
    if not known.any():
        return family.subset(np.arange(len(family)))
    top = mu_hats[known].max()
    keep = ~known | (mu_hats >= top - 2 * eps)
    return family.subset(np.flatnonzero(keep))

def instant_bound(V, A, J):
    """Upper bound on the simplified regret of showing column J."""
    V = np.asarray(V, dtype=float)
    r = V.shape[1]
    hott2 = np.linalg.det(V[list(A)])**2
    if hott2 <= 1e-300:
        raise DetElimParameterError("hott block is singular")
    other2 = np.linalg.det(V[list(J)])**2
    return 6 * r**2.5 * (hott2 - other2) / hott2


class DeterminantElim(object):
    """One run of DeterminantElim on an Environment."""

    def __init__(self, env, config=None, rng=None):
        self.env = env
        self.config = config or DetElimConfig()
        self.rng = rng if rng is not None else np.random.default_rng()
        r = env.model.r
        if comb(env.N, r, exact=True) > FAMILY_CAP:
            raise DetElimParameterError(
                "C(%d, %d) r-columns is beyond the enumeration cap"
                % (env.N, r))
        self.family = ColumnFamily(subset_index(env.N, r))
        self.best = 0
        self.records = []
        self.trace = env.trace

    def _record(self, schedule, family, n_js, rounds, bound, flags):
        hott = tuple(self.env.model.hott)
        known = [n for n in n_js if n is not None]
        record = {
            "phase": schedule.phase,
            "d": schedule.d,
            "n": schedule.n_target,
            "eps": schedule.eps,
            "family": len(family),
            "n_min": min(known) if known else None,
            "n_mean": float(np.mean(known)) if known else None,
            "rounds": rounds,
            "hott_alive": hott in family,
            "flags": list(flags) or None,
            # worst instant bound over the columns shown this phase
            "bound": bound,
            "start": self.env.t - rounds,
        }
        self.records.append(record)
        log_phase("detelim", record)

    def _exploit(self):
        column = self.family.columns[self.best]
        slates = np.tile(column, (self.env.M, 1))
        log("DetElim: showing %s for the last %d rounds"
            % (list(column), self.env.remaining))
        while not self.env.finished:
            self.env.play_slates(slates)

    def run(self):
        env = self.env
        model = env.model
        log("DetElim: c_avg=%g c_max=%g" % (c_avg(model, self.config.subset_cap,
                                                  self.rng), c_max(model)))
        schedule = None
        phase = 1
        while not env.finished and len(self.family) > 1:
            pool = len(self.family.items())
            schedule = PhaseSchedule.for_phase(phase, self.config, env.M, env.N,
                                               pool, model.r, env.horizon,
                                               schedule, model.sigma2)
            flags = []
            sampled, _ = sample_items(self.family, schedule.d, self.rng,
                                      env.M, env.N)
            slates = plan_slates(self.family, sampled, schedule.reps)
            if max(len(s) for s in slates) > env.remaining:
                log("DetElim: phase %d does not fit the horizon" % phase)
                if not self.records:
                    # no estimate to exploit yet: explore what is left
                    self.trace.mark_phase(phase)
                    self.trace.flag("partial_phase")
                    run_phase_recommendations(env, self.family, sampled,
                                              schedule.reps, self.best, slates,
                                              limit=env.remaining)
                break

            self.trace.mark_phase(phase)
            split, rounds = run_phase_recommendations(
                env, self.family, sampled, schedule.reps, self.best, slates)

            estimates = np.full(len(self.family), np.nan)
            n_js = []
            for j, column in enumerate(self.family.columns):
                users = split.coverage[j]
                try:
                    estimates[j] = mu_hat(split, column, self.config.subset_cap,
                                          self.rng, users)
                    n_js.append(len(users))
                except CoverageError:
                    n_js.append(None)
                    if "coverage" not in flags:
                        warn("DetElim: phase %d left columns uncovered" % phase)
                        flags.append("coverage")
                        self.trace.flag("coverage")

            bound = max(instant_bound(model.V, model.hott, c)
                        for c in self.family.columns)
            survivors = eliminate(self.family, estimates, schedule.eps)
            if not np.isnan(estimates).all():
                best_column = self.family.columns[np.nanargmax(estimates)]
                self.best = survivors.index(best_column)
            else:
                self.best = survivors.index(self.family.columns[self.best])
            self._record(schedule, self.family, n_js, rounds, bound, flags)
            self.family = survivors
            phase += 1

        if len(self.family) == 1:
            self.best = 0
        self._exploit()
        return self.trace


def run_detelim(env, config=None, rng=None):
    return DeterminantElim(env, config, rng).run()
