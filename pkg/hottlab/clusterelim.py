#
# PhasedClusterElim: find r mutually 'opinionated' users through an
# independent set of the user intersection graph, then eliminate items
# jointly within the groups those users anchor.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import networkx as nx
import numpy as np

from .lablogging import log, warn, log_phase
from .matcomp import OracleConfig, plan_estimate, estimate_simple

class ClusterElimError(Exception):
    "General exception for PhasedClusterElim."


class PceConfig(object):
    """Knobs of PhasedClusterElim.  RANK is the number of seed users to
    look for (defaults to the instance rank); K0 the first accuracy;
    THRESHOLD the multiple of k kept by pruning; JUMP the accuracy
    division applied when Stage 1 ends; EXPAND the multiple of the
    previous accuracy used when expanding item sets."""

    DEFAULTS = {"rank": None, "k0": 1.0, "threshold": 3.0, "jump": 10.0,
                "expand": 12.0}

    def __init__(self, **overrides):
        for key, value in self.DEFAULTS.items():
            setattr(self, key, value)
        for key, value in overrides.items():
            if key not in self.DEFAULTS:
                raise ClusterElimError("unknown parameter '%s'" % key)
            setattr(self, key, value)
        if self.k0 <= 0 or self.threshold < 0 or self.jump <= 0:
            raise ClusterElimError("accuracies and thresholds must be positive")


# Candidate sets are an M x N boolean matrix: T[u, x] is true when item
# x is still a candidate for user u.

def estimated_best(T, Rt):
    """Per-user argmax of the estimate within the candidate set, ties
    toward the lower index."""
    return np.argmax(np.where(T, Rt, -np.inf), axis=1)

def prune_items(T, Rt, c):
    """Keep the items within C of each user's estimated best candidate."""
    T = np.asarray(T, dtype=bool)
    Rt = np.asarray(Rt, dtype=float)
    best = np.where(T, Rt, -np.inf).max(axis=1)
    return T & (best[:, np.newaxis] - Rt <= c)

def build_user_graph(T):
    """Users are adjacent iff their candidate sets intersect."""
    T = np.asarray(T, dtype=bool)
    graph = nx.Graph()
    graph.add_nodes_from(range(T.shape[0]))
    overlap = T.astype(np.int64).dot(T.T.astype(np.int64)) > 0
    rows, cols = np.nonzero(np.triu(overlap, k=1))
    graph.add_edges_from(zip(rows.tolist(), cols.tolist()))
    return graph

def check_independent_set(graph, d):
    """Return the lexicographically first D pairwise non-adjacent nodes,
    or None.  Branches that already hold an adjacent pair are cut."""
    if d < 1:
        raise ClusterElimError("independent set size must be positive")
    nodes = sorted(graph.nodes())

    def extend(chosen, start):
        if len(chosen) == d:
            return tuple(chosen)
        for pos in range(start, len(nodes) - (d - len(chosen)) + 1):
            v = nodes[pos]
            if any(graph.has_edge(v, w) for w in chosen):
                continue
            found = extend(chosen + [v], pos + 1)
            if found is not None:
                return found
        return None

    return extend([], 0)

def form_groups(graph, seeds, T):
    """For each seed, intersect the candidate sets of the seed and its
    neighbours, and collect every user whose set meets the result.

    Returns a list of (group item mask, group users) and the list of
    seeds whose intersection came out empty and fell back to the seed's
    own set."""
    T = np.asarray(T, dtype=bool)
    groups = []
    fallbacks = []
    for seed in seeds:
        members = [seed] + sorted(graph.neighbors(seed))
        common = np.logical_and.reduce(T[members], axis=0)
        if not common.any():
            warn("Empty group intersection for seed %d" % seed)
            common = T[seed].copy()
            fallbacks.append(seed)
        users = np.flatnonzero((T & common).any(axis=1))
        groups.append((common, users))
    return groups, fallbacks

def expand_item_sets(graph, seeds, k_prev, Rt, group_sets, T, factor=12.0):
    """Widen the candidate set of every user adjacent to several seeds to
    the items within FACTOR * K_PREV of its estimated best that lie in
    the group set of some adjacent seed.

    Returns the new candidate matrix and the users whose expansion came
    out empty and kept their old set."""
    T = np.asarray(T, dtype=bool)
    Rt = np.asarray(Rt, dtype=float)
    expanded = T.copy()
    fallbacks = []
    seed_index = dict((seed, i) for i, seed in enumerate(seeds))
    best = estimated_best(T, Rt)
    for u in range(T.shape[0]):
        adjacent = [seed_index[v] for v in graph.neighbors(u) if v in seed_index]
        if len(adjacent) < 2:
            continue
        allowed = np.logical_or.reduce([group_sets[i] for i in adjacent], axis=0)
        close = Rt[u, best[u]] - Rt[u] <= factor * k_prev
        new = allowed & close
        if not new.any():
            warn("Expansion emptied the candidate set of user %d" % u)
            fallbacks.append(u)
            continue
        expanded[u] = new
    return expanded, fallbacks


class PhasedClusterElim(object):
    """One run of PhasedClusterElim on an Environment."""

    def __init__(self, env, oracle_config=None, config=None, rng=None):
        self.env = env
        self.config = config or PceConfig()
        self.d = self.config.rank or env.model.r
        oracle_config = oracle_config or OracleConfig()
        self.oracle = oracle_config.copy(rank=oracle_config.rank or env.model.r)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.trace = env.trace

        self.T = np.ones((env.M, env.N), dtype=bool)
        self.Rt = np.zeros((env.M, env.N))
        self.graph = nx.complete_graph(env.M)
        self.phase = 0
        self.stage = 1
        self.k = self.config.k0
        self.seeds = None
        # number of Stage-1 phases, once Stage 1 is over
        self.stage1_phases = None
        self.records = []

    def _off_policy(self):
        # Users outside the estimated block get a random candidate.
        T = self.T.copy()
        rng = self.rng
        def draw():
            return np.argmax(np.where(T, rng.random(T.shape), -1.0), axis=1)
        return draw

    def _estimate(self, users, items, k):
        """Run the oracle on USERS x ITEMS, or return None when the
        rounds it needs exceed what is left of the horizon."""
        users = np.asarray(users, dtype=int)
        items = np.asarray(items, dtype=int)
        plan = plan_estimate(users, items, k, self.oracle,
                             self.env.model.sigma, self.rng)
        if plan.mask.m > self.env.remaining:
            log("PCE: oracle needs %d rounds, %d left"
                % (plan.mask.m, self.env.remaining))
            return None
        result = estimate_simple(self.env, users, items, k, self.oracle,
                                 self._off_policy(), self.rng, plan=plan)
        self.Rt[np.ix_(result.user_set, result.item_set)] = result.estimate
        return result

    def _exploit(self):
        items = estimated_best(self.T, self.Rt)
        log("PCE: exploiting for the last %d rounds" % self.env.remaining)
        while not self.env.finished:
            self.env.play(items)

    def _record(self, results, groups=None, flags=()):
        sizes = self.T.sum(axis=1)
        best = np.argmax(self.env.model.R, axis=1)
        errors = [r.max_error(self.env.model.R) for r in results]
        record = {
            "phase": self.phase,
            "stage": self.stage,
            "k": self.k,
            "n_min": int(sizes.min()),
            "n_mean": float(sizes.mean()),
            "seeds": list(self.seeds) if self.seeds else None,
            "groups": [len(users) for _, users in groups] if groups else None,
            "rounds": sum(r.rounds_used for r in results),
            "oracle_err": max(errors) if errors else None,
            "hott_alive": bool(self.T[np.arange(self.env.M), best].all()),
            "flags": list(flags) or None,
        }
        self.records.append(record)
        log_phase("pce", record)

    def run(self):
        env = self.env
        all_users = np.arange(env.M)
        all_items = np.arange(env.N)
        threshold = self.config.threshold

        # Stage 1: shrink candidate sets until r users are pairwise
        # disconnected.
        seeds = check_independent_set(self.graph, self.d)
        last_k = None
        while seeds is None:
            self.trace.mark_phase(self.phase)
            result = self._estimate(all_users, all_items, self.k)
            if result is None:
                warn("PCE: horizon ended inside Stage 1")
                self.trace.flag("stage1_incomplete")
                self._exploit()
                return self.trace
            self.T = prune_items(self.T, self.Rt, threshold * self.k)
            self.graph = build_user_graph(self.T)
            self._record([result])
            last_k = self.k
            self.phase += 1
            self.k = self.k / 2
            seeds = check_independent_set(self.graph, self.d)

        self.seeds = seeds
        self.stage1_phases = self.phase
        log("PCE: Stage 1 done after %d phases, seeds %s"
            % (self.phase, list(seeds)))

        self.stage = 2
        self.k = (last_k if last_k is not None else self.config.k0) \
                 / self.config.jump
        self.trace.mark_phase(self.phase)
        result = self._estimate(all_users, all_items, self.k)
        if result is None:
            self._exploit()
            return self.trace
        self._record([result])

        # Stage 2: joint elimination within the seed groups.
        while not env.finished:
            self.T = prune_items(self.T, self.Rt, threshold * self.k)
            if self.T.sum(axis=1).max() == 1:
                log("PCE: one candidate left per user after phase %d"
                    % self.phase)
                self._exploit()
                return self.trace
            self.graph = build_user_graph(self.T)
            self.phase += 1
            k_prev = self.k
            self.k = self.k / 2
            self.trace.mark_phase(self.phase)

            flags = []
            groups, _ = form_groups(self.graph, seeds, self.T)
            self.T, emptied = expand_item_sets(
                self.graph, seeds, k_prev, self.Rt,
                [common for common, _ in groups], self.T, self.config.expand)
            if emptied:
                flags.append("expansion_fallback")
                self.trace.flag("expansion_fallback")
            groups, fallbacks = form_groups(self.graph, seeds, self.T)
            if fallbacks:
                flags.append("group_fallback")
                self.trace.flag("group_fallback")

            results = []
            for common, users in groups:
                result = self._estimate(users, np.flatnonzero(common), self.k)
                if result is None:
                    self._record(results, groups, flags + ["horizon"])
                    self._exploit()
                    return self.trace
                results.append(result)
            self._record(results, groups, flags)

        return self.trace


def run_pce(env, oracle_config=None, config=None, rng=None):
    return PhasedClusterElim(env, oracle_config, config, rng).run()
