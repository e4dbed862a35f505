#
# Experiment orchestration.  A run builds one instance per seed, plays
# every configured policy against it in its own Environment, and
# aggregates the regret traces into mean and standard-error curves.
# Results are stored as CSV.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import time
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np
import pandas as pd
from tqdm import tqdm

from .baselines import run_etc, run_am, AmConfig, PesConfig, PhasedElimSimplified
from .clusterelim import PhasedClusterElim, PceConfig
from .detelim import DeterminantElim, DetElimConfig
from .environment import Environment
from .instancefile import read_instance
from .lablogging import log, warn
from .matcomp import OracleConfig
from .model import (generate_block_instance, generate_simplex_instance,
                    generate_hull_instance, triad_instance, compute_gaps)
from .seeding import substream
from .trace import RegretTrace

class HarnessError(Exception):
  "General exception for experiment orchestration"

class UnknownPolicy(HarnessError):
  "A policy kind has no entry in the registry."

CSV_COLUMNS = ["run_id", "policy", "seed", "round", "cum_regret_general",
               "cum_regret_simple", "phase"]


#--------- Instances -----------

def _block(spec, rng):
  return generate_block_instance(spec["M"], spec["N"], spec["r"], rng,
                                 spec["sigma2"])

def _simplex(spec, rng):
  return generate_simplex_instance(spec["M"], spec["N"], spec["r"], rng,
                                   spec["margin"], spec["sigma2"])

def _hull(spec, rng):
  return generate_hull_instance(spec["M"], spec["N"], spec["r"], rng,
                                spec["sigma2"])

def _triad(spec, rng):
  return triad_instance(spec["p"], spec["eps"], spec["sigma2"],
                      spec["replicas"])

def _from_file(spec, rng):
  if not spec["path"]:
    raise HarnessError("instance.path is required by the 'file' generator")
  return read_instance(spec["path"])

INSTANCE_GENERATORS = {
  "block": _block,
  "simplex": _simplex,
  "hull": _hull,
  "triad": _triad,
  "file": _from_file,
}

def build_instance(config, seed):
  """The instance of one seed.  A fixed instance.seed shares one
  instance across all seeds."""
  spec = config.instance
  try:
    generator = INSTANCE_GENERATORS[spec["generator"]]
  except KeyError:
    raise HarnessError("unknown instance generator '%s'" % spec["generator"])
  if spec["seed"] is not None:
    rng = np.random.default_rng(spec["seed"])
  else:
    rng = substream(seed, "instance")
  model = generator(spec, rng)
  if config.experiment["rescale"]:
    model = model.rescaled()
  return model


#--------- Policy registry -----------

class PolicyContext(object):
  """What a policy runner may read besides its environment."""

  def __init__(self, config, spec, model):
    self.config = config
    self.spec = spec
    self.model = model

  def oracle(self):
    overrides = dict(self.config.oracle)
    overrides.update(self.spec.oracle)
    return OracleConfig(**overrides)

  def gap_guess(self):
    delta = self.config.experiment["delta"]
    if delta is not None:
      return delta
    return compute_gaps(self.model).delta


def _run_pce(env, ctx, rng):
  policy = PhasedClusterElim(env, ctx.oracle(), PceConfig(**ctx.spec.params),
                             rng)
  policy.run()
  return policy.records

def _run_detelim(env, ctx, rng):
  params = dict(ctx.spec.params)
  cap = ctx.config.experiment["subset_cap"]
  if cap is not None:
    params.setdefault("subset_cap", cap)
  policy = DeterminantElim(env, DetElimConfig(**params), rng)
  policy.run()
  return policy.records

def _run_etc(env, ctx, rng):
  params = ctx.spec.params
  if "explore_rounds" not in params:
    raise HarnessError("ETC policy '%s' needs explore_rounds" % ctx.spec.name)
  run_etc(env, params["explore_rounds"], ctx.oracle(), rng)
  return []

def _run_am(env, ctx, rng):
  run_am(env, AmConfig(**ctx.spec.params), rng)
  return []

def _run_pes(env, ctx, rng):
  params = dict(ctx.spec.params)
  if params.get("delta") is None:
    params["delta"] = ctx.gap_guess()
  policy = PhasedElimSimplified(env, PesConfig(**params), ctx.oracle(), rng)
  policy.run()
  return policy.records

POLICIES = {
  "pce": _run_pce,
  "detelim": _run_detelim,
  "etc": _run_etc,
  "am": _run_am,
  "pes": _run_pes,
}

def check_policies(config):
  for spec in config.policies:
    if spec.kind not in POLICIES:
      raise UnknownPolicy("policy '%s' has unknown kind '%s' (known: %s)"
                          % (spec.name, spec.kind, ", ".join(sorted(POLICIES))))


#--------- Results -----------

class RunResult(object):
  """Traces of every (policy, seed) cell of one experiment, plus the
  per-cell phase records, failures and wall-clock times."""

  def __init__(self, name, horizon, policies, seeds, traces, records=None,
               failures=None, wall=None):
    self.name = name
    self.horizon = horizon
    self.policies = list(policies)
    self.seeds = list(seeds)
    self.traces = traces
    self.records = records or {}
    self.failures = failures or {}
    self.wall = wall or {}

  def cells(self, policy):
    """The successful traces of POLICY, in seed order."""
    return [self.traces[(policy, seed)] for seed in self.seeds
            if (policy, seed) in self.traces]

  def curves(self, policy, column="simple"):
    cells = self.cells(policy)
    if not cells:
      return np.zeros((0, self.horizon))
    if column == "general":
      return np.vstack([t.cumulative_general() for t in cells])
    elif column == "simple":
      return np.vstack([t.cumulative_simple() for t in cells])
    raise ValueError("unknown regret column %r" % (column,))

  def mean_curve(self, policy, column="simple"):
    return self.curves(policy, column).mean(axis=0)

  def se_curve(self, policy, column="simple"):
    curves = self.curves(policy, column)
    if len(curves) < 2:
      return np.zeros(curves.shape[1])
    return curves.std(axis=0, ddof=1) / np.sqrt(len(curves))

  def instant_mean(self, policy, column="simple"):
    return np.diff(self.mean_curve(policy, column), prepend=0.0)

  def final(self, policy, column="simple"):
    """(mean, standard error) of the cumulative regret at the horizon."""
    return (float(self.mean_curve(policy, column)[-1]),
            float(self.se_curve(policy, column)[-1]))


def _run_cell(config, spec, seed, model):
  trace = RegretTrace(spec.name, seed)
  env = Environment(model, config.horizon, substream(seed, "noise", spec.name),
                    trace=trace)
  rng = substream(seed, "policy", spec.name)
  started = time.time()
  records = POLICIES[spec.kind](env, PolicyContext(config, spec, model), rng)
  if len(trace) != config.horizon:
    raise HarnessError("policy '%s' stopped at round %d of %d"
                       % (spec.name, len(trace), config.horizon))
  return trace, records, time.time() - started

def run_experiment(config, threads=None, progress=False):
  """Play every (policy, seed) cell of CONFIG.  A failing cell is
  recorded in the result and does not affect the others."""
  check_policies(config)
  threads = threads or config.experiment["threads"]
  models = dict((seed, build_instance(config, seed)) for seed in config.seeds)
  cells = [(spec, seed) for seed in config.seeds for spec in config.policies]
  traces, records, failures, wall = {}, {}, {}, {}

  def finish(key, outcome):
    trace, phase_records, seconds = outcome
    traces[key] = trace
    records[key] = phase_records
    wall[key] = seconds
    log("Cell %s seed %d done in %.2fs" % (key[0], key[1], seconds))

  def fail(key, e):
    failures[key] = "%s: %s" % (type(e).__name__, e)
    warn("Cell %s seed %d failed: %s" % (key[0], key[1], failures[key]))

  bar = tqdm(total=len(cells), desc=config.experiment["name"],
             disable=not progress)
  with ThreadPoolExecutor(max_workers=threads) as pool:
    futures = dict((pool.submit(_run_cell, config, spec, seed, models[seed]),
                    (spec.name, seed)) for spec, seed in cells)
    for future in as_completed(futures):
      key = futures[future]
      try:
        finish(key, future.result())
      except Exception as e:
        fail(key, e)
      bar.update(1)
  bar.close()

  return RunResult(config.experiment["name"], config.horizon,
                   [p.name for p in config.policies], config.seeds, traces,
                   records, failures, wall)


#--------- CSV -----------

def result_frame(result):
  frames = []
  rounds = np.arange(1, result.horizon + 1)
  for policy in result.policies:
    for seed in result.seeds:
      trace = result.traces.get((policy, seed))
      if trace is None:
        continue
      frames.append(pd.DataFrame({
        "run_id": result.name,
        "policy": policy,
        "seed": seed,
        "round": rounds,
        "cum_regret_general": trace.cumulative_general(),
        "cum_regret_simple": trace.cumulative_simple(),
        "phase": trace.phases(),
      }, columns=CSV_COLUMNS))
  if not frames:
    return pd.DataFrame(columns=CSV_COLUMNS)
  return pd.concat(frames, ignore_index=True)

def emit_csv(result, path):
  result_frame(result).to_csv(path, index=False, lineterminator="\n")

def read_csv(path):
  """Rebuild a RunResult from a CSV written by emit_csv()."""
  frame = pd.read_csv(path, float_precision="round_trip",
                      dtype={"run_id": str, "policy": str})
  missing = set(CSV_COLUMNS) - set(frame.columns)
  if missing:
    raise HarnessError("'%s' lacks columns %s" % (path, sorted(missing)))
  if frame.empty:
    return RunResult("", 0, [], [], {})
  policies = list(dict.fromkeys(frame["policy"]))
  seeds = sorted(set(int(s) for s in frame["seed"]))
  traces = {}
  horizon = 0
  for (policy, seed), rows in frame.groupby(["policy", "seed"], sort=False):
    rows = rows.sort_values("round")
    traces[(policy, int(seed))] = RegretTrace.from_cumulative(
      policy, int(seed), rows["cum_regret_general"].to_numpy(),
      rows["cum_regret_simple"].to_numpy(), rows["phase"].to_numpy())
    horizon = max(horizon, len(rows))
  return RunResult(str(frame["run_id"].iloc[0]), horizon, policies, seeds,
                   traces)

def merge_results(results):
  """Combine results read from several files; policies must not clash."""
  traces = {}
  policies, seeds = [], []
  horizon = None
  for result in results:
    if horizon is not None and result.horizon != horizon:
      raise HarnessError("results disagree on the horizon")
    horizon = result.horizon
    for key, trace in result.traces.items():
      if key in traces:
        raise HarnessError("policy '%s' seed %d appears twice" % key)
      traces[key] = trace
    policies += [p for p in result.policies if p not in policies]
    seeds += [s for s in result.seeds if s not in seeds]
  name = "+".join(r.name for r in results)
  return RunResult(name, horizon or 0, policies, sorted(seeds), traces)

def summary_rows(result, column="simple"):
  """(policy, mean, standard error, seeds) at the horizon, lowest first."""
  rows = []
  for policy in result.policies:
    count = len(result.cells(policy))
    if count:
      mean, se = result.final(policy, column)
      rows.append((policy, mean, se, count))
  return sorted(rows, key=lambda row: row[1])
