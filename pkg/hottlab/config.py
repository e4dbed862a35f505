#
# Experiment configuration files.
#
# The format is a flat list of dotted keys:
#
#   # comment
#   experiment.horizon = 300
#   experiment.seeds   = 1 2 3 4 5
#   instance.generator = block
#   policy.etc25.kind  = etc
#   policy.etc25.explore_rounds = 25
#
# A value is an integer, a float, 'true'/'false', 'none', a bare
# string, or a whitespace-separated list of those.  Keys may not
# repeat.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import re

class ConfigError(Exception):
  "General exception for experiment configuration"

class ConfigSyntaxError(ConfigError):
  "A line of the configuration file could not be parsed."

class ConfigValueError(ConfigError):
  "A configuration value is missing or out of range."

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")

def parse_scalar(text):
  """Convert one token to int, float, bool, None or leave it a string."""
  lowered = text.lower()
  if lowered == "true":
    return True
  if lowered == "false":
    return False
  if lowered == "none":
    return None
  for kind in (int, float):
    try:
      return kind(text)
    except ValueError:
      pass
  return text

def parse_value(text):
  tokens = text.split()
  if not tokens:
    raise ConfigSyntaxError("empty value")
  if len(tokens) == 1:
    return parse_scalar(tokens[0])
  return [parse_scalar(token) for token in tokens]

def parse_lines(lines, source="<config>"):
  """Return an ordered dict of dotted key -> value."""
  entries = {}
  for number, raw in enumerate(lines, 1):
    line = raw.split("#", 1)[0].strip()
    if not line:
      continue
    if "=" not in line:
      raise ConfigSyntaxError("%s:%d: expected 'key = value'" % (source, number))
    key, value = (part.strip() for part in line.split("=", 1))
    if not _KEY.match(key):
      raise ConfigSyntaxError("%s:%d: bad key '%s'" % (source, number, key))
    if key in entries:
      raise ConfigSyntaxError("%s:%d: duplicate key '%s'" % (source, number, key))
    try:
      entries[key] = parse_value(value)
    except ConfigSyntaxError:
      raise ConfigSyntaxError("%s:%d: missing value for '%s'"
                              % (source, number, key))
  return entries


class PolicySpec(object):
  """One policy of an experiment: a unique NAME, the KIND of algorithm,
  its PARAMS and per-policy ORACLE overrides."""

  def __init__(self, name, kind, params=None, oracle=None):
    self.name = name
    self.kind = kind
    self.params = dict(params or {})
    self.oracle = dict(oracle or {})

  def __repr__(self):
    return "PolicySpec(%r, %r, %r)" % (self.name, self.kind, self.params)


class ExperimentConfig(object):
  """Everything a run needs: the instance recipe, the policies, the
  horizon and the seeds."""

  EXPERIMENT_DEFAULTS = {
    "name": "experiment",
    "horizon": 300,
    "seeds": [1],
    "output": "results",
    "rescale": False,
    "delta": None,
    "subset_cap": None,
    "threads": 1,
    "plot": True,
  }

  INSTANCE_DEFAULTS = {
    "generator": "block",
    "M": 200,
    "N": 200,
    "r": 4,
    "sigma2": 0.25,
    "margin": 0.2,
    "p": 0.5,
    "eps": 0.2,
    "replicas": 1,
    "seed": None,
    "path": None,
  }

  def __init__(self, experiment=None, instance=None, policies=None,
               oracle=None):
    self.experiment = dict(self.EXPERIMENT_DEFAULTS)
    self.experiment.update(experiment or {})
    self.instance = dict(self.INSTANCE_DEFAULTS)
    self.instance.update(instance or {})
    self.policies = list(policies or [])
    self.oracle = dict(oracle or {})
    seeds = self.experiment["seeds"]
    if not isinstance(seeds, list):
      self.experiment["seeds"] = [seeds]
    self.validate()

  @property
  def horizon(self):
    return self.experiment["horizon"]

  @property
  def seeds(self):
    return self.experiment["seeds"]

  def validate(self):
    for key in self.experiment:
      if key not in self.EXPERIMENT_DEFAULTS:
        raise ConfigValueError("unknown key 'experiment.%s'" % key)
    for key in self.instance:
      if key not in self.INSTANCE_DEFAULTS:
        raise ConfigValueError("unknown key 'instance.%s'" % key)
    if not isinstance(self.horizon, int) or self.horizon < 1:
      raise ConfigValueError("experiment.horizon must be a positive integer")
    if not self.seeds or not all(isinstance(s, int) for s in self.seeds):
      raise ConfigValueError("experiment.seeds must list at least one integer")
    threads = self.experiment["threads"]
    if not isinstance(threads, int) or threads < 1:
      raise ConfigValueError("experiment.threads must be a positive integer")
    names = [p.name for p in self.policies]
    if len(set(names)) != len(names):
      raise ConfigValueError("policy names must be unique")
    for policy in self.policies:
      if policy.kind is None:
        raise ConfigValueError("policy '%s' has no kind" % policy.name)

  def only(self, names):
    """A copy restricted to the named policies, in config order."""
    missing = set(names) - set(p.name for p in self.policies)
    if missing:
      raise ConfigValueError("no such policy: %s" % ", ".join(sorted(missing)))
    return ExperimentConfig(self.experiment, self.instance,
                            [p for p in self.policies if p.name in names],
                            self.oracle)

  def with_experiment(self, **overrides):
    experiment = dict(self.experiment)
    experiment.update(overrides)
    return ExperimentConfig(experiment, self.instance, self.policies,
                            self.oracle)

  @classmethod
  def from_entries(cls, entries):
    experiment, instance, oracle = {}, {}, {}
    policies = {}
    for key, value in entries.items():
      parts = key.split(".")
      section = parts[0]
      if section in ("experiment", "instance", "oracle") and len(parts) == 2:
        target = {"experiment": experiment, "instance": instance,
                  "oracle": oracle}[section]
        # 'lambda' is a Python keyword
        name = "lam" if parts[1] == "lambda" else parts[1]
        target[name] = value
      elif section == "policy" and len(parts) >= 3:
        spec = policies.setdefault(parts[1], PolicySpec(parts[1], None))
        if parts[2] == "kind" and len(parts) == 3:
          spec.kind = value
        elif parts[2] == "oracle" and len(parts) == 4:
          spec.oracle["lam" if parts[3] == "lambda" else parts[3]] = value
        elif len(parts) == 3:
          spec.params[parts[2]] = value
        else:
          raise ConfigValueError("unrecognized key '%s'" % key)
      else:
        raise ConfigValueError("unrecognized key '%s'" % key)
    return cls(experiment, instance, list(policies.values()), oracle)


def load_config(path):
  try:
    with open(path) as f:
      lines = f.readlines()
  except IOError as e:
    raise ConfigError("cannot read '%s': %s" % (path, e))
  return ExperimentConfig.from_entries(parse_lines(lines, path))

def loads_config(text):
  return ExperimentConfig.from_entries(parse_lines(text.splitlines()))
