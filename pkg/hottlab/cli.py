#
# Command-line front end: gen, run, compare, plot and accept.
#
# Exit codes: 0 on success, 2 for a bad configuration, 3 when an
# acceptance criterion fails.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import argparse
import os
import sys

from .acceptance import AcceptanceSuite
from .config import ConfigError, load_config
from .harness import (UnknownPolicy, build_instance, run_experiment, emit_csv,
                      read_csv, merge_results, summary_rows)
from .instancefile import write_instance
from .lablogging import open_logs, close_logs
from .svgplot import emit_plot, KINDS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ACCEPTANCE = 3


def _print_summary(result, out=sys.stdout):
  out.write("%-16s %14s %12s %6s\n" % ("policy", "regret at T", "std err",
                                       "seeds"))
  for policy, mean, se, count in summary_rows(result):
    out.write("%-16s %14.4f %12.4f %6d\n" % (policy, mean, se, count))

def cmd_gen(args):
  config = load_config(args.config)
  seed = args.seed[0] if args.seed else config.seeds[0]
  model = build_instance(config, seed)
  out = args.out or "%s-%d.inst" % (config.experiment["name"], seed)
  write_instance(model, out)
  print("Wrote %dx%d rank-%d instance to %s" % (model.M, model.N, model.r, out))
  return EXIT_OK

def cmd_run(args):
  config = load_config(args.config)
  if args.policy:
    config = config.only(args.policy)
  if args.seed:
    config = config.with_experiment(seeds=args.seed)
  out = args.out or config.experiment["output"]
  os.makedirs(out, exist_ok=True)
  open_logs(out)
  try:
    result = run_experiment(config, threads=args.threads,
                            progress=not args.quiet)
  finally:
    close_logs()
  name = config.experiment["name"]
  emit_csv(result, os.path.join(out, "%s.csv" % name))
  if config.experiment["plot"]:
    emit_plot(result, os.path.join(out, "%s.svg" % name), title=name)
    emit_plot(result, os.path.join(out, "%s-instant.svg" % name),
              kind="instant", title=name)
  for (policy, seed), message in sorted(result.failures.items()):
    sys.stderr.write("%s seed %d failed: %s\n" % (policy, seed, message))
  _print_summary(result)
  return EXIT_OK

def cmd_compare(args):
  _print_summary(merge_results([read_csv(path) for path in args.csv]))
  return EXIT_OK

def cmd_plot(args):
  result = merge_results([read_csv(path) for path in args.csv])
  out = args.out or os.path.splitext(args.csv[0])[0] + ".svg"
  emit_plot(result, out, kind=args.kind, title=args.title)
  print("Wrote %s" % out)
  return EXIT_OK

def cmd_accept(args):
  suite = AcceptanceSuite(threads=args.threads or 1)
  failed = 0
  for res in suite.run(set(args.only) if args.only else None):
    print("%2d %-32s %s %8.1fs  %s" % (res.number, res.name,
                                       "PASS" if res.passed else "FAIL",
                                       res.seconds, res.detail))
    sys.stdout.flush()
    failed += not res.passed
  return EXIT_ACCEPTANCE if failed else EXIT_OK

def build_parser():
  parser = argparse.ArgumentParser(
    prog="run_lab.py",
    description="Simulate low-rank matrix completion bandits.")
  sub = parser.add_subparsers(dest="command")
  sub.required = True

  gen = sub.add_parser("gen", help="write the instance of a config and seed")
  gen.add_argument("--config", required=True)
  gen.add_argument("--seed", type=int, nargs=1)
  gen.add_argument("--out")
  gen.set_defaults(func=cmd_gen)

  run = sub.add_parser("run", help="run an experiment")
  run.add_argument("--config", required=True)
  run.add_argument("--seed", type=int, nargs="+",
                   help="override experiment.seeds")
  run.add_argument("--policy", nargs="+", help="run only these policies")
  run.add_argument("--out", help="output directory")
  run.add_argument("--threads", type=int)
  run.add_argument("--quiet", action="store_true")
  run.set_defaults(func=cmd_run)

  compare = sub.add_parser("compare", help="tabulate regret at the horizon")
  compare.add_argument("csv", nargs="+")
  compare.set_defaults(func=cmd_compare)

  plot = sub.add_parser("plot", help="draw regret curves from CSV results")
  plot.add_argument("csv", nargs="+")
  plot.add_argument("--out")
  plot.add_argument("--kind", choices=KINDS, default="cumulative")
  plot.add_argument("--title")
  plot.set_defaults(func=cmd_plot)

  accept = sub.add_parser("accept", help="run the acceptance criteria")
  accept.add_argument("--only", type=int, nargs="+")
  accept.add_argument("--threads", type=int)
  accept.set_defaults(func=cmd_accept)
  return parser

def main(argv=None):
  args = build_parser().parse_args(argv)
  try:
    return args.func(args)
  except (ConfigError, UnknownPolicy) as e:
    sys.stderr.write("configuration error: %s\n" % e)
    return EXIT_CONFIG
