#
# Logging assistance. This provides a logging facility for the rest of
# the lab.  A simulation run produces far too much state to dump on the
# screen, so, based on python's logging module, we keep two logs: the
# main diagnostic log and a tabular log of algorithm phases.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import logging
import os

# Create the logging objects regardless.  Until open_logs() is called
# they only carry a NullHandler, so importing the package never
# touches the filesystem.
mainlog = logging.getLogger('hottlab.mainlog')
mainlog.addHandler(logging.NullHandler())
mainlog.setLevel(logging.CRITICAL)

# Phase records are kept in a separate file, for better readability.
phaselog = logging.getLogger('hottlab.phaselog')
phaselog.addHandler(logging.NullHandler())
phaselog.setLevel(logging.CRITICAL)

_open_handlers = []

# Columns of the phase log, in order.  Records missing a column print
# a dash there.
PHASE_COLUMNS = ("phase", "stage", "k", "d", "n", "eps", "family",
                 "n_min", "n_mean", "seeds", "T_mean", "T_max",
                 "groups", "rounds", "oracle_err", "hott_alive", "flags")


# Public routines used by other modules
def set_debug(state):
  if state:
    mainlog.setLevel(logging.DEBUG)
    phaselog.setLevel(logging.DEBUG)
  else:
    mainlog.setLevel(logging.CRITICAL)
    phaselog.setLevel(logging.CRITICAL)

def open_logs(directory):
  """Attach 'debug.log' and 'phases.log' in DIRECTORY, in append mode,
  and switch debugging on."""
  close_logs()
  os.makedirs(directory, exist_ok=True)
  main = logging.FileHandler(os.path.join(directory, 'debug.log'), 'a')
  main.setFormatter(logging.Formatter('%(asctime)s: %(message)s'))
  mainlog.addHandler(main)
  phases = logging.FileHandler(os.path.join(directory, 'phases.log'), 'a')
  phases.setFormatter(logging.Formatter('%(message)s'))
  phaselog.addHandler(phases)
  _open_handlers.extend([(mainlog, main), (phaselog, phases)])
  set_debug(True)
  mainlog.info('*** Log reopened ***')
  phaselog.info('*** Log reopened ***')
  phaselog.info(format_phase_header())

def close_logs():
  while _open_handlers:
    logger, handler = _open_handlers.pop()
    logger.removeHandler(handler)
    handler.close()

def log(msg):
  mainlog.debug(msg)

def warn(msg):
  mainlog.warning(msg)

def _cell(value):
  if value is None:
    return "-"
  if isinstance(value, float):
    return "%.6g" % value
  if isinstance(value, (list, tuple)):
    return ",".join(_cell(v) for v in value) or "-"
  return str(value)

def format_phase_header():
  return "%-10s " % "policy" + " ".join("%-10s" % c for c in PHASE_COLUMNS)

def format_phase(policy, record):
  """Render one phase RECORD (a dict keyed by PHASE_COLUMNS) as a
  fixed-width row."""
  return "%-10s " % policy + " ".join("%-10s" % _cell(record.get(c))
                                      for c in PHASE_COLUMNS)

def log_phase(policy, record):
  phaselog.debug(format_phase(policy, record))
