#
# Classes which know how to write and parse instance files: a flat text
# container holding everything needed to rebuild a RewardModel.  Floats
# are written with repr(), so a parsed instance is bit-identical to the
# one that was written.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import os

import numpy as np

from .lablogging import log
from .model import RewardModel, ModelError

# The general format is one record per line, a record name followed by
# whitespace-separated fields:
#
#   hottlab-instance 1
#   M <int>
#   N <int>
#   r <int>
#   sigma2 <float>
#   unnormalized <0|1>
#   setting <name|->
#   hott <int> ... <int>
#   U <row> <float> ... <float>       (M of these)
#   V <row> <float> ... <float>       (N of these)
#
# Blank lines and lines starting with '#' are ignored.

MAGIC = "hottlab-instance"
VERSION = 1

class InstanceFileError(Exception):
  "General exception for instance files."

class InstanceMalformedRecord(InstanceFileError):
  "A record could not be parsed."

class InstanceMissingRecord(InstanceFileError):
  "A required record is absent from the file."


class InstanceWriter(object):
  """Write a RewardModel to an instance file."""

  def __init__(self, model):
    self._model = model

  def records(self):
    """Return the lines of the file, without line terminators."""
    model = self._model
    lines = ["%s %d" % (MAGIC, VERSION),
             "M %d" % model.M,
             "N %d" % model.N,
             "r %d" % model.r,
             "sigma2 %r" % model.sigma2,
             "unnormalized %d" % int(model.unnormalized),
             "setting %s" % (model.setting or "-"),
             "hott " + " ".join(str(i) for i in model.hott)]
    for name, matrix in (("U", model.U), ("V", model.V)):
      for row, values in enumerate(matrix):
        lines.append("%s %d %s" % (name, row,
                                   " ".join(repr(float(x)) for x in values)))
    return lines

  def write(self, path):
    log("Writing instance file '%s'" % path)
    with open(path, "w", newline="\n") as f:
      for line in self.records():
        f.write(line + "\n")


class InstanceParser(object):
  """Read an instance file back into a RewardModel."""

  def __init__(self):
    self._header = {}
    self._rows = {"U": {}, "V": {}}

  def _parse_int(self, name, fields):
    if len(fields) != 1:
      raise InstanceMalformedRecord("'%s' takes one field" % name)
    try:
      self._header[name] = int(fields[0])
    except ValueError:
      raise InstanceMalformedRecord("'%s' is not an integer" % name)

  def _parse_sigma2(self, fields):
    if len(fields) != 1:
      raise InstanceMalformedRecord("'sigma2' takes one field")
    try:
      self._header["sigma2"] = float(fields[0])
    except ValueError:
      raise InstanceMalformedRecord("'sigma2' is not a number")

  def _parse_setting(self, fields):
    if len(fields) != 1:
      raise InstanceMalformedRecord("'setting' takes one field")
    self._header["setting"] = None if fields[0] == "-" else fields[0]

  def _parse_hott(self, fields):
    try:
      self._header["hott"] = tuple(int(x) for x in fields)
    except ValueError:
      raise InstanceMalformedRecord("'hott' holds non-integer indices")

  def _parse_row(self, name, fields):
    try:
      row = int(fields[0])
      values = [float(x) for x in fields[1:]]
    except (ValueError, IndexError):
      raise InstanceMalformedRecord("bad %s row" % name)
    if row in self._rows[name]:
      raise InstanceMalformedRecord("%s row %d given twice" % (name, row))
    self._rows[name][row] = values

  def _matrix(self, name, count, r):
    rows = self._rows[name]
    if sorted(rows) != list(range(count)):
      raise InstanceMissingRecord("%s rows incomplete" % name)
    if any(len(v) != r for v in rows.values()):
      raise InstanceMalformedRecord("%s row of wrong width" % name)
    return np.array([rows[i] for i in range(count)], dtype=float)

  #--------- Public APIs -----------

  def parse_lines(self, lines):
    self.__init__()
    lines = [l.strip() for l in lines]
    lines = [l for l in lines if l and not l.startswith("#")]
    if not lines or lines[0].split() != [MAGIC, str(VERSION)]:
      raise InstanceMalformedRecord("not a version-%d instance file"
                                    % VERSION)

    for line in lines[1:]:
      name, fields = line.split()[0], line.split()[1:]
      if name in ("M", "N", "r", "unnormalized"):
        self._parse_int(name, fields)
      elif name == "sigma2":
        self._parse_sigma2(fields)
      elif name == "setting":
        self._parse_setting(fields)
      elif name == "hott":
        self._parse_hott(fields)
      elif name in ("U", "V"):
        self._parse_row(name, fields)
      else:
        raise InstanceMalformedRecord("unknown record '%s'" % name)

    for key in ("M", "N", "r", "sigma2", "hott"):
      if key not in self._header:
        raise InstanceMissingRecord("no '%s' record" % key)
    h = self._header
    U = self._matrix("U", h["M"], h["r"])
    V = self._matrix("V", h["N"], h["r"])
    try:
      return RewardModel(U, V, h["hott"], h["sigma2"],
                         unnormalized=bool(h.get("unnormalized", 0)),
                         setting=h.get("setting"))
    except ModelError as e:
      raise InstanceMalformedRecord(str(e))

  def load(self, path):
    if not os.path.isfile(path):
      raise InstanceFileError("no such instance file '%s'" % path)
    log("Loading instance file '%s'" % path)
    with open(path) as f:
      return self.parse_lines(f.readlines())


def write_instance(model, path):
  InstanceWriter(model).write(path)

def read_instance(path):
  return InstanceParser().load(path)
