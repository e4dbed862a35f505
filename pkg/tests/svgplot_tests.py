#
# Unit tests for the SVG regret plots.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#
import os
import tempfile
from unittest import TestCase
from xml.etree import ElementTree

import numpy as np

from hottlab import svgplot
from hottlab.harness import RunResult
from hottlab.trace import RegretTrace

ALLOWED = set(["svg", "rect", "line", "path", "text"])

def fake_result(seeds=(1, 2)):
  traces = {}
  for policy, slope in (("pes", 0.5), ("etc<25>", 1.0)):
    for seed in seeds:
      general = np.cumsum(np.full(20, slope + 0.1 * seed))
      traces[(policy, seed)] = RegretTrace.from_cumulative(
        policy, seed, general, general, np.zeros(20, dtype=int))
  return RunResult("fake", 20, ["pes", "etc<25>"], list(seeds), traces)

def tags(path):
  root = ElementTree.parse(path).getroot()
  return [element.tag.split("}")[-1] for element in root.iter()]

class TickTests(TestCase):
  def testOneTwoFive(self):
    self.assertEqual(svgplot.nice_ticks(0, 10), [0, 2, 4, 6, 8, 10])
    self.assertEqual(svgplot.nice_ticks(0, 300), [0, 100, 200, 300])
    ticks = svgplot.nice_ticks(0.0, 0.9)
    assert ticks[0] <= 0.0 and ticks[-1] >= 0.9

  def testLastTickCoversHigh(self):
    self.assertEqual(svgplot.nice_ticks(0.0, 0.9), [0, 0.2, 0.4, 0.6, 0.8, 1.0])
    for high in (0.3, 0.9, 1.7, 7.5, 42.0, 299.0, 1001.0):
      ticks = svgplot.nice_ticks(0.0, high)
      assert ticks[-1] >= high, (high, ticks)
      assert ticks[-2] < high, (high, ticks)

  def testNegativeLow(self):
    ticks = svgplot.nice_ticks(-0.3, 0.9)
    assert ticks[0] <= -0.3 and ticks[-1] >= 0.9

  def testDegenerateRange(self):
    assert len(svgplot.nice_ticks(3.0, 3.0)) >= 2


class PlotTests(TestCase):
  def setUp(self):
    fd, self.path = tempfile.mkstemp(suffix=".svg")
    os.close(fd)

  def tearDown(self):
    os.remove(self.path)

  def testElementWhitelist(self):
    for kind in svgplot.KINDS:
      svgplot.emit_plot(fake_result(), self.path, kind=kind, title="a & b")
      found = tags(self.path)
      self.assertEqual(found[0], "svg")
      assert set(found) <= ALLOWED, set(found) - ALLOWED

  def testOneCurvePerPolicy(self):
    svgplot.emit_plot(fake_result(), self.path)
    # one band and one curve for each policy
    self.assertEqual(tags(self.path).count("path"), 4)
    svgplot.emit_plot(fake_result(seeds=(1,)), self.path)
    self.assertEqual(tags(self.path).count("path"), 2)

  def testLegendEscaped(self):
    text = svgplot.render_plot(fake_result())
    assert "etc&lt;25&gt;" in text

  def testEmptyResult(self):
    svgplot.emit_plot(RunResult("none", 0, [], [], {}), self.path)
    assert set(tags(self.path)) <= ALLOWED

  def testBadKind(self):
    self.assertRaises(ValueError, svgplot.render_plot, fake_result(), "log")

  def testCurveInsidePlotArea(self):
    general = np.cumsum(np.full(20, 0.045))
    trace = RegretTrace.from_cumulative("etc", 1, general, general,
                                        np.zeros(20, dtype=int))
    result = RunResult("top", 20, ["etc"], [1], {("etc", 1): trace})
    svgplot.emit_plot(result, self.path)
    root = ElementTree.parse(self.path).getroot()
    paths = [e for e in root.iter() if e.tag.endswith("path")]
    self.assertEqual(len(paths), 1)
    points = paths[0].get("d").lstrip("M").split(" L")
    ys = [float(point.split(",")[1]) for point in points]
    top = svgplot.MARGIN["top"]
    bottom = svgplot.HEIGHT - svgplot.MARGIN["bottom"]
    assert min(ys) >= top - 1e-6, (min(ys), top)
    assert max(ys) <= bottom + 1e-6
