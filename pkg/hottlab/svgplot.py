#
# Regret plots as self-contained SVG.  Only rect, line, path and text
# elements are emitted, so the files render anywhere and can be checked
# against a fixed element set.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 720
HEIGHT = 460
MARGIN = {"left": 70, "right": 150, "top": 40, "bottom": 55}

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]

KINDS = ("cumulative", "instant")


def nice_ticks(low, high, count=5):
  """Round tick positions covering [LOW, HIGH] at a 1-2-5 step.  The
  last tick is never below HIGH."""
  if high <= low:
    high = low + 1.0
  raw = (high - low) / count
  scale = 10 ** math.floor(math.log10(raw))
  step = min((m * scale for m in (1, 2, 5, 10) if m * scale >= raw))
  first = math.floor(low / step) * step
  last = math.ceil(high / step - 1e-9) * step
  n = int(round((last - first) / step))
  return [round(first + i * step, 12) for i in range(n + 1)]

def _fmt(value):
  return "%.6g" % value


class Canvas(object):
  """Maps data coordinates into the plot area and collects elements."""

  def __init__(self, x_range, y_range):
    self.x0, self.x1 = x_range
    self.y0, self.y1 = y_range
    self.left = MARGIN["left"]
    self.right = WIDTH - MARGIN["right"]
    self.top = MARGIN["top"]
    self.bottom = HEIGHT - MARGIN["bottom"]
    self.elements = []

  def px(self, x):
    span = (self.x1 - self.x0) or 1.0
    return self.left + (x - self.x0) / span * (self.right - self.left)

  def py(self, y):
    span = (self.y1 - self.y0) or 1.0
    return self.bottom - (y - self.y0) / span * (self.bottom - self.top)

  def rect(self, x, y, w, h, fill, stroke="none"):
    self.elements.append('<rect x="%.2f" y="%.2f" width="%.2f" height="%.2f" '
                         'fill="%s" stroke="%s"/>' % (x, y, w, h, fill, stroke))

  def line(self, x1, y1, x2, y2, stroke="#000000", width=1, dash=None):
    extra = ' stroke-dasharray="%s"' % dash if dash else ""
    self.elements.append('<line x1="%.2f" y1="%.2f" x2="%.2f" y2="%.2f" '
                         'stroke="%s" stroke-width="%s"%s/>'
                         % (x1, y1, x2, y2, stroke, width, extra))

  def text(self, x, y, content, anchor="middle", size=12, rotate=None):
    extra = ' transform="rotate(%d %.2f %.2f)"' % (rotate, x, y) \
            if rotate is not None else ""
    self.elements.append('<text x="%.2f" y="%.2f" text-anchor="%s" '
                         'font-family="sans-serif" font-size="%d"%s>%s</text>'
                         % (x, y, anchor, size, extra, escape(content)))

  def polyline(self, xs, ys, stroke, width=2):
    points = ["%.2f,%.2f" % (self.px(x), self.py(y)) for x, y in zip(xs, ys)]
    self.elements.append('<path d="M%s" fill="none" stroke="%s" '
                         'stroke-width="%s"/>' % (" L".join(points), stroke, width))

  def band(self, xs, lower, upper, fill):
    upper_pts = ["%.2f,%.2f" % (self.px(x), self.py(y)) for x, y in zip(xs, upper)]
    lower_pts = ["%.2f,%.2f" % (self.px(x), self.py(y))
                 for x, y in zip(xs[::-1], lower[::-1])]
    self.elements.append('<path d="M%s L%s Z" fill="%s" fill-opacity="0.2" '
                         'stroke="none"/>'
                         % (" L".join(upper_pts), " L".join(lower_pts), fill))

  def render(self):
    head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
            '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            'width="%d" height="%d" viewBox="0 0 %d %d">'
            % (WIDTH, HEIGHT, WIDTH, HEIGHT))
    return "\n".join([head] + self.elements + ["</svg>"]) + "\n"


def _series(result, kind, column):
  series = []
  for policy in result.policies:
    if not result.cells(policy):
      continue
    if kind == "cumulative":
      mean = result.mean_curve(policy, column)
      se = result.se_curve(policy, column)
    else:
      curves = np.diff(result.curves(policy, column), axis=1, prepend=0.0)
      mean = curves.mean(axis=0)
      se = (curves.std(axis=0, ddof=1) / np.sqrt(len(curves))
            if len(curves) > 1 else np.zeros(len(mean)))
    series.append((policy, mean, se))
  return series

def render_plot(result, kind="cumulative", column="simple", title=None):
  """The SVG document for RESULT, as a string."""
  if kind not in KINDS:
    raise ValueError("plot kind must be one of %s" % (KINDS,))
  series = _series(result, kind, column)
  horizon = max(result.horizon, 1)
  rounds = np.arange(1, horizon + 1)

  if series:
    low = min(0.0, min(float((m - s).min()) for _, m, s in series))
    high = max(float((m + s).max()) for _, m, s in series)
  else:
    low, high = 0.0, 1.0
  yticks = nice_ticks(low, high)
  xticks = nice_ticks(0, horizon)
  canvas = Canvas((0, xticks[-1]), (yticks[0], yticks[-1]))

  canvas.rect(0, 0, WIDTH, HEIGHT, "#ffffff")
  for y in yticks:
    canvas.line(canvas.left, canvas.py(y), canvas.right, canvas.py(y),
                "#dddddd", dash="3,3")
    canvas.text(canvas.left - 8, canvas.py(y) + 4, _fmt(y), anchor="end",
                size=11)
  for x in xticks:
    canvas.line(canvas.px(x), canvas.bottom, canvas.px(x), canvas.bottom + 5)
    canvas.text(canvas.px(x), canvas.bottom + 20, _fmt(x), size=11)
  canvas.line(canvas.left, canvas.bottom, canvas.right, canvas.bottom)
  canvas.line(canvas.left, canvas.top, canvas.left, canvas.bottom)

  for i, (policy, mean, se) in enumerate(series):
    color = PALETTE[i % len(PALETTE)]
    if np.any(se > 0):
      canvas.band(rounds, mean - se, mean + se, color)
    canvas.polyline(rounds, mean, color)
    y = canvas.top + 10 + 20 * i
    canvas.rect(canvas.right + 15, y - 5, 18, 4, color)
    canvas.text(canvas.right + 40, y, policy, anchor="start", size=12)

  ylabel = "cumulative regret" if kind == "cumulative" else "regret per round"
  canvas.text((canvas.left + canvas.right) / 2.0, HEIGHT - 15, "round")
  canvas.text(18, (canvas.top + canvas.bottom) / 2.0, ylabel, rotate=-90)
  if title:
    canvas.text((canvas.left + canvas.right) / 2.0, 24, title, size=14)
  return canvas.render()

def emit_plot(result, path, kind="cumulative", column="simple", title=None):
  with open(path, "w", newline="\n") as f:
    f.write(render_plot(result, kind, column, title))
