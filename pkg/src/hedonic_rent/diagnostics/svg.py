"""Minimal SVG charts built from primitives with ElementTree."""

import xml.etree.ElementTree as ET

import numpy as np

WIDTH, HEIGHT = 480, 400
MARGIN = 50
SVG_NS = "http://www.w3.org/2000/svg"


class _Canvas:
    def __init__(self, title, xlim, ylim, xlabel="", ylabel=""):
        self.root = ET.Element(
            "svg",
            xmlns=SVG_NS,
            width=str(WIDTH),
            height=str(HEIGHT),
            viewBox=f"0 0 {WIDTH} {HEIGHT}",
        )
        self.xlim = _padded(xlim)
        self.ylim = _padded(ylim)
        ET.SubElement(self.root, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
        self.text(WIDTH / 2, 20, title, size=14)
        self.text(WIDTH / 2, HEIGHT - 10, xlabel)
        t = self.text(14, HEIGHT / 2, ylabel)
        t.set("transform", f"rotate(-90 14 {HEIGHT / 2})")
        x0, y0, x1, y1 = MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2, MARGIN
        ET.SubElement(self.root, "rect", x=str(x0), y=str(y1), width=str(x1 - x0), height=str(y0 - y1),
                      fill="none", stroke="black")
        for frac in (0.0, 0.5, 1.0):
            xv = self.xlim[0] + frac * (self.xlim[1] - self.xlim[0])
            yv = self.ylim[0] + frac * (self.ylim[1] - self.ylim[0])
            self.text(self.sx(xv), y0 + 15, f"{xv:.3g}", size=10)
            self.text(x0 - 5, self.sy(yv) + 3, f"{yv:.3g}", size=10, anchor="end")
        self.plot = ET.SubElement(self.root, "g")

    def sx(self, x):
        lo, hi = self.xlim
        return MARGIN + (np.asarray(x) - lo) / (hi - lo) * (WIDTH - 1.5 * MARGIN)

    def sy(self, y):
        lo, hi = self.ylim
        return HEIGHT - MARGIN - (np.asarray(y) - lo) / (hi - lo) * (HEIGHT - 2 * MARGIN)

    def text(self, x, y, s, size=12, anchor="middle"):
        el = ET.SubElement(self.root, "text", x=f"{x:.2f}", y=f"{y:.2f}", attrib={
            "font-size": str(size), "text-anchor": anchor, "font-family": "sans-serif"})
        el.text = s
        return el

    def points(self, x, y, colors=None, r=1.5):
        sx, sy = self.sx(x), self.sy(y)
        for i in range(len(sx)):
            fill = colors[i] if colors is not None else "#1f4e9c"
            ET.SubElement(self.plot, "circle", cx=f"{sx[i]:.2f}", cy=f"{sy[i]:.2f}", r=str(r),
                          fill=fill, attrib={"fill-opacity": "0.6"})

    def line(self, x0, y0, x1, y1, color="red"):
        ET.SubElement(self.plot, "line", x1=f"{float(self.sx(x0)):.2f}", y1=f"{float(self.sy(y0)):.2f}",
                      x2=f"{float(self.sx(x1)):.2f}", y2=f"{float(self.sy(y1)):.2f}",
                      stroke=color, attrib={"stroke-width": "1.5"})

    def bar(self, left, right, height):
        x0, x1 = float(self.sx(left)), float(self.sx(right))
        y0, y1 = float(self.sy(0.0)), float(self.sy(height))
        ET.SubElement(self.plot, "rect", x=f"{x0:.2f}", y=f"{y1:.2f}", width=f"{max(x1 - x0, 0.5):.2f}",
                      height=f"{max(y0 - y1, 0.0):.2f}", fill="#1f4e9c", stroke="white")

    def write(self, path):
        ET.ElementTree(self.root).write(path, encoding="utf-8", xml_declaration=True)


def _padded(lim):
    lo, hi = float(lim[0]), float(lim[1])
    if not np.isfinite(lo) or not np.isfinite(hi):
        lo, hi = 0.0, 1.0
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def histogram_svg(path, edges, counts, title="Distribution of residuals"):
    c = _Canvas(title, (edges[0], edges[-1]), (0, max(int(np.max(counts)), 1)), "residual", "count")
    for lo, hi, n in zip(edges[:-1], edges[1:], counts):
        if n > 0:
            c.bar(lo, hi, n)
    c.write(path)


def scatter_svg(path, x, y, reference, title, xlabel, ylabel):
    """Scatter with a reference line: ``'diagonal'`` (y = x) or ``'zero'`` (y = 0)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if reference == "diagonal":
        lo = min(x.min(), y.min())
        hi = max(x.max(), y.max())
        c = _Canvas(title, (lo, hi), (lo, hi), xlabel, ylabel)
        c.points(x, y)
        c.line(c.xlim[0], c.xlim[0], c.xlim[1], c.xlim[1])
    else:
        ylim = (min(y.min(), 0.0), max(y.max(), 0.0))
        c = _Canvas(title, (x.min(), x.max()), ylim, xlabel, ylabel)
        c.points(x, y)
        c.line(c.xlim[0], 0.0, c.xlim[1], 0.0)
    c.write(path)


def _diverging(values):
    scale = np.max(np.abs(values)) or 1.0
    out = []
    for v in values:
        t = min(abs(v) / scale, 1.0)
        fade = int(round(230 * (1 - t)))
        # blue for under-prediction (positive residual), red for over-prediction
        out.append(f"rgb({fade},{fade},255)" if v > 0 else f"rgb(255,{fade},{fade})")
    return out


def residual_map_svg(path, lon, lat, residuals, title="Spatial pattern of residuals"):
    lon, lat = np.asarray(lon, dtype=float), np.asarray(lat, dtype=float)
    c = _Canvas(title, (lon.min(), lon.max()), (lat.min(), lat.max()), "longitude", "latitude")
    c.points(lon, lat, colors=_diverging(np.asarray(residuals, dtype=float)), r=2)
    c.write(path)
