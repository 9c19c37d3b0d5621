"""Step plots of performance profiles as SVG text and PNG raster."""

from __future__ import annotations

import io
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING
from xml.sax.saxutils import escape

from PIL import Image, ImageDraw, ImageFont

from .colors import BLACK, GRID, WHITE, ColorResolver, series_color
from .errors import EmptyRecordSet, IoFailure

if TYPE_CHECKING:
    from .profiles import ProfileCurve

_LOGGER = logging.getLogger(__name__)

DEFAULT_SIZE = (640, 400)
FONT_SIZE = 12
Y_TICKS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def _fmt_value(v: int | float) -> str:
    """Format a numeric axis label, stripping unnecessary decimal places."""
    if isinstance(v, float):
        if v.is_integer():
            return str(int(v))
        rounded = round(v, 2)
        return f"{rounded:.2f}".rstrip("0").rstrip(".")
    return str(v)


def log_ticks(lo: float, hi: float) -> list[float]:
    """Tick positions 1, 2, 5 x 10^k inside [lo, hi], always including both ends."""
    ticks = {lo, hi}
    for exponent in range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1):
        for mantissa in (1, 2, 5):
            value = mantissa * 10.0**exponent
            if lo <= value <= hi:
                ticks.add(value)
    return sorted(ticks)


@dataclass(frozen=True)
class PlotFrame:
    """Mapping of (alpha, p) onto pixel coordinates with a log-scaled alpha axis."""

    width: int
    height: int
    alpha_min: float
    alpha_max: float
    left: int = 56
    right: int = 16
    top: int = 16
    bottom: int = 44

    @classmethod
    def for_curves(cls, curves: Sequence[ProfileCurve], size: tuple[int, int] = DEFAULT_SIZE) -> PlotFrame:
        if not curves:
            raise EmptyRecordSet("No profile curves to plot")
        lo = min(float(c.alphas[0]) for c in curves if len(c.alphas))
        hi = max(float(c.alphas[-1]) for c in curves if len(c.alphas))
        if hi <= lo:
            hi = lo * 2.0
        return cls(width=size[0], height=size[1], alpha_min=lo, alpha_max=hi)

    @property
    def x0(self) -> int:
        return self.left

    @property
    def x1(self) -> int:
        return self.width - self.right

    @property
    def y0(self) -> int:
        return self.top

    @property
    def y1(self) -> int:
        return self.height - self.bottom

    def x(self, alpha: float) -> float:
        span = math.log(self.alpha_max) - math.log(self.alpha_min)
        rel = (math.log(alpha) - math.log(self.alpha_min)) / span
        return self.x0 + rel * (self.x1 - self.x0)

    def y(self, p: float) -> float:
        return self.y1 - p * (self.y1 - self.y0)

    def step_points(self, curve: ProfileCurve) -> list[tuple[float, float]]:
        """Screen points of a post-step polyline through the curve."""
        points: list[tuple[float, float]] = []
        prev_y: float | None = None
        for alpha, p in zip(curve.alphas, curve.values):
            x, y = self.x(float(alpha)), self.y(float(p))
            if prev_y is not None and y != prev_y:
                points.append((x, prev_y))
            points.append((x, y))
            prev_y = y
        return points


def profile_svg(curves: Sequence[ProfileCurve], size: tuple[int, int] = DEFAULT_SIZE) -> str:
    """SVG document with one step polyline per solver; identical input gives identical bytes."""
    frame = PlotFrame.for_curves(curves, size)
    curves = sorted(curves, key=lambda c: c.solver_id)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{frame.width}" height="{frame.height}" '
        f'viewBox="0 0 {frame.width} {frame.height}" font-family="sans-serif" font-size="{FONT_SIZE}">',
        f'<rect x="0" y="0" width="{frame.width}" height="{frame.height}" fill="#ffffff"/>',
    ]

    for alpha in log_ticks(frame.alpha_min, frame.alpha_max):
        x = frame.x(alpha)
        out.append(
            f'<line x1="{x:.2f}" y1="{frame.y0}" x2="{x:.2f}" y2="{frame.y1}" '
            'stroke="#c8c8c8" stroke-dasharray="5,3"/>'
        )
        out.append(f'<text x="{x:.2f}" y="{frame.y1 + 16}" text-anchor="middle">{_fmt_value(alpha)}</text>')
    for p in Y_TICKS:
        y = frame.y(p)
        out.append(
            f'<line x1="{frame.x0}" y1="{y:.2f}" x2="{frame.x1}" y2="{y:.2f}" '
            'stroke="#c8c8c8" stroke-dasharray="5,3"/>'
        )
        out.append(f'<text x="{frame.x0 - 6}" y="{y + 4:.2f}" text-anchor="end">{_fmt_value(p)}</text>')

    out.append(
        f'<rect x="{frame.x0}" y="{frame.y0}" width="{frame.x1 - frame.x0}" height="{frame.y1 - frame.y0}" '
        'fill="none" stroke="#000000"/>'
    )
    out.append(f'<text x="{(frame.x0 + frame.x1) / 2:.2f}" y="{frame.height - 8}" text-anchor="middle">alpha</text>')

    for i, curve in enumerate(curves):
        points = " ".join(f"{x:.2f},{y:.2f}" for x, y in frame.step_points(curve))
        out.append(f'<polyline fill="none" stroke="{series_color(i)}" stroke-width="2" points="{points}"/>')

    for i, curve in enumerate(curves):
        ly = frame.y(0.0) - 10 - 16 * (len(curves) - 1 - i)
        lx = frame.x1 - 180
        out.append(
            f'<line x1="{lx}" y1="{ly:.2f}" x2="{lx + 20}" y2="{ly:.2f}" '
            f'stroke="{series_color(i)}" stroke-width="2"/>'
        )
        out.append(f'<text x="{lx + 26}" y="{ly + 4:.2f}">{escape(curve.solver_id)}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _draw_grid_line(
    draw: ImageDraw.ImageDraw,
    x1: int,
    y1: int,
    x2: int,
    y2: int,
    color: tuple[int, int, int, int],
) -> None:
    """Draw one dashed grid line; horizontal when ``y1 == y2``, vertical otherwise."""
    dash_length, gap_length = 5, 3
    if y1 == y2:
        pos = x1
        while pos < x2:
            draw.line([(pos, y1), (min(pos + dash_length, x2), y1)], fill=color, width=1)
            pos += dash_length + gap_length
    else:
        pos = y1
        while pos < y2:
            draw.line([(x1, pos), (x1, min(pos + dash_length, y2))], fill=color, width=1)
            pos += dash_length + gap_length


def _load_font(font_path: str | None, size: int) -> ImageFont.FreeTypeFont | ImageFont.ImageFont:
    if font_path is None:
        return ImageFont.load_default(size)
    try:
        return ImageFont.truetype(font_path, size)
    except OSError as err:
        raise ValueError(f"Failed to load font from {font_path}: {err}") from err


def _text(
    draw: ImageDraw.ImageDraw,
    xy: tuple[float, float],
    text: str,
    font: ImageFont.FreeTypeFont | ImageFont.ImageFont,
    align: str = "left",
) -> None:
    """Draw text vertically centered on xy; align is left, center or right."""
    left, top, right, bottom = draw.textbbox((0, 0), text, font=font)
    x, y = xy
    if align == "center":
        x -= (right - left) / 2
    elif align == "right":
        x -= right - left
    draw.text((round(x - left), round(y - (top + bottom) / 2)), text, fill=BLACK, font=font)


def profile_image(
    curves: Sequence[ProfileCurve],
    size: tuple[int, int] = DEFAULT_SIZE,
    font_path: str | None = None,
) -> Image.Image:
    """Raster step plot of profile curves with a dashed grid and a legend."""
    frame = PlotFrame.for_curves(curves, size)
    curves = sorted(curves, key=lambda c: c.solver_id)
    colors = ColorResolver()
    font = _load_font(font_path, FONT_SIZE)

    img = Image.new("RGBA", (frame.width, frame.height), WHITE)
    draw = ImageDraw.Draw(img)

    for alpha in log_ticks(frame.alpha_min, frame.alpha_max):
        x = round(frame.x(alpha))
        _draw_grid_line(draw, x, frame.y0, x, frame.y1, GRID)
        _text(draw, (x, frame.y1 + 12), _fmt_value(alpha), font, align="center")
    for p in Y_TICKS:
        y = round(frame.y(p))
        _draw_grid_line(draw, frame.x0, y, frame.x1, y, GRID)
        _text(draw, (frame.x0 - 6, y), _fmt_value(p), font, align="right")

    draw.rectangle((frame.x0, frame.y0, frame.x1, frame.y1), outline=BLACK, width=1)
    _text(draw, ((frame.x0 + frame.x1) / 2, frame.height - 12), "alpha", font, align="center")

    for i, curve in enumerate(curves):
        points = [(round(x), round(y)) for x, y in frame.step_points(curve)]
        color = colors.resolve(series_color(i))
        if len(points) > 1:
            draw.line(points, fill=color, width=2)
        elif points:
            draw.point(points[0], fill=color)

    for i, curve in enumerate(curves):
        ly = round(frame.y(0.0)) - 10 - 16 * (len(curves) - 1 - i)
        lx = frame.x1 - 180
        draw.line([(lx, ly), (lx + 20, ly)], fill=colors.resolve(series_color(i)), width=2)
        _text(draw, (lx + 26, ly), curve.solver_id, font)

    return img


def render_profile_png(
    curves: Sequence[ProfileCurve],
    path: str | Path,
    size: tuple[int, int] = DEFAULT_SIZE,
    font_path: str | None = None,
) -> Path:
    """Render profile curves to a PNG file."""
    img = profile_image(curves, size, font_path)
    buffer = io.BytesIO()
    img.save(buffer, format="PNG")
    target = Path(path)
    try:
        target.write_bytes(buffer.getvalue())
    except OSError as err:
        _LOGGER.error("Failed to write %s: %s", target, err)
        raise IoFailure(f"Failed to write {target}: {err}") from err
    _LOGGER.debug("Rendered %d profile curves to %s", len(curves), target)
    return target
