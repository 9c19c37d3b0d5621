import numpy as np
import pytest
from PIL import Image

from gridopt.colors import SERIES_PALETTE
from gridopt.errors import EmptyRecordSet, IoFailure
from gridopt.plotting import PlotFrame, log_ticks, profile_image, profile_svg, render_profile_png
from gridopt.profiles import ProfileCurve


@pytest.fixture
def curves():
    alphas = np.geomspace(1.0, 10.0, 20)
    return [
        ProfileCurve("polar-power", alphas, np.minimum(1.0, np.linspace(0.4, 1.2, 20))),
        ProfileCurve("cart-current", alphas, np.linspace(0.1, 0.6, 20)),
    ]


class TestLogTicks:
    def test_decade(self):
        assert log_ticks(1.0, 10.0) == [1.0, 2.0, 5.0, 10.0]

    def test_ends_included(self):
        assert log_ticks(1.0, 8.0) == [1.0, 2.0, 5.0, 8.0]

    def test_two_decades(self):
        assert log_ticks(1.0, 100.0) == [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]


class TestPlotFrame:
    def test_alpha_axis_is_logarithmic(self, curves):
        frame = PlotFrame.for_curves(curves)
        mid = (frame.x0 + frame.x1) / 2
        assert frame.x(1.0) == pytest.approx(frame.x0)
        assert frame.x(10.0) == pytest.approx(frame.x1)
        assert frame.x(10**0.5) == pytest.approx(mid)

    def test_p_axis_points_up(self, curves):
        frame = PlotFrame.for_curves(curves)
        assert frame.y(0.0) == frame.y1
        assert frame.y(1.0) == frame.y0

    def test_step_points_are_axis_aligned(self, curves):
        frame = PlotFrame.for_curves(curves)
        points = frame.step_points(curves[1])
        for (xa, ya), (xb, yb) in zip(points, points[1:]):
            assert xa == xb or ya == yb

    def test_single_point_grid(self):
        frame = PlotFrame.for_curves([ProfileCurve("a", np.array([1.0]), np.array([1.0]))])
        assert frame.alpha_max == 2.0

    def test_empty(self):
        with pytest.raises(EmptyRecordSet):
            PlotFrame.for_curves([])


class TestProfileSvg:
    """Test the SVG rendering."""

    def test_deterministic(self, curves):
        assert profile_svg(curves) == profile_svg(list(reversed(curves)))

    def test_one_polyline_per_solver(self, curves):
        svg = profile_svg(curves)
        assert svg.startswith("<svg ")
        assert svg.rstrip().endswith("</svg>")
        assert svg.count("<polyline") == 2
        # Curves are colored in solver id order
        assert svg.index(f'stroke="{SERIES_PALETTE[0]}"') < svg.index(f'stroke="{SERIES_PALETTE[1]}"')
        assert ">cart-current</text>" in svg

    def test_labels_escaped(self):
        curve = ProfileCurve("a<b>&c", np.array([1.0, 2.0]), np.array([0.5, 1.0]))
        svg = profile_svg([curve])
        assert "a&lt;b&gt;&amp;c" in svg
        assert "a<b>" not in svg

    def test_size(self, curves):
        assert 'width="320" height="200"' in profile_svg(curves, size=(320, 200))


class TestProfilePng:
    """Test the raster rendering."""

    def test_image(self, curves):
        img = profile_image(curves, size=(320, 200))
        assert img.size == (320, 200)
        assert img.mode == "RGBA"
        assert img.getpixel((2, 2)) == (255, 255, 255, 255)

    def test_curve_pixels_drawn(self, curves):
        img = profile_image(curves)
        color = [int(SERIES_PALETTE[0][i : i + 2], 16) for i in (1, 3, 5)] + [255]
        assert np.any(np.all(np.asarray(img) == color, axis=-1))

    def test_write_png(self, curves, tmp_path):
        path = render_profile_png(curves, tmp_path / "profile.png")
        with Image.open(path) as img:
            assert img.format == "PNG"
            assert img.size == (640, 400)

    def test_write_failure(self, curves, tmp_path):
        with pytest.raises(IoFailure):
            render_profile_png(curves, tmp_path / "missing" / "profile.png")

    def test_missing_font(self, curves):
        with pytest.raises(ValueError, match="font"):
            profile_image(curves, font_path="/nonexistent/font.ttf")
