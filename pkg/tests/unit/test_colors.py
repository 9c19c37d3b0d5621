import pytest

from gridopt.colors import BLACK, SERIES_PALETTE, ColorResolver, series_color


class TestColorResolver:
    """Test color resolution functionality."""

    @pytest.mark.parametrize(
        "hex_color,expected",
        [
            ("#FF0000", (255, 0, 0, 255)),
            ("#1f77b4", (31, 119, 180, 255)),
            # 3-digit hex shorthand
            ("#F00", (255, 0, 0, 255)),
            ("#fff", (255, 255, 255, 255)),
            # Case insensitive
            ("#Ff0000", (255, 0, 0, 255)),
        ],
    )
    def test_hex_colors(self, hex_color, expected):
        assert ColorResolver().resolve(hex_color) == expected

    @pytest.mark.parametrize("invalid", ["#FF", "#FFFFFFF", "#GGGGGG", "mauve", "white"])
    def test_invalid_returns_black(self, invalid):
        assert ColorResolver().resolve(invalid) == BLACK


class TestSeriesColor:
    def test_palette_order(self):
        assert [series_color(i) for i in range(len(SERIES_PALETTE))] == list(SERIES_PALETTE)

    def test_cycles(self):
        assert series_color(len(SERIES_PALETTE) + 1) == SERIES_PALETTE[1]

    def test_all_resolvable(self):
        resolver = ColorResolver()
        assert all(resolver.resolve(c) != BLACK for c in SERIES_PALETTE)
