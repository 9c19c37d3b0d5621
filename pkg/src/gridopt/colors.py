"""Colors of the profile plots."""

from __future__ import annotations

# Color constants with alpha channel
WHITE = (255, 255, 255, 255)
BLACK = (0, 0, 0, 255)
GRID = (200, 200, 200, 255)

# One color per solver curve, cycled when there are more curves
SERIES_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#ff7f0e",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#17becf",
)


def series_color(index: int) -> str:
    """Hex color of the index-th curve."""
    return SERIES_PALETTE[index % len(SERIES_PALETTE)]


class ColorResolver:
    """Resolves hex color strings to RGBA tuples."""

    def resolve(self, color: str) -> tuple[int, int, int, int]:
        """Resolve ``#RGB`` or ``#RRGGBB``; anything else falls back to black."""
        color_str = str(color).lower()
        if not color_str.startswith("#"):
            return BLACK
        return self._parse_hex(color_str[1:])

    @staticmethod
    def _parse_hex(hex_val: str) -> tuple[int, int, int, int]:
        try:
            if len(hex_val) == 3:
                r = int(hex_val[0] * 2, 16)
                g = int(hex_val[1] * 2, 16)
                b = int(hex_val[2] * 2, 16)
            elif len(hex_val) == 6:
                r = int(hex_val[0:2], 16)
                g = int(hex_val[2:4], 16)
                b = int(hex_val[4:6], 16)
            else:
                return BLACK
        except ValueError:
            return BLACK
        return r, g, b, 255
