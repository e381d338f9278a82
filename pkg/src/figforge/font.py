"""Fixed 8x16 bitmap font for indicative letters.

Each glyph is 16 row bytes, most significant bit leftmost. The table was
rasterised once from Pillow's built-in bitmap face and frozen here so
rendering never depends on installed fonts or library versions.
"""
from __future__ import annotations

import numpy as np

CELL_W = 8
CELL_H = 16

GLYPHS: dict[str, tuple[int, ...]] = {
    'a': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x3c, 0x6c, 0x7e, 0x00, 0x00, 0x00, 0x00, 0x00),
    'b': (0x00, 0x00, 0x00, 0x00, 0x60, 0x60, 0x78, 0x6c, 0x6c, 0x6c, 0x78, 0x00, 0x00, 0x00, 0x00, 0x00),
    'c': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x60, 0x6c, 0x38, 0x00, 0x00, 0x00, 0x00, 0x00),
    'd': (0x00, 0x00, 0x00, 0x00, 0x1c, 0x0c, 0x3c, 0x6c, 0x6c, 0x6c, 0x3e, 0x00, 0x00, 0x00, 0x00, 0x00),
    'e': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x7c, 0x60, 0x3c, 0x00, 0x00, 0x00, 0x00, 0x00),
    'f': (0x00, 0x00, 0x00, 0x00, 0x1c, 0x30, 0x7c, 0x30, 0x30, 0x30, 0x7c, 0x00, 0x00, 0x00, 0x00, 0x00),
    'g': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x36, 0x6c, 0x6c, 0x6c, 0x3c, 0x0c, 0x78, 0x00, 0x00, 0x00),
    'h': (0x00, 0x00, 0x00, 0x00, 0x60, 0x60, 0x78, 0x6c, 0x6c, 0x6c, 0x6c, 0x00, 0x00, 0x00, 0x00, 0x00),
    'i': (0x00, 0x00, 0x00, 0x00, 0x18, 0x00, 0x78, 0x18, 0x18, 0x18, 0x7e, 0x00, 0x00, 0x00, 0x00, 0x00),
    'j': (0x00, 0x00, 0x00, 0x00, 0x18, 0x00, 0x78, 0x18, 0x18, 0x18, 0x18, 0x18, 0x70, 0x00, 0x00, 0x00),
    'k': (0x00, 0x00, 0x00, 0x00, 0x60, 0x60, 0x6c, 0x78, 0x70, 0x78, 0x6e, 0x00, 0x00, 0x00, 0x00, 0x00),
    'l': (0x00, 0x00, 0x00, 0x00, 0x78, 0x18, 0x18, 0x18, 0x18, 0x18, 0x7e, 0x00, 0x00, 0x00, 0x00, 0x00),
    'm': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x78, 0x7c, 0x54, 0x54, 0x54, 0x00, 0x00, 0x00, 0x00, 0x00),
    'n': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x58, 0x6c, 0x6c, 0x6c, 0x6c, 0x00, 0x00, 0x00, 0x00, 0x00),
    'o': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x6c, 0x6c, 0x38, 0x00, 0x00, 0x00, 0x00, 0x00),
    'p': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x78, 0x6c, 0x6c, 0x6c, 0x78, 0x60, 0x70, 0x00, 0x00, 0x00),
    'q': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x36, 0x6c, 0x6c, 0x6c, 0x3c, 0x0c, 0x1e, 0x00, 0x00, 0x00),
    'r': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x6e, 0x3a, 0x30, 0x30, 0x78, 0x00, 0x00, 0x00, 0x00, 0x00),
    's': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x3c, 0x70, 0x3c, 0x0e, 0x7c, 0x00, 0x00, 0x00, 0x00, 0x00),
    't': (0x00, 0x00, 0x00, 0x00, 0x30, 0x30, 0x7c, 0x30, 0x30, 0x36, 0x1c, 0x00, 0x00, 0x00, 0x00, 0x00),
    'u': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x6c, 0x6c, 0x6c, 0x6c, 0x3e, 0x00, 0x00, 0x00, 0x00, 0x00),
    'v': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x6c, 0x6c, 0x38, 0x38, 0x10, 0x00, 0x00, 0x00, 0x00, 0x00),
    'w': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x56, 0x54, 0x7c, 0x3c, 0x28, 0x00, 0x00, 0x00, 0x00, 0x00),
    'x': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x76, 0x3c, 0x18, 0x3c, 0x6e, 0x00, 0x00, 0x00, 0x00, 0x00),
    'y': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x6e, 0x6c, 0x6c, 0x28, 0x38, 0x30, 0x60, 0x00, 0x00, 0x00),
    'z': (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x7c, 0x58, 0x30, 0x6c, 0x7c, 0x00, 0x00, 0x00, 0x00, 0x00),
    'A': (0x00, 0x00, 0x00, 0x00, 0x00, 0x78, 0x38, 0x28, 0x7c, 0x6c, 0x6e, 0x00, 0x00, 0x00, 0x00, 0x00),
    'B': (0x00, 0x00, 0x00, 0x00, 0x00, 0x78, 0x6c, 0x78, 0x6c, 0x6c, 0x78, 0x00, 0x00, 0x00, 0x00, 0x00),
    'C': (0x00, 0x00, 0x00, 0x00, 0x00, 0x3c, 0x6c, 0x60, 0x60, 0x6c, 0x38, 0x00, 0x00, 0x00, 0x00, 0x00),
    'D': (0x00, 0x00, 0x00, 0x00, 0x00, 0x78, 0x6c, 0x6c, 0x6c, 0x6c, 0x78, 0x00, 0x00, 0x00, 0x00, 0x00),
    'E': (0x00, 0x00, 0x00, 0x00, 0x00, 0x7c, 0x60, 0x78, 0x60, 0x6c, 0x7c, 0x00, 0x00, 0x00, 0x00, 0x00),
    'F': (0x00, 0x00, 0x00, 0x00, 0x00, 0x7c, 0x60, 0x78, 0x60, 0x60, 0x70, 0x00, 0x00, 0x00, 0x00, 0x00),
    'G': (0x00, 0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x60, 0x7c, 0x6c, 0x3c, 0x00, 0x00, 0x00, 0x00, 0x00),
    'H': (0x00, 0x00, 0x00, 0x00, 0x00, 0x6e, 0x6c, 0x7c, 0x6c, 0x6c, 0x6e, 0x00, 0x00, 0x00, 0x00, 0x00),
    'I': (0x00, 0x00, 0x00, 0x00, 0x00, 0x78, 0x30, 0x30, 0x30, 0x30, 0x78, 0x00, 0x00, 0x00, 0x00, 0x00),
    'J': (0x00, 0x00, 0x00, 0x00, 0x00, 0x3c, 0x18, 0x18, 0x58, 0x58, 0x70, 0x00, 0x00, 0x00, 0x00, 0x00),
    'K': (0x00, 0x00, 0x00, 0x00, 0x00, 0x6c, 0x68, 0x70, 0x78, 0x6c, 0x76, 0x00, 0x00, 0x00, 0x00, 0x00),
    'L': (0x00, 0x00, 0x00, 0x00, 0x00, 0x70, 0x60, 0x60, 0x60, 0x6c, 0x7c, 0x00, 0x00, 0x00, 0x00, 0x00),
    'M': (0x00, 0x00, 0x00, 0x00, 0x00, 0x44, 0x6c, 0x6c, 0x7c, 0x54, 0x54, 0x00, 0x00, 0x00, 0x00, 0x00),
    'N': (0x00, 0x00, 0x00, 0x00, 0x00, 0x6e, 0x74, 0x74, 0x6c, 0x6c, 0x64, 0x00, 0x00, 0x00, 0x00, 0x00),
    'O': (0x00, 0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x6c, 0x6c, 0x6c, 0x38, 0x00, 0x00, 0x00, 0x00, 0x00),
    'P': (0x00, 0x00, 0x00, 0x00, 0x00, 0x78, 0x6c, 0x6c, 0x78, 0x60, 0x70, 0x00, 0x00, 0x00, 0x00, 0x00),
    'Q': (0x00, 0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x6c, 0x6c, 0x6c, 0x38, 0x0c, 0x00, 0x00, 0x00, 0x00),
    'R': (0x00, 0x00, 0x00, 0x00, 0x00, 0x78, 0x6c, 0x6c, 0x78, 0x6c, 0x76, 0x00, 0x00, 0x00, 0x00, 0x00),
    'S': (0x00, 0x00, 0x00, 0x00, 0x00, 0x3c, 0x64, 0x78, 0x1c, 0x4c, 0x78, 0x00, 0x00, 0x00, 0x00, 0x00),
    'T': (0x00, 0x00, 0x00, 0x00, 0x00, 0x7c, 0x34, 0x30, 0x30, 0x30, 0x78, 0x00, 0x00, 0x00, 0x00, 0x00),
    'U': (0x00, 0x00, 0x00, 0x00, 0x00, 0x6e, 0x6c, 0x6c, 0x6c, 0x6c, 0x38, 0x00, 0x00, 0x00, 0x00, 0x00),
    'V': (0x00, 0x00, 0x00, 0x00, 0x00, 0x6e, 0x6c, 0x28, 0x38, 0x38, 0x10, 0x00, 0x00, 0x00, 0x00, 0x00),
    'W': (0x00, 0x00, 0x00, 0x00, 0x00, 0x56, 0x54, 0x54, 0x7c, 0x38, 0x28, 0x00, 0x00, 0x00, 0x00, 0x00),
    'X': (0x00, 0x00, 0x00, 0x00, 0x00, 0x66, 0x3c, 0x18, 0x18, 0x3c, 0x66, 0x00, 0x00, 0x00, 0x00, 0x00),
    'Y': (0x00, 0x00, 0x00, 0x00, 0x00, 0x66, 0x66, 0x3c, 0x18, 0x18, 0x3c, 0x00, 0x00, 0x00, 0x00, 0x00),
    'Z': (0x00, 0x00, 0x00, 0x00, 0x00, 0x7c, 0x6c, 0x18, 0x30, 0x6c, 0x7c, 0x00, 0x00, 0x00, 0x00, 0x00),
    '0': (0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x6c, 0x6c, 0x6c, 0x6c, 0x38, 0x00, 0x00, 0x00, 0x00, 0x00),
    '1': (0x00, 0x00, 0x00, 0x00, 0x18, 0x78, 0x18, 0x18, 0x18, 0x18, 0x7e, 0x00, 0x00, 0x00, 0x00, 0x00),
    '2': (0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x0c, 0x18, 0x30, 0x6c, 0x7c, 0x00, 0x00, 0x00, 0x00, 0x00),
    '3': (0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x0c, 0x38, 0x0c, 0x6c, 0x38, 0x00, 0x00, 0x00, 0x00, 0x00),
    '4': (0x00, 0x00, 0x00, 0x00, 0x0c, 0x1c, 0x2c, 0x6c, 0x7e, 0x0c, 0x0c, 0x00, 0x00, 0x00, 0x00, 0x00),
    '5': (0x00, 0x00, 0x00, 0x00, 0x7c, 0x60, 0x78, 0x6c, 0x0c, 0x4c, 0x78, 0x00, 0x00, 0x00, 0x00, 0x00),
    '6': (0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x60, 0x78, 0x6c, 0x6c, 0x38, 0x00, 0x00, 0x00, 0x00, 0x00),
    '7': (0x00, 0x00, 0x00, 0x00, 0x7c, 0x6c, 0x0c, 0x18, 0x18, 0x30, 0x30, 0x00, 0x00, 0x00, 0x00, 0x00),
    '8': (0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x6c, 0x38, 0x6c, 0x6c, 0x38, 0x00, 0x00, 0x00, 0x00, 0x00),
    '9': (0x00, 0x00, 0x00, 0x00, 0x38, 0x6c, 0x6c, 0x3c, 0x0c, 0x6c, 0x38, 0x00, 0x00, 0x00, 0x00, 0x00),
    '(': (0x00, 0x00, 0x00, 0x00, 0x08, 0x10, 0x30, 0x30, 0x30, 0x30, 0x10, 0x08, 0x00, 0x00, 0x00, 0x00),
    ')': (0x00, 0x00, 0x00, 0x00, 0x20, 0x10, 0x18, 0x18, 0x18, 0x18, 0x10, 0x20, 0x00, 0x00, 0x00, 0x00),
    ' ': (0,) * 16,
}

_BLANK = GLYPHS[" "]


def glyph_bitmap(ch: str) -> np.ndarray:
    rows = GLYPHS.get(ch, _BLANK)
    bits = np.unpackbits(np.asarray(rows, dtype=np.uint8)[:, None], axis=1)
    return bits.astype(bool)


def text_size(text: str, scale: int = 1) -> tuple[int, int]:
    return CELL_W * scale * len(text), CELL_H * scale


def text_mask(text: str, scale: int = 1) -> np.ndarray:
    """Boolean ``(16*scale, 8*scale*len(text))`` mask of the rendered string."""
    if not text:
        return np.zeros((CELL_H * scale, 0), dtype=bool)
    m = np.concatenate([glyph_bitmap(c) for c in text], axis=1)
    return np.kron(m, np.ones((scale, scale), dtype=bool)).astype(bool)


def draw_text(image: np.ndarray, x: int, y: int, text: str, scale: int, color) -> None:
    """Paint ``text`` into ``image`` (H, W, C) in place with top-left at (x, y); clipped."""
    m = text_mask(text, scale)
    H, W = image.shape[:2]
    mh, mw = m.shape
    y0, x0 = max(y, 0), max(x, 0)
    y1, x1 = min(y + mh, H), min(x + mw, W)
    if y1 <= y0 or x1 <= x0:
        return
    sub = m[y0 - y:y1 - y, x0 - x:x1 - x]
    image[y0:y1, x0:x1][sub] = color
