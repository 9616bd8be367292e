"""Binary 8-bit PGM (P5) reading and writing."""

from __future__ import annotations

import os

import numpy as np

from ._validation import check_image
from .exceptions import FormatError

_WHITESPACE = b" \t\r\n\v\f"


def _header_tokens(data: bytes, count: int):
    """Pull ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the single whitespace byte that
    terminates the last one.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos >= n:
            raise FormatError("truncated PGM header")
        if data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        tokens.append(data[start:pos])
    if pos >= n or data[pos] not in _WHITESPACE:
        raise FormatError("PGM header must end with a single whitespace byte")
    return tokens, pos + 1


def load_pgm(path) -> np.ndarray:
    """Read a P5 image with maxval 255 and return intensities ``v / 255``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise FormatError(f"{os.fspath(path)}: not a binary PGM (P5) file")
    tokens, offset = _header_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"{os.fspath(path)}: non-numeric PGM header field") from exc
    if width <= 0 or height <= 0:
        raise FormatError(f"{os.fspath(path)}: invalid dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{os.fspath(path)}: only 8-bit PGM (maxval 255) is supported, got {maxval}")
    payload = data[offset : offset + width * height]
    if len(payload) < width * height:
        raise FormatError(
            f"{os.fspath(path)}: truncated payload ({len(payload)} of {width * height} bytes)"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return pixels.astype(np.float64) / 255.0


def quantize(img) -> np.ndarray:
    """8-bit codes for ``img``: ``floor(255 v + 0.5)`` clipped to ``[0, 255]``."""
    img = check_image(img)
    return np.clip(np.floor(img * 255.0 + 0.5), 0, 255).astype(np.uint8)


def save_pgm(img, path) -> None:
    codes = quantize(img)
    height, width = codes.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (width, height))
        fh.write(codes.tobytes())
