"""PGM images and row-major cost CSV files."""
import re

import numpy as np


class PGMError(ValueError):
    """Base class for PGM decoding failures."""


class UnsupportedFormatError(PGMError):
    pass


class MalformedHeaderError(PGMError):
    pass


class TruncatedDataError(PGMError):
    pass


_TOKEN = re.compile(rb"\s*(#[^\n]*\n\s*)*(\S+)")


def _header_tokens(data, count, start):
    tokens = []
    pos = start
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise MalformedHeaderError("header ends before width, height and maxval")
        tokens.append(m.group(2))
        pos = m.end()
    return tokens, pos


def read_pgm(path):
    """Raw integer pixels and maxval of a P2 or P5 file."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise UnsupportedFormatError(f"{path}: unsupported magic {magic!r} (need P2 or P5)")
    tokens, pos = _header_tokens(data, 3, 2)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise MalformedHeaderError(f"{path}: non-integer header field in {tokens!r}") from None
    if width < 1 or height < 1 or not 0 < maxval <= 65535:
        raise MalformedHeaderError(f"{path}: invalid header {width}x{height} maxval {maxval}")
    npix = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates header and raster
        raster = data[pos + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(raster) < npix * dtype.itemsize:
            raise TruncatedDataError(f"{path}: expected {npix} pixels, raster holds "
                                     f"{len(raster) // dtype.itemsize}")
        pixels = np.frombuffer(raster[:npix * dtype.itemsize], dtype=dtype).astype(np.int64)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(body) < npix:
            raise TruncatedDataError(f"{path}: expected {npix} pixels, found {len(body)}")
        try:
            pixels = np.array([int(v) for v in body[:npix]], dtype=np.int64)
        except ValueError:
            raise MalformedHeaderError(f"{path}: non-integer pixel value") from None
    if pixels.max(initial=0) > maxval:
        raise MalformedHeaderError(f"{path}: pixel value exceeds maxval {maxval}")
    return pixels.reshape(height, width), maxval


def load_pgm(path):
    """Grayscale image scaled to [0, 1] as ``value / maxval``."""
    pixels, maxval = read_pgm(path)
    return pixels.astype(np.float64) / maxval


def save_pgm(path, pixels, maxval=255):
    """Write integer pixels as binary P5."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if pixels.min(initial=0) < 0 or pixels.max(initial=0) > maxval:
        raise ValueError(f"pixel values must lie in [0, {maxval}]")
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(pixels.astype(dtype).tobytes())


def save_labels(path, labels, n_labels):
    """Label field as an 8-bit PGM with labels spread evenly over [0, 255]."""
    step = 255 // max(n_labels - 1, 1)
    save_pgm(path, np.asarray(labels, dtype=np.int64) * step, 255)


def load_cost_csv(path):
    """Cost field from a CSV whose first line is ``# rows,cols``."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing '# rows,cols' header")
    try:
        rows, cols = (int(v) for v in lines[0][1:].split(","))
    except ValueError:
        raise ValueError(f"{path}: malformed header {lines[0]!r}") from None
    values = [float(v) for ln in lines[1:] for v in ln.split(",")]
    if len(values) != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {len(values)}")
    return np.array(values).reshape(rows, cols)


def save_cost_csv(path, field):
    field = np.asarray(field, dtype=np.float64)
    rows, cols = field.shape
    with open(path, "w") as fh:
        fh.write(f"# {rows},{cols}\n")
        for row in field:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
