"""Readers and writers for the image and cost-volume formats.

PGM: 8-bit grayscale, binary (P5) or ASCII (P2); values map to [0, 1].
PFM: 32-bit float grayscale ("Pf"), rows stored bottom-up, negative scale
marking little-endian.
CVOL: little-endian binary cost volume -- magic "CVOL", u32 width, u32
height, u32 label-sample count, f64 gamma-min, f64 gamma-max, then
row-major f32 costs (pixel-major, label-minor).  A CSV alternative holds
one comma-separated row of costs per pixel.
"""

import struct

import numpy as np

from .dataterm import CostVolume
from .labels import GridShape


def read_pgm(path):
    """Read a P5/P2 PGM into a float image in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    # header tokens with '#' comments skipped; P5 payload starts after one
    # whitespace byte following the maxval token
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    magic = tokens[0].decode("ascii")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if magic not in ("P5", "P2"):
        raise ValueError(f"not a PGM file: magic {magic!r}")
    if not 0 < maxval <= 255:
        raise ValueError("only 8-bit PGM supported")
    n = width * height
    if magic == "P5":
        pos += 1  # single whitespace after maxval
        raw = np.frombuffer(data[pos : pos + n], dtype=np.uint8)
        if raw.size != n:
            raise ValueError("truncated PGM payload")
    else:
        vals = data[pos:].split()
        if len(vals) < n:
            raise ValueError("truncated PGM payload")
        raw = np.array([int(v) for v in vals[:n]], dtype=np.uint8)
    return raw.reshape(height, width).astype(np.float64) / maxval


def write_pgm(path, img, binary=True):
    """Write a [0, 1] float image as 8-bit PGM."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("expected a 2-D image")
    q = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(q.tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n255\n".encode("ascii"))
            body = "\n".join(" ".join(str(v) for v in row) for row in q)
            fh.write(body.encode("ascii") + b"\n")


def read_pfm(path):
    """Read a grayscale PFM ("Pf") into a float32 image (top-down rows)."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic == b"PF":
            raise ValueError("color PFM not supported (grayscale 'Pf' only)")
        if magic != b"Pf":
            raise ValueError(f"not a PFM file: magic {magic!r}")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        endian = "<" if scale < 0 else ">"
        payload = fh.read(width * height * 4)
    img = np.frombuffer(payload, dtype=endian + "f4").reshape(height, width)
    return np.flipud(img).astype(np.float32)


def write_pfm(path, img):
    """Write a float image as grayscale little-endian PFM (scale -1)."""
    img = np.asarray(img, dtype=np.float32)
    if img.ndim != 2:
        raise ValueError("expected a 2-D image")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(np.flipud(img).astype("<f4").tobytes())


def read_image(path):
    """Dispatch on extension: .pgm or .pfm, returning float64 arrays."""
    p = str(path).lower()
    if p.endswith(".pgm"):
        return read_pgm(path)
    if p.endswith(".pfm"):
        return read_pfm(path).astype(np.float64)
    raise ValueError(f"unsupported image format: {path}")


_CVOL_MAGIC = b"CVOL"


def write_cvol(path, vol):
    with open(path, "wb") as fh:
        fh.write(_CVOL_MAGIC)
        fh.write(
            struct.pack(
                "<IIIdd",
                vol.grid.width,
                vol.grid.height,
                vol.n_samples,
                vol.gamma_lo,
                vol.gamma_hi,
            )
        )
        fh.write(vol.costs.astype("<f4").tobytes())


def read_cvol(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CVOL_MAGIC:
            raise ValueError(f"not a CVOL file: magic {magic!r}")
        width, height, n, glo, ghi = struct.unpack("<IIIdd", fh.read(28))
        payload = fh.read(width * height * n * 4)
    costs = np.frombuffer(payload, dtype="<f4").reshape(width * height, n)
    return CostVolume(GridShape(width, height), glo, ghi, costs.astype(np.float64))


def write_cost_csv(path, vol):
    """CSV cost volume: one comma-separated row of costs per pixel."""
    np.savetxt(path, vol.costs.astype(np.float32), delimiter=",", fmt="%.9g")


def read_cost_csv(path, width, height, gamma_lo, gamma_hi):
    costs = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return CostVolume(GridShape(width, height), gamma_lo, gamma_hi, costs)
