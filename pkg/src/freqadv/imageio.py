"""Image file I/O: 8-bit PGM/PPM for inspection, lossless float FIMG.

Arrays are planar (C, H, W) float64 in [0, 1] (FIMG tolerates any float
values; the 8-bit formats clip before quantizing).
"""

from __future__ import annotations

import numpy as np


class ImageFormatError(ValueError):
    pass


def _as_planar(image):
    x = np.asarray(image, dtype=np.float64)
    if x.ndim == 2:
        x = x[None, :, :]
    if x.ndim != 3 or x.shape[0] not in (1, 3):
        raise ImageFormatError(f"expected (C, H, W) with C in {{1, 3}}, got {x.shape}")
    return x


def write_fimg(path, image):
    x = _as_planar(image)
    c, h, w = x.shape
    with open(path, "wb") as f:
        f.write(f"FIMG {h} {w} {c}\n".encode("ascii"))
        f.write(x.astype("<f4").tobytes())


def read_fimg(path):
    with open(path, "rb") as f:
        header = f.readline().decode("ascii", errors="replace").split()
        if len(header) != 4 or header[0] != "FIMG":
            raise ImageFormatError(f"bad FIMG header in {path}")
        h, w, c = (int(t) for t in header[1:])
        payload = f.read(4 * h * w * c)
        if len(payload) != 4 * h * w * c:
            raise ImageFormatError(f"truncated FIMG payload in {path}")
        data = np.frombuffer(payload, dtype="<f4")
    return data.reshape(c, h, w).astype(np.float64)


def write_pnm(path, image):
    """Write PGM (P5) for 1 channel or PPM (P6) for 3 channels."""
    x = _as_planar(image)
    c, h, w = x.shape
    q = np.clip(np.rint(np.clip(x, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    magic = b"P5" if c == 1 else b"P6"
    with open(path, "wb") as f:
        f.write(magic + f"\n{w} {h}\n255\n".encode("ascii"))
        if c == 1:
            f.write(q[0].tobytes())
        else:
            f.write(np.moveaxis(q, 0, 2).tobytes())  # interleave RGB


def _read_pnm_tokens(f, count):
    # tokens may be separated by whitespace and '#' comments
    tokens = []
    while len(tokens) < count:
        line = f.readline()
        if not line:
            raise ImageFormatError("unexpected end of PNM header")
        line = line.split(b"#", 1)[0]
        tokens.extend(line.split())
    return tokens


def read_pnm(path):
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic not in (b"P5", b"P6"):
            raise ImageFormatError(f"unsupported PNM magic {magic!r} in {path}")
        w, h, maxval = (int(t) for t in _read_pnm_tokens(f, 3))
        if maxval != 255:
            raise ImageFormatError(f"only maxval 255 supported, got {maxval}")
        c = 1 if magic == b"P5" else 3
        data = np.frombuffer(f.read(h * w * c), dtype=np.uint8)
        if data.size != h * w * c:
            raise ImageFormatError(f"truncated PNM payload in {path}")
    if c == 1:
        x = data.reshape(1, h, w)
    else:
        x = np.moveaxis(data.reshape(h, w, 3), 2, 0)
    return x.astype(np.float64) / 255.0


def read_image(path):
    """Dispatch on extension: .fimg / .pgm / .ppm."""
    p = str(path)
    if p.endswith(".fimg"):
        return read_fimg(p)
    if p.endswith(".pgm") or p.endswith(".ppm"):
        return read_pnm(p)
    raise ImageFormatError(f"unrecognized image extension: {p}")
