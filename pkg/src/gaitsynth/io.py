"""File formats: PNG/PBM/PGM images, CSV tables, SVG plots.

Every writer goes through :func:`atomic_write` (temp file in the target
directory, then rename) so readers never observe a partial file. Output is
byte-deterministic for identical inputs.
"""

import csv
import io
import os
import tempfile
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from PIL import Image

from .errors import DataError, EmptyInput
from .features import SIZE, FeatureVector


def atomic_write(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# images


def encode_png(image):
    """PNG bytes of a uint8 grey (H, W) or RGB (H, W, 3) array, or a bool mask."""
    arr = np.asarray(image)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(arr.astype(np.uint8))).save(buf, format="PNG")
    return buf.getvalue()


def write_png(path, image):
    atomic_write(path, encode_png(image))


def read_png(path):
    with Image.open(path) as im:
        if im.mode in ("1", "L"):
            return np.asarray(im.convert("L"))
        return np.asarray(im.convert("RGB"))


def encode_pbm(mask):
    """Binary PBM (P4); 1 bits are foreground, rows padded to whole bytes."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    return f"P4\n{w} {h}\n".encode("ascii") + np.packbits(mask, axis=1).tobytes()


def encode_pgm(image):
    """8-bit PGM (P5) of a uint8 array."""
    arr = np.asarray(image, dtype=np.uint8)
    h, w = arr.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + arr.tobytes()


def _netpbm_tokens(data, count):
    tokens, pos = [], 0
    while len(tokens) < count:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos + 1


def decode_netpbm(data):
    """Decode P4 (to a bool mask) or P5 (to uint8)."""
    magic = data[:2]
    if magic == b"P4":
        (_, w, h), pos = _netpbm_tokens(data, 3)
        w, h = int(w), int(h)
        bits = np.frombuffer(data, dtype=np.uint8, offset=pos, count=h * ((w + 7) // 8))
        return np.unpackbits(bits.reshape(h, -1), axis=1)[:, :w].astype(bool)
    if magic == b"P5":
        (_, w, h, _), pos = _netpbm_tokens(data, 4)
        w, h = int(w), int(h)
        return np.frombuffer(data, dtype=np.uint8, offset=pos, count=w * h).reshape(h, w).copy()
    raise DataError("not a binary PBM/PGM file")


def write_mask(path, mask):
    """Write a mask as PBM or PNG depending on the file suffix."""
    path = Path(path)
    atomic_write(path, encode_pbm(mask) if path.suffix == ".pbm" else encode_png(mask))


def read_mask(path):
    path = Path(path)
    if path.suffix in (".pbm", ".pgm"):
        arr = decode_netpbm(path.read_bytes())
    else:
        arr = read_png(path)
        if arr.ndim == 3:
            arr = arr.max(axis=-1)
    return np.asarray(arr) > 0 if arr.dtype != bool else arr


def to_uint8(values):
    """Map [0, 1] floats to 0..255 rounding half-up."""
    return np.floor(np.clip(np.asarray(values, dtype=float), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def write_pgm(path, values):
    atomic_write(path, encode_pgm(to_uint8(values)))


# ---------------------------------------------------------------------------
# CSV


def fmt(x):
    """Shortest round-trip text for numbers; integers without a decimal point."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def encode_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def write_csv(path, header, rows):
    atomic_write(path, encode_csv(header, rows))


def read_csv(path, expected_header=None):
    """Rows of a CSV as dicts; checks the header when one is given."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInput(f"{path}: empty CSV file") from None
        if expected_header is not None and header != list(expected_header):
            raise DataError(f"{path}: expected header {','.join(expected_header)}")
        return [dict(zip(header, row)) for row in reader]


FEATURE_HEADER = ["label", "provenance", "kind", "aug_id"] + [f"v{i}" for i in range(SIZE)]


def write_features(path, vectors):
    rows = ([v.label, v.provenance, v.kind, v.aug_id] + list(v.values) for v in vectors)
    write_csv(path, FEATURE_HEADER, rows)


def read_features(path):
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FEATURE_HEADER:
            raise DataError(f"{path}: not a feature archive")
        for line, row in enumerate(reader, start=2):
            if len(row) != len(FEATURE_HEADER):
                raise DataError(f"{path}: line {line}: expected {len(FEATURE_HEADER)} fields")
            out.append(FeatureVector(np.array(row[4:], dtype=float), row[0], row[1], row[2],
                                     int(row[3])))
    return out


# ---------------------------------------------------------------------------
# SVG


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _n(x):
    return f"{x:.2f}"


def _svg(width, height, body):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n')
    return head + "".join(body) + "</svg>\n"


def _axes(body, x0, y0, x1, y1, yticks, ylabel, title):
    body.append(f'<text x="{_n((x0 + x1) / 2)}" y="{_n(y0 - 12)}" text-anchor="middle" '
                f'font-size="13">{escape(title)}</text>\n')
    body.append(f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>\n')
    body.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>\n')
    for v, y in yticks:
        body.append(f'<line x1="{x0 - 4}" y1="{_n(y)}" x2="{x0}" y2="{_n(y)}" stroke="black"/>\n')
        body.append(f'<text x="{x0 - 6}" y="{_n(y + 4)}" text-anchor="end">{v:.1f}</text>\n')
    body.append(f'<text x="14" y="{_n((y0 + y1) / 2)}" text-anchor="middle" '
                f'transform="rotate(-90 14 {_n((y0 + y1) / 2)})">{escape(ylabel)}</text>\n')


def line_plot_svg(series, xs, title="", xlabel="", ylabel="", width=560, height=360):
    """Lines with markers, one per ``(name, ys)`` in ``series``; y range [0, 1].

    ``xs`` are shared categorical positions (e.g. component counts).
    """
    x0, y0, x1, y1 = 60, 40, width - 170, height - 50
    ypos = lambda v: y1 - (y1 - y0) * v
    xpos = lambda i: x0 + (x1 - x0) * (i + 0.5) / len(xs)
    body = []
    _axes(body, x0, y0, x1, y1, [(v, ypos(v)) for v in np.linspace(0, 1, 6)], ylabel, title)
    for i, x in enumerate(xs):
        body.append(f'<text x="{_n(xpos(i))}" y="{y1 + 16}" text-anchor="middle">{escape(str(x))}</text>\n')
    body.append(f'<text x="{_n((x0 + x1) / 2)}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>\n')
    for s, (name, ys) in enumerate(series):
        color = _PALETTE[s % len(_PALETTE)]
        pts = " ".join(f"{_n(xpos(i))},{_n(ypos(v))}" for i, v in enumerate(ys))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>\n')
        for i, v in enumerate(ys):
            body.append(f'<circle cx="{_n(xpos(i))}" cy="{_n(ypos(v))}" r="3" fill="{color}"/>\n')
        ly = y0 + 18 * s
        body.append(f'<line x1="{x1 + 15}" y1="{ly}" x2="{x1 + 35}" y2="{ly}" stroke="{color}" '
                    f'stroke-width="2"/>\n')
        body.append(f'<text x="{x1 + 40}" y="{ly + 4}">{escape(str(name))}</text>\n')
    return _svg(width, height, body)


def box_plot_svg(stats, title="", ylabel="Jaccard index", width=None, height=360):
    """Box plots from rows of ``(name, min, q1, median, q3, max)``; y range [0, 1]."""
    width = width or max(320, 60 + 40 * len(stats) + 30)
    x0, y0, x1, y1 = 60, 40, width - 30, height - 50
    ypos = lambda v: y1 - (y1 - y0) * v
    step = (x1 - x0) / max(len(stats), 1)
    body = []
    _axes(body, x0, y0, x1, y1, [(v, ypos(v)) for v in np.linspace(0, 1, 6)], ylabel, title)
    for i, (name, lo, q1, med, q3, hi) in enumerate(stats):
        cx = x0 + step * (i + 0.5)
        half = min(12.0, step * 0.35)
        body.append(f'<line x1="{_n(cx)}" y1="{_n(ypos(hi))}" x2="{_n(cx)}" y2="{_n(ypos(lo))}" '
                    f'stroke="black"/>\n')
        body.append(f'<rect x="{_n(cx - half)}" y="{_n(ypos(q3))}" width="{_n(2 * half)}" '
                    f'height="{_n(ypos(q1) - ypos(q3))}" fill="#9ecae1" stroke="black"/>\n')
        body.append(f'<line x1="{_n(cx - half)}" y1="{_n(ypos(med))}" x2="{_n(cx + half)}" '
                    f'y2="{_n(ypos(med))}" stroke="#d62728" stroke-width="2"/>\n')
        body.append(f'<text x="{_n(cx)}" y="{y1 + 16}" text-anchor="middle">{escape(str(name))}</text>\n')
    return _svg(width, height, body)

