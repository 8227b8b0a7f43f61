"""Reading and writing point clouds as ``.xyz`` text and ``.ply``.

PLY support covers ``ascii 1.0`` and ``binary_little_endian 1.0`` with a
``vertex`` element; properties other than x/y/z are skipped on input.
Output floats use 17 significant digits so they survive a round trip.
"""

import os
import tempfile
from pathlib import Path

import numpy as np

from .cloud import NOISE, REAL, PointCloud
from .errors import EmptyInputError, ParameterError, ParseError

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

FORMATS = ("xyz", "ply-ascii", "ply-binary-le")

BLUE = (0, 0, 255)
RED = (255, 0, 0)
YELLOW = (255, 255, 0)
WHITE = (255, 255, 255)


def _infer_format(path, fmt):
    if fmt is not None:
        if fmt not in FORMATS + ("ply",):
            raise ParameterError(f"unknown format {fmt!r}; expected one of {FORMATS}")
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix in (".xyz", ".txt", ".pts"):
        return "xyz"
    if suffix == ".ply":
        return "ply"
    raise ParameterError(f"cannot infer cloud format from {path!r}")


def load_cloud(path, format=None):
    """Load a point cloud.

    Parameters
    ----------
    path : str or Path
    format : {"xyz", "ply-ascii", "ply-binary-le"}, optional
        Inferred from the extension when omitted; for ``.ply`` the header
        decides between ascii and binary.

    Raises
    ------
    ParseError
        Malformed header or rows, with the line number or byte offset.
    EmptyInputError
        The file holds no points.
    """
    fmt = _infer_format(path, format)
    if fmt == "xyz":
        cloud = _load_xyz(path)
    else:
        cloud = _load_ply(path, expect=None if fmt == "ply" else fmt)
    if len(cloud) == 0:
        raise EmptyInputError(f"{path}: cloud has no points")
    return cloud


def _load_xyz(path):
    rows = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 3:
                raise ParseError(f"{path}:{lineno}: expected 'x y z', got {line!r}", path, line=lineno)
            try:
                rows.append([float(p) for p in parts[:3]])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value in {line!r}", path, line=lineno) from None
    return PointCloud(np.array(rows, dtype=float).reshape(-1, 3))


def _read_header(fh, path):
    first = fh.readline()
    if first.strip() != b"ply":
        raise ParseError(f"{path}: missing 'ply' magic", path, line=1, offset=0)
    fmt = None
    elements = []
    lineno = 1
    while True:
        raw = fh.readline()
        lineno += 1
        if not raw:
            raise ParseError(f"{path}: header has no end_header", path, line=lineno, offset=fh.tell())
        words = raw.decode("ascii", errors="replace").split()
        if not words or words[0] in ("comment", "obj_info"):
            continue
        key = words[0]
        if key == "end_header":
            return fmt, elements, lineno
        if key == "format":
            if len(words) != 3:
                raise ParseError(f"{path}:{lineno}: bad format line", path, line=lineno)
            fmt = words[1]
        elif key == "element":
            if len(words) != 3 or not words[2].isdigit():
                raise ParseError(f"{path}:{lineno}: bad element line", path, line=lineno)
            elements.append((words[1], int(words[2]), []))
        elif key == "property":
            if not elements:
                raise ParseError(f"{path}:{lineno}: property before element", path, line=lineno)
            if words[1] == "list":
                if len(words) != 5 or words[2] not in _PLY_TYPES or words[3] not in _PLY_TYPES:
                    raise ParseError(f"{path}:{lineno}: bad list property", path, line=lineno)
                elements[-1][2].append((words[4], "list", words[2], words[3]))
            else:
                if len(words) != 3 or words[1] not in _PLY_TYPES:
                    raise ParseError(f"{path}:{lineno}: bad property line", path, line=lineno)
                elements[-1][2].append((words[2], _PLY_TYPES[words[1]]))
        else:
            raise ParseError(f"{path}:{lineno}: unknown header keyword {key!r}", path, line=lineno)


def _load_ply(path, expect=None):
    with open(path, "rb") as fh:
        fmt, elements, header_lines = _read_header(fh, path)
        body_offset = fh.tell()
        body = fh.read()
    if fmt == "binary_big_endian":
        raise ParseError(f"{path}: binary_big_endian PLY is not supported", path)
    if fmt not in ("ascii", "binary_little_endian"):
        raise ParseError(f"{path}: unsupported PLY format {fmt!r}", path)
    if expect == "ply-ascii" and fmt != "ascii" or expect == "ply-binary-le" and fmt != "binary_little_endian":
        raise ParseError(f"{path}: header says {fmt}, expected {expect}", path)

    names = [e[0] for e in elements]
    if "vertex" not in names:
        raise ParseError(f"{path}: no vertex element", path)
    vi = names.index("vertex")
    _, count, props = elements[vi]
    prop_names = [p[0] for p in props]
    for axis in "xyz":
        if axis not in prop_names:
            raise ParseError(f"{path}: vertex element lacks property {axis!r}", path)
    if any(p[1] == "list" for p in props):
        raise ParseError(f"{path}: list properties on vertices are not supported", path)
    has_label = "label" in prop_names

    if fmt == "ascii":
        return _parse_ply_ascii(path, body, elements[:vi], count, prop_names, header_lines, has_label)
    for name, n, eprops in elements[:vi]:
        if any(p[1] == "list" for p in eprops):
            raise ParseError(f"{path}: list-valued element {name!r} precedes vertices", path)
        size = n * np.dtype([(p[0], "<" + p[1]) for p in eprops]).itemsize
        body = body[size:]
        body_offset += size
    dtype = np.dtype([(p[0], "<" + p[1]) for p in props])
    need = count * dtype.itemsize
    if len(body) < need:
        got = len(body) // dtype.itemsize
        raise ParseError(
            f"{path}: truncated binary PLY at byte offset {body_offset + got * dtype.itemsize}: "
            f"{count} vertices declared, {got} complete",
            path,
            offset=body_offset + got * dtype.itemsize,
        )
    rec = np.frombuffer(body, dtype=dtype, count=count)
    pts = np.column_stack([rec["x"], rec["y"], rec["z"]]).astype(float)
    labels = rec["label"].astype(np.int8) if has_label else None
    return PointCloud(pts, labels)


def _parse_ply_ascii(path, body, before, count, prop_names, header_lines, has_label):
    lines = body.decode("ascii", errors="replace").splitlines()
    skip = sum(n for _, n, _ in before)
    ix, iy, iz = (prop_names.index(a) for a in "xyz")
    il = prop_names.index("label") if has_label else None
    pts = np.empty((count, 3))
    labels = np.empty(count, dtype=np.int8) if has_label else None
    for r in range(count):
        lineno = header_lines + skip + r + 1
        if skip + r >= len(lines):
            raise ParseError(f"{path}:{lineno}: expected {count} vertices, file ends", path, line=lineno)
        words = lines[skip + r].split()
        if len(words) < len(prop_names):
            raise ParseError(f"{path}:{lineno}: vertex row has {len(words)} values", path, line=lineno)
        try:
            pts[r] = float(words[ix]), float(words[iy]), float(words[iz])
            if has_label:
                labels[r] = int(words[il])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-numeric vertex value", path, line=lineno) from None
    return PointCloud(pts, labels)


def _atomic_write(path, data):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _ply_text(points, colors=None, labels=None):
    n = len(points)
    head = ["ply", "format ascii 1.0", f"element vertex {n}",
            "property double x", "property double y", "property double z"]
    if colors is not None:
        head += ["property uchar red", "property uchar green", "property uchar blue"]
    if labels is not None:
        head.append("property uchar label")
    head.append("end_header")
    rows = []
    for i in range(n):
        row = " ".join(f"{v:.17g}" for v in points[i])
        if colors is not None:
            row += " %d %d %d" % tuple(colors[i])
        if labels is not None:
            row += f" {int(labels[i])}"
        rows.append(row)
    return "\n".join(head + rows) + "\n"


def save_cloud(cloud, path, format=None):
    """Write a cloud as ``.xyz`` or ascii ``.ply`` (labels kept in PLY)."""
    fmt = _infer_format(path, format)
    if fmt == "xyz":
        text = "".join(" ".join(f"{v:.17g}" for v in p) + "\n" for p in cloud.points)
    elif fmt in ("ply", "ply-ascii"):
        text = _ply_text(cloud.points, labels=cloud.labels)
    else:
        raise ParameterError("only ascii PLY output is supported")
    _atomic_write(path, text.encode("ascii"))


def classify_colors(n, kept, truth=None):
    """Vertex selection and colors for a classified export.

    Returns ``(indices, colors)``. With ground truth: kept real points are
    blue, kept noise red, removed real yellow, removed noise omitted.
    Without it, kept points are white and removed points omitted.
    """
    kept_mask = np.zeros(n, dtype=bool)
    kept_mask[np.asarray(kept, dtype=np.intp)] = True
    if truth is None:
        idx = np.flatnonzero(kept_mask)
        return idx, np.tile(WHITE, (len(idx), 1))
    truth = np.asarray(truth)
    real = truth == REAL
    colors = np.zeros((n, 3), dtype=int)
    colors[kept_mask & real] = BLUE
    colors[kept_mask & (truth == NOISE)] = RED
    colors[~kept_mask & real] = YELLOW
    idx = np.flatnonzero(kept_mask | real)
    return idx, colors[idx]


def save_classified(cloud, kept, path, truth=None):
    """Write a colored PLY showing which points a denoiser kept."""
    kept = np.asarray(kept, dtype=np.intp)
    if kept.size and (kept.min() < 0 or kept.max() >= len(cloud)):
        raise ParameterError("kept indices fall outside the cloud")
    if truth is None:
        truth = cloud.labels
    idx, colors = classify_colors(len(cloud), kept, truth)
    _atomic_write(path, _ply_text(cloud.points[idx], colors=colors).encode("ascii"))


def load_labels(path):
    """Per-line ground truth: ``real``/``noise`` or ``0``/``1``."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            word = line.strip().lower()
            if not word:
                continue
            if word in ("real", "0"):
                out.append(REAL)
            elif word in ("noise", "1"):
                out.append(NOISE)
            else:
                raise ParseError(f"{path}:{lineno}: bad label {word!r}", path, line=lineno)
    return np.array(out, dtype=np.int8)
