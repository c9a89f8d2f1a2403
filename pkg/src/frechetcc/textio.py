"""Line-oriented text format for samples of metric objects.

One object per line, tagged by its first token::

    E v1 v2 ...          Euclidean vector
    S v1 v2 ...          unit-sphere point
    P p a11 a12 ... app  SPD matrix, row-major
    Q v1 v2 ...          quantile function on the GRID levels

A ``GRID q1 q2 ...`` line must precede any ``Q`` line.  An optional
``METRIC name`` line selects the metric variant (``chordal``/``geodesic``
for spheres, ``log_cholesky``/``log_euclidean`` for SPD).  Blank lines and
text after ``#`` are ignored.  A file holds objects of a single kind.
"""

import numpy as np

from .errors import InvalidInputError, ParseError
from .metric_objects import SpaceDescriptor, as_points, check_points

_TAG_KIND = {"E": "euclidean", "S": "sphere", "P": "spd", "Q": "wasserstein"}
_KIND_TAG = {v: k for k, v in _TAG_KIND.items()}


def _floats(tokens, lineno, path):
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"not a number: {exc}", lineno, path) from None
    if not np.all(np.isfinite(vals)):
        raise ParseError("non-finite value", lineno, path)
    return vals


def parse_objects(text, path=None):
    """Parse a sample; returns ``(space, array)``."""
    grid = None
    metric = None
    kind = None
    rows = []
    first_line = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        tag = tok[0]
        if tag == "GRID":
            if grid is not None:
                raise ParseError("GRID given twice", lineno, path)
            if len(tok) < 2:
                raise ParseError("empty GRID", lineno, path)
            grid = np.asarray(_floats(tok[1:], lineno, path))
            continue
        if tag == "METRIC":
            if len(tok) != 2:
                raise ParseError("METRIC takes one name", lineno, path)
            metric = tok[1]
            continue
        if tag not in _TAG_KIND:
            raise ParseError(f"unknown tag {tag!r}", lineno, path)
        this = _TAG_KIND[tag]
        if kind is None:
            kind, first_line = this, lineno
        elif this != kind:
            raise ParseError(f"mixed object kinds ({kind} and {this})", lineno, path)
        if tag == "P":
            if len(tok) < 2:
                raise ParseError("missing matrix size", lineno, path)
            try:
                p = int(tok[1])
            except ValueError:
                raise ParseError(f"bad matrix size {tok[1]!r}", lineno, path) from None
            if p < 1 or len(tok) - 2 != p * p:
                raise ParseError(f"expected {p}x{p} = {p * p} entries", lineno, path)
            value = np.asarray(_floats(tok[2:], lineno, path)).reshape(p, p)
        else:
            if len(tok) < 2:
                raise ParseError("object has no values", lineno, path)
            if tag == "Q" and grid is None:
                raise ParseError("Q line before GRID header", lineno, path)
            value = np.asarray(_floats(tok[1:], lineno, path))
        if rows and value.shape != rows[0][1].shape:
            raise ParseError(
                f"shape {value.shape} differs from first object {rows[0][1].shape}",
                lineno, path,
            )
        rows.append((lineno, value))
    if not rows:
        raise ParseError("no objects in file", None, path)

    try:
        if kind == "euclidean":
            space = SpaceDescriptor.euclidean(rows[0][1].size)
        elif kind == "sphere":
            space = SpaceDescriptor.sphere(rows[0][1].size, metric or "chordal")
        elif kind == "spd":
            space = SpaceDescriptor.spd(rows[0][1].shape[0], metric or "log_cholesky")
        else:
            if grid.size != rows[0][1].size:
                raise ParseError(
                    f"GRID has {grid.size} levels, Q lines have {rows[0][1].size}",
                    first_line, path,
                )
            space = SpaceDescriptor.wasserstein(grid)
    except ParseError:
        raise
    except InvalidInputError as exc:
        raise ParseError(str(exc), first_line, path) from None

    arr = np.stack([v for _, v in rows])
    for lineno, value in rows:
        try:
            check_points(space, value[None])
        except InvalidInputError as exc:
            raise ParseError(str(exc), lineno, path) from None
    return space, arr


def read_objects(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError:
        raise ParseError("file is not UTF-8 text", None, path) from None
    return parse_objects(text, path)


def _fmt(values):
    return " ".join(repr(float(v)) for v in np.asarray(values).reshape(-1))


def format_objects(space, objects):
    """Render a sample in the text format (round-trips exactly)."""
    arr = as_points(space, objects)
    lines = []
    if space.kind == "wasserstein":
        lines.append("GRID " + _fmt(space.grid_array))
    if space.kind in ("sphere", "spd"):
        lines.append(f"METRIC {space.metric}")
    tag = _KIND_TAG[space.kind]
    for value in arr:
        if space.kind == "spd":
            lines.append(f"P {value.shape[0]} " + _fmt(value))
        else:
            lines.append(f"{tag} " + _fmt(value))
    return "\n".join(lines) + "\n"


def write_objects(path, space, objects):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_objects(space, objects))
