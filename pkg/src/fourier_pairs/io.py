"""File formats: grid-function CSV + JSON sidecar, node-set JSON, measure JSON.

Every write goes through a temporary file in the target directory followed by
an atomic rename.  Floats are written with 17 significant digits so values
round-trip bit-exactly.
"""

import csv
import hashlib
import io
import json
import math
import os
import tempfile

import numpy as np

from .errors import InputError, ParameterError
from .nodes import NodeSequence
from .spectral import Grid, GridFunction

FLOAT_FMT = "%.17g"


def atomic_write_text(path, text):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    return obj


def dumps(obj, indent=2):
    return json.dumps(_clean(obj), indent=indent, sort_keys=True) + "\n"


def write_json(path, obj, indent=2):
    atomic_write_text(path, dumps(obj, indent))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def input_hashes(paths):
    return {os.path.basename(p): file_sha256(p) for p in paths if p}


# --- grid functions -------------------------------------------------------------

def _sidecar(path):
    root, _ = os.path.splitext(os.fspath(path))
    return root + ".json"


def write_grid_function(path, f, side="space"):
    """CSV with header x,re,im (or xi,re,im) plus a JSON sidecar with the grid."""
    if side == "space":
        coords, vals, head = f.grid.x, f.space_values, "x"
    elif side == "freq":
        if f.freq_values is None:
            raise ParameterError("grid function has no frequency samples")
        coords, vals, head = f.grid.xi, f.freq_values, "xi"
    else:
        raise ParameterError("side must be 'space' or 'freq'")
    buf = io.StringIO()
    buf.write(f"{head},re,im\n")
    for c, v in zip(coords, vals):
        buf.write(f"{FLOAT_FMT % c},{FLOAT_FMT % v.real},{FLOAT_FMT % v.imag}\n")
    atomic_write_text(path, buf.getvalue())
    write_json(_sidecar(path), {"grid": f.grid.to_dict(), "side": side})


def read_grid_function(path):
    """Read a CSV written by write_grid_function; the transform is recomputed."""
    meta = read_json(_sidecar(path))
    g = meta["grid"]
    grid = Grid(float(g["half_width"]), int(g["size"]))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head = rows[0]
    if head[1:] != ["re", "im"] or head[0] not in ("x", "xi"):
        raise InputError(f"unexpected CSV header {head}")
    data = np.array(rows[1:], float)
    if data.shape[0] != grid.size:
        raise InputError("row count does not match the grid")
    vals = data[:, 1] + 1j * data[:, 2]
    if head[0] == "x":
        return GridFunction.from_space(grid, vals, alias_tol=1.0)
    return GridFunction.from_freq(grid, vals, alias_tol=1.0)


# --- node sets -----------------------------------------------------------------

def nodes_to_dict(lam, mu=None):
    d = {"p": lam.exponent, "lambda": lam.points.tolist(),
         "truncation_radius": lam.truncation_radius}
    if mu is not None:
        d.update({"q": mu.exponent, "mu": mu.points.tolist(),
                  "truncation_radius": min(lam.truncation_radius, mu.truncation_radius)})
    else:
        d.update({"q": lam.exponent / (lam.exponent - 1), "mu": []})
    return d


def write_nodes(path, lam, mu=None, indent=2):
    write_json(path, nodes_to_dict(lam, mu), indent)


def nodes_from_dict(d):
    try:
        p = float(d["p"])
        q = float(d.get("q", p / (p - 1)))
        R = d.get("truncation_radius")
        lam = NodeSequence(np.asarray(d["lambda"], float), p, R)
        mu_pts = d.get("mu") or []
        mu = NodeSequence(np.asarray(mu_pts, float), q, R) if len(mu_pts) else None
    except KeyError as exc:
        raise InputError(f"node file lacks field {exc}") from None
    return lam, mu


def read_nodes(path):
    return nodes_from_dict(read_json(path))
