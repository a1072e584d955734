"""Trajectory emission (CSV/JSON) and problem-file loading."""

import csv
import io as _io
import json
import os
import tempfile

import numpy as np

from .errors import ModelError
from .model import Trajectory, lq_spec_from_dict

FLOAT_FMT = "%.17g"


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


def trajectory_header(n: int, m: int):
    return (["k", "t"] + [f"q{i}" for i in range(n)] + [f"p{i}" for i in range(n)]
            + [f"u{i}" for i in range(m)] + ["H"])


def trajectory_csv(traj: Trajectory) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trajectory_header(traj.n, traj.m))
    for k in range(len(traj)):
        row = [str(k), _fmt(traj.t[k])] + [_fmt(x) for x in traj.q[k]] + [_fmt(x) for x in traj.p[k]]
        row += [_fmt(x) for x in traj.u[k]] + [_fmt(traj.H[k])]
        w.writerow(row)
    return buf.getvalue()


def trajectory_json(traj: Trajectory) -> str:
    # floats pass through repr, which round-trips exactly
    data = {
        "fields": trajectory_header(traj.n, traj.m),
        "n": traj.n,
        "m": traj.m,
        "k": list(range(len(traj))),
        "t": traj.t.tolist(),
        "q": traj.q.tolist(),
        "p": traj.p.tolist(),
        "u": traj.u.tolist(),
        "H": [None if np.isnan(h) else float(h) for h in traj.H],
        "meta": _jsonable(traj.meta),
    }
    return json.dumps(data, indent=1) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if not np.isfinite(x) else x
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, (int, bool, str)) or obj is None:
        return obj
    return str(obj)


def atomic_write(path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".sympocp-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_trajectory(traj: Trajectory, format: str = "csv", path=None) -> str:
    """Serialise ``traj``; written to ``path`` when given. Returns the text."""
    if format == "csv":
        text = trajectory_csv(traj)
    elif format == "json":
        text = trajectory_json(traj)
    else:
        raise ValueError(f"unknown format {format!r}")
    if path is not None:
        atomic_write(path, text)
    return text


def read_trajectory_csv(text: str) -> Trajectory:
    """Inverse of :func:`trajectory_csv`."""
    rows = list(csv.reader(_io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header[:2] != ["k", "t"] or header[-1] != "H":
        raise ValueError("not a trajectory CSV")
    n = sum(1 for c in header if c.startswith("q"))
    m = sum(1 for c in header if c.startswith("u"))
    if header != trajectory_header(n, m):
        raise ValueError("malformed trajectory header")
    data = np.array([[float(x) for x in r[1:]] for r in body]).reshape(len(body), 2 * n + m + 2)
    return Trajectory(data[:, 0], data[:, 1:1 + n], data[:, 1 + n:1 + 2 * n],
                      data[:, 1 + 2 * n:1 + 2 * n + m], data[:, -1])


def load_problem_file(path):
    """Parse a JSON problem file: ``{"type": "lq", ...}`` or ``{"type": "dhs-linear", ...}``."""
    from .dhs import LinearDHS

    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ModelError(f"{path}: expected a JSON object")
    kind = data.get("type")
    if kind == "lq":
        return lq_spec_from_dict(data)
    if kind == "dhs-linear":
        return LinearDHS.from_dict(data)
    raise ModelError(f"{path}: unknown problem type {kind!r}")
