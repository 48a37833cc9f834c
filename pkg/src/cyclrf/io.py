"""Atomic writers and the bundled readers for every artifact the CLI emits.

CSV files have one header row; numbers are written as the shortest decimal
string that round-trips (``repr``), so reruns are byte-identical.
``report.txt`` holds one ``key = value`` pair per line; list values are
comma-separated.
"""

import csv
import hashlib
import io
import json
import math
import os
import platform
import tempfile

import numpy as np


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return "none"
    if isinstance(x, (list, tuple, np.ndarray)):
        return ",".join(fmt(v) for v in x)
    return str(x)


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to a temporary file next to ``path`` and rename it into place."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "", "encoding": "utf-8"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt(v) for v in row])
    atomic_write(path, buf.getvalue())


def _parse(s):
    s = s.strip()
    low = s.lower()
    if low in ("true", "false"):
        return low == "true"
    if low == "none":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(path):
    """Return (header, rows) with numeric cells parsed back to int/float."""
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [[_parse(c) for c in row] for row in rd]
    return header, rows


def write_report(path, mapping):
    lines = [f"{k} = {fmt(v)}" for k, v in mapping.items()]
    atomic_write(path, "\n".join(lines) + "\n")


def read_report(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition(" = ")
            parts = val.split(",")
            out[key] = _parse(val) if len(parts) == 1 else [_parse(p) for p in parts]
    return out


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(outdir, *, command, config_path, seed, outputs, extra=None):
    import numpy
    import scipy
    import yaml

    from . import __version__

    manifest = {
        "command": command,
        "config": os.path.abspath(config_path),
        "config_sha256": sha256_file(config_path),
        "seed": seed,
        "outputs": sorted(outputs),
        "versions": {"cyclrf": __version__, "python": platform.python_version(), "numpy": numpy.__version__,
                     "scipy": scipy.__version__, "pyyaml": yaml.__version__},
    }
    if extra:
        manifest.update(extra)
    text = json.dumps(manifest, indent=2, sort_keys=True, default=lambda v: None if isinstance(v, float) and math.isnan(v) else str(v))
    atomic_write(os.path.join(outdir, "manifest.json"), text + "\n")


def read_manifest(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
