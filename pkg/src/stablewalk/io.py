"""Atomic file output and small serialization helpers.

Every artifact is written to a temporary file in the target directory and
then renamed into place, so readers never see a partially written file.
"""
import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np


def atomic_write_bytes(path, data):
    """Write ``data`` to ``path`` via temp-then-rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text):
    return atomic_write_bytes(path, text.encode("utf-8"))


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_csv(path, header, rows):
    return atomic_write_text(path, csv_text(header, rows))


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def json_text(obj):
    return json.dumps(obj, indent=1, sort_keys=True, default=_default) + "\n"


def write_json(path, obj):
    return atomic_write_text(path, json_text(obj))


def content_hash(obj, length=10):
    """Short stable hash of a JSON-serializable object."""
    blob = json.dumps(obj, sort_keys=True, default=_default).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:length]
