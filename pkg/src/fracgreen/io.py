"""Report serialization: atomic writes, stable JSON, 17-digit CSV."""
from datetime import datetime, timezone
import io
import json
import math
import os
import tempfile
from importlib import resources

import numpy as np

from . import __version__

__all__ = ["SCHEMA_VERSION", "atomic_write", "dump_json", "write_json", "write_csv", "envelope", "load_schema"]

SCHEMA_VERSION = "1.0"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def envelope(schema, payload, seed=None):
    """Wrap a payload with schema id/version; the timestamp lives only in ``metadata``."""
    return {
        "schema": schema,
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "metadata": {
            "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "package_version": __version__,
        },
        **payload,
    }


def write_json(path, obj):
    atomic_write(path, dump_json(obj))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    atomic_write(path, buf.getvalue())


def load_schema(name):
    """Load a shipped JSON schema by file stem, e.g. ``'solve_report'``."""
    text = resources.files("fracgreen.schemas").joinpath(f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
