"""CSV/JSON writers with a reproducible metadata header (no timestamps)."""

from __future__ import annotations

import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "" if math.isnan(x) else repr(x)
    if x is None:
        return ""
    return x


def meta_lines(command: str, config: dict) -> list[str]:
    return [
        f"toolkit: ssbounds {__version__}",
        f"command: {command}",
        "config: " + json.dumps(config, sort_keys=True),
    ]


def csv_text(columns, rows, meta: list[str] = ()) -> str:
    buf = io.StringIO()
    for line in meta:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_clean(x) for x in r])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialise {type(o)!r}")


def emit(text: str, path=None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def read_csv_meta(path) -> dict:
    """Recover the config echo from a file written by csv_text."""
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if line.startswith("# config: "):
                return json.loads(line[len("# config: "):])
    raise ValueError("no config line in header")
