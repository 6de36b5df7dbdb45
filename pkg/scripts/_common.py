"""Shared helpers for the experiment scripts: dataclass configs as argparse flags."""

import argparse
import csv
import dataclasses
import sys


def parse_config(cls, description: str, argv=None):
    """Build an argparse parser from a dataclass with defaults and return an instance."""
    p = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cls):
        flag = "--" + f.name.replace("_", "-")
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if isinstance(default, bool):
            p.add_argument(flag, action="store_true", default=default)
        elif isinstance(default, tuple):
            kind = type(default[0]) if default else str
            p.add_argument(flag, type=kind, nargs="+", default=list(default))
        else:
            p.add_argument(flag, type=type(default) if default is not None else str, default=default)
    ns = p.parse_args(argv)
    values = {f.name: getattr(ns, f.name) for f in dataclasses.fields(cls)}
    return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in values.items()})


def emit(rows, columns, path=None):
    """Print rows as an aligned table, and as CSV when ``path`` is given."""
    widths = [max(len(c), *(len(_fmt(r[c])) for r in rows)) for c in columns]
    print("  ".join(c.rjust(w) for c, w in zip(columns, widths)))
    for r in rows:
        print("  ".join(_fmt(r[c]).rjust(w) for c, w in zip(columns, widths)))
    if path:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
            w.writeheader()
            w.writerows(rows)
    sys.stdout.flush()


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)
