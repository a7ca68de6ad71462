"""CSV writers shared by the dataclass exporters and the CLI."""

import csv
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

__all__ = ["write_csv", "write_run_meta"]


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in np.atleast_2d(np.asarray(rows, dtype=object)):
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def write_run_meta(outdir, config: dict, extra: dict | None = None) -> Path:
    """Write the reproducibility record (config, versions, platform, argv)."""
    from . import __version__
    from ._backend import BACKEND

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    meta = {
        "config": config,
        "versions": {
            "phycov": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "backend": BACKEND,
        },
        "platform": platform.platform(),
        "argv": sys.argv,
        "cwd": os.getcwd(),
    }
    if extra:
        meta.update(extra)
    path = outdir / "run_meta.json"
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, default=str)
    return path
