"""Deterministic CSV and manifest emission for the experiment drivers.

All floats are written with 12 significant digits; reruns with an identical
resolved configuration produce byte-identical CSV bodies.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

__all__ = ["format_value", "write_csv", "Manifest"]


def format_value(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def write_csv(path, header, rows) -> str:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path.name


class Manifest:
    """Records the resolved config, emitted files and wall time of one run."""

    def __init__(self, out_dir, experiment, config):
        self.out_dir = Path(out_dir)
        self.experiment = experiment
        self.config = config
        self.files = []
        self.extras = {}
        self._t0 = time.monotonic()

    def add(self, name: str):
        self.files.append(name)
        return name

    def write(self):
        from . import __version__
        payload = {
            "experiment": self.experiment,
            "config": self.config,
            "version": __version__,
            "wall_time_s": round(time.monotonic() - self._t0, 3),
            "files": sorted(self.files),
        }
        payload.update(self.extras)
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path
