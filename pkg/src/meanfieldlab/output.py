"""CSV and manifest writing.

Floats are written with the shortest round-trip decimal representation so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr also for np.float64
    if isinstance(value, (int, str)):
        return str(value)
    try:
        return repr(float(value))
    except (TypeError, ValueError):
        return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(outdir, subcommand: str, config_dict: dict,
                   artifacts: dict, wall_time_s: float) -> Path:
    """Record the run: config echo, seed, per-artifact content hash, wall
    time.  The manifest itself is not part of the reproducibility contract
    (it carries the wall time)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "subcommand": subcommand,
        "master_seed": config_dict.get("master_seed"),
        "config": {k: fmt(v) if not isinstance(v, tuple)
                   else ",".join(fmt(x) for x in v)
                   for k, v in config_dict.items()},
        "artifacts": {str(Path(p).relative_to(outdir)): sha256_file(p)
                      for p in artifacts.values()},
        "wall_time_s": wall_time_s,
    }
    path = outdir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
