"""Run manifests: enough resolved state to re-run a command bit-identically.

Two runs of the same command over the same inputs produce manifests that
differ only in the `timestamp` field.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path


def sha256_of(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    path: str | Path,
    subcommand: str,
    config: dict,
    inputs: list[str | Path],
    seed: int | None = None,
) -> Path:
    from . import __version__

    manifest = {
        "subcommand": subcommand,
        "config": config,
        "inputs": {str(p): sha256_of(p) for p in sorted(str(x) for x in inputs)},
        "tool_version": __version__,
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def manifest_path_for(output: str | Path) -> Path:
    out = Path(output)
    return out.parent / (out.name + ".manifest.json")
