"""Deterministic JSON rendering and the run manifest.

All floating-point output is printed with 17 significant digits so that
re-runs diff cleanly; dict insertion order is preserved, which keeps the
byte stream stable for identical inputs.
"""

from __future__ import annotations

import hashlib
import json
import os


def _render(obj, out):
    if isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)))
            out.append(": ")
            _render(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _render(v, out)
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, float):
        out.append("%.17g" % obj)
    elif isinstance(obj, int):
        out.append(str(obj))
    else:
        out.append(json.dumps(str(obj)))


def to_json(obj) -> str:
    """Render with %.17g floats; stable bytes for identical inputs."""
    out = []
    _render(obj, out)
    return "".join(out)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as f:
        f.write(to_json(obj))
        f.write("\n")


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Manifest:
    """Inventory of one run: config echo, stage timings, emitted files."""

    def __init__(self, config_dict, version):
        self.data = {
            "version": version,
            "config": config_dict,
            "stages": [],
            "files": [],
        }
        self._seen = set()

    def add_stage(self, name, seconds):
        self.data["stages"].append({"name": name, "seconds": seconds})

    def add_file(self, path):
        name = os.path.basename(path)
        if name in self._seen:
            raise ValueError(f"file {name} already recorded in the manifest")
        self._seen.add(name)
        self.data["files"].append({"name": name, "sha256": sha256_file(path)})

    def write(self, out_dir):
        path = os.path.join(out_dir, "manifest.json")
        write_json(path, self.data)
        return path
