"""Deterministic JSON and file emission.

Floats are written with 17 significant digits so every value round-trips
exactly; non-finite floats become ``null``.  Object keys keep insertion
order, which the report builders fix, so equal inputs give equal bytes.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os

import numpy as np


def _float(v):
    v = float(v)
    if not math.isfinite(v):
        return "null"
    text = "%.17g" % v
    # keep floats recognisable as floats when they happen to be integral
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def _emit(obj, out, indent, level):
    if obj is None or obj is True or obj is False:
        out.append(json.dumps(obj))
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out, indent, level)
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        _emit(obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj), out, indent, level)
    elif hasattr(obj, "to_dict"):
        _emit(obj.to_dict(), out, indent, level)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        pad, inner = "\n" + " " * (indent * level), "\n" + " " * (indent * (level + 1))
        out.append("{")
        for k, (key, val) in enumerate(obj.items()):
            out.append(("," if k else "") + inner + json.dumps(str(key), ensure_ascii=False) + ": ")
            _emit(val, out, indent, level + 1)
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            out.append("[" + ", ".join(_float(v) if isinstance(v, (float, np.floating)) else str(int(v))
                                       for v in obj) + "]")
            return
        pad, inner = "\n" + " " * (indent * level), "\n" + " " * (indent * (level + 1))
        out.append("[")
        for k, val in enumerate(obj):
            out.append(("," if k else "") + inner)
            _emit(val, out, indent, level + 1)
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=1):
    out = []
    _emit(obj, out, indent, 0)
    return "".join(out) + "\n"


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


class Emitter:
    """Single writer for one output directory; records what it wrote."""

    def __init__(self, root):
        self.root = os.path.abspath(root)
        self.files = []
        os.makedirs(self.root, exist_ok=True)

    def write_text(self, rel, text):
        path = os.path.join(self.root, rel)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        data = text.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(data)
        self.files.append({"path": rel.replace(os.sep, "/"), "bytes": len(data), "sha256": sha256_bytes(data)})
        return path

    def write_json(self, rel, obj):
        return self.write_text(rel, dumps(obj))

    def write_tree(self, subdir, files):
        for name in sorted(files):
            self.write_text(os.path.join(subdir, name), files[name])
