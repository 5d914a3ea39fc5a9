"""JSON cache keyed by SHA-256 of canonicalized config subsets."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def key_of(obj):
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def cache_root(explicit=None):
    if explicit:
        return Path(explicit)
    env = os.environ.get("QHL_CACHE")
    return Path(env) if env else None


def _path(root, kind, key):
    return Path(root) / kind / f"{key}.json"


def load(root, kind, key):
    p = _path(root, kind, key)
    if not p.exists():
        return None
    with open(p) as fh:
        return json.load(fh)


def store(root, kind, key, payload):
    p = _path(root, kind, key)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_suffix(".tmp")
    with open(tmp, "w") as fh:
        json.dump(payload, fh)
    os.replace(tmp, p)
