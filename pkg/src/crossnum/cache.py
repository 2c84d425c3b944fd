"""Small on-disk cache (JSON and ``.npz``) with atomic writes."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import zipfile
from pathlib import Path

import numpy as np

from . import __version__

log = logging.getLogger(__name__)


def cache_key(kind: str, **fields) -> str:
    payload = json.dumps({"kind": kind, "version": __version__, **fields}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class DiskCache:
    def __init__(self, root: str | os.PathLike | None):
        self.root = Path(root) if root else None

    def path(self, kind: str, suffix: str = ".json", **fields) -> Path | None:
        if self.root is None:
            return None
        return self.root / f"{kind}-{cache_key(kind, **fields)}{suffix}"

    @staticmethod
    def _discard(p: Path, exc) -> None:
        log.warning("corrupt cache entry %s (%s); deleting and rebuilding", p, exc)
        try:
            p.unlink()
        except OSError:
            pass

    def load(self, kind: str, **fields):
        p = self.path(kind, **fields)
        if p is None or not p.exists():
            return None
        try:
            return json.loads(p.read_text())
        except (OSError, ValueError) as exc:
            self._discard(p, exc)
            return None

    def load_arrays(self, kind: str, **fields) -> dict | None:
        p = self.path(kind, ".npz", **fields)
        if p is None or not p.exists():
            return None
        try:
            with np.load(p, allow_pickle=False) as data:
                return {k: data[k] for k in data.files}
        except (OSError, ValueError, EOFError, KeyError, zipfile.BadZipFile) as exc:
            self._discard(p, exc)
            return None

    def store_arrays(self, kind: str, arrays: dict, **fields) -> None:
        p = self.path(kind, ".npz", **fields)
        if p is None:
            return
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=".tmp-", suffix=".npz")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.savez(fh, **arrays)
            os.replace(tmp, p)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def store(self, kind: str, obj, **fields) -> None:
        p = self.path(kind, **fields)
        if p is not None:
            atomic_write_text(p, json.dumps(obj, sort_keys=True))
