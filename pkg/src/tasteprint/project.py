"""Project-directory persistence shared by the CLI and the HTTP service.

Artifacts are plain files; JSON is always written through dump_json so the
two entry points produce byte-identical documents. Writes go through a
temp-file rename, so readers never observe a half-written document.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

DEFAULT_PROJECT_DIR = "tasteprint-project"
PROJECT_DIR_ENV = "TASTEPRINT_PROJECT_DIR"


def dump_json(doc) -> str:
    """Canonical JSON used for every artifact and API document."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
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


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str | Path, doc) -> None:
    atomic_write_text(path, dump_json(doc))


def read_json(path: str | Path):
    return json.loads(Path(path).read_text())


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def resolve_project_dir(explicit: str | None = None) -> Path:
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(PROJECT_DIR_ENV, DEFAULT_PROJECT_DIR))
