"""Small shared utilities: atomic file writes and stable float formatting."""

from __future__ import annotations

import os
from contextlib import contextmanager


@contextmanager
def atomic_write(path, mode: str = "w"):
    """Write to a temporary sibling file and rename into place on success.

    The target either keeps its previous content (on error) or appears fully
    written; readers never observe a half-written file.
    """
    path = os.fspath(path)
    parent = os.path.dirname(path) or "."
    os.makedirs(parent, exist_ok=True)
    tmp = f"{path}.tmp.{os.getpid()}"
    fh = open(tmp, mode, encoding=None if "b" in mode else "utf-8")
    try:
        yield fh
        fh.flush()
        os.fsync(fh.fileno())
        fh.close()
        os.replace(tmp, path)
    except BaseException:
        fh.close()
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def fmt(value: float) -> str:
    """Shortest exact decimal representation of a float (round-trips)."""
    return repr(float(value))
