"""Locate or download the MovieLens-100K ratings (``u.data``).

Lookup order: an explicit path, ``$CUPCF_DATA_DIR/ml-100k/u.data``,
``./data/ml-100k/u.data``.  :func:`fetch_ml100k` downloads the GroupLens
archive and, when that host is unreachable, falls back to the copy of
``u.data`` shipped inside the RecBole wheel on PyPI.
"""

from __future__ import annotations

import io
import logging
import os
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

log = logging.getLogger(__name__)

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
RECBOLE_SPEC = "recbole==1.2.1"
RECBOLE_MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"
ML100K_FILES = ["u.data"] + [f"u{i}.{p}" for i in range(1, 6) for p in ("base", "test")]


def data_dir():
    env = os.environ.get("CUPCF_DATA_DIR")
    return Path(env) if env else Path.cwd() / "data"


def find_ml100k(path=None):
    """Path to ``u.data`` if present, else None."""
    candidates = [Path(path)] if path else []
    candidates += [data_dir() / "ml-100k" / "u.data", Path.cwd() / "data" / "ml-100k" / "u.data"]
    for c in candidates:
        if c.is_file():
            return c
    return None


def _from_grouplens(dest, timeout):
    with urllib.request.urlopen(GROUPLENS_URL, timeout=timeout) as resp:
        blob = resp.read()
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        for name in ML100K_FILES:
            (dest / name).write_bytes(zf.read(f"ml-100k/{name}"))


def _from_recbole(dest, timeout):
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", RECBOLE_SPEC, "--no-deps", "-q", "-d", tmp],
            check=True, timeout=timeout,
        )
        wheel = next(Path(tmp).glob("recbole-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            lines = zf.read(RECBOLE_MEMBER).decode().splitlines()
    # the .inter file is u.data with a typed header row
    (dest / "u.data").write_text("\n".join(lines[1:]) + "\n")


def fetch_ml100k(dest=None, timeout=60):
    """Make sure ``dest/u.data`` exists and return its path."""
    dest = Path(dest) if dest else data_dir() / "ml-100k"
    target = dest / "u.data"
    if target.is_file():
        return target
    dest.mkdir(parents=True, exist_ok=True)
    try:
        _from_grouplens(dest, timeout)
        log.info("downloaded ML-100K from GroupLens into %s", dest)
    except Exception as exc:  # network policy varies; try the PyPI copy next
        log.info("GroupLens download failed (%s); trying the RecBole wheel", exc)
        _from_recbole(dest, timeout * 5)
        log.info("extracted ML-100K u.data from %s into %s", RECBOLE_SPEC, dest)
    return target


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    print(fetch_ml100k(sys.argv[1] if len(sys.argv) > 1 else None))
