"""
Artifact Emission Module
Deterministic CSV tables and run manifests, written atomically.
"""
import logging
import os
import tempfile

import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _atomic_write(path: str, write) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, temporary = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as f:
            write(f)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.remove(temporary)
        raise


def emit_csv(table: pd.DataFrame, path: str) -> None:
    """
    Write a table with a header row, 17 significant digits and LF line endings.

    Args:
        table (pd.DataFrame): Columns in output order; may have no rows.
        path (str): Target file, replaced atomically.
    """
    _atomic_write(
        path,
        lambda f: table.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"),
    )
    logger.debug("wrote %d rows to %s", len(table), path)


def _format_value(value) -> str:
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    return str(value).replace("\n", " ")


def emit_manifest(manifest, path: str) -> None:
    """
    Write a manifest as `key = value` lines in insertion order.

    Args:
        manifest: RunManifest, or any object with an `entries()` mapping.
        path (str): Target file, replaced atomically.
    """
    lines = [f"{key} = {_format_value(value)}\n" for key, value in manifest.entries().items()]
    _atomic_write(path, lambda f: f.writelines(lines))
    logger.debug("wrote manifest to %s", path)
