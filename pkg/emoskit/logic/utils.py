from __future__ import annotations

import zlib
from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import ExperimentError


def ensure_output_dir(path: Path | str) -> Path:
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExperimentError(f"cannot create output directory {directory}: {exc}", path=str(directory)) from exc
    if not directory.is_dir():
        raise ExperimentError(f"output path {directory} is not a directory", path=str(directory))
    return directory


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write with shortest round-trip float formatting."""
    try:
        frame.to_csv(path, index=False)
    except OSError as exc:
        raise ExperimentError(f"cannot write {path}: {exc}", path=str(path)) from exc
    return path


def stable_seed(*parts: int | str) -> np.random.SeedSequence:
    """Seed sequence from ints and strings, identical in every process."""
    entropy = [zlib.crc32(p.encode("utf-8")) if isinstance(p, str) else int(p) for p in parts]
    return np.random.SeedSequence(entropy)
