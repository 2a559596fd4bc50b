from __future__ import annotations

import os
from pathlib import Path


_LOADED = False


def load_env() -> None:
    global _LOADED
    if _LOADED:
        return
    _LOADED = True

    base_dir = Path(__file__).resolve().parent
    # Project root .env first, then the working directory.
    candidates = [
        base_dir.parent / ".env",
        Path.cwd() / ".env",
    ]

    from dotenv import load_dotenv

    for path in candidates:
        if not path.exists():
            continue
        # Real environment variables win over .env entries.
        load_dotenv(dotenv_path=path, override=False)


def env_flag(name: str) -> bool:
    return (os.getenv(name) or "").strip() == "1"


def env_int(name: str, default: int) -> int:
    raw = (os.getenv(name) or "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


def env_path(name: str) -> Path | None:
    raw = (os.getenv(name) or "").strip()
    return Path(raw) if raw else None
