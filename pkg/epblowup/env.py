# python
"""
epblowup/env.py
Repository .env loading and EPBLOWUP_* defaults for command-line flags.
"""
import os
from functools import lru_cache
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

ENV_PREFIX = "EPBLOWUP_"


@lru_cache(maxsize=1)
def load_env() -> Path:
    """Read <repo>/.env once; its values win over the inherited environment."""
    dotenv_path = Path(__file__).resolve().parents[1] / ".env"
    load_dotenv(dotenv_path=dotenv_path, override=True)
    return dotenv_path


def env_default(name: str, fallback: Optional[str] = None) -> Optional[str]:
    """EPBLOWUP_<NAME>, or `fallback` when unset or blank."""
    load_env()
    value = os.getenv(ENV_PREFIX + name.upper())
    if value is None or not value.strip():
        return fallback
    return value.strip()
