# Add project root to sys.path so pytest can import the epblowup package
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))


@pytest.fixture
def write_conf(tmp_path: Path):
    """Write a run.conf into tmp_path, pointing [output] dir at tmp_path/out."""

    def _write(body: str, name: str = "run.conf") -> Path:
        path = tmp_path / name
        text = body.rstrip() + "\n"
        if "[output]" not in text:
            text += f"\n[output]\ndir = {tmp_path / 'out'}\n"
        path.write_text(text, encoding="utf-8")
        return path

    return _write
