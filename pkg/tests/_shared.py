from __future__ import annotations

import functools
from pathlib import Path

from conjlab.scenario import load_file

GOLDEN = Path(__file__).parent / "golden" / "golden.json"


@functools.lru_cache(maxsize=None)
def scenario(name: str):
    """Shipped scenarios, loaded once per session."""
    return load_file(name)
