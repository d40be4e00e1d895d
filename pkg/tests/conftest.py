import sys
from pathlib import Path

# Allow running the suite from a source checkout without installing.
_ROOT = Path(__file__).resolve().parent.parent
_SRC = _ROOT / "src"
for entry in (str(_SRC), str(_ROOT)):
    if entry not in sys.path:
        sys.path.insert(0, entry)

import pytest

from tests.detrng import StreamRng


@pytest.fixture
def det_rng():
    return StreamRng(b"test-rng")
