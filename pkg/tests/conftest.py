import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from ptnorm.app.tools.model_tools import GptParams, OscillatorParams, ScarfParams, StateLabel  # noqa: E402

TOL = 1e-10


@pytest.fixture
def tol():
    return TOL


@pytest.fixture
def oscillator():
    return OscillatorParams(alpha=0.3, c=1.0)


@pytest.fixture
def gpt():
    return GptParams(A=2.3, B=3.1, gamma=0.2)


@pytest.fixture
def scarf():
    return ScarfParams(A=2.2, B=1.9)


@pytest.fixture
def six_labels():
    return [StateLabel(q=q, n=n) for n in range(3) for q in (1, -1)]


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "results"
    path.mkdir()
    return path
