from __future__ import annotations

import os
import time
import uuid
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

from .errors import ParameterError
from .tools.model_tools import ModelSpec, StateLabel

load_dotenv()

DEFAULT_TOL = float(os.getenv("PTNORM_TOL", "1e-10"))
DEFAULT_OUT_DIR = os.getenv("PTNORM_OUT_DIR", "results")
DEFAULT_JOBS = int(os.getenv("PTNORM_JOBS", "1"))

Command = Literal["norm", "gram", "evolve", "check"]
ComplexPair = Tuple[float, float]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command
    model: ModelSpec
    labels: List[StateLabel] = Field(default_factory=list)
    coeffs: List[ComplexPair] = Field(default_factory=list)
    tol: float = Field(default=DEFAULT_TOL, gt=0)
    out: str = DEFAULT_OUT_DIR
    format: Literal["json", "csv"] = "json"
    grid_half_width: float = Field(default=12.0, gt=0)
    points: int = Field(default=1537, ge=16)
    dt: float = Field(default=1.0 / 1024.0, gt=0)
    steps: int = Field(default=1024, ge=0)
    jobs: int = Field(default=DEFAULT_JOBS, ge=1)
    c2: Optional[float] = None
    numeric_only: bool = False
    snapshot_every: int = Field(default=256, ge=1)
    residual_time: float = Field(default=0.125, gt=0)


class ResultRecord(BaseModel):
    """One command run: inputs echo, results, their error estimates, provenance."""

    model_config = ConfigDict(extra="forbid")

    record_id: str = Field(default_factory=lambda: uuid.uuid4().hex[:12])
    command: Command
    inputs: RunConfig
    results: Dict[str, Any] = Field(default_factory=dict)
    errors: Dict[str, Any] = Field(default_factory=dict)
    provenance: str = ""
    files: List[str] = Field(default_factory=list)
    wall_time: float = 0.0
    created_at: int = Field(default_factory=lambda: int(time.time()))


# -------------------------
# Parsing helpers
# -------------------------
def parse_labels(text: str) -> List[StateLabel]:
    """'+1:0,-1:2' -> [StateLabel(q=1, n=0), StateLabel(q=-1, n=2)]."""
    labels: List[StateLabel] = []
    for item in (text or "").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            q_txt, n_txt = item.split(":")
            labels.append(StateLabel(q=int(q_txt), n=int(n_txt)))
        except ValueError as exc:
            raise ParameterError(f"label {item!r} must look like +1:0 or -1:2 ({exc})") from exc
    return labels


def parse_coeffs(text: str) -> List[ComplexPair]:
    """'1, 0.5+0.25j' -> [(1.0, 0.0), (0.5, 0.25)]."""
    out: List[ComplexPair] = []
    for item in (text or "").split(","):
        item = item.strip().replace(" ", "")
        if not item:
            continue
        try:
            z = complex(item)
        except ValueError as exc:
            raise ParameterError(f"coefficient {item!r} is not a complex number") from exc
        out.append((z.real, z.imag))
    return out


def as_pair(z: complex) -> List[float]:
    z = complex(z)
    return [z.real, z.imag]


def matrix_pairs(m: np.ndarray) -> List[List[List[float]]]:
    return [[as_pair(v) for v in row] for row in np.asarray(m)]


def labels_text(labels: Sequence[StateLabel]) -> List[str]:
    return [str(lb) for lb in labels]
