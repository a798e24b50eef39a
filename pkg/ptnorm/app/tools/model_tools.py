"""Catalog of the three solvable PT-symmetric potentials.

Units are fixed to hbar = 2m = 1. All complex powers use the principal
logarithm; the coordinate shifts c > 0 and gamma keep the real line off the
branch cut. Normalization coefficients are N = |N| e^{i nu} with nu = 0 unless
a state has been rotated by `to_pt_eigenform`.
"""
from __future__ import annotations

import logging
import math
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from ..errors import (
    LabelOutOfRange,
    NormInvalid,
    ParameterError,
    SignViolation,
    UnresolvedNorm,
)
from .special_tools import gamma, jacobi_scaled, laguerre

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
_LN2 = math.log(2.0)


def _is_integer(v: float, eps: float = 1e-12) -> bool:
    return abs(v - round(v)) < eps


def _largest_below(v: float) -> int:
    # largest integer strictly less than v
    return int(math.ceil(v)) - 1


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# -------------------------
# Parameter records
# -------------------------
class OscillatorParams(_Frozen):
    family: Literal["oscillator"] = "oscillator"
    alpha: float
    c: float

    @model_validator(mode="after")
    def _check(self) -> "OscillatorParams":
        if not (math.isfinite(self.alpha) and math.isfinite(self.c)):
            raise ValueError("oscillator parameters must be finite")
        if not self.alpha > 0:
            raise ValueError(f"oscillator requires alpha > 0 (got alpha={self.alpha})")
        if _is_integer(self.alpha):
            raise ValueError(f"oscillator requires a non-integer alpha (got alpha={self.alpha})")
        if not self.c > 0:
            raise ValueError(f"oscillator requires c > 0 (got c={self.c})")
        return self

    @property
    def norm_valid(self) -> bool:
        return 0.0 < self.alpha < 1.0

    @property
    def norm_window(self) -> str:
        return f"closed-form pseudo-norm requires 0 < alpha < 1 (got alpha={self.alpha})"


class GptParams(_Frozen):
    family: Literal["gpt"] = "gpt"
    A: float
    B: float
    gamma: float

    @model_validator(mode="after")
    def _check(self) -> "GptParams":
        A, B, g = self.A, self.B, self.gamma
        if not all(math.isfinite(v) for v in (A, B, g)):
            raise ValueError("gpt parameters must be finite")
        if not (B > A + 0.5 > 0):
            raise ValueError(f"gpt requires B > A + 1/2 > 0 (got A={A}, B={B})")
        if not (-math.pi / 4 <= g < 0 or 0 < g < math.pi / 4):
            raise ValueError(
                f"gpt requires gamma in [-pi/4, 0) or (0, pi/4) (got gamma={g})"
            )
        if _is_integer(B - A - 0.5):
            raise ValueError(f"gpt requires B - A - 1/2 to be non-integer (got {B - A - 0.5:g})")
        return self

    @property
    def norm_valid(self) -> bool:
        return self.A + 0.5 < self.B < self.A + 1.5

    @property
    def norm_window(self) -> str:
        return (
            "closed-form pseudo-norm requires A + 1/2 < B < A + 3/2 "
            f"(got A={self.A}, B={self.B})"
        )


class ScarfParams(_Frozen):
    family: Literal["scarf"] = "scarf"
    A: float
    B: float

    @model_validator(mode="after")
    def _check(self) -> "ScarfParams":
        A, B = self.A, self.B
        if not (math.isfinite(A) and math.isfinite(B)):
            raise ValueError("scarf parameters must be finite")
        if not (A > B - 0.5 > 0):
            raise ValueError(f"scarf requires A > B - 1/2 > 0 (got A={A}, B={B})")
        if _is_integer(A - B + 0.5):
            raise ValueError(f"scarf requires A - B + 1/2 to be non-integer (got {A - B + 0.5:g})")
        return self

    @property
    def norm_valid(self) -> bool:
        # n = 0 closed forms exist for every admissible (A, B); the q = -1 sign is checked separately
        return True

    @property
    def norm_window(self) -> str:
        return f"scarf q=-1 sign requires B - 1/2 + 2k < A < B + 1/2 + 2k (got A={self.A}, B={self.B})"


ModelSpec = Annotated[Union[OscillatorParams, GptParams, ScarfParams], Field(discriminator="family")]
_MODEL_ADAPTER: TypeAdapter = TypeAdapter(ModelSpec)


def parse_model(data: Dict[str, Any]) -> ModelSpec:
    return _MODEL_ADAPTER.validate_python(data)


def model_to_dict(model: ModelSpec) -> Dict[str, Any]:
    return model.model_dump()


class StateLabel(_Frozen):
    q: Literal[1, -1]
    n: int = Field(ge=0)

    def __str__(self) -> str:
        return f"{self.q:+d}:{self.n}"


class Eigenstate(_Frozen):
    model: ModelSpec
    label: StateLabel
    energy: float
    norm_mag: Optional[float] = None  # None means Unresolved
    lam: float = 0.0
    mu: float = 0.0
    phase_nu: float = 0.0

    @property
    def resolved(self) -> bool:
        return self.norm_mag is not None


# -------------------------
# Spectrum
# -------------------------
def n_max(model: ModelSpec, q: int) -> Optional[int]:
    """Highest admissible n of the q series, or None when unbounded."""
    if isinstance(model, OscillatorParams):
        return None
    if isinstance(model, GptParams):
        return _largest_below(model.B - 0.5) if q == 1 else _largest_below(model.A)
    return _largest_below(model.A) if q == 1 else _largest_below(model.B - 0.5)


def check_label(model: ModelSpec, label: StateLabel) -> None:
    top = n_max(model, label.q)
    if top is not None and label.n > top:
        raise LabelOutOfRange(
            f"{model.family} q={label.q:+d} admits n <= {top} (got n={label.n})"
        )


def admissible_labels(model: ModelSpec, n_limit: int) -> List[StateLabel]:
    labels: List[StateLabel] = []
    for q in (1, -1):
        top = n_max(model, q)
        last = n_limit if top is None else min(top, n_limit)
        labels.extend(StateLabel(q=q, n=n) for n in range(last + 1))
    return labels


def jacobi_params(model: ModelSpec, q: int) -> Tuple[float, float]:
    if isinstance(model, OscillatorParams):
        return 0.0, 0.0
    mu = -model.A - model.B - 0.5
    if isinstance(model, GptParams):
        return q * (model.A - model.B + 0.5), mu
    return q * (-model.A + model.B - 0.5), mu


def energy(model: ModelSpec, label: StateLabel) -> float:
    check_label(model, label)
    q, n = label.q, label.n
    if isinstance(model, OscillatorParams):
        return 4.0 * n + 2.0 - 2.0 * q * model.alpha
    if isinstance(model, GptParams):
        return -((model.B - 0.5 - n) ** 2) if q == 1 else -((model.A - n) ** 2)
    return -((model.A - n) ** 2) if q == 1 else -((model.B - 0.5 - n) ** 2)


def energy_order(model: ModelSpec, labels: List[StateLabel]) -> List[StateLabel]:
    return sorted(labels, key=lambda lb: (energy(model, lb), -lb.q, lb.n))


def ordinal_N(label: StateLabel) -> int:
    return 2 * label.n + (1 - label.q) // 2


def make_state(model: ModelSpec, label: StateLabel) -> Eigenstate:
    """Build the eigenstate; norm_mag is filled where a closed form needs no integral."""
    e = energy(model, label)
    lam, mu = jacobi_params(model, label.q)
    try:
        mag = analytic_norm_mag(model, label)
    except (NormInvalid, SignViolation) as exc:
        log.debug("no analytic |N| for %s %s: %s", model.family, label, exc)
        mag = None
    return Eigenstate(model=model, label=label, energy=e, norm_mag=mag, lam=lam, mu=mu)


# -------------------------
# Potentials and eigenfunctions
# -------------------------
def _as_real(x: Any) -> np.ndarray:
    xx = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(xx)):
        raise ParameterError("coordinate must be finite")
    return xx


def _finish(values: np.ndarray) -> Any:
    if values.ndim == 0:
        return complex(values)
    return values


def potential(model: ModelSpec, x: Any) -> Any:
    xx = _as_real(x)
    if isinstance(model, OscillatorParams):
        z = xx - 1j * model.c
        v = z * z + (model.alpha ** 2 - 0.25) / (z * z)
    elif isinstance(model, GptParams):
        tau = xx - 1j * model.gamma
        sh = np.sinh(tau)
        k = model.B ** 2 + model.A * (model.A + 1.0)
        v = (k - model.B * (2.0 * model.A + 1.0) * np.cosh(tau)) / (sh * sh)
    else:
        sech = 1.0 / np.cosh(xx)
        k = model.B ** 2 + model.A * (model.A + 1.0)
        v = -k * sech * sech + 1j * model.B * (2.0 * model.A + 1.0) * sech * np.tanh(xx)
    return _finish(np.asarray(v, dtype=np.complex128))


def _bare(state: Eigenstate, xx: np.ndarray) -> np.ndarray:
    model, q, n = state.model, state.label.q, state.label.n
    if isinstance(model, OscillatorParams):
        z = xx - 1j * model.c
        s = -q * model.alpha + 0.5
        return np.exp(-0.5 * z * z + s * np.log(z)) * laguerre(n, -q * model.alpha, z * z)

    lam, mu = state.lam, state.mu
    # P_n grows like cosh(x)^n; that factor is carried in the exponent
    log_cosh = np.logaddexp(xx, -xx) - _LN2
    sech = np.exp(-log_cosh)
    if isinstance(model, GptParams):
        # gamma < 0 is the complex conjugate of the |gamma| problem
        g = abs(model.gamma)
        tau = xx - 1j * g
        logw = (
            0.5 * (lam + mu + 1.0) * _LN2
            + (lam + 0.5) * np.log(np.sinh(0.5 * tau))
            + (mu + 0.5) * np.log(np.cosh(0.5 * tau))
            + n * log_cosh
        )
        zeta = math.cos(g) - 1j * math.sin(g) * np.tanh(xx)
        vals = np.exp(logw) * jacobi_scaled(n, lam, mu, zeta, sech)
        return np.conj(vals) if model.gamma < 0 else vals

    gd = 2.0 * np.arctan(np.tanh(0.5 * xx))  # arctan(sinh x) without overflow
    logw = (0.5 * (lam + mu + 1.0) + n) * log_cosh - 0.5j * (lam - mu) * gd
    return np.exp(logw) * jacobi_scaled(n, lam, mu, 1j * np.tanh(xx), sech)


def eigenfunction(state: Eigenstate, x: Any, normalized: bool = True) -> Any:
    """u(x) with coefficient e^{i nu} (unnormalized) or |N| e^{i nu} (normalized)."""
    xx = _as_real(x)
    coef = complex(math.cos(state.phase_nu), math.sin(state.phase_nu))
    if normalized:
        if state.norm_mag is None:
            raise UnresolvedNorm(
                f"{state.model.family} state {state.label} has no resolved |N|; normalize it numerically first"
            )
        coef *= state.norm_mag
    vals = coef * np.asarray(_bare(state, xx), dtype=np.complex128)
    return _finish(vals)


def decay_rate(state: Eigenstate) -> Optional[float]:
    """Exponential decay rate of |u| for gpt/scarf; None for the Gaussian oscillator."""
    if isinstance(state.model, OscillatorParams):
        return None
    return -0.5 * (state.lam + state.mu + 1.0) - state.label.n


def decay_radius(state: Eigenstate, ratio: float) -> float:
    """Rough |x| beyond which |u| stays below ratio * max|u|."""
    level = math.log(1.0 / ratio)
    kappa = decay_rate(state)
    if kappa is None:
        c = state.model.c
        return math.sqrt(c * c + 2.0 * level + 4.0 * state.label.n + 2.0) + 1.0
    return level / kappa + 2.0 + math.log1p(state.label.n)


# -------------------------
# Phases
# -------------------------
def _raw_phase(state: Eigenstate) -> float:
    model, q = state.model, state.label.q
    if isinstance(model, OscillatorParams):
        base = math.pi * (-q * model.alpha + 0.5)
    elif isinstance(model, GptParams):
        base = math.pi * (state.lam + 0.5)
        if model.gamma < 0:
            base = -base
    else:
        base = 0.0
    return base - 2.0 * state.phase_nu


def pt_phase(state: Eigenstate) -> float:
    """phi in [0, 2 pi) with u*(-x) = e^{i phi} u(x)."""
    phi = _raw_phase(state) % TWO_PI
    if phi >= TWO_PI:
        phi -= TWO_PI
    return phi


def _prefactor_angle(state: Eigenstate) -> float:
    return 0.5 * (_raw_phase(state) - 0.5 * math.pi + state.label.q * 0.5 * math.pi)


def pt_prefactor(state: Eigenstate) -> complex:
    """Unit-modulus factor mapping u to v_sigma with sigma = q."""
    theta = _prefactor_angle(state)
    return complex(math.cos(theta), math.sin(theta))


def to_pt_eigenform(state: Eigenstate) -> Eigenstate:
    theta = _prefactor_angle(state)
    return state.model_copy(update={"phase_nu": state.phase_nu + theta})


def fitted_pt_phase(state: Eigenstate, xs: Any) -> Tuple[float, float]:
    """Least-squares w in u*(-x) ~ w u(x); returns (arg w in [0, 2 pi), |w|)."""
    xx = _as_real(xs)
    u = np.asarray(eigenfunction(state, xx, normalized=False))
    ur = np.conj(np.asarray(eigenfunction(state, -xx, normalized=False)))
    w = np.vdot(u, ur) / np.vdot(u, u)
    phi = float(np.angle(w)) % TWO_PI
    return phi, float(abs(w))


# -------------------------
# Closed-form normalization
# -------------------------
def gpt_weight_integral_n0(lam: float, mu: float) -> float:
    """I_0 = 2^{lam+mu+1} Gamma(-lam-mu-1) Gamma(lam+1) / Gamma(-mu)."""
    return 2.0 ** (lam + mu + 1.0) * gamma(-lam - mu - 1.0) * gamma(lam + 1.0) / gamma(-mu)


def scarf_sign_windows(B: float, k_max: int = 2) -> List[Tuple[float, float]]:
    return [(B - 0.5 + 2 * k, B + 0.5 + 2 * k) for k in range(k_max + 1)]


def scarf_minus_negative(model: ScarfParams) -> bool:
    """True when the scarf q=-1, n=0 pseudo-norm is negative."""
    d = model.A - (model.B - 0.5)
    return (d % 2.0) < 1.0


def analytic_pseudo_norm(
    model: ModelSpec, label: StateLabel, aux: Optional[float] = None
) -> Optional[float]:
    """Closed-form pseudo-norm of the coefficient-1 state, or None if unavailable."""
    check_label(model, label)
    q, n = label.q, label.n
    if isinstance(model, OscillatorParams):
        if not model.norm_valid:
            raise NormInvalid(model.norm_window)
        a = -q * model.alpha
        return math.cos(math.pi * (a + 0.5)) * gamma(n + 1.0 + a) / math.factorial(n)

    if isinstance(model, GptParams):
        if not model.norm_valid:
            raise NormInvalid(model.norm_window)
        lam, mu = jacobi_params(model, q)
        if n == 0:
            integral = gpt_weight_integral_n0(lam, mu)
        elif aux is not None:
            integral = float(aux)
        else:
            return None
        return 2.0 * math.cos(math.pi * (lam + 0.5)) * integral

    if n > 0:
        return None
    A, B = model.A, model.B
    if q == 1:
        return math.pi * gamma(2 * A) / (2.0 ** (2 * A - 1) * gamma(A - B + 0.5) * gamma(A + B + 0.5))
    return math.pi * gamma(2 * B - 1) / (2.0 ** (2 * B - 2) * gamma(B - A - 0.5) * gamma(B + A + 0.5))


def analytic_norm_mag(
    model: ModelSpec, label: StateLabel, aux: Optional[float] = None
) -> Optional[float]:
    """|N| from the closed forms; None means Unresolved (scarf n > 0, gpt n > 0 without aux)."""
    value = analytic_pseudo_norm(model, label, aux)
    if value is None:
        return None
    if isinstance(model, ScarfParams) and label.q == -1 and value > 0:
        raise SignViolation(model.norm_window)
    if value == 0.0 or math.copysign(1.0, value) != label.q:
        raise SignViolation(
            f"{model.family} pseudo-norm sign {math.copysign(1.0, value):+g} differs from q={label.q:+d}"
        )
    return 1.0 / math.sqrt(abs(value))
