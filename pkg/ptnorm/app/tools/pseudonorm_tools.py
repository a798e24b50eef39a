"""PT pseudo-inner-products, numeric normalization and Gram matrices.

Every integral here runs over the whole real line through
`quad_tools.integrate_line`; the integrands are vectorized callables.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import (
    Divergent,
    GramEntryError,
    NonRealNorm,
    NormInvalid,
    NumericalFailure,
    PreconditionError,
    SignMismatch,
)
from .model_tools import (
    Eigenstate,
    GptParams,
    ModelSpec,
    OscillatorParams,
    StateLabel,
    analytic_norm_mag,
    check_label,
    decay_radius,
    eigenfunction,
    make_state,
)
from .quad_tools import TRUNCATION_INFLATE, QuadResult, integrate, integrate_line
from .special_tools import jacobi_scaled

log = logging.getLogger(__name__)

Evaluable = Union[Eigenstate, Callable[[np.ndarray], np.ndarray]]

# |u| relative to its peak at the truncation radius
DECAY_RATIO = 1e-10
WEIGHT_CUT = 40.0
_LN2 = math.log(2.0)


class PairClass(str, Enum):
    ORTHOGONALITY_FORCED = "OrthogonalityForced"
    NORM_LIKE = "NormLike"
    CONJUGATE_PAIR_NORM_LIKE = "ConjugatePairNormLike"


@dataclass(frozen=True)
class GramReport:
    states: List[Eigenstate]
    matrix: np.ndarray
    abs_err: np.ndarray

    @property
    def max_off_diagonal(self) -> float:
        size = self.matrix.shape[0]
        if size < 2:
            return 0.0
        mask = ~np.eye(size, dtype=bool)
        return float(np.max(np.abs(self.matrix[mask])))


def _evaluator(u: Evaluable, normalized: bool) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(u, Eigenstate):
        return lambda x: np.asarray(eigenfunction(u, x, normalized=normalized), dtype=np.complex128)
    return lambda x: np.asarray(u(x), dtype=np.complex128)


def scan_start(*us: Evaluable) -> float:
    """Where the truncation scan begins: the analytic decay radius of each state, deflated by the inflation factor."""
    radii = [decay_radius(u, DECAY_RATIO) / TRUNCATION_INFLATE for u in us if isinstance(u, Eigenstate)]
    return max(radii, default=1.0)


def pseudo_inner(
    u1: Evaluable,
    u2: Evaluable,
    tol: float,
    normalized: bool = False,
    max_evals: Optional[int] = None,
) -> QuadResult:
    """Integral of conj(u2(-x)) * u1(x) over the real line."""
    f1 = _evaluator(u1, normalized)
    f2 = _evaluator(u2, normalized)

    def integrand(x: np.ndarray) -> np.ndarray:
        return np.conj(f2(-x)) * f1(x)

    result, x_cut = integrate_line(integrand, tol, start=scan_start(u1, u2), max_evals=max_evals)
    log.debug("pseudo_inner: %s (err %.2e, X_cut %.2f)", result.value, result.abs_err, x_cut)
    return result


def l2_inner(
    u1: Evaluable,
    u2: Evaluable,
    tol: float,
    normalized: bool = False,
    max_evals: Optional[int] = None,
) -> QuadResult:
    """Ordinary L2 product: integral of conj(u2(x)) * u1(x)."""
    f1 = _evaluator(u1, normalized)
    f2 = _evaluator(u2, normalized)
    result, _ = integrate_line(
        lambda x: np.conj(f2(x)) * f1(x), tol, start=scan_start(u1, u2), max_evals=max_evals
    )
    return result


def normalize(
    state: Eigenstate,
    tol: float,
    max_evals: Optional[int] = None,
    raw: Optional[QuadResult] = None,
) -> Eigenstate:
    """Fix |N| so that the pseudo-norm equals q; the measured sign must be q.

    `raw` is the unnormalized pseudo-norm when the caller already has it.
    """
    if raw is None:
        raw = pseudo_inner(state, state, tol, normalized=False, max_evals=max_evals)
    re, im = raw.value.real, raw.value.imag
    if abs(im) > 100.0 * tol * abs(re):
        raise NonRealNorm(
            f"pseudo-norm of {state.model.family} {state.label} is not real: {raw.value} "
            f"(|Im| > 100 * tol * |Re| with tol={tol:g})"
        )
    sign = 0 if re == 0.0 else (1 if re > 0 else -1)
    if sign != state.label.q:
        raise SignMismatch(
            f"pseudo-norm of {state.model.family} {state.label} is {re:.6g}, "
            f"sign {sign:+d} differs from q={state.label.q:+d}"
        )
    return state.model_copy(update={"norm_mag": 1.0 / math.sqrt(abs(re))})


def jacobi_weight_integral(
    lam: float, mu: float, n: int, tol: float, max_evals: Optional[int] = None
) -> float:
    """Integral over t in (1, inf) of (t-1)^lam (t+1)^mu P_n(t)^2.

    Evaluated after t - 1 = e^y. The integrand then decays like e^{(lam+1) y}
    as y -> -inf and like e^{(lam+mu+2n+1) y} as y -> +inf; beyond
    |y| = WEIGHT_CUT both tails are pure exponentials to double precision and
    are summed in closed form.
    """
    if not lam > -1.0:
        raise Divergent(f"weight integral diverges at t=1: requires lam > -1 (got lam={lam})")
    right = -(lam + mu + 2.0 * n + 1.0)
    if not right > 0:
        raise Divergent(
            f"weight integral diverges as t -> inf: requires lam + mu + 2n + 1 < 0 (got {-right:g})"
        )

    def integrand(y: np.ndarray) -> np.ndarray:
        log_t = np.logaddexp(0.0, y)  # log(1 + e^y)
        exponent = (lam + 1.0) * y + mu * np.logaddexp(y, _LN2) + 2.0 * n * log_t
        p = np.asarray(jacobi_scaled(n, lam, mu, np.ones_like(y), np.exp(-log_t))).real
        return np.exp(exponent) * p * p

    body = integrate(integrand, -WEIGHT_CUT, WEIGHT_CUT, tol, max_evals=max_evals, initial_panels=64)
    ends = integrand(np.array([-WEIGHT_CUT, WEIGHT_CUT]))
    tails = ends[0] / (lam + 1.0) + ends[1] / right
    value = float(body.value.real) + float(tails)
    log.debug(
        "jacobi_weight_integral(n=%d, lam=%g, mu=%g) = %.15g (tails %.3e, err %.2e)",
        n, lam, mu, value, tails, body.abs_err,
    )
    return value


def resolve_state(
    model: ModelSpec,
    label: StateLabel,
    tol: float,
    numeric_only: bool = False,
    max_evals: Optional[int] = None,
) -> Eigenstate:
    """Eigenstate with |N| set: closed form where one exists, else by quadrature."""
    state = make_state(model, label)
    if numeric_only:
        return normalize(state, tol, max_evals=max_evals)
    if state.norm_mag is not None:
        return state
    if isinstance(model, GptParams) and model.norm_valid:
        weight = jacobi_weight_integral(state.lam, state.mu, label.n, tol, max_evals=max_evals)
        mag = analytic_norm_mag(model, label, aux=weight)
        return state.model_copy(update={"norm_mag": mag})
    return normalize(state, tol, max_evals=max_evals)


def _pairs(size: int) -> List[Tuple[int, int]]:
    return [(i, j) for i in range(size) for j in range(size)]


def gram_report(
    model: ModelSpec,
    labels: Sequence[StateLabel],
    tol: float,
    normalized: bool = True,
    numeric_only: bool = False,
    jobs: int = 1,
    max_evals: Optional[int] = None,
) -> GramReport:
    if not labels:
        raise PreconditionError("gram needs at least one label")
    for label in labels:
        check_label(model, label)
    if normalized and not numeric_only and not model.norm_valid:
        raise NormInvalid(model.norm_window)

    states: List[Eigenstate] = []
    for i, label in enumerate(labels):
        try:
            states.append(
                resolve_state(model, label, tol, numeric_only=numeric_only, max_evals=max_evals)
                if normalized
                else make_state(model, label)
            )
        except NumericalFailure as exc:
            raise GramEntryError((i, i), f"normalizing {label}: {exc}") from exc

    def entry(ij: Tuple[int, int]) -> QuadResult:
        i, j = ij
        try:
            return pseudo_inner(states[j], states[i], tol, normalized=normalized, max_evals=max_evals)
        except NumericalFailure as exc:
            raise GramEntryError(ij, str(exc)) from exc

    pairs = _pairs(len(states))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(entry, pairs))
    else:
        results = [entry(ij) for ij in pairs]

    size = len(states)
    matrix = np.array([r.value for r in results], dtype=np.complex128).reshape(size, size)
    errs = np.array([r.abs_err for r in results], dtype=np.float64).reshape(size, size)
    return GramReport(states=states, matrix=matrix, abs_err=errs)


def gram(
    model: ModelSpec,
    labels: Sequence[StateLabel],
    tol: float,
    normalized: bool = True,
    jobs: int = 1,
) -> np.ndarray:
    """G[i][j] = pseudo_inner(u_j, u_i)."""
    return gram_report(model, labels, tol, normalized=normalized, jobs=jobs).matrix


def _is_real(e: complex, tol: float) -> bool:
    return abs(e.imag) <= tol * (1.0 + abs(e))


def classify_pair(E1: complex, E2: complex, tol: float) -> PairClass:
    e1, e2 = complex(E1), complex(E2)
    r1, r2 = _is_real(e1, tol), _is_real(e2, tol)
    if r1 and r2:
        return PairClass.ORTHOGONALITY_FORCED if abs(e1 - e2) > tol else PairClass.NORM_LIKE
    if r1 != r2:
        return PairClass.ORTHOGONALITY_FORCED
    if abs(e2 - e1.conjugate()) <= tol * (1.0 + abs(e1)):
        return PairClass.CONJUGATE_PAIR_NORM_LIKE
    return PairClass.ORTHOGONALITY_FORCED


def contour_shift_check(
    state: Eigenstate, c2: float, tol: float, max_evals: Optional[int] = None
) -> float:
    """|pseudo-norm at shift c - pseudo-norm at shift c2| for an oscillator state."""
    model = state.model
    if not isinstance(model, OscillatorParams):
        raise PreconditionError(f"contour shift check needs an oscillator state (got {model.family})")
    if not c2 > 0:
        raise PreconditionError(f"contour shift requires c2 > 0 (got c2={c2})")
    if c2 == model.c:
        raise PreconditionError(f"contour shift requires c2 != c (both are {c2})")
    shifted = state.model_copy(update={"model": OscillatorParams(alpha=model.alpha, c=c2)})
    here = pseudo_inner(state, state, tol, max_evals=max_evals)
    there = pseudo_inner(shifted, shifted, tol, max_evals=max_evals)
    diff = abs(here.value - there.value)
    log.debug("contour shift c=%g -> c2=%g: %.3e", model.c, c2, diff)
    return diff
