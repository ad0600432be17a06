"""Iterative minimizers over density matrices.

All solvers share the entropic mirror-descent geometry: an iterate is updated
multiplicatively through exp(log z - eta * grad) and renormalized, so every
iterate stays a full-rank density matrix.  Step sizes come either from an
adaptive Polyak rule that needs no smoothness constants, from Armijo
backtracking, or (as a baseline) from a fixed-point map for Augustin
objectives.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import BoundaryError, NumericalError, ParameterError, ShapeError
from .linalg import matrix_fn, power_fn
from .objectives import Objective, umegaki_relative_entropy
from .states import DensityMatrix, density_from_spectral, to_document

# Gauge-fixed gradient norms below this are treated as stationarity.
STATIONARY_TOL = 1e-14

# Mirror steps must start from an iterate with min eigenvalue above this.
STEP_MIN_EIG = 1e-14

# Eigenvalues are floored here before the matrix logarithm.
LOG_EIG_FLOOR = 1e-300

# A fixed-point iterate rising this far above the running minimum flags divergence.
FP_DIVERGENCE_JUMP = 10.0

CSV_HEADER = "iter,f,best_f,eta,delta_t,grad_dual_norm,elapsed_ms"


class StationarySignal(Exception):
    """The gauge-fixed gradient norm vanished; the iterate is stationary."""


def gauge_fixed(grad: np.ndarray) -> np.ndarray:
    """Remove the identity component of a gradient: g - (Tr[g]/d) I.

    Mirror steps are invariant under adding multiples of the identity, so this
    representative measures true first-order optimality: its norm vanishes
    exactly at interior stationary points, where the raw norm stays near 1.
    """
    g = np.asarray(grad)
    d = g.shape[0]
    return g - (float(np.trace(g).real) / d) * np.eye(d, dtype=g.dtype)


def entropic_md_step(z: DensityMatrix, grad: np.ndarray, eta: float) -> DensityMatrix:
    """One entropic mirror-descent step: z' proportional to exp(log z - eta * grad).

    Everything runs through eigendecompositions: eigenvalues are floored at
    1e-300 before the log, and the exponent is shifted by its top eigenvalue
    before exponentiation (the shift cancels in the normalization).  The result
    is exact-arithmetic full rank, though extreme steps can underflow
    eigenvalues to zero; solvers assert rank after accepting a step.
    """
    if not np.isfinite(eta) or eta < 0.0:
        raise ParameterError(f"step size must be finite and nonnegative, got {eta}")
    spec = z.spectral
    if spec.eigenvalues[0] <= STEP_MIN_EIG:
        raise BoundaryError(
            f"mirror step from a rank-deficient iterate (min eigenvalue {spec.eigenvalues[0]:.3e})"
        )
    g = linalg.hermitian(grad)
    if g.shape[0] != z.dim:
        raise ShapeError(f"gradient has shape {g.shape}, expected ({z.dim}, {z.dim})")
    v = spec.eigenvectors
    log_z = (v * np.log(np.clip(spec.eigenvalues, LOG_EIG_FLOOR, None))) @ v.conj().T
    h = log_z - eta * g
    hs = linalg.eigh(0.5 * (h + h.conj().T))
    shifted = hs.eigenvalues - hs.eigenvalues[-1]
    return density_from_spectral(np.exp(shifted), hs.eigenvectors)


@dataclass(frozen=True)
class PolyakParams:
    """Parameters of the adaptive Polyak step-size rule.

    delta is the target accuracy: the rule drives the best value to within
    delta of the optimum.  delta_1 seeds the adaptive offset, gamma >= 1
    expands it after progress, beta in (0, 1) contracts it otherwise, and
    c > 1/2 scales the step.
    """

    delta1: float
    delta: float
    gamma: float
    beta: float
    c: float = 1.0
    max_iters: int = 500

    def __post_init__(self):
        if not self.delta1 > 0.0:
            raise ParameterError(f"delta1 must be positive, got {self.delta1}")
        if not self.delta > 0.0:
            raise ParameterError(f"delta must be positive, got {self.delta}")
        if not self.gamma >= 1.0:
            raise ParameterError(f"gamma must be >= 1, got {self.gamma}")
        if not 0.0 < self.beta < 1.0:
            raise ParameterError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.c > 0.5:
            raise ParameterError(f"c must exceed 1/2, got {self.c}")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class PolyakState:
    """Running state of the Polyak rule: offset delta_t, best value, and their gap."""

    delta_t: float
    best_value: float
    f_tilde: float

    def __post_init__(self):
        expected = self.best_value - self.delta_t
        scale = max(1.0, abs(self.best_value), self.delta_t)
        if abs(self.f_tilde - expected) > 1e-9 * scale:
            raise ParameterError(
                f"f_tilde must equal best_value - delta_t ({expected:.9g}), got {self.f_tilde:.9g}"
            )


def polyak_next_eta(state: PolyakState, f_t: float, grad_dual_norm: float, c: float = 1.0) -> float:
    """Step size (f_t - f_tilde) / (c * grad_dual_norm^2) of the modified Polyak rule."""
    if grad_dual_norm < STATIONARY_TOL:
        raise StationarySignal(f"gradient norm {grad_dual_norm:.3e} below {STATIONARY_TOL:.1e}")
    return (f_t - state.f_tilde) / (c * grad_dual_norm * grad_dual_norm)


def polyak_update_delta(state: PolyakState, f_next: float, params: PolyakParams) -> PolyakState:
    """Advance the Polyak state after observing the next objective value.

    The offset expands by gamma when the new value beats the old target
    f_tilde, and otherwise contracts by beta with a floor at delta; the best
    value and f_tilde are refreshed accordingly.
    """
    if f_next <= state.f_tilde:
        delta_next = params.gamma * state.delta_t
    else:
        delta_next = max(params.beta * state.delta_t, params.delta)
    best = min(state.best_value, f_next)
    return PolyakState(delta_t=delta_next, best_value=best, f_tilde=best - delta_next)


@dataclass(frozen=True)
class ArmijoParams:
    """Backtracking line-search parameters: initial step, shrink factor, slope fraction."""

    alpha_bar: float
    r: float
    tau: float
    max_iters: int = 500
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.alpha_bar > 0.0:
            raise ParameterError(f"alpha_bar must be positive, got {self.alpha_bar}")
        if not 0.0 < self.r < 1.0:
            raise ParameterError(f"r must lie in (0, 1), got {self.r}")
        if not 0.0 < self.tau < 1.0:
            raise ParameterError(f"tau must lie in (0, 1), got {self.tau}")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.max_backtracks < 1:
            raise ParameterError(f"max_backtracks must be >= 1, got {self.max_backtracks}")


@dataclass
class TraceRecord:
    """One per-iteration row of a solve trace."""

    iteration: int
    f: float
    best_f: float
    eta: float | None
    delta_t: float | None
    grad_dual_norm: float
    elapsed_ms: float
    grad_gauged_norm: float | None = None
    n_fevals: int | None = None
    pre_norm_trace: float | None = None


@dataclass
class SolveTrace:
    """Full record of a solver run: per-iteration rows plus the final iterate."""

    solver: str
    records: list[TraceRecord]
    final: DensityMatrix
    best_value: float
    stationary: bool = False
    stalled: bool = False
    non_convergence: bool = False
    n_value_evals: int = 0
    n_grad_evals: int = 0

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.records:
            lines.append(
                ",".join(
                    (
                        str(r.iteration),
                        _csv_float(r.f),
                        _csv_float(r.best_f),
                        _csv_float(r.eta),
                        _csv_float(r.delta_t),
                        _csv_float(r.grad_dual_norm),
                        _csv_float(r.elapsed_ms),
                    )
                )
            )
        return "\n".join(lines) + "\n"

    def to_document(self) -> dict:
        records = []
        for r in self.records:
            row = {
                "iter": r.iteration,
                "f": r.f,
                "best_f": r.best_f,
                "eta": r.eta,
                "delta_t": r.delta_t,
                "grad_dual_norm": r.grad_dual_norm,
                "elapsed_ms": r.elapsed_ms,
            }
            if r.grad_gauged_norm is not None:
                row["grad_gauged_norm"] = r.grad_gauged_norm
            if r.n_fevals is not None:
                row["n_fevals"] = r.n_fevals
            if r.pre_norm_trace is not None:
                row["pre_norm_trace"] = r.pre_norm_trace
            records.append(row)
        return {
            "kind": "trace",
            "solver": self.solver,
            "best_value": self.best_value,
            "stationary": self.stationary,
            "stalled": self.stalled,
            "non_convergence": self.non_convergence,
            "n_value_evals": self.n_value_evals,
            "n_grad_evals": self.n_grad_evals,
            "records": records,
            "final": to_document(self.final),
        }


def _csv_float(x) -> str:
    return "" if x is None else repr(float(x))


class _CountingObjective:
    """Wraps an objective to count value and gradient evaluations."""

    def __init__(self, objective: Objective):
        self.objective = objective
        self.n_value = 0
        self.n_grad = 0

    def value(self, sigma: DensityMatrix) -> float:
        self.n_value += 1
        return self.objective.value(sigma)

    def value_and_grad(self, sigma: DensityMatrix):
        self.n_value += 1
        self.n_grad += 1
        return self.objective.value_and_grad(sigma)


def _check_start(objective: Objective, z1: DensityMatrix) -> DensityMatrix:
    if z1.dim != objective.dim:
        raise ShapeError(f"initial iterate has dimension {z1.dim}, objective needs {objective.dim}")
    if z1.spectral.eigenvalues[0] <= STEP_MIN_EIG:
        raise BoundaryError("initial iterate must be full rank")
    return z1


def _require_full_rank(z: DensityMatrix) -> None:
    if z.spectral.eigenvalues[0] <= 0.0:
        raise NumericalError(
            "iterate lost full rank (eigenvalue underflow), the step was too large", dim=z.dim
        )


def _norms(grad: np.ndarray) -> tuple[float, float]:
    gauged = linalg.schatten_norm(gauge_fixed(grad), np.inf)
    raw = linalg.schatten_norm(grad, np.inf)
    return gauged, raw


def solve_polyak(objective: Objective, z1: DensityMatrix, params: PolyakParams) -> SolveTrace:
    """Entropic mirror descent with the adaptive Polyak step size.

    With c > 1/2 the best recorded value approaches the optimum to within
    delta; smaller delta trades iterations for accuracy.  The step size
    divides by the squared operator norm of the raw gradient; the trace
    identity keeps that norm at 1 or above, so the step stays bounded by
    (f - f_tilde)/c.  The gauge-fixed norm, which vanishes exactly at
    optimality, drives the stationarity stop.
    """
    counting = _CountingObjective(objective)
    z = _check_start(objective, z1)
    start = time.perf_counter()
    f, g = counting.value_and_grad(z)
    state = PolyakState(delta_t=params.delta1, best_value=f, f_tilde=f - params.delta1)
    records: list[TraceRecord] = []
    stationary = False

    def elapsed_ms() -> float:
        return (time.perf_counter() - start) * 1e3

    for t in range(1, params.max_iters + 1):
        gauged, raw = _norms(g)
        if gauged < STATIONARY_TOL:
            records.append(
                TraceRecord(t, f, state.best_value, None, state.delta_t, raw, elapsed_ms(), gauged)
            )
            stationary = True
            break
        eta = polyak_next_eta(state, f, raw, params.c)
        records.append(
            TraceRecord(t, f, state.best_value, eta, state.delta_t, raw, elapsed_ms(), gauged)
        )
        z = entropic_md_step(z, g, eta)
        _require_full_rank(z)
        f, g = counting.value_and_grad(z)
        state = polyak_update_delta(state, f, params)
    else:
        gauged, raw = _norms(g)
        records.append(
            TraceRecord(
                params.max_iters + 1, f, state.best_value, None, state.delta_t, raw, elapsed_ms(), gauged
            )
        )

    return SolveTrace(
        solver="polyak",
        records=records,
        final=z,
        best_value=state.best_value,
        stationary=stationary,
        n_value_evals=counting.n_value,
        n_grad_evals=counting.n_grad,
    )


def solve_armijo(objective: Objective, z1: DensityMatrix, params: ArmijoParams) -> SolveTrace:
    """Entropic mirror descent with Armijo backtracking from alpha_bar.

    Each iteration tries eta = alpha_bar, alpha_bar*r, ... until the sufficient
    decrease test f(z(eta)) <= f(z) + tau * <grad, z(eta) - z> passes; if
    max_backtracks trials all fail, the run records a stalled iteration
    (eta = 0) and stops.
    """
    counting = _CountingObjective(objective)
    z = _check_start(objective, z1)
    start = time.perf_counter()
    f, g = counting.value_and_grad(z)
    best = f
    records: list[TraceRecord] = []
    stationary = False
    stalled = False

    def elapsed_ms() -> float:
        return (time.perf_counter() - start) * 1e3

    for t in range(1, params.max_iters + 1):
        gauged, raw = _norms(g)
        if gauged < STATIONARY_TOL:
            records.append(TraceRecord(t, f, best, None, None, raw, elapsed_ms(), gauged))
            stationary = True
            break
        eta = params.alpha_bar
        accepted = None
        n_fevals = 0
        for _ in range(params.max_backtracks):
            trial = entropic_md_step(z, g, eta)
            f_trial = counting.value(trial)
            n_fevals += 1
            slope = linalg.trace_inner(g, trial.matrix - z.matrix)
            if f_trial <= f + params.tau * slope:
                accepted = trial
                break
            eta *= params.r
        if accepted is None:
            records.append(TraceRecord(t, f, best, 0.0, None, raw, elapsed_ms(), gauged, n_fevals))
            stalled = True
            break
        records.append(TraceRecord(t, f, best, eta, None, raw, elapsed_ms(), gauged, n_fevals))
        z = accepted
        _require_full_rank(z)
        f, g = counting.value_and_grad(z)
        best = min(best, f)
    else:
        gauged, raw = _norms(g)
        records.append(TraceRecord(params.max_iters + 1, f, best, None, None, raw, elapsed_ms(), gauged))

    return SolveTrace(
        solver="armijo",
        records=records,
        final=z,
        best_value=best,
        stationary=stationary,
        stalled=stalled,
        n_value_evals=counting.n_value,
        n_grad_evals=counting.n_grad,
    )


def solve_fixed_point(objective: Objective, z1: DensityMatrix, max_iters: int = 500) -> SolveTrace:
    """Baseline fixed-point iteration sigma' = -sqrt(sigma) grad f(sigma) sqrt(sigma).

    Applies to the two Augustin objectives only.  The map output is clipped to
    the positive cone and renormalized defensively; the pre-normalization trace
    is recorded.  If the objective rises more than FP_DIVERGENCE_JUMP above its
    running minimum, or an iterate degenerates, the trace flags non-convergence
    and the run stops.
    """
    if getattr(objective, "kind", None) not in ("petz-augustin", "sandwiched-augustin"):
        raise ParameterError("the fixed-point baseline applies to Augustin objectives only")
    if max_iters < 1:
        raise ParameterError(f"max_iters must be >= 1, got {max_iters}")
    counting = _CountingObjective(objective)
    z = _check_start(objective, z1)
    start = time.perf_counter()
    f, g = counting.value_and_grad(z)
    best = f
    records: list[TraceRecord] = []
    stationary = False
    non_convergence = False

    def elapsed_ms() -> float:
        return (time.perf_counter() - start) * 1e3

    for t in range(1, max_iters + 1):
        gauged, raw = _norms(g)
        if gauged < STATIONARY_TOL:
            records.append(TraceRecord(t, f, best, None, None, raw, elapsed_ms(), gauged))
            stationary = True
            break
        sqrt_z = matrix_fn(z.spectral, power_fn(0.5))
        mapped = -(sqrt_z @ g @ sqrt_z)
        mapped = 0.5 * (mapped + mapped.conj().T)
        pre_trace = float(np.trace(mapped).real)
        records.append(
            TraceRecord(t, f, best, None, None, raw, elapsed_ms(), gauged, pre_norm_trace=pre_trace)
        )
        if not np.isfinite(pre_trace) or pre_trace <= 0.0:
            non_convergence = True
            break
        spec = linalg.eigh(mapped)
        clipped = np.clip(spec.eigenvalues, 0.0, None)
        if float(clipped.sum()) <= 0.0:
            non_convergence = True
            break
        z = density_from_spectral(clipped, spec.eigenvectors)
        try:
            f, g = counting.value_and_grad(z)
        except BoundaryError:
            non_convergence = True
            break
        if not np.isfinite(f) or f > best + FP_DIVERGENCE_JUMP:
            gauged, raw = _norms(g)
            records.append(TraceRecord(t + 1, f, best, None, None, raw, elapsed_ms(), gauged))
            non_convergence = True
            break
        best = min(best, f)
    else:
        gauged, raw = _norms(g)
        records.append(TraceRecord(max_iters + 1, f, best, None, None, raw, elapsed_ms(), gauged))

    return SolveTrace(
        solver="fixed-point",
        records=records,
        final=z,
        best_value=best,
        stationary=stationary,
        non_convergence=non_convergence,
        n_value_evals=counting.n_value,
        n_grad_evals=counting.n_grad,
    )


def bregman_vn(x: DensityMatrix, y: DensityMatrix) -> float:
    """Bregman divergence of the negative von Neumann entropy.

    Coincides with the Umegaki relative entropy and satisfies the Pinsker
    bound D(x, y) >= ||x - y||_1^2 / 2.
    """
    return umegaki_relative_entropy(x, y)
