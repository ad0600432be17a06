"""Independent checks for the objectives and solvers.

Finite differences probe gradients, scalar and low-dimensional grid searches
provide brute-force optima, and a small fixtures file format carries reference
values between pipeline stages.  The grid oracles evaluate divergences through
their own closed-form spectral arithmetic so that they share no code path with
the matrix-calculus gradients they check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import linalg, objectives, states
from .errors import BoundaryError, InvariantViolation, ParameterError, ParseError, ShapeError
from .objectives import Objective, validate_alpha
from .solvers import gauge_fixed
from .states import DensityMatrix

# Traceless directions must have |Tr| at most this.
TRACELESS_TOL = 1e-12

# Grid points of the state ball stay inside radius 1 - BALL_MARGIN.
BALL_MARGIN = 1e-6

_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)


def random_traceless_direction(dim: int, seed) -> np.ndarray:
    """A seeded random traceless Hermitian direction with unit Frobenius norm."""
    if dim < 2:
        raise ParameterError("traceless directions need dimension >= 2")
    rng = states._generator(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = 0.5 * (g + g.conj().T)
    h -= (np.trace(h).real / dim) * np.eye(dim)
    return h / np.linalg.norm(h)


def finite_diff_directional(objective: Objective, sigma: DensityMatrix, direction, eps: float = 1e-5) -> float:
    """Central finite difference of the objective along a traceless direction."""
    if not eps > 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    d = linalg.hermitian(direction)
    if abs(float(np.trace(d).real)) > TRACELESS_TOL:
        raise ParameterError(f"direction must be traceless, got trace {np.trace(d).real:.3e}")
    try:
        plus = DensityMatrix(sigma.matrix + eps * d)
        minus = DensityMatrix(sigma.matrix - eps * d)
    except InvariantViolation as exc:
        raise BoundaryError(f"perturbation leaves the state set at eps={eps:g}; reduce eps") from exc
    f_plus = objective.value(plus)
    f_minus = objective.value(minus)
    if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
        raise BoundaryError(f"objective is infinite next to sigma at eps={eps:g}; reduce eps")
    return (f_plus - f_minus) / (2.0 * eps)


def classical_divergence(p, q, alpha, family: str) -> float:
    """Order-alpha Renyi divergence of probability vectors, log-domain arithmetic.

    Follows the same support convention as the matrix divergences: +inf when p
    carries more than 1e-10 mass outside the support of q.
    """
    alpha = validate_alpha(alpha, family)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 1 or p.shape != q.shape:
        raise ShapeError(f"need equal-length vectors, got shapes {p.shape} and {q.shape}")
    if np.any(p < -1e-12) or np.any(q < -1e-12):
        raise ParameterError("probability vectors must be nonnegative")
    p = np.clip(p, 0.0, None)
    q = np.clip(q, 0.0, None)
    off_support = q <= objectives.SUPPORT_KERNEL_TOL
    if float(p[off_support].sum()) > objectives.SUPPORT_MASS_TOL:
        return math.inf
    keep = (~off_support) & (p > 0.0)
    if not np.any(keep):
        return math.inf
    with np.errstate(divide="ignore"):
        terms = alpha * np.log(p[keep]) + (1.0 - alpha) * np.log(q[keep])
    return objectives._logsumexp(terms) / (alpha - 1.0)


@dataclass(frozen=True)
class OracleResult:
    """Outcome of a brute-force grid search.

    ``tolerance`` bounds the grid-induced error as 2 * resolution * G with G
    the largest gauge-fixed gradient norm seen at the optimizer and its grid
    neighbors; assertions against solver output should allow at least this.
    """

    optimum_value: float
    optimizer: DensityMatrix
    resolution: float
    tolerance: float


def _local_gradient_bound(objective: Objective, best: DensityMatrix, neighbors) -> float:
    points = [best] + list(neighbors)
    bound = 0.0
    for point in points:
        try:
            _, grad = objective.value_and_grad(point)
        except BoundaryError:
            continue
        bound = max(bound, linalg.schatten_norm(gauge_fixed(grad), np.inf))
    return bound


def _oracle_result(objective: Objective, best: DensityMatrix, search_value: float,
                   resolution: float, neighbors) -> OracleResult:
    reported = objective.value(best)
    if abs(reported - search_value) > 1e-9 * max(1.0, abs(reported)):
        raise InvariantViolation(
            f"grid search value {search_value:.12g} disagrees with the objective "
            f"{reported:.12g} at the optimizer"
        )
    bound = _local_gradient_bound(objective, best, neighbors)
    return OracleResult(
        optimum_value=reported,
        optimizer=best,
        resolution=resolution,
        tolerance=2.0 * resolution * bound,
    )


# ---------------------------------------------------------------------------
# Diagonal (simplex) oracle


def _diagonal_ensemble(objective: Objective):
    ensemble = getattr(objective, "ensemble", None)
    if ensemble is None:
        raise ParameterError("the simplex oracle supports ensemble (Augustin) objectives only")
    probs = []
    for s in ensemble.states:
        off = s.matrix - np.diag(np.diag(s.matrix))
        if np.abs(off).max() > 1e-12:
            raise ParameterError(
                "non-commuting instance: all ensemble states must be diagonal "
                f"(max off-diagonal entry {np.abs(off).max():.3e})"
            )
        probs.append(np.diag(s.matrix).real)
    return ensemble.weights, np.stack(probs)


def _classical_objective_values(weights, probs, alpha, grid) -> np.ndarray:
    """Vectorized ensemble-average classical divergence on a (m, d) grid of q."""
    with np.errstate(divide="ignore"):
        log_q = np.log(grid)  # -inf at zeros
        log_p = np.log(probs)
    # terms[x, m] = logsumexp_i(alpha log p_xi + (1 - alpha) log q_mi)
    a = alpha * log_p[:, None, :] + (1.0 - alpha) * log_q[None, :, :]
    mass_off = probs[:, None, :] * (grid[None, :, :] <= objectives.SUPPORT_KERNEL_TOL)
    bad = mass_off.sum(axis=2) > objectives.SUPPORT_MASS_TOL
    a = np.where(np.isneginf(log_p[:, None, :]), -np.inf, a)
    terms = objectives._logsumexp(a, axis=2) / (alpha - 1.0)
    terms = np.where(bad, np.inf, terms)
    return np.sum(weights[:, None] * terms, axis=0)


def _simplex_grid(dim: int, resolution: float) -> np.ndarray:
    steps = int(round(1.0 / resolution))
    edge = np.arange(steps + 1) / steps
    if dim == 2:
        return np.stack([edge, 1.0 - edge], axis=1)
    q0, q1 = np.meshgrid(edge, edge, indexing="ij")
    q0, q1 = q0.ravel(), q1.ravel()
    keep = q0 + q1 <= 1.0 + 1e-12
    q0, q1 = q0[keep], q1[keep]
    # Roundoff in q0 + q1 can push the last coordinate a few ulp below zero.
    return np.stack([q0, q1, np.clip(1.0 - q0 - q1, 0.0, None)], axis=1)


def simplex_grid_oracle(objective: Objective, resolution: float | None = None) -> OracleResult:
    """Brute-force optimum of a diagonal Augustin instance over the simplex.

    Scans diagonal states on a probability grid (spacing 1e-4 in dimension 2,
    1e-2 in dimension 3) and evaluates the classical divergence formula, an
    arithmetic path independent of the solvers' matrix calculus.
    """
    dim = objective.dim
    if dim not in (2, 3):
        raise ParameterError(f"the simplex oracle supports dimensions 2 and 3, got {dim}")
    if resolution is None:
        resolution = 1e-4 if dim == 2 else 1e-2
    if not 0.0 < resolution <= 0.5:
        raise ParameterError(f"resolution must lie in (0, 1/2], got {resolution}")
    weights, probs = _diagonal_ensemble(objective)
    family = objectives.PETZ_FAMILY if objective.kind == "petz-augustin" else objectives.SANDWICHED_FAMILY
    alpha = validate_alpha(objective.alpha, family)

    grid = _simplex_grid(dim, resolution)
    values = _classical_objective_values(weights, probs, alpha, grid)
    idx = int(np.argmin(values))
    best_q = grid[idx]
    best = DensityMatrix(np.diag(best_q.astype(np.complex128)))

    neighbors = []
    for i in range(dim):
        for j in range(i + 1, dim):
            for sign in (+1.0, -1.0):
                q = best_q.copy()
                q[i] += sign * resolution
                q[j] -= sign * resolution
                if np.all(q > objectives.EVAL_MIN_EIG) and q.sum() <= 1.0 + 1e-12:
                    neighbors.append(DensityMatrix(np.diag(q.astype(np.complex128))))
    return _oracle_result(objective, best, float(values[idx]), resolution, neighbors)


# ---------------------------------------------------------------------------
# Dimension-2 (state ball) oracle


def _ball_axis(limit: float, resolution: float) -> np.ndarray:
    steps = int(math.floor(limit / resolution))
    return np.arange(-steps, steps + 1) * resolution


def _sigma_powers_2x2(xyz: np.ndarray, power: float) -> np.ndarray:
    """Batched sigma(x, y, z)^power via the closed-form 2x2 spectral calculus."""
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    r = np.sqrt(x * x + y * y + z * z)
    lam_plus = 0.5 * (1.0 + r)
    lam_minus = 0.5 * (1.0 - r)
    a = 0.5 * (lam_plus**power + lam_minus**power)
    b = 0.5 * (lam_plus**power - lam_minus**power)
    scale = np.where(r > 0.0, np.divide(b, r, out=np.zeros_like(r), where=r > 0.0), 0.0)
    bloch = (
        x[:, None, None] * _PAULI_X
        + y[:, None, None] * _PAULI_Y
        + z[:, None, None] * _PAULI_Z
    )
    return a[:, None, None] * np.eye(2, dtype=np.complex128) + scale[:, None, None] * bloch


def _batched_trace_power(m: np.ndarray, alpha: float, hermitian_input: bool = True) -> np.ndarray:
    """Tr[M^alpha] for a batch of matrices with nonnegative real spectrum.

    Integer orders go through binary powering (no eigendecomposition), so the
    input may be a non-Hermitian product as long as its spectrum matches a PSD
    sandwich; fractional orders need a Hermitian batch.
    """
    if float(alpha).is_integer() and alpha >= 1.0:
        k = int(alpha)
        result = None
        power = m
        while k:
            if k & 1:
                result = power if result is None else result @ power
            k >>= 1
            if k:
                power = power @ power
        return np.einsum("mii->m", result).real
    if not hermitian_input:
        raise ParameterError("fractional orders need a Hermitian batch")
    mu = np.clip(np.linalg.eigvalsh(m), 0.0, None)
    with np.errstate(divide="ignore", over="ignore"):
        return np.power(mu, alpha).sum(axis=1)


def _ball_values(objective: Objective, xyz: np.ndarray) -> np.ndarray:
    """Objective values over a batch of Bloch points, by independent arithmetic."""
    alpha = objective.alpha
    kind = objective.kind
    if kind == "petz-augustin":
        sig_pow = _sigma_powers_2x2(xyz, 1.0 - alpha)
        weights = objective.ensemble.weights
        out = np.zeros(xyz.shape[0])
        for w, rho_a in zip(weights, objective._rho_alpha):
            t = np.einsum("ij,mji->m", rho_a, sig_pow).real
            out += w * np.log(t)
        return out / (alpha - 1.0)
    s = (1.0 - alpha) / (2.0 * alpha)
    if kind == "sandwiched-augustin":
        sig_s = _sigma_powers_2x2(xyz, s)
        weights = objective.ensemble.weights
        out = np.zeros(xyz.shape[0])
        for w, rho in zip(weights, objective._rho):
            m = sig_s @ rho @ sig_s
            m = 0.5 * (m + np.conj(np.swapaxes(m, 1, 2)))
            out += w * np.log(_batched_trace_power(m, alpha))
        return out / (alpha - 1.0)
    if isinstance(objective, objectives.GeneralizedSandwichedInfo):
        # Cyclicity collapses the sandwich: Tr[(P rho P)^a] = Tr[((I x S^2) R)^a]
        # with R = (tau^s x I) rho (tau^s x I) fixed, and the 2x2 factor
        # S^2 = sigma^(2s) = u I + v B is linear in the Pauli components, so the
        # whole batch is a linear combination of four constant matrices.
        if float(alpha).is_integer() and alpha >= 1.0:
            da = objective.joint.dim_a
            t_ext = np.kron(objective._tau_s, np.eye(2, dtype=np.complex128))
            fixed = t_ext @ objective.joint.state.matrix @ t_ext
            basis = np.stack(
                [np.kron(np.eye(da, dtype=np.complex128), pauli) @ fixed
                 for pauli in (_PAULI_X, _PAULI_Y, _PAULI_Z)]
            )
            x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
            r = np.sqrt(x * x + y * y + z * z)
            lam_plus = 0.5 * (1.0 + r)
            lam_minus = 0.5 * (1.0 - r)
            u = 0.5 * (lam_plus ** (2 * s) + lam_minus ** (2 * s))
            v = 0.5 * (lam_plus ** (2 * s) - lam_minus ** (2 * s))
            scale = np.where(r > 0.0, np.divide(v, r, out=np.zeros_like(r), where=r > 0.0), 0.0)
            coeff = scale[:, None] * xyz
            m = u[:, None, None] * fixed + np.einsum("mk,kij->mij", coeff, basis)
            with np.errstate(divide="ignore"):
                return np.log(_batched_trace_power(m, alpha, hermitian_input=False)) / (alpha - 1.0)
        da = objective.joint.dim_a
        sig_s = _sigma_powers_2x2(xyz, s)
        p = np.einsum("ab,mcd->macbd", objective._tau_s, sig_s).reshape(-1, 2 * da, 2 * da)
        m = p @ objective.joint.state.matrix @ p
        m = 0.5 * (m + np.conj(np.swapaxes(m, 1, 2)))
        with np.errstate(divide="ignore"):
            return np.log(_batched_trace_power(m, alpha)) / (alpha - 1.0)
    raise ParameterError(f"the state-ball oracle does not support objective kind {kind!r}")


def _bloch_density(point: np.ndarray) -> DensityMatrix:
    m = 0.5 * (
        np.eye(2, dtype=np.complex128)
        + point[0] * _PAULI_X
        + point[1] * _PAULI_Y
        + point[2] * _PAULI_Z
    )
    return DensityMatrix(m)


def bloch_grid_oracle(objective: Objective, resolution: float = 5e-3) -> OracleResult:
    """Brute-force optimum of a dimension-2 objective over the state ball.

    Parameterizes sigma = (I + x X + y Y + z Z)/2 over the ball of radius
    1 - 1e-6, scans it at the given spacing plane by plane, then refines once
    around the best point at 10x finer spacing.  Values come from closed-form
    2x2 spectral arithmetic, independent of the Objective implementation.
    """
    if objective.dim != 2:
        raise ParameterError(f"the state-ball oracle needs a dimension-2 objective, got {objective.dim}")
    if not 0.0 < resolution <= 0.5:
        raise ParameterError(f"resolution must lie in (0, 1/2], got {resolution}")
    limit = 1.0 - BALL_MARGIN
    axis = _ball_axis(limit, resolution)
    best_value = math.inf
    best_point = np.zeros(3)
    yz = np.stack([g.ravel() for g in np.meshgrid(axis, axis, indexing="ij")], axis=1)
    for x in axis:
        radius_sq = limit * limit - x * x
        plane = yz[yz[:, 0] ** 2 + yz[:, 1] ** 2 <= radius_sq]
        if plane.shape[0] == 0:
            continue
        points = np.concatenate([np.full((plane.shape[0], 1), x), plane], axis=1)
        values = _ball_values(objective, points)
        idx = int(np.argmin(values))
        if values[idx] < best_value:
            best_value = float(values[idx])
            best_point = points[idx]

    fine = resolution / 10.0
    offsets = np.arange(-10, 11) * fine
    gx, gy, gz = np.meshgrid(*(best_point[i] + offsets for i in range(3)), indexing="ij")
    local = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    local = local[np.einsum("mi,mi->m", local, local) <= limit * limit]
    values = _ball_values(objective, local)
    idx = int(np.argmin(values))
    if values[idx] < best_value:
        best_value = float(values[idx])
        best_point = local[idx]

    best = _bloch_density(best_point)
    neighbors = []
    for i in range(3):
        for sign in (+1.0, -1.0):
            candidate = best_point.copy()
            candidate[i] += sign * fine
            if float(candidate @ candidate) <= limit * limit:
                neighbors.append(_bloch_density(candidate))
    return _oracle_result(objective, best, best_value, resolution, neighbors)


# ---------------------------------------------------------------------------
# Fixtures: reference values carried between pipeline stages


def save_fixtures(path, entries: dict) -> None:
    """Write a fixtures document mapping instance keys to reference records."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"kind": "fixtures", "entries": entries}, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_fixtures(path) -> dict:
    """Read a fixtures document written by :func:`save_fixtures`."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"{path}: invalid document at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from None
    if not isinstance(doc, dict) or doc.get("kind") != "fixtures":
        raise ParseError(f"{path}: not a fixtures document")
    entries = doc.get("entries")
    if not isinstance(entries, dict):
        raise ParseError(f"{path}: missing 'entries' object")
    return entries
