"""Order-alpha Renyi divergences and the convex objectives built from them.

Every objective maps a full-rank density matrix sigma to an average divergence
from fixed input states, exposing the value together with the Euclidean
gradient needed by mirror descent.  Gradients are assembled from Frechet
derivatives of spectral power functions, never from finite differences.
"""

from __future__ import annotations

import math

import numpy as np

from . import linalg
from .errors import BoundaryError, NumericalError, ParameterError, ShapeError
from .linalg import frechet_apply, matrix_fn, power_fn, support_power_fn
from .states import BipartiteState, CQEnsemble, DensityMatrix

# Orders closer to 1 than this are rejected; use umegaki_relative_entropy there.
ALPHA_GUARD = 1e-6

# Eigenvalues of sigma at or below this level form its numerical kernel.
SUPPORT_KERNEL_TOL = 1e-12

# Largest tolerated mass of rho on the kernel of sigma before the divergence is +inf.
SUPPORT_MASS_TOL = 1e-10

# Objectives require min eigenvalue of sigma above this when evaluated.
EVAL_MIN_EIG = 1e-12

PETZ_FAMILY = "petz"
SANDWICHED_FAMILY = "sandwiched"


def validate_alpha(alpha, family: str) -> float:
    """Check an order parameter against its family range and the alpha=1 guard."""
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise ParameterError(f"alpha must be finite, got {alpha}")
    if abs(alpha - 1.0) < ALPHA_GUARD:
        raise ParameterError(
            f"alpha={alpha:.9g} is inside the guard band around 1; use umegaki_relative_entropy"
        )
    if family == PETZ_FAMILY:
        if not 0.0 < alpha <= 2.0:
            raise ParameterError(f"alpha={alpha:.9g} outside (0, 2] for the Petz family")
    elif family == SANDWICHED_FAMILY:
        if alpha < 0.5:
            raise ParameterError(f"alpha={alpha:.9g} outside [1/2, inf) for the sandwiched family")
    else:
        raise ParameterError(f"unknown divergence family {family!r}")
    return alpha


def _same_dim(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.dim != sigma.dim:
        raise ShapeError(f"dimension mismatch: rho is {rho.dim}, sigma is {sigma.dim}")


def _kernel_mass(rho: DensityMatrix, sigma_spec: linalg.Spectral) -> float:
    """Mass of rho on the numerical kernel of sigma."""
    kernel = sigma_spec.eigenvalues <= SUPPORT_KERNEL_TOL
    if not np.any(kernel):
        return 0.0
    vk = sigma_spec.eigenvectors[:, kernel]
    return float(np.einsum("ia,ij,ja->", vk.conj(), rho.matrix, vk).real)


def _logsumexp(a: np.ndarray, axis: int | None = None):
    if axis is None:
        m = float(np.max(a))
        if not math.isfinite(m):
            return m
        return m + math.log(float(np.sum(np.exp(a - m))))
    m = np.max(a, axis=axis)
    shift = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return shift + np.log(np.sum(np.exp(a - np.expand_dims(shift, axis)), axis=axis))


def _log_trace_power(mu: np.ndarray, alpha: float, axis=None):
    """log Tr[M^alpha] from the eigenvalues of M, stable for large alpha."""
    mu = np.clip(mu, 0.0, None)
    with np.errstate(divide="ignore"):
        lmu = alpha * np.log(mu)
    return _logsumexp(lmu, axis=axis)


def petz_divergence(rho: DensityMatrix, sigma: DensityMatrix, alpha) -> float:
    """Petz divergence log(Tr[rho^a sigma^(1-a)]) / (a - 1), +inf off support.

    Powers of sigma follow the pseudo-inverse convention on its support; the
    divergence is +inf when rho carries mass on the kernel of sigma.
    """
    alpha = validate_alpha(alpha, PETZ_FAMILY)
    _same_dim(rho, sigma)
    spec = sigma.spectral
    if _kernel_mass(rho, spec) > SUPPORT_MASS_TOL:
        return math.inf
    rho_a = matrix_fn(rho.spectral, power_fn(alpha))
    sig_pow = matrix_fn(spec, support_power_fn(1.0 - alpha, SUPPORT_KERNEL_TOL))
    t = float(np.einsum("ij,ji->", rho_a, sig_pow).real)
    if t <= 0.0:
        return math.inf
    return math.log(t) / (alpha - 1.0)


def sandwiched_divergence(rho: DensityMatrix, sigma: DensityMatrix, alpha) -> float:
    """Sandwiched divergence log(Tr[(sigma^s rho sigma^s)^a]) / (a - 1), s = (1-a)/(2a)."""
    alpha = validate_alpha(alpha, SANDWICHED_FAMILY)
    _same_dim(rho, sigma)
    spec = sigma.spectral
    if _kernel_mass(rho, spec) > SUPPORT_MASS_TOL:
        return math.inf
    s = (1.0 - alpha) / (2.0 * alpha)
    sig_s = matrix_fn(spec, support_power_fn(s, SUPPORT_KERNEL_TOL))
    m = sig_s @ rho.matrix @ sig_s
    mu = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    ell = _log_trace_power(mu, alpha)
    if not math.isfinite(ell):
        return math.inf
    return ell / (alpha - 1.0)


def umegaki_relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Relative entropy Tr[rho (log rho - log sigma)], +inf off support."""
    _same_dim(rho, sigma)
    spec = sigma.spectral
    if _kernel_mass(rho, spec) > SUPPORT_MASS_TOL:
        return math.inf
    p = np.clip(rho.spectral.eigenvalues, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = float(np.sum(np.where(p > 0.0, p * np.log(p), 0.0)))
    support = spec.eigenvalues > SUPPORT_KERNEL_TOL
    vs = spec.eigenvectors[:, support]
    occupancy = np.einsum("ia,ij,ja->a", vs.conj(), rho.matrix, vs).real
    cross = float(np.sum(occupancy * np.log(spec.eigenvalues[support])))
    return plogp - cross


class Objective:
    """A convex function of a density matrix with its Euclidean gradient.

    ``value`` returns +inf at rank-deficient sigma; ``value_and_grad`` raises
    :class:`BoundaryError` there instead, since solver iterates stay full rank
    by construction and a boundary evaluation signals a bug.
    """

    kind: str = "objective"
    dim: int
    alpha: float

    def _checked_spectral(self, sigma: DensityMatrix) -> linalg.Spectral:
        if sigma.dim != self.dim:
            raise ShapeError(f"sigma has dimension {sigma.dim}, objective needs {self.dim}")
        return sigma.spectral

    def value(self, sigma: DensityMatrix) -> float:
        spec = self._checked_spectral(sigma)
        if spec.eigenvalues[0] <= EVAL_MIN_EIG:
            return math.inf
        val, _ = self._evaluate(spec, with_grad=False)
        return val

    def value_and_grad(self, sigma: DensityMatrix) -> tuple[float, np.ndarray]:
        spec = self._checked_spectral(sigma)
        if spec.eigenvalues[0] <= EVAL_MIN_EIG:
            raise BoundaryError(
                f"gradient requested at a rank-deficient state (min eigenvalue "
                f"{spec.eigenvalues[0]:.3e} <= {EVAL_MIN_EIG:.1e})"
            )
        return self._evaluate(spec, with_grad=True)

    def _evaluate(self, spec: linalg.Spectral, with_grad: bool):
        raise NotImplementedError

    def _finite_or_raise(self, val: float) -> float:
        if not math.isfinite(val):
            raise NumericalError(f"{self.kind} objective evaluated to {val}", dim=self.dim)
        return val


class PetzAugustin(Objective):
    """Ensemble average of Petz divergences, as a function of sigma."""

    kind = "petz-augustin"

    def __init__(self, ensemble: CQEnsemble, alpha):
        self.alpha = validate_alpha(alpha, PETZ_FAMILY)
        self.ensemble = ensemble
        self.dim = ensemble.dim
        # rho_x^alpha is constant along the optimization, build it once.
        self._rho_alpha = np.stack(
            [matrix_fn(s.spectral, power_fn(self.alpha)) for s in ensemble.states]
        )

    def _evaluate(self, spec, with_grad):
        alpha = self.alpha
        sig_pow = matrix_fn(spec, power_fn(1.0 - alpha))
        t = np.einsum("xij,ji->x", self._rho_alpha, sig_pow).real
        if np.any(t <= 0.0) or not np.all(np.isfinite(t)):
            raise NumericalError("nonpositive trace term in the Petz objective", dim=self.dim)
        w = self.ensemble.weights
        val = self._finite_or_raise(float(np.sum(w * np.log(t))) / (alpha - 1.0))
        if not with_grad:
            return val, None
        combined = np.sum((w / t)[:, None, None] * self._rho_alpha, axis=0)
        grad = frechet_apply(spec, power_fn(1.0 - alpha), combined) / (alpha - 1.0)
        return val, grad


class SandwichedAugustin(Objective):
    """Ensemble average of sandwiched divergences, as a function of sigma."""

    kind = "sandwiched-augustin"

    def __init__(self, ensemble: CQEnsemble, alpha):
        self.alpha = validate_alpha(alpha, SANDWICHED_FAMILY)
        self.ensemble = ensemble
        self.dim = ensemble.dim
        self._s = (1.0 - self.alpha) / (2.0 * self.alpha)
        self._rho = np.stack([s.matrix for s in ensemble.states])

    def _evaluate(self, spec, with_grad):
        alpha = self.alpha
        sig_s = matrix_fn(spec, power_fn(self._s))
        m = sig_s @ self._rho @ sig_s
        m = 0.5 * (m + np.conj(np.swapaxes(m, 1, 2)))
        mu, vm = np.linalg.eigh(m)
        mu = np.clip(mu, 0.0, None)
        with np.errstate(divide="ignore"):
            log_terms = alpha * np.log(mu)
        ell = _logsumexp(log_terms, axis=1)
        w = self.ensemble.weights
        val = self._finite_or_raise(float(np.sum(w * ell)) / (alpha - 1.0))
        if not with_grad:
            return val, None
        # K_x / Tr[K_x] for K_x = (sigma^s rho_x sigma^s)^alpha, trace-normalized
        # in the log domain so large alpha cannot overflow.
        nu = np.exp(log_terms - ell[:, None])
        k_hat = (vm * nu[:, None, :]) @ np.conj(np.swapaxes(vm, 1, 2))
        combined = np.sum(w[:, None, None] * k_hat, axis=0)
        sig_ms = matrix_fn(spec, power_fn(-self._s))
        inner = frechet_apply(spec, power_fn((1.0 - alpha) / alpha), combined)
        grad = (alpha / (alpha - 1.0)) * (sig_ms @ inner @ sig_ms)
        # Symmetrize directly: near-singular sigma inflates entries so the
        # roundoff residue can exceed any absolute hermiticity tolerance.
        return val, 0.5 * (grad + grad.conj().T)


class GeneralizedSandwichedInfo(Objective):
    """Sandwiched divergence of a bipartite state from tau_A (x) sigma.

    ``tau_a`` is a fixed positive semidefinite matrix on the A factor whose
    support contains the support of the reduced state rho_A; powers of tau_A
    use the pseudo-inverse convention.
    """

    kind = "generalized-sandwiched-info"

    def __init__(self, joint: BipartiteState, tau_a, alpha, kind: str | None = None):
        self.alpha = validate_alpha(alpha, SANDWICHED_FAMILY)
        if kind is not None:
            self.kind = kind
        self.joint = joint
        self.dim = joint.dim_b
        self._s = (1.0 - self.alpha) / (2.0 * self.alpha)
        tau = linalg.hermitian(tau_a)
        if tau.shape[0] != joint.dim_a:
            raise ShapeError(f"tau_a has dimension {tau.shape[0]}, expected {joint.dim_a}")
        tau_spec = linalg.eigh(tau)
        if tau_spec.eigenvalues[0] < -1e-10:
            raise ParameterError(
                f"tau_a must be positive semidefinite, found eigenvalue {tau_spec.eigenvalues[0]:.3e}"
            )
        if _kernel_mass(joint.reduced_a, tau_spec) > SUPPORT_MASS_TOL:
            raise ParameterError("support of the reduced state rho_A exceeds the support of tau_a")
        self._tau_s = matrix_fn(tau_spec, support_power_fn(self._s, SUPPORT_KERNEL_TOL))

    def _evaluate(self, spec, with_grad):
        alpha = self.alpha
        da, db = self.joint.dim_a, self.joint.dim_b
        sig_s = matrix_fn(spec, power_fn(self._s))
        p = linalg.kron(self._tau_s, sig_s)
        m = p @ self.joint.state.matrix @ p
        m = 0.5 * (m + m.conj().T)
        mu, vm = np.linalg.eigh(m)
        mu = np.clip(mu, 0.0, None)
        with np.errstate(divide="ignore"):
            log_terms = alpha * np.log(mu)
        ell = _logsumexp(log_terms)
        val = self._finite_or_raise(ell / (alpha - 1.0))
        if not with_grad:
            return val, None
        nu = np.exp(log_terms - ell)
        k_hat = (vm * nu) @ vm.conj().T
        reduced = linalg.partial_trace_a(k_hat, da, db)
        sig_ms = matrix_fn(spec, power_fn(-self._s))
        inner = frechet_apply(spec, power_fn((1.0 - alpha) / alpha), reduced)
        grad = (alpha / (alpha - 1.0)) * (sig_ms @ inner @ sig_ms)
        return val, 0.5 * (grad + grad.conj().T)


def make_petz_augustin(ensemble: CQEnsemble, alpha) -> PetzAugustin:
    """Average Petz divergence from the ensemble states to sigma."""
    return PetzAugustin(ensemble, alpha)


def make_sandwiched_augustin(ensemble: CQEnsemble, alpha) -> SandwichedAugustin:
    """Average sandwiched divergence from the ensemble states to sigma."""
    return SandwichedAugustin(ensemble, alpha)


def make_generalized_sandwiched_info(joint: BipartiteState, tau_a, alpha) -> GeneralizedSandwichedInfo:
    """Sandwiched divergence of the joint state from tau_A (x) sigma."""
    return GeneralizedSandwichedInfo(joint, tau_a, alpha)


def make_conditional_entropy(joint: BipartiteState, alpha) -> GeneralizedSandwichedInfo:
    """Objective whose negated minimum is the conditional sandwiched Renyi entropy.

    The minimum over sigma is bounded below by -log(min(dim_a, dim_b)).
    """
    tau = np.eye(joint.dim_a, dtype=np.complex128)
    return GeneralizedSandwichedInfo(joint, tau, alpha, kind="conditional-entropy")


def make_sandwiched_renyi_info(joint: BipartiteState, alpha) -> GeneralizedSandwichedInfo:
    """Objective whose minimum is the sandwiched Renyi information of the joint state."""
    return GeneralizedSandwichedInfo(
        joint, joint.reduced_a.matrix, alpha, kind="sandwiched-renyi-info"
    )
