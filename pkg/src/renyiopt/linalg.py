"""Dense Hermitian linear algebra and matrix functional calculus.

All routines operate on square complex numpy arrays.  Eigendecompositions come
from LAPACK via numpy; matrix functions, their Frechet derivatives and Schatten
norms are assembled from the spectral data without ever materializing
projectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NumericalError, ParameterError, ShapeError

# Largest tolerated max-entry magnitude of the anti-Hermitian part (M - M*)/2.
HERMITICITY_TOL = 1e-8

# Divided differences switch to the derivative once |a - b| <= DD_REL * max(1, |a|, |b|).
DD_REL = 1e-11

# Tolerated imaginary residue of a Hermitian trace pairing, relative to scale.
TRACE_INNER_IMAG_TOL = 1e-10


def hermitian(matrix, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Return the Hermitian part (M + M*)/2 of a square complex matrix.

    Inputs whose anti-Hermitian part exceeds ``tol`` in max entry magnitude are
    rejected: that indicates corrupted data rather than roundoff.
    """
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError("matrix contains non-finite entries", dim=m.shape[0])
    skew = 0.5 * np.abs(m - m.conj().T).max() if m.size else 0.0
    if skew > tol:
        raise ShapeError(
            f"matrix is not Hermitian: anti-Hermitian part has max entry {skew:.3e} > {tol:.1e}"
        )
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True, eq=False)
class Spectral:
    """Eigendecomposition of a Hermitian matrix.

    ``eigenvalues`` are real and ascending, ``eigenvectors`` holds the matching
    orthonormal eigenvectors as columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eigh(matrix) -> Spectral:
    """Eigendecompose a Hermitian matrix into a :class:`Spectral`."""
    m = hermitian(matrix)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigendecomposition failed on a {m.shape[0]}x{m.shape[0]} matrix: {exc}",
            dim=m.shape[0],
        ) from exc
    return Spectral(eigenvalues=w, eigenvectors=v)


def _as_spectral(matrix_or_spectral) -> Spectral:
    if isinstance(matrix_or_spectral, Spectral):
        return matrix_or_spectral
    return eigh(matrix_or_spectral)


@dataclass(frozen=True)
class ScalarFunction:
    """A scalar function and its derivative, lifted to matrices elsewhere."""

    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    name: str = "f"


def power_fn(p: float) -> ScalarFunction:
    """u -> u**p with derivative p * u**(p - 1)."""
    return ScalarFunction(
        value=lambda u: np.power(u, p),
        derivative=lambda u: p * np.power(u, p - 1.0),
        name=f"u^{p:g}",
    )


def support_power_fn(p: float, support_tol: float) -> ScalarFunction:
    """u -> u**p for u > support_tol and 0 on the kernel (pseudo-inverse convention)."""

    def value(u):
        u = np.asarray(u, dtype=np.float64)
        with np.errstate(all="ignore"):
            raw = np.power(u, p)
        return np.where(u > support_tol, raw, 0.0)

    def derivative(u):
        u = np.asarray(u, dtype=np.float64)
        with np.errstate(all="ignore"):
            raw = p * np.power(u, p - 1.0)
        return np.where(u > support_tol, raw, 0.0)

    return ScalarFunction(value, derivative, name=f"u^{p:g} on support")


LOG = ScalarFunction(np.log, lambda u: 1.0 / u, name="log")
EXP = ScalarFunction(np.exp, np.exp, name="exp")


def matrix_fn(matrix_or_spectral, f: ScalarFunction) -> np.ndarray:
    """Apply the scalar function f to a Hermitian matrix via its spectrum."""
    s = _as_spectral(matrix_or_spectral)
    with np.errstate(all="ignore"):
        fw = np.asarray(f.value(s.eigenvalues), dtype=np.float64)
    bad = ~np.isfinite(fw)
    if np.any(bad):
        raise DomainError(
            f"eigenvalue {s.eigenvalues[np.argmax(bad)]:.17g} is outside the domain of {f.name}"
        )
    v = s.eigenvectors
    out = (v * fw) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def divided_difference(f: ScalarFunction, a: float, b: float) -> float:
    """First-order divided difference f^[1](a, b).

    Falls back to f'((a + b)/2) once |a - b| <= DD_REL * max(1, |a|, |b|), which
    keeps the table well defined at coincident eigenvalue pairs.
    """
    tau = DD_REL * max(1.0, abs(a), abs(b))
    with np.errstate(all="ignore"):
        if abs(a - b) <= tau:
            out = float(f.derivative(0.5 * (a + b)))
        else:
            out = float((f.value(a) - f.value(b)) / (a - b))
    if not np.isfinite(out):
        raise DomainError(f"divided difference of {f.name} undefined at ({a:.17g}, {b:.17g})")
    return out


def dd_table(f: ScalarFunction, eigenvalues: np.ndarray) -> np.ndarray:
    """Divided-difference table f^[1](w_a, w_b) over all eigenvalue pairs."""
    w = np.asarray(eigenvalues, dtype=np.float64)
    aw = np.abs(w)
    tau = DD_REL * np.maximum(1.0, np.maximum(aw[:, None], aw[None, :]))
    diff = w[:, None] - w[None, :]
    confluent = np.abs(diff) <= tau
    with np.errstate(all="ignore"):
        fw = np.asarray(f.value(w), dtype=np.float64)
        dmid = np.asarray(f.derivative(0.5 * (w[:, None] + w[None, :])), dtype=np.float64)
        ratio = (fw[:, None] - fw[None, :]) / np.where(confluent, 1.0, diff)
    table = np.where(confluent, dmid, ratio)
    bad = ~np.isfinite(table)
    if np.any(bad):
        a_idx, b_idx = np.unravel_index(np.argmax(bad), table.shape)
        raise DomainError(
            f"divided difference of {f.name} undefined at ({w[a_idx]:.17g}, {w[b_idx]:.17g})"
        )
    return table


def frechet_apply(matrix_or_spectral, f: ScalarFunction, direction) -> np.ndarray:
    """Frechet derivative Df(S)[A] of the matrix function induced by f.

    In the eigenbasis of S the derivative is a Hadamard product with the
    divided-difference table: Df(S)[A] = V (T o (V* A V)) V*.
    """
    s = _as_spectral(matrix_or_spectral)
    a = hermitian(direction)
    if a.shape[0] != s.dim:
        raise ShapeError(f"direction has shape {a.shape}, expected ({s.dim}, {s.dim})")
    table = dd_table(f, s.eigenvalues)
    v = s.eigenvectors
    rotated = v.conj().T @ a @ v
    out = v @ (table * rotated) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def partial_trace_a(matrix, dim_a: int, dim_b: int) -> np.ndarray:
    """Trace out the first tensor factor of a (dim_a*dim_b)-dimensional matrix.

    Row-major index convention: row = a * dim_b + i, the B index varies fastest.
    """
    m = _bipartite_checked(matrix, dim_a, dim_b)
    r = m.reshape(dim_a, dim_b, dim_a, dim_b)
    return np.einsum("aiaj->ij", r)


def partial_trace_b(matrix, dim_a: int, dim_b: int) -> np.ndarray:
    """Trace out the second tensor factor; same index convention as partial_trace_a."""
    m = _bipartite_checked(matrix, dim_a, dim_b)
    r = m.reshape(dim_a, dim_b, dim_a, dim_b)
    return np.einsum("aibi->ab", r)


def _bipartite_checked(matrix, dim_a: int, dim_b: int) -> np.ndarray:
    if dim_a < 1 or dim_b < 1:
        raise ParameterError(f"tensor factor dimensions must be positive, got ({dim_a}, {dim_b})")
    m = np.asarray(matrix, dtype=np.complex128)
    d = dim_a * dim_b
    if m.shape != (d, d):
        raise ShapeError(f"expected shape ({d}, {d}) for factors ({dim_a}, {dim_b}), got {m.shape}")
    return m


def kron(a, b) -> np.ndarray:
    """Kronecker product, consistent with the row-major (A, B) index convention."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def schatten_norm(matrix, p) -> float:
    """Schatten p-norm of a Hermitian matrix; p is 1 (trace norm) or inf (operator norm)."""
    m = hermitian(matrix)
    if p not in (1, np.inf):
        raise ParameterError(f"unsupported Schatten order {p!r}, use 1 or numpy.inf")
    w = np.abs(np.linalg.eigvalsh(m))
    return float(w.sum() if p == 1 else w.max())


def trace_inner(a, b) -> float:
    """Hilbert-Schmidt pairing Tr[A B] of two Hermitian matrices, as a real float."""
    ah = hermitian(a)
    bh = hermitian(b)
    if ah.shape != bh.shape:
        raise ShapeError(f"shape mismatch {ah.shape} vs {bh.shape}")
    val = complex(np.einsum("ij,ji->", ah, bh))
    scale = max(1.0, float(np.linalg.norm(ah)) * float(np.linalg.norm(bh)))
    if abs(val.imag) > TRACE_INNER_IMAG_TOL * scale:
        raise NumericalError(
            f"trace pairing of Hermitian matrices has imaginary residue {val.imag:.3e}",
            dim=ah.shape[0],
        )
    return float(val.real)
