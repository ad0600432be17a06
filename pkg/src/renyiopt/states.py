"""Quantum state containers, seeded random instances, and file serialization.

States are immutable wrappers around validated numpy arrays.  Random densities
are drawn from the Hilbert-Schmidt (normalized Ginibre) ensemble with a PCG64
generator, so every instance is reproducible from a 64-bit seed.
"""

from __future__ import annotations

import json
import hashlib
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg
from .errors import InvariantViolation, ParameterError, ParseError, ShapeError

# Eigenvalues below -PSD_REJECT_TOL reject the matrix outright; eigenvalues in
# [-PSD_REJECT_TOL, -PSD_KEEP_TOL) are treated as roundoff and clipped to zero.
PSD_REJECT_TOL = 1e-8
PSD_KEEP_TOL = 1e-12

# Traces within TRACE_RENORM_BAND of one are renormalized, anything worse is rejected.
TRACE_RENORM_BAND = 1e-6
TRACE_KEEP_TOL = 1e-12

# Below this eigenvalue level a support is reported as numerically deficient.
SUPPORT_WARN_TOL = 1e-10

MAX_SEED = 2**64 - 1


def check_seed(seed) -> int:
    """Validate a 64-bit unsigned RNG seed."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ParameterError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ParameterError(f"seed {seed} outside [0, 2^64)")
    return seed


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A d x d density matrix: Hermitian, positive semidefinite, unit trace.

    Construction symmetrizes the input, clips roundoff-negative eigenvalues to
    zero (rejecting anything below -1e-8) and renormalizes the trace when it is
    within 1e-6 of one.  Inputs that already satisfy the invariants to working
    precision are stored unchanged, which keeps serialization round trips exact.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.hermitian(self.matrix)
        if m.shape[0] < 1:
            raise InvariantViolation("density matrix must have dimension >= 1")
        spec = linalg.eigh(m)
        w, v = spec.eigenvalues, spec.eigenvectors
        if w[0] < -PSD_REJECT_TOL:
            raise InvariantViolation(
                f"not positive semidefinite: eigenvalue {w[0]:.3e} below {-PSD_REJECT_TOL:.1e}"
            )
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > TRACE_RENORM_BAND:
            raise InvariantViolation(f"trace {tr:.9g} differs from 1 by more than {TRACE_RENORM_BAND:.1e}")
        if w[0] < -PSD_KEEP_TOL:
            w = np.where(w < 0.0, 0.0, w)
            w = w / w.sum()
            m = (v * w) @ v.conj().T
            m = 0.5 * (m + m.conj().T)
        elif abs(tr - 1.0) > TRACE_KEEP_TOL:
            m = m / tr
            w = w / tr
        object.__setattr__(self, "matrix", m)
        self.__dict__["spectral"] = linalg.Spectral(eigenvalues=w, eigenvectors=v)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectral(self) -> linalg.Spectral:
        return linalg.eigh(self.matrix)

    @property
    def min_eigenvalue(self) -> float:
        return float(self.spectral.eigenvalues[0])


def density_from_spectral(eigenvalues, eigenvectors) -> DensityMatrix:
    """Build a DensityMatrix from an already-known eigendecomposition.

    Fast path for solver iterates: the caller guarantees that ``eigenvectors``
    is unitary and ``eigenvalues`` ascending; values are clipped at zero and
    renormalized to unit sum here.
    """
    w = np.asarray(eigenvalues, dtype=np.float64)
    v = np.asarray(eigenvectors, dtype=np.complex128)
    if w.ndim != 1 or v.shape != (w.shape[0], w.shape[0]):
        raise ShapeError(f"inconsistent spectral data: {w.shape} values, {v.shape} vectors")
    if np.any(np.diff(w) < 0):
        raise InvariantViolation("eigenvalues must be ascending")
    w = np.where(w < 0.0, 0.0, w)
    total = float(w.sum())
    if not np.isfinite(total) or total <= 0.0:
        raise InvariantViolation(f"eigenvalue sum {total:.3e} is not a positive finite number")
    w = w / total
    m = (v * w) @ v.conj().T
    out = object.__new__(DensityMatrix)
    object.__setattr__(out, "matrix", 0.5 * (m + m.conj().T))
    out.__dict__["spectral"] = linalg.Spectral(eigenvalues=w, eigenvectors=v)
    return out


@dataclass(frozen=True, eq=False)
class CQEnsemble:
    """A classical-quantum ensemble: weights P(x) and one density matrix per x."""

    weights: np.ndarray
    states: tuple[DensityMatrix, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        states = tuple(self.states)
        if w.ndim != 1 or w.shape[0] != len(states) or len(states) < 1:
            raise ShapeError(
                f"need one weight per state, got {w.shape[0]} weights for {len(states)} states"
            )
        if np.any(w < 0.0):
            raise InvariantViolation(f"negative weight {w.min():.3e}")
        if abs(float(w.sum()) - 1.0) > 1e-10:
            raise InvariantViolation(f"weights sum to {w.sum():.12g}, expected 1 within 1e-10")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise ShapeError(f"states have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", states)
        mean = np.einsum("x,xij->ij", w, np.stack([s.matrix for s in states]))
        if float(np.linalg.eigvalsh(0.5 * (mean + mean.conj().T))[0]) < SUPPORT_WARN_TOL:
            warnings.warn(
                "union of ensemble supports is numerically rank-deficient; "
                "the optimal state may sit on the boundary",
                stacklevel=2,
            )

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def size(self) -> int:
        return len(self.states)


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """A density matrix on a tensor product, with remembered factor dimensions.

    Index convention matches :func:`renyiopt.linalg.kron`: row = a * dim_b + i.
    """

    state: DensityMatrix
    dim_a: int
    dim_b: int

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise ParameterError(f"factor dimensions must be positive, got ({self.dim_a}, {self.dim_b})")
        if self.dim_a * self.dim_b != self.state.dim:
            raise ShapeError(
                f"state dimension {self.state.dim} is not dim_a*dim_b = {self.dim_a * self.dim_b}"
            )
        if self.reduced_b.min_eigenvalue < SUPPORT_WARN_TOL:
            warnings.warn(
                "reduced state on the B factor is numerically rank-deficient; "
                "the optimal state may sit on the boundary",
                stacklevel=2,
            )

    @cached_property
    def reduced_a(self) -> DensityMatrix:
        return DensityMatrix(linalg.partial_trace_b(self.state.matrix, self.dim_a, self.dim_b))

    @cached_property
    def reduced_b(self) -> DensityMatrix:
        return DensityMatrix(linalg.partial_trace_a(self.state.matrix, self.dim_a, self.dim_b))


def maximally_mixed(dim: int) -> DensityMatrix:
    """The maximally mixed state I/d."""
    if dim < 1:
        raise ParameterError(f"dimension must be positive, got {dim}")
    return DensityMatrix(np.eye(dim, dtype=np.complex128) / dim)


def trace_distance(x: DensityMatrix, y: DensityMatrix) -> float:
    """Trace distance (1/2) * ||x - y||_1."""
    return 0.5 * linalg.schatten_norm(x.matrix - y.matrix, 1)


def _generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(check_seed(seed)))


def _ginibre_density(dim: int, rng: np.random.Generator) -> DensityMatrix:
    # G has i.i.d. standard complex Gaussian entries; GG*/Tr[GG*] is the
    # Hilbert-Schmidt ensemble.  Draw order: real part block, then imaginary.
    re = rng.standard_normal((dim, dim))
    im = rng.standard_normal((dim, dim))
    g = re + 1j * im
    m = g @ g.conj().T
    return DensityMatrix(m / float(np.trace(m).real))


def random_density(dim: int, seed) -> DensityMatrix:
    """Draw a density matrix from the Hilbert-Schmidt ensemble."""
    if dim < 1:
        raise ParameterError(f"dimension must be positive, got {dim}")
    return _ginibre_density(dim, _generator(seed))


def random_cq_ensemble(size: int, dim: int, seed) -> CQEnsemble:
    """Draw a uniform-weight ensemble of ``size`` Hilbert-Schmidt states.

    All states come from one PCG64 stream seeded with ``seed``, drawn in
    ascending x order.
    """
    if size < 1:
        raise ParameterError(f"ensemble size must be positive, got {size}")
    if dim < 1:
        raise ParameterError(f"dimension must be positive, got {dim}")
    rng = _generator(seed)
    states = tuple(_ginibre_density(dim, rng) for _ in range(size))
    return CQEnsemble(weights=np.full(size, 1.0 / size), states=states)


def random_bipartite(dim_a: int, dim_b: int, seed) -> BipartiteState:
    """Draw a Hilbert-Schmidt state on a dim_a x dim_b tensor product."""
    if dim_a < 1 or dim_b < 1:
        raise ParameterError(f"factor dimensions must be positive, got ({dim_a}, {dim_b})")
    return BipartiteState(
        state=_ginibre_density(dim_a * dim_b, _generator(seed)), dim_a=dim_a, dim_b=dim_b
    )


# ---------------------------------------------------------------------------
# Serialization: one JSON document per instance.  Matrices are row-major lists
# of [re, im] pairs; floats use the shortest round-trip decimal representation,
# so save followed by load reproduces every entry bit for bit.

KIND_DENSITY = "density"
KIND_CQ = "cq-ensemble"
KIND_BIPARTITE = "bipartite"


def _matrix_to_rows(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_rows(rows, dim: int, where: str) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: entries are not numeric [re, im] pairs: {exc}") from None
    if arr.shape != (dim, dim, 2):
        raise ParseError(f"{where}: expected shape ({dim}, {dim}, 2), got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def to_document(value) -> dict:
    """Serialize a state container into a plain JSON-compatible dict."""
    if isinstance(value, DensityMatrix):
        return {"kind": KIND_DENSITY, "dims": [value.dim], "matrices": [_matrix_to_rows(value.matrix)]}
    if isinstance(value, CQEnsemble):
        return {
            "kind": KIND_CQ,
            "dims": [value.dim],
            "weights": [float(w) for w in value.weights],
            "matrices": [_matrix_to_rows(s.matrix) for s in value.states],
        }
    if isinstance(value, BipartiteState):
        return {
            "kind": KIND_BIPARTITE,
            "dims": [value.dim_a, value.dim_b],
            "matrices": [_matrix_to_rows(value.state.matrix)],
        }
    raise ParameterError(f"cannot serialize {type(value).__name__}")


def _require(doc: dict, field: str, where: str):
    if field not in doc:
        raise ParseError(f"{where}: missing field '{field}'")
    return doc[field]


def from_document(doc, where: str = "document"):
    """Rebuild a state container from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: expected an object, got {type(doc).__name__}")
    kind = _require(doc, "kind", where)
    dims = _require(doc, "dims", where)
    matrices = _require(doc, "matrices", where)
    if not isinstance(dims, list) or not all(isinstance(d, int) and d > 0 for d in dims):
        raise ParseError(f"{where}: 'dims' must be a list of positive integers, got {dims!r}")
    if not isinstance(matrices, list) or not matrices:
        raise ParseError(f"{where}: 'matrices' must be a non-empty list")

    if kind == KIND_DENSITY:
        if len(dims) != 1 or len(matrices) != 1:
            raise ParseError(f"{where}: a density document needs dims [d] and one matrix")
        return DensityMatrix(_matrix_from_rows(matrices[0], dims[0], f"{where}: matrices[0]"))
    if kind == KIND_CQ:
        if len(dims) != 1:
            raise ParseError(f"{where}: a cq-ensemble document needs dims [d]")
        weights = _require(doc, "weights", where)
        if not isinstance(weights, list) or len(weights) != len(matrices):
            raise ParseError(f"{where}: 'weights' must list one weight per matrix")
        states = tuple(
            DensityMatrix(_matrix_from_rows(m, dims[0], f"{where}: matrices[{i}]"))
            for i, m in enumerate(matrices)
        )
        return CQEnsemble(weights=np.asarray(weights, dtype=np.float64), states=states)
    if kind == KIND_BIPARTITE:
        if len(dims) != 2 or len(matrices) != 1:
            raise ParseError(f"{where}: a bipartite document needs dims [dA, dB] and one matrix")
        joint = DensityMatrix(
            _matrix_from_rows(matrices[0], dims[0] * dims[1], f"{where}: matrices[0]")
        )
        return BipartiteState(state=joint, dim_a=dims[0], dim_b=dims[1])
    raise ParseError(f"{where}: unknown kind {kind!r}")


def save(path, value) -> None:
    """Write a state container to ``path`` as a JSON document."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_document(value), fh, indent=1)
        fh.write("\n")


def load(path):
    """Read a state container written by :func:`save`."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"{path}: invalid document at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from None
    return from_document(doc, where=str(path))


def digest(value) -> str:
    """Stable hex digest of a state container, for keying fixture files."""
    payload = json.dumps(to_document(value), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("ascii")).hexdigest()
