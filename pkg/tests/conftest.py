"""Shared deterministic instance builders for the test suite."""

import numpy as np

import renyiopt as ro

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Repeat the acceptance verdict lines where capture cannot hide them."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def diagonal_density(probs) -> ro.DensityMatrix:
    return ro.DensityMatrix(np.diag(np.asarray(probs, dtype=np.complex128)))


def diagonal_ensemble(size: int, dim: int, seed: int) -> ro.CQEnsemble:
    """Uniform ensemble of diagonal states; probabilities from seeded draws."""
    states = []
    for i in range(size):
        p = np.clip(np.diag(ro.random_density(dim, seed * 1000 + i).matrix).real, 0.0, None)
        states.append(diagonal_density(p / p.sum()))
    return ro.CQEnsemble(np.full(size, 1.0 / size), tuple(states))


def single_state_ensemble(dim: int, seed: int) -> ro.CQEnsemble:
    return ro.CQEnsemble(np.array([1.0]), (ro.random_density(dim, seed),))


def product_bipartite(dim_a: int, dim_b: int, seed: int) -> ro.BipartiteState:
    a = ro.random_density(dim_a, seed)
    b = ro.random_density(dim_b, seed + 1)
    return ro.BipartiteState(ro.DensityMatrix(np.kron(a.matrix, b.matrix)), dim_a, dim_b)


def block_diagonal_bipartite(ensemble: ro.CQEnsemble) -> ro.BipartiteState:
    """Embed an ensemble as the joint state sum_x P(x) |x><x| (x) rho_x."""
    n, d = ensemble.size, ensemble.dim
    m = np.zeros((n * d, n * d), dtype=np.complex128)
    for x, (w, s) in enumerate(zip(ensemble.weights, ensemble.states)):
        m[x * d:(x + 1) * d, x * d:(x + 1) * d] = w * s.matrix
    return ro.BipartiteState(ro.DensityMatrix(m), n, d)


def random_unitary(dim: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
