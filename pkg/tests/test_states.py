"""State containers, the seeded random ensemble, and file round trips."""

import json

import numpy as np
import pytest

import renyiopt as ro
from renyiopt import states
from renyiopt.errors import InvariantViolation, ParameterError, ParseError, ShapeError


class TestDensityMatrix:
    def test_random_samples_satisfy_invariants(self):
        # Property sweep: 1000 seeded samples across the dimension ladder.
        for dim in (1, 2, 4, 8, 16):
            for seed in range(200):
                rho = ro.random_density(dim, seed)
                assert rho.min_eigenvalue >= -1e-12
                assert abs(np.trace(rho.matrix).real - 1.0) <= 1e-10
                assert np.allclose(rho.matrix, rho.matrix.conj().T, atol=0)

    def test_clips_roundoff_negative_eigenvalue(self):
        rho = ro.DensityMatrix(np.diag([1.0 + 1e-9, -1e-9]).astype(complex))
        assert rho.min_eigenvalue >= 0.0
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-12)

    def test_rejects_genuinely_negative_eigenvalue(self):
        with pytest.raises(InvariantViolation, match="positive semidefinite"):
            ro.DensityMatrix(np.diag([1.0 + 2e-8, -2e-8]).astype(complex))

    def test_renormalizes_near_unit_trace(self):
        rho = ro.DensityMatrix((1.0 + 4e-7) * np.eye(2, dtype=complex) / 2.0)
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-12)

    def test_rejects_wrong_trace(self):
        with pytest.raises(InvariantViolation, match="trace"):
            ro.DensityMatrix(np.diag([0.3, 0.2]).astype(complex))

    def test_dimension_one_is_forced(self):
        assert np.allclose(ro.random_density(1, 9).matrix, [[1.0]])


class TestRandomGeneration:
    def test_deterministic_under_fixed_seed(self):
        a = ro.random_density(4, 12345)
        b = ro.random_density(4, 12345)
        assert np.array_equal(a.matrix, b.matrix)

    def test_rejects_zero_dimension(self):
        with pytest.raises(ParameterError):
            ro.random_density(0, 0)

    def test_seed_validation(self):
        with pytest.raises(ParameterError):
            ro.random_density(2, -1)
        with pytest.raises(ParameterError):
            ro.random_density(2, 2**64)
        with pytest.raises(ParameterError):
            ro.random_density(2, True)
        assert states.check_seed(np.uint64(7)) == 7

    def test_mean_concentrates_on_maximally_mixed(self):
        # Monte Carlo smoke test; the ensemble mean is I/d.
        mean = np.zeros((4, 4), dtype=complex)
        for seed in range(10_000):
            mean += ro.random_density(4, seed).matrix
        mean /= 10_000
        assert np.max(np.abs(mean - np.eye(4) / 4.0)) <= 0.02
        # Weak unitary invariance: the mean commutes with a fixed conjugation.
        from conftest import random_unitary

        u = random_unitary(4, 123)
        assert np.max(np.abs(u @ mean @ u.conj().T - mean)) <= 0.03

    def test_cq_ensemble_shapes_and_weights(self):
        ens = ro.random_cq_ensemble(1, 3, 0)
        assert np.allclose(ens.weights, [1.0])
        ens = ro.random_cq_ensemble(5, 3, 8)
        assert ens.size == 5 and ens.dim == 3
        assert np.allclose(ens.weights, 0.2)
        again = ro.random_cq_ensemble(5, 3, 8)
        for a, b in zip(ens.states, again.states):
            assert np.array_equal(a.matrix, b.matrix)
        with pytest.raises(ParameterError):
            ro.random_cq_ensemble(0, 3, 0)

    def test_bipartite_dim_one_matches_plain_density(self):
        bp = ro.random_bipartite(1, 5, 77)
        assert np.array_equal(bp.state.matrix, ro.random_density(5, 77).matrix)
        assert bp.reduced_b.min_eigenvalue > 1e-10

    def test_bipartite_shape_validation(self):
        with pytest.raises(ShapeError):
            ro.BipartiteState(ro.random_density(6, 0), 2, 2)
        with pytest.raises(ParameterError):
            ro.random_bipartite(0, 2, 0)


class TestEnsembleValidation:
    def test_weights_must_sum_to_one(self):
        rho = ro.random_density(2, 0)
        with pytest.raises(InvariantViolation):
            ro.CQEnsemble(np.array([0.6, 0.6]), (rho, rho))

    def test_negative_weight_rejected(self):
        rho = ro.random_density(2, 0)
        with pytest.raises(InvariantViolation):
            ro.CQEnsemble(np.array([1.2, -0.2]), (rho, rho))

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(ShapeError):
            ro.CQEnsemble(np.array([0.5, 0.5]), (ro.random_density(2, 0), ro.random_density(3, 0)))

    def test_deficient_union_support_warns(self):
        proj = ro.DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
        with pytest.warns(UserWarning, match="rank-deficient"):
            ro.CQEnsemble(np.array([0.5, 0.5]), (proj, proj))


class TestMaximallyMixed:
    def test_values(self):
        mm = ro.maximally_mixed(2)
        assert np.allclose(mm.matrix, np.diag([0.5, 0.5]))
        assert ro.maximally_mixed(5).min_eigenvalue == pytest.approx(0.2)
        with pytest.raises(ParameterError):
            ro.maximally_mixed(0)


class TestSerialization:
    def test_density_round_trip_exact(self, tmp_path):
        rho = ro.random_density(5, 4)
        path = tmp_path / "rho.json"
        ro.save(path, rho)
        loaded = ro.load(path)
        assert isinstance(loaded, ro.DensityMatrix)
        assert np.array_equal(loaded.matrix, rho.matrix)

    def test_cq_round_trip_exact(self, tmp_path):
        ens = ro.random_cq_ensemble(3, 4, 5)
        path = tmp_path / "ens.json"
        ro.save(path, ens)
        loaded = ro.load(path)
        assert isinstance(loaded, ro.CQEnsemble)
        assert np.array_equal(loaded.weights, ens.weights)
        for a, b in zip(loaded.states, ens.states):
            assert np.array_equal(a.matrix, b.matrix)

    def test_bipartite_round_trip_exact(self, tmp_path):
        bp = ro.random_bipartite(2, 3, 6)
        path = tmp_path / "bp.json"
        ro.save(path, bp)
        loaded = ro.load(path)
        assert isinstance(loaded, ro.BipartiteState)
        assert (loaded.dim_a, loaded.dim_b) == (2, 3)
        assert np.array_equal(loaded.state.matrix, bp.state.matrix)

    def test_digest_is_stable_and_discriminating(self, tmp_path):
        rho = ro.random_density(3, 7)
        path = tmp_path / "rho.json"
        ro.save(path, rho)
        assert ro.digest(ro.load(path)) == ro.digest(rho)
        assert ro.digest(ro.random_density(3, 8)) != ro.digest(rho)

    def test_invalid_trace_file_reports_invariant(self, tmp_path):
        doc = states.to_document(ro.random_density(2, 1))
        doc["matrices"][0] = [[[0.25, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.25, 0.0]]]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(InvariantViolation, match="trace"):
            ro.load(path)

    def test_truncated_file_is_a_parse_error(self, tmp_path):
        rho = ro.random_density(2, 2)
        path = tmp_path / "rho.json"
        ro.save(path, rho)
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(ParseError, match="line"):
            ro.load(path)

    def test_unknown_kind_rejected(self, tmp_path):
        path = tmp_path / "odd.json"
        path.write_text(json.dumps({"kind": "mystery", "dims": [2], "matrices": [[[[1, 0]]]]}))
        with pytest.raises(ParseError, match="unknown kind"):
            ro.load(path)

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "odd.json"
        path.write_text(json.dumps({"kind": "density", "dims": [2]}))
        with pytest.raises(ParseError, match="missing field"):
            ro.load(path)

    def test_cq_weight_count_mismatch_rejected(self, tmp_path):
        doc = states.to_document(ro.random_cq_ensemble(2, 2, 3))
        doc["weights"] = [1.0]
        path = tmp_path / "ens.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError, match="weight"):
            ro.load(path)


class TestSpectralFastPath:
    def test_density_from_spectral_orders(self):
        with pytest.raises(InvariantViolation, match="ascending"):
            states.density_from_spectral(np.array([0.7, 0.3]), np.eye(2, dtype=complex))

    def test_density_from_spectral_renormalizes(self):
        rho = states.density_from_spectral(np.array([1.0, 3.0]), np.eye(2, dtype=complex))
        assert np.allclose(np.diag(rho.matrix).real, [0.25, 0.75])

    def test_trace_distance(self):
        a = ro.DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
        b = ro.DensityMatrix(np.diag([0.0, 1.0]).astype(complex))
        assert ro.trace_distance(a, b) == pytest.approx(1.0)
        assert ro.trace_distance(a, a) == pytest.approx(0.0, abs=1e-12)
