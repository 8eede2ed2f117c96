import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from subid.exceptions import DimensionError, NonPhysicalParameters
from subid.lti import (
    InnovationModel,
    StateSpaceModel,
    build_two_mass,
    hankel_true,
    matrix_exponential,
    max_abs_entry,
    observability_matrix,
    preset_model,
    reversed_controllability,
    structured_matrices,
    toeplitz_true,
    validate_assumptions,
)
from subid.bounds import appendix_norm_bounds

STABLE_SPECTRUM = [0.27, 0.99, 0.95, 0.86]
MARGINAL_SPECTRUM = [0.001, 0.65, 0.97, 1.00]


def _innov(A, C, K):
    A, C, K = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (A, C, K))
    n, m = A.shape[0], C.shape[0]
    return InnovationModel(A=A, C=C, K=K, P=np.eye(n), S=np.eye(m))


def _matches(values, targets, atol):
    values = sorted(np.real(values))
    return np.allclose(values, sorted(targets), atol=atol)


class TestModels:
    def test_dimension_checks(self):
        with pytest.raises(DimensionError):
            StateSpaceModel(A=np.eye(2), C=np.ones((1, 3)), Q=np.eye(2), R=np.eye(1))
        with pytest.raises(DimensionError):
            StateSpaceModel(A=np.ones((2, 3)), C=np.ones((1, 3)), Q=np.eye(2), R=np.eye(1))
        with pytest.raises(DimensionError):
            StateSpaceModel(A=np.eye(2), C=np.ones((1, 2)), Q=np.eye(3), R=np.eye(1))

    def test_covariance_checks(self):
        with pytest.raises(ValueError):
            StateSpaceModel(A=np.eye(2), C=np.ones((1, 2)), Q=np.eye(2), R=np.zeros((1, 1)))
        with pytest.raises(ValueError):
            StateSpaceModel(A=np.eye(2), C=np.ones((1, 2)), Q=-np.eye(2), R=np.eye(1))
        with pytest.raises(ValueError):
            StateSpaceModel(A=np.eye(2), C=np.ones((1, 2)), Q=[[1, 0.5], [0, 1]], R=np.eye(1))

    def test_arrays_are_read_only(self, stable_system):
        with pytest.raises(ValueError):
            stable_system.A[0, 0] = 1.0
        assert stable_system.n == 4 and stable_system.m == 2

    def test_closed_loop_property(self):
        im = _innov([[0.5]], [[2.0]], [[0.1]])
        assert im.A_C[0, 0] == pytest.approx(0.3)


class TestValidateAssumptions:
    def test_stable_preset_passes(self, stable_system):
        rep = validate_assumptions(stable_system)
        assert rep.observable and rep.controllable and rep.eigen_ok
        assert rep.obs_rank == 4 and rep.ctrl_rank == 4

    def test_marginal_preset_passes(self, marginal_system):
        assert validate_assumptions(marginal_system).ok

    def test_unobservable_identity(self):
        rep = validate_assumptions(StateSpaceModel(A=np.eye(2), C=[[1.0, 0.0]], Q=np.eye(2), R=[[1.0]]))
        assert not rep.observable
        assert rep.obs_rank == 1

    def test_zero_dynamics_flags_repeated_eigenvalues(self):
        n = 3
        rep = validate_assumptions(StateSpaceModel(A=np.zeros((n, n)), C=np.eye(n), Q=np.eye(n), R=np.eye(n)))
        assert rep.observable and rep.controllable
        assert rep.eigen_real and rep.eigen_in_range
        assert not rep.eigen_distinct
        assert not rep.ok

    def test_complex_and_out_of_range(self):
        rot = StateSpaceModel(A=[[0.0, -1.0], [1.0, 0.0]], C=[[1.0, 0.0]], Q=np.eye(2), R=[[1.0]])
        assert not validate_assumptions(rot).eigen_real
        big = StateSpaceModel(A=np.diag([1.5, 0.2]), C=[[1.0, 1.0]], Q=np.eye(2), R=[[1.0]])
        rep = validate_assumptions(big)
        assert not rep.eigen_in_range
        assert rep.max_abs_eigen == pytest.approx(1.5)

    def test_uncontrollable_noise(self):
        m = StateSpaceModel(A=np.diag([0.5, 0.3]), C=[[1.0, 1.0]], Q=np.diag([1.0, 0.0]), R=[[1.0]])
        assert not validate_assumptions(m).controllable


class TestStructuredMatrices:
    def test_observability_identity_dynamics(self):
        C0 = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(observability_matrix(np.eye(2), C0, 3), np.vstack([C0] * 3))

    def test_observability_scalar(self):
        assert np.array_equal(observability_matrix([[2.0]], [[1.0]], 3), [[1.0], [2.0], [4.0]])

    def test_observability_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            observability_matrix(np.eye(2), np.ones((1, 3)), 2)

    def test_controllability_zero_gain(self):
        assert np.array_equal(reversed_controllability(np.eye(2), np.zeros((2, 1)), np.ones((1, 2)), 3),
                              np.zeros((2, 3)))

    def test_controllability_nilpotent_closed_loop(self):
        K = np.array([[1.0], [2.0]])
        C = np.array([[0.5, -1.0]])
        KT = reversed_controllability(K @ C, K, C, 3)
        assert np.allclose(KT, np.hstack([np.zeros((2, 2)), K]), atol=0)

    def test_controllability_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            reversed_controllability(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), 2)

    def test_hankel_zero_gain(self):
        im = _innov(np.diag([0.5, 0.2]), [[1.0, 1.0]], np.zeros((2, 1)))
        assert np.array_equal(hankel_true(im, 3), np.zeros((3, 3)))

    def test_hankel_scalar_block_formula(self):
        a, c, k = 0.7, 1.3, 0.4
        ac = a - k * c
        expected = np.array([[c * ac * k, c * k], [c * a * ac * k, c * a * k]])
        assert np.allclose(hankel_true(_innov(a, c, k), 2), expected, rtol=1e-14, atol=0)

    def test_hankel_horizon_too_short(self, stable_model):
        with pytest.raises(DimensionError):
            hankel_true(stable_model, 1)

    def test_hankel_rank_n(self, stable_model):
        s = np.linalg.svd(hankel_true(stable_model, 7), compute_uv=False)
        assert s[3] > 0
        assert s[4] < 1e-10 * s[0]

    def test_hankel_blocks_against_powers(self, stable_model):
        T, m = 6, stable_model.m
        H = hankel_true(stable_model, T)
        A, C, K, AC = stable_model.A, stable_model.C, stable_model.K, stable_model.A_C
        for i in range(T):
            for j in range(T):
                blk = C @ np.linalg.matrix_power(A, i) @ np.linalg.matrix_power(AC, T - 1 - j) @ K
                got = H[i * m:(i + 1) * m, j * m:(j + 1) * m]
                assert np.allclose(got, blk, rtol=1e-12, atol=1e-12 * np.abs(H).max())

    def test_toeplitz_trivial_cases(self, stable_model):
        assert np.array_equal(toeplitz_true(stable_model, 1), np.eye(2))
        im = _innov(np.diag([0.5, 0.2]), [[1.0, 1.0]], np.zeros((2, 1)))
        assert np.array_equal(toeplitz_true(im, 4), np.eye(4))

    def test_toeplitz_structure(self, stable_model):
        T, m = 5, stable_model.m
        J = toeplitz_true(stable_model, T)
        A, C, K = stable_model.A, stable_model.C, stable_model.K
        for i in range(T):
            for j in range(T):
                blk = J[i * m:(i + 1) * m, j * m:(j + 1) * m]
                if i == j:
                    assert np.array_equal(blk, np.eye(m))
                elif i < j:
                    assert not blk.any()
                else:
                    assert np.allclose(blk, C @ np.linalg.matrix_power(A, i - j - 1) @ K, rtol=1e-12)

    def test_structured_bundle(self, stable_model):
        sm = structured_matrices(stable_model, 7)
        assert sm.horizon == 7
        assert sm.gamma.shape == (14, 4) and sm.ctrl.shape == (4, 14)
        assert np.array_equal(sm.hankel, sm.gamma @ sm.ctrl)

    @pytest.mark.parametrize("T", [2, 5, 9])
    def test_shift_property(self, stable_system, T):
        G = observability_matrix(stable_system.A, stable_system.C, T)
        m = stable_system.m
        assert np.allclose(G[:-m] @ stable_system.A, G[m:], rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("preset", ["two_mass_stable", "two_mass_marginal"])
    @pytest.mark.parametrize("T", range(3, 11))
    def test_appendix_norm_bounds(self, preset, T, request):
        model = request.getfixturevalue("stable_model" if preset.endswith("stable") else "marginal_model")
        sm = structured_matrices(model, T)
        nb = appendix_norm_bounds(model, T)
        n, m = model.n, model.m
        cb, kb = max_abs_entry(model.C), max_abs_entry(model.K)
        assert nb.gamma_norm_bound == pytest.approx(cb * np.sqrt(T * m * n))
        assert nb.toeplitz_norm_bound == pytest.approx(T * m * (1 + cb * kb * n))
        assert np.linalg.norm(sm.gamma, 2) <= nb.gamma_norm_bound
        assert np.linalg.norm(sm.ctrl, 2) <= nb.ctrl_norm_bound
        assert np.linalg.norm(sm.hankel, 2) <= nb.hankel_norm_bound
        assert np.linalg.norm(sm.toeplitz, 2) <= nb.toeplitz_norm_bound


class TestMatrixExponential:
    def test_zero_is_identity_exactly(self):
        assert np.array_equal(matrix_exponential(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        E = matrix_exponential(np.diag([1.0, -1.0]))
        assert np.allclose(E, np.diag([np.e, 1 / np.e]), rtol=1e-13, atol=0)

    def test_non_finite_raises(self):
        with pytest.raises(OverflowError):
            matrix_exponential([[np.inf]])

    def test_non_square_raises(self):
        with pytest.raises(DimensionError):
            matrix_exponential(np.ones((2, 3)))

    def test_diagonalizable_closed_form(self, rng):
        V = rng.standard_normal((5, 5))
        lam = rng.uniform(-3, 3, 5)
        M = V @ np.diag(lam) @ np.linalg.inv(V)
        ref = V @ np.diag(np.exp(lam)) @ np.linalg.inv(V)
        assert np.allclose(matrix_exponential(M), ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())

    def test_large_norm_uses_squaring(self, rng):
        M = 20 * rng.standard_normal((4, 4))
        ref = scipy.linalg.expm(M)
        assert np.allclose(matrix_exponential(M), ref, rtol=1e-8, atol=1e-8 * np.abs(ref).max())

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, (4, 4), elements=st.floats(-2, 2)))
    def test_inverse_property(self, M):
        E = matrix_exponential(M) @ matrix_exponential(-M)
        assert np.allclose(E, np.eye(4), atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, (3, 3), elements=st.floats(-4, 4)))
    def test_agrees_with_scipy(self, M):
        ref = scipy.linalg.expm(M)
        assert np.allclose(matrix_exponential(M), ref, rtol=1e-11, atol=1e-11 * np.abs(ref).max())


class TestTwoMass:
    def test_stable_spectrum(self, stable_system):
        assert _matches(np.linalg.eigvals(stable_system.A), STABLE_SPECTRUM, 0.01)

    def test_marginal_spectrum(self, marginal_system):
        assert _matches(np.linalg.eigvals(marginal_system.A), MARGINAL_SPECTRUM, 0.01)

    def test_output_and_noise_maps(self, stable_system):
        assert np.array_equal(stable_system.C, [[1, 0, 0, 0], [0, 0, 1, 0]])
        assert np.array_equal(stable_system.Q, 1e-4 * np.eye(4))
        assert np.array_equal(stable_system.R, 1e-4 * np.eye(2))

    def test_nilpotent_case(self):
        Ts = 0.1
        model = build_two_mass(k1=0, k2=0, k3=0, c1=0, c2=0, Ts=Ts)
        Ac = np.zeros((4, 4))
        Ac[0, 1] = Ac[2, 3] = 1.0
        assert np.array_equal(model.A, np.eye(4) + Ac * Ts)

    @pytest.mark.parametrize("kw", [dict(m1=0), dict(m2=-1), dict(Ts=0), dict(q_var=0),
                                    dict(r_var=-1), dict(k1=-0.1)])
    def test_non_physical(self, kw):
        with pytest.raises(NonPhysicalParameters):
            build_two_mass(**kw)

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            preset_model("three_mass")
