import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crtool.domains import DomainModel, canonical_point, complex_gradient
from crtool.numerics import (
    DEFAULT_POLICY,
    EvaluationFailed,
    NonFinite,
    NotHermitian,
    TolerancePolicy,
    dbar_derivative,
    d_derivative,
    hermitian_signature,
    kernel_basis,
    principal_angles,
    random_unitary,
    rank_with_tol,
    singular_values,
    svd,
)


def cmat(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestPolicy:
    def test_defaults(self):
        p = TolerancePolicy()
        assert (p.rel_rank_tol, p.abs_residual_tol, p.fd_step, p.stability_check_tol) == (1e-10, 1e-8, 1e-4, 1e-12)

    @pytest.mark.parametrize(
        "kw",
        [{"rel_rank_tol": 0}, {"fd_step": -1.0}, {"rel_rank_tol": 1e-13}, {"abs_residual_tol": float("nan")}],
    )
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ValueError):
            TolerancePolicy(**kw)


class TestSVD:
    def test_skew_pair_multiplicity(self):
        assert np.allclose(singular_values([[0, 1], [-1, 0]]), [1, 1])

    def test_zero(self):
        assert np.all(singular_values(np.zeros((3, 2))) == 0)

    def test_reconstruction(self):
        A = cmat(np.random.default_rng(0), 4, 3)
        U, s, Vh = svd(A)
        assert np.linalg.norm(A - U[:, :3] @ np.diag(s) @ Vh) < 1e-12
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)

    def test_nonfinite(self):
        with pytest.raises(NonFinite):
            svd([[1.0, np.nan]])
        with pytest.raises(NonFinite):
            rank_with_tol([[np.inf]])

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 5), st.integers(1, 5))
    def test_unitary_invariance(self, seed, m, n):
        rng = np.random.default_rng(seed)
        A = cmat(rng, m, n)
        U = random_unitary(rng, m)
        assert np.allclose(singular_values(U @ A), singular_values(A), atol=1e-12 * max(1, singular_values(A)[0]))


class TestRank:
    def test_identity(self):
        assert rank_with_tol(np.eye(3)) == (3, True)

    def test_tiny_entry(self):
        assert rank_with_tol(np.diag([1, 1e-14])) == (1, True)

    def test_unstable_band(self):
        # 1e-11 sits between the two tolerances
        assert rank_with_tol(np.diag([1, 1e-11])) == (1, False)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 4))
    def test_rank_unitary_invariant(self, seed, r):
        rng = np.random.default_rng(seed)
        A = cmat(rng, 5, r) @ cmat(rng, r, 6)
        base = rank_with_tol(A)
        moved = rank_with_tol(random_unitary(rng, 5) @ A @ random_unitary(rng, 6))
        if base[1] and moved[1]:
            assert base[0] == moved[0] == r


class TestKernel:
    def test_simple(self):
        K = kernel_basis([[1, 0], [0, 0]])
        assert K.shape == (2, 1) and abs(abs(K[1, 0]) - 1) < 1e-15

    def test_full_rank(self):
        assert kernel_basis(np.eye(3)).shape == (3, 0)

    def test_tangent_space_kind_I(self):
        pt = canonical_point(DomainModel("I", 2, 2), 0)
        g = complex_gradient(pt.model, pt.ambient)
        K = kernel_basis(g[None, :])
        assert K.shape == (4, 3)
        assert np.abs(g @ K).max() < DEFAULT_POLICY.abs_residual_tol * np.linalg.norm(g)
        assert np.allclose(K.conj().T @ K, np.eye(3), atol=1e-12)


class TestSignature:
    def test_identity(self):
        assert hermitian_signature(np.eye(4)) == (4, 0, 0)

    def test_diag(self):
        assert hermitian_signature(np.diag([1.0, 0.0, -1.0])) == (1, 1, 1)

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            hermitian_signature(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_stability_flag(self):
        sig, stable = hermitian_signature(np.diag([1.0, 1e-11]), return_stable=True)
        assert sig == (1, 1, 0) and not stable

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
    def test_sylvester(self, seed, p, z, q):
        if p + z + q == 0:
            return
        rng = np.random.default_rng(seed)
        D = np.diag(np.r_[rng.uniform(0.5, 2, p), np.zeros(z), -rng.uniform(0.5, 2, q)])
        P = cmat(rng, p + z + q, p + z + q)
        if np.linalg.cond(P) > 1e4:
            return
        H = P.conj().T @ D @ P
        sig, stable = hermitian_signature(H, return_stable=True)
        if stable:
            assert sig == (p, z, q)


class TestDerivatives:
    def test_constant_curve(self):
        C = np.arange(4.0).reshape(2, 2)
        assert np.abs(dbar_derivative(lambda t: C)).max() == 0

    def test_conjugate_linear(self):
        B0 = cmat(np.random.default_rng(1), 2, 3)
        assert np.abs(dbar_derivative(lambda t: np.conj(t) * B0) - B0).max() < 1e-9

    def test_holomorphic_vanishes(self):
        B0 = cmat(np.random.default_rng(2), 3, 3)
        assert np.linalg.norm(dbar_derivative(lambda t: np.exp(t) * B0 + t**3 * B0.T, 0.2 + 0.1j)) <= 1e-8

    def test_mixed_polynomial(self):
        # d/dtbar of t^2 tbar^3 = 3 t^2 tbar^2
        t0 = 0.3 - 0.2j
        got = dbar_derivative(lambda t: t**2 * np.conj(t) ** 3, t0)
        assert abs(got - 3 * t0**2 * np.conj(t0) ** 2) < 1e-10

    def test_holomorphic_derivative(self):
        t0 = 0.1 + 0.4j
        assert abs(d_derivative(lambda t: np.sin(t) + np.conj(t), t0) - np.cos(t0)) < 1e-10

    def test_evaluation_failure(self):
        def bad(t):
            raise ZeroDivisionError

        with pytest.raises(EvaluationFailed):
            dbar_derivative(bad)


def test_principal_angles():
    A = np.eye(3)[:, :2].astype(complex)
    assert np.allclose(principal_angles(A, A @ random_unitary(np.random.default_rng(0), 2)), 0, atol=1e-7)
    B = np.eye(3)[:, 1:].astype(complex)
    ang = np.sort(principal_angles(A, B))
    assert np.allclose(ang, [0, np.pi / 2], atol=1e-7)
