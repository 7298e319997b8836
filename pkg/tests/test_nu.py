import json

import numpy as np
import pytest

from crtool.domains import DomainModel, canonical_point, sample_boundary_point
from crtool.foliation import leaf_frame
from crtool.nu import (
    NotCanonicalPoint,
    NuConfig,
    UnstableRank,
    closed_form_nu,
    constructive_maximizer,
    is_two_nondegenerate,
    kernel_dim_R,
    nondegeneracy_rank,
    nu_estimate,
    r_tensor,
    tensor_R_analytic,
    tensor_R_closed,
    tensor_R_numeric,
)
from crtool.suite import brute_force_kernel, models_in_range, rank_r_leaf_vector

MODELS = models_in_range()
FIXTURES = [DomainModel("IV", 3, flat=True), DomainModel("Tube", 4, flat=True)]


def crand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def expected_nu(model):
    return {
        "I": lambda: model.m + model.n - 4,
        "II": lambda: 2 * model.m - 8,
        "III": lambda: model.m - 2,
        "IV": lambda: 0,
        "Tube": lambda: 0,
    }[model.kind]()


class TestTensor:
    def test_zero_V(self):
        pt = canonical_point(DomainModel("I", 3, 3), 0)
        S = leaf_frame(pt).slice_basis
        r = tensor_R_numeric(pt, S[:, 0].conj(), np.zeros(9))
        assert r.projected and np.abs(r.value).max() < 1e-12

    @pytest.mark.parametrize("model", MODELS, ids=lambda m: m.label)
    def test_closed_numeric_analytic_agree(self, model):
        rng = np.random.default_rng(1)
        pt = canonical_point(model, 5)
        F = leaf_frame(pt)
        if model.expected_positive == 0:
            return
        for _ in range(2):
            X = F.slice_basis @ crand(rng, model.expected_positive)
            V = F.leaf_basis @ crand(rng, model.leaf_dim)
            c = tensor_R_closed(pt, X.conj(), V, frame=F).value
            n = tensor_R_numeric(pt, X.conj(), V, frame=F).value
            a = tensor_R_analytic(pt, X.conj(), V, frame=F).value
            scale = np.linalg.norm(c)
            assert np.linalg.norm(c - n) < 1e-7 * scale
            assert np.linalg.norm(c - a) < 1e-12 * max(scale, 1)

    def test_projected_orthogonal_to_leaf(self):
        model = DomainModel("II", 6)
        pt = sample_boundary_point(model, 2, 0.4)
        F = leaf_frame(pt)
        rng = np.random.default_rng(2)
        r = tensor_R_numeric(pt, (F.slice_basis @ crand(rng, 8)).conj(), F.leaf_basis @ crand(rng, 6), frame=F).value
        assert np.abs(F.leaf_basis.conj().T @ r).max() < 1e-10

    def test_kind_I_displayed_formula(self):
        model = DomainModel("I", 3, 4)
        pt = canonical_point(model, 3)
        F = leaf_frame(pt)
        a, b = F.structure.a, F.structure.b
        rng = np.random.default_rng(1003)
        alpha = crand(rng, 3)
        beta = crand(rng, 4)
        alpha -= a * np.vdot(a, alpha)
        beta -= b * np.vdot(b, beta)
        X = model.to_coords(np.outer(a, beta.conj()) + np.outer(alpha, b.conj()))
        B0 = (np.eye(3) - np.outer(a, a.conj())) @ crand(rng, 3, 4) @ (np.eye(4) - np.outer(b, b.conj()))
        expected = -np.outer(a, alpha.conj()) @ B0 - B0 @ np.outer(beta, b.conj())
        got = model.from_coords(tensor_R_numeric(pt, X.conj(), model.to_coords(B0), frame=F).value)
        assert np.abs(got - expected).max() < 1e-8 * np.abs(expected).max()

    def test_kind_I_kernel_condition(self):
        # alpha in ker B0*, beta in ker B0 gives zero
        model = DomainModel("I", 4, 4)
        pt = canonical_point(model, 1)
        F = leaf_frame(pt)
        a, b = F.structure.a, F.structure.b
        rng = np.random.default_rng(4)
        Pa = np.eye(4) - np.outer(a, a.conj())
        Pb = np.eye(4) - np.outer(b, b.conj())
        x, y = Pa @ crand(rng, 4), Pb @ crand(rng, 4)
        B0 = np.outer(x, y.conj())
        alpha = Pa @ crand(rng, 4)
        alpha -= x * np.vdot(x, alpha) / np.vdot(x, x)
        beta = Pb @ crand(rng, 4)
        beta -= y * np.vdot(y, beta) / np.vdot(y, y)
        X = model.to_coords(np.outer(a, beta.conj()) + np.outer(alpha, b.conj()))
        assert np.abs(tensor_R_closed(pt, X.conj(), model.to_coords(B0), frame=F).value).max() < 1e-14

    def test_kind_IV_conj_v(self):
        model = DomainModel("IV", 4)
        pt = canonical_point(model, 2)
        F = leaf_frame(pt)
        w = F.structure.a
        v = F.slice_basis @ crand(np.random.default_rng(5), 2)
        r = tensor_R_closed(pt, v.conj(), w.conj(), frame=F).value
        assert np.abs(r - v.conj()).max() < 1e-14 and np.linalg.norm(r) > 0

    def test_kind_II_zero_B0(self):
        pt = canonical_point(DomainModel("II", 5), 0)
        S = leaf_frame(pt).slice_basis
        assert np.abs(tensor_R_closed(pt, S[:, 0].conj(), np.zeros(10)).value).max() == 0

    def test_closed_needs_canonical(self):
        pt = sample_boundary_point(DomainModel("III", 3), 0, 0.5)
        F = leaf_frame(pt)
        with pytest.raises(NotCanonicalPoint):
            tensor_R_closed(pt, F.slice_basis[:, 0].conj(), F.leaf_basis[:, 0])

    @pytest.mark.parametrize("model", MODELS[::4] + FIXTURES, ids=lambda m: m.label)
    def test_leaf_directions_in_kernel(self, model):
        rng = np.random.default_rng(6)
        pt = sample_boundary_point(model, 3, 0.5)
        F = leaf_frame(pt)
        Xl = F.leaf_basis @ crand(rng, model.leaf_dim)
        V = F.leaf_basis @ crand(rng, model.leaf_dim)
        assert np.linalg.norm(tensor_R_numeric(pt, Xl.conj(), V, frame=F).value) < 1e-8

    @pytest.mark.parametrize("model", [DomainModel("I", 3, 4), DomainModel("II", 5), DomainModel("III", 4), DomainModel("IV", 5)], ids=lambda m: m.label)
    def test_tensoriality(self, model):
        rng = np.random.default_rng(7)
        pt = sample_boundary_point(model, 4, 0.6)
        F = leaf_frame(pt)
        S, L = F.slice_basis, F.leaf_basis
        X, Y = S @ crand(rng, S.shape[1]), S @ crand(rng, S.shape[1])
        V, W = L @ crand(rng, L.shape[1]), L @ crand(rng, L.shape[1])
        c = complex(crand(rng))

        def R(x, v):
            return tensor_R_numeric(pt, x, v, frame=F).value

        lx, ly = X.conj(), Y.conj()
        assert np.linalg.norm(R(lx + c * ly, V) - R(lx, V) - c * R(ly, V)) < 1e-7
        assert np.linalg.norm(R(lx, V + c * W) - R(lx, V) - c * R(lx, W)) < 1e-7


class TestKernel:
    @pytest.mark.parametrize("r", [1, 2])
    def test_kind_I_33_rank_law(self, r):
        model = DomainModel("I", 3, 3)
        pt = canonical_point(model, 0)
        F = leaf_frame(pt)
        rng = np.random.default_rng(r)
        for _ in range(10):
            V = rank_r_leaf_vector(F, r, rng)
            assert kernel_dim_R(pt, V, frame=F) == (4 - 2 * r, True)
            assert brute_force_kernel(pt, F, V) == 4 - 2 * r

    @pytest.mark.parametrize("model", [DomainModel("IV", 3), DomainModel("IV", 6), DomainModel("Tube", 3), DomainModel("Tube", 6)], ids=lambda m: m.label)
    def test_vector_kinds_trivial(self, model):
        for seed in range(3):
            pt = sample_boundary_point(model, seed, 0.4)
            F = leaf_frame(pt)
            assert kernel_dim_R(pt, F.leaf_basis[:, 0], frame=F)[0] == 0

    def test_rejects_non_leaf(self):
        pt = canonical_point(DomainModel("I", 2, 3), 0)
        F = leaf_frame(pt)
        with pytest.raises(ValueError):
            kernel_dim_R(pt, F.slice_basis[:, 0])
        with pytest.raises(ValueError):
            kernel_dim_R(pt, np.zeros(6))

    def test_tensor_layout(self):
        model = DomainModel("III", 3)
        pt = canonical_point(model, 1)
        F = leaf_frame(pt)
        T = r_tensor(pt, frame=F)
        assert T.shape == (3, 6, 2)
        c = crand(np.random.default_rng(0), 3)
        direct = tensor_R_analytic(pt, F.slice_basis[:, 1].conj(), F.leaf_basis @ c, frame=F).value
        assert np.abs(np.einsum("l,li->i", c, T[:, :, 1]) - direct).max() < 1e-12


class TestNu:
    @pytest.mark.parametrize("model,value", [(DomainModel("I", 3, 3), 2), (DomainModel("II", 5), 2), (DomainModel("III", 3), 1)], ids=lambda x: getattr(x, "label", str(x)))
    def test_examples(self, model, value):
        pt = canonical_point(model, 0)
        rep = nu_estimate(pt)
        assert rep.nu == value and rep.method == "closed_form" and rep.stable
        rep = nu_estimate(pt, method="search")
        assert rep.nu == value and rep.method == "search" and rep.samples_used == 200

    @pytest.mark.parametrize("model", MODELS, ids=lambda m: m.label)
    def test_table(self, model):
        assert closed_form_nu(model) == expected_nu(model)
        for seed in range(2):
            pt = canonical_point(model, 100 + seed)
            rep = nu_estimate(pt, NuConfig(seed=seed), method="search")
            assert rep.nu == expected_nu(model)
            assert 0 <= rep.nu <= model.ambient_dim - 1 - model.leaf_dim

    def test_search_is_lower_bound_off_canonical(self):
        for model in (DomainModel("I", 3, 4), DomainModel("II", 6), DomainModel("III", 4)):
            pt = sample_boundary_point(model, 1, 0.5)
            rep = nu_estimate(pt)
            assert rep.method == "search"
            assert rep.nu == expected_nu(model)

    def test_maximizer_attains(self):
        model = DomainModel("I", 4, 5)
        pt = canonical_point(model, 3)
        F = leaf_frame(pt)
        V = constructive_maximizer(F)
        assert kernel_dim_R(pt, V, frame=F)[0] == 5

    def test_report_json(self):
        rep = nu_estimate(canonical_point(DomainModel("II", 5), 0))
        doc = json.loads(json.dumps(rep.to_json()))
        assert set(doc) == {"nu", "method", "kernel_dim", "V", "stable"}
        assert doc["nu"] == 2 and doc["kernel_dim"] == 2 and len(doc["V"]) == 10

    def test_deterministic(self):
        pt = sample_boundary_point(DomainModel("I", 3, 3), 0, 0.3)
        a, b = nu_estimate(pt, NuConfig(seed=4)), nu_estimate(pt, NuConfig(seed=4))
        assert a.nu == b.nu and np.array_equal(a.maximizer_V, b.maximizer_V)

    def test_bad_method(self):
        with pytest.raises(ValueError):
            nu_estimate(canonical_point(DomainModel("IV", 3), 0), method="magic")

    def test_flat_fixture_is_maximal(self):
        model = DomainModel("IV", 3, flat=True)
        pt = canonical_point(model, 0)
        assert nu_estimate(pt, method="search").nu == model.expected_positive == closed_form_nu(model)


class TestNondegeneracy:
    @pytest.mark.parametrize("model", MODELS, ids=lambda m: m.label)
    def test_two_nondegenerate(self, model):
        expected = not (model.kind == "IV" and model.m == 2)
        assert is_two_nondegenerate(canonical_point(model, 0)) is expected

    def test_fixtures_not_two_nondegenerate(self):
        for model in FIXTURES:
            assert is_two_nondegenerate(canonical_point(model, 0)) is False

    def test_ranks_kind_I_22(self):
        pt = sample_boundary_point(DomainModel("I", 2, 2), 1, 0.4)
        assert nondegeneracy_rank(pt, 0) == (1, True)
        assert nondegeneracy_rank(pt, 1) == (3, True)
        assert nondegeneracy_rank(pt, 2) == (4, True)

    @pytest.mark.parametrize("model", [DomainModel("I", 3, 4), DomainModel("II", 5), DomainModel("III", 3), DomainModel("IV", 4), DomainModel("Tube", 5)], ids=lambda m: m.label)
    def test_rank_ladder(self, model):
        pt = canonical_point(model, 2)
        r = [nondegeneracy_rank(pt, k)[0] for k in (0, 1, 2)]
        assert r == [1, 1 + model.expected_positive, model.ambient_dim]

    def test_levi_flat_and_fixture(self):
        assert nondegeneracy_rank(canonical_point(DomainModel("IV", 2), 0), 2)[0] == 1
        fx = DomainModel("IV", 3, flat=True)
        assert nondegeneracy_rank(canonical_point(fx, 0), 2)[0] == fx.ambient_dim - 1

    def test_bad_order(self):
        with pytest.raises(ValueError):
            nondegeneracy_rank(canonical_point(DomainModel("IV", 3), 0), 3)


def test_unstable_rank_is_an_error():
    assert issubclass(UnstableRank, RuntimeError)
