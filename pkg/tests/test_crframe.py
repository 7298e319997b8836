import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crtool.crframe import (
    NotTangent,
    VanishingGradient,
    levi_null_basis,
    levi_report,
    scalar_levi_value,
    tangent_frame,
)
from crtool.domains import (
    BoundaryPoint,
    DomainModel,
    canonical_point,
    complex_gradient,
    sample_boundary_point,
)
from crtool.foliation import leaf_frame
from crtool.numerics import principal_angles, random_unitary
from crtool.suite import models_in_range

MODELS = models_in_range()


@pytest.mark.parametrize(
    "model,expected",
    [
        (DomainModel("I", 2, 2), (2, 1, 0)),
        (DomainModel("I", 3, 3), (4, 4, 0)),
        (DomainModel("II", 5), (6, 3, 0)),
        (DomainModel("III", 4), (3, 6, 0)),
        (DomainModel("IV", 3), (1, 1, 0)),
        (DomainModel("IV", 2), (0, 1, 0)),
        (DomainModel("Tube", 5), (3, 1, 0)),
    ],
    ids=lambda x: getattr(x, "label", str(x)),
)
def test_signature_examples(model, expected):
    for seed in range(5):
        rep = levi_report(sample_boundary_point(model, seed, 0.2 * seed))
        assert rep.signature == expected and rep.stable


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.label)
def test_signature_table(model):
    expected = (model.expected_positive, model.leaf_dim, 0)
    for seed in range(40):
        rep = levi_report(sample_boundary_point(model, seed, 0.95 * (seed % 10) / 10))
        assert rep.signature == expected and rep.stable
        assert sum(rep.signature) == model.ambient_dim - 1


@pytest.mark.parametrize("model", MODELS[::3], ids=lambda m: m.label)
def test_frame_invariants(model):
    for seed in range(10):
        pt = sample_boundary_point(model, seed, 0.5)
        fr = tangent_frame(pt)
        V = fr.vectors
        g = complex_gradient(model, pt.ambient)
        assert V.shape == (model.ambient_dim, model.ambient_dim - 1)
        assert np.abs(V.conj().T @ V - np.eye(V.shape[1])).max() < 1e-12
        assert np.abs(g @ V).max() < 1e-10 * np.linalg.norm(g)


def test_frame_is_deterministic():
    pt = sample_boundary_point(DomainModel("II", 5), 3, 0.4)
    assert np.array_equal(tangent_frame(pt).vectors, tangent_frame(pt).vectors)


def test_frame_choice_independent():
    rng = np.random.default_rng(5)
    for model in (DomainModel("I", 3, 4), DomainModel("III", 3), DomainModel("IV", 5)):
        pt = sample_boundary_point(model, 1, 0.3)
        ref = random_unitary(rng, model.ambient_dim)
        a = levi_report(pt).signature
        b = levi_report(pt, frame=tangent_frame(pt, reference=ref)).signature
        assert a == b


def test_vanishing_gradient():
    # kind I at Z = 0 has zero holomorphic gradient; the point is not on M
    pt = BoundaryPoint(DomainModel("I", 2, 2), np.zeros((2, 2)))
    with pytest.raises(VanishingGradient):
        tangent_frame(pt)


def test_report_json():
    doc = levi_report(canonical_point(DomainModel("I", 2, 2), 0)).to_json()
    assert doc["signature"] == [2, 1, 0] and doc["stable"] is True
    assert np.asarray(doc["matrix"]).shape == (3, 3, 2)


class TestNullSpace:
    def test_kind_IV_is_conj_w(self):
        pt = sample_boundary_point(DomainModel("IV", 4), 2, 0.0)
        w = pt.provenance["w"]
        N = levi_null_basis(pt)
        assert N.shape == (4, 1)
        assert principal_angles(N, w.conj()[:, None]).max() < 1e-6

    def test_kind_I_leaf(self):
        model = DomainModel("I", 3, 4)
        pt = canonical_point(model, 4)
        u, v = pt.provenance["u"], pt.provenance["v"]
        N = levi_null_basis(pt)
        assert N.shape == (12, 6)
        for j in range(6):
            B = model.from_coords(N[:, j])
            assert np.abs(u.conj() @ B).max() < 1e-8 and np.abs(B @ v).max() < 1e-8
        assert principal_angles(N, leaf_frame(pt).leaf_basis).max() < 1e-6

    def test_tube_real_part(self):
        pt = sample_boundary_point(DomainModel("Tube", 4), 1, 0.3)
        N = levi_null_basis(pt)
        assert principal_angles(N, pt.ambient.real.astype(complex)[:, None]).max() < 1e-6

    @pytest.mark.parametrize("model", MODELS, ids=lambda m: m.label)
    def test_agrees_with_leaf_frame(self, model):
        for seed in range(5):
            pt = sample_boundary_point(model, seed, 0.9 * seed / 5)
            assert principal_angles(levi_null_basis(pt), leaf_frame(pt).leaf_basis).max() < 1e-6


class TestScalarLevi:
    def setup_method(self):
        self.pt = sample_boundary_point(DomainModel("I", 3, 3), 6, 0.4)
        self.rep = levi_report(self.pt)

    def test_null_direction(self):
        n = levi_null_basis(self.pt)[:, 0]
        assert abs(scalar_levi_value(self.pt, n, n)) < 1e-9

    def test_positive_direction(self):
        lam, E = np.linalg.eigh(self.rep.matrix)
        v = self.rep.frame.vectors @ E[:, -1].conj()
        val = scalar_levi_value(self.pt, v, v)
        assert val.real > 1e-3 and abs(val.imag) < 1e-12

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6))
    def test_conjugate_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        V = self.rep.frame.vectors
        c1, c2 = rng.standard_normal((2, V.shape[1])) + 1j * rng.standard_normal((2, V.shape[1]))
        v1, v2 = V @ c1, V @ c2
        assert abs(scalar_levi_value(self.pt, v1, v2) - np.conj(scalar_levi_value(self.pt, v2, v1))) < 1e-10

    def test_not_tangent(self):
        g = complex_gradient(self.pt.model, self.pt.ambient)
        with pytest.raises(NotTangent):
            scalar_levi_value(self.pt, g.conj(), g.conj())
