"""Levi leaves, slice frames, leaf points, canonical sections and slice curves.

A leaf through a point of a matrix model is affine: ``{base + B}`` where the
base is ``u v*`` (I), ``u v^T - v u^T`` (II) or ``w w^T`` (III) and ``B`` runs
over a linear space cut out by annihilation conditions.  For IV the leaf is
``w + t conj(w)``, for the tube ``q + t Re(q)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domains import BoundaryPoint, DomainModel, is_smooth_boundary_point
from .numerics import DEFAULT_POLICY, TolerancePolicy

GAP = 1e-6


class DegenerateSVD(ValueError):
    pass


class LeftSmoothPart(ValueError):
    pass


class NotLeafVector(ValueError):
    pass


class NotSliceVector(ValueError):
    pass


@dataclass(frozen=True)
class LeafStructure:
    """Gauge-fixed decomposition of a point as leaf base plus leaf offset.

    ``a``/``b`` are the singular vectors (``b`` unused for III, IV, Tube);
    ``offset`` is ``B`` for matrix kinds and ``t`` for IV and Tube.
    """

    model: DomainModel
    a: np.ndarray
    b: np.ndarray | None
    offset: object
    extra: complex = 0.0

    @property
    def base_ambient(self) -> np.ndarray:
        a, b, kind = self.a, self.b, self.model.kind
        if kind == "I":
            Z = np.outer(a, b.conj())
        elif kind == "II":
            Z = np.outer(a, b) - np.outer(b, a)
        elif kind == "III":
            Z = np.outer(a, a)
        else:
            Z = a.copy()
            if self.model.flat:
                Z = np.r_[Z, self.extra]
        return Z


@dataclass(frozen=True)
class LeafFrame:
    base: BoundaryPoint
    leaf_basis: np.ndarray
    slice_basis: np.ndarray
    structure: LeafStructure


def _phase_fix(x: np.ndarray) -> complex:
    """Unit scalar c such that ``c * x`` has its largest-modulus entry real positive."""
    k = int(np.argmax(np.abs(x)))
    return np.conj(x[k]) / abs(x[k])


def _complement(vectors: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the Hermitian orthogonal complement of the columns."""
    if vectors.size == 0:
        return np.eye(dim, dtype=complex)
    U, s, _ = np.linalg.svd(vectors, full_matrices=True)
    rank = int(np.count_nonzero(s > 1e-12 * s[0]))
    return U[:, rank:]


def leaf_structure(point: BoundaryPoint, policy: TolerancePolicy = DEFAULT_POLICY) -> LeafStructure:
    model, Z = point.model, point.ambient
    kind = model.kind
    if kind in ("I", "III"):
        U, s, Vh = np.linalg.svd(Z)
        if s.size > 1 and s[1] >= 1 - GAP:
            raise DegenerateSVD(f"second singular value {s[1]:.3g} too close to 1")
        u, v = U[:, 0], Vh[0].conj()
        if kind == "I":
            c = _phase_fix(v)
            u, v = u * c, v * c
            return LeafStructure(model, u, v, Z - np.outer(u, v.conj()))
        # symmetric: conj(v) = lam * u with |lam| = 1, and w w^T = Z restricted to the top pair
        lam = np.vdot(u, v.conj())
        w = np.sqrt(lam) * u
        k = int(np.argmax(np.abs(w)))
        if w[k].real < 0:
            w = -w
        return LeafStructure(model, w, None, Z - np.outer(w, w))
    if kind == "II":
        _, s, Vh = np.linalg.svd(Z)
        if s.size > 2 and s[2] >= 1 - GAP:
            raise DegenerateSVD(f"third singular value {s[2]:.3g} too close to 1")
        x = Vh[0].conj()
        x = x * _phase_fix(x)
        u, v = x.conj(), -(Z @ x)
        return LeafStructure(model, u, v, Z - (np.outer(u, v) - np.outer(v, u)))
    m = model.m
    z = Z[:m]
    extra = complex(Z[m]) if model.flat else 0.0
    if kind == "IV":
        t = complex(z @ z)
        w = (z - t * z.conj()) / (1 - abs(t) ** 2)
        return LeafStructure(model, w, None, t, extra)
    return LeafStructure(model, z.copy(), None, 0.0, extra)


def _pad(model: DomainModel, cols: np.ndarray) -> np.ndarray:
    if not model.flat:
        return cols
    return np.vstack([cols, np.zeros((1, cols.shape[1]), dtype=complex)])


def _bases(model: DomainModel, st: LeafStructure) -> tuple[np.ndarray, np.ndarray]:
    kind, m = model.kind, model.m
    coords = model.to_coords
    if kind == "I":
        a, b = st.a, st.b
        A = _complement(a[:, None], m)
        Bc = _complement(b[:, None], model.n)
        leaf = [coords(np.outer(A[:, i], Bc[:, j].conj())) for i in range(m - 1) for j in range(model.n - 1)]
        slc = [coords(np.outer(a, Bc[:, j].conj())) for j in range(model.n - 1)]
        slc += [coords(np.outer(A[:, i], b.conj())) for i in range(m - 1)]
    elif kind == "II":
        a, b = st.a, st.b
        C = _complement(np.column_stack([a, b]), m)
        r2 = np.sqrt(2)
        leaf = [coords((np.outer(C[:, i], C[:, j]) - np.outer(C[:, j], C[:, i])) / r2) for i in range(m - 2) for j in range(i + 1, m - 2)]
        slc = [coords((np.outer(x, C[:, i]) - np.outer(C[:, i], x)) / r2) for x in (a, b) for i in range(m - 2)]
    elif kind == "III":
        a = st.a
        C = _complement(a[:, None], m)
        r2 = np.sqrt(2)
        leaf = []
        for i in range(m - 1):
            for j in range(i, m - 1):
                if i == j:
                    leaf.append(coords(np.outer(C[:, i], C[:, i])))
                else:
                    leaf.append(coords((np.outer(C[:, i], C[:, j]) + np.outer(C[:, j], C[:, i])) / r2))
        slc = [coords((np.outer(C[:, i], a) + np.outer(a, C[:, i])) / r2) for i in range(m - 1)]
    elif kind == "IV":
        w = st.a
        leaf = [w.conj() / np.linalg.norm(w)]
        xy = np.column_stack([w.real, w.imag])
        R = np.linalg.svd(xy, full_matrices=True)[0][:, 2:]
        slc = [R[:, i].astype(complex) for i in range(m - 2)]
    else:
        x = st.a.real
        leaf = [x.astype(complex) / np.linalg.norm(x)]
        R = np.linalg.svd(x[:-1, None], full_matrices=True)[0][:, 1:]
        slc = [np.r_[R[:, i], 0.0].astype(complex) for i in range(m - 2)]
    N = model.ambient_dim
    leaf_m = np.array(leaf, dtype=complex).T.reshape(-1, len(leaf)) if leaf else np.zeros((N, 0), complex)
    slc_m = np.array(slc, dtype=complex).T.reshape(-1, len(slc)) if slc else np.zeros((N, 0), complex)
    if model.flat:
        leaf_m = _pad(model, leaf_m)
        e = np.zeros((N, 1), dtype=complex)
        e[-1, 0] = 1.0
        leaf_m = np.hstack([leaf_m, e])
        slc_m = _pad(model, slc_m)
    return leaf_m, slc_m


def leaf_frame(point: BoundaryPoint, policy: TolerancePolicy = DEFAULT_POLICY) -> LeafFrame:
    st = leaf_structure(point, policy)
    leaf, slc = _bases(point.model, st)
    return LeafFrame(point, leaf, slc, st)


def leaf_point(point: BoundaryPoint, offset, policy: TolerancePolicy = DEFAULT_POLICY) -> BoundaryPoint:
    """Move inside the leaf of ``point`` by ``offset`` (coordinates w.r.t. ``leaf_basis``)."""
    frame = leaf_frame(point, policy)
    model = point.model
    offset = np.atleast_1d(np.asarray(offset, dtype=complex))
    if offset.shape != (model.leaf_dim,):
        raise NotLeafVector(f"expected {model.leaf_dim} leaf coordinates")
    Z = point.ambient + model.from_coords(frame.leaf_basis @ offset)
    if model.kind == "II":
        Z = (Z - Z.T) / 2
    elif model.kind == "III":
        Z = (Z + Z.T) / 2
    if not is_smooth_boundary_point(model, Z, policy):
        raise LeftSmoothPart("offset leaves the smooth boundary part")
    st = frame.structure
    if model.is_matrix:
        prov = {"u": st.a, "B": Z - st.base_ambient}
        if st.b is not None:
            prov["v"] = st.b
        if model.kind == "III":
            prov = {"w": st.a, "B": Z - st.base_ambient}
    elif model.kind == "IV":
        prov = {"w": st.a, "t": complex(Z[: model.m] @ Z[: model.m])}
    else:
        prov = {"q": Z[: model.m].copy(), "t": 0j}
    if model.flat:
        prov["extra"] = complex(Z[-1])
    return BoundaryPoint(model, Z, prov)


# ---------------------------------------------------------------- sections


def _in_span(basis: np.ndarray, x: np.ndarray, tol: float) -> bool:
    resid = x - basis @ (basis.conj().T @ x)
    return np.linalg.norm(resid) <= tol * max(np.linalg.norm(x), 1.0)


@dataclass(frozen=True)
class Section:
    """Leaf-tangent vector field ``Z -> V(Z)`` (flat coordinates) extending ``V0``.

    Matrix kinds: ``V(Z) = (I - Z Z*) C (I - Z* Z)``, which is annihilated on
    the left by ``u*`` and on the right by ``v`` at every point of the model,
    hence tangent to the leaves everywhere.  IV: ``c conj(w(z))``.  Tube:
    ``c Re(z)``.  The flat fixture adds a constant extra component.
    """

    model: DomainModel
    C: np.ndarray | complex
    extra: complex = 0.0

    def __call__(self, Z) -> np.ndarray:
        model = self.model
        Z = np.asarray(Z, dtype=complex)
        if model.is_matrix:
            GL = np.eye(Z.shape[0]) - Z @ Z.conj().T
            GR = np.eye(Z.shape[1]) - Z.conj().T @ Z
            return model.to_coords(GL @ self.C @ GR)
        m = model.m
        z = Z[:m]
        if model.kind == "IV":
            t = z @ z
            val = self.C * np.conj((z - t * z.conj()) / (1 - abs(t) ** 2))
        else:
            val = self.C * z.real.astype(complex)
        return np.r_[val, self.extra] if model.flat else val

    def dbar(self, Z, X) -> np.ndarray:
        """Exact d/d(tbar) of ``t -> V(Z + t X)`` at ``t = 0`` (``X`` in ambient shape)."""
        model = self.model
        Z = np.asarray(Z, dtype=complex)
        X = np.asarray(X, dtype=complex)
        if model.is_matrix:
            GL = np.eye(Z.shape[0]) - Z @ Z.conj().T
            GR = np.eye(Z.shape[1]) - Z.conj().T @ Z
            Xs = X.conj().T
            return model.to_coords(-(Z @ Xs) @ self.C @ GR - GL @ self.C @ (Xs @ Z))
        m = model.m
        z, x = Z[:m], X[:m]
        if model.kind == "IV":
            t = z @ z
            dt = 2 * (z @ x)
            den = 1 - abs(t) ** 2
            dw = (x - dt * z.conj()) / den + (z - t * z.conj()) * dt * np.conj(t) / den**2
            val = self.C * np.conj(dw)
        else:
            val = self.C * x.conj() / 2
        return np.r_[val, 0.0] if model.flat else val


def canonical_section(point: BoundaryPoint, V0, policy: TolerancePolicy = DEFAULT_POLICY, *, frame: LeafFrame | None = None) -> Section:
    """Section of the leaf tangent bundle with value ``V0`` (flat coordinates) at ``point``."""
    frame = frame or leaf_frame(point, policy)
    model = point.model
    V0 = np.asarray(V0, dtype=complex)
    if V0.shape != (model.ambient_dim,) or not _in_span(frame.leaf_basis, V0, 1e-9):
        raise NotLeafVector("V0 is not in the leaf tangent space")
    st = frame.structure
    if model.is_matrix:
        Z = point.ambient
        GL = np.eye(Z.shape[0]) - Z @ Z.conj().T
        GR = np.eye(Z.shape[1]) - Z.conj().T @ Z
        C = np.linalg.pinv(GL, rcond=1e-9, hermitian=True) @ model.from_coords(V0) @ np.linalg.pinv(GR, rcond=1e-9, hermitian=True)
        return Section(model, C)
    m = model.m
    ref = st.a.conj() if model.kind == "IV" else st.a.real.astype(complex)
    c = np.vdot(ref, V0[:m]) / np.vdot(ref, ref)
    return Section(model, complex(c), complex(V0[-1]) if model.flat else 0.0)


# ---------------------------------------------------------------- slice curves


@dataclass(frozen=True)
class SliceDecomposition:
    alpha: np.ndarray
    beta: np.ndarray | None


def decompose_slice(frame: LeafFrame, X: np.ndarray) -> SliceDecomposition:
    """Parameters of a slice tangent ``X`` (flat coordinates).

    I: ``X = a beta* + alpha b*``; II: ``X = a beta^T - beta a^T + alpha b^T - b alpha^T``;
    III: ``X = a alpha^T + alpha a^T``; IV and Tube: ``alpha = X``.
    """
    model = frame.base.model
    X = np.asarray(X, dtype=complex)
    if X.shape != (model.ambient_dim,) or not _in_span(frame.slice_basis, X, 1e-9):
        raise NotSliceVector("vector is not in the slice tangent space")
    st = frame.structure
    Xm = model.from_coords(X)
    if model.kind == "I":
        return SliceDecomposition(Xm @ st.b, Xm.conj().T @ st.a)
    if model.kind == "II":
        return SliceDecomposition(Xm @ st.b.conj(), -(Xm @ st.a.conj()))
    if model.kind == "III":
        return SliceDecomposition(Xm @ st.a.conj(), None)
    return SliceDecomposition(Xm[: model.m], None)


def slice_curve(point: BoundaryPoint, X, policy: TolerancePolicy = DEFAULT_POLICY, *, frame: LeafFrame | None = None) -> Callable[[complex], np.ndarray]:
    """Holomorphic curve through ``point`` with initial velocity ``X`` inside the slice.

    Uses the product curves built from the slice parametrization, translated by
    the leaf offset of the point.
    """
    frame = frame or leaf_frame(point, policy)
    model = point.model
    d = decompose_slice(frame, X)
    st = frame.structure
    kind = model.kind
    a, b = st.a, st.b
    offset = point.ambient - st.base_ambient

    def curve(t):
        t = complex(t)
        if kind == "I":
            return np.outer(a + t * d.alpha, (b + np.conj(t) * d.beta).conj()) + offset
        if kind == "II":
            p, q = a + t * d.alpha, b + t * d.beta
            return np.outer(p, q) - np.outer(q, p) + offset
        if kind == "III":
            p = a + t * d.alpha
            return np.outer(p, p) + offset
        z = point.ambient.copy()
        z[: model.m] = z[: model.m] + t * d.alpha
        return z

    return curve
