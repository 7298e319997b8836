"""Matrix models of the smooth boundary parts of the classical domains.

Every model is a real hypersurface of C^N' with the interior on the side
``rho < 0``.  Points of kinds I, II, III are stored as full matrices, points of
kinds IV and Tube as vectors.  Internally all derivatives are taken in a flat
coordinate vector ``w`` of length N' that is isometric to the Frobenius inner
product:

* I:   ``w = Z.ravel()``
* II:  ``w = sqrt(2) Z_ij`` for ``i < j`` (basis ``(E_ij - E_ji)/sqrt 2``)
* III: ``w = Z_ii`` on the diagonal, ``sqrt(2) Z_ij`` for ``i < j``
* IV, Tube: the vector itself
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

from .numerics import DEFAULT_POLICY, TolerancePolicy, gram_schmidt, random_unit_vector

KINDS = ("I", "II", "III", "IV", "Tube")
SMOOTH_MARGIN = 1e-6


class ShapeMismatch(ValueError):
    pass


class BadDimensions(ValueError):
    pass


class NotOnBoundary(ValueError):
    pass


@dataclass(frozen=True)
class DomainModel:
    """A boundary model with its dimension bookkeeping.

    ``flat=True`` appends one extra complex coordinate on which the defining
    function does not depend, giving the product ``M x C``.  It exists as a
    test fixture for a hypersurface that is not 2-nondegenerate and is only
    supported for the vector kinds IV and Tube.
    """

    kind: str
    m: int
    n: int | None = None
    flat: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadDimensions(f"unknown kind {self.kind!r}")
        if not isinstance(self.m, (int, np.integer)) or isinstance(self.m, bool):
            raise BadDimensions("m must be an integer")
        object.__setattr__(self, "m", int(self.m))
        if self.kind == "I":
            if self.n is None:
                raise BadDimensions("kind I needs n")
            object.__setattr__(self, "n", int(self.n))
            if self.m < 2 or self.n < 2:
                raise BadDimensions("kind I needs m, n >= 2")
        else:
            if self.n is not None and self.n != self.m:
                raise BadDimensions(f"n is only meaningful for kind I (got n={self.n})")
            object.__setattr__(self, "n", None)
        minimum = {"I": 2, "II": 4, "III": 2, "IV": 2, "Tube": 3}[self.kind]
        if self.m < minimum:
            raise BadDimensions(f"kind {self.kind} needs m >= {minimum}")
        if self.flat and self.kind not in ("IV", "Tube"):
            raise BadDimensions("the flat product fixture is only available for kinds IV and Tube")
        if self.expected_positive + self.leaf_dim + 1 != self.ambient_dim:
            raise BadDimensions("inconsistent dimension bookkeeping")

    @property
    def is_matrix(self) -> bool:
        return self.kind in ("I", "II", "III")

    @property
    def shape(self) -> tuple[int, ...]:
        if self.kind == "I":
            return (self.m, self.n)
        if self.is_matrix:
            return (self.m, self.m)
        return (self.m + int(self.flat),)

    @property
    def ambient_dim(self) -> int:
        m = self.m
        return {
            "I": m * (self.n or 0),
            "II": m * (m - 1) // 2,
            "III": m * (m + 1) // 2,
            "IV": m,
            "Tube": m,
        }[self.kind] + int(self.flat)

    @property
    def leaf_dim(self) -> int:
        m = self.m
        return {
            "I": (m - 1) * ((self.n or 0) - 1),
            "II": (m - 2) * (m - 3) // 2,
            "III": m * (m - 1) // 2,
            "IV": 1,
            "Tube": 1,
        }[self.kind] + int(self.flat)

    @property
    def expected_positive(self) -> int:
        m = self.m
        return {"I": m + (self.n or 0) - 2, "II": 2 * m - 4, "III": m - 1, "IV": m - 2, "Tube": m - 2}[self.kind]

    @property
    def label(self) -> str:
        dims = f"{self.m},{self.n}" if self.kind == "I" else f"{self.m}"
        return f"{self.kind}({dims})" + ("xC" if self.flat else "")

    @cached_property
    def basis(self) -> np.ndarray:
        """Coordinate basis ``X`` of shape ``(N',) + shape`` with ``Z = sum_a w_a X_a``."""
        N = self.ambient_dim
        X = np.zeros((N,) + self.shape, dtype=complex)
        if self.kind == "I":
            X.reshape(N, -1)[np.arange(N), np.arange(N)] = 1.0
        elif self.kind == "II":
            for a, (i, j) in enumerate(self.index_pairs):
                X[a, i, j] = 1 / np.sqrt(2)
                X[a, j, i] = -1 / np.sqrt(2)
        elif self.kind == "III":
            for a, (i, j) in enumerate(self.index_pairs):
                if i == j:
                    X[a, i, i] = 1.0
                else:
                    X[a, i, j] = X[a, j, i] = 1 / np.sqrt(2)
        else:
            X[np.arange(N), np.arange(N)] = 1.0
        X.flags.writeable = False
        return X

    @cached_property
    def index_pairs(self) -> tuple[tuple[int, int], ...]:
        m = self.m
        if self.kind == "II":
            return tuple((i, j) for i in range(m) for j in range(i + 1, m))
        if self.kind == "III":
            return tuple((i, j) for i in range(m) for j in range(i, m))
        return ()

    def to_coords(self, Z) -> np.ndarray:
        """Flat coordinates of ``Z``; for II/III this projects onto the structured subspace."""
        Z = self.check_shape(Z)
        if self.kind == "I" or not self.is_matrix:
            return Z.ravel().copy()
        return np.einsum("aij,ij->a", self.basis.conj(), Z)

    def from_coords(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        if w.shape != (self.ambient_dim,):
            raise ShapeMismatch(f"expected {self.ambient_dim} coordinates, got shape {w.shape}")
        if not self.is_matrix:
            return w.copy()
        if self.kind == "I":
            return w.reshape(self.shape).copy()
        return np.einsum("a,aij->ij", w, self.basis)

    def check_shape(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        if Z.shape != self.shape:
            raise ShapeMismatch(f"{self.label} expects shape {self.shape}, got {Z.shape}")
        return Z

    def structured(self, Z) -> np.ndarray:
        """Apply the symmetry constraint of the model to the free entries of ``Z``."""
        Z = self.check_shape(Z)
        if self.kind in ("II", "III"):
            return self.from_coords(self.to_coords(Z))
        return Z.copy()

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "m": self.m, "n": self.n}
        if self.flat:
            doc["flat"] = True
        return doc


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class BoundaryPoint:
    model: DomainModel
    ambient: np.ndarray
    provenance: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "ambient", _frozen(self.model.check_shape(self.ambient)))
        prov = {k: (_frozen(v) if isinstance(v, np.ndarray) else v) for k, v in dict(self.provenance).items()}
        object.__setattr__(self, "provenance", MappingProxyType(prov))

    @property
    def coords(self) -> np.ndarray:
        return self.model.to_coords(self.ambient)

    @property
    def is_canonical(self) -> bool:
        """True at a leaf base point built by the sampler (zero leaf offset)."""
        if self.model.kind == "Tube":
            return True
        if self.model.is_matrix:
            B = self.provenance.get("B")
            return B is not None and float(np.linalg.norm(B)) == 0.0
        t = self.provenance.get("t")
        return t is not None and t == 0


def boundary_point(model: DomainModel, Z, provenance=None, policy: TolerancePolicy = DEFAULT_POLICY) -> BoundaryPoint:
    """Validate ``Z`` as a smooth boundary point of ``model``."""
    Z = model.check_shape(Z)
    if model.kind == "II" and not np.array_equal(Z.T, -Z):
        raise NotOnBoundary("kind II points must be exactly skew-symmetric")
    if model.kind == "III" and not np.array_equal(Z.T, Z):
        raise NotOnBoundary("kind III points must be exactly symmetric")
    if not is_smooth_boundary_point(model, Z, policy):
        raise NotOnBoundary(f"not a smooth boundary point of {model.label}")
    return BoundaryPoint(model, Z, provenance or {})


# ---------------------------------------------------------------- defining functions


def defining_value(model: DomainModel, Z) -> float:
    Z = model.structured(Z)
    kind = model.kind
    if model.is_matrix:
        A = Z.conj().T @ Z
        return float(-np.linalg.det(np.eye(A.shape[0]) - A).real)
    z = Z[: model.m]
    if kind == "IV":
        s = z @ z
        return float(2 * np.vdot(z, z).real - 1 - abs(s) ** 2)
    x = z.real
    return float(np.sum(x[:-1] ** 2) - x[-1] ** 2)


def regular_defining_value(model: DomainModel, Z) -> float:
    """Defining function with nonvanishing gradient on the smooth part.

    Agrees with :func:`defining_value` except for kind II, where the determinant
    vanishes to second order and is replaced by minus the product, over
    eigenvalue pairs of ``I - Z Z*``, of the pair means.
    """
    if model.kind != "II":
        return defining_value(model, Z)
    Z = model.structured(Z)
    mu = np.linalg.eigvalsh(np.eye(model.m) - Z @ Z.conj().T)
    k = model.m // 2
    pairs = (mu[: 2 * k : 2] + mu[1 : 2 * k : 2]) / 2
    rest = mu[2 * k :]
    return float(-np.prod(pairs) * np.prod(rest))


def _products_except(mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``hat[i] = prod_{k != i} mu_k`` and ``c2[i,j] = prod_{k != i,j} mu_k`` (0 on the diagonal)."""
    m = mu.size
    eye = np.eye(m, dtype=bool)
    hat = np.array([np.prod(mu[~eye[i]]) for i in range(m)])
    c2 = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            keep = ~(eye[i] | eye[j])
            c2[i, j] = c2[j, i] = np.prod(mu[keep])
    return hat, c2


def _spectral_parts(model: DomainModel, Z):
    """Eigen-data of ``G = I - Z Z*`` and the derivative blocks in its eigenbasis.

    Returns ``mu`` (ascending), ``Ga`` with ``Ga[a] = P* dG/dw_a P`` and
    ``Y`` with ``Y[a] = P* X_a`` so that ``P* d2G/dw_a dwbar_b P = -Y_a Y_b*``.
    """
    X = model.basis
    mu, P = np.linalg.eigh(np.eye(model.shape[0]) - Z @ Z.conj().T)
    Y = np.einsum("ki,akj->aij", P.conj(), X)
    Wz = Z.conj().T @ P
    Ga = -np.einsum("aij,jk->aik", Y, Wz)
    return mu, Ga, Y


def _pair_weights(mu: np.ndarray, m: int):
    """Gradient weights ``d`` and Hessian weights ``W`` of the pair-reduced function."""
    lam1 = (mu[0] + mu[1]) / 2
    rest = mu[2:]
    r = np.sqrt(np.prod(rest))
    d = np.empty_like(mu)
    d[:2] = r
    d[2:] = lam1 * r / rest
    W = np.zeros((m, m))
    W[:2, 2:] = r / rest[None, :]
    W[2:, :2] = W[:2, 2:].T
    W[2:, 2:] = lam1 * r / np.outer(rest, rest)
    return d, W


def complex_gradient(model: DomainModel, Z) -> np.ndarray:
    """Wirtinger gradient ``(d rho / d w_a)_a`` in flat coordinates (length N')."""
    Z = model.structured(Z)
    if model.is_matrix:
        mu, Ga, _ = _spectral_parts(model, Z)
        diag = np.einsum("aii->ai", Ga)
        if model.kind == "II":
            d, _ = _pair_weights(mu, model.m)
            return -0.5 * diag @ d
        hat, _ = _products_except(mu)
        return -(diag @ hat)
    g = np.zeros(model.ambient_dim, dtype=complex)
    z = Z[: model.m]
    if model.kind == "IV":
        g[: model.m] = 2 * z.conj() - 2 * z * np.conj(z @ z)
    else:
        g[: model.m] = z.real
        g[model.m - 1] = -z[-1].real
    return g


def complex_hessian(model: DomainModel, Z) -> np.ndarray:
    """``H[a, b] = d^2 rho / (d w_a d wbar_b)`` in flat coordinates."""
    Z = model.structured(Z)
    N = model.ambient_dim
    if model.is_matrix:
        mu, Ga, Y = _spectral_parts(model, Z)
        diag = np.einsum("aii->ai", Ga)
        YY = np.einsum("aik,bik->abi", Y, Y.conj())  # = -(P* d2G P)_ii
        if model.kind == "II":
            d, W = _pair_weights(mu, model.m)
            q = (
                -0.5 * YY @ d
                - 0.5 * np.einsum("ij,aij,bij->ab", W, Ga, Ga.conj())
                + 0.25 * np.einsum("ai,ij,bj->ab", diag, W, diag.conj())
            )
            return -q
        hat, c2 = _products_except(mu)
        det2 = (
            -YY @ hat
            - np.einsum("ij,aij,bij->ab", c2, Ga, Ga.conj())
            + np.einsum("ai,ij,bj->ab", diag, c2, diag.conj())
        )
        return -det2
    H = np.zeros((N, N), dtype=complex)
    m = model.m
    z = Z[:m]
    if model.kind == "IV":
        H[:m, :m] = 2 * np.eye(m) - 4 * np.outer(z, z.conj())
    else:
        H[:m, :m] = 0.5 * np.diag(np.r_[np.ones(m - 1), -1.0])
    return H


# ---------------------------------------------------------------- smooth part


def is_smooth_boundary_point(model: DomainModel, Z, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    try:
        Z = model.check_shape(Z)
    except ShapeMismatch:
        return False
    if not np.all(np.isfinite(Z)):
        return False
    tol = policy.abs_residual_tol
    if model.kind == "II":
        s = np.linalg.svd(Z, compute_uv=False)
        ok = abs(s[0] - 1) <= tol and abs(s[1] - 1) <= tol
        ok = ok and (s.size < 3 or s[2] <= 1 - SMOOTH_MARGIN)
        return bool(ok and abs(regular_defining_value(model, Z)) <= tol)
    if abs(defining_value(model, Z)) > tol:
        return False
    if model.is_matrix:
        s = np.linalg.svd(Z, compute_uv=False)
        return bool(abs(s[0] - 1) <= tol and (s.size < 2 or s[1] <= 1 - SMOOTH_MARGIN))
    z = Z[: model.m]
    if model.kind == "IV":
        return bool(np.vdot(z, z).real <= 1 - SMOOTH_MARGIN)
    return bool(z[-1].real >= SMOOTH_MARGIN)


# ---------------------------------------------------------------- sampler


def _scale_to_norm(B: np.ndarray, r: float) -> np.ndarray:
    s = np.linalg.norm(B, 2)
    if r == 0 or s == 0:
        return np.zeros_like(B)
    return B * (r / s)


def sample_boundary_point(model: DomainModel, seed: int, leaf_radius: float = 0.0) -> BoundaryPoint:
    """Seeded point on the smooth boundary part at leaf distance ``leaf_radius``.

    Matrix kinds: ``Z = base + B`` with ``B`` in the leaf and spectral norm
    exactly ``leaf_radius``.  Kind IV: ``z = w + t conj(w)`` with ``|t| = leaf_radius``.
    Tube: ``z = q + t Re(q)``.
    """
    r = float(leaf_radius)
    if not 0.0 <= r < 1.0:
        raise ValueError("leaf_radius must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    m = model.m
    kind = model.kind

    def gauss(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    if kind == "I":
        u, v = random_unit_vector(rng, m), random_unit_vector(rng, model.n)
        B = (np.eye(m) - np.outer(u, u.conj())) @ gauss(m, model.n) @ (np.eye(model.n) - np.outer(v, v.conj()))
        B = _scale_to_norm(B, r)
        Z = np.outer(u, v.conj()) + B
        prov = {"u": u, "v": v, "B": B}
    elif kind == "II":
        uv = gram_schmidt(gauss(m, 2))
        u, v = uv[:, 0], uv[:, 1]
        S = gauss(m, m)
        Q = np.eye(m) - np.outer(u, u.conj()) - np.outer(v, v.conj())
        B = Q @ (S - S.T) @ Q.conj()
        B = _scale_to_norm((B - B.T) / 2, r)
        Z = np.outer(u, v) - np.outer(v, u) + B
        Z = (Z - Z.T) / 2
        prov = {"u": u, "v": v, "B": B}
    elif kind == "III":
        w = random_unit_vector(rng, m)
        S = gauss(m, m)
        Q = np.eye(m) - np.outer(w, w.conj())
        B = Q @ (S + S.T) @ Q.conj()
        B = _scale_to_norm((B + B.T) / 2, r)
        Z = np.outer(w, w) + B
        Z = (Z + Z.T) / 2
        prov = {"w": w, "B": B}
    elif kind == "IV":
        xy = np.linalg.qr(rng.standard_normal((m, 2)))[0]
        w = (xy[:, 0] + 1j * xy[:, 1]) / 2
        t = r * np.exp(2j * np.pi * rng.random()) if r > 0 else 0.0
        Z = w + t * w.conj()
        prov = {"w": w, "t": complex(t)}
    else:
        xN = abs(rng.standard_normal()) + 0.5
        d = rng.standard_normal(m - 1)
        x = np.r_[xN * d / np.linalg.norm(d), xN]
        q = x + 1j * rng.standard_normal(m)
        t = r * np.exp(2j * np.pi * rng.random()) if r > 0 else 0.0
        Z = q + t * q.real
        prov = {"q": q, "t": complex(t)}
    if model.flat:
        extra = complex(gauss(1)[0])
        Z = np.r_[Z, extra]
        prov["extra"] = extra
    return BoundaryPoint(model, Z, prov)


def canonical_point(model: DomainModel, seed: int) -> BoundaryPoint:
    return sample_boundary_point(model, seed, 0.0)
