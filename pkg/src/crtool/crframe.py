"""Frames of T^{1,0}M, the Levi form in a frame, and its null space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import BoundaryPoint, complex_gradient, complex_hessian
from .numerics import DEFAULT_POLICY, TolerancePolicy, hermitian_signature, kernel_basis, symmetrize


class VanishingGradient(ValueError):
    pass


class UnstableSignature(RuntimeError):
    pass


class NotTangent(ValueError):
    pass


@dataclass(frozen=True)
class TangentFrame:
    """Columns of ``vectors`` are an orthonormal basis of T^{1,0}_pM.

    A column ``v`` satisfies ``sum_a rho_a v_a = 0``.
    """

    base: BoundaryPoint
    vectors: np.ndarray
    drop_index: int


@dataclass(frozen=True)
class LeviReport:
    frame: TangentFrame
    matrix: np.ndarray
    signature: tuple[int, int, int]
    stable: bool

    def to_json(self) -> dict:
        from .jsonio import encode_complex

        return {"signature": list(self.signature), "stable": self.stable, "matrix": encode_complex(self.matrix)}


def frame_from_gradient(grad: np.ndarray, drop_index: int | None = None, reference: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """Orthonormal basis of ``{v : grad . v = 0}`` built from a reference basis.

    The reference columns (standard basis by default) are projected onto the
    hyperplane, the one with the smallest projection is dropped, and the rest
    are orthonormalized in index order.
    """
    g = np.conj(grad) / np.linalg.norm(grad)
    N = g.size
    R = np.eye(N, dtype=complex) if reference is None else np.asarray(reference, dtype=complex)
    proj = R - np.outer(g, g.conj() @ R)
    if drop_index is None:
        drop_index = int(np.argmax(np.abs(g.conj() @ R)))
    keep = [k for k in range(N) if k != drop_index]
    Q, Rr = np.linalg.qr(proj[:, keep])
    # sign-fix so that Q agrees with Gram-Schmidt in index order
    phase = np.diag(Rr) / np.abs(np.diag(Rr))
    return Q * phase, drop_index


def tangent_frame(point: BoundaryPoint, policy: TolerancePolicy = DEFAULT_POLICY, *, reference: np.ndarray | None = None) -> TangentFrame:
    grad = complex_gradient(point.model, point.ambient)
    if np.linalg.norm(grad) < policy.abs_residual_tol:
        raise VanishingGradient(f"gradient vanishes at this point of {point.model.label}")
    V, drop = frame_from_gradient(grad, reference=reference)
    return TangentFrame(point, V, drop)


def levi_matrix(H: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``L[j, k] = sum_ab H[a, b] V[a, j] conj(V[b, k])``."""
    return V.T @ H @ V.conj()


def levi_report(point: BoundaryPoint, policy: TolerancePolicy = DEFAULT_POLICY, *, frame: TangentFrame | None = None) -> LeviReport:
    frame = frame or tangent_frame(point, policy)
    H = complex_hessian(point.model, point.ambient)
    L = symmetrize(levi_matrix(H, frame.vectors))
    # the Hessian norm bounds every Levi eigenvalue and sets the zero band
    sig, stable = hermitian_signature(L, policy, return_stable=True, scale=np.linalg.norm(H, 2))
    return LeviReport(frame, L, sig, stable)


def levi_null_basis(point: BoundaryPoint, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Ambient columns (N' x n_zero) spanning the Levi null space."""
    rep = levi_report(point, policy)
    if not rep.stable:
        raise UnstableSignature(f"Levi signature {rep.signature} is tolerance dependent")
    lam, E = np.linalg.eigh(rep.matrix)
    order = np.argsort(np.abs(lam))
    null = E[:, order[: rep.signature[1]]]
    # L[j,k] pairs v_j with conj(v_k); a null vector c of L gives sum_k conj(c_k) v_k
    return rep.frame.vectors @ null.conj()


def scalar_levi_value(point: BoundaryPoint, v1, v2, policy: TolerancePolicy = DEFAULT_POLICY) -> complex:
    """Levi form ``sum_ab H[a, b] v1_a conj(v2_b)`` of two T^{1,0} vectors (flat coordinates)."""
    model = point.model
    grad = complex_gradient(model, point.ambient)
    gn = np.linalg.norm(grad)
    for v in (v1, v2):
        v = np.asarray(v, dtype=complex)
        if v.shape != (model.ambient_dim,):
            raise NotTangent(f"expected a vector of length {model.ambient_dim}")
        if abs(grad @ v) > policy.abs_residual_tol * max(gn * np.linalg.norm(v), 1.0):
            raise NotTangent("vector is not annihilated by the complex gradient")
    H = complex_hessian(model, point.ambient)
    return complex(np.asarray(v1) @ H @ np.conj(v2))
