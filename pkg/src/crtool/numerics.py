"""Dense complex linear algebra with an explicit tolerance policy.

Every integer-valued decision (rank, kernel dimension, inertia) is made twice,
once with ``rel_rank_tol`` and once with ``stability_check_tol``; callers get a
``stable`` flag telling them whether the two agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class NonFinite(ValueError):
    pass


class NotHermitian(ValueError):
    pass


class EvaluationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class TolerancePolicy:
    rel_rank_tol: float = 1e-10
    abs_residual_tol: float = 1e-8
    fd_step: float = 1e-4
    stability_check_tol: float = 1e-12

    def __post_init__(self):
        for name in ("rel_rank_tol", "abs_residual_tol", "fd_step", "stability_check_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.rel_rank_tol > self.stability_check_tol:
            raise ValueError("rel_rank_tol must exceed stability_check_tol")


DEFAULT_POLICY = TolerancePolicy()


def as_complex_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has non-finite entries")
    return A


def svd(A):
    """Return ``(U, s, Vh)`` with ``A = U @ diag(s) @ Vh``; ``s`` is nonincreasing."""
    A = as_complex_matrix(A)
    return np.linalg.svd(A, full_matrices=True)


def singular_values(A) -> np.ndarray:
    A = as_complex_matrix(A)
    return np.linalg.svd(A, compute_uv=False)


def _rank_from_sv(s: np.ndarray, rel: float) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel * s[0]))


def rank_with_tol(A, policy: TolerancePolicy = DEFAULT_POLICY) -> tuple[int, bool]:
    s = singular_values(A)
    rank = _rank_from_sv(s, policy.rel_rank_tol)
    return rank, rank == _rank_from_sv(s, policy.stability_check_tol)


def kernel_basis(A, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Orthonormal columns spanning the numerical null space of ``A``."""
    A = as_complex_matrix(A)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    rank = _rank_from_sv(s, policy.rel_rank_tol)
    return Vh[rank:].conj().T


def orthonormal_columns(A, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Orthonormal basis of the column span of ``A``."""
    A = as_complex_matrix(A)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    return U[:, : _rank_from_sv(s, policy.rel_rank_tol)]


def principal_angles(A, B) -> np.ndarray:
    """Principal angles (radians, ascending) between the column spans of A and B."""
    Qa = orthonormal_columns(A)
    Qb = orthonormal_columns(B)
    if Qa.shape[1] == 0 or Qb.shape[1] == 0:
        return np.zeros(0)
    c = np.linalg.svd(Qa.conj().T @ Qb, compute_uv=False)
    # sin form is accurate for the tiny angles we care about
    k = min(Qa.shape[1], Qb.shape[1])
    if Qa.shape[1] <= Qb.shape[1]:
        resid = Qa - Qb @ (Qb.conj().T @ Qa)
    else:
        resid = Qb - Qa @ (Qa.conj().T @ Qb)
    sn = np.sort(np.linalg.svd(resid, compute_uv=False))[:k]
    ang = np.arcsin(np.clip(sn, 0.0, 1.0))
    big = ang > 0.5
    if np.any(big):
        ang_cos = np.sort(np.arccos(np.clip(c[:k], -1.0, 1.0)))
        ang = np.where(big, ang_cos, ang)
    return np.sort(ang)


def symmetrize(H) -> np.ndarray:
    H = as_complex_matrix(H)
    return (H + H.conj().T) / 2


def hermitian_signature(H, policy: TolerancePolicy = DEFAULT_POLICY, *, return_stable: bool = False, scale: float | None = None):
    """Inertia ``(n_pos, n_zero, n_neg)`` of a Hermitian matrix.

    The zero band is ``rel_rank_tol * max|lambda|``, or ``rel_rank_tol * scale``
    when a reference scale is given (needed when every eigenvalue is zero up
    to roundoff).  With ``return_stable`` the result is
    ``((n_pos, n_zero, n_neg), stable)``.
    """
    H = as_complex_matrix(H)
    if H.shape[0] != H.shape[1]:
        raise NotHermitian(f"matrix is not square: {H.shape}")
    hnorm = np.linalg.norm(H)
    if np.linalg.norm(H - H.conj().T) > policy.abs_residual_tol * max(hnorm, 1e-300):
        raise NotHermitian("matrix fails the Hermitian pre-check")
    lam = np.linalg.eigvalsh(symmetrize(H))
    sig = _inertia(lam, policy.rel_rank_tol, scale)
    if return_stable:
        return sig, sig == _inertia(lam, policy.stability_check_tol, scale)
    return sig


def _inertia(lam: np.ndarray, rel: float, scale: float | None = None) -> tuple[int, int, int]:
    if lam.size == 0:
        return (0, 0, 0)
    band = rel * (np.max(np.abs(lam)) if scale is None else scale)
    pos = int(np.count_nonzero(lam > band))
    neg = int(np.count_nonzero(lam < -band))
    return (pos, lam.size - pos - neg, neg)


def _central(f: Callable, t0: complex, direction: complex, h: float):
    """4-point central difference, O(h^4); differences are formed before weighting."""
    val = lambda k: np.asarray(f(t0 + k * h * direction), dtype=complex)  # noqa: E731
    return (8.0 * (val(1) - val(-1)) - (val(2) - val(-2))) / (12.0 * h)


def dbar_derivative(curve: Callable, t0: complex = 0.0, policy: TolerancePolicy = DEFAULT_POLICY, *, step: float | None = None):
    """d/d(tbar) of ``curve`` at ``t0``: ``(d/dx + i d/dy) / 2``.

    Central 4-point differences in x and y at steps h and h/2, combined by one
    Richardson step.  ``curve`` must be evaluable on the disk of radius 2h.
    """
    h = policy.fd_step if step is None else step

    def wirtinger(hh):
        dx = _central(curve, t0, 1.0, hh)
        dy = _central(curve, t0, 1j, hh)
        return 0.5 * (dx + 1j * dy)

    try:
        coarse = wirtinger(h)
        fine = wirtinger(h / 2)
    except Exception as exc:  # curve evaluation is user code
        raise EvaluationFailed(f"curve evaluation failed: {exc}") from exc
    return (16.0 * fine - coarse) / 15.0


def d_derivative(curve: Callable, t0: complex = 0.0, policy: TolerancePolicy = DEFAULT_POLICY, *, step: float | None = None):
    """Holomorphic counterpart of :func:`dbar_derivative`: ``(d/dx - i d/dy) / 2``."""
    h = policy.fd_step if step is None else step

    def wirtinger(hh):
        dx = _central(curve, t0, 1.0, hh)
        dy = _central(curve, t0, 1j, hh)
        return 0.5 * (dx - 1j * dy)

    try:
        coarse = wirtinger(h)
        fine = wirtinger(h / 2)
    except Exception as exc:
        raise EvaluationFailed(f"curve evaluation failed: {exc}") from exc
    return (16.0 * fine - coarse) / 15.0


def random_unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    """Normalized standard complex Gaussian."""
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z / np.linalg.norm(z)


def gram_schmidt(vectors: np.ndarray) -> np.ndarray:
    """One classical Gram-Schmidt pass over the columns, in index order."""
    out = []
    for col in vectors.T:
        v = col.astype(complex)
        for q in out:
            v = v - q * np.vdot(q, v)
        out.append(v / np.linalg.norm(v))
    return np.array(out).T if out else np.zeros((vectors.shape[0], 0), complex)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))
