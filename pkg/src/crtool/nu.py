"""The tensor R, kernel dimensions, the invariant nu and nondegeneracy ranks.

``R(l, V)`` takes a CR vector ``l`` (coefficients of a (0,1)-vector in the
d/d(wbar) basis, so ``conj(l)`` is a (1,0)-tangent ``X``) and a leaf vector
``V``.  It is the component orthogonal to the leaf of the antiholomorphic
derivative of a leaf-tangent section extending ``V``.  R is complex linear in
both arguments.

Kernel dimensions are computed on the slice: the matrix of ``R(., V)`` over
the conjugated slice basis has ``n_plus`` columns and the slice kernel is
``n_plus - rank``.  The full kernel adds the ``K`` leaf directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .crframe import levi_report, tangent_frame, frame_from_gradient
from .domains import BoundaryPoint, DomainModel, complex_gradient, complex_hessian
from .foliation import LeafFrame, NotSliceVector, canonical_section, decompose_slice, leaf_frame, slice_curve
from .numerics import DEFAULT_POLICY, TolerancePolicy, dbar_derivative, rank_with_tol


class UnstableRank(RuntimeError):
    pass


class NotCanonicalPoint(ValueError):
    pass


@dataclass(frozen=True)
class TensorRValue:
    value: np.ndarray
    projected: bool = True


@dataclass(frozen=True)
class NuReport:
    base: BoundaryPoint
    nu: int
    maximizer_V: np.ndarray
    kernel_dim_at_max: int
    method: str
    samples_used: int
    stable: bool

    def to_json(self) -> dict:
        from .jsonio import encode_complex

        return {
            "nu": int(self.nu),
            "method": self.method,
            "kernel_dim": int(self.kernel_dim_at_max),
            "V": encode_complex(self.maximizer_V),
            "stable": bool(self.stable),
        }


@dataclass(frozen=True)
class NuConfig:
    samples: int = 200
    refine_iters: int = 100
    seed: int = 0
    starts: int = 4

    def __post_init__(self):
        if self.samples < 1 or self.refine_iters < 0 or self.starts < 1:
            raise ValueError("samples and starts must be positive, refine_iters nonnegative")


def closed_form_nu(model: DomainModel) -> int:
    """Value of nu at every point of the model (the models are homogeneous)."""
    if model.flat:
        return model.expected_positive
    m = model.m
    return {"I": m + (model.n or 0) - 4, "II": 2 * m - 8, "III": m - 2, "IV": 0, "Tube": 0}[model.kind]


def _leaf_projector(frame: LeafFrame) -> np.ndarray:
    L = frame.leaf_basis
    return np.eye(L.shape[0]) - L @ L.conj().T


def _check_vector(model: DomainModel, x, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape != (model.ambient_dim,):
        raise ValueError(f"{what} must have {model.ambient_dim} flat coordinates")
    return x


# ---------------------------------------------------------------- tensor R


def tensor_R_numeric(point: BoundaryPoint, cr_vector, V0, policy: TolerancePolicy = DEFAULT_POLICY, *, frame: LeafFrame | None = None) -> TensorRValue:
    """R by finite differences: d/d(tbar) of the canonical section along a holomorphic curve."""
    frame = frame or leaf_frame(point, policy)
    model = point.model
    X = np.conj(_check_vector(model, cr_vector, "cr_vector"))
    V0 = _check_vector(model, V0, "V0")
    sec = canonical_section(point, V0, policy, frame=frame)
    try:
        curve = slice_curve(point, X, policy, frame=frame)
    except NotSliceVector:
        Xm = model.from_coords(X)
        base = point.ambient

        def curve(t):
            return base + t * Xm

    d = dbar_derivative(lambda t: sec(curve(t)), 0.0, policy)
    return TensorRValue(_leaf_projector(frame) @ d)


def tensor_R_analytic(point: BoundaryPoint, cr_vector, V0, policy: TolerancePolicy = DEFAULT_POLICY, *, frame: LeafFrame | None = None) -> TensorRValue:
    """R from the exact derivative of the canonical section (valid at every point)."""
    frame = frame or leaf_frame(point, policy)
    model = point.model
    X = np.conj(_check_vector(model, cr_vector, "cr_vector"))
    sec = canonical_section(point, _check_vector(model, V0, "V0"), policy, frame=frame)
    return TensorRValue(_leaf_projector(frame) @ sec.dbar(point.ambient, model.from_coords(X)))


def tensor_R_closed(point: BoundaryPoint, cr_vector, V0, policy: TolerancePolicy = DEFAULT_POLICY, *, frame: LeafFrame | None = None) -> TensorRValue:
    """Closed-form R at a leaf base point; ``conj(cr_vector)`` must lie in the slice."""
    if not point.is_canonical:
        raise NotCanonicalPoint("closed forms hold at leaf base points only")
    frame = frame or leaf_frame(point, policy)
    model = point.model
    X = np.conj(_check_vector(model, cr_vector, "cr_vector"))
    V0 = _check_vector(model, V0, "V0")
    d = decompose_slice(frame, X)
    st = frame.structure
    a, b = st.a, st.b
    kind = model.kind
    if model.is_matrix:
        B0 = model.from_coords(V0)
        al, be = d.alpha, d.beta
        if kind == "I":
            val = -np.outer(a, al.conj()) @ B0 - B0 @ np.outer(be, b.conj())
        elif kind == "II":
            val = (
                -np.outer(b, be.conj()) @ B0
                - np.outer(a, al.conj()) @ B0
                - B0 @ np.outer(be.conj(), b)
                - B0 @ np.outer(al.conj(), a)
            )
        else:
            val = -np.outer(a, al.conj()) @ B0 - B0 @ np.outer(al.conj(), a)
        out = model.to_coords(val)
    else:
        m = model.m
        ref = a.conj() if kind == "IV" else a.real.astype(complex)
        c = np.vdot(ref, V0[:m]) / np.vdot(ref, ref)
        v = d.alpha.conj() if kind == "IV" else d.alpha.conj() / 2
        out = c * v
        if model.flat:
            out = np.r_[out, 0.0]
    return TensorRValue(out)


def r_tensor(point: BoundaryPoint, policy: TolerancePolicy = DEFAULT_POLICY, *, frame: LeafFrame | None = None) -> np.ndarray:
    """``T[l, :, j] = R(conj(s_j), L_l)`` for leaf basis ``L`` and slice basis ``s``.

    ``R(., V)`` on the conjugated slice basis is ``sum_l V_l T[l]`` for leaf
    coordinates ``V``.
    """
    frame = frame or leaf_frame(point, policy)
    L, S = frame.leaf_basis, frame.slice_basis
    K, n_plus = L.shape[1], S.shape[1]
    T = np.zeros((K, L.shape[0], n_plus), dtype=complex)
    for l in range(K):
        for j in range(n_plus):
            T[l, :, j] = tensor_R_analytic(point, S[:, j].conj(), L[:, l], policy, frame=frame).value
    return T


def _slice_matrix(T: np.ndarray, V: np.ndarray) -> np.ndarray:
    return np.einsum("l,lij->ij", V, T)


def _kernel_from_matrix(M: np.ndarray, policy: TolerancePolicy, scale: float) -> tuple[int, bool]:
    """Slice-kernel dim with rank decided relative to ``scale`` (the tensor norm)."""
    n_plus = M.shape[1]
    if n_plus == 0:
        return 0, True
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.count_nonzero(s > policy.rel_rank_tol * scale))
    rank2 = int(np.count_nonzero(s > policy.stability_check_tol * scale))
    return n_plus - rank, rank == rank2


def _tensor_scale(T: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(T) ** 2))) if T.size else 0.0


def kernel_dim_R(point: BoundaryPoint, V, policy: TolerancePolicy = DEFAULT_POLICY, *, frame: LeafFrame | None = None, T: np.ndarray | None = None, raise_unstable: bool = True) -> tuple[int, bool]:
    """Slice-kernel dimension of ``R(., V)`` for a unit leaf vector ``V`` (flat coordinates)."""
    frame = frame or leaf_frame(point, policy)
    T = r_tensor(point, policy, frame=frame) if T is None else T
    V = np.asarray(V, dtype=complex)
    coeffs = frame.leaf_basis.conj().T @ V
    if np.linalg.norm(V - frame.leaf_basis @ coeffs) > 1e-8 * max(1.0, np.linalg.norm(V)):
        raise ValueError("V is not a leaf vector")
    nv = np.linalg.norm(coeffs)
    if nv == 0:
        raise ValueError("V must be nonzero")
    dim, stable = _kernel_from_matrix(_slice_matrix(T, coeffs / nv), policy, _tensor_scale(T))
    if raise_unstable and not stable:
        raise UnstableRank("kernel dimension depends on the rank tolerance")
    return dim, stable


def constructive_maximizer(frame: LeafFrame) -> np.ndarray:
    """A unit leaf vector attaining nu at a leaf base point (flat coordinates).

    I: a rank-one ``alpha beta*``; II: a rank-two ``c d^T - d c^T``;
    III: ``c c^T``; IV and Tube: the leaf direction itself.
    """
    model = frame.base.model
    L = frame.leaf_basis
    if model.flat:
        return L[:, -1].copy()
    # the first leaf basis vector is built from the first complement vectors
    # and has exactly the required rank in every matrix model
    return L[:, 0].copy()


# ---------------------------------------------------------------- search


def _als_refine(T: np.ndarray, V: np.ndarray, k: int, iters: int) -> np.ndarray:
    """Alternating minimization of the sum of the ``k`` smallest squared singular values."""
    K = T.shape[0]
    for _ in range(iters):
        M = _slice_matrix(T, V)
        W = np.linalg.svd(M, full_matrices=True)[2].conj().T[:, -k:]
        A = np.einsum("lij,jk->ikl", T, W).reshape(-1, K)
        V_new = np.linalg.svd(A, full_matrices=False)[2][-1].conj()
        # fix the phase so convergence can be tested
        V_new = V_new * np.exp(-1j * np.angle(np.vdot(V, V_new)))
        if np.linalg.norm(V_new - V) < 1e-14:
            V = V_new
            break
        V = V_new
    return V


def _search(T: np.ndarray, cfg: NuConfig, policy: TolerancePolicy):
    K, _, n_plus = T.shape
    scale = _tensor_scale(T)
    rng = np.random.default_rng(cfg.seed)
    cands = rng.standard_normal((cfg.samples, K)) + 1j * rng.standard_normal((cfg.samples, K))
    cands /= np.linalg.norm(cands, axis=1, keepdims=True)
    dims = []
    for V in cands:
        d, st = _kernel_from_matrix(_slice_matrix(T, V), policy, scale)
        dims.append((d, st))
    best = max(d for d, _ in dims)
    # deterministic choice: first sample attaining the max
    idx = next(i for i, (d, _) in enumerate(dims) if d == best)
    best_V, best_stable = cands[idx], dims[idx][1]
    starts = [cands[i] for i in range(min(cfg.starts, cfg.samples))]
    while best < n_plus:
        k = best + 1
        found = None
        for V0 in [best_V] + starts:
            V = _als_refine(T, V0, k, cfg.refine_iters)
            d, st = _kernel_from_matrix(_slice_matrix(T, V), policy, scale)
            if d >= k and st:
                found = (d, V, st)
                break
        if found is None:
            break
        best, best_V, best_stable = found
    return best, best_V, best_stable


def nu_estimate(point: BoundaryPoint, config: NuConfig | None = None, policy: TolerancePolicy = DEFAULT_POLICY, *, method: str = "auto") -> NuReport:
    """Estimate nu at ``point``.

    ``method="auto"`` uses the family value at leaf base points (checked by
    evaluating the kernel at a constructive maximizer) and the search
    otherwise; ``"search"`` forces the search, which yields a lower bound.
    """
    if method not in ("auto", "search", "closed_form"):
        raise ValueError(f"unknown method {method!r}")
    cfg = config or NuConfig()
    frame = leaf_frame(point, policy)
    T = r_tensor(point, policy, frame=frame)
    use_closed = method == "closed_form" or (method == "auto" and point.is_canonical)
    if use_closed:
        if not point.is_canonical:
            raise NotCanonicalPoint("closed-form nu needs a leaf base point")
        V = constructive_maximizer(frame)
        dim, stable = kernel_dim_R(point, V, policy, frame=frame, T=T, raise_unstable=False)
        nu = closed_form_nu(point.model)
        if stable and dim != nu:
            raise RuntimeError(f"closed form nu={nu} disagrees with kernel {dim} at the constructive maximizer")
        return NuReport(point, nu, V, dim, "closed_form", 0, stable)
    best, coeffs, stable = _search(T, cfg, policy)
    if not stable:
        raise UnstableRank("the maximal kernel dimension is tolerance dependent")
    V = frame.leaf_basis @ coeffs
    return NuReport(point, int(best), V, int(best), "search", cfg.samples, stable)


def is_two_nondegenerate(point: BoundaryPoint, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    """``nu < N' - K - 1``.

    nu is maximal exactly when some nonzero V has ``R(., V) = 0``, i.e. when the
    linear map ``V -> R(., V)`` has a kernel; this is decided by one rank
    computation and needs no search.
    """
    model = point.model
    n_plus = model.ambient_dim - model.leaf_dim - 1
    if n_plus == 0:
        return False
    T = r_tensor(point, policy)
    K = T.shape[0]
    A = T.reshape(K, -1).T
    rank, stable = rank_with_tol(A, policy)
    if not stable:
        raise UnstableRank("rank of the R map is tolerance dependent")
    return rank == K


# ---------------------------------------------------------------- r_k


def _frame_field(model: DomainModel, drop: int):
    def frame_at(Z):
        V, _ = frame_from_gradient(complex_gradient(model, Z), drop_index=drop)
        return V

    return frame_at


R2_STEP = 1e-3


def nondegeneracy_rank(point: BoundaryPoint, k: int, policy: TolerancePolicy = DEFAULT_POLICY) -> tuple[int, bool]:
    """Dimension of the span of ``rho_w`` and its CR derivatives up to order ``k``.

    Order one uses the Hessian in closed form; order two differentiates
    ``H(z) conj(V_j(z))`` along the (1,0) frame with a frozen drop index.
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    model = point.model
    Z = point.ambient
    g = complex_gradient(model, Z)
    rows = [g[None, :]]
    frame = tangent_frame(point, policy)
    V = frame.vectors
    if k >= 1:
        H = complex_hessian(model, Z)
        rows.append((H @ V.conj()).T)
    if k >= 2:
        field_at = _frame_field(model, frame.drop_index)

        def f(Zt):
            return complex_hessian(model, Zt) @ field_at(Zt).conj()

        for i in range(V.shape[1]):
            Xi = model.from_coords(V[:, i])
            D = dbar_derivative(lambda t: f(Z + t * Xi), 0.0, policy, step=R2_STEP)
            rows.append(D.T)
    A = np.vstack(rows)
    return rank_with_tol(A, policy)
