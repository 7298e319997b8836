"""Explicit maps between the models and a CR-transversality checker.

Map kinds
---------
UnitaryI(U, V)      Z -> U Z V*                     I(m,n)   -> I(m,n)
UnitaryII(U)        Z -> U Z U^T                    II(m)    -> II(m)
UnitaryIII(U)       Z -> U Z U^T                    III(m)   -> III(m)
UnitaryIV(O, lam)   z -> lam O z  (O real orthogonal, |lam| = 1)
CayleyTubeToIV      z -> (2i z', F(z) - 1) / F(z + e),  F(z) = z_m^2 - sum z_j^2
BlockEmbedI         Z -> diag(Z, phi)               rank-one unit (m-1)x(n-1) -> I(m,n)
BlockEmbedII        Z -> [[Z,0,0],[0,0,-phi],[0,phi,0]]   rank-two unit skew -> II(m)
SphereEmbedIII      z -> (z,1)(z,1)^T/2 + phi (z,-1)(z,-1)^T/2   unit sphere in C^{m-1} -> III(m)
Constant            every point -> one fixed target point (a degenerate fixture)

``phi`` stands in for a CR function on the source and is either a constant or
a holomorphic polynomial in the flat source coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

from .crframe import tangent_frame
from .domains import BoundaryPoint, DomainModel, boundary_point, complex_gradient, sample_boundary_point
from .foliation import leaf_frame
from .nu import NuConfig, nu_estimate
from .numerics import DEFAULT_POLICY, TolerancePolicy, d_derivative, random_unitary, rank_with_tol

MAP_KINDS = (
    "UnitaryI",
    "UnitaryII",
    "UnitaryIII",
    "UnitaryIV",
    "CayleyTubeToIV",
    "BlockEmbedI",
    "BlockEmbedII",
    "SphereEmbedIII",
    "Constant",
)


class SourceMismatch(ValueError):
    pass


class CayleySingular(ValueError):
    pass


class PhiOutOfRange(ValueError):
    pass


# ---------------------------------------------------------------- phi


@dataclass(frozen=True)
class Phi:
    """Constant or holomorphic polynomial ``sum_k c_k prod_i w_i^{e_ki}``."""

    constant: complex | None = 0.0
    terms: tuple[tuple[complex, tuple[int, ...]], ...] = ()

    def __post_init__(self):
        if (self.constant is None) == (not self.terms):
            raise ValueError("give either a constant or polynomial terms")

    @classmethod
    def polynomial(cls, terms) -> "Phi":
        return cls(None, tuple((complex(c), tuple(int(e) for e in exps)) for c, exps in terms))

    def __call__(self, w: np.ndarray) -> complex:
        if self.constant is not None:
            return complex(self.constant)
        w = self._check(w)
        return complex(sum(c * np.prod(w ** np.asarray(e)) for c, e in self.terms))

    def _check(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        if any(len(e) != w.size for _, e in self.terms):
            raise ValueError(f"polynomial exponents must have length {w.size}")
        return w

    def grad(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        g = np.zeros(w.size, dtype=complex)
        if self.constant is not None:
            return g
        w = self._check(w)
        for c, e in self.terms:
            e = np.asarray(e)
            for i in np.nonzero(e)[0]:
                ei = e.copy()
                ei[i] -= 1
                g[i] += c * e[i] * np.prod(w**ei)
        return g

    def to_json(self) -> dict:
        from .jsonio import encode_complex

        if self.constant is not None:
            return {"constant": encode_complex(self.constant)}
        return {"polynomial": [[encode_complex(c), list(e)] for c, e in self.terms]}

    @classmethod
    def from_json(cls, doc) -> "Phi":
        from .jsonio import decode_complex

        if "constant" in doc:
            return cls(complex(decode_complex(doc["constant"])))
        return cls.polynomial([(complex(decode_complex(c)), e) for c, e in doc["polynomial"]])


# ---------------------------------------------------------------- specs


@dataclass(frozen=True)
class MapSpec:
    kind: str
    source: DomainModel | None
    target: DomainModel
    parameters: Mapping[str, Any] = field(default_factory=dict)
    phi: Phi | None = None
    sphere_dim: int | None = None

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        params = {}
        for k, v in dict(self.parameters).items():
            if isinstance(v, np.ndarray):
                v = np.array(v)
                v.flags.writeable = False
            params[k] = v
        object.__setattr__(self, "parameters", MappingProxyType(params))
        for name in ("U", "V", "O"):
            if name in params:
                A = params[name]
                if np.linalg.norm(A.conj().T @ A - np.eye(A.shape[0])) > 1e-12 * A.shape[0]:
                    raise ValueError(f"parameter {name} is not unitary")
        if self.kind == "UnitaryIV":
            if np.linalg.norm(params["O"].imag) != 0:
                raise ValueError("UnitaryIV needs a real orthogonal O")
            if abs(abs(params["lam"]) - 1) > 1e-12:
                raise ValueError("UnitaryIV needs |lam| = 1")

    @property
    def source_dim(self) -> int:
        if self.kind == "SphereEmbedIII":
            return self.sphere_dim
        return self.source.ambient_dim

    def to_json(self) -> dict:
        from .jsonio import encode_value

        doc = {
            "kind": self.kind,
            "source": self.source.to_json() if self.source else {"sphere": self.sphere_dim},
            "target": self.target.to_json(),
            "parameters": encode_value(dict(self.parameters)),
        }
        if self.phi is not None:
            doc["phi"] = self.phi.to_json()
        return doc

    @classmethod
    def from_json(cls, doc) -> "MapSpec":
        from .jsonio import decode_complex

        def model(d):
            return DomainModel(d["kind"], d["m"], d.get("n"), bool(d.get("flat", False)))

        src = doc["source"]
        params = {}
        for k, v in doc.get("parameters", {}).items():
            arr = np.asarray(v)
            if k == "lam":
                params[k] = complex(decode_complex(v))
            elif arr.dtype.kind in "fc" and arr.ndim >= 1 and arr.shape[-1] == 2 and k != "O":
                params[k] = decode_complex(v)
            else:
                params[k] = arr.astype(float) if k == "O" else arr
        phi = Phi.from_json(doc["phi"]) if "phi" in doc else None
        return cls(
            doc["kind"],
            None if "sphere" in src else model(src),
            model(doc["target"]),
            params,
            phi,
            src.get("sphere"),
        )


def unitary_I(U, V) -> MapSpec:
    U, V = np.asarray(U, complex), np.asarray(V, complex)
    model = DomainModel("I", U.shape[0], V.shape[0])
    return MapSpec("UnitaryI", model, model, {"U": U, "V": V})


def unitary_II(U) -> MapSpec:
    U = np.asarray(U, complex)
    model = DomainModel("II", U.shape[0])
    return MapSpec("UnitaryII", model, model, {"U": U})


def unitary_III(U) -> MapSpec:
    U = np.asarray(U, complex)
    model = DomainModel("III", U.shape[0])
    return MapSpec("UnitaryIII", model, model, {"U": U})


def unitary_IV(O, lam) -> MapSpec:
    O = np.asarray(O, float)
    model = DomainModel("IV", O.shape[0])
    return MapSpec("UnitaryIV", model, model, {"O": O, "lam": complex(lam)})


def cayley_tube_to_IV(m: int) -> MapSpec:
    return MapSpec("CayleyTubeToIV", DomainModel("Tube", m), DomainModel("IV", m))


def block_embed_I(m: int, n: int, phi: Phi) -> MapSpec:
    """Rank-one unit (m-1)x(n-1) matrices into I(m,n); needs m, n >= 3."""
    return MapSpec("BlockEmbedI", DomainModel("I", m - 1, n - 1), DomainModel("I", m, n), {}, phi)


def block_embed_II(m: int, phi: Phi) -> MapSpec:
    """Rank-two unit skew (m-2)x(m-2) matrices into II(m); needs m >= 6."""
    return MapSpec("BlockEmbedII", DomainModel("II", m - 2), DomainModel("II", m), {}, phi)


def sphere_embed_III(m: int, phi: Phi) -> MapSpec:
    """Unit sphere of C^{m-1} into III(m); needs m >= 2."""
    return MapSpec("SphereEmbedIII", None, DomainModel("III", m), {}, phi, m - 1)


def constant_map(source: DomainModel, target_point: BoundaryPoint) -> MapSpec:
    return MapSpec("Constant", source, target_point.model, {"value": np.array(target_point.ambient)})


def random_automorphism(model: DomainModel, rng: np.random.Generator) -> MapSpec:
    if model.kind == "I":
        return unitary_I(random_unitary(rng, model.m), random_unitary(rng, model.n))
    if model.kind == "II":
        return unitary_II(random_unitary(rng, model.m))
    if model.kind == "III":
        return unitary_III(random_unitary(rng, model.m))
    if model.kind == "IV":
        O = np.linalg.qr(rng.standard_normal((model.m, model.m)))[0]
        return unitary_IV(O, np.exp(2j * np.pi * rng.random()))
    raise ValueError(f"no automorphisms implemented for kind {model.kind}")


# ---------------------------------------------------------------- source points


def _F(z: np.ndarray) -> complex:
    return z[-1] ** 2 - np.sum(z[:-1] ** 2)


def _source_array(spec: MapSpec, point, policy: TolerancePolicy) -> np.ndarray:
    """Validate a source point and return its ambient array."""
    if spec.kind == "SphereEmbedIII":
        z = np.asarray(point, dtype=complex)
        if z.shape != (spec.sphere_dim,) or abs(np.linalg.norm(z) - 1) > policy.abs_residual_tol:
            raise SourceMismatch(f"expected a unit vector in C^{spec.sphere_dim}")
        return z
    if not isinstance(point, BoundaryPoint) or point.model != spec.source:
        raise SourceMismatch(f"{spec.kind} expects a point of {spec.source.label}")
    Z = point.ambient
    if spec.kind in ("BlockEmbedI", "BlockEmbedII"):
        s = np.linalg.svd(Z, compute_uv=False)
        top = 1 if spec.kind == "BlockEmbedI" else 2
        if s.size > top and s[top] > policy.abs_residual_tol:
            raise SourceMismatch(f"{spec.kind} expects a rank-{top} point of norm one")
    return Z


def sample_source_point(spec: MapSpec, seed: int, leaf_radius: float = 0.5):
    """Seeded point of the source manifold of ``spec``."""
    if spec.kind == "SphereEmbedIII":
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(spec.sphere_dim) + 1j * rng.standard_normal(spec.sphere_dim)
        return z / np.linalg.norm(z)
    if spec.kind in ("BlockEmbedI", "BlockEmbedII"):
        return sample_boundary_point(spec.source, seed, 0.0)
    return sample_boundary_point(spec.source, seed, leaf_radius)


def _flat_source(spec: MapSpec, Z: np.ndarray) -> np.ndarray:
    return Z if spec.kind == "SphereEmbedIII" else spec.source.to_coords(Z)


# ---------------------------------------------------------------- evaluation


def _evaluate(spec: MapSpec, Z: np.ndarray, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    p = spec.parameters
    kind = spec.kind
    if kind == "UnitaryI":
        return p["U"] @ Z @ p["V"].conj().T
    if kind in ("UnitaryII", "UnitaryIII"):
        return p["U"] @ Z @ p["U"].T
    if kind == "UnitaryIV":
        return p["lam"] * (p["O"] @ Z)
    if kind == "CayleyTubeToIV":
        e = np.zeros_like(Z)
        e[-1] = 1.0
        d = _F(Z + e)
        if abs(d) < policy.abs_residual_tol:
            raise CayleySingular("F(z + e) vanishes")
        return np.r_[2j * Z[:-1], _F(Z) - 1] / d
    if kind == "Constant":
        return np.array(p["value"])
    phi = spec.phi(_flat_source(spec, Z))
    if kind == "BlockEmbedI":
        m, n = spec.target.m, spec.target.n
        out = np.zeros((m, n), dtype=complex)
        out[: m - 1, : n - 1] = Z
        out[m - 1, n - 1] = phi
        return out
    if kind == "BlockEmbedII":
        m = spec.target.m
        out = np.zeros((m, m), dtype=complex)
        out[: m - 2, : m - 2] = Z
        out[m - 2, m - 1] = -phi
        out[m - 1, m - 2] = phi
        return out
    zp, zm = np.r_[Z, 1.0], np.r_[Z, -1.0]
    return 0.5 * np.outer(zp, zp) + 0.5 * phi * np.outer(zm, zm)


def _differential(spec: MapSpec, Z: np.ndarray, Y: np.ndarray, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Complex differential of the (holomorphic) map at ``Z`` applied to ``Y`` (ambient arrays)."""
    p = spec.parameters
    kind = spec.kind
    if kind in ("UnitaryI", "UnitaryII", "UnitaryIII", "UnitaryIV"):
        return _evaluate(spec, Y)
    if kind == "CayleyTubeToIV":
        return d_derivative(lambda t: _evaluate(spec, Z + t * Y, policy), 0.0, policy)
    if kind == "Constant":
        return np.zeros_like(np.asarray(p["value"]))
    dphi = spec.phi.grad(_flat_source(spec, Z)) @ _flat_source(spec, Y)
    phi = spec.phi(_flat_source(spec, Z))
    if kind == "BlockEmbedI":
        m, n = spec.target.m, spec.target.n
        out = np.zeros((m, n), dtype=complex)
        out[: m - 1, : n - 1] = Y
        out[m - 1, n - 1] = dphi
        return out
    if kind == "BlockEmbedII":
        m = spec.target.m
        out = np.zeros((m, m), dtype=complex)
        out[: m - 2, : m - 2] = Y
        out[m - 2, m - 1] = -dphi
        out[m - 1, m - 2] = dphi
        return out
    zp, zm, y = np.r_[Z, 1.0], np.r_[Z, -1.0], np.r_[Y, 0.0]
    return 0.5 * (np.outer(y, zp) + np.outer(zp, y)) + 0.5 * phi * (np.outer(y, zm) + np.outer(zm, y)) + 0.5 * dphi * np.outer(zm, zm)


def _target_provenance(spec: MapSpec, point, W: np.ndarray) -> dict:
    p = spec.parameters
    prov = dict(point.provenance) if isinstance(point, BoundaryPoint) else {}
    kind = spec.kind
    if kind == "UnitaryI" and {"u", "v", "B"} <= prov.keys():
        U, V = p["U"], p["V"]
        return {"u": U @ prov["u"], "v": V @ prov["v"], "B": U @ prov["B"] @ V.conj().T}
    if kind == "UnitaryII" and {"u", "v", "B"} <= prov.keys():
        U = p["U"]
        return {"u": U @ prov["u"], "v": U @ prov["v"], "B": U @ prov["B"] @ U.T}
    if kind == "UnitaryIII" and {"w", "B"} <= prov.keys():
        U = p["U"]
        return {"w": U @ prov["w"], "B": U @ prov["B"] @ U.T}
    if kind == "UnitaryIV" and {"w", "t"} <= prov.keys():
        lam = p["lam"]
        return {"w": lam * (p["O"] @ prov["w"]), "t": complex(lam**2 * prov["t"])}
    m = spec.target.m
    if kind in ("BlockEmbedI", "BlockEmbedII") and {"u", "v"} <= prov.keys():
        pad = spec.target.shape[0] - prov["u"].size
        u, v = np.r_[prov["u"], np.zeros(pad)], np.r_[prov["v"], np.zeros(pad)]
        base = np.outer(u, v.conj()) if kind == "BlockEmbedI" else np.outer(u, v) - np.outer(v, u)
        return {"u": u, "v": v, "B": W - base}
    if kind == "SphereEmbedIII":
        w = np.r_[point, 1.0] / np.sqrt(2)
        return {"w": w, "B": W - np.outer(w, w)}
    return {}


def apply_map(spec: MapSpec, point, policy: TolerancePolicy = DEFAULT_POLICY) -> BoundaryPoint:
    Z = _source_array(spec, point, policy)
    if spec.phi is not None and abs(spec.phi(_flat_source(spec, Z))) >= 1:
        raise PhiOutOfRange("|phi| must stay below 1")
    W = _evaluate(spec, Z, policy)
    if spec.target.kind == "II":
        W = (W - W.T) / 2
    elif spec.target.kind == "III":
        W = (W + W.T) / 2
    return boundary_point(spec.target, W, _target_provenance(spec, point, W), policy)


def pushforward_cr(spec: MapSpec, point, tangent, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Image of a (1,0) tangent vector (flat source coordinates) in flat target coordinates."""
    Z = _source_array(spec, point, policy)
    tangent = np.asarray(tangent, dtype=complex)
    Y = tangent if spec.kind == "SphereEmbedIII" else spec.source.from_coords(tangent)
    return spec.target.to_coords(_differential(spec, Z, Y, policy))


def jacobian(spec: MapSpec, point, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Complex Jacobian in flat coordinates (target N' x source dim)."""
    Z = _source_array(spec, point, policy)
    n = spec.source_dim
    cols = []
    for k in range(n):
        e = np.zeros(n, dtype=complex)
        e[k] = 1.0
        Y = e if spec.kind == "SphereEmbedIII" else spec.source.from_coords(e)
        cols.append(spec.target.to_coords(_differential(spec, Z, Y, policy)))
    return np.column_stack(cols)


# ---------------------------------------------------------------- transversality


def _real_null_vectors(g: np.ndarray) -> list[np.ndarray]:
    """Complex vectors Y spanning (over R) ``{Y : Re(g . Y) = 0}``."""
    row = np.r_[g.real, -g.imag][None, :]
    null = np.linalg.svd(row, full_matrices=True)[2][1:]
    n = g.size
    return [v[:n] + 1j * v[n:] for v in null]


def source_real_tangent(spec: MapSpec, point, policy: TolerancePolicy = DEFAULT_POLICY) -> list[np.ndarray]:
    """Real basis of the source tangent space, as ambient source arrays."""
    if spec.kind == "SphereEmbedIII":
        z = _source_array(spec, point, policy)
        C = np.linalg.svd(z.conj()[None, :], full_matrices=True)[2][1:].conj()
        vecs = [c for c in C] + [1j * c for c in C] + [1j * z]
        return vecs
    if spec.kind in ("BlockEmbedI", "BlockEmbedII"):
        frame = leaf_frame(point, policy)
        S = frame.slice_basis
        flat = [S[:, j] for j in range(S.shape[1])]
        flat += [1j * s for s in flat] + [1j * point.coords]
        return [spec.source.from_coords(v) for v in flat]
    g = complex_gradient(spec.source, point.ambient)
    return [spec.source.from_coords(v) for v in _real_null_vectors(g)]


def _realify(vectors: list[np.ndarray]) -> np.ndarray:
    return np.column_stack([np.r_[v.real, v.imag] for v in vectors])


def cr_transversality_check(spec: MapSpec, point, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    """Does ``T^c M' + h_* TM`` fill the real tangent space of the target at the image?"""
    image = apply_map(spec, point, policy)
    Z = _source_array(spec, point, policy)
    V = tangent_frame(image, policy).vectors
    cols = [V[:, j] for j in range(V.shape[1])] + [1j * V[:, j] for j in range(V.shape[1])]
    cols += [spec.target.to_coords(_differential(spec, Z, Y, policy)) for Y in source_real_tangent(spec, point, policy)]
    rank, _ = rank_with_tol(_realify(cols), policy)
    return rank == 2 * spec.target.ambient_dim - 1


def nu_invariance_probe(spec: MapSpec, point: BoundaryPoint, config: NuConfig | None = None, policy: TolerancePolicy = DEFAULT_POLICY) -> tuple[int, int]:
    """nu at a point and at its image under a unitary automorphism, both by search."""
    if not spec.kind.startswith("Unitary"):
        raise ValueError("the invariance probe takes unitary automorphisms only")
    cfg = config or NuConfig()
    image = apply_map(spec, point, policy)
    return (
        nu_estimate(point, cfg, policy, method="search").nu,
        nu_estimate(image, cfg, policy, method="search").nu,
    )
