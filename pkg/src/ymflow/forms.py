"""Algebra-valued cochains on the cube complex.

A degree-p cochain stores one algebra coefficient vector per p-cell, in the
flat layout of :mod:`ymflow.mesh`.  Values are *component* values (the
coboundary carries the 1/h), and every degree uses the same quadrature weight
h^3 per cell, so adjoints are plain transposes.

Minimal and maximal operators are realised by one coboundary plus boundary
projectors: the minimal d has domain Tan0 (tangential part zero), the maximal
d has no constraint, and their adjoints are ``codiff(., DIRICHLET)`` and
``codiff(., NONE)``.
"""
from __future__ import annotations

import enum
import itertools

import numpy as np
import scipy.sparse as sp

from . import algebra
from .errors import DomainViolation, InvalidDegree, InvalidOperands
from .mesh import CubeMesh, direction_sets, incidence


class BcKind(str, enum.Enum):
    DIRICHLET = "DirichletTan0"
    NEUMANN = "NeumannNorm0"
    NONE = "None"


def as_bc(bc) -> BcKind:
    if isinstance(bc, BcKind):
        return bc
    if bc is None:
        return BcKind.NONE
    key = str(bc).lower()
    for b, names in (
        (BcKind.DIRICHLET, ("dirichlet", "dirichlettan0", "tan0", "d")),
        (BcKind.NEUMANN, ("neumann", "neumannnorm0", "norm0", "n")),
        (BcKind.NONE, ("none", "marini", "m", "")),
    ):
        if key in names:
            return b
    raise InvalidOperands(f"unknown boundary condition {bc!r}")


class Cochain:
    """A k-valued p-cochain.  ``values`` has shape (N_p, dim k)."""

    __slots__ = ("p", "mesh", "values")

    def __init__(self, p: int, mesh: CubeMesh, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != mesh.count(p):
            raise InvalidOperands(
                f"degree-{p} cochain needs {mesh.count(p)} rows, got shape {values.shape}"
            )
        algebra.kind_of(values)
        self.p = p
        self.mesh = mesh
        self.values = values

    @classmethod
    def zeros(cls, mesh, p, kind):
        return cls(p, mesh, np.zeros((mesh.count(p), algebra.get_kind(kind).dim)))

    @property
    def kind(self):
        return algebra.kind_of(self.values)

    def copy(self):
        return Cochain(self.p, self.mesh, self.values.copy())

    def like(self, values):
        return Cochain(self.p, self.mesh, values)

    def block(self, S):
        return self.values[self.mesh.block_slice(self.p, S)]

    def _check(self, other):
        if not isinstance(other, Cochain):
            raise InvalidOperands("expected a Cochain")
        if other.p != self.p or other.mesh is not self.mesh and other.mesh != self.mesh:
            raise InvalidOperands("degree or mesh mismatch")
        if other.values.shape[1] != self.values.shape[1]:
            raise InvalidOperands("group kind mismatch")

    def __add__(self, other):
        self._check(other)
        return self.like(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self.like(self.values - other.values)

    def __neg__(self):
        return self.like(-self.values)

    def __mul__(self, c):
        return self.like(self.values * float(c))

    __rmul__ = __mul__

    def __repr__(self):
        return f"Cochain(p={self.p}, n={self.mesh.n}, kind={self.kind.tag})"


# ---------------------------------------------------------------------------
# cached sparse structure


def coboundary_matrix(mesh: CubeMesh, p: int) -> sp.csr_matrix:
    key = ("d", p)
    if key not in mesh._cache:
        mesh._cache[key] = (incidence(mesh, p) / mesh.h).tocsr()
    return mesh._cache[key]


def _transpose(mesh, name, mat):
    key = (name, "T")
    if key not in mesh._cache:
        mesh._cache[key] = mat.T.tocsr()
    return mesh._cache[key]


def corner_matrix(mesh: CubeMesh, p: int, S) -> sp.csr_matrix:
    """0/1 matrix (N_S x N_v): cell -> its 2^p corner vertices."""
    key = ("corners", p, tuple(S))
    if key not in mesh._cache:
        b = direction_sets(p).index(tuple(S))
        anc = mesh.anchors(p)[b]
        rows, cols = [], []
        for sub in itertools.product((0, 1), repeat=len(S)):
            idx = anc.copy()
            for a, s in zip(S, sub):
                idx[:, a] += s
            rows.append(np.arange(len(anc)))
            cols.append(mesh.vertex_index(idx[:, 0], idx[:, 1], idx[:, 2]))
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        mesh._cache[key] = sp.csr_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(len(anc), mesh.nv)
        )
    return mesh._cache[key]


def collocation_matrix(mesh: CubeMesh, p: int, S) -> sp.csr_matrix:
    """(N_v x N_S): each vertex averages the adjacent S-cells."""
    key = ("colloc", p, tuple(S))
    if key not in mesh._cache:
        K = corner_matrix(mesh, p, S).T.tocsr()
        cnt = np.asarray(K.sum(axis=1)).ravel()
        mesh._cache[key] = (sp.diags(1.0 / cnt) @ K).tocsr()
    return mesh._cache[key]


def averaging_matrix(mesh: CubeMesh, p: int, S) -> sp.csr_matrix:
    """(N_S x N_v): each S-cell averages its 2^p corners."""
    key = ("avg", p, tuple(S))
    if key not in mesh._cache:
        mesh._cache[key] = (corner_matrix(mesh, p, S) / 2 ** p).tocsr()
    return mesh._cache[key]


def _keep_mask(mesh, p, bc: BcKind):
    tan, nor = mesh.boundary_masks(p)
    if bc is BcKind.DIRICHLET:
        return ~tan
    if bc is BcKind.NEUMANN:
        return ~nor
    return np.ones(mesh.count(p), dtype=bool)


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def wedge_pairs(p: int, q: int):
    """[(R_index, S_index, T_index, sign)] for the degree (p, q) wedge."""
    dp, dq, dr = direction_sets(p), direction_sets(q), direction_sets(p + q)
    out = []
    for iS, S in enumerate(dp):
        for iT, T in enumerate(dq):
            if set(S) & set(T):
                continue
            R = tuple(sorted(S + T))
            out.append((dr.index(R), iS, iT, _perm_sign(S + T)))
    return out


# ---------------------------------------------------------------------------
# operations


def d(w: Cochain) -> Cochain:
    if w.p > 2:
        raise InvalidDegree("d is undefined on 3-forms")
    return Cochain(w.p + 1, w.mesh, coboundary_matrix(w.mesh, w.p) @ w.values)


def project_bc(w: Cochain, bc) -> Cochain:
    bc = as_bc(bc)
    if bc is BcKind.NONE:
        return w
    keep = _keep_mask(w.mesh, w.p, bc)
    return w.like(np.where(keep[:, None], w.values, 0.0))


def in_subspace(w: Cochain, bc, tol: float = 0.0) -> bool:
    bc = as_bc(bc)
    if bc is BcKind.NONE:
        return True
    keep = _keep_mask(w.mesh, w.p, bc)
    off = w.values[~keep]
    return off.size == 0 or float(np.abs(off).max()) <= tol


def require_subspace(w: Cochain, bc, what="field"):
    if not in_subspace(w, bc):
        raise DomainViolation(f"{what} has nonzero components outside the {as_bc(bc).value} subspace")


def codiff(w: Cochain, bc_of_adjoint_domain=BcKind.NONE) -> Cochain:
    """Adjoint of d o project_bc(., bc) : degree p -> p-1."""
    if w.p == 0:
        raise InvalidDegree("codifferential is undefined on 0-forms")
    D = coboundary_matrix(w.mesh, w.p - 1)
    out = Cochain(w.p - 1, w.mesh, _transpose(w.mesh, ("d", w.p - 1), D) @ w.values)
    return project_bc(out, bc_of_adjoint_domain)


def inner_product(a: Cochain, b: Cochain) -> float:
    a._check(b)
    return float(a.mesh.h ** 3 * np.sum(a.values * b.values))


def norm(a: Cochain) -> float:
    return float(np.sqrt(inner_product(a, a)))


def collocate(w: Cochain) -> np.ndarray:
    """Vertex field of shape (N_v, n_dirs, dim k)."""
    mesh = w.mesh
    cols = []
    for S in direction_sets(w.p):
        blk = w.block(S)
        cols.append(blk if w.p == 0 else collocation_matrix(mesh, w.p, S) @ blk)
    return np.stack(cols, axis=1)


def fiber_norm(w: Cochain) -> np.ndarray:
    """Pointwise |w(x)| at vertices (Lambda^p (x) k norm)."""
    c = collocate(w)
    return np.sqrt(np.sum(c * c, axis=(1, 2)))


def lp_from_vertex(f: np.ndarray, h: float, p) -> float:
    if p == np.inf or p == "inf":
        return float(np.max(f)) if f.size else 0.0
    p = float(p)
    return float((h ** 3 * np.sum(f ** p)) ** (1.0 / p))


def lp_norm(w: Cochain, p) -> float:
    return lp_from_vertex(fiber_norm(w), w.mesh.h, p)


def wedge_bracket(u: Cochain, v: Cochain) -> Cochain:
    """[u ^ v] by vertex collocation, pointwise bracket-wedge, and averaging back."""
    if u.p + v.p > 3:
        raise InvalidDegree("wedge degree exceeds 3")
    if u.mesh != v.mesh:
        raise InvalidOperands("mesh mismatch")
    kind = algebra._same_kind(u.values, v.values)
    mesh = u.mesh
    r = u.p + v.p
    out = np.zeros((mesh.count(r), kind.dim))
    if kind is algebra.U1:
        return Cochain(r, mesh, out)
    U, V = collocate(u), collocate(v)
    acc = {}
    for iR, iS, iT, sign in wedge_pairs(u.p, v.p):
        term = algebra.bracket(U[:, iS], V[:, iT])
        acc[iR] = acc[iR] + sign * term if iR in acc else sign * term
    for iR, R in enumerate(direction_sets(r)):
        if iR in acc:
            out[mesh.block_slice(r, R)] = averaging_matrix(mesh, r, R) @ acc[iR]
    return Cochain(r, mesh, out)


def interior_bracket(A: Cochain, v: Cochain) -> Cochain:
    """[A -| v]: the exact adjoint of w -> wedge_bracket(A, w)."""
    if A.p != 1:
        raise InvalidDegree("interior_bracket expects a 1-form first argument")
    if v.p < 1:
        raise InvalidDegree("interior_bracket needs a form of degree >= 1")
    kind = algebra._same_kind(A.values, v.values)
    mesh = v.mesh
    r = v.p - 1
    out = np.zeros((mesh.count(r), kind.dim))
    if kind is algebra.U1:
        return Cochain(r, mesh, out)
    Acol = collocate(A)
    Z = [
        _transpose(mesh, ("avg", v.p, R), averaging_matrix(mesh, v.p, R)) @ v.block(R)
        for R in direction_sets(v.p)
    ]
    acc = {}
    for iR, iS, iT, sign in wedge_pairs(1, r):
        term = -sign * algebra.bracket(Acol[:, iS], Z[iR])
        acc[iT] = acc[iT] + term if iT in acc else term
    for iT, T in enumerate(direction_sets(r)):
        if iT not in acc:
            continue
        if r == 0:
            out[:] = acc[iT]
        else:
            C = collocation_matrix(mesh, r, T)
            out[mesh.block_slice(r, T)] = _transpose(mesh, ("colloc", r, T), C) @ acc[iT]
    return Cochain(r, mesh, out)


def vertex_grid(field: np.ndarray, mesh: CubeMesh) -> np.ndarray:
    """Reshape a (N_v, ...) vertex array to (k, j, i, ...)."""
    m = mesh.n + 1
    return field.reshape((m, m, m) + field.shape[1:])


def covariant_grad(A: Cochain, w: Cochain) -> np.ndarray:
    """(nabla^A)_j w at vertices for j = x, y, z; shape (3, N_v, n_dirs, dim k).

    Central differences of the collocated field inside, second-order one-sided
    differences on boundary vertices, plus [A_j, w] with collocated A_j.
    """
    mesh = w.mesh
    W = collocate(w)
    grid = vertex_grid(W, mesh)
    out = np.empty((3,) + W.shape)
    Acol = collocate(A) if A is not None else None
    for j in range(3):
        gj = np.gradient(grid, mesh.h, axis=2 - j, edge_order=2)
        gj = gj.reshape(W.shape)
        if Acol is not None and w.kind is algebra.SU2:
            gj = gj + algebra.bracket(Acol[:, j][:, None, :], W)
        out[j] = gj
    return out


def grad_norm_sq(A: Cochain, w: Cochain) -> float:
    g = covariant_grad(A, w)
    return float(w.mesh.h ** 3 * np.sum(g * g))
