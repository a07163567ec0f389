"""Connections, curvature, covariant exterior calculus and gauge transformations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra
from .errors import DomainViolation, InvalidOperands
from .forms import (
    BcKind,
    Cochain,
    as_bc,
    codiff,
    d,
    in_subspace,
    interior_bracket,
    project_bc,
    wedge_bracket,
)
from .mesh import FACES, CubeMesh, direction_sets

MINIMAL = "minimal"
MAXIMAL = "maximal"
ADJ_OF_MINIMAL = "maximal_adjoint_of_minimal"
ADJ_OF_MAXIMAL = "minimal_adjoint_of_maximal"


def variant_for_bc(bc) -> str:
    """d-variant whose domain encodes the boundary condition (Dirichlet -> minimal)."""
    return MINIMAL if as_bc(bc) is BcKind.DIRICHLET else MAXIMAL


def adjoint_variant(variant: str) -> str:
    return ADJ_OF_MINIMAL if variant == MINIMAL else ADJ_OF_MAXIMAL


class GaugeField:
    """Group element per vertex, stored as complex matrices of shape (N_v, m, m)."""

    __slots__ = ("mesh", "g")

    def __init__(self, mesh: CubeMesh, g):
        g = np.asarray(g, dtype=complex)
        if g.shape[0] != mesh.nv or g.ndim != 3:
            raise InvalidOperands(f"gauge field needs shape ({mesh.nv}, m, m), got {g.shape}")
        self.mesh = mesh
        self.g = g

    @classmethod
    def identity(cls, mesh, kind):
        return cls(mesh, algebra.identity(kind, (mesh.nv,)))

    @classmethod
    def constant(cls, mesh, g0):
        g0 = np.asarray(g0, dtype=complex)
        return cls(mesh, np.broadcast_to(g0, (mesh.nv,) + g0.shape).copy())

    @property
    def kind(self):
        return algebra.kind_of_group(self.g)

    def inverse(self):
        return GaugeField(self.mesh, algebra.inverse(self.g))

    def __matmul__(self, other):
        return GaugeField(self.mesh, self.g @ other.g)

    def unitarity_defect(self) -> float:
        return algebra.unitarity_defect(self.g)


def edge_endpoints(mesh: CubeMesh) -> tuple[np.ndarray, np.ndarray]:
    """(tail, head) vertex indices of every edge in flat order."""
    key = ("edge_endpoints",)
    if key not in mesh._cache:
        tails, heads = [], []
        for (a,), anc in zip(direction_sets(1), mesh.anchors(1)):
            tails.append(mesh.vertex_index(anc[:, 0], anc[:, 1], anc[:, 2]))
            hd = anc.copy()
            hd[:, a] += 1
            heads.append(mesh.vertex_index(hd[:, 0], hd[:, 1], hd[:, 2]))
        mesh._cache[key] = (np.concatenate(tails), np.concatenate(heads))
    return mesh._cache[key]


def curvature(A: Cochain) -> Cochain:
    """B = dA + 1/2 [A ^ A]."""
    return d(A) + 0.5 * wedge_bracket(A, A)


def cov_d(A: Cochain, w: Cochain, variant: str = MAXIMAL) -> Cochain:
    """d_A w = dw + [A ^ w]; the minimal variant only accepts Tan0 fields."""
    if variant not in (MINIMAL, MAXIMAL):
        raise InvalidOperands(f"unknown variant {variant!r}")
    if variant == MINIMAL and not in_subspace(w, BcKind.DIRICHLET):
        raise DomainViolation("minimal d_A applied to a form with nonzero tangential part")
    return d(w) + wedge_bracket(A, w)


def cov_codiff(A: Cochain, w: Cochain, variant: str = ADJ_OF_MAXIMAL) -> Cochain:
    """Exact adjoint of the matching cov_d variant: d^* w + [A -| w], projected for Dirichlet."""
    if variant in (MINIMAL, MAXIMAL):
        variant = adjoint_variant(variant)
    if variant == ADJ_OF_MINIMAL:
        return project_bc(codiff(w, BcKind.NONE) + interior_bracket(A, w), BcKind.DIRICHLET)
    if variant == ADJ_OF_MAXIMAL:
        return codiff(w, BcKind.NONE) + interior_bracket(A, w)
    raise InvalidOperands(f"unknown variant {variant!r}")


def _edge_logs(g: GaugeField) -> tuple[np.ndarray, np.ndarray]:
    tail, head = edge_endpoints(g.mesh)
    gt = g.g[tail]
    ratio = algebra.inverse(gt) @ g.g[head]
    return gt, algebra.log_group(ratio)


def pure_gauge(g: GaugeField) -> Cochain:
    """A(e) = h^{-1} log(g(x)^{-1} g(y)) on every edge e = (x -> y)."""
    _, ell = _edge_logs(g)
    return Cochain(1, g.mesh, ell / g.mesh.h)


def gauge_transform(A: Cochain, g: GaugeField) -> Cochain:
    """A^g = g^{-1} A g + g^{-1} dg on edges.

    The Ad part uses the group geodesic midpoint m = g(x) exp(l/2) of the edge
    endpoints, where l = log(g(x)^{-1} g(y)); m does not depend on the edge
    orientation and the rule is exactly inverted by g^{-1}.
    """
    if A.p != 1:
        raise InvalidOperands("gauge_transform acts on 1-forms")
    gt, ell = _edge_logs(g)
    out = ell / A.mesh.h
    if A.kind is algebra.SU2:
        mid = gt @ algebra.exp_alg(0.5 * ell)
        out = out + algebra.ad_apply(algebra.inverse(mid), A.values)
    else:
        out = out + A.values
    return Cochain(1, A.mesh, out)


def transform_form(w: Cochain, g: GaugeField) -> Cochain:
    """Pointwise Ad(g^{-1}) on a (covariant) p-form, using the cell-averaged adjoint matrix."""
    if w.kind is algebra.U1:
        return w.copy()
    from .forms import averaging_matrix

    Rinv = algebra.adjoint_matrix(algebra.inverse(g.g)).reshape(g.mesh.nv, -1)
    out = np.empty_like(w.values)
    for S in direction_sets(w.p):
        sl = w.mesh.block_slice(w.p, S)
        if w.p == 0:
            R = Rinv
        else:
            R = averaging_matrix(w.mesh, w.p, S) @ Rinv
        dim = w.values.shape[1]
        out[sl] = np.einsum("nab,nb->na", R.reshape(-1, dim, dim), w.values[sl])
    return w.like(out)


@dataclass
class NormalGaugeReport:
    face_interior_max: float
    conflict_max: float
    n_face_interior: int
    n_conflict: int


def _first_layer(mesh: CubeMesh):
    """Perpendicular first-layer edges, face by face in fixed order.

    Yields (face, edge_indices, inner_vertex_indices, inward_sign).
    """
    n = mesh.n
    depth = mesh.vertex_depth
    tail, head = edge_endpoints(mesh)
    va = mesh.anchors(0)[0]
    for f in FACES:
        a = "xyz".index(f[0])
        plus = f[1] == "+"
        sl = mesh.block_slice(1, (a,))
        anc = mesh.anchors(1)[a]
        sel = anc[:, a] == (n - 1 if plus else 0)
        edges = sl.start + np.nonzero(sel)[0]
        inner = tail[edges] if plus else head[edges]
        ok = depth[inner] == 1
        ok &= va[inner, a] == (n - 1 if plus else 1)
        yield f, edges[ok], inner[ok], (-1.0 if plus else 1.0)


def normal_gauge_edges(mesh: CubeMesh):
    """Partition of normal edges into face-interior-zeroed edges and the rest."""
    key = ("normal_gauge_edges",)
    if key not in mesh._cache:
        _, nor = mesh.boundary_masks(1)
        owner = {}
        hits = np.zeros(mesh.nv, dtype=int)
        for f, edges, inner, sign in _first_layer(mesh):
            hits[inner] += 1
            for e, v in zip(edges, inner):
                owner.setdefault(v, (e, sign))
        clean = []
        for v, (e, _) in owner.items():
            if hits[v] == 1:
                clean.append(e)
        clean = np.array(sorted(clean), dtype=int)
        all_normal = np.nonzero(nor)[0]
        rest = np.setdiff1d(all_normal, clean)
        mesh._cache[key] = (owner, clean, rest)
    return mesh._cache[key]


def normal_gauge(A: Cochain) -> tuple[GaugeField, Cochain]:
    """Gauge that kills the normal component on the first collar layer.

    g is the identity on the boundary and at depth >= 2.  A depth-1 vertex
    gets g = exp(-h A(e_in)) from its inward perpendicular edge; where several
    faces reach the same vertex, the first face in x-, x+, y-, y+, z-, z+
    order wins and only that edge is zeroed exactly.
    """
    mesh = A.mesh
    owner, _, _ = normal_gauge_edges(mesh)
    g = algebra.identity(A.kind, (mesh.nv,))
    if owner:
        verts = np.fromiter(owner.keys(), dtype=int)
        edges = np.array([owner[v][0] for v in verts], dtype=int)
        signs = np.array([owner[v][1] for v in verts])
        a_in = A.values[edges] * signs[:, None]
        g[verts] = algebra.exp_alg(-mesh.h * a_in)
    gf = GaugeField(mesh, g)
    return gf, gauge_transform(A, gf)


def normal_gauge_report(A_g: Cochain) -> NormalGaugeReport:
    _, clean, rest = normal_gauge_edges(A_g.mesh)
    mag = np.linalg.norm(A_g.values, axis=1)
    return NormalGaugeReport(
        face_interior_max=float(mag[clean].max()) if clean.size else 0.0,
        conflict_max=float(mag[rest].max()) if rest.size else 0.0,
        n_face_interior=int(clean.size),
        n_conflict=int(rest.size),
    )
