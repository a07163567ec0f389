"""Hodge Laplacians with absolute (Neumann) and relative (Dirichlet) boundary conditions.

Delta_N = -(D^*D + DD^*) on the Norm0 subspace, with D the maximal d;
Delta_D = -(d^*d + dd^*) on the Tan0 subspace, with d the minimal d.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import InvalidDegree, SizeLimitExceeded
from .forms import (
    BcKind,
    Cochain,
    _keep_mask,
    codiff,
    coboundary_matrix,
    d,
    inner_product,
    project_bc,
)
from .mesh import CubeMesh

DENSE_ENTRY_LIMIT = 4_000_000
DENSE_MAX_N = 8


class LaplacianKind(str, enum.Enum):
    NEUMANN = "NeumannAbsolute"
    DIRICHLET = "DirichletRelative"

    @property
    def bc(self) -> BcKind:
        return BcKind.NEUMANN if self is LaplacianKind.NEUMANN else BcKind.DIRICHLET


def as_kind(kind) -> LaplacianKind:
    if isinstance(kind, LaplacianKind):
        return kind
    s = str(getattr(kind, "value", kind)).lower()
    if s.startswith("n"):
        return LaplacianKind.NEUMANN
    if s.startswith("d"):
        return LaplacianKind.DIRICHLET
    raise ValueError(f"unknown Laplacian kind {kind!r}")


def _pair(kind: LaplacianKind):
    """(d-domain projector, codiff domain tag) for the kind's operator pair."""
    return (BcKind.DIRICHLET, BcKind.DIRICHLET) if kind is LaplacianKind.DIRICHLET else (
        BcKind.NONE,
        BcKind.NONE,
    )


def ext_d(w: Cochain, kind) -> Cochain:
    """The kind's exterior derivative (minimal for Dirichlet, maximal for Neumann)."""
    dom, _ = _pair(as_kind(kind))
    return d(project_bc(w, dom))


def ext_codiff(w: Cochain, kind) -> Cochain:
    """Adjoint of :func:`ext_d` (one degree lower)."""
    _, dom = _pair(as_kind(kind))
    return codiff(w, dom)


@dataclass(frozen=True)
class LinearOperator:
    mesh: CubeMesh
    p: int
    kind: LaplacianKind

    def apply(self, w: Cochain) -> Cochain:
        bc = self.kind.bc
        w = project_bc(w, bc)
        out = -ext_codiff(ext_d(w, self.kind), self.kind) if w.p < 3 else w.like(0 * w.values)
        if w.p > 0:
            out = out - ext_d(ext_codiff(w, self.kind), self.kind)
        return project_bc(out, bc)

    __call__ = apply

    def sparse(self) -> sp.csr_matrix:
        """Scalar (per algebra component) matrix of the operator."""
        mesh, p = self.mesh, self.p
        P = sp.diags(_keep_mask(mesh, p, self.kind.bc).astype(float))
        dir_ = self.kind is LaplacianKind.DIRICHLET
        M = sp.csr_matrix((mesh.count(p), mesh.count(p)))
        if p < 3:
            D = coboundary_matrix(mesh, p)
            M = M + D.T @ D
        if p > 0:
            D = coboundary_matrix(mesh, p - 1)
            if dir_:
                Q = sp.diags(_keep_mask(mesh, p - 1, BcKind.DIRICHLET).astype(float))
                M = M + D @ Q @ D.T
            else:
                M = M + D @ D.T
        return (-(P @ M @ P)).tocsr()

    def dense(self) -> np.ndarray:
        N = self.mesh.count(self.p)
        if N * N > DENSE_ENTRY_LIMIT:
            raise SizeLimitExceeded(f"dense assembly of {N}x{N} exceeds {DENSE_ENTRY_LIMIT} entries")
        return self.sparse().toarray()

    def subspace_mask(self) -> np.ndarray:
        return _keep_mask(self.mesh, self.p, self.kind.bc)


def laplacian(mesh: CubeMesh, kind, p: int) -> LinearOperator:
    if p not in (0, 1, 2):
        raise InvalidDegree(f"laplacian defined for p in 0..2, got {p}")
    return LinearOperator(mesh, p, as_kind(kind))


def quadratic_form(w: Cochain, kind) -> float:
    """Q(w) = ||d w||^2 + ||d^* w||^2 + ||w||^2 with the kind's operator pair."""
    kind = as_kind(kind)
    w = project_bc(w, kind.bc)
    q = inner_product(w, w)
    if w.p < 3:
        dw = ext_d(w, kind)
        q += inner_product(dw, dw)
    if w.p > 0:
        sw = ext_codiff(w, kind)
        q += inner_product(sw, sw)
    return q


def h1_norm(w: Cochain, kind) -> float:
    return float(np.sqrt(quadratic_form(w, kind)))


def dense_propagator(op: LinearOperator, t: float) -> np.ndarray:
    """exp(t Delta) by scaling-and-squaring (scipy expm); oracle use only.

    The matrix acts on the kind's subspace; rows/columns outside it are zero
    in Delta, so the exponential is the identity there.  Callers restrict to
    the subspace themselves.
    """
    if op.mesh.n > DENSE_MAX_N:
        raise SizeLimitExceeded(f"dense propagator limited to n <= {DENSE_MAX_N}")
    return scipy.linalg.expm(t * op.dense())


def apply_dense(mat: np.ndarray, w: Cochain) -> Cochain:
    return w.like(mat @ w.values)
