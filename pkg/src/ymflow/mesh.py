"""Cell complex of the cube [0, L]^3.

Cells of degree p are indexed by a direction set (sorted tuple of axes, 0=x,
1=y, 2=z) and an anchor vertex (i, j, k).  A cell with direction set S spans
[idx_a, idx_a + 1] along every axis a in S and sits at idx_a along the others.

Flat layout of a degree-p cochain: the direction sets in lexicographic order
(x < y < z), each block stored k-j-i row-major (i fastest).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import InvalidCell, InvalidDegree, InvalidParameter

AXES = "xyz"
FACES = ("x-", "x+", "y-", "y+", "z-", "z+")


def direction_sets(p: int) -> list[tuple[int, ...]]:
    if p not in (0, 1, 2, 3):
        raise InvalidDegree(f"degree must be 0..3, got {p}")
    return list(itertools.combinations(range(3), p))


def dir_name(S) -> str:
    return "".join(AXES[a] for a in S) or "0"


@dataclass(frozen=True)
class CellId:
    degree: int
    dirs: tuple
    index: tuple


@dataclass(frozen=True)
class BoundaryClass:
    """Per-face classification of a cell.  Empty sets mean an interior cell."""

    tangential: frozenset = frozenset()
    normal: frozenset = frozenset()

    @property
    def interior(self) -> bool:
        return not self.tangential and not self.normal

    @property
    def kind(self) -> str:
        if self.interior:
            return "interior"
        parts = []
        if self.tangential:
            parts.append("tangential@{" + ",".join(sorted(self.tangential, key=FACES.index)) + "}")
        if self.normal:
            parts.append("normal@{" + ",".join(sorted(self.normal, key=FACES.index)) + "}")
        return " ".join(parts)


@dataclass(frozen=True)
class CubeMesh:
    n: int
    L: float = 1.0
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def nv(self) -> int:
        return (self.n + 1) ** 3

    def block_shape(self, S) -> tuple[int, int, int]:
        """Anchor counts (Ni, Nj, Nk) for direction set S."""
        return tuple(self.n if a in S else self.n + 1 for a in range(3))

    def block_size(self, S) -> int:
        return int(np.prod(self.block_shape(S)))

    def count(self, p: int) -> int:
        return sum(self.block_size(S) for S in direction_sets(p))

    def offsets(self, p: int) -> list[int]:
        off = [0]
        for S in direction_sets(p):
            off.append(off[-1] + self.block_size(S))
        return off

    def block_slice(self, p: int, S) -> slice:
        dirs = direction_sets(p)
        off = self.offsets(p)
        b = dirs.index(tuple(S))
        return slice(off[b], off[b + 1])

    def flat_index(self, S, i, j, k):
        ni, nj, _ = self.block_shape(S)
        return i + ni * (j + nj * k)

    def vertex_index(self, i, j, k):
        m = self.n + 1
        return i + m * (j + m * k)

    def cell_index(self, cell: CellId) -> int:
        self.check_cell(cell)
        S = tuple(cell.dirs)
        return self.block_slice(cell.degree, S).start + int(self.flat_index(S, *cell.index))

    def check_cell(self, cell: CellId) -> None:
        if cell.degree not in (0, 1, 2, 3):
            raise InvalidCell(f"bad degree {cell.degree}")
        S = tuple(cell.dirs)
        if len(S) != cell.degree or S not in direction_sets(cell.degree):
            raise InvalidCell(f"direction set {S} invalid for degree {cell.degree}")
        if len(cell.index) != 3:
            raise InvalidCell("multi-index must have three entries")
        for idx, limit in zip(cell.index, self.block_shape(S)):
            if not 0 <= idx < limit:
                raise InvalidCell(f"index {cell.index} out of range for {dir_name(S)}-cells")

    def anchors(self, p: int) -> list[np.ndarray]:
        """Per direction set, an (N_S, 3) integer array of anchors in flat order."""
        key = ("anchors", p)
        if key not in self._cache:
            out = []
            for S in direction_sets(p):
                ni, nj, nk = self.block_shape(S)
                k, j, i = np.meshgrid(np.arange(nk), np.arange(nj), np.arange(ni), indexing="ij")
                out.append(np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1))
            self._cache[key] = out
        return self._cache[key]

    def centers(self, p: int) -> list[np.ndarray]:
        """Per direction set, the (N_S, 3) coordinates of cell centres."""
        out = []
        for S, anc in zip(direction_sets(p), self.anchors(p)):
            c = anc.astype(float)
            for a in S:
                c[:, a] += 0.5
            out.append(c * self.h)
        return out

    @cached_property
    def vertex_coords(self) -> np.ndarray:
        return self.anchors(0)[0] * self.h

    @cached_property
    def vertex_depth(self) -> np.ndarray:
        """Index distance of every vertex from the boundary (0 on the boundary)."""
        a = self.anchors(0)[0]
        return np.minimum(a, self.n - a).min(axis=1)

    def boundary_masks(self, p: int) -> tuple[np.ndarray, np.ndarray]:
        """Boolean (tangential-to-some-face, normal-to-some-face) masks over degree-p cells."""
        key = ("bmask", p)
        if key not in self._cache:
            tan, nor = [], []
            for S, anc in zip(direction_sets(p), self.anchors(p)):
                t = np.zeros(len(anc), dtype=bool)
                q = np.zeros(len(anc), dtype=bool)
                for a in range(3):
                    if a in S:
                        q |= (anc[:, a] == 0) | (anc[:, a] == self.n - 1)
                    else:
                        t |= (anc[:, a] == 0) | (anc[:, a] == self.n)
                tan.append(t)
                nor.append(q)
            self._cache[key] = (np.concatenate(tan), np.concatenate(nor))
        return self._cache[key]

    def face_masks(self, p: int) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        """Per boundary face, boolean (tangential, normal) masks over degree-p cells."""
        key = ("fmask", p)
        if key not in self._cache:
            res = {}
            for f in FACES:
                a = AXES.index(f[0])
                plus = f[1] == "+"
                tan, nor = [], []
                for S, anc in zip(direction_sets(p), self.anchors(p)):
                    if a in S:
                        nor.append(anc[:, a] == (self.n - 1 if plus else 0))
                        tan.append(np.zeros(len(anc), dtype=bool))
                    else:
                        tan.append(anc[:, a] == (self.n if plus else 0))
                        nor.append(np.zeros(len(anc), dtype=bool))
                res[f] = (np.concatenate(tan), np.concatenate(nor))
            self._cache[key] = res
        return self._cache[key]


def build_mesh(n: int, L: float = 1.0) -> CubeMesh:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidParameter(f"n must be an integer >= 2, got {n!r}")
    if not L > 0:
        raise InvalidParameter(f"L must be positive, got {L!r}")
    return CubeMesh(int(n), float(L))


def classify(mesh: CubeMesh, cell: CellId) -> BoundaryClass:
    mesh.check_cell(cell)
    S = tuple(cell.dirs)
    tan, nor = set(), set()
    for a in range(3):
        idx = cell.index[a]
        if a in S:
            if idx == 0:
                nor.add(AXES[a] + "-")
            if idx == mesh.n - 1:
                nor.add(AXES[a] + "+")
        else:
            if idx == 0:
                tan.add(AXES[a] + "-")
            if idx == mesh.n:
                tan.add(AXES[a] + "+")
    return BoundaryClass(frozenset(tan), frozenset(nor))


def incidence(mesh: CubeMesh, p: int) -> sp.csr_matrix:
    """Signed incidence (N_{p+1} x N_p): each (p+1)-cell to its 2(p+1) boundary p-cells."""
    if p not in (0, 1, 2):
        raise InvalidDegree(f"incidence defined for p in 0..2, got {p}")
    key = ("incidence", p)
    if key in mesh._cache:
        return mesh._cache[key]
    rows, cols, vals = [], [], []
    for R, anc in zip(direction_sets(p + 1), mesh.anchors(p + 1)):
        r = mesh.block_slice(p + 1, R).start + np.arange(len(anc))
        for pos, a in enumerate(R):
            S = tuple(b for b in R if b != a)
            base = mesh.block_slice(p, S).start
            sign = (-1) ** pos
            for shift, s in ((1, sign), (0, -sign)):
                idx = anc.copy()
                idx[:, a] += shift
                c = base + mesh.flat_index(S, idx[:, 0], idx[:, 1], idx[:, 2])
                rows.append(r)
                cols.append(c)
                vals.append(np.full(len(r), s, dtype=float))
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.count(p + 1), mesh.count(p)),
    )
    mesh._cache[key] = mat
    return mat
