"""Smooth sampled initial data: random low-mode forms, bc-respecting factors, gauge bumps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra
from .connection import GaugeField
from .forms import BcKind, Cochain, as_bc, codiff, project_bc
from .mesh import CubeMesh, direction_sets


def sample_form(mesh: CubeMesh, p: int, func, kind="SU2") -> Cochain:
    """Sample func(points (N, 3), S) -> (N, dim) at the centres of every S-cell."""
    k = algebra.get_kind(kind)
    vals = np.zeros((mesh.count(p), k.dim))
    for S, c in zip(direction_sets(p), mesh.centers(p)):
        vals[mesh.block_slice(p, S)] = func(c, S)
    return Cochain(p, mesh, vals)


@dataclass(frozen=True)
class PlaneWaves:
    """sum_w amp_w cos(pi k_w . x / L + phase_w) per (direction set, algebra) component."""

    wavevectors: np.ndarray  # (W, 3)
    phases: np.ndarray  # (ncomp, dim, W)
    amps: np.ndarray  # (ncomp, dim, W)

    @classmethod
    def random(cls, rng, ncomp, dim, n_waves=4, kmax=2):
        kv = rng.integers(0, kmax + 1, size=(n_waves, 3)).astype(float)
        phases = rng.uniform(0, 2 * np.pi, size=(ncomp, dim, n_waves))
        amps = rng.standard_normal((ncomp, dim, n_waves)) / np.sqrt(n_waves)
        return cls(kv, phases, amps)

    def __call__(self, x, comp, L):
        # explicit sums instead of BLAS products keep the data independent of the thread count
        kv = self.wavevectors
        arg = np.pi * (x[:, 0:1] * kv[:, 0] + x[:, 1:2] * kv[:, 1] + x[:, 2:3] * kv[:, 2]) / L  # (N, W)
        dim = self.amps.shape[1]
        return np.stack(
            [np.sum(np.cos(arg + self.phases[comp, a]) * self.amps[comp, a], axis=1) for a in range(dim)], axis=1
        )


def bc_factor(x, S, bc, L) -> np.ndarray:
    """Smooth factor vanishing where the bc constrains the S-component."""
    bc = as_bc(bc)
    f = np.ones(len(x))
    if bc is BcKind.DIRICHLET:
        for b in range(3):
            if b not in S:
                f *= np.sin(np.pi * x[:, b] / L)
    elif bc is BcKind.NEUMANN:
        for a in S:
            f *= np.sin(np.pi * x[:, a] / L)
    return f


def smooth_form(mesh, p, kind, rng, bc=BcKind.NONE, amplitude=1.0, n_waves=4, kmax=1) -> Cochain:
    """Random smooth p-form; multiplied by a bc factor and projected to the bc subspace."""
    k = algebra.get_kind(kind)
    dirs = direction_sets(p)
    waves = PlaneWaves.random(rng, len(dirs), k.dim, n_waves, kmax)

    def f(x, S):
        return amplitude * waves(x, dirs.index(S), mesh.L) * bc_factor(x, S, bc, mesh.L)[:, None]

    return project_bc(sample_form(mesh, p, f, k), bc)


def coclosed_form(mesh, kind, rng, amplitude=1.0, bc=BcKind.DIRICHLET, **kw) -> Cochain:
    """Co-closed 1-form d^* beta for a smooth 2-form beta in the bc subspace."""
    beta = smooth_form(mesh, 2, kind, rng, bc=bc, amplitude=amplitude * mesh.L / np.pi, **kw)
    return project_bc(codiff(beta, bc), bc)


def bump(x, L, radius=0.35) -> np.ndarray:
    """Product bump centred in the cube, C^3 and identically zero near the boundary."""
    out = np.ones(len(x))
    r = radius * L
    for a in range(3):
        s = (x[:, a] - 0.5 * L) / r
        out *= np.where(np.abs(s) < 1, (1 - s * s) ** 4, 0.0)
    return out


def smooth_gauge(mesh, kind, rng, amplitude=1.0, compact=True, kmax=1) -> GaugeField:
    """g = exp(phi(x)) with a smooth algebra-valued phi; identity near the boundary if compact."""
    k = algebra.get_kind(kind)
    x = mesh.vertex_coords
    waves = PlaneWaves.random(rng, 1, k.dim, n_waves=3, kmax=kmax)
    phi = amplitude * waves(x, 0, mesh.L)
    if compact:
        phi *= bump(x, mesh.L)[:, None]
    else:
        phi += amplitude * rng.standard_normal(k.dim) * 0.5
    return GaugeField(mesh, algebra.exp_alg(phi))


def noisy(w: Cochain, rng, scale: float, bc=BcKind.NONE) -> Cochain:
    return project_bc(w.like(w.values + scale * rng.standard_normal(w.values.shape)), bc)


@dataclass(frozen=True)
class InitialData:
    """Recipe for A0: kind in {zero, smooth, coclosed, pure_gauge, noisy}."""

    kind: str = "smooth"
    amplitude: float = 1.0
    kmax: int = 1
    n_waves: int = 4
    noise: float = 0.1
    gauge_amplitude: float = 1.5

    KINDS = ("zero", "smooth", "coclosed", "pure_gauge", "noisy")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"initial kind must be one of {self.KINDS}, got {self.kind!r}")


def initial_data(mesh: CubeMesh, group, bc, recipe: InitialData, seed: int) -> Cochain:
    """A0 in the bc subspace, reproducible from (recipe, seed)."""
    from .connection import pure_gauge

    rng = np.random.default_rng(seed)
    bc = as_bc(bc)
    r = recipe
    if r.kind == "zero":
        return Cochain.zeros(mesh, 1, group)
    if r.kind == "coclosed":
        return coclosed_form(mesh, group, rng, r.amplitude, bc=bc, n_waves=r.n_waves, kmax=r.kmax)
    if r.kind == "pure_gauge":
        g = smooth_gauge(mesh, group, rng, r.gauge_amplitude, compact=True, kmax=r.kmax)
        return project_bc(pure_gauge(g), bc)
    A = smooth_form(mesh, 1, group, rng, bc=bc, amplitude=r.amplitude, n_waves=r.n_waves, kmax=r.kmax)
    if r.kind == "noisy":
        A = noisy(A, rng, r.noise * r.amplitude, bc)
    return A
