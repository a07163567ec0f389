"""Structure groups U(1) and SU(2) and their Lie algebras.

Algebra elements are real coefficient arrays of shape (..., dim) in an
orthonormal basis; the kind is read off the trailing dimension (1 for u(1),
3 for su(2)).  Group elements are complex matrices of shape (..., m, m) with
m = 1 or 2.  For su(2) the basis is e_k = -(i/2) sigma_k, so that
[e_i, e_j] = eps_ijk e_k and the bracket is the cross product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidOperands, LogBranchError

CUT_MARGIN = 1e-6
RENORM_TOL = 1e-13

_SIGMA = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)
SU2_BASIS = -0.5j * _SIGMA


@dataclass(frozen=True)
class GroupKind:
    tag: str
    dim: int
    mat_size: int


U1 = GroupKind("U1", 1, 1)
SU2 = GroupKind("SU2", 3, 2)
KINDS = {"U1": U1, "SU2": SU2}


def get_kind(tag) -> GroupKind:
    if isinstance(tag, GroupKind):
        return tag
    try:
        return KINDS[str(tag).upper()]
    except KeyError:
        raise InvalidOperands(f"unknown group {tag!r}") from None


def kind_of(x) -> GroupKind:
    d = np.shape(x)[-1]
    for k in (U1, SU2):
        if k.dim == d:
            return k
    raise InvalidOperands(f"no group with algebra dimension {d}")


def kind_of_group(g) -> GroupKind:
    m = np.shape(g)[-1]
    for k in (U1, SU2):
        if k.mat_size == m:
            return k
    raise InvalidOperands(f"no group with matrix size {m}")


def _same_kind(x, y) -> GroupKind:
    kx, ky = kind_of(x), kind_of(y)
    if kx != ky:
        raise InvalidOperands(f"kind mismatch: {kx.tag} vs {ky.tag}")
    return kx


def basis(kind) -> np.ndarray:
    return np.eye(get_kind(kind).dim)


def bracket(x, y) -> np.ndarray:
    k = _same_kind(x, y)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if k is U1:
        return np.zeros(np.broadcast_shapes(x.shape, y.shape))
    out = np.empty(np.broadcast_shapes(x.shape, y.shape))
    x0, x1, x2 = x[..., 0], x[..., 1], x[..., 2]
    y0, y1, y2 = y[..., 0], y[..., 1], y[..., 2]
    out[..., 0] = x1 * y2 - x2 * y1
    out[..., 1] = x2 * y0 - x0 * y2
    out[..., 2] = x0 * y1 - x1 * y0
    return out


def inner(x, y) -> np.ndarray:
    _same_kind(x, y)
    return np.sum(np.asarray(x) * np.asarray(y), axis=-1)


def to_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if kind_of(x) is U1:
        return (1j * x)[..., None]
    return np.einsum("...k,kab->...ab", x, SU2_BASIS)


def from_matrix(M) -> np.ndarray:
    """Coefficients of an algebra-valued (anti-Hermitian, traceless for SU2) matrix."""
    M = np.asarray(M)
    if kind_of_group(M) is U1:
        return M[..., 0, :].imag
    return np.real(1j * np.einsum("...ab,kba->...k", M, _SIGMA))


def identity(kind, shape=()) -> np.ndarray:
    m = get_kind(kind).mat_size
    return np.broadcast_to(np.eye(m, dtype=complex), tuple(shape) + (m, m)).copy()


def inverse(g) -> np.ndarray:
    return np.conj(np.swapaxes(g, -1, -2))


def exp_alg(x) -> np.ndarray:
    """Closed-form exponential: Euler for u(1), Rodrigues for su(2)."""
    x = np.asarray(x, dtype=float)
    if kind_of(x) is U1:
        return np.exp(1j * x)[..., None]
    half = 0.5 * np.linalg.norm(x, axis=-1)
    c = np.cos(half)[..., None, None]
    s = np.sinc(half / np.pi)[..., None, None]
    return c * np.eye(2) + s * to_matrix(x)


def log_group(g, margin: float = CUT_MARGIN) -> np.ndarray:
    """Principal logarithm; raises LogBranchError near the cut locus."""
    g = np.asarray(g, dtype=complex)
    if kind_of_group(g) is U1:
        phase = np.angle(g[..., 0, 0])
        if np.any(np.abs(phase) > np.pi - margin):
            raise LogBranchError("U(1) phase at the cut locus")
        return phase[..., None]
    q0 = 0.5 * np.real(g[..., 0, 0] + g[..., 1, 1])
    y = from_matrix(0.5 * (g - inverse(g)))
    sin_half = 0.5 * np.linalg.norm(y, axis=-1)
    half = np.arctan2(sin_half, q0)
    if np.any(half > np.pi - margin):
        raise LogBranchError("SU(2) element at the cut locus (-I)")
    scale = np.where(sin_half > 0, half / np.where(sin_half > 0, sin_half, 1.0), 1.0)
    # y = 2 sin(half) * xhat and |x| = 2 half
    return y * scale[..., None]


def adjoint_matrix(g) -> np.ndarray:
    """Matrix of Ad_g on the coefficient basis, shape (..., dim, dim)."""
    g = np.asarray(g, dtype=complex)
    if kind_of_group(g) is U1:
        return np.ones(g.shape[:-2] + (1, 1))
    gi = inverse(g)
    cols = [from_matrix(g @ SU2_BASIS[j] @ gi) for j in range(3)]
    return np.stack(cols, axis=-1)


def ad_apply(g, x) -> np.ndarray:
    """Ad_g x = g x g^{-1}."""
    R = adjoint_matrix(g)
    return np.einsum("...ab,...b->...a", R, x)


def ad_norm(kind) -> float:
    """The constant c = sup{ ||ad x|| : |x| <= 1 }.

    Ad-invariance makes every unit vector equivalent, so the operator norm of
    ad(e_1) is the supremum.
    """
    k = get_kind(kind)
    e1 = np.eye(k.dim)[0]
    ad_e1 = np.stack([bracket(e1, e) for e in np.eye(k.dim)], axis=-1)
    return float(np.linalg.norm(ad_e1, 2))


def renormalize(g) -> np.ndarray:
    """Project near-unitary matrices back onto the group."""
    g = np.asarray(g, dtype=complex)
    if kind_of_group(g) is U1:
        return g / np.abs(g)
    a = 0.5 * (g[..., 0, 0] + np.conj(g[..., 1, 1]))
    b = 0.5 * (g[..., 0, 1] - np.conj(g[..., 1, 0]))
    nrm = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
    a, b = a / nrm, b / nrm
    out = np.empty_like(g)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = -np.conj(b)
    out[..., 1, 1] = np.conj(a)
    return out


def unitarity_defect(g) -> float:
    g = np.asarray(g, dtype=complex)
    m = g.shape[-1]
    err = np.abs(g @ inverse(g) - np.eye(m)).max() if g.size else 0.0
    if m == 2 and g.size:
        err = max(err, float(np.abs(np.linalg.det(g) - 1).max()))
    return float(err)


def random_algebra(kind, rng, size=(), scale=1.0) -> np.ndarray:
    shape = (size,) if np.isscalar(size) else tuple(size)
    return scale * rng.standard_normal(shape + (get_kind(kind).dim,))


def random_group(kind, rng, size=(), max_angle=3.0) -> np.ndarray:
    """exp of a random algebra element with |x| uniform in [0, max_angle]."""
    k = get_kind(kind)
    shape = (size,) if np.isscalar(size) else tuple(size)
    d = rng.standard_normal(shape + (k.dim,))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    r = rng.uniform(0, max_angle, size=shape + (1,))
    return exp_alg(d * r)
