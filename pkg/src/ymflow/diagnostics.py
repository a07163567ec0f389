"""Gauge-invariant observables and checkers for the flow's energy identities and estimates."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from . import algebra
from .connection import (
    ADJ_OF_MAXIMAL,
    ADJ_OF_MINIMAL,
    MAXIMAL,
    MINIMAL,
    cov_codiff,
    cov_d,
    curvature,
)
from .errors import InsufficientSamples, RangeError
from .fields import sample_form, smooth_form
from .forms import (
    BcKind,
    Cochain,
    as_bc,
    collocate,
    grad_norm_sq,
    inner_product,
    lp_from_vertex,
    lp_norm,
    project_bc,
    require_subspace,
    wedge_bracket,
)
from .mesh import CubeMesh, direction_sets

MIN_ALPHA_SAMPLES = 50
BUMP_MIN_CELLS = 4


@dataclass(frozen=True)
class GFConstants:
    kappa_hat: float
    c: float
    lambda_M: float = 1.0

    @classmethod
    def for_group(cls, kind, kappa_hat: float, lambda_M: float = 1.0):
        return cls(kappa_hat=float(kappa_hat), c=algebra.ad_norm(kind), lambda_M=lambda_M)

    def lambda3(self, B_l3: float) -> float:
        return self.lambda_M + (self.kappa_hat * self.c) ** 2 * B_l3 ** 2

    def lambda2(self, B0_l2: float) -> float:
        return 1.0 + self.kappa_hat ** 6 * (self.c * B0_l2) ** 4


# ---------------------------------------------------------------------------
# singular-weight quadrature in u = sqrt(s)


def _u_nodes(traj, t=None):
    ts = traj.t
    if t is None:
        t = ts[-1]
    if ts[0] != 0.0:
        raise RangeError("trajectory must start at t = 0 for singular-weight integrals")
    sel = ts <= t * (1 + 1e-12)
    if np.count_nonzero(sel[1:]) < MIN_ALPHA_SAMPLES:
        raise InsufficientSamples(
            f"need >= {MIN_ALPHA_SAMPLES} records in (0, t]; got {np.count_nonzero(sel[1:])}"
        )
    return sel, np.sqrt(ts[sel])


def _cumint(y, x):
    """Cumulative Simpson integral on possibly uneven nodes (trapezoid for two nodes)."""
    if len(x) < 3:
        return cumulative_trapezoid(y, x=x, initial=0.0)
    return cumulative_simpson(y, x=x, initial=0.0)


def alpha_series(traj, t=None) -> tuple[np.ndarray, np.ndarray]:
    """(times, alpha(times)) with alpha(t) = int_0^t s^{-1/2}||B||^2 ds = int 2||B(u^2)||^2 du."""
    sel, u = _u_nodes(traj, t)
    B2 = traj.column("B_l2")[sel] ** 2
    return u * u, _cumint(2.0 * B2, u)


def action_alpha(traj, t=None) -> float:
    _, a = alpha_series(traj, t)
    return float(a[-1])


@dataclass
class IdentityReport:
    name: str
    max_defect: float
    final_defect: float
    times: list = field(default_factory=list, repr=False)
    defects: list = field(default_factory=list, repr=False)
    method: str = ""

    def as_dict(self):
        d = asdict(self)
        d.pop("times")
        d.pop("defects")
        return d


def check_fa10(traj, t=None) -> IdentityReport:
    """t^{1/2}||B||^2 + 2 int_0^t s^{1/2}||A'||^2 ds = alpha(t)/2, all integrals in u = sqrt(s).

    The defect is normalised by max_t alpha(t)/2.
    """
    sel, u = _u_nodes(traj, t)
    ts = u * u
    B2 = traj.column("B_l2")[sel] ** 2
    Ap2 = traj.column("Aprime_l2")[sel] ** 2
    alpha = _cumint(2.0 * B2, u)
    lhs = u * B2 + _cumint(4.0 * u * u * Ap2, u)
    rhs = 0.5 * alpha
    scale = float(np.max(np.abs(rhs)))
    diff = np.abs(lhs - rhs)
    dfc = diff / scale if scale > 0 else diff
    return IdentityReport("fa10", float(dfc.max()), float(dfc[-1]), ts.tolist(), dfc.tolist(), "simpson-sqrt")


def check_energy_identity(traj) -> IdentityReport:
    """||B(t)||^2 + 2 int_0^t ||A'||^2 = ||B_0||^2, relative to ||B_0||^2.

    The dissipation integral is the one advanced alongside the field by the
    time stepper when available, otherwise Simpson quadrature of the records.
    """
    ts = traj.t
    B2 = traj.column("B_l2") ** 2
    D = traj.column("dissipation")
    method = "stepper"
    if not np.all(np.isfinite(D)):
        D = _cumint(2.0 * traj.column("Aprime_l2") ** 2, ts)
        method = "simpson"
    b0 = B2[0] + D[0]  # D[0] is nonzero only for resumed runs
    diff = np.abs(B2 + D - b0)
    dfc = diff / b0 if b0 > 0 else diff
    return IdentityReport("fe5", float(dfc.max()), float(dfc[-1]), ts.tolist(), dfc.tolist(), method)


def monotonicity_violations(traj, rel_tol=1e-10) -> int:
    """Number of record-to-record increases of ||B||_2 above rel_tol*||B_0||_2."""
    B = traj.column("B_l2")
    return int(np.count_nonzero(np.diff(B) > rel_tol * B[0]))


# ---------------------------------------------------------------------------
# psi and the order-1 bound


def _piecewise_linear_integral(ts, y, t):
    """Exact integral over [ts[0], t] of the piecewise-linear interpolant of y."""
    if t < ts[0] - 1e-15 or t > ts[-1] * (1 + 1e-12) + 1e-15:
        raise RangeError(f"t = {t} outside the trajectory range")
    t = min(max(t, ts[0]), ts[-1])
    Ic = cumulative_trapezoid(y, x=ts, initial=0.0)
    k = int(np.searchsorted(ts, t, side="right") - 1)
    k = min(k, len(ts) - 2) if len(ts) > 1 else 0
    if len(ts) == 1:
        return 0.0
    dtk = ts[k + 1] - ts[k]
    r = (t - ts[k]) / dtk
    yt = y[k] + r * (y[k + 1] - y[k])
    return float(Ic[k] + 0.5 * (t - ts[k]) * (y[k] + yt))


def psi(traj, s: float, t: float, consts: GFConstants) -> float:
    """psi_s^t = (t - s) lambda_M + 2 (kappa c)^2 int_s^t ||B||_3^2 (trapezoid on records)."""
    if s > t:
        raise RangeError("psi needs s <= t")
    ts = traj.t
    y = traj.column("B_l3") ** 2
    integral = _piecewise_linear_integral(ts, y, t) - _piecewise_linear_integral(ts, y, s)
    return (t - s) * consts.lambda_M + 2.0 * (consts.kappa_hat * consts.c) ** 2 * integral


@dataclass
class BoundReport:
    passed: bool
    passed_weak: bool
    min_margin: float
    times: list = field(default_factory=list, repr=False)
    lhs: list = field(default_factory=list, repr=False)
    rhs: list = field(default_factory=list, repr=False)

    def as_dict(self):
        return {"passed": self.passed, "passed_weak": self.passed_weak, "min_margin": self.min_margin}


def check_order1_bound(traj, consts: GFConstants, slack: float = 0.05) -> BoundReport:
    """t||A'(t)||^2 + int_0^t e^{psi_s^t} s||B'(s)||^2 ds <= e^{psi(t)} ||B_0||^2 / 2."""
    ts = traj.t
    if len(ts) < 3:
        raise InsufficientSamples("order-1 bound needs at least three records")
    Ap2 = traj.column("Aprime_l2") ** 2
    Bp2 = traj.column("Bprime_l2") ** 2
    B0sq = traj.column("B_l2")[0] ** 2
    y3 = traj.column("B_l3") ** 2
    Ipsi = cumulative_trapezoid(y3, x=ts, initial=0.0)
    psi0 = ts * consts.lambda_M + 2.0 * (consts.kappa_hat * consts.c) ** 2 * Ipsi
    inner_int = cumulative_trapezoid(np.exp(-psi0) * ts * Bp2, x=ts, initial=0.0)
    lhs = ts * Ap2 + np.exp(psi0) * inner_int
    rhs = np.exp(psi0) * B0sq / 2.0
    ok = lhs <= rhs * (1 + slack) + 1e-300
    weak = ts * Ap2 <= rhs * (1 + slack) + 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = np.where(rhs > 0, 1.0 - lhs / rhs, 0.0)
    return BoundReport(bool(ok.all()), bool(weak.all()), float(margin.min()), ts.tolist(), lhs.tolist(), rhs.tolist())


def check_acceleration_identity(traj) -> IdentityReport:
    """d/ds||A'||^2 + 2||B'||^2 + 2([A' ^ A'], B) = 0 by finite differences of records.

    Normalised by max 2||B'||^2.
    """
    ts = traj.t
    if len(ts) < 3:
        raise InsufficientSamples("needs at least three records")
    Ap2 = traj.column("Aprime_l2") ** 2
    res = np.gradient(Ap2, ts, edge_order=2) + 2 * traj.column("Bprime_l2") ** 2 + 2 * traj.column("AA_B")
    scale = float(np.max(2 * traj.column("Bprime_l2") ** 2))
    dfc = np.abs(res) / scale if scale > 0 else np.abs(res)
    return IdentityReport("acceleration", float(dfc.max()), float(dfc[-1]), ts.tolist(), dfc.tolist(), "fd")


# ---------------------------------------------------------------------------
# Gaffney identity and GF inequality


def weitzenbock_pairing(B: Cochain, w: Cochain) -> float:
    """(B w, w) for 1- and 2-forms.

    p = 1: inner(B, [w ^ w]) = sum_ij <B_ij, [w_i, w_j]>.
    p = 2: sum_{i<j} <(B o w)_ij, w_ij> at vertices with
    (B o w)_ij = sum_k ([B_ki, w_kj] + [B_kj, w_ik]).
    """
    if w.kind is algebra.U1:
        return 0.0
    if w.p == 1:
        return inner_product(B, wedge_bracket(w, w))
    if w.p != 2:
        raise ValueError("pairing defined for 1- and 2-forms")
    Bc, Wc = collocate(B), collocate(w)
    pairs = direction_sets(2)

    def comp(F, i, j):
        if i == j:
            return np.zeros_like(F[:, 0])
        if i < j:
            return F[:, pairs.index((i, j))]
        return -F[:, pairs.index((j, i))]

    total = 0.0
    for i, j in pairs:
        acc = np.zeros_like(Wc[:, 0])
        for k in range(3):
            acc += algebra.bracket(comp(Bc, k, i), comp(Wc, k, j))
            acc += algebra.bracket(comp(Bc, k, j), comp(Wc, i, k))
        total += float(np.sum(acc * Wc[:, pairs.index((i, j))]))
    return total * w.mesh.h ** 3


@dataclass
class GaffneyReport:
    grad_sq: float
    dA_sq: float
    dAstar_sq: float
    pairing: float
    lhs_identity: float
    rhs_identity: float
    defect: float
    omega_sq: float
    lambda3: float
    gf_inequality_pass: bool

    def as_dict(self):
        return asdict(self)


def gaffney_check(A: Optional[Cochain], w: Cochain, bc, consts: Optional[GFConstants] = None) -> GaffneyReport:
    """Compare ||nabla^A w||^2 with ||d_A w||^2 + ||d_A^* w||^2 - (B w, w) and test the GF inequality."""
    bc = as_bc(bc)
    require_subspace(w, bc, "omega")
    if A is None:
        A = Cochain.zeros(w.mesh, 1, w.kind)
    var = MINIMAL if bc is BcKind.DIRICHLET else MAXIMAL
    avar = ADJ_OF_MINIMAL if bc is BcKind.DIRICHLET else ADJ_OF_MAXIMAL
    B = curvature(A)
    grad = grad_norm_sq(A, w)
    dA = cov_d(A, w, var) if w.p < 3 else None
    dA_sq = inner_product(dA, dA) if dA is not None else 0.0
    ds = cov_codiff(A, w, avar)
    ds_sq = inner_product(ds, ds)
    pair = weitzenbock_pairing(B, w)
    rhs = dA_sq + ds_sq - pair
    defect = abs(grad - rhs) / max(grad, 1e-300)
    om = inner_product(w, w)
    if consts is None:
        consts = GFConstants.for_group(w.kind, 0.0)
    lam3 = consts.lambda3(lp_norm(B, 3))
    ok = 0.5 * (grad + om) <= dA_sq + ds_sq + lam3 * om
    return GaffneyReport(grad, dA_sq, ds_sq, pair, grad, rhs, defect, om, lam3, bool(ok))


# ---------------------------------------------------------------------------
# Sobolev constant


@dataclass
class KappaEstimate:
    kappa: float
    max_ratio: float
    tag: str
    n_trials: int


def _bump_form(mesh: CubeMesh, rng, bc) -> tuple[Cochain, str]:
    axis = int(rng.integers(3))
    # radii below ~4 cells are under-resolved and inflate the ratio
    rmin = BUMP_MIN_CELLS * mesh.h / mesh.L
    r = float(rng.uniform(rmin, max(rmin, 0.35)))
    lo, hi = min(r, 0.5), max(1 - r, 0.5)
    centre = rng.uniform(lo, hi, size=3) * mesh.L

    def f(x, S):
        out = np.zeros((len(x), 1))
        if S == (axis,):
            s = (x - centre) / (r * mesh.L)
            rr = np.sum(s * s, axis=1)
            out[:, 0] = np.where(rr < 1, (1 - rr) ** 4, 0.0)
        return out

    return project_bc(sample_form(mesh, 1, f, "U1"), bc), f"bump(axis={'xyz'[axis]}, r={r:.3f})"


def sobolev_ratio(w: Cochain) -> float:
    """||w||_6^2 / (||nabla w||^2 + ||w||^2), all by vertex quadrature."""
    from .forms import fiber_norm

    f = fiber_norm(w)
    l6 = lp_from_vertex(f, w.mesh.h, 6)
    l2 = lp_from_vertex(f, w.mesh.h, 2)
    g = grad_norm_sq(None, w)
    den = g + l2 * l2
    return float(l6 * l6 / den) if den > 0 else 0.0


def sobolev_kappa(mesh: CubeMesh, bc, seed: int = 0, n_random: int = 200, n_bumps: int = 50) -> KappaEstimate:
    """kappa^2 = 2 max ||w||_6^2 / (||nabla w||^2 + ||w||^2) over a trial set of real 1-forms.

    Trials: random smooth bc-projected fields, coordinate bumps at least four
    cells in radius, and (when the bc admits it) the constant field dx.
    """
    bc = as_bc(bc)
    rng = np.random.default_rng(seed)
    best, tag = 0.0, ""
    if bc is BcKind.NONE:
        const = sample_form(mesh, 1, lambda x, S: np.full((len(x), 1), 1.0 if S == (0,) else 0.0), "U1")
        best, tag = sobolev_ratio(const), "constant dx"
    for i in range(n_random):
        kmax = int(rng.integers(1, 4))
        w = smooth_form(mesh, 1, "U1", rng, bc=bc, kmax=kmax)
        r = sobolev_ratio(w)
        if r > best:
            best, tag = r, f"smooth#{i}(kmax={kmax})"
    for i in range(n_bumps):
        w, t = _bump_form(mesh, rng, bc)
        r = sobolev_ratio(w)
        if r > best:
            best, tag = r, f"{t}#{i}"
    return KappaEstimate(float(np.sqrt(2 * best)), best, tag, n_random + n_bumps)


# ---------------------------------------------------------------------------
# Wilson loops

PLANES = {"xy": (0, 1), "yz": (1, 2), "zx": (2, 0)}


@dataclass(frozen=True)
class LoopSpec:
    plane: str
    anchor: tuple
    a: int
    b: int
    representation: str = "fundamental"

    def validate(self, mesh: CubeMesh) -> None:
        if self.plane not in PLANES:
            raise RangeError(f"plane must be one of {sorted(PLANES)}, got {self.plane!r}")
        if self.a < 1 or self.b < 1:
            raise RangeError("loop sides must be at least one edge")
        ax, bx = PLANES[self.plane]
        anc = np.asarray(self.anchor, dtype=int)
        if anc.shape != (3,) or np.any(anc < 0) or np.any(anc > mesh.n):
            raise RangeError(f"anchor {self.anchor} outside the mesh")
        if anc[ax] + self.a > mesh.n or anc[bx] + self.b > mesh.n:
            raise RangeError(f"loop {self} leaves the mesh")

    def edges(self, mesh: CubeMesh) -> list[tuple[int, int]]:
        """(edge flat index, orientation +-1) in path order."""
        self.validate(mesh)
        ax, bx = PLANES[self.plane]
        pos = list(self.anchor)
        out = []
        for axis, count, sgn in ((ax, self.a, 1), (bx, self.b, 1), (ax, self.a, -1), (bx, self.b, -1)):
            for _ in range(count):
                anc = list(pos)
                if sgn < 0:
                    anc[axis] -= 1
                S = (axis,)
                idx = mesh.block_slice(1, S).start + int(mesh.flat_index(S, *anc))
                out.append((idx, sgn))
                pos[axis] += sgn
        return out


def holonomy(A: Cochain, loop: LoopSpec) -> np.ndarray:
    U = algebra.identity(A.kind)
    h = A.mesh.h
    for e, s in loop.edges(A.mesh):
        U = U @ algebra.exp_alg(s * h * A.values[e])
    return U


def wilson_loop(A: Cochain, loop: LoopSpec) -> float:
    return float(np.real(np.trace(holonomy(A, loop))))


def regularized_wilson(config, A0: Cochain, t_eval, loops: Sequence[LoopSpec]) -> list[dict]:
    """Flow A0 with the direct flow and tabulate W_gamma(A(t)) for every t in t_eval."""
    from .flow import integrate

    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    if np.any(t_eval < 0) or np.any(t_eval > config.T * (1 + 1e-12)):
        raise RangeError("t_eval must lie in [0, T]")
    for lp in loops:
        lp.validate(A0.mesh)
    cfg = config.replace(flow="direct")
    steps = [int(round(t / cfg.dt_eff)) for t in t_eval]
    traj = integrate(cfg, A0, snapshot_steps=steps)
    rows = []
    for t, k in zip(t_eval, steps):
        A = traj.snapshots[k].A
        for i, lp in enumerate(loops):
            rows.append(
                {
                    "loop_id": i,
                    "plane": lp.plane,
                    "anchor": "-".join(str(v) for v in lp.anchor),
                    "a": lp.a,
                    "b": lp.b,
                    "t": k * cfg.dt_eff,
                    "W_real": wilson_loop(A, lp),
                }
            )
    return rows
