import dataclasses

import numpy as np
import pytest

from ymflow import algebra
from ymflow.connection import GaugeField, pure_gauge
from ymflow.errors import BlowUpDetected, ConfigError, DomainViolation
from ymflow.fields import InitialData, coclosed_form, initial_data, smooth_form, smooth_gauge
from ymflow.flow import (
    CSV_COLUMNS,
    FlowConfig,
    FlowState,
    donaldson_sadun,
    gauge_ode_step,
    integrate,
    linear_oracle,
    parabolic_rhs,
    step,
    x_nonlinear,
    ym_rhs,
)
from ymflow.forms import BcKind, Cochain, codiff, d, norm, project_bc
from ymflow.mesh import build_mesh
from ymflow.operators import laplacian
from ymflow.suites import ds_compare, orders


def test_config_validation():
    with pytest.raises(ConfigError):
        FlowConfig(T=0.05, epsilon=0.05)
    with pytest.raises(ConfigError):
        FlowConfig(theta=0.5)
    with pytest.raises(ConfigError):
        FlowConfig(bc="Marini", flow="parabolic")
    with pytest.raises(ConfigError):
        FlowConfig(n=8, dt=1.0)
    with pytest.raises(ConfigError):
        FlowConfig(bc="Robin")
    cfg = FlowConfig(n=8, T=0.1)
    assert cfg.nsteps * cfg.dt_eff == pytest.approx(0.1, rel=1e-15)
    assert cfg.dt_eff <= cfg.theta * cfg.h ** 2


def test_theta_warning():
    with pytest.warns(UserWarning):
        FlowConfig(theta=0.3)


@pytest.mark.parametrize("bc", ["Dirichlet", "Neumann", "Marini"])
def test_rhs_of_zero(mesh4, bc):
    Z = Cochain.zeros(mesh4, 1, "SU2")
    assert norm(ym_rhs(Z, bc)) == 0
    if bc != "Marini":
        assert norm(parabolic_rhs(Z, bc)) == 0
    assert norm(x_nonlinear(Z)) == 0


def test_rhs_domain_violation(mesh4, rng):
    A = Cochain(1, mesh4, rng.standard_normal((mesh4.count(1), 3)))
    with pytest.raises(DomainViolation):
        ym_rhs(A, "Dirichlet")
    with pytest.raises(DomainViolation):
        parabolic_rhs(A, "Neumann")


@pytest.mark.parametrize("bc", ["Dirichlet", "Neumann"])
def test_u1_reductions(mesh6, rng, bc):
    P = BcKind.DIRICHLET if bc == "Dirichlet" else BcKind.NEUMANN
    A = project_bc(Cochain(1, mesh6, rng.standard_normal((mesh6.count(1), 1))), P)
    dom = P if bc == "Dirichlet" else BcKind.NONE
    ref = project_bc(-codiff(d(A), BcKind.NONE), P)
    assert np.abs(ym_rhs(A, bc).values - ref.values).max() <= 1e-12 * np.abs(ref.values).max()
    lap = laplacian(mesh6, P.value, 1)(A)
    assert np.abs(parabolic_rhs(A, bc).values - lap.values).max() <= 1e-12 * np.abs(lap.values).max()
    assert norm(x_nonlinear(A, bc)) == 0
    assert dom is not None


def _pure_gauge_rhs(ns, seed=4):
    errs = []
    for n in ns:
        m = build_mesh(n)
        g = smooth_gauge(m, "SU2", np.random.default_rng(seed), amplitude=1.5)
        errs.append(norm(ym_rhs(project_bc(pure_gauge(g), BcKind.DIRICHLET), "Dirichlet")))
    return errs


def test_pure_gauge_rhs_order():
    errs = _pure_gauge_rhs((16, 32, 64))
    assert min(orders(errs)) >= 1.0


@pytest.mark.xfail(strict=True, reason="n = 8 does not resolve the compact gauge bump; first ratio is 0.67")
def test_pure_gauge_rhs_order_from_n8():
    assert min(orders(_pure_gauge_rhs((8, 16, 32)))) >= 1.0


def test_step_zero_rhs(mesh4, rng):
    A = smooth_form(mesh4, 1, "SU2", rng)
    st = FlowState(0.0, A)
    for scheme in ("Euler", "RK4"):
        new = step(st, lambda a: a.like(0 * a.values), scheme, 1e-3)
        assert np.array_equal(new.A.values, A.values) and new.step == 1


def test_euler_step_dense_oracle(mesh6, rng):
    A0 = coclosed_form(mesh6, "U1", rng)
    cfg = FlowConfig(group="U1", n=6, T=1e-3, scheme="Euler", dt=mesh6.h ** 2 / 24)
    op = laplacian(mesh6, "Dirichlet", 1)
    new = step(FlowState(0.0, A0), lambda a: ym_rhs(a, "Dirichlet"), "Euler", cfg.dt_eff, BcKind.DIRICHLET)
    M = np.eye(mesh6.count(1)) + cfg.dt_eff * op.dense()
    assert np.abs(new.A.values - M @ A0.values).max() <= 1e-12


def test_blow_up_keeps_last_state(mesh4, rng):
    A = smooth_form(mesh4, 1, "SU2", rng)
    grow = lambda a: a * 1e6  # noqa: E731
    st = FlowState(0.0, A)
    with pytest.raises(BlowUpDetected) as exc:
        for _ in range(10):
            st = step(st, grow, "Euler", 1.0, threshold=1e8)
    assert exc.value.last_state is st


def test_gauge_ode_step(mesh4, rng):
    g0 = GaugeField(mesh4, algebra.random_group("SU2", rng, mesh4.nv))
    Z = Cochain.zeros(mesh4, 0, "SU2")
    assert np.array_equal(gauge_ode_step(g0, Z, 0.1).g, g0.g)
    V = Cochain(0, mesh4, rng.standard_normal((mesh4.nv, 3)))
    g, dt = g0, 0.01
    for _ in range(50):
        g = gauge_ode_step(g, V, dt)
    want = algebra.exp_alg(50 * dt * V.values) @ g0.g
    assert np.abs(g.g - want).max() <= 1e-12


def test_integrate_records_and_stride():
    cfg = FlowConfig(n=4, T=0.02, record_stride=3)
    A0 = smooth_form(cfg.mesh(), 1, "SU2", np.random.default_rng(0), bc=cfg.projection)
    tr = integrate(cfg, A0)
    steps = [int(round(t / cfg.dt_eff)) for t in tr.t]
    assert steps == sorted(set(list(range(0, cfg.nsteps + 1, 3)) + [cfg.nsteps]))
    assert set(CSV_COLUMNS) <= set(tr.records[0])
    with pytest.raises(DomainViolation):
        integrate(cfg, Cochain(1, cfg.mesh(), np.ones((cfg.mesh().count(1), 3))))


def test_zero_initial_data_stays_zero():
    cfg = FlowConfig(n=4, T=0.01)
    tr = integrate(cfg, Cochain.zeros(cfg.mesh(), 1, "SU2"))
    for c in CSV_COLUMNS[1:]:
        assert np.all(tr.column(c) == 0)


@pytest.mark.parametrize("bc", ["Dirichlet", "Neumann"])
def test_resume_reproduces(bc):
    cfg = FlowConfig(n=6, T=0.03, bc=bc)
    A0 = smooth_form(cfg.mesh(), 1, "SU2", np.random.default_rng(5), bc=cfg.projection)
    full = integrate(cfg, A0)
    k = cfg.nsteps // 2
    part = integrate(cfg, A0, snapshot_steps=[k], until_step=k)
    assert part.final_state.step == k
    rest = integrate(cfg, state=part.snapshots[k])
    tail = full.records[-len(rest.records):]
    for a, b in zip(tail, rest.records):
        for c in CSV_COLUMNS + ("dissipation",):
            assert abs(a[c] - b[c]) <= 1e-13 * max(1.0, abs(a[c]))
    assert np.abs(full.final_state.A.values - rest.final_state.A.values).max() <= 1e-13


def test_donaldson_sadun_zero():
    cfg = FlowConfig(n=4, T=0.01, flow="parabolic", epsilon=0.002)
    tC, tA = donaldson_sadun(cfg, Cochain.zeros(cfg.mesh(), 1, "SU2"))
    assert norm(tC.final_state.A) == 0 and norm(tA.final_state.A) == 0
    assert np.array_equal(tC.final_state.g.g, GaugeField.identity(cfg.mesh(), "SU2").g)


def _u1_ds_closedness(n, bc):
    res = ds_compare(n, bc, group="U1")
    assert res["B_gap"] <= 1e-13
    _, tA, tD = res["trajectories"]
    diff = tA.final_state.A - tD.final_state.A
    return norm(d(diff)) / norm(tD.final_state.A)


def test_donaldson_sadun_u1_dirichlet_is_gauge_equivalent():
    # abelian: A_eps and the direct flow differ by an exact gauge term d(phi)
    assert _u1_ds_closedness(6, "Dirichlet") <= 1e-12


def test_donaldson_sadun_u1_neumann_gauge_defect_is_first_order():
    # the Neumann projection of d d^*C is not exact on the boundary collar
    ns = (6, 8, 12)
    errs = [_u1_ds_closedness(n, "Neumann") for n in ns]
    assert min(orders(errs, hs=[1 / n for n in ns])) >= 0.8


def test_linear_oracle_vs_rk4(mesh6, rng):
    A0 = coclosed_form(mesh6, "U1", rng)
    exact = linear_oracle(A0, "Dirichlet", [0.0, 0.01]).final_state.A
    errs = []
    for k in range(2):
        cfg = FlowConfig(group="U1", n=6, T=0.01, dt=mesh6.h ** 2 / (24 * 2 ** k), record_stride=10 ** 9)
        errs.append(np.abs(integrate(cfg, A0).final_state.A.values - exact.values).max())
    assert 8 <= errs[0] / errs[1] <= 32
    with pytest.raises(ConfigError):
        linear_oracle(smooth_form(mesh6, 1, "SU2", rng), "Dirichlet", [0.0])


@pytest.mark.parametrize("kind", InitialData.KINDS)
@pytest.mark.parametrize("bc", [BcKind.DIRICHLET, BcKind.NEUMANN])
def test_initial_data_recipes(mesh6, kind, bc):
    r = InitialData(kind=kind)
    A = initial_data(mesh6, "SU2", bc, r, seed=3)
    B = initial_data(mesh6, "SU2", bc, r, seed=3)
    assert np.array_equal(A.values, B.values)
    assert np.all(np.isfinite(A.values))
    assert np.array_equal(project_bc(A, bc).values, A.values)
    with pytest.raises(ValueError):
        dataclasses.replace(r, kind="nope")
