import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ymflow.errors import InvalidDegree, InvalidOperands
from ymflow.forms import (
    BcKind,
    Cochain,
    codiff,
    collocate,
    covariant_grad,
    d,
    inner_product,
    interior_bracket,
    lp_norm,
    norm,
    project_bc,
    wedge_bracket,
)
from ymflow.mesh import CellId, build_mesh, direction_sets

E = np.eye(3)


def rand(mesh, p, kind, rng):
    dim = 3 if kind == "SU2" else 1
    return Cochain(p, mesh, rng.standard_normal((mesh.count(p), dim)))


def const_form(mesh, p, S, value):
    w = Cochain.zeros(mesh, p, "SU2" if len(value) == 3 else "U1")
    w.values[mesh.block_slice(p, S)] = value
    return w


def test_d_of_constant_is_zero(mesh4):
    w = Cochain(0, mesh4, np.full((mesh4.count(0), 3), 0.7))
    assert np.abs(d(w).values).max() == 0


@pytest.mark.parametrize("p", [0, 1])
def test_dd_zero(mesh6, rng, p):
    for kind in ("U1", "SU2"):
        w = rand(mesh6, p, kind, rng)
        assert np.abs(d(d(w)).values).max() <= 1e-13 * mesh6.n ** 2


def test_d_of_linear_function(mesh4):
    x = mesh4.vertex_coords[:, 0]
    dw = d(Cochain(0, mesh4, x[:, None]))
    xs = dw.block((0,))
    assert np.allclose(xs, 1.0, atol=1e-12)
    assert np.abs(dw.block((1,))).max() <= 1e-12 and np.abs(dw.block((2,))).max() <= 1e-12


def test_d_degree_error(mesh4):
    with pytest.raises(InvalidDegree):
        d(Cochain.zeros(mesh4, 3, "U1"))
    with pytest.raises(InvalidDegree):
        codiff(Cochain.zeros(mesh4, 0, "U1"))


def test_projection_examples(mesh4):
    m = mesh4
    w = Cochain.zeros(m, 1, "U1")
    w.values[m.cell_index(CellId(1, (1,), (0, 2, 2)))] = 1.0  # tangential to x-
    assert norm(project_bc(w, BcKind.DIRICHLET)) == 0
    assert np.array_equal(project_bc(w, BcKind.NEUMANN).values, w.values)
    inner = Cochain.zeros(m, 1, "U1")
    inner.values[m.cell_index(CellId(1, (0,), (1, 2, 2)))] = 1.0
    for bc in (BcKind.DIRICHLET, BcKind.NEUMANN):
        assert np.array_equal(project_bc(inner, bc).values, inner.values)


@pytest.mark.parametrize("bc", [BcKind.DIRICHLET, BcKind.NEUMANN])
def test_projection_idempotent(mesh4, rng, bc):
    for _ in range(100):
        p = int(rng.integers(0, 4))
        w = rand(mesh4, p, "SU2", rng)
        once = project_bc(w, bc)
        assert np.array_equal(project_bc(once, bc).values, once.values)


@pytest.mark.parametrize("p", [0, 1, 2])
@pytest.mark.parametrize("bc", [BcKind.DIRICHLET, BcKind.NEUMANN])
def test_d_codiff_adjoint(mesh4, rng, p, bc):
    for _ in range(20):
        w = project_bc(rand(mesh4, p, "SU2", rng), bc)
        u = rand(mesh4, p + 1, "SU2", rng)
        lhs = inner_product(d(w), u)
        rhs = inner_product(w, codiff(u, bc))
        assert abs(lhs - rhs) <= 1e-12 * (abs(lhs) + norm(d(w)) * norm(u))


def test_codiff_of_constant_gradient(mesh4):
    w = Cochain(0, mesh4, np.ones((mesh4.count(0), 1)))
    assert np.abs(codiff(d(w)).values).max() == 0


def test_codiff_constant_field_interior(mesh6):
    w = const_form(mesh6, 1, (0,), [1.0])
    cd = codiff(w).values[:, 0]
    dep = mesh6.vertex_depth
    a = mesh6.anchors(0)[0]
    inside = (a[:, 0] > 0) & (a[:, 0] < mesh6.n)
    assert np.abs(cd[inside]).max() <= 1e-12
    assert np.abs(cd[~inside]).max() > 0 and dep.min() == 0


def test_constant_unit_norms():
    errs = []
    for n in (8, 16, 32):
        m = build_mesh(n)
        w = const_form(m, 1, (0,), [1.0, 0, 0])
        # n(n+1)^2 x-edges of weight h^3
        assert norm(w) ** 2 == pytest.approx((n + 1) ** 2 / n ** 2, rel=1e-14)
        errs.append(abs(norm(w) ** 2 - 1))
        for q in (2, 3, 4, 6):
            assert abs(lp_norm(w, q) - 1) <= 3.0 / n
        assert lp_norm(w, np.inf) == 1.0
    assert errs[0] / errs[1] > 1.8 and errs[1] / errs[2] > 1.8


def test_inner_product_properties(mesh4, rng):
    a, b, c = (rand(mesh4, 2, "SU2", rng) for _ in range(3))
    s, t = 0.3, -1.7
    lhs = inner_product(a * s + b * t, c)
    assert abs(lhs - (s * inner_product(a, c) + t * inner_product(b, c))) <= 1e-13 * (1 + abs(lhs))
    assert inner_product(a, a) > 0
    assert inner_product(Cochain.zeros(mesh4, 2, "SU2"), Cochain.zeros(mesh4, 2, "SU2")) == 0
    with pytest.raises(InvalidOperands):
        inner_product(a, rand(mesh4, 1, "SU2", rng))


def test_holder_bound(mesh4, rng):
    vol = ((mesh4.n + 1) * mesh4.h) ** 3  # total vertex measure
    for _ in range(10):
        w = rand(mesh4, 1, "SU2", rng)
        assert lp_norm(w, 2) <= lp_norm(w, 6) * vol ** (1 / 3) * (1.0 + 1e-12)
    assert lp_norm(Cochain.zeros(mesh4, 1, "SU2"), 6) == 0


def test_collocate_constant_and_linear(mesh4):
    w = const_form(mesh4, 1, (1,), [0.5, -1.0, 2.0])
    c = collocate(w)
    assert np.allclose(c[:, 1], [0.5, -1.0, 2.0]) and np.abs(c[:, [0, 2]]).max() == 0
    m = mesh4
    x = Cochain.zeros(m, 1, "U1")
    anc = m.anchors(1)[0]
    x.values[m.block_slice(1, (0,)), 0] = anc[:, 0] * m.h
    c = collocate(x)[:, 0, 0]
    a = m.anchors(0)[0]
    inside = (a[:, 0] > 0) & (a[:, 0] < m.n)
    assert np.allclose(c[inside], a[inside, 0] * m.h - m.h / 2, atol=1e-14)


def test_wedge_constants(mesh4):
    m = mesh4
    A = const_form(m, 1, (0,), E[0])
    A.values[m.block_slice(1, (1,))] = E[1]
    AA = wedge_bracket(A, A)
    assert np.allclose(AA.block((0, 1)), 2 * E[2], atol=1e-14)
    assert np.abs(AA.block((0, 2))).max() == 0 and np.abs(AA.block((1, 2))).max() == 0


def test_wedge_u1_vanishes(mesh4, rng):
    u, v = rand(mesh4, 1, "U1", rng), rand(mesh4, 1, "U1", rng)
    assert np.abs(wedge_bracket(u, v).values).max() == 0
    assert np.abs(interior_bracket(u, rand(mesh4, 2, "U1", rng)).values).max() == 0


def test_wedge_symmetry_on_one_forms(mesh4, rng):
    u, v = rand(mesh4, 1, "SU2", rng), rand(mesh4, 1, "SU2", rng)
    assert np.abs((wedge_bracket(u, v) - wedge_bracket(v, u)).values).max() <= 1e-13


def test_wedge_degree_error(mesh4, rng):
    with pytest.raises(InvalidDegree):
        wedge_bracket(rand(mesh4, 2, "SU2", rng), rand(mesh4, 2, "SU2", rng))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2))
def test_c9_adjointness(seed, p):
    rng = np.random.default_rng(seed)
    m = build_mesh(3)
    A, w, v = rand(m, 1, "SU2", rng), rand(m, p, "SU2", rng), rand(m, p + 1, "SU2", rng)
    lhs = inner_product(wedge_bracket(A, w), v)
    rhs = inner_product(w, interior_bracket(A, v))
    assert abs(lhs - rhs) <= 1e-12 * (abs(lhs) + norm(A) * norm(w) * norm(v))


def test_interior_of_constants(mesh4):
    u = const_form(mesh4, 1, (0,), E[0])
    v = const_form(mesh4, 1, (0,), E[1])
    r = interior_bracket(u, v).values
    a = mesh4.anchors(0)[0]
    inside = (a[:, 0] > 0) & (a[:, 0] < mesh4.n)
    assert np.allclose(r[inside], -E[2], atol=1e-14)
    # x-boundary vertices carry the half dual-cell weight of the transpose
    assert np.allclose(r[~inside], -0.5 * E[2], atol=1e-14)


def test_covariant_grad_flat(mesh4):
    w = Cochain(0, mesh4, np.full((mesh4.count(0), 3), 0.2))
    assert np.abs(covariant_grad(Cochain.zeros(mesh4, 1, "SU2"), w)).max() <= 1e-13
    f = Cochain(0, mesh4, mesh4.vertex_coords[:, :1].copy())
    g = covariant_grad(None, f)
    assert np.allclose(g[0], 1.0, atol=1e-12) and np.abs(g[1:]).max() <= 1e-12


@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_block_layout(mesh4, p):
    assert sum(mesh4.block_size(S) for S in direction_sets(p)) == mesh4.count(p)
