import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ymflow import algebra, snapshot
from ymflow.connection import GaugeField
from ymflow.errors import ChecksumMismatch, SchemaMismatch
from ymflow.flow import FlowState
from ymflow.forms import Cochain
from ymflow.mesh import build_mesh

settings_ = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


def make_state(n, group, seed, with_gauge):
    m = build_mesh(n)
    rng = np.random.default_rng(seed)
    dim = algebra.get_kind(group).dim
    A = Cochain(1, m, rng.standard_normal((m.count(1), dim)) * 10.0 ** rng.integers(-300, 300))
    g = GaugeField(m, algebra.random_group(group, rng, m.nv)) if with_gauge else None
    return FlowState(t=float(rng.uniform()), A=A, step=int(rng.integers(0, 10 ** 6)), g=g, dissipation=float(rng.uniform()))


@settings_
@given(st.integers(2, 5), st.sampled_from(["U1", "SU2"]), st.integers(0, 2**32 - 1), st.booleans())
def test_roundtrip_bit_identical(tmp_path, n, group, seed, with_gauge):
    s = make_state(n, group, seed, with_gauge)
    p = snapshot.save(tmp_path / "s.snap", s, "Neumann")
    back, header = snapshot.load(p)
    assert back.A.values.tobytes() == s.A.values.tobytes()
    assert (back.t, back.step, back.dissipation) == (s.t, s.step, s.dissipation)
    assert header["group"] == group and header["n"] == n and header["bc"] == "Neumann"
    if with_gauge:
        assert back.g.g.tobytes() == s.g.g.tobytes()
    else:
        assert back.g is None
    p2 = snapshot.save(tmp_path / "t.snap", back, "Neumann")
    assert p2.read_bytes() == p.read_bytes()


@settings_
@given(st.integers(1, 400))
def test_truncation_detected(tmp_path, cut):
    s = make_state(3, "SU2", 0, True)
    p = snapshot.save(tmp_path / "s.snap", s, "Dirichlet")
    raw = p.read_bytes()
    q = tmp_path / "cut.snap"
    q.write_bytes(raw[: len(raw) - cut])
    with pytest.raises((ChecksumMismatch, SchemaMismatch)):
        snapshot.load(q)


def test_payload_corruption(tmp_path):
    p = snapshot.save(tmp_path / "s.snap", make_state(3, "SU2", 1, False), "Dirichlet")
    raw = bytearray(p.read_bytes())
    raw[-5] ^= 0x01
    p.write_bytes(bytes(raw))
    with pytest.raises(ChecksumMismatch):
        snapshot.load(p)


def test_schema_mismatch(tmp_path):
    p = snapshot.save(tmp_path / "s.snap", make_state(2, "U1", 2, False), "Dirichlet")
    raw = p.read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl])
    header["schema_version"] = 99
    p.write_bytes(json.dumps(header).encode() + raw[nl:])
    with pytest.raises(SchemaMismatch):
        snapshot.load(p)
    p.write_bytes(b"not json\n" + raw[nl + 1 :])
    with pytest.raises(SchemaMismatch):
        snapshot.load(p)


def test_header_fields(tmp_path):
    s = make_state(4, "SU2", 3, False)
    header, body = snapshot.read_header(snapshot.save(tmp_path / "s.snap", s, "Dirichlet"))
    for k in ("schema_version", "group", "n", "L", "h", "bc", "t", "layout"):
        assert k in header
    assert header["h"] == 0.25
    # documented order: the flat cochain layout, little-endian float64
    assert np.array_equal(np.frombuffer(body, "<f8").reshape(s.A.values.shape), s.A.values)
