"""Binary field snapshots: one JSON header line followed by a little-endian float64 payload.

Payload order: the connection values in the flat cochain layout (direction
sets x < y < z, each block k-j-i row-major with i fastest, algebra
components innermost), then, if present, the gauge field as interleaved
(real, imag) pairs of its (N_v, m, m) matrices.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import algebra
from .connection import GaugeField
from .errors import ChecksumMismatch, SchemaMismatch
from .flow import FlowState
from .forms import Cochain
from .mesh import build_mesh

SCHEMA_VERSION = 1
LAYOUT = "degree-major; direction sets x<y<z; anchors k-j-i row-major (i fastest); algebra components last"
_REQUIRED = ("schema_version", "group", "n", "L", "h", "bc", "t", "step", "degree", "layout", "nbytes", "sha256")


def _payload(state: FlowState) -> bytes:
    parts = [np.ascontiguousarray(state.A.values, dtype="<f8").tobytes()]
    if state.g is not None:
        g = np.ascontiguousarray(state.g.g)
        parts.append(np.stack([g.real, g.imag], axis=-1).astype("<f8").tobytes())
    return b"".join(parts)


def save(path, state: FlowState, bc: str, extra: dict | None = None) -> Path:
    path = Path(path)
    mesh = state.A.mesh
    body = _payload(state)
    header = {
        "schema_version": SCHEMA_VERSION,
        "group": state.A.kind.tag,
        "n": mesh.n,
        "L": mesh.L,
        "h": mesh.h,
        "bc": bc,
        "t": state.t,
        "step": state.step,
        "dissipation": state.dissipation,
        "degree": state.A.p,
        "layout": LAYOUT,
        "shape": list(state.A.values.shape),
        "has_gauge": state.g is not None,
        "nbytes": len(body),
        "sha256": hashlib.sha256(body).hexdigest(),
    }
    if extra:
        header["extra"] = extra
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(body)
    return path


def read_header(path) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ChecksumMismatch("snapshot has no header terminator")
    try:
        header = json.loads(raw[:nl].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaMismatch(f"unreadable snapshot header: {exc}") from None
    missing = [k for k in _REQUIRED if k not in header]
    if missing:
        raise SchemaMismatch(f"snapshot header lacks {missing}")
    if header["schema_version"] != SCHEMA_VERSION:
        raise SchemaMismatch(f"schema version {header['schema_version']} != {SCHEMA_VERSION}")
    if header["layout"] != LAYOUT:
        raise SchemaMismatch("unknown field layout")
    body = raw[nl + 1 :]
    if len(body) != header["nbytes"] or hashlib.sha256(body).hexdigest() != header["sha256"]:
        raise ChecksumMismatch(f"payload of {path} fails its length/SHA-256 check")
    return header, body


def load(path) -> tuple[FlowState, dict]:
    header, body = read_header(path)
    kind = algebra.get_kind(header["group"])
    mesh = build_mesh(int(header["n"]), float(header["L"]))
    N = mesh.count(int(header["degree"]))
    na = N * kind.dim * 8
    if list(header.get("shape", [N, kind.dim])) != [N, kind.dim] or len(body) < na:
        raise SchemaMismatch("payload shape does not match the mesh")
    vals = np.frombuffer(body[:na], dtype="<f8").reshape(N, kind.dim).astype(float)
    g = None
    if header.get("has_gauge"):
        m = kind.mat_size
        arr = np.frombuffer(body[na:], dtype="<f8").reshape(mesh.nv, m, m, 2)
        g = GaugeField(mesh, arr[..., 0] + 1j * arr[..., 1])
    state = FlowState(
        t=float(header["t"]),
        A=Cochain(int(header["degree"]), mesh, vals),
        step=int(header["step"]),
        g=g,
        dissipation=float(header.get("dissipation", 0.0)),
    )
    return state, header
