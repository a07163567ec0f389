"""Discrete Yang-Mills heat flow on a cube: cochain complex, covariant calculus, flows and diagnostics."""

__version__ = "0.1.0"

from .algebra import SU2, U1, get_kind
from .connection import GaugeField, cov_codiff, cov_d, curvature, gauge_transform, normal_gauge, pure_gauge
from .errors import YMFlowError
from .flow import FlowConfig, FlowState, Trajectory, donaldson_sadun, integrate, marini_pipeline
from .forms import BcKind, Cochain, codiff, d, inner_product, norm, project_bc
from .mesh import CubeMesh, build_mesh

__all__ = [
    "SU2",
    "U1",
    "get_kind",
    "GaugeField",
    "cov_codiff",
    "cov_d",
    "curvature",
    "gauge_transform",
    "normal_gauge",
    "pure_gauge",
    "YMFlowError",
    "FlowConfig",
    "FlowState",
    "Trajectory",
    "donaldson_sadun",
    "integrate",
    "marini_pipeline",
    "BcKind",
    "Cochain",
    "codiff",
    "d",
    "inner_product",
    "norm",
    "project_bc",
    "CubeMesh",
    "build_mesh",
    "__version__",
]
