"""Minimum reconfiguration probability routing (MRPR) for all-optical WDM
networks: reliability-weighted routing, scalar Kalman statistics, and a
discrete-event simulator."""

from mrpr.kernels import BACKEND as KERNEL_BACKEND
from mrpr.reliability import (
    EdgeReliability,
    RepackingModel,
    RepackingTable,
    edge_cost,
    erlang_b,
    failure_probability,
    path_reconfig_probability,
)
from mrpr.routing import LightpathAssignment, LightpathRequest, mrpr_route, shortest_path
from mrpr.topology import Topology, default_topology, load_topology

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "EdgeReliability",
    "LightpathAssignment",
    "LightpathRequest",
    "RepackingModel",
    "RepackingTable",
    "Topology",
    "default_topology",
    "edge_cost",
    "erlang_b",
    "failure_probability",
    "load_topology",
    "mrpr_route",
    "path_reconfig_probability",
    "shortest_path",
]
