"""Adaptive consensus sensor network with coverage control."""

import json

from ._core import (
    ApnetError,
    Graph,
    activation_matrices,
    centroids,
    coverage_control,
    coverage_cost,
    coverage_step,
    figure1_edges,
    grid_edges,
    nominal_rates,
    proj,
    regularized_laplacian,
    sensing_kernel,
    theorem1_bound,
    theorem2_bounds,
    voronoi_partition,
)
from . import _core

__all__ = [
    "ApnetError",
    "Graph",
    "Simulation",
    "activation_matrices",
    "centroids",
    "coverage_control",
    "coverage_cost",
    "coverage_step",
    "default_scenario",
    "figure1_edges",
    "grid_edges",
    "load_scenario",
    "nominal_rates",
    "proj",
    "regularized_laplacian",
    "run",
    "sensing_kernel",
    "theorem1_bound",
    "theorem2_bounds",
    "validate_scenario",
    "voronoi_partition",
]


def default_scenario():
    """The 25-agent field experiment as a scenario dict."""
    return json.loads(_core.default_scenario_json())


def validate_scenario(scenario):
    """Validated scenario with every default filled in. Raises ApnetError."""
    return json.loads(_core.validate_scenario_json(json.dumps(scenario)))


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return validate_scenario(json.load(fh))


class Simulation(_core.Simulation):
    """Simulation built from a scenario dict."""

    def __init__(self, scenario):
        super().__init__(json.dumps(scenario))

    def report(self, dwell_radius=2.0):
        return json.loads(self.report_json(dwell_radius))


def run(scenario):
    """Runs a scenario to completion and returns (trace arrays, report dict)."""
    sim = Simulation(scenario)
    sim.run()
    return sim.trace(), sim.report()
