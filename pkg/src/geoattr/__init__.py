"""Path-based feature attributions along gradient-aware geodesic paths.

Core pieces:

- :mod:`geoattr.nets` — small ReLU/log-softmax classifier with exact
  input gradients (compiled or numpy kernel, see :mod:`geoattr.backend`).
- :mod:`geoattr.paths` — piecewise-linear path integration, attributions
  and axiom residuals.
- :mod:`geoattr.knn_graph` — geodesic shortest paths through a
  gradient-weighted kNN graph.
- :mod:`geoattr.energy` — variational straight-line refinement against a
  distance-minus-curvature energy.
- :mod:`geoattr.methods`, :mod:`geoattr.metrics`, :mod:`geoattr.harness`,
  :mod:`geoattr.cli` — baselines, faithfulness metrics and the
  half-moons experiment harness.
"""

from . import backend
from .datasets import Dataset, make_moons, split
from .energy import EnergyPathConfig, geodesic_ig_energy, optimize_path
from .knn_graph import GeodesicGraph, build_knn_graph, geodesic_ig_knn
from .nets import MlpModel, ScalarTarget, input_gradient, scalar_output, train
from .paths import Attribution, Path, path_attribution, straight_ig

__all__ = [
    "backend",
    "Dataset", "make_moons", "split",
    "EnergyPathConfig", "geodesic_ig_energy", "optimize_path",
    "GeodesicGraph", "build_knn_graph", "geodesic_ig_knn",
    "MlpModel", "ScalarTarget", "input_gradient", "scalar_output", "train",
    "Attribution", "Path", "path_attribution", "straight_ig",
]

__version__ = "0.1.0"
