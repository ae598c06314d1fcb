"""Short homology loops, pants decompositions and hyperbolic bound calculators on triangle meshes."""
from .errors import SyskitError
from .graph import WeightedGraph, bst_bound, graph_systole, greedy_systolic_sequence
from .mesh import TriMesh, load_mesh, save_mesh
from .nerve import short_homology_loops, short_independent_system
from .pants import (extract_independent_from_pants, genus_surface_decomposition,
                    lift_through_double_cover, marked_sphere_decomposition, reeb_graph,
                    reeb_pants_decomposition, sweep_width)

__all__ = [
    "SyskitError", "WeightedGraph", "bst_bound", "graph_systole", "greedy_systolic_sequence",
    "TriMesh", "load_mesh", "save_mesh", "short_homology_loops", "short_independent_system",
    "extract_independent_from_pants", "genus_surface_decomposition", "lift_through_double_cover",
    "marked_sphere_decomposition", "reeb_graph", "reeb_pants_decomposition", "sweep_width",
]
__version__ = "0.1.0"
