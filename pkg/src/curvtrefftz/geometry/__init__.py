"""Curves, meshes, mesh families and boundary grids."""

from .curves import (CircularArc, Curve, FunctionCurve, Line, SinePerturbedLine, curve_from_dict,
                     edge_eval, hyperbola_edge)
from .families import FAMILIES, domain_area, mesh_generate, on_domain_boundary
from .grid import BoundaryGrid, KressParams, boundary_grid, kress_map
from .mesh import Cell, Edge, Mesh, MeshBuilder, cell_area, corner_angles, mesh_validate

__all__ = [
    "BoundaryGrid", "Cell", "CircularArc", "Curve", "Edge", "FAMILIES", "FunctionCurve",
    "KressParams", "Line", "cell_area", "Mesh", "MeshBuilder", "SinePerturbedLine", "boundary_grid",
    "corner_angles", "curve_from_dict", "domain_area", "edge_eval", "hyperbola_edge",
    "kress_map", "mesh_generate", "mesh_validate", "on_domain_boundary",
]
