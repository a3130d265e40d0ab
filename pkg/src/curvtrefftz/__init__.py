"""Trefftz-type finite elements on curvilinear polygonal meshes with boundary-only integration."""

__version__ = "0.1.0"
