"""Hybrid Trefftz and Wachspress polygonal finite elements for 2D elasticity."""
__version__ = "0.1.0"
