"""triblend: blended high/low-order scheme for 2D hyperbolic conservation laws.

The solver evolves, per triangle, a cell average plus globally continuous
point values at vertices and edge midpoints (a P2-plus-bubble element).
A monolithic convex blend between a third-order residual and an invariant-
domain-preserving first-order residual gives bound preservation without
destroying accuracy in smooth regions.
"""

__version__ = "0.1.0"
