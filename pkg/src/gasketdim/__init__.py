"""Certified interval enclosures of the Apollonian gasket dimension.

The packing's limit set is the attractor of a countable conformal
iterated function system; its Hausdorff dimension is the unique zero of
a spectral pressure function.  This package discretizes the associated
transfer operator on a tensor Chebyshev grid, accelerates the infinite
sums over the parabolic index with contour-integral corrections, and
certifies an eigenvalue enclosure with directed-rounding interval
arithmetic, yielding mathematically rigorous dimension bounds.
"""

__version__ = "0.1.0"
