"""Numerical toolkit for equidistribution on the modular surface.

Submodules
----------
specfun    special functions (zeta, L-functions, K-Bessel, eta)
geometry   hyperbolic geometry of the upper half-plane and SL2(Z) reduction
kernels    ball kernels and their Selberg/Harish-Chandra transforms
autoforms  Eisenstein series, truncation, Maass forms
quadinv    binary quadratic forms, class groups, Heegner points, geodesics
equilab    ball-average variance estimators
cli        command line front end
"""

__version__ = "0.1.0"
