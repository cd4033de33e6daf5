"""conedeg: numerics for cone-constrained degenerate elliptic equations.

Submodules:
    matcone    symmetric matrices, sigma_k polynomials, matrix cones
    operators  second-order jets, conformal Hessian operators, Kelvin transforms
    radial     radial profiles and the explicit counterexample gallery
    envelopes  sup/inf-convolution envelopes on grids
    viscosity  grid-level viscosity certification and touching experiments
    perron     monotone iteration between sub- and supersolutions
    cli        command-line entry point
"""

__version__ = "0.1.0"
