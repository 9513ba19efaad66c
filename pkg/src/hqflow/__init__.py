"""Finite-difference laboratory for Neumann problems of parabolic
Hessian quotient flows u_t = log(sigma_k/sigma_l(D^2 u)) - log f(x, u)
on convex planar domains."""

__version__ = "0.1.0"
