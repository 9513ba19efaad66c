"""Translating-solution profiles by vanishing-viscosity regularization.

A translating solution of the quotient flow moves at a constant speed s
with a fixed profile: log(sigma_k/sigma_l)(D^2 u) - log f(x) = s with
u_nu = phi(x).  The pair (s, u) is found by solving a family of damped
problems whose right side f e^{eps u} pins the additive constant: each
one has a genuine steady state u_eps, reached here by running the flow
with its exponential damping rate eps.  As eps decreases, eps * u_eps
at a fixed reference point converges to s linearly in eps, so two
solves at eps and eps/2 give a Richardson value accurate to O(eps^2),
and u_eps minus its divergent constant part converges to the profile.

The module also carries the closed-form speed for k=1, l=0 (where the
operator is the Laplacian and the divergence theorem gives the speed as
log of a boundary/area integral ratio), a profile check that feeds the
eigenpair back into the time stepper, and the oscillation test that
backs uniqueness of profiles up to additive constants.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import discretize, flow, geometry

__all__ = [
    "EigenPair", "ConvergenceError", "solve_regularized", "s_epsilon",
    "solve_eigenpair", "laplace_speed_oracle", "check_translating_profile",
    "check_uniqueness_up_to_constant", "eigen_summary",
]


class ConvergenceError(RuntimeError):
    """A damped solve did not reach its steady state."""


@dataclass
class EigenPair:
    """Speed and profile of a translating solution, with the damping
    trace that produced them."""
    s: float
    u_ell: np.ndarray
    y0: tuple
    epsilon_trace: list
    residual: float
    status: str
    notes: list = field(default_factory=list)


def _require_x_only(spec):
    if spec.phi_depends_on_u:
        raise ValueError(
            "the damped solver needs a boundary flux phi(x) that does "
            "not depend on u")
    sl = spec._interior
    x_i, y_i = spec.grid.x[sl], spec.grid.y[sl]
    u_i = spec.u0_grid[sl]
    probe = np.max(np.abs(spec.f(x_i, y_i, u_i + 0.5)
                          - spec.f(x_i, y_i, u_i)))
    if probe > 1e-12:
        raise ValueError(
            "the damped solver needs a right side f(x) that does not "
            "depend on u; pass the translating-frame f")


def solve_regularized(spec, eps, u_init=None, tol=1e-8, t_max=400.0,
                      mean_shift=True, full_output=False):
    """Steady state of the flow with right side f(x) e^{eps u}.

    The damping makes log f strictly increasing in u at rate eps, so
    the flow contracts onto a unique steady state; the spatially
    constant error mode (the slow one for small eps) is removed in
    closed form at checkpoints when `mean_shift` is on.  `u_init` warm
    starts the run from a previous solve.
    """
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    _require_x_only(spec)
    base_f = spec.f

    def f_damped(x, y, u, _f=base_f, _e=eps):
        return _f(x, y, u) * np.exp(_e * np.asarray(u, dtype=float))

    u0 = spec.u0_grid if u_init is None else np.asarray(u_init, dtype=float)
    mspec = flow.ProblemSpec(spec.grid, spec.k, spec.l, f=f_damped,
                             phi=spec.phi, u0=u0, growth_rate=eps,
                             require_nonnegative_initial_speed=False,
                             cfl=spec.cfl)
    result = flow.run(mspec, mode="steady", t_max=t_max, tol_steady=tol,
                      mean_shift=mean_shift)
    if result.status != "steady":
        raise ConvergenceError(
            f"damped solve at eps = {eps:.6g} ended with status "
            f"{result.status!r} at t = {result.state.t:.6g}")
    if full_output:
        return result.state.u, result
    return result.state.u


def s_epsilon(grid, u_eps, u_ref, eps, y0, bound=None):
    """Speed extracted from one damped solve: eps times the gap between
    the damped solution and the reference data at the point y0.

    If `bound` is given and the value falls outside (-bound, bound),
    the model hypotheses are suspect; a warning is issued but the value
    is still returned.
    """
    val = eps * (discretize.interp_at(grid, u_eps, y0)
                 - discretize.interp_at(grid, u_ref, y0))
    if bound is not None and not -bound < val < bound:
        warnings.warn(
            f"extracted speed {val:.6g} lies outside the model bound "
            f"(-{bound:.6g}, {bound:.6g})", RuntimeWarning, stacklevel=2)
    return val


def _model_bound(spec):
    """A priori window for the speed: 1 + max|log f| + max|u0| +
    max|log quotient(D^2 u0)| on the initial data."""
    ev = flow._evaluate(spec, spec.u0_grid)
    sl = spec._interior
    fv = spec.f(spec.grid.x[sl], spec.grid.y[sl], spec.u0_grid[sl])
    return float(1.0 + np.max(np.abs(np.log(fv)))
                 + np.max(np.abs(spec.u0_grid))
                 + np.max(np.abs(np.log(ev.q))))


def solve_eigenpair(spec, eps0=1.0, n_halvings=6, y0=None, tol=1e-8,
                    t_max=400.0):
    """Speed and profile via a halving schedule of damped solves.

    Runs solve_regularized at eps0, eps0/2, ..., eps0/2^n_halvings,
    warm starting each solve from the previous one shifted by its own
    extracted constant.  The returned speed is the Richardson value
    2 s_J - s_{J-1}; the profile is the last solve minus its constant
    part, pinned to the initial data at y0.  A trace that stops
    contracting, or a profile residual above 10 h^2 (1 + |s|), flags
    the pair as a convergence failure.
    """
    grid = spec.grid
    if y0 is None:
        y0 = (0.0, 0.0)
    bound = _model_bound(spec)
    notes = []
    trace = []
    svals = []
    u = None
    u_init = None
    for j in range(n_halvings + 1):
        eps_j = eps0 * 2.0 ** (-j)
        u = solve_regularized(spec, eps_j, u_init=u_init, tol=tol,
                              t_max=t_max)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            s_j = s_epsilon(grid, u, spec.u0_grid, eps_j, y0, bound=bound)
        for w in caught:
            notes.append(str(w.message))
        trace.append((eps_j, s_j))
        svals.append(s_j)
        u_init = u + s_j / eps_j
    eps_last = trace[-1][0]
    s_hat = 2.0 * svals[-1] - svals[-2]
    u_ell = u - svals[-1] / eps_last
    u_ell += (discretize.interp_at(grid, spec.u0_grid, y0)
              - discretize.interp_at(grid, u_ell, y0))
    ev = flow._evaluate(spec, u_ell)
    residual = float(np.max(np.abs(ev.ut - s_hat)))
    status = "converged"
    tiny = 1e-10 * (1.0 + abs(s_hat))
    ds = np.diff(svals)
    tail = ds[-3:]
    for a, b in zip(tail[:-1], tail[1:]):
        if abs(b) > 0.8 * abs(a) + tiny:
            status = "convergence-failure"
            notes.append("the damping trace is not contracting")
            break
        if abs(a) > 10 * tiny and abs(b) > 10 * tiny and (a > 0) != (b > 0):
            status = "convergence-failure"
            notes.append("the damping trace changes direction")
            break
    resid_bound = 10.0 * geometry.mesh_size(grid) ** 2 * (1.0 + abs(s_hat))
    if residual > resid_bound:
        status = "convergence-failure"
        notes.append(f"profile residual {residual:.3g} exceeds "
                     f"{resid_bound:.3g}")
    return EigenPair(s=s_hat, u_ell=u_ell, y0=tuple(y0),
                     epsilon_trace=trace, residual=residual,
                     status=status, notes=notes)


def laplace_speed_oracle(grid, f, phi, panels=4096):
    """Closed-form speed for k=1, l=0: log of the boundary integral of
    phi over the area integral of f (both must be positive)."""
    f_fn = flow._as_field(f, "f")
    phi_fn = flow._as_field(phi, "phi")
    fv = f_fn(grid.x, grid.y, np.zeros(grid.shape))
    area_int = float(np.sum(geometry.area_weights(grid) * fv))

    def g(x, y):
        x = np.asarray(x, dtype=float)
        return phi_fn(x, y, np.zeros(x.shape))

    bnd_int = geometry.boundary_integral(grid.domain, g, panels=panels)
    if area_int <= 0.0 or bnd_int <= 0.0:
        raise ValueError(
            f"speed needs positive integrals; got boundary {bnd_int:.6g} "
            f"and area {area_int:.6g}")
    return math.log(bnd_int / area_int)


def check_translating_profile(spec, pair, t_max=1.0, checkpoint_every=50):
    """Feed the profile back into the flow for a unit of time; returns
    the worst deviation of u_t from the speed over the run."""
    pspec = flow.ProblemSpec(spec.grid, spec.k, spec.l, f=spec.f,
                             phi=spec.phi, u0=pair.u_ell,
                             require_nonnegative_initial_speed=False,
                             cfl=spec.cfl)
    result = flow.run(pspec, mode="translating", t_max=t_max,
                      tol_trans=0.0, checkpoint_every=checkpoint_every)
    return max(max(abs(r.max_ut - pair.s), abs(r.min_ut - pair.s))
               for r in result.records)


def check_uniqueness_up_to_constant(u_a, u_b):
    """Oscillation of the difference of two profiles; zero exactly when
    they agree up to an additive constant."""
    d = np.asarray(u_a, dtype=float) - np.asarray(u_b, dtype=float)
    return float(np.max(d) - np.min(d))


def eigen_summary(pair, oracle_s=None):
    """JSON-ready summary of an eigenpair solve."""
    return {
        "s_hat": pair.s,
        "epsilon_trace": [[e, s] for e, s in pair.epsilon_trace],
        "residual": pair.residual,
        "oracle_s": oracle_s,
        "status": pair.status,
        "notes": list(pair.notes),
    }
