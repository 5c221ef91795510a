"""Motion from the reduced-action field.

The dispersion relation xdot * P = 2(E - V) turns a field into a velocity
law; this module integrates trajectories from it (adaptive fifth-order with
dense output), evaluates times of flight by quadrature, provides the free
particle's closed-form trajectory with analytic derivatives, the
first-integral residual of the quantum Newton law, the quantum coordinate,
the quantum version of the Jacobi theorem, and Floyd's free trajectory for
comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import (
    DomainError,
    NumericError,
    ParameterError,
    SingularityError,
)
from .reduced_action import ReducedActionField
from .schrodinger import CSV_FLOAT_FORMAT, NATURAL_UNITS, PotentialSpec, UnitSystem

_MODULE = "dynamics"

#: |E - V| below this is treated as an exact turning point.
TURNING_POINT_TOL = 1e-12


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    x: float
    xdot: float


@dataclass(frozen=True)
class QuantumLagrangianState:
    """Kinetic-term deformation f and the quantum Lagrangian/Hamiltonian."""

    f_value: float
    lagrangian: float
    hamiltonian: float


@dataclass
class Trajectory:
    """Dense-output trajectory with termination metadata.

    status is one of "completed", "exited_grid", "turning_point_asymptotic".
    """

    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    status: str
    exit_time: float | None
    exit_position: float | None
    sol: object  # scipy OdeSolution (dense output)
    field: ReducedActionField
    spec: PotentialSpec

    def samples(self) -> list[TrajectorySample]:
        return [TrajectorySample(float(t), float(x), float(v))
                for t, x, v in zip(self.t, self.x, self.xdot)]

    def position_at(self, t):
        return self.sol(np.asarray(t))[0] if self.sol is not None else None


def f_function(field: ReducedActionField, spec: PotentialSpec, x):
    """Kinetic deformation f = P^2 / (2m (E - V)); positive in classically
    allowed regions, negative in forbidden ones."""
    m = field.units.mass
    e = field.energy
    v = spec.value(x, field.units)
    gap = e - v
    if np.any(np.abs(gap) < TURNING_POINT_TOL):
        bad = np.atleast_1d(np.asarray(x))[np.atleast_1d(np.abs(gap)) < TURNING_POINT_TOL]
        raise SingularityError("evaluation at a classical turning point",
                               module=_MODULE, op="f_function", x=float(bad.flat[0]))
    return field.p_at(x)**2 / (2.0 * m * gap)


def velocity(field: ReducedActionField, spec: PotentialSpec, x):
    """Dispersion-relation velocity xdot = 2 (E - V) / P; exactly zero at a
    classical turning point."""
    v = spec.value(x, field.units)
    return 2.0 * (field.energy - v) / field.p_at(x)


def integrate_trajectory(field: ReducedActionField, spec: PotentialSpec,
                         x0: float, t_span, tol: float = 1e-9,
                         t_eval=None, n_samples: int = 200) -> Trajectory:
    """Integrate dx/dt = 2 (E - V(x)) / P(x) with RK45 and dense output.

    Halts cleanly when the trajectory reaches the grid edge (reporting the
    exit time) or when it stalls on the asymptotic approach to a turning
    point (velocity collapse; the flow never crosses a turning point).
    """
    grid = field.grid
    if not (grid.x_min < x0 < grid.x_max):
        raise DomainError("x0 must lie in the grid interior",
                          module=_MODULE, op="integrate_trajectory", x=x0)
    t0, t1 = float(t_span[0]), float(t_span[1])
    margin = 2.0 * grid.spacing
    # xdot is exactly proportional to E - V; once that gap collapses to the
    # integrator's own resolution the approach to the turning point can no
    # longer be resolved and is reported instead of integrated further
    gap_floor = 10.0 * tol * max(abs(field.energy), 1.0)

    def rhs(t, y):
        return [velocity(field, spec, float(y[0]))]

    def hit_edge(t, y):
        return min(y[0] - (grid.x_min + margin), (grid.x_max - margin) - y[0])
    hit_edge.terminal = True
    hit_edge.direction = -1

    def stalled(t, y):
        return abs(field.energy - spec.value(float(y[0]), field.units)) \
            - gap_floor
    stalled.terminal = True
    stalled.direction = -1

    res = solve_ivp(rhs, (t0, t1), [float(x0)], method="RK45",
                    rtol=tol, atol=tol * 1e-3, dense_output=True,
                    events=(hit_edge, stalled))
    if not res.success and res.status != 1:
        raise NumericError(f"trajectory integration failed: {res.message}",
                           module=_MODULE, op="integrate_trajectory", x=x0)

    status, exit_time, exit_position = "completed", None, None
    t_end = res.t[-1]
    if res.status == 1:
        if len(res.t_events[0]):
            status = "exited_grid"
            exit_time = float(res.t_events[0][0])
            exit_position = float(res.y_events[0][0][0])
            t_end = exit_time
        elif len(res.t_events[1]):
            status = "turning_point_asymptotic"
            exit_time = float(res.t_events[1][0])
            exit_position = float(res.y_events[1][0][0])
            t_end = exit_time

    if t_eval is None:
        t_eval = np.linspace(t0, t_end, n_samples)
    else:
        t_eval = np.asarray(t_eval, dtype=float)
        t_eval = t_eval[(t_eval >= min(t0, t_end)) & (t_eval <= max(t0, t_end))]
    xs = res.sol(t_eval)[0]
    vs = np.array([velocity(field, spec, float(xx)) for xx in xs])
    return Trajectory(t=t_eval, x=xs, xdot=vs, status=status,
                      exit_time=exit_time, exit_position=exit_position,
                      sol=res.sol, field=field, spec=spec)


def time_of_flight(field: ReducedActionField, spec: PotentialSpec,
                   x0: float, x1: float, tol: float = 1e-11) -> float:
    """Adaptive quadrature of dt = P dx / (2 (E - V)) between x0 and x1.

    A classical turning point strictly inside the interval makes the
    integrand one-signed-singular; a turning point at an endpoint gives a
    1/(E-V) divergence that is not integrable (infinite arrival time), so
    both are rejected.
    """
    e = field.energy
    xs = np.linspace(x0, x1, 257)
    gap = e - spec.value(xs, field.units)
    if abs(gap[0]) < 1e-9 or abs(gap[-1]) < 1e-9:
        raise SingularityError(
            "turning point at an interval endpoint: time of flight diverges",
            module=_MODULE, op="time_of_flight", x=x0 if abs(gap[0]) < 1e-9 else x1)
    if np.any(gap[1:-1] * gap[0] <= 0.0):
        idx = int(np.argmax(gap[1:-1] * gap[0] <= 0.0)) + 1
        raise SingularityError("classical turning point inside the interval",
                               module=_MODULE, op="time_of_flight",
                               x=float(xs[idx]))

    def integrand(x):
        return field.p_at(x) / (2.0 * (e - spec.value(x, field.units)))

    val, _ = quad(integrand, x0, x1, epsabs=tol, epsrel=tol, limit=500)
    return val


# ----------------------------------------------------------------------
# Free-particle closed form
# ----------------------------------------------------------------------

def free_particle_closed_form(energy: float, a_const: float, b_const: float,
                              x0: float, t0: float, t,
                              units: UnitSystem = NATURAL_UNITS):
    """Closed-form free trajectory
    x(t) = (hbar/sqrt(2mE)) arctan(A tan(2E(t-t0)/hbar) + B) + x0,
    continued monotonically across tan branches (adds pi*hbar/sqrt(2mE)
    per half-period)."""
    if a_const == 0.0:
        raise ParameterError("A = 0 degenerates to a constant trajectory",
                             module=_MODULE, op="free_particle_closed_form")
    if energy <= 0.0:
        raise ParameterError("free particle requires E > 0",
                             module=_MODULE, op="free_particle_closed_form")
    hbar, m = units.hbar, units.mass
    k = math.sqrt(2.0 * m * energy)
    tau = 2.0 * energy * (np.asarray(t, dtype=float) - t0) / hbar
    n = np.floor(tau / math.pi + 0.5)
    sgn = math.copysign(1.0, a_const)
    # tan evaluated on the branch-reduced argument keeps the unwrap counter
    # and the arctan in step even exactly at a pole
    tau_red = tau - math.pi * n
    core = np.arctan(a_const * np.tan(tau_red) + b_const)
    out = (hbar / k) * (core + sgn * math.pi * n) + x0
    return out if out.ndim else float(out)


def closed_form_derivatives(energy: float, a_const: float, b_const: float,
                            t0: float, t, units: UnitSystem = NATURAL_UNITS):
    """Analytic (xdot, xddot, xdddot) of the closed-form free trajectory."""
    hbar, m = units.hbar, units.mass
    k = math.sqrt(2.0 * m * energy)
    tau = 2.0 * energy * (np.asarray(t, dtype=float) - t0) / hbar
    wrate = 2.0 * energy / hbar
    tn = np.tan(tau)
    s2 = 1.0 + tn**2
    y = a_const * tn + b_const
    yp = a_const * s2
    ypp = 2.0 * a_const * tn * s2
    yppp = 2.0 * a_const * s2 * (3.0 * s2 - 2.0)
    den = 1.0 + y**2
    g1 = yp / den
    g2 = ypp / den - 2.0 * y * yp**2 / den**2
    g3 = (yppp / den - 6.0 * y * yp * ypp / den**2
          - 2.0 * yp**3 / den**2 + 8.0 * y**2 * yp**3 / den**3)
    c = hbar / k
    return c * wrate * g1, c * wrate**2 * g2, c * wrate**3 * g3


def dispersion_free_trajectory(energy: float, a: float, b: float, c: float, x,
                               units: UnitSystem = NATURAL_UNITS):
    """t - t0 = S0(x) / (2E) for the free particle in Floyd-form
    parameters: the trajectory implied by S0 = 2E(t - t0), i.e. by the
    dispersion relation (unlike Floyd's classical-Jacobi route)."""
    hbar, m = units.hbar, units.mass
    s = math.sqrt(a * b - c**2 / 4.0)
    k = math.sqrt(2.0 * m * energy) / hbar
    u = k * np.asarray(x, dtype=float)
    n = np.floor(u / math.pi + 0.5)
    u_red = u - math.pi * n
    core = np.arctan((b * np.tan(u_red) + 0.5 * c) / s)
    out = (hbar / (2.0 * energy)) * (core + math.pi * n)
    return out if out.ndim else float(out)


def floyd_free_trajectory(energy: float, a: float, b: float, c: float, x,
                          units: UnitSystem = NATURAL_UNITS):
    """Floyd's free trajectory from the classical Jacobi theorem
    t - t0 = dS0/dE at fixed x:

    t - t0 = 2 sqrt(ab - c^2/4) sqrt(m/2E) x
             / (a + b + (a - b) cos(2 sqrt(2mE) x / hbar) + c sin(...)).

    The denominator is written in expanded form; it equals the
    amplitude-phase form with phase -atan2(c, a - b), which is the unique
    branch for which the formula agrees with dS0/dE for every admissible
    (a, b, c). (It is exactly x times the slope of the S0/(2E) trajectory.)
    """
    hbar, m = units.hbar, units.mass
    s = math.sqrt(a * b - c**2 / 4.0)
    arg = 2.0 * math.sqrt(2.0 * m * energy) * np.asarray(x, dtype=float) / hbar
    den = a + b + (a - b) * np.cos(arg) + c * np.sin(arg)
    out = 2.0 * s * math.sqrt(m / (2.0 * energy)) * np.asarray(x, dtype=float) / den
    return out if out.ndim else float(out)


# ----------------------------------------------------------------------
# First integral of the quantum Newton law
# ----------------------------------------------------------------------

def fiqnl_residual(spec: PotentialSpec, energy: float, x, xdot, xddot,
                   xdddot, units: UnitSystem = NATURAL_UNITS):
    """Residual of the fourth-degree-in-(E-V) first integral:

    (E-V)^4 - (m xdot^2/2)(E-V)^3
      + (hbar^2/8) [ (3/2)(xddot/xdot)^2 - xdddot/xdot ] (E-V)^2
      - (hbar^2/8) [ xdot^2 V'' + xddot V' ] (E-V)
      - (3 hbar^2/16) (xdot V')^2.
    """
    xdot = np.asarray(xdot, dtype=float)
    if np.any(xdot == 0.0):
        raise SingularityError("xdot = 0 in the first-integral residual",
                               module=_MODULE, op="fiqnl_residual")
    hbar, m = units.hbar, units.mass
    v = spec.value(x, units)
    dv = spec.derivative(x, units)
    d2v = spec.second_derivative(x, units)
    gap = energy - v
    return (gap**4 - (m * xdot**2 / 2.0) * gap**3
            + (hbar**2 / 8.0) * (1.5 * (xddot / xdot)**2 - xdddot / xdot) * gap**2
            - (hbar**2 / 8.0) * (xdot**2 * d2v + xddot * dv) * gap
            - (3.0 * hbar**2 / 16.0) * (xdot * dv)**2)


def fiqnl_residual_along(traj: Trajectory, delta: float = None):
    """FIQNL residual at the trajectory's sample times with xdot, xddot,
    xdddot obtained by fourth-order differencing of the dense output.

    Rows whose seven-point stencil would leave the integrated span are
    evaluated at the nearest stencil-safe time instead (the dense output
    must not be extrapolated). Returns (absolute residuals, residuals
    relative to E^4).
    """
    field, spec = traj.field, traj.spec
    tspan = traj.t[-1] - traj.t[0]
    if delta is None:
        delta = max(abs(tspan) * 2e-3, 1e-6)
    t_lo = min(traj.t[0], traj.t[-1]) + 3.0 * delta
    t_hi = max(traj.t[0], traj.t[-1]) - 3.0 * delta
    res = np.empty(traj.t.size)
    stencil = np.array([-3, -2, -1, 0, 1, 2, 3], dtype=float)
    for j, tj in enumerate(traj.t):
        ts = min(max(tj, t_lo), t_hi) + stencil * delta
        xs = traj.sol(ts)[0]
        xd = (-xs[0] / 60 + 3 * xs[1] / 20 - 3 * xs[2] / 4 + 3 * xs[4] / 4
              - 3 * xs[5] / 20 + xs[6] / 60) / delta
        xdd = (xs[0] / 90 - 3 * xs[1] / 20 + 3 * xs[2] / 2 - 49 * xs[3] / 18
               + 3 * xs[4] / 2 - 3 * xs[5] / 20 + xs[6] / 90) / delta**2
        xddd = (xs[0] / 8 - xs[1] + 13 * xs[2] / 8 - 13 * xs[4] / 8
                + xs[5] - xs[6] / 8) / delta**3
        res[j] = fiqnl_residual(spec, field.energy, float(xs[3]), xd, xdd,
                                xddd, field.units)
    return res, res / field.energy**4


# ----------------------------------------------------------------------
# Quantum coordinate and quantum Jacobi theorem
# ----------------------------------------------------------------------

def quantum_coordinate(field: ReducedActionField, spec: PotentialSpec,
                       x_ref: float, x: float, tol: float = 1e-11) -> float:
    """Deformed coordinate x_hat = integral of P/sqrt(2m(E-V)) from x_ref.

    The interval must lie inside one classically allowed region (the
    coordinate turns imaginary in forbidden regions, which is out of scope).
    """
    e = field.energy
    m = field.units.mass
    lo, hi = (x_ref, x) if x_ref <= x else (x, x_ref)
    xs = np.linspace(lo, hi, 257)
    if np.any(e - spec.value(xs, field.units) <= 0.0):
        raise DomainError(
            "interval touches a classically forbidden region; the quantum "
            "coordinate is real only in allowed regions",
            module=_MODULE, op="quantum_coordinate", x=float(lo))

    def integrand(xx):
        return field.p_at(xx) / math.sqrt(2.0 * m * (e - spec.value(xx, field.units)))

    val, _ = quad(integrand, x_ref, x, epsabs=tol, epsrel=tol, limit=500)
    return val


def quantum_jacobi_time(field_builder, spec: PotentialSpec, x_hat_target: float,
                        energy: float, delta_e: float = None,
                        x_ref: float = None, search_window=None) -> float:
    """Arrival time from the quantum Jacobi theorem: the E-derivative of
    S0 at fixed quantum coordinate, by centered differencing over fields
    built at E +- delta_e with the same microstate parameters.

    field_builder(E) must return a ReducedActionField with consistent
    parameters and conventions; S0 is measured from x_ref (the origin of
    the quantum coordinate), which fixes the common time-origin convention.
    """
    if delta_e is None:
        delta_e = 1e-5 * energy
    sample = field_builder(energy)
    grid = sample.grid
    if x_ref is None:
        x_ref = grid.x_min + 0.1 * (grid.x_max - grid.x_min)
    if search_window is None:
        search_window = (grid.x_min + 2 * grid.spacing,
                         grid.x_max - 2 * grid.spacing)

    def locate(field):
        def g(xx):
            return quantum_coordinate(field, spec, x_ref, xx) - x_hat_target
        lo, hi = search_window
        glo, ghi = g(lo), g(hi)
        if glo * ghi > 0.0:
            raise DomainError(
                f"x_hat target {x_hat_target} not bracketed in {search_window}",
                module=_MODULE, op="quantum_jacobi_time")
        return brentq(g, lo, hi, xtol=1e-13, rtol=8.9e-16)

    f_plus = field_builder(energy + delta_e)
    f_minus = field_builder(energy - delta_e)
    x_plus = locate(f_plus)
    x_minus = locate(f_minus)
    s_plus = f_plus.s0_at(x_plus) - f_plus.s0_at(x_ref)
    s_minus = f_minus.s0_at(x_minus) - f_minus.s0_at(x_ref)
    return float((s_plus - s_minus) / (2.0 * delta_e))


def quantum_lagrangian_state(field: ReducedActionField, spec: PotentialSpec,
                             x: float, xdot: float) -> QuantumLagrangianState:
    """f, L_q = (m/2) xdot^2 f - V and H_q = (m/2) xdot^2 f + V at a point;
    along a dispersion-relation trajectory H_q equals E."""
    m = field.units.mass
    f = f_function(field, spec, x)
    v = spec.value(x, field.units)
    kinetic = 0.5 * m * xdot**2 * f
    return QuantumLagrangianState(f_value=float(f),
                                  lagrangian=float(kinetic - v),
                                  hamiltonian=float(kinetic + v))


def trajectory_to_csv(traj: Trajectory, path, fiqnl_delta: float = None):
    """Write t,x,xdot,p,f,hq_minus_e,fiqnl_residual_rel for a trajectory."""
    field, spec = traj.field, traj.spec
    p = field.p_at(traj.x)
    f = np.array([f_function(field, spec, float(xx)) for xx in traj.x])
    hq = 0.5 * field.units.mass * traj.xdot**2 * f + spec.value(traj.x, field.units)
    _, rel = fiqnl_residual_along(traj, delta=fiqnl_delta)
    data = np.column_stack([traj.t, traj.x, traj.xdot, p, f,
                            hq - field.energy, rel])
    np.savetxt(path, data, delimiter=",", fmt=CSV_FLOAT_FORMAT,
               header="t,x,xdot,p,f,hq_minus_e,fiqnl_residual_rel", comments="")
