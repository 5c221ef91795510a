"""Stationary 1-D Schrodinger machinery.

Potentials, a fixed-step Numerov integrator that carries the first
derivative, independent solution pairs with controlled Wronskian, node
counting, and bound-state search by two-sided shooting with bisection.

Natural units hbar = m = 1 are the default; both constants are explicit
parameters so classical-limit sweeps can rescale hbar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    DomainError,
    IntegrationQualityError,
    NumericError,
    ParameterError,
    SearchError,
)

_MODULE = "schrodinger"

#: Magnitude at which forbidden-region growth is flagged as overflow.
_OVERFLOW_LIMIT = 1e250

#: Format used for all CSV output (round-trip safe).
CSV_FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class UnitSystem:
    """hbar and particle mass, kept explicit for hbar-scaling studies."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0.0):
            raise ParameterError("hbar must be > 0", module=_MODULE, op="UnitSystem")
        if not (self.mass > 0.0):
            raise ParameterError("mass must be > 0", module=_MODULE, op="UnitSystem")


NATURAL_UNITS = UnitSystem()


@dataclass(frozen=True)
class Grid:
    """Strictly uniform 1-D grid; the Numerov integrator relies on uniformity."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (self.x_min < self.x_max):
            raise ParameterError("x_min must be < x_max", module=_MODULE, op="Grid")
        if self.n_points < 9:
            raise ParameterError("n_points must be >= 9", module=_MODULE, op="Grid")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def index_of(self, x: float) -> int:
        """Nearest grid index of x (x must lie inside the grid)."""
        if x < self.x_min - 1e-12 or x > self.x_max + 1e-12:
            raise DomainError(f"x={x} outside grid [{self.x_min}, {self.x_max}]",
                              module=_MODULE, op="Grid.index_of", x=x)
        return int(round((x - self.x_min) / self.spacing))


class PotentialSpec:
    """Analytic or tabulated potential V(x).

    Kinds: free, linear (slope g), harmonic (frequency omega), tabulated
    (cubic-spline interpolated samples), radial_effective (inner potential
    plus the centrifugal term lam*hbar^2/(2 m r^2)), polar_angle (the
    (m_ell^2 - 1/4) hbar^2 / (2 m sin^2 theta) potential of the polar
    equation on (0, pi)).
    """

    def __init__(self, kind, *, slope=None, omega=None, xs=None, vs=None,
                 inner=None, lam=None, m_ell=None):
        self.kind = kind
        self.slope = slope
        self.omega = omega
        self.inner = inner
        self.lam = lam
        self.m_ell = m_ell
        self._spline = None
        if kind == "harmonic" and not (omega and omega > 0):
            raise ParameterError("harmonic potential requires omega > 0",
                                 module=_MODULE, op="PotentialSpec")
        if kind == "tabulated":
            xs = np.asarray(xs, dtype=float)
            vs = np.asarray(vs, dtype=float)
            if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 4:
                raise ParameterError("tabulated potential needs matching 1-D x,v arrays",
                                     module=_MODULE, op="PotentialSpec")
            if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(vs))):
                raise ParameterError("tabulated potential values must be finite",
                                     module=_MODULE, op="PotentialSpec")
            order = np.argsort(xs)
            self.xs = xs[order]
            self.vs = vs[order]
            self._spline = CubicSpline(self.xs, self.vs)

    # ---- constructors -------------------------------------------------
    @classmethod
    def free(cls):
        return cls("free")

    @classmethod
    def linear(cls, slope):
        return cls("linear", slope=float(slope))

    @classmethod
    def harmonic(cls, omega):
        return cls("harmonic", omega=float(omega))

    @classmethod
    def tabulated(cls, xs, vs):
        return cls("tabulated", xs=xs, vs=vs)

    @classmethod
    def tabulated_from_csv(cls, path):
        """Read a tabulated potential from CSV with header ``x,v``."""
        data = np.genfromtxt(path, delimiter=",", names=True)
        if data.dtype.names is None or tuple(data.dtype.names[:2]) != ("x", "v"):
            raise ParameterError(f"{path}: expected CSV header 'x,v'",
                                 module=_MODULE, op="tabulated_from_csv")
        return cls.tabulated(data["x"], data["v"])

    @classmethod
    def radial_effective(cls, inner, lam):
        if lam < 0:
            raise ParameterError("lam must be >= 0", module=_MODULE, op="radial_effective")
        return cls("radial_effective", inner=inner, lam=float(lam))

    @classmethod
    def polar_angle(cls, m_ell):
        return cls("polar_angle", m_ell=int(m_ell))

    # ---- evaluation ---------------------------------------------------
    def value(self, x, units: UnitSystem = NATURAL_UNITS):
        """V(x); accepts scalars or arrays."""
        x = np.asarray(x, dtype=float)
        if self.kind == "free":
            out = np.zeros_like(x)
        elif self.kind == "linear":
            out = self.slope * x
        elif self.kind == "harmonic":
            out = 0.5 * units.mass * self.omega**2 * x**2
        elif self.kind == "tabulated":
            if np.any(x < self.xs[0] - 1e-12) or np.any(x > self.xs[-1] + 1e-12):
                raise DomainError("x outside tabulated domain",
                                  module=_MODULE, op="potential_value",
                                  x=float(np.atleast_1d(x).flat[0]))
            out = self._spline(x)
        elif self.kind == "radial_effective":
            if np.any(x <= 0.0):
                raise DomainError("radial potential requires r > 0",
                                  module=_MODULE, op="potential_value",
                                  x=float(np.min(x)))
            out = self.inner.value(x, units) + \
                self.lam * units.hbar**2 / (2.0 * units.mass * x**2)
        elif self.kind == "polar_angle":
            if np.any(x <= 0.0) or np.any(x >= np.pi):
                raise DomainError("polar potential requires 0 < theta < pi",
                                  module=_MODULE, op="potential_value",
                                  x=float(np.min(x)))
            out = (self.m_ell**2 - 0.25) * units.hbar**2 / \
                (2.0 * units.mass * np.sin(x)**2)
        else:
            raise ParameterError(f"unknown potential kind {self.kind!r}",
                                 module=_MODULE, op="potential_value")
        return out if out.ndim else float(out)

    def derivative(self, x, units: UnitSystem = NATURAL_UNITS):
        """dV/dx, analytic except for tabulated (spline derivative)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "free":
            out = np.zeros_like(x)
        elif self.kind == "linear":
            out = np.full_like(x, self.slope)
        elif self.kind == "harmonic":
            out = units.mass * self.omega**2 * x
        elif self.kind == "tabulated":
            out = self._spline(x, 1)
        elif self.kind == "radial_effective":
            out = self.inner.derivative(x, units) - \
                self.lam * units.hbar**2 / (units.mass * x**3)
        elif self.kind == "polar_angle":
            out = -(self.m_ell**2 - 0.25) * units.hbar**2 * np.cos(x) / \
                (units.mass * np.sin(x)**3)
        else:
            raise ParameterError(f"unknown potential kind {self.kind!r}",
                                 module=_MODULE, op="potential_derivative")
        return out if out.ndim else float(out)

    def second_derivative(self, x, units: UnitSystem = NATURAL_UNITS):
        x = np.asarray(x, dtype=float)
        if self.kind in ("free", "linear"):
            out = np.zeros_like(x)
        elif self.kind == "harmonic":
            out = np.full_like(x, units.mass * self.omega**2)
        elif self.kind == "tabulated":
            out = self._spline(x, 2)
        elif self.kind == "radial_effective":
            out = self.inner.second_derivative(x, units) + \
                3.0 * self.lam * units.hbar**2 / (units.mass * x**4)
        elif self.kind == "polar_angle":
            s, c = np.sin(x), np.cos(x)
            out = (self.m_ell**2 - 0.25) * units.hbar**2 * \
                (3.0 * c**2 + s**2) / (units.mass * s**4)
        else:
            raise ParameterError(f"unknown potential kind {self.kind!r}",
                                 module=_MODULE, op="potential_second_derivative")
        return out if out.ndim else float(out)


def potential_value(spec: PotentialSpec, x, units: UnitSystem = NATURAL_UNITS):
    """Evaluate V(x) for a potential spec."""
    return spec.value(x, units)


@dataclass
class Solution:
    """Samples of one real Schrodinger solution and its first derivative."""

    grid: Grid
    energy: float
    units: UnitSystem
    values: np.ndarray
    derivs: np.ndarray


@dataclass
class SolutionPair:
    """Two independent real solutions at one energy with constant Wronskian.

    The Wronskian convention is W = theta1*theta2' - theta1'*theta2.
    """

    grid: Grid
    energy: float
    units: UnitSystem
    sol1: Solution
    sol2: Solution
    wronskian: float
    v: np.ndarray = field(repr=False, default=None)

    def wronskian_samples(self) -> np.ndarray:
        return (self.sol1.values * self.sol2.derivs
                - self.sol1.derivs * self.sol2.values)


# ----------------------------------------------------------------------
# Numerov integration
# ----------------------------------------------------------------------

def _rk4_first_step(w_of_x, x0, h, y0, dy0, n_sub=8):
    """High-order start value y(x0+h) for the Numerov recurrence."""
    hh = h / n_sub
    x, y, dy = x0, y0, dy0
    for _ in range(n_sub):
        k1v, k1d = dy, w_of_x(x) * y
        k2v = dy + 0.5 * hh * k1d
        k2d = w_of_x(x + 0.5 * hh) * (y + 0.5 * hh * k1v)
        k3v = dy + 0.5 * hh * k2d
        k3d = w_of_x(x + 0.5 * hh) * (y + 0.5 * hh * k2v)
        k4v = dy + hh * k3d
        k4d = w_of_x(x + hh) * (y + hh * k3v)
        y = y + hh / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        dy = dy + hh / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        x += hh
    return y


def _numerov_values(w, h, y0, y1, x0=0.0, renormalize=False):
    """Run the Numerov recurrence for psi'' = w(x) psi over samples w.

    With renormalize set, forbidden-region overflow rescales the history
    instead of raising (the bound-state search only needs signs and
    ratios); otherwise overflow is an error carrying the position.
    """
    n = len(w)
    c = [1.0 - (h * h / 12.0) * wi for wi in w]
    y = [0.0] * n
    y[0] = y0
    y[1] = y1
    lim = _OVERFLOW_LIMIT
    for i in range(1, n - 1):
        yn = ((12.0 - 10.0 * c[i]) * y[i] - c[i - 1] * y[i - 1]) / c[i + 1]
        if yn > lim or yn < -lim or yn != yn:
            if not renormalize:
                raise NumericError(
                    "solution overflow in classically forbidden region",
                    module=_MODULE, op="integrate_schrodinger",
                    x=x0 + (i + 1) * h)
            scale = 1e-200
            for j in range(i + 1):
                y[j] *= scale
            yn *= scale
        y[i + 1] = yn
    return y


def _numerov_derivatives(y, w, h, dy0, w_ghost, y_ghost):
    """Fourth-order derivative samples consistent with psi'' = w psi."""
    y = np.asarray(y)
    w = np.asarray(w)
    n = y.size
    d = np.empty(n)
    d[0] = dy0
    d[1:-1] = ((1.0 - h * h * w[2:] / 6.0) * y[2:]
               - (1.0 - h * h * w[:-2] / 6.0) * y[:-2]) / (2.0 * h)
    d[-1] = ((1.0 - h * h * w_ghost / 6.0) * y_ghost
             - (1.0 - h * h * w[-2] / 6.0) * y[-2]) / (2.0 * h)
    return d


def integrate_schrodinger(spec: PotentialSpec, energy: float, grid: Grid,
                          init, units: UnitSystem = NATURAL_UNITS) -> Solution:
    """Integrate psi'' = (2m/hbar^2)(V - E) psi across the grid.

    ``init`` is (value, derivative) at x_min. Fourth-order accurate; the
    derivative is carried by the integrator rather than re-differenced.
    """
    y0, dy0 = float(init[0]), float(init[1])
    if y0 == 0.0 and dy0 == 0.0:
        raise ParameterError("initial value and derivative cannot both be zero",
                             module=_MODULE, op="integrate_schrodinger")
    x = grid.points()
    h = grid.spacing
    coeff = 2.0 * units.mass / units.hbar**2
    v = np.asarray(spec.value(x, units), dtype=float)
    if not np.all(np.isfinite(v)):
        raise NumericError("non-finite potential values on grid",
                           module=_MODULE, op="integrate_schrodinger")
    w = coeff * (v - energy)

    def w_of_x(xx):
        return coeff * (spec.value(xx, units) - energy)

    y1 = _rk4_first_step(w_of_x, x[0], h, y0, dy0)
    y = _numerov_values(list(w), h, y0, y1, x0=x[0])

    # ghost point just past x_max for the last derivative sample; tabulated
    # potentials need only cover the grid, so fall back to extrapolation
    x_ghost = x[-1] + h
    try:
        w_ghost = w_of_x(x_ghost)
    except DomainError:
        w_ghost = 2.0 * w[-1] - w[-2]
    c_nm1 = 1.0 - (h * h / 12.0) * w[-2]
    c_n = 1.0 - (h * h / 12.0) * w[-1]
    c_g = 1.0 - (h * h / 12.0) * w_ghost
    y_ghost = ((12.0 - 10.0 * c_n) * y[-1] - c_nm1 * y[-2]) / c_g

    d = _numerov_derivatives(y, w, h, dy0, w_ghost, y_ghost)
    return Solution(grid=grid, energy=energy, units=units,
                    values=np.asarray(y), derivs=d)


def _reversed_solution(spec, energy, grid, init, units):
    """Integrate from x_max leftward; returns values/derivs in grid order."""
    x = grid.points()
    h = grid.spacing
    coeff = 2.0 * units.mass / units.hbar**2
    v = np.asarray(spec.value(x, units), dtype=float)
    w = coeff * (v - energy)
    wr = w[::-1]

    def w_of_s(s):  # s measured from x_max going left
        return coeff * (spec.value(grid.x_max - s, units) - energy)

    y0, dy0 = float(init[0]), -float(init[1])   # d/ds = -d/dx
    y1 = _rk4_first_step(w_of_s, 0.0, h, y0, dy0)
    yr = _numerov_values(list(wr), h, y0, y1, x0=0.0)

    s_ghost = (grid.n_points) * h
    try:
        w_ghost = w_of_s(s_ghost)
    except DomainError:
        w_ghost = 2.0 * wr[-1] - wr[-2]
    c_nm1 = 1.0 - (h * h / 12.0) * wr[-2]
    c_n = 1.0 - (h * h / 12.0) * wr[-1]
    c_g = 1.0 - (h * h / 12.0) * w_ghost
    y_ghost = ((12.0 - 10.0 * c_n) * yr[-1] - c_nm1 * yr[-2]) / c_g
    dr = _numerov_derivatives(yr, wr, h, dy0, w_ghost, y_ghost)

    return Solution(grid=grid, energy=energy, units=units,
                    values=np.asarray(yr)[::-1], derivs=-dr[::-1])


def make_pair(spec: PotentialSpec, energy: float, grid: Grid,
              units: UnitSystem = NATURAL_UNITS,
              target_wronskian: float = 1.0) -> SolutionPair:
    """Build an independent pair from initial conditions (1,0) and (0,1).

    The second solution is rescaled so the Wronskian
    theta1*theta2' - theta1'*theta2 equals ``target_wronskian`` exactly
    (integration quality permitting).
    """
    if target_wronskian == 0.0:
        raise ParameterError("target_wronskian must be nonzero",
                             module=_MODULE, op="make_pair")
    s1 = integrate_schrodinger(spec, energy, grid, (1.0, 0.0), units)
    s2 = integrate_schrodinger(spec, energy, grid, (0.0, 1.0), units)
    w_samples = s1.values * s2.derivs - s1.derivs * s2.values
    w_ref = float(np.median(w_samples))
    if w_ref == 0.0 or not np.isfinite(w_ref):
        raise ParameterError("solutions are dependent (zero Wronskian)",
                             module=_MODULE, op="make_pair")
    drift = float(np.max(np.abs(w_samples - w_ref)) / abs(w_ref))
    if drift > 1e-6:
        raise IntegrationQualityError(
            f"Wronskian drift {drift:.3e} exceeds 1e-6; refine the grid",
            module=_MODULE, op="make_pair")
    scale = target_wronskian / w_ref
    s2 = Solution(grid=grid, energy=energy, units=units,
                  values=s2.values * scale, derivs=s2.derivs * scale)
    if np.any(s1.values**2 + s2.values**2 <= 0.0):
        raise NumericError("theta1^2 + theta2^2 vanished on the grid",
                           module=_MODULE, op="make_pair")
    v = np.asarray(spec.value(grid.points(), units), dtype=float)
    return SolutionPair(grid=grid, energy=energy, units=units,
                        sol1=s1, sol2=s2, wronskian=target_wronskian, v=v)


def pair_from_solutions(sol1: Solution, sol2: Solution, spec: PotentialSpec,
                        drift_tol: float = 1e-6) -> SolutionPair:
    """Assemble a SolutionPair from two existing solutions (same grid/E)."""
    if sol1.grid != sol2.grid or sol1.energy != sol2.energy:
        raise ParameterError("solutions must share grid and energy",
                             module=_MODULE, op="pair_from_solutions")
    w_samples = sol1.values * sol2.derivs - sol1.derivs * sol2.values
    w_ref = float(np.median(w_samples))
    if w_ref == 0.0 or not np.isfinite(w_ref):
        raise ParameterError("solutions are dependent (zero Wronskian)",
                             module=_MODULE, op="pair_from_solutions")
    drift = float(np.max(np.abs(w_samples - w_ref)) / abs(w_ref))
    if drift > drift_tol:
        raise IntegrationQualityError(
            f"Wronskian drift {drift:.3e} exceeds {drift_tol:.1e}",
            module=_MODULE, op="pair_from_solutions")
    v = np.asarray(spec.value(sol1.grid.points(), sol1.units), dtype=float)
    return SolutionPair(grid=sol1.grid, energy=sol1.energy, units=sol1.units,
                        sol1=sol1, sol2=sol2, wronskian=w_ref, v=v)


def analytic_free_pair(energy: float, grid: Grid,
                       units: UnitSystem = NATURAL_UNITS,
                       target_wronskian: float | None = None,
                       amplitude: float = 1.0) -> SolutionPair:
    """Exact free pair (A sin kx, A cos kx), k = sqrt(2mE)/hbar.

    Natural Wronskian is -k*A^2; target_wronskian additionally rescales
    sol2 alone. A balanced amplitude A^2 = sqrt(2m)/(hbar k sqrt(ab-c^2/4))
    realizes Floyd's normalization with equal envelopes.
    """
    if energy <= 0:
        raise ParameterError("free pair requires E > 0",
                             module=_MODULE, op="analytic_free_pair")
    k = math.sqrt(2.0 * units.mass * energy) / units.hbar
    x = grid.points()
    a0 = float(amplitude)
    s1 = Solution(grid, energy, units, a0 * np.sin(k * x),
                  a0 * k * np.cos(k * x))
    scale = 1.0
    if target_wronskian is not None:
        scale = target_wronskian / (-k * a0**2)
    s2 = Solution(grid, energy, units, scale * a0 * np.cos(k * x),
                  -scale * a0 * k * np.sin(k * x))
    v = np.zeros_like(x)
    return SolutionPair(grid=grid, energy=energy, units=units, sol1=s1,
                        sol2=s2, wronskian=-k * a0**2 * scale, v=v)


# ----------------------------------------------------------------------
# Nodes and bound states
# ----------------------------------------------------------------------

def count_nodes(values) -> int:
    """Number of strict sign changes between samples; endpoint zeros are
    not nodes, and an exact interior zero at a grid point counts once."""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NumericError("non-finite samples", module=_MODULE, op="count_nodes")
    s = np.sign(v)
    s = s[s != 0.0]
    if s.size < 2:
        return 0
    return int(np.sum(s[1:] * s[:-1] < 0.0))


def _shoot_nodes(w, h):
    """Node count of the left-launched solution (0,1), renormalized."""
    y = _numerov_values(w, h, 0.0, h, renormalize=True)
    return count_nodes(y[1:])   # skip the endpoint zero


def _match_mismatch(spec, energy, grid, units, i_match):
    """Scale-free Wronskian mismatch of left/right launched solutions at
    the matching index. Zero exactly at an eigenvalue of the windowed
    problem."""
    x = grid.points()
    h = grid.spacing
    n = grid.n_points
    left_grid = Grid(grid.x_min, x[i_match], i_match + 1)
    right_grid = Grid(x[i_match], grid.x_max, n - i_match)
    sl = integrate_schrodinger(spec, energy, left_grid, (0.0, h), units)
    sr = _reversed_solution(spec, energy, right_grid, (0.0, h), units)
    yl, dl = sl.values[-1], sl.derivs[-1]
    yr, dr = sr.values[0], sr.derivs[0]
    num = dl * yr - yl * dr
    den = math.hypot(yl, dl) * math.hypot(yr, dr)
    if den == 0.0:
        raise NumericError("degenerate shooting solutions",
                           module=_MODULE, op="find_bound_energies", x=x[i_match])
    return num / den


def find_bound_energies(spec: PotentialSpec, grid: Grid,
                        units: UnitSystem = NATURAL_UNITS,
                        n_max: int = 1, e_tol: float = 1e-12) -> list[float]:
    """First n_max bound energies by node-count bracketing plus bisection
    on the log-derivative mismatch at the matching point.

    The potential must confine on the grid (V large at both ends relative
    to the returned energies).
    """
    if n_max < 1:
        raise ParameterError("n_max must be >= 1", module=_MODULE,
                             op="find_bound_energies")
    x = grid.points()
    h = grid.spacing
    v = np.asarray(spec.value(x, units), dtype=float)
    coeff = 2.0 * units.mass / units.hbar**2
    e_floor = float(np.min(v)) + 1e-12
    e_ceil = float(min(v[0], v[-1]))
    if e_ceil <= e_floor + 1e-12:
        raise SearchError(
            f"potential not confining on grid: scan window [{e_floor:.6g}, {e_ceil:.6g}] empty",
            module=_MODULE, op="find_bound_energies")

    def nodes_at(e):
        return _shoot_nodes(list(coeff * (v - e)), h)

    def mismatch(e):
        i_match = int(np.argmin(np.abs(v - e)))
        i_match = min(max(i_match, 8), grid.n_points - 9)
        return _match_mismatch(spec, e, grid, units, i_match)

    energies = []
    for n in range(n_max):
        lo, hi = e_floor, e_ceil
        if nodes_at(hi) <= n:
            raise SearchError(
                f"state {n} not bracketed in energy window [{e_floor:.6g}, {e_ceil:.6g}]",
                module=_MODULE, op="find_bound_energies")
        # squeeze [lo, hi] to the node-count transition n -> n+1
        if nodes_at(lo) > n:
            raise SearchError(
                f"node count at window floor already exceeds {n}",
                module=_MODULE, op="find_bound_energies")
        for _ in range(200):
            if hi - lo <= max(e_tol, 1e-14 * abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            if nodes_at(mid) > n:
                hi = mid
            else:
                lo = mid
        # refine on the smooth mismatch inside the bracket when possible
        flo, fhi = mismatch(lo), mismatch(hi)
        if flo * fhi < 0.0:
            a, b, fa = lo, hi, flo
            for _ in range(200):
                if b - a <= max(e_tol, 1e-14 * abs(b)):
                    break
                mid = 0.5 * (a + b)
                fm = mismatch(mid)
                if fa * fm <= 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            e_n = 0.5 * (a + b)
        else:
            e_n = 0.5 * (lo + hi)
        energies.append(e_n)
    return energies


def physical_bound_solution(spec: PotentialSpec, energy: float, grid: Grid,
                            units: UnitSystem = NATURAL_UNITS) -> Solution:
    """Normalized bound-state solution at an eigenvalue: integrated inward
    from both ends and glued at the matching point (exponential-growth
    control).

    The boundary initial conditions follow the decaying exponential
    envelope, (phi, phi') = (1, +-kappa); the solution then has no
    artificial zero at the grid edge, which the partner construction of
    the quantization module relies on."""
    x = grid.points()
    h = grid.spacing
    v = np.asarray(spec.value(x, units), dtype=float)
    i_match = int(np.argmin(np.abs(v - energy)))
    i_match = min(max(i_match, 8), grid.n_points - 9)
    left_grid = Grid(grid.x_min, x[i_match], i_match + 1)
    right_grid = Grid(x[i_match], grid.x_max, grid.n_points - i_match)
    coeff = 2.0 * units.mass / units.hbar**2

    def envelope_init(v_end):
        kappa_sq = coeff * (v_end - energy)
        return (0.0, h) if kappa_sq <= 0.0 else (1.0, math.sqrt(kappa_sq))

    y_l, d_l = envelope_init(v[0])
    y_r, d_r = envelope_init(v[-1])
    sl = integrate_schrodinger(spec, energy, left_grid, (y_l, d_l), units)
    sr = _reversed_solution(spec, energy, right_grid, (y_r, -d_r), units)
    if sr.values[0] == 0.0 or sl.values[-1] == 0.0:
        raise NumericError("matching point fell on a node; shift the grid",
                           module=_MODULE, op="physical_bound_solution",
                           x=x[i_match])
    scale = sl.values[-1] / sr.values[0]
    values = np.concatenate([sl.values, scale * sr.values[1:]])
    derivs = np.concatenate([sl.derivs, scale * sr.derivs[1:]])
    trapezoid = getattr(np, "trapezoid", np.trapz)
    norm = math.sqrt(float(trapezoid(values**2, x)))
    if norm == 0.0 or not math.isfinite(norm):
        raise NumericError("bound solution failed to normalize",
                           module=_MODULE, op="physical_bound_solution")
    return Solution(grid=grid, energy=energy, units=units,
                    values=values / norm, derivs=derivs / norm)


# ----------------------------------------------------------------------
# CSV export
# ----------------------------------------------------------------------

def pair_to_csv(pair: SolutionPair, path):
    """Write a solution pair with header x,theta1,dtheta1,theta2,dtheta2."""
    x = pair.grid.points()
    data = np.column_stack([x, pair.sol1.values, pair.sol1.derivs,
                            pair.sol2.values, pair.sol2.derivs])
    np.savetxt(path, data, delimiter=",", fmt=CSV_FLOAT_FORMAT,
               header="x,theta1,dtheta1,theta2,dtheta2", comments="")
