"""Three-dimensional decomposition for spherically symmetric potentials.

Separating Psi = R(r) T(theta) F(phi) and transforming each factor
(X = r R, curly-T = sqrt(sin theta) T) reduces the three separated
equations to 1-D Schrodinger problems:

* radial: effective potential V(r) + l(l+1) hbar^2 / (2 m r^2);
* polar: potential (m_l^2 - 1/4) hbar^2/(2 m sin^2 theta) at energy
  (l(l+1) + 1/4) hbar^2 / (2m);
* azimuthal: free at energy m_l^2 hbar^2 / (2m).

Each factor then gets the 1-D reduced-action construction; their sum is
the total reduced action, whose 3-D Hamilton-Jacobi residual carries the
two -hbar^2/8m correction terms produced by the quarter shifts of the
polar transform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .reduced_action import (
    MicrostateParams,
    ReducedActionField,
    build_field,
    qshje_residual,
)
from .schrodinger import (
    CSV_FLOAT_FORMAT,
    Grid,
    NATURAL_UNITS,
    PotentialSpec,
    SolutionPair,
    UnitSystem,
    make_pair,
)

_MODULE = "spherical"


@dataclass(frozen=True)
class SphericalQuantumNumbers:
    """Integer (l, m_l) with |m_l| <= l; lam = l(l+1)."""

    ell: int
    m_ell: int

    def __post_init__(self):
        if self.ell < 0 or int(self.ell) != self.ell:
            raise ParameterError("ell must be a nonnegative integer",
                                 module=_MODULE, op="SphericalQuantumNumbers")
        if abs(self.m_ell) > self.ell or int(self.m_ell) != self.m_ell:
            raise ParameterError("m_ell must be an integer with |m_ell| <= ell",
                                 module=_MODULE, op="SphericalQuantumNumbers")

    @property
    def lam(self) -> float:
        return float(self.ell * (self.ell + 1))


# ----------------------------------------------------------------------
# Factor transforms
# ----------------------------------------------------------------------

def radial_transform(r_values, r_grid):
    """X(r) = r * R(r); X satisfies the 1-D form with the effective
    potential V + lam hbar^2/(2 m r^2)."""
    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("radial grid must satisfy r > 0",
                          module=_MODULE, op="radial_transform",
                          x=float(np.min(r)))
    return r * np.asarray(r_values, dtype=float)


def polar_transform(t_values, theta_grid):
    """curly-T(theta) = sqrt(sin theta) * T(theta) on the open interval
    (0, pi)."""
    th = np.asarray(theta_grid, dtype=float)
    if np.any(th <= 0.0) or np.any(th >= math.pi):
        raise DomainError("polar grid must lie strictly inside (0, pi)",
                          module=_MODULE, op="polar_transform",
                          x=float(np.min(th)))
    return np.sqrt(np.sin(th)) * np.asarray(t_values, dtype=float)


def radial_effective_potential(inner: PotentialSpec,
                               qn: SphericalQuantumNumbers) -> PotentialSpec:
    return PotentialSpec.radial_effective(inner, qn.lam)


def polar_potential(qn: SphericalQuantumNumbers) -> PotentialSpec:
    return PotentialSpec.polar_angle(qn.m_ell)


def polar_energy(qn: SphericalQuantumNumbers,
                 units: UnitSystem = NATURAL_UNITS) -> float:
    return (qn.lam + 0.25) * units.hbar**2 / (2.0 * units.mass)


def azimuthal_energy(qn: SphericalQuantumNumbers,
                     units: UnitSystem = NATURAL_UNITS) -> float:
    return qn.m_ell**2 * units.hbar**2 / (2.0 * units.mass)


def polar_equation_residual(t_values, theta_grid, qn: SphericalQuantumNumbers):
    """Second-difference residual of the transformed polar equation
    curly-T'' + (lam + 1/4) curly-T + (1/4 - m_l^2)/sin^2 curly-T = 0
    for raw T samples (boundary rows dropped)."""
    th = np.asarray(theta_grid, dtype=float)
    ct = polar_transform(t_values, th)
    h = th[1] - th[0]
    d2 = (-ct[:-4] + 16.0 * ct[1:-3] - 30.0 * ct[2:-2] + 16.0 * ct[3:-1]
          - ct[4:]) / (12.0 * h**2)
    mid = ct[2:-2]
    s = np.sin(th[2:-2])
    return d2 + (qn.lam + 0.25) * mid + (0.25 - qn.m_ell**2) / s**2 * mid


# ----------------------------------------------------------------------
# Component reduced actions
# ----------------------------------------------------------------------

def radial_reduced_action(pair: SolutionPair,
                          params: MicrostateParams) -> ReducedActionField:
    """Z(r): the 1-D construction applied to a pair built on the radial
    effective potential."""
    return build_field(pair, params)


def polar_reduced_action(pair: SolutionPair,
                         params: MicrostateParams) -> ReducedActionField:
    """L(theta): the 1-D construction on a transformed polar pair.

    The arctan argument is the same whether built from T or curly-T
    solutions: the sqrt(sin) factor cancels in the ratio."""
    return build_field(pair, params)


def make_radial_pair(inner: PotentialSpec, qn: SphericalQuantumNumbers,
                     energy: float, grid: Grid,
                     units: UnitSystem = NATURAL_UNITS,
                     target_wronskian: float = 1.0) -> SolutionPair:
    if grid.x_min <= 0.0:
        raise DomainError("radial grid must start at r > 0",
                          module=_MODULE, op="make_radial_pair", x=grid.x_min)
    return make_pair(radial_effective_potential(inner, qn), energy, grid,
                     units, target_wronskian)


def make_polar_pair(qn: SphericalQuantumNumbers, grid: Grid,
                    units: UnitSystem = NATURAL_UNITS,
                    target_wronskian: float = 1.0) -> SolutionPair:
    if grid.x_min <= 0.0 or grid.x_max >= math.pi:
        raise DomainError("polar grid must lie strictly inside (0, pi)",
                          module=_MODULE, op="make_polar_pair", x=grid.x_min)
    return make_pair(polar_potential(qn), polar_energy(qn, units), grid,
                     units, target_wronskian)


class AzimuthalAction:
    """M(phi) on the analytic basis {cos(m_l phi), sin(m_l phi)} (or {1, phi}
    for m_l = 0), with branch-unwrapped arctan and analytic momentum.

    (eps, tau) form: M = hbar arctan[(F1 + eps F2)/(tau F1 + F2)];
    (a, b, c) form: M = hbar arctan[(b tan(m_l phi) + c/2)/sqrt(ab - c^2/4)].
    """

    def __init__(self, qn: SphericalQuantumNumbers, params: MicrostateParams,
                 units: UnitSystem = NATURAL_UNITS):
        if params.form == "mu_nu" and abs(params.mu * params.nu - 1.0) < 1e-12:
            raise ParameterError("eps*tau = 1 gives a dependent combination",
                                 module=_MODULE, op="AzimuthalAction")
        self.qn = qn
        self.params = params
        self.units = units
        self.energy = azimuthal_energy(qn, units)

    def _basis(self, phi):
        m = self.qn.m_ell
        phi = np.asarray(phi, dtype=float)
        if m != 0:
            f1, f2 = np.cos(m * phi), np.sin(m * phi)
            d1, d2 = -m * np.sin(m * phi), m * np.cos(m * phi)
            dd1, dd2 = -m * m * f1, -m * m * f2
        else:
            f1, f2 = np.ones_like(phi), phi
            d1, d2 = np.zeros_like(phi), np.ones_like(phi)
            dd1, dd2 = np.zeros_like(phi), np.zeros_like(phi)
        return f1, f2, d1, d2, dd1, dd2

    def _combo(self, phi):
        f1, f2, d1, d2, dd1, dd2 = self._basis(phi)
        if self.params.form == "mu_nu":
            eps, tau = self.params.mu, self.params.nu
            g1 = tau * f1 + f2
            g2 = f1 + eps * f2
            dg1 = tau * d1 + d2
            dg2 = d1 + eps * d2
            ddg1 = tau * dd1 + dd2
            ddg2 = dd1 + eps * dd2
        else:
            a, b, c = self.params.a, self.params.b, self.params.c
            s = self.params.floyd_s
            g1 = f2
            g2 = (b * f1 + 0.5 * c * f2) / s
            dg1 = d2
            dg2 = (b * d1 + 0.5 * c * d2) / s
            ddg1 = dd2
            ddg2 = (b * dd1 + 0.5 * c * dd2) / s
        return g1, g2, dg1, dg2, ddg1, ddg2

    def values(self, phi):
        """M(phi), unwrapped; phi may be a scalar or a sorted fine array."""
        hbar = self.units.hbar
        m = self.qn.m_ell
        scalar = np.isscalar(phi)
        phi_arr = np.atleast_1d(np.asarray(phi, dtype=float))
        if m != 0 and self.params.form == "floyd":
            # exact branch bookkeeping on the tan form: evaluate tan on the
            # branch-reduced argument so the counter and arctan stay in step
            b, c, s = self.params.b, self.params.c, self.params.floyd_s
            u = m * phi_arr
            n = np.floor(u / math.pi + 0.5)
            u_red = u - math.pi * n
            core = np.arctan((b * np.tan(u_red) + 0.5 * c) / s)
            out = hbar * (core + math.pi * n)
            return float(out[0]) if scalar else out
        if scalar or phi_arr.size < 3:
            # local principal value; branch tracking needs an array
            g1, g2, *_ = self._combo(phi_arr)
            out = hbar * np.arctan2(g2, g1)
            return float(out[0]) if scalar else out
        g1, g2, *_ = self._combo(phi_arr)
        angle = np.unwrap(np.arctan2(g2, g1))
        if g1[0] != 0.0:
            principal = math.atan(g2[0] / g1[0])
        else:
            principal = math.copysign(math.pi / 2.0, g2[0])
        shift = round((angle[0] - principal) / math.pi) * math.pi
        return hbar * (angle - shift)

    def momentum(self, phi):
        """dM/dphi from the closed Wronskian formula."""
        hbar = self.units.hbar
        g1, g2, dg1, dg2, _, _ = self._combo(phi)
        return hbar * (g1 * dg2 - dg1 * g2) / (g1**2 + g2**2)

    def momentum_derivatives(self, phi):
        """(M', M'', M''') analytic."""
        hbar = self.units.hbar
        g1, g2, dg1, dg2, ddg1, ddg2 = self._combo(phi)
        den = g1**2 + g2**2
        w = g1 * dg2 - dg1 * g2         # constant for the true basis
        dden = 2.0 * (g1 * dg1 + g2 * dg2)
        d2den = 2.0 * (dg1**2 + dg2**2 + g1 * ddg1 + g2 * ddg2)
        p = hbar * w / den
        dp = -p * dden / den
        d2p = p * (2.0 * (dden / den)**2 - d2den / den)
        return p, dp, d2p

    def qshje_residual(self, phi):
        """(M')^2 - (hbar^2/2) {M, phi} - m_l^2 hbar^2 (zero right side for
        m_l = 0 with the {1, phi} basis)."""
        hbar = self.units.hbar
        p, dp, d2p = self.momentum_derivatives(phi)
        bracket = 1.5 * (dp / p)**2 - d2p / p
        return p**2 - (hbar**2 / 2.0) * bracket - \
            self.qn.m_ell**2 * hbar**2


def azimuthal_reduced_action(qn: SphericalQuantumNumbers,
                             params: MicrostateParams, phi,
                             units: UnitSystem = NATURAL_UNITS):
    """M(phi) values for the given parameters (see AzimuthalAction)."""
    return AzimuthalAction(qn, params, units).values(phi)


# ----------------------------------------------------------------------
# Total action and the 3-D residual
# ----------------------------------------------------------------------

@dataclass
class SphericalActionTriple:
    """Radial, polar and azimuthal reduced actions of one configuration."""

    radial: ReducedActionField
    polar: ReducedActionField
    azimuthal: AzimuthalAction
    qn: SphericalQuantumNumbers
    inner: PotentialSpec
    energy: float

    @property
    def units(self) -> UnitSystem:
        return self.radial.units


def total_action(triple: SphericalActionTriple, r, theta, phi):
    """S0(r, theta, phi) = Z(r) + L(theta) + M(phi)."""
    return (triple.radial.s0_at(r) + triple.polar.s0_at(theta)
            + triple.azimuthal.values(phi))


def total_qshje_residual(triple: SphericalActionTriple, r, theta, phi):
    """Residual of the 3-D stationary quantum Hamilton-Jacobi equation

    (1/2m)(grad S0)^2 - (hbar^2/4m)[{S0,r} + {S0,theta}/r^2
        + {S0,phi}/(r^2 sin^2 theta)] + V(r) - E
        - hbar^2/(8 m r^2) - hbar^2/(8 m r^2 sin^2 theta),

    with the spherical gradient (d_r, d_theta/r, d_phi/(r sin theta)) and
    per-coordinate brackets from the analytic component momenta."""
    m = triple.units.mass
    hbar = triple.units.hbar
    rf, pf, az = triple.radial, triple.polar, triple.azimuthal
    s2 = np.sin(theta)**2

    pr = rf.p_at(r)
    br_r = rf.bracket_at(r)
    pth = pf.p_at(theta)
    br_th = pf.bracket_at(theta)
    pph, dpph, d2pph = az.momentum_derivatives(phi)
    br_ph = 1.5 * (dpph / pph)**2 - d2pph / pph

    grad_sq = pr**2 + pth**2 / r**2 + pph**2 / (r**2 * s2)
    brackets = br_r + br_th / r**2 + br_ph / (r**2 * s2)
    v = triple.inner.value(r, triple.units)
    return (grad_sq / (2.0 * m) - hbar**2 / (4.0 * m) * brackets
            + v - triple.energy
            - hbar**2 / (8.0 * m * r**2)
            - hbar**2 / (8.0 * m * r**2 * s2))


def build_triple(inner: PotentialSpec, qn: SphericalQuantumNumbers,
                 energy: float, r_grid: Grid, theta_grid: Grid,
                 radial_params: MicrostateParams,
                 polar_params: MicrostateParams,
                 azimuthal_params: MicrostateParams,
                 units: UnitSystem = NATURAL_UNITS,
                 polar_lam_override: float = None) -> SphericalActionTriple:
    """Assemble the three component actions for one (E, l, m_l).

    polar_lam_override deliberately injects an inconsistent separation
    constant into the polar factor (consistency-detector studies); the
    default uses lam = l(l+1) everywhere.
    """
    rpair = make_radial_pair(inner, qn, energy, r_grid, units)
    radial = radial_reduced_action(rpair, radial_params)
    if polar_lam_override is None:
        e_theta = polar_energy(qn, units)
    else:
        e_theta = (polar_lam_override + 0.25) * units.hbar**2 / (2.0 * units.mass)
    ppair = make_pair(polar_potential(qn), e_theta, theta_grid, units)
    polar = polar_reduced_action(ppair, polar_params)
    azim = AzimuthalAction(qn, azimuthal_params, units)
    return SphericalActionTriple(radial=radial, polar=polar, azimuthal=azim,
                                 qn=qn, inner=inner, energy=energy)


def component_report(triple: SphericalActionTriple, n_samples: int = 64) -> str:
    """JSON report: per-component residual maxima over interior windows."""
    rf, pf, az = triple.radial, triple.polar, triple.azimuthal
    units = triple.units

    r_lo, r_hi = rf.x[5], rf.x[-6]
    rs = np.linspace(r_lo, r_hi, n_samples)
    spec_r = radial_effective_potential(triple.inner, triple.qn)
    res_r = np.max(np.abs(qshje_residual(rf, spec_r, rs)))

    th_lo, th_hi = pf.x[5], pf.x[-6]
    ths = np.linspace(th_lo, th_hi, n_samples)
    res_th = np.max(np.abs(qshje_residual(pf, PotentialSpec.polar_angle(triple.qn.m_ell), ths)))

    phis = np.linspace(0.05, 2.0 * math.pi - 0.05, n_samples)
    res_ph = np.max(np.abs(az.qshje_residual(phis)))

    payload = {
        "ell": triple.qn.ell,
        "m_ell": triple.qn.m_ell,
        "energy": triple.energy,
        "radial_window": [r_lo, r_hi],
        "polar_window": [th_lo, th_hi],
        "radial_residual_max": float(res_r),
        "polar_residual_max": float(res_th),
        "azimuthal_residual_max": float(res_ph),
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def component_to_csv(field: ReducedActionField, spec: PotentialSpec, path):
    """Write coord,action,momentum,residual for one component field."""
    xs = field.x[5:-5]
    res = qshje_residual(field, spec, xs)
    data = np.column_stack([xs, field.s0[5:-5], field.p[5:-5], res])
    np.savetxt(path, data, delimiter=",", fmt=CSV_FLOAT_FORMAT,
               header="coord,action,momentum,residual", comments="")
