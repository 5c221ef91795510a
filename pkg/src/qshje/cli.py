"""Command-line front end.

Subcommands: pair, action, trajectory, quantize, spherical, compare-floyd,
residuals, accept, sweep. Outputs are CSV/JSON files with 17-significant-
digit floats so identical configurations produce byte-identical artifacts.
Numeric failures exit with code 3 and a machine-readable JSON error object
on stderr; configuration errors exit with code 2.

Scenario options may come from a flat key=value config file (--config);
explicit flags override file entries. QSHJE_GRID_POINTS overrides the
default grid density.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ConfigError, QshjeError
from .dynamics import (
    floyd_free_trajectory,
    integrate_trajectory,
    dispersion_free_trajectory,
    trajectory_to_csv,
)
from .quantization import (
    action_variable,
    bound_state,
    enumerate_microstates,
    quantization_report,
)
from .reduced_action import (
    MicrostateParams,
    bohm_quantum_potential,
    build_field,
    field_to_csv,
    modified_potential_residual,
    qshje_residual,
)
from .schrodinger import (
    CSV_FLOAT_FORMAT,
    Grid,
    PotentialSpec,
    UnitSystem,
    analytic_free_pair,
    make_pair,
    pair_to_csv,
)
from .spherical import (
    SphericalQuantumNumbers,
    build_triple,
    component_report,
    total_qshje_residual,
)

_MODULE = "cli"


def _default_grid_points() -> int:
    env = os.environ.get("QSHJE_GRID_POINTS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"QSHJE_GRID_POINTS={env!r} is not an integer",
                              module=_MODULE, op="config") from exc
    return 4001


def _fmt(value: float) -> str:
    return CSV_FLOAT_FORMAT % value


# ----------------------------------------------------------------------
# Scenario assembly
# ----------------------------------------------------------------------

def _read_config_file(path) -> dict:
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{line_no}: expected key=value",
                        module=_MODULE, op="config")
                key, _, value = line.partition("=")
                out[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}",
                          module=_MODULE, op="config") from exc
    return out


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill argparse defaults from the config file; flags win."""
    if not getattr(args, "config", None):
        return args
    file_vals = _read_config_file(args.config)
    for key, value in file_vals.items():
        if not hasattr(args, key):
            raise ConfigError(f"unknown config key {key!r}",
                              module=_MODULE, op="config")
        if key in args._explicit:
            continue
        setattr(args, key, value)
    return args


class _TrackingParser(argparse.ArgumentParser):
    """Remembers which destinations were set explicitly on the command line."""

    def parse_args(self, argv=None, namespace=None):
        ns = super().parse_args(argv, namespace)
        explicit = set()
        argv = list(sys.argv[1:] if argv is None else argv)
        for action in self._subcommand_actions():
            for opt in action.option_strings:
                if any(a == opt or a.startswith(opt + "=") for a in argv):
                    explicit.add(action.dest)
        ns._explicit = explicit
        return ns

    def _subcommand_actions(self):
        acts = list(self._actions)
        for act in self._actions:
            if isinstance(act, argparse._SubParsersAction):
                for sub in act.choices.values():
                    acts.extend(sub._actions)
        return acts


def _build_units(args) -> UnitSystem:
    return UnitSystem(hbar=float(args.hbar), mass=float(args.mass))


def _build_potential(args, units) -> PotentialSpec:
    kind = args.potential
    if kind == "free":
        return PotentialSpec.free()
    if kind == "linear":
        return PotentialSpec.linear(float(args.slope))
    if kind == "harmonic":
        return PotentialSpec.harmonic(float(args.omega))
    if kind == "tabulated":
        if not args.table:
            raise ConfigError("tabulated potential requires --table FILE",
                              module=_MODULE, op="config")
        return PotentialSpec.tabulated_from_csv(args.table)
    if kind == "radial":
        lam = float(args.ell) * (float(args.ell) + 1.0)
        return PotentialSpec.radial_effective(PotentialSpec.free(), lam)
    raise ConfigError(f"unknown potential {kind!r}; the violated field is "
                      "'potential'", module=_MODULE, op="config")


def _build_grid(args) -> Grid:
    text = args.grid
    parts = str(text).split(":")
    if len(parts) not in (2, 3):
        raise ConfigError("grid must be 'xmin:xmax[:npoints]'; the violated "
                          "field is 'grid'", module=_MODULE, op="config")
    x_min, x_max = float(parts[0]), float(parts[1])
    n = int(parts[2]) if len(parts) == 3 else _default_grid_points()
    return Grid(x_min, x_max, n)


def _build_params(args) -> MicrostateParams:
    """Parse --params: (mu, nu), Floyd's (a, b, c), or the free-particle
    closed-form constants (A, B), which map to the triple
    (A^2 + B^2, 1, -2B) on the analytic (sin, cos) basis."""
    text = str(args.params)
    fields = {}
    for chunk in text.split(","):
        if "=" not in chunk:
            raise ConfigError("params must be 'mu=..,nu=..', 'a=..,b=..,c=..' "
                              "or 'A=..,B=..'; the violated field is 'params'",
                              module=_MODULE, op="config")
        key, _, value = chunk.partition("=")
        fields[key.strip()] = float(value)
    if set(fields) == {"mu", "nu"}:
        return MicrostateParams.from_mu_nu(fields["mu"], fields["nu"])
    if set(fields) == {"a", "b", "c"}:
        return MicrostateParams.from_floyd(fields["a"], fields["b"], fields["c"])
    if set(fields) == {"A", "B"}:
        big_a, big_b = fields["A"], fields["B"]
        if big_a == 0.0:
            raise ConfigError("A must be nonzero; the violated field is "
                              "'params'", module=_MODULE, op="config")
        if getattr(args, "potential", "free") != "free":
            raise ConfigError("A=..,B=.. params apply to the free potential "
                              "only; the violated field is 'params'",
                              module=_MODULE, op="config")
        args.analytic_pair = True   # the mapping presumes the (sin, cos) basis
        return MicrostateParams.from_floyd(big_a**2 + big_b**2, 1.0,
                                           -2.0 * big_b)
    raise ConfigError("params must carry (mu, nu), (a, b, c) or (A, B); the "
                      "violated field is 'params'", module=_MODULE, op="config")


def _make_pair_for(args, spec, grid, units):
    # --wronskian defaults to the pair's natural value: -k for the analytic
    # (sin, cos) pair, +1 for the (1,0)/(0,1) Numerov pair
    target = None if args.wronskian in (None, "natural") \
        else float(args.wronskian)
    if args.potential == "free" and args.analytic_pair:
        return analytic_free_pair(float(args.energy), grid, units,
                                  target_wronskian=target)
    return make_pair(spec, float(args.energy), grid, units,
                     target_wronskian=1.0 if target is None else target)


# ----------------------------------------------------------------------
# Subcommand implementations
# ----------------------------------------------------------------------

def _cmd_pair(args) -> int:
    units = _build_units(args)
    spec = _build_potential(args, units)
    grid = _build_grid(args)
    pair = _make_pair_for(args, spec, grid, units)
    pair_to_csv(pair, args.output)
    return 0


def _cmd_action(args) -> int:
    units = _build_units(args)
    spec = _build_potential(args, units)
    grid = _build_grid(args)
    params = _build_params(args)
    pair = _make_pair_for(args, spec, grid, units)
    field = build_field(pair, params)
    field_to_csv(field, spec, args.output)
    return 0


def _parse_span(text, what):
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"{what} must be 't0:t1'; the violated field is "
                          f"'{what}'", module=_MODULE, op="config")
    return float(parts[0]), float(parts[1])


def _cmd_trajectory(args) -> int:
    units = _build_units(args)
    spec = _build_potential(args, units)
    grid = _build_grid(args)
    params = _build_params(args)
    pair = _make_pair_for(args, spec, grid, units)
    field = build_field(pair, params)
    t0, t1 = _parse_span(args.t, "t")
    traj = integrate_trajectory(field, spec, float(args.x0), (t0, t1),
                                tol=float(args.tol),
                                n_samples=int(args.samples))
    trajectory_to_csv(traj, args.output)
    if traj.status != "completed":
        sys.stderr.write(json.dumps({
            "module": "dynamics", "op": "integrate_trajectory",
            "message": f"trajectory {traj.status} at t={traj.exit_time}",
            "x": traj.exit_position}) + "\n")
    return 0


def _cmd_quantize(args) -> int:
    units = _build_units(args)
    spec = _build_potential(args, units)
    grid = _build_grid(args)
    record = bound_state(spec, grid, int(args.state), units)
    params_list = enumerate_microstates(record, int(args.microstates))
    payload = []
    for params in params_list:
        payload.append(json.loads(quantization_report(record, params,
                                                      int(args.state))))
    text = json.dumps(payload if len(payload) > 1 else payload[0],
                      indent=2, sort_keys=True)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return 0


def _cmd_spherical(args) -> int:
    units = _build_units(args)
    inner = PotentialSpec.free() if args.potential == "free" \
        else _build_potential(args, units)
    qn = SphericalQuantumNumbers(int(args.ell), int(args.m_ell))
    r_grid = _build_grid_from(args.r_window, args)
    th_grid = _build_grid_from(args.theta_window, args)
    params = _build_params(args)
    triple = build_triple(inner, qn, float(args.energy), r_grid, th_grid,
                          params, params, params, units)
    report = json.loads(component_report(triple))
    rr = np.linspace(r_grid.x_min + 10 * r_grid.spacing,
                     r_grid.x_max - 10 * r_grid.spacing, 8)
    tt = np.linspace(th_grid.x_min + 10 * th_grid.spacing,
                     th_grid.x_max - 10 * th_grid.spacing, 8)
    pp = np.linspace(0.3, 5.9, 8)
    grids = np.meshgrid(rr, tt, pp, indexing="ij")
    res = total_qshje_residual(triple, *grids)
    report["total_residual_max"] = float(np.max(np.abs(res)))
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


def _build_grid_from(text, args) -> Grid:
    parts = str(text).split(":")
    if len(parts) not in (2, 3):
        raise ConfigError("window must be 'lo:hi[:npoints]'",
                          module=_MODULE, op="config")
    n = int(parts[2]) if len(parts) == 3 else _default_grid_points()
    return Grid(float(parts[0]), float(parts[1]), n)


def _cmd_compare_floyd(args) -> int:
    units = _build_units(args)
    params = _build_params(args)
    if params.form != "floyd":
        raise ConfigError("compare-floyd requires a=..,b=..,c=.. params",
                          module=_MODULE, op="config")
    energy = float(args.energy)
    lo, hi = _parse_span(args.x, "x")
    xs = np.linspace(lo, hi, int(args.samples))
    t_dispersion = dispersion_free_trajectory(energy, params.a, params.b,
                                              params.c, xs, units)
    t_floyd = floyd_free_trajectory(energy, params.a, params.b, params.c,
                                    xs, units)
    t_classical = np.sqrt(units.mass / (2.0 * energy)) * xs
    data = np.column_stack([xs, t_dispersion, t_floyd, t_classical])
    np.savetxt(args.output, data, delimiter=",", fmt=CSV_FLOAT_FORMAT,
               header="x,t_dispersion,t_floyd,t_classical", comments="")
    return 0


def _cmd_residuals(args) -> int:
    units = _build_units(args)
    spec = _build_potential(args, units)
    grid = _build_grid(args)
    params = _build_params(args)
    pair = _make_pair_for(args, spec, grid, units)
    field = build_field(pair, params)
    margin = 5
    xs = field.x[margin:-margin]
    q = qshje_residual(field, spec, xs)
    vb_a = bohm_quantum_potential(field, xs, route="amplitude")
    vb_b = bohm_quantum_potential(field, xs, route="bracket")
    norm = max(abs(field.energy), 1.0)
    i_mid = grid.n_points // 2
    mod = modified_potential_residual(field, spec, field.x[i_mid])
    payload = {
        "energy": field.energy,
        "qshje_residual_max_abs": float(np.max(np.abs(q))),
        "qshje_residual_max_rel": float(np.max(np.abs(q)) / norm),
        "bohm_routes_gap_max": float(np.max(np.abs(vb_a - vb_b))),
        "modified_potential_residual_mid_abs": float(abs(mod)),
        "modified_potential_residual_mid_rel": float(abs(mod) / norm),
        "wronskian_drift_rel": float(np.max(np.abs(
            pair.wronskian_samples() - pair.wronskian)) / abs(pair.wronskian)),
    }
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_accept(args) -> int:
    from . import acceptance
    results = acceptance.run_all(verbose=True)
    return 0 if all(r.passed for r in results) else 1


# ----------------------------------------------------------------------
# Sweeps
# ----------------------------------------------------------------------

def _cmd_sweep(args) -> int:
    axis_values = []
    swept = []
    if args.hbar_list:
        swept.append("hbar")
        axis_values = [float(v) for v in str(args.hbar_list).split(",") if v]
    if args.params_list:
        swept.append("params")
        axis_values = [chunk for chunk in str(args.params_list).split(";") if chunk]
    if len(swept) != 1:
        raise ConfigError("exactly one swept axis required "
                          "(--hbar-list or --params-list)",
                          module=_MODULE, op="sweep")
    if not axis_values:
        raise ConfigError("sweep list is empty", module=_MODULE, op="sweep")

    def run_one(value):
        units = UnitSystem(hbar=float(value), mass=float(args.mass)) \
            if swept[0] == "hbar" else _build_units(args)
        spec = _build_potential(args, units)
        grid = _build_grid(args)
        if swept[0] == "params":
            class _A:  # narrow shim for _build_params
                params = value
            p = _build_params(_A)
        else:
            p = _build_params(args)
        if args.mode == "trajectory":
            pair = analytic_free_pair(float(args.energy), grid, units) \
                if args.potential == "free" and args.analytic_pair else \
                make_pair(spec, float(args.energy), grid, units)
            field = build_field(pair, p)
            t0, t1 = _parse_span(args.t, "t")
            traj = integrate_trajectory(field, spec, float(args.x0), (t0, t1),
                                        tol=float(args.tol),
                                        n_samples=int(args.samples))
            classical = float(args.x0) + math.sqrt(2.0 * float(args.energy)
                                                   / units.mass) * (traj.t - t0)
            dev = np.abs(traj.x - classical)
            rows = [(traj.t[i], traj.x[i], traj.xdot[i], float(dev[i]),
                     float(np.max(dev))) for i in range(traj.t.size)]
            header = "sweep_value,t,x,xdot,abs_dev_from_classical,max_dev"
        elif args.mode == "quantize":
            record = bound_state(spec, grid, int(args.state), units)
            j = action_variable(record.pair, p)
            h_planck = 2.0 * math.pi * units.hbar
            rows = [(float(args.state), record.energy, j / h_planck,
                     record.node_count_phys, record.node_count_partner)]
            header = "sweep_value,state,energy,J_over_h,node_phys,node_partner"
        else:
            raise ConfigError(f"unknown sweep mode {args.mode!r}",
                              module=_MODULE, op="sweep")
        return rows, header

    with ThreadPoolExecutor(max_workers=min(8, len(axis_values))) as pool:
        results = list(pool.map(run_one, axis_values))

    header = results[0][1]
    lines = [header]
    for value, (rows, _) in zip(axis_values, results):
        tag = _fmt(float(value)) if swept[0] == "hbar" else f'"{value}"'
        for row in rows:
            lines.append(",".join([str(tag)] + [_fmt(float(c)) for c in row]))
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", default=None,
                     help="flat key=value scenario file; flags override")
    sub.add_argument("--hbar", default=1.0)
    sub.add_argument("--mass", default=1.0)
    sub.add_argument("--potential", default="free",
                     choices=["free", "linear", "harmonic", "tabulated", "radial"])
    sub.add_argument("--omega", default=1.0)
    sub.add_argument("--slope", default=1.0)
    sub.add_argument("--table", default=None)
    sub.add_argument("--ell", default=0)
    sub.add_argument("--energy", default=0.5)
    sub.add_argument("--grid", default="-6.0:6.0")
    sub.add_argument("--wronskian", default="natural")
    sub.add_argument("--params", default="mu=0,nu=0")
    sub.add_argument("--analytic-pair", action="store_true", dest="analytic_pair",
                     help="use the exact (sin, cos) pair for the free potential")
    sub.add_argument("-o", "--output", default=None, required=False)


def build_parser() -> argparse.ArgumentParser:
    parser = _TrackingParser(prog="qshje",
                             description="Deterministic quantum trajectories "
                                         "from the stationary quantum "
                                         "Hamilton-Jacobi equation.")
    subs = parser.add_subparsers(dest="command")

    p_pair = subs.add_parser("pair", help="independent solution pair to CSV")
    _add_common(p_pair)

    p_action = subs.add_parser("action", help="reduced-action field to CSV")
    _add_common(p_action)

    p_traj = subs.add_parser("trajectory", help="integrate a quantum trajectory")
    _add_common(p_traj)
    p_traj.add_argument("--x0", default=0.0)
    p_traj.add_argument("--t", default="0:10")
    p_traj.add_argument("--tol", default=1e-11)
    p_traj.add_argument("--samples", default=200)

    p_q = subs.add_parser("quantize", help="action-variable quantization report")
    _add_common(p_q)
    p_q.add_argument("--state", default=0)
    p_q.add_argument("--microstates", default=1)

    p_s = subs.add_parser("spherical", help="3-D decomposition report")
    _add_common(p_s)
    p_s.add_argument("--m-ell", default=0, dest="m_ell")
    p_s.add_argument("--r-window", default="0.5:8.0", dest="r_window")
    p_s.add_argument("--theta-window", default="0.35:2.7916", dest="theta_window")

    p_f = subs.add_parser("compare-floyd", help="dispersion-route vs Floyd trajectories")
    _add_common(p_f)
    p_f.add_argument("--x", default="0.1:6.0")
    p_f.add_argument("--samples", default=512)

    p_r = subs.add_parser("residuals", help="defining-equation residual report")
    _add_common(p_r)

    p_a = subs.add_parser("accept", help="run the acceptance suite")
    p_a.add_argument("--config", default=None)

    p_w = subs.add_parser("sweep", help="one-axis sweep to long-format CSV")
    _add_common(p_w)
    p_w.add_argument("--mode", default="trajectory",
                     choices=["trajectory", "quantize"])
    p_w.add_argument("--hbar-list", default=None, dest="hbar_list")
    p_w.add_argument("--params-list", default=None, dest="params_list")
    p_w.add_argument("--x0", default=0.0)
    p_w.add_argument("--t", default="0:10")
    p_w.add_argument("--tol", default=1e-11)
    p_w.add_argument("--samples", default=200)
    p_w.add_argument("--state", default=0)

    return parser


_HANDLERS = {
    "pair": _cmd_pair,
    "action": _cmd_action,
    "trajectory": _cmd_trajectory,
    "quantize": _cmd_quantize,
    "spherical": _cmd_spherical,
    "compare-floyd": _cmd_compare_floyd,
    "residuals": _cmd_residuals,
    "accept": _cmd_accept,
    "sweep": _cmd_sweep,
}


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on unknown flags, matching the config-error code
        return int(exc.code) if exc.code else 0
    if not args.command:
        parser.print_usage()
        return 2
    try:
        args = _merge_config(args)
        if args.command not in ("accept",) and not getattr(args, "output", None):
            raise ConfigError("an --output file is required; the violated "
                              "field is 'output'", module=_MODULE, op="config")
        return _HANDLERS[args.command](args)
    except ConfigError as err:
        sys.stderr.write(json.dumps(err.to_json_dict()) + "\n")
        return 2
    except QshjeError as err:
        sys.stderr.write(json.dumps(err.to_json_dict()) + "\n")
        return 3


def main(argv=None) -> int:
    return run_command(argv)


if __name__ == "__main__":
    sys.exit(main())
