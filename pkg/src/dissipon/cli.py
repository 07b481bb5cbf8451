"""Scenario runner: one subcommand per experiment, CSV/binary outputs.

Every run writes its tables (with tolerances and cutoffs embedded in the
metadata block), a manifest recording parameters / version / wall time,
and returns exit code 0.  Physics and regime failures exit 1 with the
module's diagnostic; usage and config errors exit 2.

A config file given via --config overrides the corresponding flags, so a
run can be pinned down in a diff-friendly text file.  Parameter sweeps fan
out over a process pool and are merged in input order.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DissiponError
from .field import (FieldGrid, evolve_field_with_source, hamiltonian_identity_check,
                    lattice_memory_kernel, modes_from_fields, write_snapshot)
from .io import emit_table, parse_config, write_manifest
from .langevin import PotentialSpec, evolve_mean_markov, evolve_mean_volterra
from .oscillator import (FockTriple, OscillatorParams, asymptotic_reservoir_energy,
                         asymptotic_system_energy, damped_frequency,
                         thermal_steady_energy)
from .quadrature import QuadratureConfig
from .rates import (RateRequest, finite_time_emission_probability,
                    rate_emission_vacuum, rates_fock, rates_thermal)
from .reservoir import CouplingFunction, MemoryKernel, ReservoirState
from .tls import BlochState, TwoLevelParams, decay_rate_mu, evolve_bloch_markov

EXIT_OK = 0
EXIT_PHYSICS = 1
EXIT_USAGE = 2


def _parse_triple(text):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ConfigError(f"expected three comma-separated values, got {text!r}")
    return tuple(float(p) for p in parts)


def _parse_fock_triple(text):
    vals = _parse_triple(text)
    return FockTriple(*(int(v) for v in vals))


def _coupling(args):
    if getattr(args, "coupling_file", None):
        return CouplingFunction.from_file(args.coupling_file,
                                          uv_cutoff=args.uv_cutoff)
    return CouplingFunction.canonical(args.beta, uv_cutoff=args.uv_cutoff)


def _quad_config(args, *frequencies):
    overrides = {}
    if getattr(args, "uv_cutoff", None):
        overrides["uv_cutoff"] = args.uv_cutoff
    if getattr(args, "ir_cutoff", None):
        overrides["ir_cutoff"] = args.ir_cutoff
    return QuadratureConfig.for_frequencies(*frequencies, **overrides)


def _metadata(args, cfg, **extra):
    meta = {
        "experiment": args.experiment,
        "abs_tol": cfg.abs_tol,
        "rel_tol": cfg.rel_tol,
        "uv_cutoff": cfg.uv_cutoff,
        "ir_cutoff": cfg.ir_cutoff,
    }
    meta.update(extra)
    return meta


def cmd_kernel(args, out_dir):
    coup = _coupling(args)
    cfg = _quad_config(args, args.omega)
    times = np.arange(0.0, args.tmax + args.step / 2.0, args.step)
    kern = MemoryKernel.sample(coup, times, cfg)
    from .reservoir import friction_coefficient
    beta_eff = friction_coefficient(coup, cfg)
    path = out_dir / "kernel.csv"
    emit_table(path, ["t", "gamma"],
               zip(kern.times, kern.values),
               metadata=_metadata(args, cfg, beta_eff=beta_eff))
    return {"beta_eff": beta_eff}, [path]


def cmd_langevin(args, out_dir):
    pot = PotentialSpec.harmonic(args.m, args.omega) if args.omega > 0 \
        else PotentialSpec.free()
    grid = np.arange(0.0, args.tmax + args.step / 2.0, args.step)
    x0 = _parse_triple(args.x0)
    v0 = _parse_triple(args.v0)
    cfg = _quad_config(args, max(args.omega, 1.0 / args.tmax))
    if args.volterra:
        coup = _coupling(args)
        kern = MemoryKernel.sample(coup, grid, cfg)
        traj = evolve_mean_volterra(args.m, pot, kern, x0, v0, grid)
    else:
        traj = evolve_mean_markov(args.m, pot, args.beta, x0, v0, grid)
    path = out_dir / "trajectory.csv"
    rows = ((traj.times[i], *traj.positions[i], *traj.velocities[i])
            for i in range(len(traj.times)))
    emit_table(path, ["t", "x1", "x2", "x3", "v1", "v2", "v3"], rows,
               metadata=_metadata(args, cfg, solver="volterra" if args.volterra
                                  else "markov"))
    return {}, [path]


def cmd_oscillator(args, out_dir):
    p = OscillatorParams(args.m, args.omega, args.beta)
    n = _parse_fock_triple(args.n)
    cfg = _quad_config(args, args.omega)
    w1 = damped_frequency(p)
    sys_e = asymptotic_system_energy(p, n)
    res_e = asymptotic_reservoir_energy(p, n, cfg)
    rows = [
        ("omega1", w1),
        ("system_energy_velocity_form", sys_e.velocity_form),
        ("system_energy_canonical_form", sys_e.canonical_form),
        ("reservoir_energy_numeric", res_e.numeric),
        ("reservoir_energy_closed_form", res_e.residue_closed_form),
    ]
    summary = {k: v for k, v in rows}
    if args.kt is not None:
        cfg_t = _quad_config(args, args.omega, args.kt)
        thermal = thermal_steady_energy(p, args.kt, cfg_t)
        rows.append(("thermal_energy_direct", thermal.direct))
        rows.append(("thermal_energy_mode_sum", thermal.mode_sum))
        summary["thermal_direct"] = thermal.direct
    path = out_dir / "oscillator.csv"
    emit_table(path, ["quantity", "value"], rows, metadata=_metadata(args, cfg))
    return summary, [path]


def cmd_rates(args, out_dir):
    p = OscillatorParams(args.m, args.omega, args.beta)
    n = _parse_fock_triple(args.n)
    coup = _coupling(args)
    cfg = _quad_config(args, args.omega)
    rows = []
    if args.thermal:
        if args.kt is None:
            raise ConfigError("--thermal requires --kt")
        state = ReservoirState.thermal(args.kt)
        pair = rates_thermal(RateRequest(p, n, state, coup))
        rows.append((f"{n.n1} {n.n2} {n.n3}", f"thermal kT={args.kt}",
                     pair.emission, pair.absorption))
    elif args.fock:
        momenta = [_parse_triple(tok) for tok in args.fock]
        state = ReservoirState.fock(momenta)
        pair = rates_fock(RateRequest(p, n, state, coup))
        rows.append((f"{n.n1} {n.n2} {n.n3}", f"fock r={len(momenta)}",
                     pair.emission, pair.absorption))
    else:
        state = ReservoirState.vacuum()
        req = RateRequest(p, n, state, coup,
                          t=args.t if args.t and args.t > 0 else None)
        if req.t is not None:
            prob = finite_time_emission_probability(req, cfg)
            rows.append((f"{n.n1} {n.n2} {n.n3}", f"vacuum t={args.t}",
                         prob / args.t, 0.0))
        else:
            rows.append((f"{n.n1} {n.n2} {n.n3}", "vacuum",
                         rate_emission_vacuum(req), 0.0))
    path = out_dir / "rates.csv"
    emit_table(path, ["n", "reservoir", "emission", "absorption"], rows,
               metadata=_metadata(args, cfg))
    return {"emission": rows[0][2], "absorption": rows[0][3]}, [path]


def cmd_tls(args, out_dir):
    coup = _coupling(args)
    x12 = np.zeros(3)
    x12[0] = np.sqrt(args.x12sq)
    p = TwoLevelParams(args.omega0, tuple(x12), coup)
    cfg = _quad_config(args, args.omega0)
    if cfg.ir_cutoff <= 0:
        cfg = QuadratureConfig(abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol,
                               uv_cutoff=cfg.uv_cutoff,
                               ir_cutoff=1e-6 * args.omega0)
    mu = decay_rate_mu(p)
    grid = np.linspace(0.0, args.tmax, args.steps + 1)
    hist = evolve_bloch_markov(p, BlochState(sz=args.sz0, f=args.f0), grid, cfg)
    path = out_dir / "tls_decay.csv"
    # ReF is the population-coherence quadrature <s + s^dag> (real for
    # physical states); ImF is the conjugate quadrature <s^dag - s>/i
    rows = ((hist.times[i], hist.sz[i], hist.f[i], hist.e_im[i])
            for i in range(len(hist.times)))
    emit_table(path, ["t", "sz", "ReF", "ImF"], rows,
               metadata=_metadata(args, cfg, mu=mu, decay_rate=2.0 * mu))
    return {"mu": mu}, [path]


def cmd_field(args, out_dir):
    coup = _coupling(args)
    grid = FieldGrid(n=args.modes, dx=args.dx, uv_cutoff=args.uv_cutoff)
    p = OscillatorParams(args.m, args.omega, args.beta)
    times = np.arange(0.0, args.tmax + args.step / 2.0, args.step)
    kern = lattice_memory_kernel(coup, grid, times)
    pot = PotentialSpec.harmonic(args.m, args.omega)
    traj = evolve_mean_volterra(args.m, pot, kern,
                                _parse_triple(args.x0), _parse_triple(args.v0),
                                times)
    hist = evolve_field_with_source(traj, coup, grid, method=args.method)
    e_mech = traj.mechanical_energy(args.m, args.omega)
    trace_path = out_dir / "field_energy.csv"
    emit_table(trace_path, ["t", "field_energy", "mechanical_energy"],
               zip(hist.times, hist.energy, e_mech),
               metadata={"experiment": args.experiment, "modes": args.modes,
                         "dx": args.dx, "uv_cutoff": args.uv_cutoff,
                         "method": args.method})
    snap_path = out_dir / "field_final.bin"
    write_snapshot(snap_path, hist.final_y, grid.dx)
    balance = (hist.energy[-1] - hist.energy[0]) / max(e_mech[0] - e_mech[-1], 1e-300)
    return {"energy_balance": balance}, [trace_path, snap_path]


EXPERIMENTS = {
    "kernel": cmd_kernel,
    "langevin": cmd_langevin,
    "oscillator": cmd_oscillator,
    "rates": cmd_rates,
    "tls": cmd_tls,
    "field": cmd_field,
}


def _add_common(sub):
    sub.add_argument("--out", default=".", help="output directory")
    sub.add_argument("--config", default=None,
                     help="key=value config file; its values override flags")
    sub.add_argument("--beta", type=float, default=0.1, help="friction coefficient")
    sub.add_argument("--m", type=float, default=1.0, help="particle mass")
    sub.add_argument("--uv-cutoff", dest="uv_cutoff", type=float, default=None)
    sub.add_argument("--ir-cutoff", dest="ir_cutoff", type=float, default=None)
    sub.add_argument("--coupling-file", dest="coupling_file", default=None,
                     help="two-column (w, f) table replacing the canonical coupling")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dissipon",
        description="Memory kernels, damped-oscillator energy flow, golden-rule "
                    "rates, two-level decay and the reservoir field of a "
                    "minimally coupled dissipative system.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="experiment", required=True)

    k = subs.add_parser("kernel", help="sample the memory kernel and its friction limit")
    _add_common(k)
    k.add_argument("--omega", type=float, default=1.0)
    k.add_argument("--tmax", type=float, default=5.0)
    k.add_argument("--step", type=float, default=1e-3)

    l = subs.add_parser("langevin", help="mean trajectory (Markovian or full memory)")
    _add_common(l)
    l.add_argument("--omega", type=float, default=1.0)
    l.add_argument("--tmax", type=float, default=20.0)
    l.add_argument("--step", type=float, default=1e-3)
    l.add_argument("--x0", default="1,0,0")
    l.add_argument("--v0", default="0,0,0")
    l.add_argument("--volterra", action="store_true",
                   help="solve the full memory equation instead of local friction")

    o = subs.add_parser("oscillator", help="damped-oscillator closed-form energies")
    _add_common(o)
    o.add_argument("--omega", type=float, default=1.0)
    o.add_argument("--n", default="0,0,0")
    o.add_argument("--kt", type=float, default=None,
                   help="also evaluate the thermal steady state at this temperature")

    r = subs.add_parser("rates", help="golden-rule transition rates")
    _add_common(r)
    r.add_argument("--omega", type=float, default=1.0)
    r.add_argument("--n", default="1,0,0")
    r.add_argument("--thermal", action="store_true")
    r.add_argument("--kt", type=float, default=None)
    r.add_argument("--fock", nargs="*", default=None,
                   help="reservoir quanta as px,py,pz triples")
    r.add_argument("--t", type=float, default=None,
                   help="finite observation time (vacuum reservoir)")

    t = subs.add_parser("tls", help="two-level population and coherence decay")
    _add_common(t)
    t.add_argument("--omega0", type=float, default=1.0)
    t.add_argument("--x12sq", type=float, default=1.0)
    t.add_argument("--tmax", type=float, default=100.0)
    t.add_argument("--steps", type=int, default=10000)
    t.add_argument("--sz0", type=float, default=1.0)
    t.add_argument("--f0", type=float, default=0.0)

    f = subs.add_parser("field", help="drive the reservoir field with a damped trajectory")
    _add_common(f)
    f.add_argument("--omega", type=float, default=1.0)
    f.add_argument("--modes", type=int, default=16)
    f.add_argument("--dx", type=float, default=1.0)
    f.add_argument("--tmax", type=float, default=20.0)
    f.add_argument("--step", type=float, default=0.02)
    f.add_argument("--x0", default="1,0,0")
    f.add_argument("--v0", default="0,0,0")
    f.add_argument("--method", choices=["kspace", "leapfrog"], default="kspace")

    s = subs.add_parser("sweep", help="run one experiment over a parameter sweep")
    s.add_argument("--config", required=True,
                   help="config with a [sweep] section (experiment, parameter, values)")
    s.add_argument("--out", default=".")
    s.add_argument("--workers", type=int, default=None)
    return parser


def _apply_config(args, parser):
    """Config-file values override flags, per the runner contract."""
    if not getattr(args, "config", None):
        return args
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    sections = parse_config(text)
    known = {a.dest: a for a in parser._actions}
    flat = dict(sections.get("", {}))
    flat.update(sections.get(args.experiment, {}))
    for key, value in flat.items():
        dest = key.replace("-", "_")
        if dest == "experiment":
            continue
        if dest not in known and not hasattr(args, dest):
            raise ConfigError(f"unknown config key {key!r}")
        current = getattr(args, dest, None)
        if isinstance(current, bool):
            setattr(args, dest, value.lower() in ("1", "true", "yes", "on"))
        elif isinstance(current, int) and not isinstance(current, bool):
            setattr(args, dest, int(value))
        elif isinstance(current, float):
            setattr(args, dest, float(value))
        else:
            setattr(args, dest, value)
    return args


def _run_single(argv):
    """Worker entry for sweeps: run one experiment command line."""
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary, outputs = EXPERIMENTS[args.experiment](args, out_dir)
    return summary, [str(p) for p in outputs]


def cmd_sweep(args, out_dir):
    text = Path(args.config).read_text()
    sections = parse_config(text)
    sweep = sections.get("sweep")
    if not sweep:
        raise ConfigError("sweep config needs a [sweep] section")
    for key in ("experiment", "parameter", "values"):
        if key not in sweep:
            raise ConfigError(f"[sweep] section is missing {key!r}")
    experiment = sweep["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown sweep experiment {experiment!r}")
    parameter = sweep["parameter"]
    values = [v for v in sweep["values"].replace(",", " ").split() if v]
    base = dict(sections.get(experiment, {}))
    base.update(sections.get("", {}))

    parser = build_parser()
    sub_action = next(a for a in parser._actions
                      if isinstance(a, argparse._SubParsersAction))
    flag_actions = {a.dest: a for a in sub_action.choices[experiment]._actions}

    jobs = []
    for i, value in enumerate(values):
        job_dir = out_dir / f"sweep_{i:04d}"
        argv = [experiment, "--out", str(job_dir)]
        params = dict(base)
        params[parameter] = value
        for key, val in params.items():
            dest = key.replace("-", "_")
            action = flag_actions.get(dest)
            if isinstance(action, argparse._StoreTrueAction):
                if str(val).lower() in ("1", "true", "yes", "on"):
                    argv.append(f"--{key.replace('_', '-')}")
            else:
                argv += [f"--{key.replace('_', '-')}", str(val)]
        jobs.append(argv)

    results = []
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        for summary, outputs in pool.map(_run_single, jobs):
            results.append((summary, outputs))

    rows = []
    for value, (summary, _) in zip(values, results):
        row = [value]
        row += [summary.get(k) for k in sorted(results[0][0].keys())]
        rows.append(row)
    path = out_dir / "sweep.csv"
    emit_table(path, [parameter] + sorted(results[0][0].keys()) if results else
               [parameter], rows,
               metadata={"experiment": experiment, "parameter": parameter})
    return {"jobs": len(jobs)}, [path]


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        if args.experiment != "sweep":
            args = _apply_config(args, parser)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.experiment == "sweep":
            summary, outputs = cmd_sweep(args, out_dir)
        else:
            summary, outputs = EXPERIMENTS[args.experiment](args, out_dir)
    except ConfigError as exc:
        print(f"dissipon: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DissiponError as exc:
        print(f"dissipon: {args.experiment}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    wall = time.perf_counter() - start
    params = {k: v for k, v in vars(args).items()
              if k not in ("experiment", "config", "out") and v is not None}
    write_manifest(out_dir / "manifest.txt", params, wall,
                   outputs=[Path(p).name for p in outputs])
    for key, value in summary.items():
        print(f"{key} = {value}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
