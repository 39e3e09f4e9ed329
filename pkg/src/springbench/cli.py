"""Command-line front end: simulate, analyze, sweep, plotdata, calibrate, compliance."""

from __future__ import annotations

import argparse
import json
import os
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, records
from .config import load_config, parse_quantity
from .curve import LOADING
from .errors import (BenchError, ConfigError, InvalidInputError, NoYieldError, RecordError,
                     SolverError, UnderdeterminedError)
from .mechanics import (attenuation_orders, calibrate_load_train, fixed_guided_beam_stiffness,
                        misalignment_attenuation, series_stiffness, specimen_stiffness)
from .protocol import protocol_sweep
from .simulator import SOLVER_ERROR, run_fatigue, run_monotonic

log = logging.getLogger("springbench")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def _mpa(x):
    return "n/a" if x is None else f"{x / 1e6:.4f} MPa"


def _gpa(x):
    return "n/a" if x is None else f"{x / 1e9:.4f} GPa"


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_simulate(args):
    cfg = _load(args)
    bench = cfg.bench()
    if cfg.monotonic is not None:
        record = run_monotonic(bench, cfg.monotonic)
    elif cfg.fatigue is not None:
        outcome, record = run_fatigue(bench, cfg.fatigue)
    else:
        raise ConfigError(f"{cfg.name}: 'simulate' needs a monotonic or fatigue section; use 'sweep'")
    records.write_record(record, args.out)
    term = record.termination
    print(f"{cfg.name}: {len(record)} samples, termination={term.status}")
    if record.outcome is not None:
        o = record.outcome
        print(f"fatigue: {o.status} after {o.cycles} cycles (damage {o.damage:.6g})")
    if term.status == SOLVER_ERROR:
        log.error("solver failed at sample %s: %s", term.sample_index, term.message)
        return EXIT_SOLVER
    return EXIT_OK


def monotonic_report_dict(rep):
    return {"kind": "monotonic", "E_loading_Pa": rep.E_loading, "E_unloading_Pa": rep.E_unloading,
            "sigma_y_offset02_Pa": rep.sigma_y_offset02,
            "yield": "reached" if rep.sigma_y_offset02 is not None else "not reached",
            "uts_Pa": rep.uts, "elongation_at_failure": rep.elongation_at_failure,
            "diagnostics": rep.diagnostics, "notes": rep.notes}


def monotonic_report_text(rep):
    lines = ["monotonic test report",
             f"  E (loading)         {_gpa(rep.E_loading)}",
             f"  E (unloading)       {_gpa(rep.E_unloading)}",
             f"  0.2% offset yield   {_mpa(rep.sigma_y_offset02) if rep.sigma_y_offset02 is not None else 'not reached'}",
             f"  UTS                 {_mpa(rep.uts)}",
             f"  strain at failure   {'n/a' if rep.elongation_at_failure is None else f'{rep.elongation_at_failure:.6f}'}"]
    for key, d in rep.diagnostics.items():
        if isinstance(d, dict):
            lines.append(f"  {key}: strain [{d['strain_min']:.6g}, {d['strain_max']:.6g}], "
                         f"n={d['n_points']}, R^2={d['r_squared']:.6f}")
    lines += [f"  note: {n}" for n in rep.notes]
    return "\n".join(lines) + "\n"


def cycle_report_dict(rep):
    return {"kind": "fatigue", "sigma_max_Pa": rep.sigma_max, "sigma_min_Pa": rep.sigma_min,
            "sigma_mean_Pa": rep.sigma_mean, "sigma_amp_Pa": rep.sigma_amp,
            "delta_eps_pl": rep.delta_eps_pl, "outcome": rep.outcome, "notes": rep.notes}


def cycle_report_text(rep):
    lines = ["fatigue cycle report (last recorded cycle)",
             f"  sigma max / min     {_mpa(rep.sigma_max)} / {_mpa(rep.sigma_min)}",
             f"  sigma mean / amp    {_mpa(rep.sigma_mean)} / {_mpa(rep.sigma_amp)}",
             f"  plastic strain range {rep.delta_eps_pl * 100:.5f} %"]
    if rep.outcome:
        o = rep.outcome
        lines.append(f"  outcome             {o['status']} after {o['cycles']} cycles ({o['reason']})")
    lines += [f"  note: {n}" for n in rep.notes]
    return "\n".join(lines) + "\n"


def cmd_analyze(args):
    record = records.read_record(args.record)
    if record.kind == "monotonic":
        rep = analysis.analyze_monotonic(record)
        doc, text = monotonic_report_dict(rep), monotonic_report_text(rep)
    else:
        rep = analysis.analyze_fatigue(record)
        doc, text = cycle_report_dict(rep), cycle_report_text(rep)
    if args.out:
        out = Path(args.out)
        records.write_text_atomic(out, json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n")
        records.write_text_atomic(out.with_suffix(".txt"), text)
    sys.stdout.write(text)
    return EXIT_OK


def _fatigue_job(job):
    bench, protocol = job
    outcome, _ = run_fatigue(bench, protocol, keep_record=False)
    return outcome


def sn_plot_rows(outcomes):
    for o in outcomes:
        s = o.stats
        yield [np.log10(o.cycles), s.sigma_amp / 1e6, s.sigma_mean / 1e6, 0 if o.failed else 1]


SN_HEADER = ["log10_N", "sigma_a_MPa", "sigma_m_MPa", "censored"]


def cmd_sweep(args):
    cfg = _load(args)
    if cfg.sweep is None:
        raise ConfigError(f"{cfg.name}: 'sweep' needs a sweep section")
    out = Path(args.out)
    protocols, excluded = protocol_sweep(cfg.sweep.means, cfg.sweep.amplitudes, **cfg.sweep.protocol_kwargs())
    excl_rows = [[e.mean_displacement, e.amplitude_pp, e.reason] for e in excluded]
    records.write_text_atomic(out / "exclusions.csv",
                              records.csv_text(["mean_displacement_m", "amplitude_pp_m", "reason"], excl_rows))
    if not protocols:
        print(f"error: every (mean, amplitude) pair is infeasible; see {out / 'exclusions.csv'}", file=sys.stderr)
        return EXIT_CONFIG
    bench = cfg.bench()
    jobs = [(bench, p) for p in protocols]
    if args.jobs and args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_fatigue_job, jobs))
    else:
        outcomes = [_fatigue_job(j) for j in jobs]
    uts = cfg.material.uts
    records.write_text_atomic(out / "summary.csv",
                              records.csv_text(records.SUMMARY_HEADER, records.summary_rows(outcomes, uts)))
    records.write_text_atomic(out / "sn_plotdata.csv", records.csv_text(SN_HEADER, sn_plot_rows(outcomes)))
    try:
        model = analysis.fit_sn(outcomes, uts)
        fit = {"sigma_f_Pa": model.sigma_f, "b": model.b, "uts_Pa": uts,
               "n_failures": len(outcomes) - len(model.runouts), "n_runouts": len(model.runouts),
               "residuals": [float(r) for r in model.residuals],
               "flagged_runouts": [[o.protocol.mean_displacement, o.protocol.amplitude_pp] for o in model.flagged]}
    except UnderdeterminedError as exc:
        fit = {"error": str(exc)}
    records.write_text_atomic(out / "sn_fit.json", json.dumps(fit, indent=2, sort_keys=True) + "\n")
    n_fail = sum(o.failed for o in outcomes)
    print(f"{cfg.name}: {len(outcomes)} runs ({n_fail} failed, {len(outcomes) - n_fail} runout), "
          f"{len(excluded)} excluded")
    return EXIT_OK


def cmd_plotdata(args):
    path = Path(args.input)
    if args.kind == "s-n":
        outcomes = records.read_summary(path)
        text = records.csv_text(SN_HEADER, sn_plot_rows(outcomes))
    else:
        record = records.read_record(path)
        if args.kind == "stress-strain":
            curve = analysis.reduce(record, record.bench.geometry, record.bench.train.k_sensor)
            rows = ([e, s / 1e6, "loading" if ld else "unloading"]
                    for e, s, ld in zip(curve.strain, curve.stress, curve.loading))
            text = records.csv_text(["strain", "stress_MPa", "series"], rows)
        else:
            flags = analysis.direction_flags(record.u_act)
            rows = ([t, u * 1e6, "loading" if ld else "unloading"]
                    for t, u, ld in zip(record.t, record.u_act, flags))
            text = records.csv_text(["t_s", "u_act_um", "series"], rows)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_calibrate(args):
    cfg = _load(args)
    target = parse_quantity(args.target, "stress_per_length")
    k_align = calibrate_load_train(target, cfg.geometry, cfg.material.youngs_modulus, cfg.train.k_sensor)
    k_spec = specimen_stiffness(cfg.geometry, cfg.material.youngs_modulus)
    print(f"k_sensor   {cfg.train.k_sensor:.9g} N/m")
    print(f"k_specimen {k_spec:.9g} N/m")
    print(f"k_align    {k_align:.9g} N/m")
    return EXIT_OK


def cmd_compliance(args):
    if args.what == "beam":
        k = fixed_guided_beam_stiffness(parse_quantity(args.E, "pressure"), parse_quantity(args.width, "length"),
                                        parse_quantity(args.thickness, "length"),
                                        parse_quantity(args.length, "length"))
        print(f"k {k:.9g} N/m")
    elif args.what == "series":
        k = series_stiffness([parse_quantity(s, "stiffness") for s in args.k])
        print(f"k {k:.9g} N/m")
    else:
        r = misalignment_attenuation(parse_quantity(args.axial, "stiffness"),
                                     parse_quantity(args.lateral, "stiffness"),
                                     parse_quantity(args.specimen, "stiffness"))
        print(f"ratio {r:.9g}")
        print(f"orders {attenuation_orders(r):.9g}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="springbench", description="Virtual spring-bridged micro-tensile bench.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="config file or bundled config name")
        sp.add_argument("--seed", type=int, help="override the config seed")
        if out:
            sp.add_argument("--out", required=True)
        sp.add_argument("--format", choices=["csv"], default="csv")

    sp = sub.add_parser("simulate", help="run one monotonic or fatigue test")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="reduce a record to a report")
    sp.add_argument("record")
    sp.add_argument("--out", help="JSON report path; a .txt twin is written beside it")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("sweep", help="fatigue protocol grid + S-N fit")
    common(sp)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("plotdata", help="CSV plot data on stdout")
    sp.add_argument("input")
    sp.add_argument("--kind", required=True, choices=["stress-strain", "s-n", "waveform"])
    sp.add_argument("--format", choices=["csv"], default="csv")
    sp.set_defaults(func=cmd_plotdata)

    sp = sub.add_parser("calibrate", help="alignment stiffness for a stress-per-displacement target")
    common(sp, out=False)
    sp.add_argument("--target", default="111.111111111 MPa/um")
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("compliance", help="beam and spring stiffness helpers")
    csub = sp.add_subparsers(dest="what", required=True)
    b = csub.add_parser("beam")
    for name in ("E", "width", "thickness", "length"):
        b.add_argument(f"--{name}", required=True)
    s = csub.add_parser("series")
    s.add_argument("k", nargs="+")
    m = csub.add_parser("misalignment")
    for name in ("axial", "lateral", "specimen"):
        m.add_argument(f"--{name}", required=True)
    sp.set_defaults(func=cmd_compliance)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except BrokenPipeError:
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except (ConfigError, InvalidInputError, NoYieldError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, RecordError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
