"""Command-line entry point for catalog building, cell training, the
robustness/yield/voltage/timing experiments, and BLIF mapping.

All outputs are plain CSV next to a run manifest (the fully resolved
configuration), so every report can be re-plotted externally.  Identical
configuration and seed produce byte-identical CSVs; the timestamped
header line is suppressed with --no-header.

Exit codes: 0 success, 2 validation error, 3 convergence failure,
4 I/O error.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from datetime import datetime, timezone

import click

from . import analysis, mapping, netlist, threshold
from .device import DeviceParams, verify_cell
from .train import (TrainConfig, TrainingError, kmax_bound, train,
                    train_robust, write_trace_csv)
from .truthtable import parse_truth_table, to_positive_form

EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


class CliError(click.ClickException):
    def __init__(self, message, exit_code):
        super().__init__(message)
        self.exit_code = exit_code


def _write_text(path: str, text: str, header: bool, label: str) -> None:
    try:
        with open(path, "w") as fp:
            if header:
                stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
                fp.write(f"# ftl {label} generated {stamp}\n")
            fp.write(text)
    except OSError as e:
        raise CliError(f"cannot write {path}: {e}", EXIT_IO)


def _write_manifest(out: str, config: dict, header: bool) -> None:
    _write_text(os.path.join(out, "manifest.json"),
                json.dumps(config, indent=2, sort_keys=True) + "\n",
                False, "manifest")
    del header


def _ensure_out(out: str) -> None:
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as e:
        raise CliError(f"cannot create output directory {out}: {e}", EXIT_IO)


def _capture_csv(write_fn) -> str:
    buf = io.StringIO()
    write_fn(buf)
    return buf.getvalue()


def _resolve_function(spec: str, weight_bound: int):
    """Function spec: 'hex:<digits>:<n>' or 'cat:<index>'."""
    if spec.startswith("cat:"):
        entries = threshold.build_catalog(5, weight_bound)
        try:
            idx = int(spec[4:])
            return entries[idx].table
        except (ValueError, IndexError):
            raise CliError(f"bad catalog index in {spec!r}", EXIT_VALIDATION)
    if spec.startswith("hex:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise CliError("hex spec must look like hex:<digits>:<n>",
                           EXIT_VALIDATION)
        try:
            return parse_truth_table(parts[1], int(parts[2]))
        except ValueError as e:
            raise CliError(str(e), EXIT_VALIDATION)
    if spec == "f115":
        return threshold.f115_table()
    raise CliError(f"unrecognized function spec {spec!r}", EXIT_VALIDATION)


def _device_params(vdd: float, delta: float) -> DeviceParams:
    try:
        return DeviceParams(vdd=vdd, delta=delta)
    except ValueError as e:
        raise CliError(str(e), EXIT_VALIDATION)


out_option = click.option("--out", default=".", show_default=True,
                          help="Output directory for CSV reports.")
no_header_option = click.option("--no-header", is_flag=True,
                                help="Suppress the timestamped header line.")
vdd_option = click.option("--vdd", default=0.9, show_default=True)
delta_option = click.option("--delta", default=0.02, show_default=True)
seed_option = click.option("--seed", default=0, show_default=True)


@click.group()
def main():
    """Flash threshold logic cell modeling, training, and mapping."""


@main.command("catalog")
@click.option("--n-max", default=5, show_default=True)
@click.option("--weight-bound", default=16, show_default=True)
@out_option
@no_header_option
def cmd_catalog(n_max, weight_bound, out, no_header):
    """Enumerate the NP-classes of threshold functions up to n-max inputs."""
    _ensure_out(out)
    try:
        entries = threshold.build_catalog(n_max, weight_bound)
    except ValueError as e:
        raise CliError(str(e), EXIT_VALIDATION)
    text = _capture_csv(lambda fp: threshold.write_catalog_csv(entries, fp))
    _write_text(os.path.join(out, "catalog.csv"), text, not no_header, "catalog")
    _write_manifest(out, {"command": "catalog", "n_max": n_max,
                          "weight_bound": weight_bound}, not no_header)
    click.echo(f"{len(entries)} catalog entries -> {out}/catalog.csv")


@main.command("train")
@click.argument("spec")
@click.option("--robust", is_flag=True, help="Run the margin schedule.")
@click.option("--margin-step", default=analysis.ROBUST_MARGIN_STEP,
              show_default=True)
@click.option("--max-margin", default=analysis.ROBUST_MAX_MARGIN,
              show_default=True)
@click.option("--weight-bound", default=16, show_default=True)
@vdd_option
@delta_option
@out_option
@no_header_option
def cmd_train(spec, robust, margin_step, max_margin, weight_bound,
              vdd, delta, out, no_header):
    """Train a cell for a function given as hex:<digits>:<n>, cat:<index>,
    or the name f115."""
    _ensure_out(out)
    tt = _resolve_function(spec, weight_bound)
    if threshold.check_threshold(tt, weight_bound) is None:
        raise CliError(f"{spec} is not a threshold function", EXIT_CONVERGENCE)
    positive, mask = to_positive_form(tt)
    params = _device_params(vdd, delta)
    cfg = TrainConfig(record_trace=True)
    if robust:
        try:
            result, achieved = train_robust(
                positive, params, cfg, margin_step, max_margin)
        except TrainingError as e:
            raise CliError(str(e), EXIT_CONVERGENCE)
    else:
        result = train(positive, params, cfg)
        achieved = 0.0
        if not result.converged:
            raise CliError("training did not converge within the iteration "
                           "bound", EXIT_CONVERGENCE)
    cell_doc = json.loads(result.cell.to_json())
    cell_doc["polarity_mask"] = mask
    cell_doc["achieved_margin"] = achieved
    _write_text(os.path.join(out, "cell.json"),
                json.dumps(cell_doc, indent=2) + "\n", False, "cell")
    text = _capture_csv(lambda fp: write_trace_csv(result.trace, fp))
    _write_text(os.path.join(out, "trace.csv"), text, not no_header, "trace")
    _write_manifest(out, {"command": "train", "spec": spec, "robust": robust,
                          "margin_step": margin_step, "max_margin": max_margin,
                          "vdd": vdd, "delta": delta}, not no_header)
    click.echo(f"converged in {result.iterations} iterations "
               f"(margin {achieved:g}) -> {out}/cell.json")


def _exp_iterations(params, args, seed):
    entries = threshold.build_catalog(5)
    rows = [["index", "n", "canonical_hex", "iterations", "kmax", "converged"]]
    for e in entries:
        positive, _ = to_positive_form(e.table)
        r = train(positive, params)
        rows.append([e.index, e.n, e.hex(), r.iterations,
                     kmax_bound(e.n, params.delta, params.vdd),
                     int(r.converged)])
    return {"iterations.csv": rows}


def _f115_schedule(params):
    return analysis.margin_schedule(threshold.f115_table(), params)


def _mc_config(args, seed):
    return analysis.McConfig(trials=int(args.get("trials", 10000)),
                             sigma_local=args["sigma_local"],
                             sigma_global=args["sigma_global"],
                             sigma_k=args["sigma_k"],
                             seed=seed)


def _exp_yield_sweep(params, args, seed):
    mc = _mc_config(args, seed)
    tt = threshold.f115_table()
    rows = [["margin", "min_separation", "worst_delay", "yield"]]
    for lv in _f115_schedule(params):
        rep = analysis.yield_mc(lv.result.cell, tt, mc)
        rows.append([f"{lv.margin:.3f}", f"{lv.min_separation:.6e}",
                     f"{lv.delay:.6e}", f"{rep.yield_fraction:.5f}"])
    return {"yield_sweep.csv": rows}


def _exp_conductivity(params, args, seed):
    tt = threshold.f115_table()
    levels = _f115_schedule(params)
    out = {}
    for tag, lv in (("baseline", levels[0]), ("robust", levels[-1])):
        cmap = analysis.conductivity_map(lv.result.cell, tt)
        rows = [["minterm", "g_left", "g_right", "onset"]]
        for r in cmap.records:
            rows.append([r.minterm, f"{r.g_left:.6e}", f"{r.g_right:.6e}",
                         int(r.onset)])
        rows.append(["min_onset_sep", f"{cmap.min_onset_sep:.6e}", "", ""])
        rows.append(["min_offset_sep", f"{cmap.min_offset_sep:.6e}", "", ""])
        out[f"conductivity_{tag}.csv"] = rows
    return out


def _exp_vdd_sweep(params, args, seed):
    tt = threshold.f115_table()
    lv = _f115_schedule(params)[-1]
    points = analysis.vdd_sweep(lv.result.cell, tt)
    rows = [["vdd", "vgate", "functional", "delay", "power"]]
    for pt in points:
        rows.append([f"{pt.vdd:.3f}", f"{pt.vgate:.3f}", int(pt.functional),
                     f"{pt.delay:.6e}", f"{pt.power:.6e}"])
    return {"vdd_sweep.csv": rows}


def _exp_delay_hist(params, args, seed):
    tt = threshold.f115_table()
    lv = _f115_schedule(params)[-1]
    rep = analysis.yield_mc(lv.result.cell, tt, _mc_config(args, seed))
    rows = [["bin_lo", "bin_hi", "count"]]
    for lo, hi, c in zip(rep.hist_edges[:-1], rep.hist_edges[1:],
                         rep.hist_counts):
        rows.append([f"{lo:.6e}", f"{hi:.6e}", int(c)])
    return {"delay_hist.csv": rows}


def _exp_timing_fix(params, args, seed):
    scenario = args.get("scenario", "setup")
    tt = threshold.f115_table()
    try:
        fix = analysis.run_timing_fix(tt, params, scenario)
    except (ValueError, analysis.RetuneError) as e:
        raise CliError(str(e), EXIT_CONVERGENCE)
    ok = verify_cell(fix.cell_after, tt)
    rows = [["stage", "launch_c2q", "setup_slack", "hold_slack", "violations",
             "verified"],
            ["before", f"{fix.delay_before:.6e}",
             f"{fix.before.setup_slack:.6e}", f"{fix.before.hold_slack:.6e}",
             "+".join(fix.before.violations) or "none", ""],
            ["after", f"{fix.delay_after:.6e}",
             f"{fix.after.setup_slack:.6e}", f"{fix.after.hold_slack:.6e}",
             "+".join(fix.after.violations) or "none", int(ok)]]
    return {f"timing_fix_{scenario}.csv": rows}


EXPERIMENTS = {
    "iterations": _exp_iterations,
    "yield-sweep": _exp_yield_sweep,
    "conductivity": _exp_conductivity,
    "vdd-sweep": _exp_vdd_sweep,
    "delay-hist": _exp_delay_hist,
    "timing-fix": _exp_timing_fix,
}


@main.command("experiments")
@click.argument("name")
@click.argument("args", nargs=-1)
@click.option("--trials", default=10000, show_default=True)
@click.option("--sigma-local", default=analysis.McConfig.sigma_local,
              show_default=True)
@click.option("--sigma-global", default=analysis.McConfig.sigma_global,
              show_default=True)
@click.option("--sigma-k", default=analysis.McConfig.sigma_k,
              show_default=True)
@vdd_option
@delta_option
@seed_option
@out_option
@no_header_option
def cmd_experiments(name, args, trials, sigma_local, sigma_global, sigma_k,
                    vdd, delta, seed, out, no_header):
    """Run a named experiment: iterations | yield-sweep | conductivity |
    vdd-sweep | delay-hist | timing-fix [setup|hold].

    Set FTL_THREADS to cap internal parallelism (the current implementation
    is single-threaded, so any value >= 1 is accepted).
    """
    if name not in EXPERIMENTS:
        raise CliError(f"unknown experiment {name!r}; choose from "
                       f"{', '.join(sorted(EXPERIMENTS))}", EXIT_VALIDATION)
    threads = os.environ.get("FTL_THREADS", "1")
    if not threads.isdigit() or int(threads) < 1:
        raise CliError("FTL_THREADS must be a positive integer",
                       EXIT_VALIDATION)
    _ensure_out(out)
    params = _device_params(vdd, delta)
    kwargs = {"trials": trials, "sigma_local": sigma_local,
              "sigma_global": sigma_global, "sigma_k": sigma_k}
    if name == "timing-fix":
        kwargs["scenario"] = args[0] if args else "setup"
        if kwargs["scenario"] not in ("setup", "hold"):
            raise CliError("timing-fix takes 'setup' or 'hold'", EXIT_VALIDATION)
    tables = EXPERIMENTS[name](params, kwargs, seed)
    for fname, rows in tables.items():
        buf = io.StringIO()
        csv.writer(buf).writerows(rows)
        _write_text(os.path.join(out, fname), buf.getvalue(),
                    not no_header, f"experiments {name}")
    _write_manifest(out, {"command": "experiments", "name": name,
                          "args": list(args), "trials": trials,
                          "sigma_local": sigma_local,
                          "sigma_global": sigma_global, "sigma_k": sigma_k,
                          "vdd": vdd, "delta": delta, "seed": seed},
                    not no_header)
    click.echo(f"{name} -> {', '.join(os.path.join(out, f) for f in tables)}")


@main.command("map")
@click.argument("blif", type=click.Path())
@click.option("--k", default=5, show_default=True)
@seed_option
@out_option
@no_header_option
def cmd_map(blif, k, seed, out, no_header):
    """Map threshold cones of a BLIF netlist onto FTL cells."""
    _ensure_out(out)
    try:
        text = open(blif).read()
    except OSError as e:
        raise CliError(f"cannot read {blif}: {e}", EXIT_IO)
    try:
        nl = netlist.parse_blif(text)
    except netlist.NetlistError as e:
        raise CliError(f"BLIF parse error: {e}", EXIT_VALIDATION)
    cat = threshold.build_catalog(5)
    design = mapping.map_ftl(nl, k=k, catalog=cat)
    report = mapping.verify_equivalence(nl, design, stimuli_seed=seed)
    _write_text(os.path.join(out, "mapped.blif"),
                mapping.export_mapped_blif(design), False, "map")
    cost_text = _capture_csv(lambda fp: mapping.write_cost_csv(design, fp))
    _write_text(os.path.join(out, "cost.csv"), cost_text, not no_header, "map")
    equiv_lines = [f"equivalent: {report.equivalent}",
                   f"stimuli_checked: {report.cycles_checked}"]
    if report.first_divergence:
        equiv_lines.append(
            f"first_divergence: cycle {report.first_divergence[0]} "
            f"signal {report.first_divergence[1]}")
    _write_text(os.path.join(out, "equivalence.txt"),
                "\n".join(equiv_lines) + "\n", False, "map")
    _write_manifest(out, {"command": "map", "blif": os.path.abspath(blif),
                          "k": k, "seed": seed}, not no_header)
    status = "PASS" if report.equivalent else "FAIL"
    click.echo(f"{len(design.instances)} replacements, equivalence {status} "
               f"-> {out}/mapped.blif")
    if not report.equivalent:
        sys.exit(EXIT_VALIDATION)


if __name__ == "__main__":
    main()
