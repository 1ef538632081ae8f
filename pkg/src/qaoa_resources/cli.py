"""Command-line entry point.

Exit codes: 0 on success, 2 for invalid input or configuration, 3 for
runtime and I/O failures. Every command validates its full configuration
before computing anything, and writes files only after computation ends.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import sweeps
from .analysis import area_distribution, cell_summaries, edges_report, kinds_report
from .entanglement import accumulation_area, gate_trace, layer_profile
from .experiments import (
    ConfigError,
    ExperimentConfig,
    Instance,
    make_instance,
    restart_rng,
    run_experiment,
)
from .optimizer import alpha, minimize, sample_initial_params
from .persist import persist, read_records, write_json
from .qubo import FAMILIES, InvalidGraphError, build_family, load_graph
from .scrambling import choi_state, parse_partition, tripartite_information
from .simulator import QaoaParams, UnitaryCapError, build_unitary, expectation, run_circuit

log = logging.getLogger("qaoa_resources")

OUTPUT_DIR_ENV = "QAOA_RESOURCES_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3


class UsageError(Exception):
    pass


# Flag destination -> ExperimentConfig field.
_CONFIG_FLAGS = {
    "families": "families",
    "weights": "weights",
    "weight_count": "weight_count",
    "weight_range": "weight_range",
    "layers": "layers",
    "restarts": "restarts",
    "alpha_threshold": "alpha_threshold",
    "entropy_threshold": "final_entropy_threshold",
    "area_samplings": "area_samplings",
    "area_filter": "area_filter",
    "max_area_restarts": "max_area_restarts",
    "seed": "master_seed",
    "output_dir": "output_dir",
    "n_qubits": "n_qubits",
    "max_evals": "max_evals",
    "initial_step": "initial_step",
    "tol": "convergence_tol",
    "workers": "workers",
    "save_traces": "save_traces",
    "partition": "partition",
}


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with experiment settings; flags override it")
    p.add_argument("--output-dir", help=f"output directory (default: ${OUTPUT_DIR_ENV} or ./results)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--max-evals", type=int)
    p.add_argument("--initial-step", type=float)
    p.add_argument("--tol", type=float, help="optimizer convergence tolerance")
    p.add_argument("--n-qubits", type=int)
    p.add_argument("--alpha-threshold", type=float)
    p.add_argument("--entropy-threshold", type=float, help="final-state entropy bound for C and D")
    p.add_argument("--partition", nargs=4, metavar=("A", "B", "C", "D"),
                   help="four comma-separated index lists; output lists may be 0-based qubits")
    p.add_argument("--no-hadamard", dest="include_hadamards", action="store_false", default=None,
                   help="analyze the channel without the initial Hadamard layer")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_problem(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--graph", help='graph JSON file {"n": N, "h": [...], "edges": [[i, j, w], ...]}')
    p.add_argument("--weight", type=float, help="weight parameter of the weighted families")
    p.add_argument("--allow-degenerate", action="store_true")
    p.add_argument("--p", dest="p", type=int, help="number of QAOA layers")


def _add_sweep(p: argparse.ArgumentParser) -> None:
    p.add_argument("--families", type=lambda s: s.split(","), help="comma-separated family ids")
    p.add_argument("--layers", type=_int_list, help="comma-separated layer counts")
    p.add_argument("--restarts", type=int)
    p.add_argument("--weights", type=_float_list, help="explicit weights for the weighted families")
    p.add_argument("--weight-count", type=int)
    p.add_argument("--weight-range", type=_float_list)
    p.add_argument("--area-samplings", type=int)
    p.add_argument("--area-filter", choices=("alpha", "success", "none"))
    p.add_argument("--max-area-restarts", type=int)
    p.add_argument("--save-traces", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaoa-resources", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimize one instance from random restarts")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--restarts", type=int)

    p = sub.add_parser("scramble", help="tripartite information of QAOA circuits")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--restarts", type=int)
    p.add_argument("--params", help='fixed angles "b1,...,bp;g1,...,gp" instead of optimizing')

    p = sub.add_parser("trace", help="gate-resolved entropy traces and accumulation areas")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--restarts", type=int)
    p.add_argument("--params", help='fixed angles "b1,...,bp;g1,...,gp" instead of optimizing')

    for name, text in (
        ("sweep-kinds", "success rate vs |I3| for the weighted families"),
        ("sweep-edges", "edge-count sweep over H1..H5"),
        ("area-dist", "accumulation-area distributions"),
    ):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        _add_sweep(p)

    p = sub.add_parser("report", help="rebuild reports from records.csv files")
    p.add_argument("records", nargs="+", help="records.csv files")
    p.add_argument("--area-records", nargs="*", default=[], help="extra area-sampling records")
    p.add_argument("--output-dir")
    p.add_argument("--alpha-threshold", type=float, default=0.996)
    p.add_argument("--area-samplings", type=int, default=50)
    p.add_argument("--area-filter", choices=("alpha", "success", "none"), default="alpha")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _load_config_dict(path: str | None) -> dict:
    if path is None:
        return {}
    if not Path(path).is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


def make_config(args: argparse.Namespace, **defaults) -> ExperimentConfig:
    """Merge defaults, the config file and flag overrides, in that order."""
    data = dict(defaults)
    data.update(_load_config_dict(getattr(args, "config", None)))
    if "output_dir" not in data and os.environ.get(OUTPUT_DIR_ENV):
        data["output_dir"] = os.environ[OUTPUT_DIR_ENV]
    for dest, name in _CONFIG_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            data[name] = value
    if getattr(args, "include_hadamards", None) is not None:
        data["include_hadamards"] = args.include_hadamards
    if data.get("partition") is not None:
        n = int(data.get("n_qubits", 7))
        part = data["partition"]
        if all(isinstance(x, str) for x in part):
            try:
                part = parse_partition(part, n)
            except ValueError as exc:
                raise UsageError(f"bad partition: {exc}")
            data["partition"] = [part.a, part.b, part.c, part.d]
    return ExperimentConfig.from_dict(data)


def _single_instance(args, config: ExperimentConfig) -> Instance:
    if args.graph:
        try:
            graph = load_graph(args.graph)
        except FileNotFoundError:
            raise UsageError(f"graph file not found: {args.graph}")
        except (json.JSONDecodeError, InvalidGraphError) as exc:
            raise UsageError(f"bad graph file {args.graph}: {exc}")
        if graph.n_qubits != config.n_qubits:
            config_n = config.n_qubits
            raise UsageError(f"graph has N={graph.n_qubits} but the configuration expects N={config_n}; pass --n-qubits")
        inst = make_instance(Path(args.graph).stem, "custom", None, graph)
    else:
        family = args.family or (config.families[0] if len(config.families) == 1 else None)
        if family is None:
            raise UsageError("choose a problem with --family or --graph")
        weight = args.weight
        if weight is None and config.weights:
            weight = config.weights[0]
        if family in ("linear_z_minus_zz", "complete_z_minus_zz", "linear_z_plus_zz") and weight is None:
            raise UsageError(f"family {family} needs --weight")
        iid = family if weight is None else f"{family}_w{weight:g}"
        inst = make_instance(iid, family, weight, build_family(family, weight, config.n_qubits))
    if inst.ground.degeneracy > 1 and not args.allow_degenerate:
        raise UsageError(
            f"instance {inst.id} has a {inst.ground.degeneracy}-fold degenerate ground state "
            f"({', '.join(inst.ground.states)}); use --allow-degenerate to run anyway"
        )
    return inst


def _parse_params(text: str, p: int | None) -> QaoaParams:
    try:
        b_text, g_text = text.split(";")
        params = QaoaParams(_float_list(b_text), _float_list(g_text))
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f'bad --params {text!r}; expected "b1,...,bp;g1,...,gp" ({exc})')
    if p is not None and params.p != p:
        raise UsageError(f"--params has {params.p} layers but --p is {p}")
    return params


def _layer_count(args, config: ExperimentConfig) -> int:
    p = args.p
    if p is None:
        if len(config.layers) != 1:
            raise UsageError("give --p (or a config with a single layer count)")
        p = config.layers[0]
    if p < 1:
        raise UsageError(f"--p must be >= 1, got {p}")
    return p


def _problem_config(args) -> tuple[ExperimentConfig, Instance, int]:
    config = make_config(args)
    p = _layer_count(args, config)
    config = dataclasses.replace(config, layers=(p,))
    return config, _single_instance(args, config), p


def cmd_solve(args) -> int:
    config, inst, p = _problem_config(args)
    records = run_experiment(config, [inst])
    best = max(records, key=lambda r: r.alpha)
    rate = sum(r.success for r in records) / len(records)
    persist(records, None, config.output_dir)
    print(f"instance        {inst.id}  (N={inst.graph.n_qubits}, edges={inst.graph.n_edges})")
    print(f"ground energy   {inst.ground.energy:.6f}")
    print(f"ground states   {', '.join(inst.ground.states)}  (degeneracy {inst.ground.degeneracy})")
    print(f"layers          {p}")
    print(f"restarts        {len(records)}")
    print(f"best alpha      {best.alpha:.6f}  (<H_C> = {best.value:.6f}, restart {best.restart})")
    print(f"success rate    {rate:.4f}  (alpha >= {config.alpha_threshold}, "
          f"S_C, S_D <= {config.final_entropy_threshold})")
    print(f"mean I3         {np.mean([r.i3 for r in records]):.6f}")
    print(f"records         {Path(config.output_dir) / 'records.csv'}")
    return EXIT_OK


def _restart_params(args, config, inst, p) -> list[tuple[int, QaoaParams]]:
    if args.params:
        return [(0, _parse_params(args.params, p))]
    out = []
    for k in range(config.restarts if args.restarts is None else args.restarts):
        rng = restart_rng(config.master_seed, inst.id, p, k)
        res = minimize(inst.table, sample_initial_params(p, rng), config.optimizer_config())
        out.append((k, res.params_opt))
    return out


def cmd_scramble(args) -> int:
    if args.restarts is None and not args.params:
        args.restarts = 1
    config, inst, p = _problem_config(args)
    part = config.get_partition()
    if inst.graph.n_qubits > 10:
        raise UsageError(f"N={inst.graph.n_qubits} exceeds the unitary construction cap of 10")
    print(f"partition sizes |A|,|B|,|C|,|D| = {','.join(map(str, part.sizes))}")
    print(f"A={list(part.a)} B={list(part.b)} C={list(part.c)} D={list(part.d)}")
    print(f"hadamard layer  {'included' if config.include_hadamards else 'excluded'}")
    rows = []
    for k, params in _restart_params(args, config, inst, p):
        u = build_unitary(inst.table, params, config.include_hadamards)
        res = tripartite_information(choi_state(u), part)
        rows.append((k, res.i_ac, res.i_ad, res.i_acd, res.i3))
    print(f"{'restart':>7} {'I(A:C)':>10} {'I(A:D)':>10} {'I(A:CD)':>10} {'I3':>10}")
    for k, *vals in rows:
        print(f"{k:>7} " + " ".join(f"{v:>10.6f}" for v in vals))
    means = np.mean([r[1:] for r in rows], axis=0)
    print(f"{'mean':>7} " + " ".join(f"{v:>10.6f}" for v in means))
    print(f"|mean I3| = {abs(means[3]):.6f}")
    return EXIT_OK


def cmd_trace(args) -> int:
    if args.restarts is None and not args.params:
        args.restarts = 1
    config, inst, p = _problem_config(args)
    results = []
    for k, params in _restart_params(args, config, inst, p):
        trace = gate_trace(inst.graph, inst.table, params)
        area = accumulation_area(trace) if len(trace) > 1 else 0.0
        results.append((k, params, trace, area))
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    print(f"{'restart':>7} {'alpha':>9} {'S_max':>8} {'area':>8}  file")
    for k, params, trace, area in results:
        path = out / f"trace_{inst.id}_{p}_{k}.csv"
        trace.to_csv(path)
        a = alpha(expectation(run_circuit(inst.table, params), inst.table), inst.ground)
        s_max = max(layer_profile(inst.table, params))
        print(f"{k:>7} {a:>9.5f} {s_max:>8.4f} {area:>8.4f}  {path}")
    return EXIT_OK


def _explicit_fields(args) -> set[str]:
    """Config fields set by the config file or by a flag."""
    fields = set(_load_config_dict(getattr(args, "config", None)))
    fields |= {name for dest, name in _CONFIG_FLAGS.items() if getattr(args, dest, None) is not None}
    return fields


def _run_sweep(args, kind: str) -> int:
    defaults = {}
    if kind == "sweep-kinds":
        defaults = sweeps.kinds_config().to_dict()
    config = make_config(args, **{k: v for k, v in defaults.items() if k in ("families", "layers")})
    if kind == "sweep-kinds":
        explicit = _explicit_fields(args)
        overrides = {
            fam: {k: v for k, v in fields.items() if k not in explicit}
            for fam, fields in sweeps.KINDS_FAMILY_DEFAULTS.items()
        }
        result = sweeps.sweep_kinds(config, overrides)
    elif kind == "sweep-edges":
        result = sweeps.sweep_edges(config)
    else:
        result = sweeps.area_dist(config)
    paths = sweeps.save(result)
    if kind == "area-dist":
        _write_histograms(result.report["area_distribution"], Path(config.output_dir) / "area_histograms.csv")
    _print_report(result.report)
    print(f"wrote {len(paths)} file(s) to {config.output_dir}")
    return EXIT_OK


def _write_histograms(dist: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance", "p", "bin_low", "bin_high", "count"])
        for cell in dist:
            edges, counts = cell["histogram"]["edges"], cell["histogram"]["counts"]
            for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                w.writerow([cell["instance"], cell["p"], repr(lo), repr(hi), c])


def _fmt(v) -> str:
    return "undefined" if v is None else f"{v:.4f}"


def _print_report(report: dict) -> None:
    corr = report.get("correlations")
    if report.get("kind") == "sweep-kinds":
        for fam, entry in corr.items():
            print(f"{fam:<22} rho(|I3|, R) = {_fmt(entry['rho_I3_R'])}  over {entry['n_points']} points")
    elif corr is not None:
        ps = list(corr)
        print("p".ljust(12) + "".join(f"{p:>10}" for p in ps))
        for key in ("rho_E_I3", "rho_E_Smax", "rho_E_area"):
            print(key.ljust(12) + "".join(f"{_fmt(corr[p][key]):>10}" for p in ps))
    else:
        for cell in report.get("area_distribution", []):
            print(f"{cell['instance']:<10} p={cell['p']:<3} n={cell['count']:<4} mean area={_fmt(cell['mean'])}")


def _write_tables(corr: dict, path: Path) -> None:
    ps = list(corr)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric"] + ps)
        for key in ("rho_E_I3", "rho_E_Smax", "rho_E_area"):
            w.writerow([key] + ["" if corr[p][key] is None else repr(corr[p][key]) for p in ps])


def cmd_report(args) -> int:
    records, extra = [], []
    for path in args.records:
        if not Path(path).is_file():
            raise UsageError(f"records file not found: {path}")
    for path in args.area_records:
        if not Path(path).is_file():
            raise UsageError(f"records file not found: {path}")
    try:
        for path in args.records:
            records += read_records(path)
        for path in args.area_records:
            extra += read_records(path)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"malformed records: {exc}")
    out = Path(args.output_dir or os.environ.get(OUTPUT_DIR_ENV) or "results")
    report = {
        "kind": "report",
        "cells": cell_summaries(records),
        "correlations": edges_report(records, extra, args.area_samplings, args.alpha_threshold, args.area_filter),
        "kinds": kinds_report(records),
        "area_distribution": area_distribution(
            records + extra, args.area_samplings, args.alpha_threshold, args.area_filter
        ),
    }
    out.mkdir(parents=True, exist_ok=True)
    write_json(report, out / "report.json")
    _write_tables(report["correlations"], out / "correlation_table.csv")
    _print_report({"correlations": report["correlations"]})
    print(f"wrote {out / 'report.json'} and {out / 'correlation_table.csv'}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "scramble": cmd_scramble,
    "trace": cmd_trace,
    "sweep-kinds": lambda a: _run_sweep(a, "sweep-kinds"),
    "sweep-edges": lambda a: _run_sweep(a, "sweep-edges"),
    "area-dist": lambda a: _run_sweep(a, "area-dist"),
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, InvalidGraphError, UnitaryCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        log.debug("unhandled error", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
