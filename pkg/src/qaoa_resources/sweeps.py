"""End-to-end sweeps: family comparison, edge-count sweep and area distributions."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .analysis import area_distribution, cell_summaries, edges_report, kinds_report
from .experiments import (
    EDGE_FAMILIES,
    WEIGHTED_FAMILIES,
    ExperimentConfig,
    RunRecord,
    build_instances,
    extend_for_areas,
    run_experiment,
)
from .persist import persist

__all__ = ["KINDS_FAMILY_DEFAULTS", "SweepResult", "kinds_config", "edges_config", "sweep_kinds", "sweep_edges", "area_dist", "save"]

# The +ZZ chain is much harder: it is judged at a looser alpha and final-state
# entropy bound, and followed to deeper circuits.
KINDS_FAMILY_DEFAULTS = {
    "linear_z_plus_zz": {
        "layers": tuple(range(1, 21)),
        "alpha_threshold": 0.96,
        "final_entropy_threshold": 0.25,
    },
}


@dataclass
class SweepResult:
    config: ExperimentConfig
    records: list[RunRecord]
    report: dict
    area_records: list[RunRecord] = field(default_factory=list)
    traces: dict = field(default_factory=dict)


def kinds_config(**overrides) -> ExperimentConfig:
    """Defaults for comparing the three weighted families over p = 1..10."""
    base = dict(families=WEIGHTED_FAMILIES, layers=tuple(range(1, 11)), weight_count=15)
    base.update(overrides)
    return ExperimentConfig(**base)


def edges_config(**overrides) -> ExperimentConfig:
    """Defaults for the H1..H5 edge-count sweep at p = 4, 6, 8, 10."""
    base = dict(families=EDGE_FAMILIES, layers=(4, 6, 8, 10))
    base.update(overrides)
    return ExperimentConfig(**base)


def sweep_kinds(config: ExperimentConfig, family_overrides: dict | None = None) -> SweepResult:
    """Run each weighted family with its own settings and correlate |I3| with R.

    ``family_overrides`` maps a family id to config fields replacing those of
    ``config`` for that family; it defaults to ``KINDS_FAMILY_DEFAULTS``.
    """
    overrides = KINDS_FAMILY_DEFAULTS if family_overrides is None else family_overrides
    traces: dict = {}
    records: list[RunRecord] = []
    family_configs = {}
    for fam in config.families:
        sub = replace(config, families=(fam,), **overrides.get(fam, {}))
        family_configs[fam] = sub.to_dict()
        records += run_experiment(sub, traces=traces)
    records.sort(key=lambda r: r.key)
    report = {
        "kind": "sweep-kinds",
        "config": config.to_dict(),
        "family_configs": family_configs,
        "cells": cell_summaries(records),
        "correlations": kinds_report(records),
    }
    return SweepResult(config, records, report, traces=traces)


def sweep_edges(config: ExperimentConfig) -> SweepResult:
    """Restart grid over all instances plus extra restarts for the area samples."""
    instances = build_instances(config)
    traces: dict = {}
    records = run_experiment(config, instances, traces)
    extra = extend_for_areas(config, instances, records, traces)
    report = {
        "kind": "sweep-edges",
        "config": config.to_dict(),
        "cells": cell_summaries(records),
        "correlations": edges_report(
            records, extra, config.area_samplings, config.alpha_threshold, config.area_filter
        ),
        "area_distribution": area_distribution(
            records + extra, config.area_samplings, config.alpha_threshold, config.area_filter
        ),
    }
    return SweepResult(config, records, report, extra, traces)


def area_dist(config: ExperimentConfig) -> SweepResult:
    """Run restarts per cell until ``area_samplings`` of them pass the area filter."""
    instances = build_instances(config)
    traces: dict = {}
    records = extend_for_areas(config, instances, [], traces)
    report = {
        "kind": "area-dist",
        "config": config.to_dict(),
        "area_distribution": area_distribution(
            records, config.area_samplings, config.alpha_threshold, config.area_filter
        ),
    }
    return SweepResult(config, records, report, traces=traces)


def save(result: SweepResult, output_dir: str | Path | None = None) -> list[Path]:
    out = Path(output_dir or result.config.output_dir)
    traces = result.traces if result.config.save_traces else None
    paths = persist(result.records, {"report.json": result.report}, out, traces)
    if result.area_records:
        paths += persist(result.area_records, None, out, records_name="area_records.csv")
    return paths
