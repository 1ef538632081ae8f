"""Restart loops over problem instances and layer counts.

Every restart is seeded from ``(master_seed, instance id, p, restart)`` alone,
so results do not depend on scheduling or on which other cells are run.
"""
from __future__ import annotations

import dataclasses
import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .entanglement import EntropyTrace, accumulation_area, gate_trace, layer_profile
from .optimizer import OptimizerConfig, alpha, minimize, sample_initial_params
from .qubo import (
    FAMILIES,
    EnergyTable,
    GroundInfo,
    QuboGraph,
    build_energy_table,
    build_family,
    ground_info,
    weight_range,
)
from .scrambling import Partition, choi_state, default_partition, subsystem_entropy, tripartite_information
from .simulator import QaoaParams, build_unitary, run_circuit

log = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "Instance",
    "RunRecord",
    "make_instance",
    "build_instances",
    "restart_rng",
    "run_restart",
    "run_experiment",
    "extend_for_areas",
]

WEIGHTED_FAMILIES = ("linear_z_minus_zz", "complete_z_minus_zz", "linear_z_plus_zz")
EDGE_FAMILIES = ("H1", "H2", "H3", "H4", "H5")
AREA_FILTERS = ("alpha", "success", "none")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    families: tuple[str, ...] = EDGE_FAMILIES
    weights: tuple[float, ...] | None = None
    weight_count: int = 15
    weight_range: tuple[float, float] | None = None
    layers: tuple[int, ...] = (4, 6, 8, 10)
    restarts: int = 100
    alpha_threshold: float = 0.996
    final_entropy_threshold: float = 0.02
    area_samplings: int = 50
    area_filter: str = "alpha"
    max_area_restarts: int = 1000
    master_seed: int = 0
    output_dir: str = "results"
    n_qubits: int = 7
    include_hadamards: bool = True
    partition: tuple[tuple[int, ...], ...] | None = None
    max_evals: int = 1000
    initial_step: float = 0.5
    convergence_tol: float = 1e-6
    workers: int = 1
    save_traces: bool = False

    def __post_init__(self):
        fams = (self.families,) if isinstance(self.families, str) else tuple(self.families)
        object.__setattr__(self, "families", fams)
        object.__setattr__(self, "layers", tuple(int(p) for p in self.layers))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.weight_range is not None:
            object.__setattr__(self, "weight_range", tuple(float(w) for w in self.weight_range))
        if self.partition is not None:
            object.__setattr__(self, "partition", tuple(tuple(int(q) for q in part) for part in self.partition))
        self.validate()

    def validate(self) -> None:
        if not self.families:
            raise ConfigError("at least one family is required")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ConfigError(f"unknown family {fam!r}")
        if not self.layers:
            raise ConfigError("layers must be nonempty")
        if min(self.layers) < 1:
            raise ConfigError("every layer count p must be >= 1")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.alpha_threshold < 0 or self.final_entropy_threshold < 0:
            raise ConfigError("thresholds must be non-negative")
        if self.area_samplings < 1:
            raise ConfigError("area_samplings must be >= 1")
        if self.area_filter not in AREA_FILTERS:
            raise ConfigError(f"area_filter must be one of {AREA_FILTERS}")
        if self.weight_count < 1:
            raise ConfigError("weight_count must be >= 1")
        if self.weight_range is not None and (
            len(self.weight_range) != 2 or self.weight_range[0] > self.weight_range[1]
        ):
            raise ConfigError("weight_range must be [low, high] with low <= high")
        if self.n_qubits < 2:
            raise ConfigError("n_qubits must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        try:
            OptimizerConfig(self.max_evals, self.initial_step, self.convergence_tol)
            self.get_partition()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def get_partition(self) -> Partition:
        if self.partition is None:
            return default_partition(self.n_qubits)
        if len(self.partition) != 4:
            raise ConfigError("partition needs four index lists")
        return Partition(*self.partition).validate(self.n_qubits)

    def optimizer_config(self, seed: int = 0) -> OptimizerConfig:
        return OptimizerConfig(self.max_evals, self.initial_step, self.convergence_tol, seed)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "family" in data:
            if "families" in data:
                raise ConfigError("give either 'family' or 'families', not both")
            data["families"] = data.pop("family")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class Instance:
    id: str
    family: str
    weight: float | None
    graph: QuboGraph
    table: EnergyTable = field(repr=False, compare=False)
    ground: GroundInfo = field(compare=False)


def make_instance(instance_id: str, family: str, weight: float | None, graph: QuboGraph) -> Instance:
    table = build_energy_table(graph)
    return Instance(instance_id, family, weight, graph, table, ground_info(table))


def _stable_int(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def restart_rng(master_seed: int, instance_id: str, p: int, restart: int) -> np.random.Generator:
    seq = np.random.SeedSequence([master_seed, _stable_int(instance_id), p, restart])
    return np.random.default_rng(seq)


def _family_weights(config: ExperimentConfig, family: str) -> list[tuple[str, float]]:
    """(instance id, weight) pairs for a weighted family, rejecting degenerate draws."""
    if config.weights is not None:
        return [(f"{family}_w{i:02d}", w) for i, w in enumerate(config.weights)]
    lo, hi = config.weight_range or weight_range(family)
    rng = np.random.default_rng(np.random.SeedSequence([config.master_seed, _stable_int("weights:" + family)]))
    out = []
    attempts = 0
    while len(out) < config.weight_count:
        attempts += 1
        if attempts > 100 * config.weight_count:
            raise ConfigError(f"could not sample non-degenerate weights for {family} in [{lo}, {hi}]")
        w = float(rng.uniform(lo, hi))
        g = build_family(family, w, config.n_qubits)
        if ground_info(build_energy_table(g)).degeneracy > 1:
            log.warning("rejected degenerate sample %s weight=%r; resampling", family, w)
            continue
        out.append((f"{family}_w{len(out):02d}", w))
    return out


def build_instances(config: ExperimentConfig, allow_degenerate: bool = False) -> list[Instance]:
    instances = []
    for family in config.families:
        if family in WEIGHTED_FAMILIES:
            pairs = _family_weights(config, family)
        else:
            pairs = [(family, None)]
        for iid, w in pairs:
            inst = make_instance(iid, family, w, build_family(family, w, config.n_qubits))
            if inst.ground.degeneracy > 1 and not allow_degenerate:
                log.warning(
                    "skipping %s: ground state is %d-fold degenerate", iid, inst.ground.degeneracy
                )
                continue
            instances.append(inst)
    return instances


@dataclass(frozen=True)
class RunRecord:
    instance: str
    p: int
    restart: int
    alpha: float
    value: float
    success: bool
    i3: float
    s_max: float
    area: float
    family: str
    weight: float | None
    n_edges: int
    ground_energy: float
    i_ac: float
    i_ad: float
    i_acd: float
    s_c: float
    s_d: float
    evals: int
    converged: bool
    initial: QaoaParams
    optimal: QaoaParams

    @property
    def key(self) -> tuple[str, int, int]:
        return self.instance, self.p, self.restart

    @property
    def trace_file(self) -> str:
        return f"trace_{self.instance}_{self.p}_{self.restart}.csv"


def run_restart(
    instance: Instance, p: int, restart: int, config: ExperimentConfig
) -> tuple[RunRecord, EntropyTrace]:
    """Optimize one random start and evaluate every resource metric at the optimum."""
    rng = restart_rng(config.master_seed, instance.id, p, restart)
    initial = sample_initial_params(p, rng)
    res = minimize(instance.table, initial, config.optimizer_config())
    params = res.params_opt
    a = alpha(res.value, instance.ground)

    part = config.get_partition()
    unitary = build_unitary(instance.table, params, config.include_hadamards)
    scr = tripartite_information(choi_state(unitary), part)

    n = config.n_qubits
    final = run_circuit(instance.table, params)
    s_c = subsystem_entropy(final, [q - n for q in part.c])
    s_d = subsystem_entropy(final, [q - n for q in part.d])
    thr = config.final_entropy_threshold
    success = a >= config.alpha_threshold and s_c <= thr and s_d <= thr

    trace = gate_trace(instance.graph, instance.table, params)
    record = RunRecord(
        instance=instance.id,
        p=p,
        restart=restart,
        alpha=a,
        value=res.value,
        success=bool(success),
        i3=scr.i3,
        s_max=max(layer_profile(instance.table, params)),
        area=accumulation_area(trace) if len(trace) > 1 else 0.0,
        family=instance.family,
        weight=instance.weight,
        n_edges=instance.graph.n_edges,
        ground_energy=instance.ground.energy,
        i_ac=scr.i_ac,
        i_ad=scr.i_ad,
        i_acd=scr.i_acd,
        s_c=s_c,
        s_d=s_d,
        evals=res.evals_used,
        converged=res.converged,
        initial=initial,
        optimal=params,
    )
    if scr.i3 > 1e-6:
        log.warning("anomalous positive I3=%.3g for %s p=%d restart=%d", scr.i3, instance.id, p, restart)
    return record, trace


def _task(args):
    instance, p, k, config = args
    rec, trace = run_restart(instance, p, k, config)
    return rec, (trace if config.save_traces else None)


def _execute(tasks: list, config: ExperimentConfig) -> list[tuple[RunRecord, EntropyTrace | None]]:
    payload = [(inst, p, k, config) for inst, p, k in tasks]
    if config.workers == 1 or len(payload) < 2:
        results = [_task(t) for t in payload]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_task, payload, chunksize=max(1, len(payload) // (8 * config.workers))))
    return sorted(results, key=lambda r: r[0].key)


def run_experiment(
    config: ExperimentConfig,
    instances: Iterable[Instance] | None = None,
    traces: dict | None = None,
) -> list[RunRecord]:
    """Run ``config.restarts`` restarts for every (instance, p).

    Records come back sorted by (instance, p, restart). When ``traces`` is a
    dict and ``config.save_traces`` is set, entropy traces are stored in it
    keyed the same way.
    """
    instances = build_instances(config) if instances is None else list(instances)
    tasks = [(inst, p, k) for inst in instances for p in config.layers for k in range(config.restarts)]
    log.info("running %d restarts over %d instances", len(tasks), len(instances))
    results = _execute(tasks, config)
    if traces is not None:
        traces.update({rec.key: tr for rec, tr in results if tr is not None})
    return [rec for rec, _ in results]


def passes_area_filter(record: RunRecord, alpha_threshold: float, area_filter: str = "alpha") -> bool:
    if area_filter == "none":
        return True
    if area_filter == "success":
        return record.success
    return record.alpha >= alpha_threshold


def extend_for_areas(
    config: ExperimentConfig,
    instances: Iterable[Instance],
    records: list[RunRecord],
    traces: dict | None = None,
) -> list[RunRecord]:
    """Run extra restarts for cells with fewer than ``area_samplings`` filtered runs.

    New restarts continue the index sequence after the existing ones and stop
    at ``max_area_restarts`` restarts per cell. Only the additional records are
    returned.
    """
    by_cell: dict[tuple[str, int], list[RunRecord]] = {}
    for rec in records:
        by_cell.setdefault((rec.instance, rec.p), []).append(rec)
    extra: list[RunRecord] = []
    batch = max(config.workers * 4, 10)
    for inst in instances:
        for p in config.layers:
            cell = by_cell.get((inst.id, p), [])
            have = sum(passes_area_filter(r, config.alpha_threshold, config.area_filter) for r in cell)
            next_k = max((r.restart for r in cell), default=-1) + 1
            while have < config.area_samplings and next_k < config.max_area_restarts:
                # Size each batch from the observed pass rate to avoid overshooting much.
                rate = have / next_k if next_k and have else 0.0
                need = config.area_samplings - have
                size = int(np.ceil(need / rate)) if rate else batch
                size = max(1, min(size, batch, config.max_area_restarts - next_k))
                tasks = [(inst, p, k) for k in range(next_k, next_k + size)]
                for rec, tr in _execute(tasks, config):
                    if have >= config.area_samplings:
                        break
                    extra.append(rec)
                    if traces is not None and tr is not None:
                        traces[rec.key] = tr
                    have += passes_area_filter(rec, config.alpha_threshold, config.area_filter)
                next_k += size
            if have < config.area_samplings:
                log.warning(
                    "%s p=%d: only %d of %d area samples after %d restarts",
                    inst.id, p, have, config.area_samplings, next_k,
                )
    return extra
