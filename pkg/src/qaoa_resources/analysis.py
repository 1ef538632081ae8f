"""Success rates, correlation coefficients and per-cell summaries of run records."""
from __future__ import annotations

import math
from collections import defaultdict
from typing import Iterable, Sequence

import numpy as np

from .experiments import RunRecord, passes_area_filter

__all__ = [
    "UndefinedCorrelationError",
    "success_rate",
    "pearson",
    "safe_pearson",
    "permutation_null",
    "group_cells",
    "cell_summaries",
    "kinds_report",
    "area_distribution",
    "edges_report",
]


class UndefinedCorrelationError(ValueError):
    pass


def success_rate(records: Iterable[RunRecord], instance: str, p: int) -> float:
    """Fraction s/n of successful restarts in one (instance, p) cell."""
    cell = [r for r in records if r.instance == instance and r.p == p]
    if not cell:
        raise ValueError(f"no records for instance {instance!r} at p={p}")
    return sum(r.success for r in cell) / len(cell)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D sequences of equal length")
    if len(x) < 2:
        raise ValueError("pearson needs at least two points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = dx @ dx, dy @ dy
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation undefined for a constant input")
    cov = (dx @ dy) / (len(x) - 1)
    r = cov / math.sqrt(sxx / (len(x) - 1) * syy / (len(x) - 1))
    return float(np.clip(r, -1.0, 1.0))


def safe_pearson(xs, ys) -> float | None:
    """``pearson`` that returns None where the coefficient is undefined."""
    try:
        return pearson(xs, ys)
    except (UndefinedCorrelationError, ValueError):
        return None


def permutation_null(xs, ys, n_perm: int = 1000, seed: int = 0) -> np.ndarray:
    """Correlations of ``xs`` against random shuffles of ``ys``."""
    rng = np.random.default_rng(seed)
    ys = np.asarray(ys, dtype=float)
    return np.array([pearson(xs, rng.permutation(ys)) for _ in range(n_perm)])


def group_cells(records: Iterable[RunRecord]) -> dict[tuple[str, int], list[RunRecord]]:
    """Records per (instance, p) in restart order; repeated keys are kept once."""
    unique = {r.key: r for r in records}
    cells: dict[tuple[str, int], list[RunRecord]] = defaultdict(list)
    for key in sorted(unique):
        cells[key[0], key[1]].append(unique[key])
    return dict(cells)


def _mean(values) -> float | None:
    values = list(values)
    return float(np.mean(values)) if values else None


def cell_summaries(records: Iterable[RunRecord]) -> list[dict]:
    """Restart-averaged metrics per (instance, p)."""
    out = []
    for (inst, p), cell in group_cells(records).items():
        mean_i3 = float(np.mean([r.i3 for r in cell]))
        first = cell[0]
        out.append(
            {
                "instance": inst,
                "family": first.family,
                "weight": first.weight,
                "n_edges": first.n_edges,
                "p": p,
                "n": len(cell),
                "success_rate": sum(r.success for r in cell) / len(cell),
                "mean_alpha": _mean(r.alpha for r in cell),
                "mean_i3": mean_i3,
                "abs_mean_i3": abs(mean_i3),
                "anomalous_i3": sum(r.i3 > 1e-6 for r in cell),
                "mean_s_max": _mean(r.s_max for r in cell),
                "mean_area": _mean(r.area for r in cell),
            }
        )
    return out


def kinds_report(records: Iterable[RunRecord]) -> dict:
    """Correlation between success rate and |I3| pooled over weights and layers, per family."""
    summaries = cell_summaries(records)
    by_family: dict[str, list[dict]] = defaultdict(list)
    for s in summaries:
        by_family[s["family"]].append(s)
    out = {}
    for fam, cells in sorted(by_family.items()):
        rs = [c["success_rate"] for c in cells]
        i3s = [c["abs_mean_i3"] for c in cells]
        out[fam] = {
            "n_points": len(cells),
            "rho_I3_R": safe_pearson(i3s, rs),
            "points": [
                {"instance": c["instance"], "weight": c["weight"], "p": c["p"], "R": c["success_rate"], "abs_i3": c["abs_mean_i3"]}
                for c in cells
            ],
        }
    return out


def area_distribution(
    records: Iterable[RunRecord],
    samplings: int = 50,
    alpha_threshold: float = 0.996,
    area_filter: str = "alpha",
    bins: int = 20,
) -> list[dict]:
    """Histogram and summary of accumulation areas per (instance, p).

    Uses the first ``samplings`` restarts (in restart order) that pass the
    filter. Histogram bins span [0, p], the largest possible area. A cell with
    fewer passing restarts is reported with the count it has.
    ``tail_mass`` is the fraction of areas above p / 2.
    """
    out = []
    for (inst, p), cell in group_cells(records).items():
        chosen = [r for r in cell if passes_area_filter(r, alpha_threshold, area_filter)][:samplings]
        areas = np.array([r.area for r in chosen])
        counts, edges = np.histogram(areas, bins=bins, range=(0.0, float(p)))
        out.append(
            {
                "instance": inst,
                "family": cell[0].family,
                "n_edges": cell[0].n_edges,
                "p": p,
                "requested": samplings,
                "count": int(len(areas)),
                "attempts": len(cell),
                "complete": len(areas) >= samplings,
                "mean": float(areas.mean()) if len(areas) else None,
                "std": float(areas.std(ddof=1)) if len(areas) > 1 else None,
                "tail_mass": float(np.mean(areas > p / 2)) if len(areas) else None,
                "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
                "areas": areas.tolist(),
            }
        )
    return out


def edges_report(
    records: Iterable[RunRecord],
    area_records: Iterable[RunRecord] = (),
    samplings: int = 50,
    alpha_threshold: float = 0.996,
    area_filter: str = "alpha",
) -> dict:
    """Per-p correlations of edge count against |I3|, S_max and mean area.

    |I3|, S_max and success rates average over ``records``; areas are drawn
    from ``records`` followed by the extra ``area_records`` restarts.
    """
    records = list(records)
    summaries = cell_summaries(records)
    dist = area_distribution(records + list(area_records), samplings, alpha_threshold, area_filter)
    areas = {(a["instance"], a["p"]): a for a in dist}
    by_p: dict[int, list[dict]] = defaultdict(list)
    for s in summaries:
        by_p[s["p"]].append(s)
    table = {}
    for p, cells in sorted(by_p.items()):
        cells = sorted(cells, key=lambda c: (c["n_edges"], c["instance"]))
        e = [c["n_edges"] for c in cells]
        area_cells = [(c["n_edges"], areas[c["instance"], p]["mean"]) for c in cells]
        area_cells = [(x, y) for x, y in area_cells if y is not None]
        table[str(p)] = {
            "n_edges": e,
            "instances": [c["instance"] for c in cells],
            "abs_mean_i3": [c["abs_mean_i3"] for c in cells],
            "mean_s_max": [c["mean_s_max"] for c in cells],
            "success_rate": [c["success_rate"] for c in cells],
            "mean_area": [areas[c["instance"], p]["mean"] for c in cells],
            "area_counts": [areas[c["instance"], p]["count"] for c in cells],
            "rho_E_I3": safe_pearson(e, [c["abs_mean_i3"] for c in cells]),
            "rho_E_Smax": safe_pearson(e, [c["mean_s_max"] for c in cells]),
            "rho_E_area": safe_pearson([x for x, _ in area_cells], [y for _, y in area_cells]),
        }
    return table
