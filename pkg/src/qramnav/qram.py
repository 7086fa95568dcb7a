"""Q-RAM optimisation engine.

Tasks expose a discrete set of configurations, each with a resource cost and a
utility. The solver reduces every task to the concave majorant of its
configuration cloud in (compound resource, utility) space and then hands out
resource greedily, one majorant segment at a time, in order of decreasing
marginal utility per unit resource.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

ResourceVector = tuple[float, ...]

# Slack for budget comparisons; resources are seconds of antenna time.
_FIT_TOL = 1e-9


class QramError(ValueError):
    pass


class InfeasibleError(QramError):
    """Mandatory floors do not fit into the budget."""

    def __init__(self, task_ids: Sequence[Hashable], demand: ResourceVector, budget: ResourceVector):
        self.task_ids = list(task_ids)
        self.demand = demand
        self.budget = budget
        super().__init__(f"mandatory floors of tasks {self.task_ids} need {demand}, budget is {budget}")


def as_resource(values: float | Iterable[float]) -> ResourceVector:
    if isinstance(values, (int, float)):
        values = (values,)
    vec = tuple(float(v) for v in values)
    if not vec:
        raise QramError("resource vector must have at least one component")
    for v in vec:
        if not math.isfinite(v) or v < 0:
            raise QramError(f"resource components must be finite and >= 0, got {vec}")
    return vec


@dataclass(frozen=True)
class ConfigurationPoint:
    config_id: Hashable
    resource: ResourceVector
    utility: float
    quality: tuple[float, ...] = ()
    payload: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "resource", as_resource(self.resource))
        if not math.isfinite(self.utility):
            raise QramError(f"utility of {self.config_id!r} is not finite")


@dataclass(frozen=True)
class TaskModel:
    task_id: Hashable
    points: tuple[ConfigurationPoint, ...]
    mandatory_floor: Hashable | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise QramError(f"task {self.task_id!r} has no configurations")
        dims = {len(p.resource) for p in self.points}
        if len(dims) != 1:
            raise QramError(f"task {self.task_id!r} mixes resource dimensions {sorted(dims)}")
        if self.mandatory_floor is None:
            if not any(all(r == 0 for r in p.resource) for p in self.points):
                raise QramError(f"task {self.task_id!r} needs a zero-resource configuration")
        elif self.point(self.mandatory_floor) is None:
            raise QramError(f"mandatory floor {self.mandatory_floor!r} not among task configurations")

    def point(self, config_id) -> ConfigurationPoint | None:
        for p in self.points:
            if p.config_id == config_id:
                return p
        return None


@dataclass(frozen=True)
class ConcaveMajorant:
    task_id: Hashable
    vertices: tuple[ConfigurationPoint, ...]
    compound: tuple[float, ...]

    @property
    def slopes(self) -> list[float]:
        return [
            (b.utility - a.utility) / (rb - ra)
            for a, b, ra, rb in zip(self.vertices, self.vertices[1:], self.compound, self.compound[1:])
        ]


@dataclass(frozen=True)
class Allocation:
    chosen: dict
    total_utility: float
    total_resource: ResourceVector
    residual_budget: ResourceVector
    points: dict = field(default_factory=dict, compare=False, repr=False)


def compound_resource(r: Sequence[float], weights: Sequence[float]) -> float:
    if len(r) != len(weights):
        raise QramError(f"resource has {len(r)} components but {len(weights)} weights given")
    if any(w < 0 for w in weights) or not any(w > 0 for w in weights):
        raise QramError("weights must be non-negative and not all zero")
    return float(sum(w * x for w, x in zip(weights, r)))


def _sort_key(cid):
    # config ids are usually ints or strings; never compare across types
    return (type(cid).__name__, cid)


def concave_majorant(task: TaskModel, weights: Sequence[float] | None = None) -> ConcaveMajorant:
    """Upper-left frontier of the task's points in (compound resource, utility) space.

    Points sharing a resource level collapse onto the best one; points below
    the hull are dropped. Collinear interior points are kept so that every
    discrete step along a straight frontier stays reachable by the greedy
    allocator.
    """
    k = len(task.points[0].resource)
    weights = tuple(weights) if weights is not None else (1.0,) * k
    pts = task.points
    if task.mandatory_floor is not None:
        floor_c = compound_resource(task.point(task.mandatory_floor).resource, weights)
        pts = [p for p in pts if compound_resource(p.resource, weights) >= floor_c]

    ranked = sorted(
        ((compound_resource(p.resource, weights), p) for p in pts),
        key=lambda cp: (cp[0], -cp[1].utility, _sort_key(cp[1].config_id)),
    )
    # Pareto filter: strictly increasing resource and utility
    frontier: list[tuple[float, ConfigurationPoint]] = []
    for c, p in ranked:
        if frontier and (c == frontier[-1][0] or p.utility <= frontier[-1][1].utility):
            continue
        frontier.append((c, p))

    hull: list[tuple[float, ConfigurationPoint]] = []
    for c, p in frontier:
        while len(hull) >= 2:
            (c0, p0), (c1, p1) = hull[-2], hull[-1]
            # drop the middle point when it lies strictly below the chord
            cross = (c1 - c0) * (p.utility - p0.utility) - (p1.utility - p0.utility) * (c - c0)
            scale = max(abs(c - c0) * abs(p.utility - p0.utility), 1e-300)
            if cross > 1e-12 * scale:
                hull.pop()
            else:
                break
        hull.append((c, p))

    return ConcaveMajorant(task.task_id, tuple(p for _, p in hull), tuple(c for c, _ in hull))


def greedy_allocate(
    tasks: Sequence[TaskModel],
    budget: float | Sequence[float],
    weights: Sequence[float] | None = None,
    majorants: Sequence[ConcaveMajorant] | None = None,
) -> Allocation:
    budget = as_resource(budget)
    k = len(budget)
    weights = tuple(weights) if weights is not None else (1.0,) * k
    if majorants is None:
        majorants = [concave_majorant(t, weights) for t in tasks]

    level = [0] * len(tasks)
    used = [0.0] * k
    for m in majorants:
        for j, r in enumerate(m.vertices[0].resource):
            used[j] += r
    if any(u > b + _FIT_TOL for u, b in zip(used, budget)):
        offenders = [
            t.task_id for t, m in zip(tasks, majorants) if any(r > 0 for r in m.vertices[0].resource)
        ]
        raise InfeasibleError(offenders, tuple(used), budget)

    order = sorted(range(len(tasks)), key=lambda i: _sort_key(tasks[i].task_id))
    blocked = [False] * len(tasks)
    while True:
        best = None
        for i in order:
            m = majorants[i]
            if blocked[i] or level[i] + 1 >= len(m.vertices):
                continue
            a, b = m.vertices[level[i]], m.vertices[level[i] + 1]
            delta = [rb - ra for ra, rb in zip(a.resource, b.resource)]
            if any(u + d > bj + _FIT_TOL for u, d, bj in zip(used, delta, budget)):
                blocked[i] = True
                continue
            ratio = (b.utility - a.utility) / (m.compound[level[i] + 1] - m.compound[level[i]])
            key = (-ratio, _sort_key(tasks[i].task_id), _sort_key(b.config_id))
            if best is None or key < best[0]:
                best = (key, i, delta)
        if best is None:
            break
        _, i, delta = best
        level[i] += 1
        used = [u + d for u, d in zip(used, delta)]

    chosen, points = {}, {}
    total_u = 0.0
    total_r = [0.0] * k
    for t, m, lv in zip(tasks, majorants, level):
        p = m.vertices[lv]
        chosen[t.task_id] = p.config_id
        points[t.task_id] = p
        total_u += p.utility
        total_r = [x + r for x, r in zip(total_r, p.resource)]
    residual = tuple(max(b - r, 0.0) for b, r in zip(budget, total_r))
    return Allocation(chosen, total_u, tuple(total_r), residual, points)


def solve(tasks: Sequence[TaskModel], budget, weights: Sequence[float] | None = None) -> Allocation:
    """Public entry point: majorants for every task, then greedy allocation."""
    budget = as_resource(budget)
    weights = tuple(weights) if weights is not None else (1.0,) * len(budget)
    return greedy_allocate(tasks, budget, weights, [concave_majorant(t, weights) for t in tasks])


def dump_majorants_csv(path, tasks: Sequence[TaskModel], weights: Sequence[float] | None = None, append=False):
    """Write task_id, config_id, resource, utility, on_hull rows for debugging."""
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        w = csv.writer(fh)
        if not append:
            w.writerow(["task_id", "config_id", "resource", "utility", "on_hull"])
        for t in tasks:
            wts = tuple(weights) if weights is not None else (1.0,) * len(t.points[0].resource)
            hull_ids = {p.config_id for p in concave_majorant(t, wts).vertices}
            for p in t.points:
                w.writerow(
                    [t.task_id, p.config_id, repr(compound_resource(p.resource, wts)), repr(p.utility),
                     int(p.config_id in hull_ids)]
                )
