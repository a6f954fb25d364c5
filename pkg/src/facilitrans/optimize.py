"""Fidelity-landscape scans over detuning mismatches and pulse period,
plus derivative-free simplex refinement of the operating point.

Scan axes are named ``dDelta1``, ``dDelta2`` (mismatch overrides in units
of Omega) and ``period_scale`` (multiplier on the nominal hop period, so
1.0 is a pi pulse at the effective Rabi frequency).  Grid points evaluate
independently and assemble in index order, so results are identical for
any degree of parallelism.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidParams
from .model import ChainGeometry, ModelParams, PulseSchedule
from .observables import transfer_population, truth_table_fidelity
from .dynamics import DEFAULT_TOL, run_schedule
from .observables import single_excitation_state

AXIS_NAMES = ("dDelta1", "dDelta2", "period_scale")
OBJECTIVES = ("truth_table", "transfer_population")


@dataclass(frozen=True)
class ScanAxis:
    name: str
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise InvalidParams(f"unknown scan axis {self.name!r}; use one of {AXIS_NAMES}")
        if self.count < 2:
            raise InvalidParams(f"axis {self.name} needs at least 2 points")
        if not self.lo < self.hi:
            raise InvalidParams(f"axis {self.name} needs lo < hi")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class ScanGrid:
    axes: tuple[ScanAxis, ...]
    objective: str = "truth_table"

    def __post_init__(self):
        axes = tuple(self.axes)
        if not 1 <= len(axes) <= 3:
            raise InvalidParams("scan over 1 to 3 axes")
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise InvalidParams(f"duplicate scan axes {names}")
        if self.objective not in OBJECTIVES:
            raise InvalidParams(
                f"unknown objective {self.objective!r}; use one of {OBJECTIVES}"
            )
        object.__setattr__(self, "axes", axes)


@dataclass(frozen=True)
class ScanResult:
    grid: ScanGrid
    points: np.ndarray   # (n_points, n_axes), row-major over the axes
    values: np.ndarray   # (n_points,)

    def argmax(self) -> dict[str, float]:
        best = int(np.argmax(self.values))
        return dict(zip([a.name for a in self.grid.axes], self.points[best]))

    def best_value(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class OptimumReport:
    best_params: dict[str, float]
    best_objective: float
    trace: tuple[tuple[float, ...], ...]
    iterations: int
    converged: bool
    hit_max_iterations: bool

    def to_dict(self) -> dict:
        return {
            "best_params": dict(self.best_params),
            "best_objective": self.best_objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "hit_max_iterations": self.hit_max_iterations,
        }


def apply_point(
    params: ModelParams, schedule: PulseSchedule, point: dict[str, float]
) -> tuple[ModelParams, PulseSchedule]:
    """Model parameters and schedule with the scan-point overrides applied."""
    p = params
    if "dDelta1" in point:
        p = replace(p, ddelta1=float(point["dDelta1"]))
    if "dDelta2" in point:
        p = replace(p, ddelta2=float(point["dDelta2"]))
    s = schedule
    if "period_scale" in point:
        s = schedule.scaled(float(point["period_scale"]))
    return p, s


def make_objective(
    geometry: ChainGeometry,
    params: ModelParams,
    schedule: PulseSchedule,
    objective: str,
    in_site: int,
    out_site: int,
    tol: float = DEFAULT_TOL,
) -> Callable[[dict[str, float]], float]:
    """Objective as a function of a {axis name: value} point."""
    if objective not in OBJECTIVES:
        raise InvalidParams(f"unknown objective {objective!r}")

    def evaluate(point: dict[str, float]) -> float:
        p, s = apply_point(params, schedule, point)
        if objective == "truth_table":
            return truth_table_fidelity(geometry, p, s, in_site, out_site, tol=tol)
        traj = run_schedule(
            single_excitation_state(geometry.n_sites, in_site),
            s, geometry, p, samples_per_pulse=1, tol=tol,
        )
        return transfer_population(traj, out_site, len(s))

    return evaluate


def _grid_task(args) -> tuple[int, float]:
    index, point, geometry, params, schedule, objective, in_site, out_site, tol = args
    fn = make_objective(geometry, params, schedule, objective, in_site, out_site, tol)
    return index, fn(point)


def scan(
    grid: ScanGrid,
    geometry: ChainGeometry,
    params: ModelParams,
    schedule: PulseSchedule,
    in_site: int,
    out_site: int,
    tol: float = DEFAULT_TOL,
    mapper: Optional[Callable[[Callable, Iterable], Iterable]] = None,
) -> ScanResult:
    """Evaluate the objective on every grid point, assembled in index order."""
    axes_values = [a.values() for a in grid.axes]
    names = [a.name for a in grid.axes]
    points = np.array(list(itertools.product(*axes_values)))
    run = mapper if mapper is not None else map
    tasks = [
        (
            i,
            dict(zip(names, pt)),
            geometry,
            params,
            schedule,
            grid.objective,
            in_site,
            out_site,
            tol,
        )
        for i, pt in enumerate(points)
    ]
    results = sorted(run(_grid_task, tasks), key=lambda r: r[0])
    values = np.array([r[1] for r in results])
    return ScanResult(grid=grid, points=points, values=values)


# Nelder-Mead simplex constants: reflection, expansion, contraction, shrink
NM_REFLECT = 1.0
NM_EXPAND = 2.0
NM_CONTRACT = 0.5
NM_SHRINK = 0.5
NM_EDGE_FRACTION = 0.02
NM_SPREAD_TOL = 1e-5
NM_MAX_ITERATIONS = 200


def refine(
    start: dict[str, float],
    objective: Callable[[dict[str, float]], float],
    bounds: dict[str, tuple[float, float]],
    max_iterations: int = NM_MAX_ITERATIONS,
    spread_tol: float = NM_SPREAD_TOL,
) -> OptimumReport:
    """Maximize the objective with a bounded Nelder-Mead simplex.

    The initial simplex spans 2% of each bound range around the start;
    candidate vertices are clamped into the bounds.  Terminates when the
    objective spread over the simplex drops below ``spread_tol`` or after
    ``max_iterations``.  The report carries the best point ever evaluated,
    so the result never falls below the start's objective.
    """
    names = sorted(bounds.keys())
    if sorted(start.keys()) != names:
        raise InvalidParams(f"start point keys {sorted(start)} do not match bounds {names}")
    lo = np.array([bounds[k][0] for k in names])
    hi = np.array([bounds[k][1] for k in names])
    if np.any(lo >= hi):
        raise InvalidParams("every bound must satisfy lo < hi")
    x0 = np.array([start[k] for k in names])
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise InvalidParams(f"start point {start} outside bounds")

    def clamp(x: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(x, lo), hi)

    best_x = x0.copy()
    best_f = -np.inf
    trace: list[tuple[float, ...]] = []

    def f(x: np.ndarray) -> float:
        nonlocal best_x, best_f
        x = clamp(x)
        val = objective(dict(zip(names, x)))
        trace.append(tuple(x) + (val,))
        if val > best_f:
            best_f = val
            best_x = x.copy()
        return val

    ndim = len(names)
    simplex = [x0]
    for k in range(ndim):
        step = NM_EDGE_FRACTION * (hi[k] - lo[k])
        vertex = x0.copy()
        vertex[k] = vertex[k] - step if vertex[k] + step > hi[k] else vertex[k] + step
        simplex.append(vertex)
    simplex = [clamp(v) for v in simplex]
    fvals = [f(v) for v in simplex]

    iterations = 0
    converged = False
    while iterations < max_iterations:
        order = np.argsort(fvals)[::-1]  # maximizing: best first
        simplex = [simplex[i] for i in order]
        fvals = [fvals[i] for i in order]
        if max(fvals) - min(fvals) < spread_tol:
            converged = True
            break
        iterations += 1
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        reflected = clamp(centroid + NM_REFLECT * (centroid - worst))
        f_r = f(reflected)
        if f_r > fvals[0]:
            expanded = clamp(centroid + NM_EXPAND * (reflected - centroid))
            f_e = f(expanded)
            if f_e > f_r:
                simplex[-1], fvals[-1] = expanded, f_e
            else:
                simplex[-1], fvals[-1] = reflected, f_r
        elif f_r > fvals[-2]:
            simplex[-1], fvals[-1] = reflected, f_r
        else:
            contracted = clamp(centroid + NM_CONTRACT * (worst - centroid))
            f_c = f(contracted)
            if f_c > fvals[-1]:
                simplex[-1], fvals[-1] = contracted, f_c
            else:
                best = simplex[0]
                simplex = [best] + [
                    clamp(best + NM_SHRINK * (v - best)) for v in simplex[1:]
                ]
                fvals = [fvals[0]] + [f(v) for v in simplex[1:]]

    return OptimumReport(
        best_params=dict(zip(names, best_x)),
        best_objective=float(best_f),
        trace=tuple(trace),
        iterations=iterations,
        converged=converged,
        hit_max_iterations=not converged,
    )
