"""Command-line entry point: config ingestion, run orchestration, and
persistence of results as CSV, JSON and SVG.

Commands: ``simulate``, ``plan``, ``scan``, ``optimize``, ``disorder``.
Every command takes ``--config`` (a single JSON document, schema-validated
with unknown keys rejected) and ``--out``.  Outputs carry no timestamps;
identical (config, seed) produce bit-identical files at any worker count.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .disorder import (
    DisorderSpec,
    disorder_average,
    monte_carlo_deviation,
)
from .dynamics import (
    DEFAULT_SAMPLES_PER_PULSE,
    DEFAULT_TOL,
    Trajectory,
    run_schedule,
)
from .errors import ConfigError, FacilitransError, UnreachableWaypoint
from .hilbert import PureState
from .model import (
    ChainGeometry,
    ModelParams,
    PhysicalUnits,
    PulseSchedule,
    PulseToken,
    effective_rabi,
    hierarchy_diagnostics,
    plan_route,
)
from .observables import (
    FidelityReport,
    all_ground_state,
    bell_fidelities_of,
    bell_pair_state,
    single_excitation_state,
    transfer_population,
    truth_table_fidelity,
)
from .optimize import ScanAxis, ScanGrid, refine, make_objective, scan
from .parallel import resolve_worker_count, task_pool

_AXIS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "min", "max", "count"],
    "properties": {
        "name": {"enum": ["dDelta1", "dDelta2", "period_scale"]},
        "min": {"type": "number"},
        "max": {"type": "number"},
        "count": {"type": "integer", "minimum": 2},
    },
}

_BOUND = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "min", "max"],
    "properties": {
        "name": {"enum": ["dDelta1", "dDelta2", "period_scale"]},
        "min": {"type": "number"},
        "max": {"type": "number"},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n_sites", "params", "initial"],
    "properties": {
        "n_sites": {"type": "integer", "minimum": 2},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["v1", "v2"],
            "properties": {
                "v1": {"type": "number"},
                "v2": {"type": "number"},
                "omega": {"type": "number", "exclusiveMinimum": 0},
                "dDelta1": {"type": "number"},
                "dDelta2": {"type": "number"},
                "gamma_decay": {"type": "number", "minimum": 0},
                "gamma_deph": {"type": "number", "minimum": 0},
                "include_nnn": {"type": "boolean"},
                "c6": {"type": "number"},
            },
        },
        "schedule": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {"type": "integer", "enum": [1, 2]},
                    {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "prefixItems": [
                            {"type": "integer", "enum": [1, 2]},
                            {"type": "number", "exclusiveMinimum": 0},
                        ],
                    },
                ]
            },
        },
        "route": {
            "type": "object",
            "additionalProperties": False,
            "required": ["start", "waypoints"],
            "properties": {
                "start": {"type": "integer", "minimum": 1},
                "waypoints": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "integer", "minimum": 1},
                },
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "excitation_site": {"type": "integer", "minimum": 1},
                "bell_pair": {
                    "type": "array",
                    "minItems": 2,
                    "maxItems": 2,
                    "items": {"type": "integer", "minimum": 1},
                },
                "kets": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "string", "pattern": "^[01]+$"},
                },
                "amplitudes": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": {"type": "number"},
                    },
                },
            },
        },
        "fidelity": {
            "type": "object",
            "additionalProperties": False,
            "required": ["out_site"],
            "properties": {
                "in_site": {"type": "integer", "minimum": 1},
                "out_site": {"type": "integer", "minimum": 1},
            },
        },
        "samples_per_pulse": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "disorder": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_realizations"],
            "properties": {
                "sigma": {
                    "type": "array",
                    "minItems": 3,
                    "maxItems": 3,
                    "items": {"type": "number", "minimum": 0},
                },
                "sigma_nm": {
                    "type": "array",
                    "minItems": 3,
                    "maxItems": 3,
                    "items": {"type": "number", "minimum": 0},
                },
                "n_realizations": {"type": "integer", "minimum": 1},
                "base_seed": {"type": "integer"},
            },
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axes"],
            "properties": {
                "axes": {"type": "array", "minItems": 1, "maxItems": 3, "items": _AXIS},
                "objective": {"enum": ["truth_table", "transfer_population"]},
            },
        },
        "refine": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "bounds": {"type": "array", "minItems": 1, "maxItems": 3, "items": _BOUND},
                "max_iterations": {"type": "integer", "minimum": 1},
            },
        },
        "physical_units": {
            "type": "object",
            "additionalProperties": False,
            "required": ["omega_2pi_mhz", "r1_um"],
            "properties": {
                "omega_2pi_mhz": {"type": "number", "exclusiveMinimum": 0},
                "r1_um": {"type": "number", "exclusiveMinimum": 0},
                "r2_um": {"type": "number", "exclusiveMinimum": 0},
                "c6_2pi_mhz_um6": {"type": "number"},
            },
        },
        "seed": {"type": "integer"},
    },
}


def load_config(path: str | Path) -> dict:
    """Parse and schema-validate a run configuration."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config key {where!r}: {err.message}")
    if ("schedule" in cfg) == ("route" in cfg):
        raise ConfigError("config must contain exactly one of 'schedule' or 'route'")
    initial_keys = set(cfg["initial"].keys())
    allowed = [{"excitation_site"}, {"bell_pair"}, {"kets", "amplitudes"}]
    if initial_keys not in allowed:
        raise ConfigError(
            "config key 'initial': give exactly one of excitation_site, "
            "bell_pair, or kets with amplitudes"
        )
    return cfg


@dataclass
class RunSetup:
    """Validated configuration materialized into model objects."""

    config: dict
    geometry: ChainGeometry
    params: ModelParams
    schedule: PulseSchedule
    initial: PureState
    samples_per_pulse: int
    tol: float
    in_site: Optional[int]
    out_site: Optional[int]
    bell_pair: Optional[tuple[int, int]]
    disorder: Optional[DisorderSpec]
    physical: Optional[PhysicalUnits]
    seed: Optional[int]


def build_setup(cfg: dict, seed_override: Optional[int] = None) -> RunSetup:
    """Materialize a validated config, re-checking all physical invariants."""
    try:
        return _build_setup(cfg, seed_override)
    except FacilitransError as exc:
        if isinstance(exc, (ConfigError, UnreachableWaypoint)):
            raise
        raise ConfigError(str(exc))


def _build_setup(cfg: dict, seed_override: Optional[int]) -> RunSetup:
    n = cfg["n_sites"]
    p = cfg["params"]
    params = ModelParams(
        v1=p["v1"],
        v2=p["v2"],
        omega=p.get("omega", 1.0),
        ddelta1=p.get("dDelta1", 0.0),
        ddelta2=p.get("dDelta2", 0.0),
        gamma_decay=p.get("gamma_decay", 0.0),
        gamma_deph=p.get("gamma_deph", 0.0),
        include_nnn=p.get("include_nnn", True),
        c6=p.get("c6"),
    )
    geometry = ChainGeometry.for_couplings(n, params.v1, params.v2)

    if "schedule" in cfg:
        tokens = []
        for item in cfg["schedule"]:
            if isinstance(item, int):
                tokens.append(PulseToken(item))
            else:
                tokens.append(PulseToken(int(item[0]), float(item[1])))
        schedule = PulseSchedule(tuple(tokens))
    else:
        schedule = plan_route(geometry, cfg["route"]["start"], cfg["route"]["waypoints"])

    init = cfg["initial"]
    bell_pair = None
    if "excitation_site" in init:
        initial = single_excitation_state(n, init["excitation_site"])
    elif "bell_pair" in init:
        bell_pair = (init["bell_pair"][0], init["bell_pair"][1])
        initial = bell_pair_state(n, bell_pair)
    else:
        from .hilbert import make_pure

        amps = [complex(re, im) for re, im in init["amplitudes"]]
        initial = make_pure(init["kets"], amps)
        if initial.n_sites != n:
            raise ConfigError(
                f"config key 'initial/kets': patterns have {initial.n_sites} "
                f"sites but n_sites is {n}"
            )

    physical = None
    if "physical_units" in cfg:
        pu = cfg["physical_units"]
        physical = PhysicalUnits(
            omega_2pi_mhz=pu["omega_2pi_mhz"],
            r1_um=pu["r1_um"],
            r2_um=pu.get("r2_um"),
            c6_2pi_mhz_um6=pu.get("c6_2pi_mhz_um6"),
        )
        if physical.r2_um is not None:
            implied = physical.r1_um * (params.v1 / params.v2) ** (1.0 / 6.0)
            if abs(physical.r2_um / implied - 1.0) > 0.01:
                raise ConfigError(
                    f"config key 'physical_units/r2_um': {physical.r2_um} is "
                    f"inconsistent with (v1/v2); expected about {implied:.4g}"
                )

    disorder_spec = None
    seed = seed_override if seed_override is not None else cfg.get("seed")
    if "disorder" in cfg:
        d = cfg["disorder"]
        if ("sigma" in d) == ("sigma_nm" in d):
            raise ConfigError(
                "config key 'disorder': give exactly one of 'sigma' (internal "
                "units) or 'sigma_nm' (requires physical_units)"
            )
        if "sigma_nm" in d:
            if physical is None:
                raise ConfigError(
                    "config key 'disorder/sigma_nm' requires a physical_units block"
                )
            sigma = physical.sigma_internal(d["sigma_nm"])
        else:
            sigma = tuple(d["sigma"])
        # seed precedence: --seed flag, then disorder.base_seed, then top-level
        if seed_override is not None:
            base_seed = seed_override
        elif "base_seed" in d:
            base_seed = d["base_seed"]
        else:
            base_seed = cfg.get("seed", 0)
        seed = base_seed
        disorder_spec = DisorderSpec(
            sigma=sigma, n_realizations=d["n_realizations"], base_seed=base_seed
        )

    fid = cfg.get("fidelity", {})
    in_site = fid.get("in_site")
    out_site = fid.get("out_site")
    for name, s in (("in_site", in_site), ("out_site", out_site)):
        if s is not None and not 1 <= s <= n:
            raise ConfigError(f"config key 'fidelity/{name}': site {s} outside chain")

    return RunSetup(
        config=cfg,
        geometry=geometry,
        params=params,
        schedule=schedule,
        initial=initial,
        samples_per_pulse=cfg.get("samples_per_pulse", DEFAULT_SAMPLES_PER_PULSE),
        tol=cfg.get("tol", DEFAULT_TOL),
        in_site=in_site,
        out_site=out_site,
        bell_pair=bell_pair,
        disorder=disorder_spec,
        physical=physical,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# output writers


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def effective_config(setup: RunSetup) -> dict:
    """Config echo with the effective seed substituted; re-running this
    document reproduces the outputs bit-identically."""
    cfg = json.loads(json.dumps(setup.config))
    if setup.seed is not None:
        cfg["seed"] = setup.seed
        if "disorder" in cfg:
            cfg["disorder"]["base_seed"] = setup.seed
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_result_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    n = traj.populations.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "pulse_index"] + [f"pop_site_{j+1}" for j in range(n)])
        for i, t in enumerate(traj.times):
            writer.writerow(
                [_fmt(t), int(traj.pulse_index[i])]
                + [_fmt(v) for v in traj.populations[i]]
            )


def write_mean_trajectory_csv(path: Path, result) -> None:
    n = result.mean_populations.shape[1]
    header = (
        ["time", "pulse_index"]
        + [f"mean_pop_site_{j+1}" for j in range(n)]
        + [f"stderr_pop_site_{j+1}" for j in range(n)]
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, t in enumerate(result.times):
            writer.writerow(
                [_fmt(t), int(result.pulse_index[i])]
                + [_fmt(v) for v in result.mean_populations[i]]
                + [_fmt(v) for v in result.stderr_populations[i]]
            )


def write_realizations_csv(path: Path, result) -> None:
    n = result.final_populations.shape[1]
    header = ["realization_index", "base_seed", "attempts"] + [
        f"final_pop_site_{j+1}" for j in range(n)
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for seed_info, final in zip(result.realization_seeds, result.final_populations):
            writer.writerow(
                [seed_info["index"], seed_info["base_seed"], seed_info["attempts"]]
                + [_fmt(v) for v in final]
            )


def write_surface_csv(path: Path, scan_result) -> None:
    names = [a.name for a in scan_result.grid.axes]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + [scan_result.grid.objective])
        for pt, val in zip(scan_result.points, scan_result.values):
            writer.writerow([_fmt(v) for v in pt] + [_fmt(val)])


def write_schedule_json(path: Path, schedule: PulseSchedule, diagnostics: dict) -> None:
    payload = {
        "tokens": [[t.detuning_index, t.duration_in_t] for t in schedule],
        "diagnostics": diagnostics,
        "tool_version": __version__,
    }
    write_result_json(path, payload)


# fixed perceptual colormap: position in [0, 1] -> RGB anchors,
# linearly interpolated
_COLOR_STOPS = (
    (0.000, (68, 1, 84)),
    (0.125, (72, 40, 120)),
    (0.250, (62, 74, 137)),
    (0.375, (49, 104, 142)),
    (0.500, (38, 130, 142)),
    (0.625, (31, 158, 137)),
    (0.750, (53, 183, 121)),
    (0.875, (110, 206, 88)),
    (1.000, (253, 231, 37)),
)


def _color(value: float) -> str:
    v = min(1.0, max(0.0, float(value)))
    for (x0, c0), (x1, c1) in zip(_COLOR_STOPS[:-1], _COLOR_STOPS[1:]):
        if v <= x1:
            f = 0.0 if x1 == x0 else (v - x0) / (x1 - x0)
            rgb = tuple(round(a + f * (b - a)) for a, b in zip(c0, c1))
            return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"
    return "rgb(253,231,37)"


def write_heatmap_svg(
    path: Path,
    times: np.ndarray,
    populations: np.ndarray,
    boundary_times: np.ndarray,
    cfg_hash: str,
) -> None:
    """Site-by-time population raster with pulse-boundary rules."""
    n_t, n_sites = populations.shape
    cell_h = 26
    plot_w, margin_l, margin_t = 760, 60, 16
    plot_h = cell_h * n_sites
    width = margin_l + plot_w + 20
    height = margin_t + plot_h + 40
    t_max = float(times[-1]) if times[-1] > 0 else 1.0

    def x_of(t: float) -> float:
        return margin_l + plot_w * t / t_max

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<metadata>config-sha256:{cfg_hash}</metadata>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    for j in range(n_sites):
        y = margin_t + j * cell_h
        parts.append(
            f'<text x="{margin_l - 8}" y="{y + cell_h / 2 + 4}" font-size="12" '
            f'text-anchor="end" font-family="sans-serif">site {j + 1}</text>'
        )
        for i in range(n_t):
            x0 = x_of(times[i - 1]) if i > 0 else x_of(0.0)
            x1 = x_of(times[i])
            w = max(x1 - x0, 0.5)
            parts.append(
                f'<rect x="{x0:.2f}" y="{y}" width="{w:.2f}" height="{cell_h}" '
                f'fill="{_color(populations[i, j])}"/>'
            )
    for tb in boundary_times:
        if tb == 0.0:
            continue
        x = x_of(float(tb))
        parts.append(
            f'<line x1="{x:.2f}" y1="{margin_t}" x2="{x:.2f}" '
            f'y2="{margin_t + plot_h}" stroke="white" stroke-width="1.2" '
            f'stroke-dasharray="3,3"/>'
        )
    parts.append(
        f'<text x="{margin_l}" y="{margin_t + plot_h + 24}" font-size="12" '
        f'font-family="sans-serif">time (1/Omega); dashed rules mark pulse '
        f"boundaries; color is site population (0 to 1)</text>"
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")


# ---------------------------------------------------------------------------
# commands


def _base_payload(setup: RunSetup, command: str) -> dict:
    cfg = effective_config(setup)
    return {
        "command": command,
        "tool_version": __version__,
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "seed": setup.seed,
        "diagnostics": {
            "hierarchy": hierarchy_diagnostics(setup.params, setup.geometry).to_dict()
        },
    }


def _physical_summary(setup: RunSetup) -> Optional[dict]:
    if setup.physical is None:
        return None
    _, period = effective_rabi(setup.params.omega)
    n_pulses = len(setup.schedule)
    total_t = sum(t.duration_in_t for t in setup.schedule) * period
    r2_um = setup.physical.r2_um
    if r2_um is None:
        r2_um = setup.physical.r1_um * (setup.params.v1 / setup.params.v2) ** (1 / 6)
    gaps = [
        setup.physical.r1_um if s % 2 == 1 else r2_um
        for s in range(1, setup.geometry.n_sites)
    ]
    return {
        "hop_period_us": setup.physical.time_us(period),
        "schedule_duration_us": setup.physical.time_us(total_t),
        "n_pulses": n_pulses,
        "chain_span_um": sum(gaps),
    }


def cmd_simulate(setup: RunSetup, out: Path, no_svg: bool) -> int:
    traj = run_schedule(
        setup.initial,
        setup.schedule,
        setup.geometry,
        setup.params,
        samples_per_pulse=setup.samples_per_pulse,
        tol=setup.tol,
        record_boundary_states=setup.bell_pair is not None,
    )
    report = FidelityReport(
        transfer_population=(
            transfer_population(traj, setup.out_site, len(setup.schedule))
            if setup.out_site is not None
            else None
        ),
        truth_table=(
            truth_table_fidelity(
                setup.geometry,
                setup.params,
                setup.schedule,
                setup.in_site,
                setup.out_site,
                tol=setup.tol,
            )
            if setup.in_site is not None and setup.out_site is not None
            else None
        ),
        bell_fidelities=(
            tuple(bell_fidelities_of(traj, setup.bell_pair))
            if setup.bell_pair is not None
            else ()
        ),
    )
    payload = _base_payload(setup, "simulate")
    payload["report"] = report.to_dict()
    phys = _physical_summary(setup)
    if phys is not None:
        payload["diagnostics"]["physical"] = phys
    write_trajectory_csv(out / "trajectory.csv", traj)
    write_result_json(out / "result.json", payload)
    if not no_svg:
        write_heatmap_svg(
            out / "heatmap.svg",
            traj.times,
            traj.populations,
            traj.times[traj.boundary_indices],
            payload["config_sha256"],
        )
    return 0


def cmd_plan(setup: RunSetup, out: Path) -> int:
    if "route" not in setup.config:
        raise ConfigError("plan requires a 'route' block in the config")
    diagnostics = hierarchy_diagnostics(setup.params, setup.geometry).to_dict()
    write_schedule_json(out / "schedule.json", setup.schedule, diagnostics)
    return 0


def _require_scan(setup: RunSetup) -> ScanGrid:
    if "scan" not in setup.config:
        raise ConfigError("this command requires a 'scan' block in the config")
    block = setup.config["scan"]
    axes = tuple(
        ScanAxis(a["name"], a["min"], a["max"], a["count"]) for a in block["axes"]
    )
    return ScanGrid(axes=axes, objective=block.get("objective", "truth_table"))


def _scan_sites(setup: RunSetup) -> tuple[int, int]:
    if setup.in_site is None or setup.out_site is None:
        raise ConfigError(
            "scan and optimize require 'fidelity' with in_site and out_site"
        )
    return setup.in_site, setup.out_site


def cmd_scan(setup: RunSetup, out: Path, workers: int) -> int:
    grid = _require_scan(setup)
    in_site, out_site = _scan_sites(setup)
    with task_pool(workers) as mapper:
        result = scan(
            grid,
            setup.geometry,
            setup.params,
            setup.schedule,
            in_site,
            out_site,
            tol=setup.tol,
            mapper=mapper,
        )
    payload = _base_payload(setup, "scan")
    payload["scan"] = {
        "objective": grid.objective,
        "argmax": result.argmax(),
        "best_value": result.best_value(),
        "n_points": int(result.values.size),
    }
    write_surface_csv(out / "surface.csv", result)
    write_result_json(out / "result.json", payload)
    return 0


def cmd_optimize(setup: RunSetup, out: Path, workers: int) -> int:
    grid = _require_scan(setup)
    in_site, out_site = _scan_sites(setup)
    with task_pool(workers) as mapper:
        result = scan(
            grid,
            setup.geometry,
            setup.params,
            setup.schedule,
            in_site,
            out_site,
            tol=setup.tol,
            mapper=mapper,
        )
    start = result.argmax()
    block = setup.config.get("refine", {})
    if "bounds" in block:
        bounds = {b["name"]: (b["min"], b["max"]) for b in block["bounds"]}
    else:
        bounds = {a.name: (a.lo, a.hi) for a in grid.axes}
    if sorted(bounds) != sorted(start):
        raise ConfigError("refine bounds must cover exactly the scan axes")
    objective = make_objective(
        setup.geometry,
        setup.params,
        setup.schedule,
        grid.objective,
        in_site,
        out_site,
        tol=setup.tol,
    )
    report = refine(
        start,
        objective,
        bounds,
        max_iterations=block.get("max_iterations", 200),
    )
    payload = _base_payload(setup, "optimize")
    payload["scan"] = {
        "objective": grid.objective,
        "argmax": start,
        "best_value": result.best_value(),
        "n_points": int(result.values.size),
    }
    payload["optimum"] = report.to_dict()
    write_surface_csv(out / "surface.csv", result)
    write_result_json(out / "result.json", payload)
    return 0


def cmd_disorder(setup: RunSetup, out: Path, workers: int) -> int:
    if setup.disorder is None:
        raise ConfigError("disorder requires a 'disorder' block in the config")
    with task_pool(workers) as mapper:
        result = disorder_average(
            setup.geometry,
            setup.params,
            setup.schedule,
            setup.initial,
            setup.disorder,
            samples_per_pulse=setup.samples_per_pulse,
            tol=setup.tol,
            mapper=mapper,
        )
    payload = _base_payload(setup, "disorder")
    sigma_x = setup.disorder.sigma[0]
    c6 = setup.params.c6_value(setup.geometry.r1)
    deviation = {
        "sigma": list(setup.disorder.sigma),
        "couplings": {},
    }
    for label, v in (("v1", setup.params.v1), ("v2", setup.params.v2)):
        stats = monte_carlo_deviation(v, sigma_x, c6, seed=setup.disorder.base_seed)
        deviation["couplings"][label] = stats
    payload["disorder"] = {
        "n_realizations": result.n_realizations,
        "interaction_deviation": deviation,
    }
    if setup.out_site is not None:
        payload["disorder"]["mean_final_out_site"] = result.mean_final(setup.out_site)
        payload["disorder"]["stderr_final_out_site"] = result.stderr_final(setup.out_site)
    write_mean_trajectory_csv(out / "mean_trajectory.csv", result)
    write_realizations_csv(out / "realizations.csv", result)
    write_result_json(out / "result.json", payload)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facilitrans",
        description=(
            "Simulate directional transport of excitations and Bell pairs in "
            "a chain of two-level atoms driven by detuned pi-pulse trains."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "run a schedule and write trajectory, result and heatmap"),
        ("plan", "turn a route into a pulse schedule with validity diagnostics"),
        ("scan", "evaluate the objective on a parameter grid"),
        ("optimize", "scan, then refine the optimum with a simplex search"),
        ("disorder", "average a schedule over thermal position disorder"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to a JSON run config")
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.add_argument("--workers", type=int, default=None,
                         help="worker processes (default: FACILITRANS_WORKERS or CPU count)")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
        cmd.add_argument("--no-svg", action="store_true", help="skip SVG emission")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        setup = build_setup(cfg, seed_override=args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        workers = resolve_worker_count(args.workers)
        if args.command == "simulate":
            return cmd_simulate(setup, out, args.no_svg)
        if args.command == "plan":
            return cmd_plan(setup, out)
        if args.command == "scan":
            return cmd_scan(setup, out, workers)
        if args.command == "optimize":
            return cmd_optimize(setup, out, workers)
        if args.command == "disorder":
            return cmd_disorder(setup, out, workers)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, UnreachableWaypoint) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FacilitransError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # numerical failures from dependencies
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())
