"""Scalar figures of merit: transfer population, truth-table transport
fidelity, and the Bell-state fidelity sequence of a moving entangled pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import DEFAULT_TOL, Trajectory, run_schedule
from .errors import IndexOutOfRange
from .hilbert import (
    DensityMatrix,
    PureState,
    basis_state,
    bell_psi_plus,
    make_pure,
    partial_trace,
    state_fidelity,
)
from .model import ChainGeometry, ModelParams, PulseSchedule


@dataclass(frozen=True)
class FidelityReport:
    """Figures of merit for one run, with the inputs that produced them."""

    transfer_population: Optional[float] = None
    truth_table: Optional[float] = None
    bell_fidelities: tuple[tuple[int, float], ...] = ()
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict = {}
        if self.transfer_population is not None:
            out["transfer_population"] = self.transfer_population
        if self.truth_table is not None:
            out["truth_table"] = self.truth_table
        if self.bell_fidelities:
            out["bell_fidelities"] = [
                {"pulse": i, "fidelity": f} for i, f in self.bell_fidelities
            ]
        if self.metadata:
            out["metadata"] = self.metadata
        return out


def transfer_population(trajectory: Trajectory, site: int, at_pulse: int) -> float:
    """Population of ``site`` at the boundary sample of pulse ``at_pulse``.

    Pulse 0 is the initial time.
    """
    n = trajectory.populations.shape[1]
    if not 1 <= site <= n:
        raise IndexOutOfRange(f"site {site} outside chain of {n} sites")
    if not 0 <= at_pulse < len(trajectory.boundary_indices):
        raise IndexOutOfRange(
            f"pulse {at_pulse} outside schedule of "
            f"{len(trajectory.boundary_indices) - 1} pulses"
        )
    return float(trajectory.boundary_populations(at_pulse)[site - 1])


def single_excitation_state(n_sites: int, site: int) -> PureState:
    """Basis state with one excitation at ``site``."""
    if not 1 <= site <= n_sites:
        raise IndexOutOfRange(f"site {site} outside chain of {n_sites} sites")
    bits = ["0"] * n_sites
    bits[site - 1] = "1"
    return basis_state("".join(bits))


def all_ground_state(n_sites: int) -> PureState:
    return basis_state("0" * n_sites)


def bell_pair_state(n_sites: int, pair: tuple[int, int]) -> PureState:
    """Symmetric single-excitation pair between two sites of a longer chain."""
    a, b = pair
    if not (1 <= a < b <= n_sites):
        raise IndexOutOfRange(f"pair {pair} invalid for {n_sites} sites")
    ket_a = ["0"] * n_sites
    ket_a[a - 1] = "1"
    ket_b = ["0"] * n_sites
    ket_b[b - 1] = "1"
    return make_pure(["".join(ket_a), "".join(ket_b)], [1.0, 1.0])


def truth_table_fidelity(
    geometry: ChainGeometry,
    params: ModelParams,
    schedule: PulseSchedule,
    in_site: int,
    out_site: int,
    tol: float = DEFAULT_TOL,
) -> float:
    """Average of the two classical rows of the transport channel.

    Input 1 scores the probability that ``out_site`` is excited after the
    schedule when the excitation started at ``in_site``; input 0 scores the
    probability that ``out_site`` stayed in the ground state when the chain
    started empty.  The 0 row is simulated, not assumed: the off-resonant
    drive populates the chain slightly.
    """
    n = geometry.n_sites
    if not 1 <= in_site <= n or not 1 <= out_site <= n:
        raise IndexOutOfRange(f"sites ({in_site}, {out_site}) outside chain of {n}")
    kwargs = dict(samples_per_pulse=1, tol=tol)
    traj1 = run_schedule(
        single_excitation_state(n, in_site), schedule, geometry, params, **kwargs
    )
    traj0 = run_schedule(all_ground_state(n), schedule, geometry, params, **kwargs)
    p1 = traj1.populations[-1, out_site - 1]
    p0 = 1.0 - traj0.populations[-1, out_site - 1]
    return float((p0 + p1) / 2.0)


def bell_fidelities_of(
    trajectory: Trajectory, pair: tuple[int, int]
) -> list[tuple[int, float]]:
    """Bell fidelities at each recorded pulse boundary of a finished run.

    The trajectory must have been produced with boundary-state recording.
    After pulse i the reduced state of sites (a - i, a + 1 + i) is compared
    against the fixed-phase target (|01> + |10>)/sqrt(2); any dynamical
    phase between the branches is physical and counts against the fidelity.
    """
    if trajectory.boundary_states is None:
        raise IndexOutOfRange(
            "trajectory carries no boundary states; rerun with "
            "record_boundary_states=True"
        )
    a, b = pair
    n = trajectory.populations.shape[1]
    n_pulses = len(trajectory.boundary_states) - 1
    if a - n_pulses < 1 or b + n_pulses > n:
        raise IndexOutOfRange(
            f"{n_pulses} pulses push the pair {pair} off a chain of {n} sites"
        )
    target = bell_psi_plus()
    out = []
    for i in range(1, n_pulses + 1):
        reduced = partial_trace(trajectory.boundary_states[i], (a - i, b + i))
        out.append((i, state_fidelity(reduced, target)))
    return out


def bell_fidelity_sequence(
    geometry: ChainGeometry,
    params: ModelParams,
    schedule: PulseSchedule,
    pair: tuple[int, int] = (4, 5),
    tol: float = DEFAULT_TOL,
    samples_per_pulse: int = 1,
) -> list[tuple[int, float]]:
    """Overlap with the outward-moving symmetric pair after each pulse.

    The pair starts on adjacent sites (a, a+1) and the schedule moves it
    symmetrically outward.
    """
    a, b = pair
    n = geometry.n_sites
    if b != a + 1:
        raise IndexOutOfRange(f"pair {pair} must be adjacent sites")
    traj = run_schedule(
        bell_pair_state(n, pair),
        schedule,
        geometry,
        params,
        samples_per_pulse=samples_per_pulse,
        tol=tol,
        record_boundary_states=True,
    )
    return bell_fidelities_of(traj, pair)
