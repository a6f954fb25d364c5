"""Chain geometry, van der Waals couplings, pulse Hamiltonians and schedules.

The chain alternates two gap lengths: the gap between sites (2j-1, 2j) is
r1 and the gap between (2j, 2j+1) is r2, with r1 < r2.  A global drive of
Rabi frequency Omega couples ground and excited states; its detuning
alternates between Delta_1 and Delta_2, where Delta_i = V_i + dDelta_i is
the nearest-neighbor interaction across the r_i gap plus a small mismatch.

Evolution is carried out in the frame rotating at the instantaneous laser
detuning, which makes each pulse Hamiltonian time independent:

    H_i = -Delta_i sum_j n_j + (Omega/2) sum_j (sigma_j^+ + sigma_j^-)
          + sum_NN V_gap n_j n_j+1 [+ sum V_nnn n_j n_j+2]

The frame changes at each pulse boundary; :func:`frame_switch_phase` gives
the diagonal unitary that connects the frames.  It commutes with every
n_j, so site populations and equal-excitation coherences are unaffected,
but it is applied anyway so that the simulated state matches the
continuously-driven one exactly.

Internal units: Omega = 1 sets the frequency scale and r1 = 1 the length
scale unless stated otherwise.  :class:`PhysicalUnits` converts to and
from laboratory units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    InvalidGeometry,
    InvalidParams,
    InvalidSchedule,
    NonHermitianInput,
    UnreachableWaypoint,
    ZeroDistance,
)
from .hilbert import excitation_numbers, occupation_table

#: effective two-atom Rabi frequency is this multiple of the drive Omega
EFFECTIVE_RABI_FACTOR = math.sqrt(2.0) / 2.0

HERM_TOL = 1e-12


def effective_rabi(omega: float) -> tuple[float, float]:
    """Effective Rabi frequency and hop period for a facilitated pair.

    Returns ``(omega_tilde, T)`` with ``omega_tilde = sqrt(2) * omega / 2``
    and ``T = pi / omega_tilde``, the duration of one hop (a pi pulse at
    the effective frequency).
    """
    if omega <= 0:
        raise InvalidParams(f"omega must be positive, got {omega}")
    omega_tilde = EFFECTIVE_RABI_FACTOR * omega
    return omega_tilde, math.pi / omega_tilde


def interaction_strength(displacement: Sequence[float], c6: float) -> float:
    """Van der Waals coupling c6 / |r|^6 for a separation vector."""
    r = np.asarray(displacement, dtype=float)
    dist2 = float(r @ r)
    if dist2 == 0.0:
        raise ZeroDistance("atoms coincide; coupling diverges")
    return c6 / dist2**3


@dataclass(frozen=True)
class ChainGeometry:
    """Atom count, ideal alternating spacings and per-site 3D displacements.

    The chain runs along x.  Displacements are a (N, 3) array in the same
    length units as r1, r2; they default to zero.
    """

    n_sites: int
    r1: float = 1.0
    r2: float = 2.0 ** (1.0 / 6.0)
    displacements: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n_sites < 2:
            raise InvalidGeometry(f"need at least 2 sites, got {self.n_sites}")
        if not 0 < self.r1 < self.r2:
            raise InvalidGeometry(f"require 0 < r1 < r2, got r1={self.r1}, r2={self.r2}")
        disp = self.displacements
        if disp is None:
            disp = np.zeros((self.n_sites, 3))
        disp = np.ascontiguousarray(disp, dtype=float)
        if disp.shape != (self.n_sites, 3):
            raise InvalidGeometry(
                f"displacements must have shape ({self.n_sites}, 3), got {disp.shape}"
            )
        disp.setflags(write=False)
        object.__setattr__(self, "displacements", disp)
        x = self.positions()[:, 0]
        if np.any(np.diff(x) <= 0):
            raise InvalidGeometry("atom positions must increase strictly along the chain")

    @classmethod
    def for_couplings(
        cls, n_sites: int, v1: float, v2: float, r1: float = 1.0
    ) -> "ChainGeometry":
        """Geometry whose ideal gaps produce the couplings (v1, v2) for c6 = v1*r1^6."""
        return cls(n_sites, r1, r1 * (v1 / v2) ** (1.0 / 6.0))

    def ideal_positions(self) -> np.ndarray:
        """Ideal x coordinates of the N sites, site 1 at the origin."""
        gaps = [self.r1 if s % 2 == 1 else self.r2 for s in range(1, self.n_sites)]
        return np.concatenate([[0.0], np.cumsum(gaps)])

    def positions(self) -> np.ndarray:
        """(N, 3) displaced positions."""
        pos = np.zeros((self.n_sites, 3))
        pos[:, 0] = self.ideal_positions()
        return pos + self.displacements

    def with_displacements(self, displacements: np.ndarray) -> "ChainGeometry":
        return replace(self, displacements=np.asarray(displacements, dtype=float))

    def gap_index(self, site: int) -> int:
        """Detuning index (1 or 2) of the gap between ``site`` and ``site + 1``."""
        if not 1 <= site < self.n_sites:
            raise InvalidGeometry(f"gap ({site}, {site + 1}) out of range")
        return 1 if site % 2 == 1 else 2


@dataclass(frozen=True)
class ModelParams:
    """Drive, interaction and dissipation parameters in units of Omega.

    ``c6`` defaults to v1 * r1^6 so that the ideal r1-gap coupling is v1.
    The resonance condition is the signed equality Delta_i = v_i + ddelta_i.
    """

    v1: float
    v2: float
    omega: float = 1.0
    ddelta1: float = 0.0
    ddelta2: float = 0.0
    gamma_decay: float = 0.0
    gamma_deph: float = 0.0
    include_nnn: bool = True
    c6: Optional[float] = None

    def __post_init__(self):
        if self.omega <= 0:
            raise InvalidParams(f"omega must be positive, got {self.omega}")
        if not abs(self.v1) > abs(self.v2) > 0:
            raise InvalidParams(f"require |v1| > |v2| > 0, got v1={self.v1}, v2={self.v2}")
        if math.copysign(1, self.v1) != math.copysign(1, self.v2):
            raise InvalidParams("v1 and v2 must have the same sign")
        if self.c6 is not None and math.copysign(1, self.c6) != math.copysign(1, self.v1):
            raise InvalidParams("c6 must have the same sign as v1, v2")
        if self.gamma_decay < 0 or self.gamma_deph < 0:
            raise InvalidParams("dissipation rates must be non-negative")

    def c6_value(self, r1: float) -> float:
        return self.c6 if self.c6 is not None else self.v1 * r1**6

    def interaction(self, pulse_index: int) -> float:
        return self.v1 if pulse_index == 1 else self.v2

    def mismatch(self, pulse_index: int) -> float:
        return self.ddelta1 if pulse_index == 1 else self.ddelta2

    def detuning(self, pulse_index: int, override: Optional[float] = None) -> float:
        """Delta_i = V_i + dDelta_i, with an optional per-pulse mismatch override."""
        if pulse_index not in (1, 2):
            raise InvalidParams(f"pulse index must be 1 or 2, got {pulse_index}")
        dd = self.mismatch(pulse_index) if override is None else override
        return self.interaction(pulse_index) + dd

    @property
    def dissipative(self) -> bool:
        return self.gamma_decay > 0 or self.gamma_deph > 0


@dataclass(frozen=True)
class PulseToken:
    """One pulse: detuning index, duration in units of the hop period T,
    and an optional mismatch override for individually tuned steps."""

    detuning_index: int
    duration_in_t: float = 1.0
    ddelta_override: Optional[float] = None

    def __post_init__(self):
        if self.detuning_index not in (1, 2):
            raise InvalidSchedule(f"detuning index must be 1 or 2, got {self.detuning_index}")
        if not self.duration_in_t > 0:
            raise InvalidSchedule(f"pulse duration must be positive, got {self.duration_in_t}")


@dataclass(frozen=True)
class PulseSchedule:
    tokens: tuple[PulseToken, ...]

    def __post_init__(self):
        tokens = tuple(self.tokens)
        if not tokens:
            raise InvalidSchedule("schedule must contain at least one pulse")
        object.__setattr__(self, "tokens", tokens)

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> "PulseSchedule":
        return cls(tuple(PulseToken(int(i)) for i in indices))

    def scaled(self, period_scale: float) -> "PulseSchedule":
        """Schedule with every duration multiplied by ``period_scale``."""
        return PulseSchedule(
            tuple(replace(t, duration_in_t=t.duration_in_t * period_scale) for t in self.tokens)
        )

    def indices(self) -> tuple[int, ...]:
        return tuple(t.detuning_index for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def coupling_table(
    geometry: ChainGeometry, c6: float, v1: float, v2: float
) -> dict[tuple[int, int], float]:
    """Couplings for every NN and NNN pair (1-based site indices).

    With zero displacements the ideal values are returned exactly; otherwise
    couplings follow c6/|r|^6 on the displaced 3D positions.  Pairs farther
    than next-nearest neighbors are excluded.
    """
    n = geometry.n_sites
    table: dict[tuple[int, int], float] = {}
    ideal = not geometry.displacements.any()
    v_nnn = c6 / (geometry.r1 + geometry.r2) ** 6
    pos = None if ideal else geometry.positions()
    for i in range(1, n + 1):
        for j in (i + 1, i + 2):
            if j > n:
                continue
            if ideal:
                if j == i + 1:
                    table[(i, j)] = v1 if geometry.gap_index(i) == 1 else v2
                else:
                    table[(i, j)] = v_nnn
            else:
                table[(i, j)] = interaction_strength(pos[j - 1] - pos[i - 1], c6)
    return table


@dataclass(frozen=True)
class HermitianOperator:
    """Dense pulse Hamiltonian in the rotating frame.

    ``diagonal`` and ``drive_amplitude`` expose the structure
    H = diag(diagonal) + drive_amplitude * sum_j (sigma_j^+ + sigma_j^-),
    which the integrators exploit; ``matrix`` is the assembled dense form.
    """

    matrix: np.ndarray
    frame_detuning: float
    n_sites: int
    diagonal: np.ndarray = field(repr=False, default=None)
    drive_amplitude: float = 0.0

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=complex)
        herm = np.abs(mat - mat.conj().T).max()
        if herm > HERM_TOL:
            raise NonHermitianInput(f"Hamiltonian Hermiticity violation {herm:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        if self.diagonal is not None:
            diag = np.ascontiguousarray(self.diagonal, dtype=float)
            diag.setflags(write=False)
            object.__setattr__(self, "diagonal", diag)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def structured(self) -> bool:
        return self.diagonal is not None


def build_pulse_hamiltonian(
    geometry: ChainGeometry,
    params: ModelParams,
    pulse_index: int,
    ddelta_override: Optional[float] = None,
) -> HermitianOperator:
    """Rotating-frame Hamiltonian for a pulse at detuning Delta_1 or Delta_2.

    The detuning always targets the ideal couplings: under position
    disorder the interactions are recomputed from the displaced positions
    but Delta_i stays at V_i + dDelta_i, since an experiment cannot track
    individual realizations.
    """
    n = geometry.n_sites
    dim = 1 << n
    occ = occupation_table(n).astype(float)
    delta = params.detuning(pulse_index, ddelta_override)
    diag = -delta * occ.sum(axis=1)
    c6 = params.c6_value(geometry.r1)
    table = coupling_table(geometry, c6, params.v1, params.v2)
    for (i, j), v in table.items():
        if j - i == 2 and not params.include_nnn:
            continue
        diag += v * occ[:, i - 1] * occ[:, j - 1]

    mat = np.zeros((dim, dim), dtype=complex)
    np.fill_diagonal(mat, diag)
    half = params.omega / 2.0
    idx = np.arange(dim)
    for j in range(n):
        mat[idx ^ (1 << (n - 1 - j)), idx] += half
    return HermitianOperator(
        matrix=mat,
        frame_detuning=delta,
        n_sites=n,
        diagonal=diag,
        drive_amplitude=half,
    )


def frame_switch_phase(
    delta_prev: float, delta_next: float, t_switch: float, n_sites: int
) -> np.ndarray:
    """Diagonal of the unitary connecting rotating frames at a pulse boundary.

    Entry exp(i (delta_next - delta_prev) t m) on basis states with total
    excitation number m.  Commutes with every n_j, so populations are
    unchanged by its application.
    """
    if t_switch < 0:
        raise InvalidSchedule(f"switch time must be non-negative, got {t_switch}")
    m = excitation_numbers(n_sites)
    return np.exp(1j * (delta_next - delta_prev) * t_switch * m)


def plan_route(
    geometry: ChainGeometry, start_site: int, waypoints: Sequence[int]
) -> PulseSchedule:
    """Pulse schedule visiting the waypoints by unit hops from the start site.

    Each hop emits the token of the gap being crossed; a direction reversal
    therefore produces two consecutive identical tokens.
    """
    n = geometry.n_sites
    if not 1 <= start_site <= n:
        raise UnreachableWaypoint(f"start site {start_site} outside chain of {n} sites")
    tokens: list[PulseToken] = []
    current = start_site
    for w in waypoints:
        if not 1 <= w <= n:
            raise UnreachableWaypoint(f"waypoint {w} outside chain of {n} sites")
        if w == current:
            raise UnreachableWaypoint(f"waypoint {w} repeats the current site")
        step = 1 if w > current else -1
        while current != w:
            gap_site = current if step == 1 else current - 1
            tokens.append(PulseToken(geometry.gap_index(gap_site)))
            current += step
    if not tokens:
        raise UnreachableWaypoint("route contains no hops")
    return PulseSchedule(tuple(tokens))


@dataclass(frozen=True)
class HierarchyDiagnostics:
    """Dimensionless ratios diagnosing the facilitation energy hierarchy."""

    omega_over_v2: float
    omega_over_v_gap: float
    nnn_to_nn_ratio: float
    nnn_ratio_bound: float
    warn: bool

    def to_dict(self) -> dict:
        return {
            "omega_over_v2": self.omega_over_v2,
            "omega_over_v_gap": self.omega_over_v_gap,
            "nnn_to_nn_ratio": self.nnn_to_nn_ratio,
            "nnn_ratio_bound": self.nnn_ratio_bound,
            "warn": self.warn,
        }


#: heuristic threshold on Omega/|V_2| above which transport quality degrades
HIERARCHY_WARN_THRESHOLD = 0.25


def hierarchy_diagnostics(
    params: ModelParams, geometry: ChainGeometry
) -> HierarchyDiagnostics:
    """Energy-hierarchy ratios; diagnostic only, never blocks a run."""
    c6 = params.c6_value(geometry.r1)
    v_nnn = c6 / (geometry.r1 + geometry.r2) ** 6
    omega_over_v2 = params.omega / abs(params.v2)
    return HierarchyDiagnostics(
        omega_over_v2=omega_over_v2,
        omega_over_v_gap=params.omega / abs(params.v1 - params.v2),
        nnn_to_nn_ratio=abs(v_nnn / params.v2),
        nnn_ratio_bound=abs(params.v1 / (64.0 * params.v2)),
        warn=omega_over_v2 > HIERARCHY_WARN_THRESHOLD,
    )


@dataclass(frozen=True)
class PhysicalUnits:
    """Adapter between internal units (Omega = 1, r1 = 1) and lab units.

    ``omega_2pi_mhz`` is the drive frequency Omega/(2 pi) in MHz, distances
    are in micrometres and ``c6_2pi_mhz_um6`` is the van der Waals
    coefficient in 2 pi MHz um^6.  With frequencies as 2 pi MHz, internal
    times convert directly to microseconds.
    """

    omega_2pi_mhz: float
    r1_um: float
    r2_um: Optional[float] = None
    c6_2pi_mhz_um6: Optional[float] = None

    def __post_init__(self):
        if self.omega_2pi_mhz <= 0 or self.r1_um <= 0:
            raise InvalidParams("physical Omega and r1 must be positive")
        if self.r2_um is not None and self.r2_um <= self.r1_um:
            raise InvalidParams("physical r2 must exceed r1")

    def time_us(self, t_internal: float) -> float:
        """Internal time (units of 1/Omega) in microseconds."""
        return t_internal / (2.0 * math.pi * self.omega_2pi_mhz)

    def length_um(self, length_internal: float) -> float:
        """Internal length (units of r1) in micrometres."""
        return length_internal * self.r1_um

    def sigma_internal(self, sigma_nm: Sequence[float]) -> tuple[float, float, float]:
        """Position spreads in nanometres to internal (r1) units."""
        return tuple(s * 1e-3 / self.r1_um for s in sigma_nm)

    def couplings(self) -> tuple[float, float]:
        """(v1, v2) implied by c6 and the gap lengths, in units of Omega."""
        if self.c6_2pi_mhz_um6 is None or self.r2_um is None:
            raise InvalidParams("couplings require c6 and r2")
        v1 = self.c6_2pi_mhz_um6 / self.r1_um**6 / self.omega_2pi_mhz
        v2 = self.c6_2pi_mhz_um6 / self.r2_um**6 / self.omega_2pi_mhz
        return v1, v2
