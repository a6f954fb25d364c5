"""Occupation-basis bookkeeping for a chain of two-level atoms.

Conventions used throughout the package:

* Sites are numbered 1..N from the left end of the chain.
* A basis state is an occupation string read left to right, e.g. ``"100"``
  is site 1 excited on a three-site chain.
* Site 1 is the most significant bit of the integer basis index, so
  ``"100"`` has index 4.  Printed kets therefore read in physical order.

States are dense: amplitude vectors of length 2^N for pure states and
2^N x 2^N matrices for density matrices.  All containers are immutable
after construction and every operation here is a pure function, so they
are safe to share across concurrent workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidSites,
    InvalidState,
    NonHermitianInput,
    ZeroVector,
)

Pattern = Union[str, Sequence[int]]

NORM_TOL = 1e-10
HERM_TOL = 1e-10
TRACE_TOL = 1e-8
EIG_TOL = 1e-8

_occupation_cache: dict[int, np.ndarray] = {}


def as_bits(pattern: Pattern) -> tuple[int, ...]:
    """Normalize an occupation pattern ("0101" or [0,1,0,1]) to a bit tuple."""
    if isinstance(pattern, str):
        bits = tuple(int(c) for c in pattern)
    else:
        bits = tuple(int(b) for b in pattern)
    if len(bits) < 1:
        raise InvalidState("occupation pattern must have at least one site")
    if any(b not in (0, 1) for b in bits):
        raise InvalidState(f"occupation pattern entries must be 0 or 1, got {pattern!r}")
    return bits


def basis_index(pattern: Pattern) -> int:
    """Integer index of an occupation pattern, site 1 as the most significant bit."""
    index = 0
    for b in as_bits(pattern):
        index = (index << 1) | b
    return index


def pattern_of(index: int, n_sites: int) -> str:
    """Inverse of :func:`basis_index`: the occupation string of a basis index."""
    if not 0 <= index < (1 << n_sites):
        raise IndexError(f"basis index {index} out of range for {n_sites} sites")
    return format(index, f"0{n_sites}b")


def occupation_table(n_sites: int) -> np.ndarray:
    """(2^N, N) array: entry [n, j] is the occupation of site j+1 in basis state n.

    Cached per N; the returned array is shared and must not be mutated.
    """
    table = _occupation_cache.get(n_sites)
    if table is None:
        n = np.arange(1 << n_sites)
        table = np.array(
            [(n >> (n_sites - 1 - j)) & 1 for j in range(n_sites)], dtype=np.uint8
        ).T
        table.setflags(write=False)
        _occupation_cache[n_sites] = table
    return table


def excitation_numbers(n_sites: int) -> np.ndarray:
    """Total excitation number of each basis state, as a float vector."""
    return occupation_table(n_sites).sum(axis=1).astype(float)


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over the occupation basis."""

    amplitudes: np.ndarray
    n_sites: int

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_sites,):
            raise DimensionMismatch(
                f"amplitude vector of shape {amps.shape} does not match "
                f"{self.n_sites} sites"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidState(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_sites


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix over the occupation basis.

    ``eig_tolerance`` sets how far below zero the smallest eigenvalue may
    sit.  Constructed inputs use the strict default; integrator outputs
    carry a bound scaled to the integration tolerance, since truncation
    error pushes exact zero eigenvalues slightly negative.
    """

    matrix: np.ndarray
    n_sites: int
    eig_tolerance: float = field(default=EIG_TOL, repr=False, compare=False)

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=complex)
        dim = 1 << self.n_sites
        if mat.shape != (dim, dim):
            raise DimensionMismatch(
                f"matrix of shape {mat.shape} does not match {self.n_sites} sites"
            )
        herm = np.abs(mat - mat.conj().T).max()
        if herm > HERM_TOL:
            raise InvalidState(f"density matrix Hermiticity violation {herm:.3e}")
        tr = mat.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(f"density matrix trace {tr!r} deviates from 1")
        w_min = np.linalg.eigvalsh(mat).min()
        if w_min < -self.eig_tolerance:
            raise InvalidState(f"density matrix minimum eigenvalue {w_min:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityMatrix":
        amps = state.amplitudes
        return cls(np.outer(amps, amps.conj()), state.n_sites)

    @property
    def dim(self) -> int:
        return 1 << self.n_sites


@dataclass(frozen=True)
class ReducedTwoAtomState:
    """Two-atom density matrix kept from a larger chain.

    Basis order is |00>, |01>, |10>, |11> with the lower-numbered site in
    the left slot.
    """

    matrix: np.ndarray
    sites: tuple[int, int]
    eig_tolerance: float = field(default=EIG_TOL, repr=False, compare=False)

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=complex)
        if mat.shape != (4, 4):
            raise DimensionMismatch(f"reduced state must be 4x4, got {mat.shape}")
        a, b = self.sites
        if not a < b:
            raise InvalidSites(f"site pair {self.sites} must be ordered a < b")
        herm = np.abs(mat - mat.conj().T).max()
        if herm > HERM_TOL:
            raise InvalidState(f"reduced state Hermiticity violation {herm:.3e}")
        tr = mat.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(f"reduced state trace {tr!r} deviates from 1")
        w_min = np.linalg.eigvalsh(mat).min()
        if w_min < -self.eig_tolerance:
            raise InvalidState(f"reduced state minimum eigenvalue {w_min:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "sites", (int(a), int(b)))


State = Union[PureState, DensityMatrix]


def make_pure(patterns: Iterable[Pattern], amplitudes: Iterable[complex]) -> PureState:
    """Pure state with the given amplitudes on the given occupation patterns.

    The result is normalized.  Patterns must be distinct and of equal length.
    """
    bit_lists = [as_bits(p) for p in patterns]
    amps = [complex(a) for a in amplitudes]
    if len(bit_lists) != len(amps):
        raise DimensionMismatch(
            f"{len(bit_lists)} patterns but {len(amps)} amplitudes"
        )
    if not bit_lists:
        raise ZeroVector("no patterns given")
    n_sites = len(bit_lists[0])
    if any(len(b) != n_sites for b in bit_lists):
        raise DimensionMismatch("patterns have unequal lengths")
    indices = [basis_index(b) for b in bit_lists]
    if len(set(indices)) != len(indices):
        raise InvalidSites("patterns must be distinct")
    vec = np.zeros(1 << n_sites, dtype=complex)
    for idx, a in zip(indices, amps):
        vec[idx] = a
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ZeroVector("amplitude list is identically zero")
    return PureState(vec / norm, n_sites)


def basis_state(pattern: Pattern) -> PureState:
    """The basis ket for a single occupation pattern."""
    return make_pure([pattern], [1.0])


def bell_psi_plus() -> PureState:
    """The symmetric single-excitation pair (|01> + |10>)/sqrt(2) on two sites."""
    return make_pure(["01", "10"], [1.0, 1.0])


def partial_trace(
    state: State, keep: tuple[int, int], eig_tolerance: float = EIG_TOL
) -> ReducedTwoAtomState:
    """Trace out all sites except the ordered pair ``keep`` (1-based, a < b)."""
    a, b = keep
    n = state.n_sites
    if not (1 <= a < b <= n):
        raise InvalidSites(f"keep pair {keep} invalid for {n} sites")
    rest = [j for j in range(n) if j not in (a - 1, b - 1)]
    if isinstance(state, PureState):
        tensor = state.amplitudes.reshape((2,) * n)
        tensor = np.transpose(tensor, axes=[a - 1, b - 1] + rest)
        mat = tensor.reshape(4, -1)
        red = mat @ mat.conj().T
    else:
        tensor = state.matrix.reshape((2,) * (2 * n))
        row_axes = [a - 1, b - 1] + rest
        col_axes = [n + ax for ax in row_axes]
        tensor = np.transpose(tensor, axes=row_axes + col_axes)
        red = np.einsum("arbr->ab", tensor.reshape(4, 1 << (n - 2), 4, 1 << (n - 2)))
        eig_tolerance = max(eig_tolerance, state.eig_tolerance)
    red = (red + red.conj().T) / 2  # remove roundoff asymmetry, not drift
    return ReducedTwoAtomState(red, (a, b), eig_tolerance=eig_tolerance)


def state_fidelity(reduced: ReducedTwoAtomState, target: PureState) -> float:
    """Overlap <target|rho|target> of a reduced two-atom state with a pure target."""
    if target.n_sites != 2:
        raise DimensionMismatch("target must be a two-atom pure state")
    rho = reduced.matrix
    herm = np.abs(rho - rho.conj().T).max()
    if herm > HERM_TOL:
        raise NonHermitianInput(f"reduced state Hermiticity violation {herm:.3e}")
    val = target.amplitudes.conj() @ rho @ target.amplitudes
    if abs(val.imag) > 1e-10:
        raise NonHermitianInput(f"fidelity has imaginary part {val.imag:.3e}")
    return float(val.real)


def site_populations(state: State) -> np.ndarray:
    """Expectation of the occupation of each site, as a length-N vector."""
    occ = occupation_table(state.n_sites)
    if isinstance(state, PureState):
        weights = np.abs(state.amplitudes) ** 2
    else:
        weights = np.real(np.diag(state.matrix))
    return occ.T.astype(float) @ weights


def trace_distance(a: State, b: State) -> float:
    """Trace distance (1/2)||a - b||_1 between two states of equal dimension."""
    ma = a.matrix if isinstance(a, DensityMatrix) else DensityMatrix.from_pure(a).matrix
    mb = b.matrix if isinstance(b, DensityMatrix) else DensityMatrix.from_pure(b).matrix
    if ma.shape != mb.shape:
        raise DimensionMismatch("states act on different Hilbert spaces")
    diff = ma - mb
    w = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return 0.5 * float(np.abs(w).sum())
