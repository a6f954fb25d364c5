"""Compiled kernels for the master-equation integrator.

The Lindblad right-hand side for this model splits into

* an elementwise part: commutator with the diagonal Hamiltonian terms,
  the decay anticommutator and the dephasing damping, all absorbed into
  one precomputed coefficient matrix ``coef``;
* the transverse drive, a sum of single-bit-flip row and column gathers;
* the decay jump term, a gather from the lifted-bit quadrant per site.

Everything runs in single fused passes over the 2^N x 2^N density matrix,
which keeps the per-step cost memory-bound instead of BLAS-bound.
"""
from __future__ import annotations

import numba
import numpy as np

# Dormand-Prince 5(4) tableau (the ode45 pair).  The first-same-as-last
# stage k7 equals f(y1) and is reused as k1 of the accepted next step.
DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
DP_A21 = 1 / 5
DP_A3 = (3 / 40, 9 / 40)
DP_A4 = (44 / 45, -56 / 15, 32 / 9)
DP_A5 = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
DP_A6 = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
DP_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
# embedded error weights: y5 - y4 uses stages (1, 3, 4, 5, 6, 7)
DP_E = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

ERROR_ORDER = 5  # exponent for step-size adaptation


@numba.njit(cache=True)
def lindblad_rhs(rho, out, coef, n_sites, drive_half, gamma_decay):
    """out <- L(rho) for the structured Hamiltonian plus dissipators.

    ``coef[a, b]`` must hold -i (d_a - d_b) - (G/2)(m_a + m_b) - g * D_ab
    where d is the Hamiltonian diagonal, m the excitation numbers and D
    the site-wise Hamming distance between basis states.
    """
    dim = rho.shape[0]
    for a in range(dim):
        for b in range(dim):
            out[a, b] = coef[a, b] * rho[a, b]
    c = -1j * drive_half
    for j in range(n_sites):
        f = 1 << (n_sites - 1 - j)
        for a in range(dim):
            af = a ^ f
            for b in range(dim):
                out[a, b] += c * (rho[af, b] - rho[a, b ^ f])
    if gamma_decay > 0.0:
        for j in range(n_sites):
            f = 1 << (n_sites - 1 - j)
            for a in range(dim):
                if a & f == 0:
                    for b in range(dim):
                        if b & f == 0:
                            out[a, b] += gamma_decay * rho[a | f, b | f]


@numba.njit(cache=True)
def lincomb1(out, y, h, c1, k1):
    dim = y.shape[0]
    for a in range(dim):
        for b in range(dim):
            out[a, b] = y[a, b] + h * c1 * k1[a, b]


@numba.njit(cache=True)
def lincomb(out, y, h, coeffs, ks):
    dim = y.shape[0]
    n = len(coeffs)
    for a in range(dim):
        for b in range(dim):
            acc = y[a, b]
            for i in range(n):
                acc += h * coeffs[i] * ks[i][a, b]
            out[a, b] = acc


@numba.njit(cache=True)
def error_norm(ks, coeffs, h, y0, y1, tol):
    """Scaled RMS of the embedded error estimate; a step passes when <= 1."""
    dim = y0.shape[0]
    n = len(coeffs)
    acc = 0.0
    for a in range(dim):
        for b in range(dim):
            e = 0.0j
            for i in range(n):
                e += coeffs[i] * ks[i][a, b]
            e *= h
            scale = tol * (1.0 + max(abs(y0[a, b]), abs(y1[a, b])))
            acc += (e.real / scale) ** 2 + (e.imag / scale) ** 2
    return np.sqrt(acc / (dim * dim))
