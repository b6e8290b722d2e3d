"""Real spherical-harmonic analysis and synthesis.

Basis convention: orthonormal real harmonics

    Y_{l,0}  = p_{l,0}(cos theta)
    Y_{l,m}  = sqrt(2) * p_{l,m}(cos theta) * cos(m phi)   (m > 0)
    Y_{l,-m} = sqrt(2) * p_{l,m}(cos theta) * sin(m phi)   (m > 0)

where p_{l,m} are the fully normalized associated Legendre functions
(no Condon-Shortley phase), so that integrate(Y_a * Y_b) = delta_ab.
The p_{l,m} are built with the standard stable normalized three-term
recurrence, accurate well beyond degree 128.

Longitude sums use a real FFT for analysis and direct trig-table
summation for synthesis; the contract is the result, not the algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import ResolutionError
from .grid import ScalarField, SphericalGrid

SQRT2 = np.sqrt(2.0)


def max_degree(grid: SphericalGrid) -> int:
    """Largest degree L the grid analyzes without aliasing.

    Products Y_lm * Y_l'm' up to degree 2L must be integrated exactly:
    Gauss-Legendre handles cos-theta degree 2*n_theta - 1 and the
    uniform longitude rule frequency n_phi - 1, with one extra degree
    of margin.
    """
    return (min(2 * grid.n_theta - 1, grid.n_phi - 1) - 2) // 2


def degrees(L: int) -> np.ndarray:
    """Degree l of each flat coefficient index (length (L+1)^2)."""
    out = np.empty((L + 1) ** 2, dtype=int)
    for l in range(L + 1):
        out[l * l: (l + 1) ** 2] = l
    return out


def flat_index(l: int, m: int) -> int:
    """Position of coefficient (l, m) in the flat layout l*l + l + m."""
    return l * l + l + m


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Real spherical-harmonic coefficients up to degree L.

    coeff is flat with layout l*l + l + m, length (L+1)^2.
    """

    L: int
    coeff: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeff, dtype=float)
        n = (self.L + 1) ** 2
        if c.shape != (n,):
            raise ValueError(f"expected {n} coefficients for L={self.L}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite spectral coefficient")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeff", c)

    def __getitem__(self, lm) -> float:
        l, m = lm
        return float(self.coeff[flat_index(l, m)])


@lru_cache(maxsize=16)
def _legendre_tables(n_theta: int, L: int):
    """Normalized associated Legendre values p_{l,m}(x_j) at GL nodes.

    Returns a list indexed by m; entry m has shape (L + 1 - m, n_theta)
    with rows l = m..L.  Cached per (n_theta, L) since GL nodes are a
    deterministic function of n_theta.
    """
    x, _ = roots_legendre(n_theta)
    x = x[np.argsort(-x)]
    s = np.sqrt(1.0 - x * x)
    tables = []
    pmm = np.full(n_theta, 1.0 / np.sqrt(4.0 * np.pi))
    for m in range(L + 1):
        rows = np.empty((L + 1 - m, n_theta))
        rows[0] = pmm
        if m + 1 <= L:
            rows[1] = np.sqrt(2.0 * m + 3.0) * x * pmm
        for l in range(m + 2, L + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((2.0 * l + 1.0) * (l - 1.0 - m) * (l - 1.0 + m))
                        / ((2.0 * l - 3.0) * (l * l - m * m)))
            rows[l - m] = a * x * rows[l - 1 - m] - b * rows[l - 2 - m]
        rows.setflags(write=False)
        tables.append(rows)
        if m < L:
            pmm = np.sqrt((2.0 * m + 3.0) / (2.0 * m + 2.0)) * s * pmm
    return tables


@lru_cache(maxsize=16)
def _trig_tables(n_phi: int, L: int):
    """cos(m phi_k) and sin(m phi_k) tables of shape (L+1, n_phi)."""
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    m = np.arange(L + 1)[:, None]
    cos_t = np.cos(m * phi[None, :])
    sin_t = np.sin(m * phi[None, :])
    cos_t.setflags(write=False)
    sin_t.setflags(write=False)
    return cos_t, sin_t


def _check_degree(grid: SphericalGrid, L: int):
    limit = max_degree(grid)
    if L > limit:
        raise ResolutionError(
            f"degree L={L} exceeds anti-aliasing bound {limit} "
            f"for grid ({grid.n_theta}, {grid.n_phi})")
    if L < 0:
        raise ValueError("degree must be non-negative")


def analyze(f: ScalarField, L: int) -> HarmonicSpectrum:
    """Project a field onto harmonics up to degree L: c_lm = integrate(f*Y_lm)."""
    grid = f.grid
    _check_degree(grid, L)
    # theta-weight only: the 2*pi/n_phi factor lives in the phi sums below.
    w_theta = grid.weight * (grid.n_phi / (2.0 * np.pi))
    dphi = 2.0 * np.pi / grid.n_phi

    F = np.fft.rfft(f.values, axis=1)
    n_m = min(L, grid.n_phi // 2)
    cos_part = F[:, : n_m + 1].real * dphi          # sum_k f cos(m phi_k) dphi
    sin_part = -F[:, : n_m + 1].imag * dphi         # sum_k f sin(m phi_k) dphi

    tables = _legendre_tables(grid.n_theta, L)
    coeff = np.zeros((L + 1) ** 2)
    c0 = tables[0] @ (w_theta * cos_part[:, 0])
    for l in range(L + 1):
        coeff[flat_index(l, 0)] = c0[l]
    for m in range(1, L + 1):
        pc = tables[m] @ (w_theta * cos_part[:, m]) * SQRT2
        ps = tables[m] @ (w_theta * sin_part[:, m]) * SQRT2
        for l in range(m, L + 1):
            coeff[flat_index(l, m)] = pc[l - m]
            coeff[flat_index(l, -m)] = ps[l - m]
    return HarmonicSpectrum(L=L, coeff=coeff)


def synthesize(s: HarmonicSpectrum, grid: SphericalGrid) -> ScalarField:
    """Evaluate sum_lm c_lm Y_lm at every grid node."""
    _check_degree(grid, s.L)
    L = s.L
    tables = _legendre_tables(grid.n_theta, L)
    cos_t, sin_t = _trig_tables(grid.n_phi, L)

    c0 = np.array([s.coeff[flat_index(l, 0)] for l in range(L + 1)])
    values = np.repeat((c0 @ tables[0])[:, None], grid.n_phi, axis=1)
    for m in range(1, L + 1):
        cc = np.array([s.coeff[flat_index(l, m)] for l in range(m, L + 1)])
        cs = np.array([s.coeff[flat_index(l, -m)] for l in range(m, L + 1)])
        gc = cc @ tables[m]
        gs = cs @ tables[m]
        values += SQRT2 * (gc[:, None] * cos_t[m][None, :]
                           + gs[:, None] * sin_t[m][None, :])
    return ScalarField(grid, values)


def evaluate_at_points(s: HarmonicSpectrum, theta: np.ndarray,
                       phi: np.ndarray) -> np.ndarray:
    """Evaluate the spectral sum at arbitrary points (exact resampling).

    The Legendre recurrence runs per point; memory stays O(n_points) by
    accumulating over (l, m) without materializing the full table.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    phi = np.asarray(phi, dtype=float).ravel()
    x = np.cos(theta)
    sfac = np.sin(theta)
    L = s.L
    out = np.zeros_like(x)
    pmm = np.full_like(x, 1.0 / np.sqrt(4.0 * np.pi))
    for m in range(L + 1):
        acc_c = np.zeros_like(x)
        acc_s = np.zeros_like(x)
        p_prev = pmm
        cc = s.coeff[flat_index(m, m)]
        acc_c += cc * p_prev
        if m > 0:
            acc_s += s.coeff[flat_index(m, -m)] * p_prev
        if m + 1 <= L:
            p_cur = np.sqrt(2.0 * m + 3.0) * x * pmm
            acc_c += s.coeff[flat_index(m + 1, m)] * p_cur
            if m > 0:
                acc_s += s.coeff[flat_index(m + 1, -m)] * p_cur
            for l in range(m + 2, L + 1):
                a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = np.sqrt(((2.0 * l + 1.0) * (l - 1.0 - m) * (l - 1.0 + m))
                            / ((2.0 * l - 3.0) * (l * l - m * m)))
                p_prev, p_cur = p_cur, a * x * p_cur - b * p_prev
                acc_c += s.coeff[flat_index(l, m)] * p_cur
                if m > 0:
                    acc_s += s.coeff[flat_index(l, -m)] * p_cur
        if m == 0:
            out += acc_c
        else:
            out += SQRT2 * (acc_c * np.cos(m * phi) + acc_s * np.sin(m * phi))
        if m < L:
            pmm = np.sqrt((2.0 * m + 3.0) / (2.0 * m + 2.0)) * sfac * pmm
    return out


def laplacian(s: HarmonicSpectrum) -> HarmonicSpectrum:
    """Spectral Laplace-Beltrami operator: multiply c_lm by -l(l+1)."""
    l = degrees(s.L)
    return HarmonicSpectrum(L=s.L, coeff=-l * (l + 1.0) * s.coeff)


def dirichlet_energy(s: HarmonicSpectrum) -> float:
    """integral |grad u|^2 = sum l(l+1) c_lm^2 (Parseval)."""
    l = degrees(s.L)
    return float(np.sum(l * (l + 1.0) * s.coeff ** 2))


def sobolev_precondition(s: HarmonicSpectrum) -> HarmonicSpectrum:
    """Apply (1 - Laplacian)^{-1} spectrally: divide c_lm by 1 + l(l+1)."""
    l = degrees(s.L)
    return HarmonicSpectrum(L=s.L, coeff=s.coeff / (1.0 + l * (l + 1.0)))
