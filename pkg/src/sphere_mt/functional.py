"""Functionals, gradients, and residual identities on the sphere.

Covers the Onofri functional J, the improved functional I (Dirichlet
coefficient 1/2), its shift-invariant form, the Aubin family I_alpha,
the perturbed family I_eps with leading factor 1/(2(1-eps)), the
Euler-Lagrange residual of

    -Lap u = 8 pi (1-eps) (exp(2u)/mass - 1/(4 pi)),

the Kazdan-Warner moment identity, and the closed-form/numeric pieces
of the two-point concentration energy expansion.

All exponentials are evaluated pointwise on the grid; overflow is a
first-class blow-up signal (RangeOverflowError), never a crash.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import harmonics
from .conformal import bubble_mass
from .errors import InvariantViolation, RangeOverflowError
from .grid import FOUR_PI, ScalarField, average, integrate_values

#: exp argument ceiling; doubles overflow near 709.78
EXP_LIMIT = 700.0

#: energy lower bound under two-point concentration, 1 - ln 2
OBSTRUCTION_CONSTANT = 1.0 - np.log(2.0)


def _exp2u_values(u: ScalarField) -> np.ndarray:
    two_u = 2.0 * u.values
    peak = float(two_u.max())
    if peak > EXP_LIMIT:
        j = int(np.argmax(u.values))
        jt, jp = np.unravel_index(j, u.values.shape)
        raise RangeOverflowError(
            f"exp(2u) overflows: max u = {u.values.max():.6g} at node "
            f"(theta={u.grid.theta[jt]:.6f}, phi={u.grid.phi[jp]:.6f})",
            max_value=u.values.max(), node=(int(jt), int(jp)))
    return np.exp(two_u)


def _laplacian_values(u: ScalarField, L: int | None = None) -> np.ndarray:
    if L is None:
        L = harmonics.max_degree(u.grid)
    spec = harmonics.analyze(u, L)
    return harmonics.synthesize(harmonics.laplacian(spec), u.grid).values


@dataclass(frozen=True)
class FunctionalReport:
    """Every scalar diagnostic of a field in one place.

    onofri_J    = avg_grad_sq + 2 avg_u - log_avg_exp        (>= 0)
    improved_I  = avg_grad_sq / 2 - log_avg_exp              (critical
                  Dirichlet coefficient; meaningful on the avg_u = 0 slice)
    shifted_I   = avg_grad_sq / 2 + 2 avg_u - log_avg_exp    (shift invariant)
    i_alpha     = alpha * avg_grad_sq + 2 avg_u - log_avg_exp
    i_eps       = avg_grad_sq / (2 (1-eps)) + 2 avg_u - log_avg_exp
    """

    avg_grad_sq: float
    avg_u: float
    log_avg_exp: float
    mass: float
    moments: np.ndarray = field(repr=False)
    normalized_moments: np.ndarray = field(repr=False)
    onofri_J: float = 0.0
    improved_I: float = 0.0
    shifted_I: float = 0.0
    alpha: float | None = None
    i_alpha: float | None = None
    eps: float | None = None
    i_eps: float | None = None


def evaluate(u: ScalarField, alpha: float | None = None,
             eps: float | None = None, L: int | None = None) -> FunctionalReport:
    """Populate a FunctionalReport for the field u.

    The Dirichlet term is computed spectrally at degree L (defaults to
    the grid's anti-aliasing bound); exp(2u) terms are pointwise.
    """
    e2u = _exp2u_values(u)
    grid = u.grid
    mass = integrate_values(grid, e2u)
    moments = np.array([integrate_values(grid, e2u * grid.xyz[:, :, i])
                        for i in range(3)])
    spec = harmonics.analyze(u, harmonics.max_degree(grid) if L is None else L)
    avg_grad_sq = harmonics.dirichlet_energy(spec) / FOUR_PI
    avg_u = average(u)
    log_avg_exp = float(np.log(mass / FOUR_PI))

    report = FunctionalReport(
        avg_grad_sq=avg_grad_sq,
        avg_u=avg_u,
        log_avg_exp=log_avg_exp,
        mass=mass,
        moments=moments,
        normalized_moments=moments / mass,
        onofri_J=avg_grad_sq + 2.0 * avg_u - log_avg_exp,
        improved_I=0.5 * avg_grad_sq - log_avg_exp,
        shifted_I=0.5 * avg_grad_sq + 2.0 * avg_u - log_avg_exp,
        alpha=alpha,
        i_alpha=(None if alpha is None
                 else alpha * avg_grad_sq + 2.0 * avg_u - log_avg_exp),
        eps=eps,
        i_eps=(None if eps is None
               else avg_grad_sq / (2.0 * (1.0 - eps)) + 2.0 * avg_u - log_avg_exp),
    )
    return report


def l2_gradient(u: ScalarField, eps: float, L: int | None = None) -> ScalarField:
    """L^2 gradient of the shift-invariant perturbed functional:

        g = -Lap u / (4 pi (1-eps)) + 1/(2 pi) - 2 exp(2u)/mass.

    Vanishes exactly on solutions of the Euler-Lagrange equation; its
    integral is zero for every u (the two constant terms balance).
    """
    e2u = _exp2u_values(u)
    mass = integrate_values(u.grid, e2u)
    lap = _laplacian_values(u, L)
    g = (-lap / (FOUR_PI * (1.0 - eps))
         + 1.0 / (2.0 * np.pi)
         - 2.0 * e2u / mass)
    return ScalarField(u.grid, g)


@dataclass(frozen=True)
class ResidualReport:
    """Euler-Lagrange residual field/norm plus Kazdan-Warner defects."""

    el_residual_field: ScalarField = field(repr=False)
    el_residual_norm: float = 0.0
    kw_residual: np.ndarray = field(default=None, repr=False)


def el_residual(u: ScalarField, eps: float, normalization: str = "u",
                L: int | None = None) -> ResidualReport:
    """Residual of the Euler-Lagrange equation.

    normalization "u": r = -Lap u - 8 pi (1-eps)(exp(2u)/mass - 1/(4 pi)).
    normalization "v": the input is the mass-normalized field v = 2u - ln mass
    and r = -Lap v - 16 pi (1-eps)(exp(v) - 1/(4 pi)).

    Both sides of the equation integrate to zero; that is asserted on
    every evaluation (for "v" only when exp(v) has unit mass, since the
    identity presumes the normalization).
    """
    grid = u.grid
    if normalization == "u":
        e2u = _exp2u_values(u)
        mass = integrate_values(grid, e2u)
        r = (-_laplacian_values(u, L)
             - 8.0 * np.pi * (1.0 - eps) * (e2u / mass - 1.0 / FOUR_PI))
        check_zero_integral = True
        v_field = ScalarField(grid, 2.0 * u.values - np.log(mass))
    elif normalization == "v":
        ev = _exp2u_values(ScalarField(grid, 0.5 * u.values))
        r = (-_laplacian_values(u, L)
             - 16.0 * np.pi * (1.0 - eps) * (ev - 1.0 / FOUR_PI))
        check_zero_integral = abs(integrate_values(grid, ev) - 1.0) < 1e-9
        v_field = u
    else:
        raise ValueError(f"unknown normalization {normalization!r}")

    norm = float(np.sqrt(integrate_values(grid, r * r)))
    if check_zero_integral:
        total = integrate_values(grid, r)
        if abs(total) > 1e-9 * max(1.0, norm):
            raise InvariantViolation(
                f"EL residual integral {total:.3e} is not zero")
    kw = kazdan_warner_residual(
        v_field,
        h=ScalarField(grid, np.full_like(u.values, 16.0 * np.pi * (1.0 - eps))),
        c=4.0 * (1.0 - eps))
    return ResidualReport(el_residual_field=ScalarField(grid, r),
                          el_residual_norm=norm, kw_residual=kw)


def kazdan_warner_residual(v: ScalarField, h: ScalarField, c: float) -> np.ndarray:
    """Kazdan-Warner defects of Lap v + h exp(v) = c:

        r_i = avg(exp(v) grad h . grad x_i) - (2 - c) avg(exp(v) h x_i).

    grad h . grad x_i is computed from scalar Laplacians only:
    (1/2)[Lap(h x_i) - x_i Lap h + 2 h x_i], using Lap x_i = -2 x_i.
    """
    grid = v.grid
    ev = _exp2u_values(ScalarField(grid, 0.5 * v.values))
    L = harmonics.max_degree(grid)
    lap_h = _laplacian_values(h, L)
    out = np.empty(3)
    for i in range(3):
        xi = grid.xyz[:, :, i]
        lap_hx = _laplacian_values(ScalarField(grid, h.values * xi), L)
        grad_dot = 0.5 * (lap_hx - xi * lap_h + 2.0 * h.values * xi)
        lhs = integrate_values(grid, ev * grad_dot) / FOUR_PI
        rhs = integrate_values(grid, ev * h.values * xi) / FOUR_PI
        out[i] = lhs - (2.0 - c) * rhs
    return out


@dataclass(frozen=True)
class ExpansionReport:
    """Closed-form and numeric pieces of the concentration energy expansion.

    I1_closed     exact antiderivative of the bubble-core Dirichlet energy:
                  16 pi (ln(1 + 2 pi R^2) + 1/(1 + 2 pi R^2) - 1)
    I1_numeric    radial quadrature of the same integral
    I1_truncated  the leading form 16 pi (ln(1 + 2 pi R^2) - 1)
    truncation_gap  I1_closed - I1_truncated = 16 pi / (1 + 2 pi R^2)
    D_value       -lambda + 2 ln(R^2/(1 + 2 pi R^2)) + 4 (1 - ln 2)
    lambda_peak   peak height of the mass-normalized two-bubble field,
                  2 ln t - ln(8 pi)  (the bridge between the dilation
                  parameter and the planar rescaling)
    obstruction   1 - ln 2
    """

    t: float
    R: float
    lambda_peak: float
    I1_closed: float
    I1_numeric: float
    I1_truncated: float
    truncation_gap: float
    D_value: float
    core_mass: float
    obstruction: float


def energy_expansion_report(t: float, R: float) -> ExpansionReport:
    """Evaluate the energy-expansion diagnostics for dilation t, radius R."""
    if R <= 0.0:
        raise ValueError("radius R must be positive")
    if t < 1.0:
        raise ValueError("dilation t must be >= 1")

    q = 1.0 + 2.0 * np.pi * R * R
    I1_closed = 16.0 * np.pi * (np.log(q) + 1.0 / q - 1.0)
    I1_truncated = 16.0 * np.pi * (np.log(q) - 1.0)

    def integrand(r):
        dphi = -8.0 * np.pi * r / (1.0 + 2.0 * np.pi * r * r)
        return 2.0 * np.pi * r * dphi * dphi

    I1_numeric, _ = quad(integrand, 0.0, R, epsabs=1e-12, epsrel=1e-12, limit=200)

    lambda_peak = 2.0 * np.log(t) - np.log(8.0 * np.pi)
    D_value = (-lambda_peak + 2.0 * np.log(R * R / q)
               + 4.0 * (1.0 - np.log(2.0)))
    return ExpansionReport(
        t=float(t), R=float(R), lambda_peak=lambda_peak,
        I1_closed=I1_closed, I1_numeric=I1_numeric,
        I1_truncated=I1_truncated, truncation_gap=I1_closed - I1_truncated,
        D_value=D_value, core_mass=bubble_mass(R),
        obstruction=OBSTRUCTION_CONSTANT)
