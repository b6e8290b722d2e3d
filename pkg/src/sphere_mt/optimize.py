"""Constrained minimization of the perturbed functional over the
zero-moment class by an augmented-Lagrangian method.

The iterate lives in spectral space (degree <= L) with the constant mode
frozen at zero, which fixes the mean-zero gauge once and removes a flat
direction.  The moment constraints are imposed on the mass-normalized
moments; their multipliers start at zero (the analytic multipliers vanish
for every eps > 0).  Inner iterations descend along the Sobolev-
preconditioned gradient with Armijo backtracking; blow-up is detected
operationally from iterate max and mass thresholds and reported as a
status, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import conformal, harmonics
from .errors import RangeOverflowError, ResolutionError
from .functional import EXP_LIMIT, el_residual
from .grid import FOUR_PI, ScalarField, build_grid, integrate_values

ARMIJO_C1 = 1e-4
ARMIJO_BACKTRACK = 0.5
MAX_BACKTRACKS = 60

STATUS_CONVERGED = "converged"
STATUS_BLOWUP = "blowup_detected"
STATUS_CAP = "iteration_cap"


@dataclass(frozen=True)
class MinimizeConfig:
    """Configuration of one constrained minimization run."""

    eps: float
    L: int = 16
    n_theta: int = 48
    n_phi: int = 96
    tol_grad: float = 1e-8
    tol_constraint: float = 1e-8
    mu0: float = 10.0
    mu_growth: float = 4.0
    max_outer: int = 30
    max_inner: int = 400
    init_kind: str = "zero"  # zero | random | bubble_pair | file
    init_seed: int = 42
    init_scale: float = 0.1
    init_t: float = 2.0
    init_path: str | None = None
    max_u_threshold: float = 30.0
    mass_threshold: float = 1e12

    def __post_init__(self):
        if not (0.0 <= self.eps < 0.5):
            raise ValueError(f"eps={self.eps} outside [0, 1/2)")
        if self.tol_grad <= 0 or self.tol_constraint <= 0:
            raise ValueError("tolerances must be positive")
        if self.mu0 <= 0 or self.mu_growth <= 1:
            raise ValueError("penalty parameters must satisfy mu0 > 0, growth > 1")
        if self.init_kind not in ("zero", "random", "bubble_pair", "file"):
            raise ValueError(f"unknown init kind {self.init_kind!r}")


@dataclass(frozen=True)
class TraceEntry:
    """One outer-iteration snapshot (values may be None after blow-up)."""

    outer: int
    value: float | None
    objective: float | None
    violation: float | None
    grad_norm: float | None
    max_u: float | None
    mass: float | None
    mu: float
    inner_iters: int


@dataclass(frozen=True)
class MinimizeResult:
    """Outcome of a run: gauge-fixed minimizer, diagnostics, trace."""

    u_star: ScalarField = field(repr=False)
    value: float | None
    multipliers: np.ndarray = field(repr=False)
    constraint_violation: float | None
    el_residual_norm: float | None
    kw_residual: np.ndarray = field(default=None, repr=False)
    trace: tuple = ()
    status: str = STATUS_CAP
    eps: float = 0.0
    coeff: np.ndarray = field(default=None, repr=False)


class _Blowup(Exception):
    """Internal signal; converted to a result, never escapes minimize()."""


class _Workspace:
    """Per-run precomputed tables and evaluation helpers."""

    def __init__(self, config: MinimizeConfig):
        self.config = config
        self.grid = build_grid(config.n_theta, config.n_phi)
        limit = harmonics.max_degree(self.grid)
        if config.L > limit:
            raise ResolutionError(
                f"search degree L={config.L} exceeds grid bound {limit}")
        self.L = config.L
        ld = harmonics.degrees(self.L)
        self.ll1 = ld * (ld + 1.0)
        self.precond = 1.0 / (1.0 + self.ll1)
        self.x_fields = [self.grid.xyz[:, :, i] for i in range(3)]

    def synth(self, coeff: np.ndarray) -> np.ndarray:
        spec = harmonics.HarmonicSpectrum(L=self.L, coeff=coeff)
        return harmonics.synthesize(spec, self.grid).values

    def state(self, coeff: np.ndarray) -> dict | None:
        """Evaluate everything at a spectral point; None if exp overflows."""
        u = self.synth(coeff)
        if 2.0 * u.max() > EXP_LIMIT:
            return None
        e2u = np.exp(2.0 * u)
        mass = integrate_values(self.grid, e2u)
        mhat = np.array([integrate_values(self.grid, e2u * x) for x in self.x_fields]) / mass
        ags = float(np.sum(self.ll1 * coeff ** 2)) / FOUR_PI
        log_avg_exp = float(np.log(mass / FOUR_PI))
        return {"u": u, "e2u": e2u, "mass": mass, "mhat": mhat,
                "ags": ags, "log_avg_exp": log_avg_exp,
                "max_u": float(u.max())}

    def objective(self, st: dict, lam: np.ndarray, mu: float) -> float:
        eps = self.config.eps
        shifted = st["ags"] / (2.0 * (1.0 - eps)) - st["log_avg_exp"]
        return shifted + float(lam @ st["mhat"]) + 0.5 * mu * float(st["mhat"] @ st["mhat"])

    def value(self, st: dict) -> float:
        """Shift-invariant critical functional (the reported value)."""
        return 0.5 * st["ags"] - st["log_avg_exp"]

    def gradient(self, coeff: np.ndarray, st: dict, lam: np.ndarray,
                 mu: float) -> np.ndarray:
        """Spectral L^2 gradient of the augmented objective, mode 0 frozen."""
        eps = self.config.eps
        lap = self.synth(-self.ll1 * coeff)
        g = (-lap / (FOUR_PI * (1.0 - eps))
             + 1.0 / (2.0 * np.pi)
             - 2.0 * st["e2u"] / st["mass"])
        for i in range(3):
            weight_i = lam[i] + mu * st["mhat"][i]
            if weight_i != 0.0:
                g = g + weight_i * 2.0 * st["e2u"] * (self.x_fields[i] - st["mhat"][i]) / st["mass"]
        ghat = harmonics.analyze(ScalarField(self.grid, g), self.L).coeff.copy()
        ghat[0] = 0.0
        return ghat

    def check_blowup(self, st: dict):
        if (st["max_u"] > self.config.max_u_threshold
                or st["mass"] > self.config.mass_threshold):
            raise _Blowup


def _initial_coeff(ws: _Workspace, config: MinimizeConfig) -> np.ndarray:
    n = (config.L + 1) ** 2
    if config.init_kind == "zero":
        return np.zeros(n)
    if config.init_kind == "random":
        rng = np.random.default_rng(config.init_seed)
        c = config.init_scale * rng.standard_normal(n)
        c[0] = 0.0
        return c
    if config.init_kind == "bubble_pair":
        pair = conformal.bubble_pair(config.init_t, ws.grid)
        c = harmonics.analyze(pair.field, config.L).coeff.copy()
        c[0] = 0.0  # mean-zero gauge
        return c
    if config.init_kind == "file":
        from .io import read_field
        f = read_field(config.init_path)
        if f.grid != ws.grid:
            raise ValueError(
                f"init field grid ({f.grid.n_theta}, {f.grid.n_phi}) does not "
                f"match run grid ({ws.grid.n_theta}, {ws.grid.n_phi})")
        c = harmonics.analyze(f, config.L).coeff.copy()
        c[0] = 0.0
        return c
    raise ValueError(config.init_kind)


def _blowup_result(ws, coeff, lam, trace) -> MinimizeResult:
    u_vals = ws.synth(coeff)
    u_star = ScalarField(ws.grid, u_vals)
    value = viol = resid = None
    kw = None
    if 2.0 * u_vals.max() <= EXP_LIMIT:
        st = ws.state(coeff)
        if st is not None and st["mass"] < np.inf:
            value = ws.value(st)
            viol = float(np.max(np.abs(st["mhat"])))
            try:
                rep = el_residual(u_star, ws.config.eps)
                resid = rep.el_residual_norm
                kw = rep.kw_residual
            except RangeOverflowError:
                pass
    return MinimizeResult(
        u_star=u_star, value=value, multipliers=lam.copy(),
        constraint_violation=viol, el_residual_norm=resid, kw_residual=kw,
        trace=tuple(trace), status=STATUS_BLOWUP, eps=ws.config.eps,
        coeff=coeff.copy())


def minimize(config: MinimizeConfig,
             initial_coeff: np.ndarray | None = None) -> MinimizeResult:
    """Augmented-Lagrangian descent on the perturbed functional.

    Outer iterations update multipliers lambda_i += mu * mhat_i and grow
    the penalty when the violation fails to shrink by a factor of 4.
    Inner iterations take Armijo steps along the negative Sobolev-
    preconditioned gradient until the preconditioned gradient norm falls
    below tol_grad.  Returns converged / blowup_detected / iteration_cap;
    evaluation overflow becomes blowup_detected.
    """
    ws = _Workspace(config)
    if initial_coeff is not None:
        coeff = np.asarray(initial_coeff, dtype=float).copy()
        if coeff.shape != ((config.L + 1) ** 2,):
            raise ValueError("initial coefficient vector has wrong length")
        coeff[0] = 0.0
    else:
        coeff = _initial_coeff(ws, config)

    lam = np.zeros(3)
    mu = config.mu0
    trace: list[TraceEntry] = []

    st = ws.state(coeff)
    if st is None:
        trace.append(TraceEntry(outer=0, value=None, objective=None,
                                violation=None, grad_norm=None,
                                max_u=float(ws.synth(coeff).max()), mass=None,
                                mu=mu, inner_iters=0))
        return _blowup_result(ws, coeff, lam, trace)

    status = STATUS_CAP
    prev_viol = np.inf
    alpha = 1.0

    try:
        ws.check_blowup(st)
        for outer in range(config.max_outer):
            inner_iters = 0
            ghat = ws.gradient(coeff, st, lam, mu)
            pnorm = float(np.sqrt(np.sum(ghat * ghat * ws.precond)))
            f_cur = ws.objective(st, lam, mu)

            while pnorm > config.tol_grad and inner_iters < config.max_inner:
                direction = -ws.precond * ghat
                slope = float(ghat @ direction)  # negative by construction
                alpha = min(4.0 * alpha, 64.0)
                accepted = False
                for _ in range(MAX_BACKTRACKS):
                    trial = coeff + alpha * direction
                    st_trial = ws.state(trial)
                    f_trial = (np.inf if st_trial is None
                               else ws.objective(st_trial, lam, mu))
                    if f_trial <= f_cur + ARMIJO_C1 * alpha * slope:
                        accepted = True
                        break
                    alpha *= ARMIJO_BACKTRACK
                if not accepted:
                    break  # stalled at numerical precision
                coeff = trial
                st = st_trial
                f_cur = f_trial
                ws.check_blowup(st)
                inner_iters += 1
                ghat = ws.gradient(coeff, st, lam, mu)
                pnorm = float(np.sqrt(np.sum(ghat * ghat * ws.precond)))

            viol = float(np.max(np.abs(st["mhat"])))
            trace.append(TraceEntry(
                outer=outer, value=ws.value(st), objective=f_cur,
                violation=viol, grad_norm=pnorm, max_u=st["max_u"],
                mass=st["mass"], mu=mu, inner_iters=inner_iters))

            if viol <= config.tol_constraint and pnorm <= config.tol_grad:
                status = STATUS_CONVERGED
                break

            lam = lam + mu * st["mhat"]
            if viol > prev_viol / 4.0:
                mu *= config.mu_growth
            prev_viol = viol
    except _Blowup:
        viol = float(np.max(np.abs(st["mhat"])))
        trace.append(TraceEntry(
            outer=len(trace), value=ws.value(st),
            objective=ws.objective(st, lam, mu), violation=viol,
            grad_norm=None, max_u=st["max_u"], mass=st["mass"],
            mu=mu, inner_iters=0))
        return _blowup_result(ws, coeff, lam, trace)

    u_star = ScalarField(ws.grid, st["u"])
    rep = el_residual(u_star, config.eps)
    multipliers = lam + mu * st["mhat"]
    return MinimizeResult(
        u_star=u_star,
        value=ws.value(st),
        multipliers=multipliers,
        constraint_violation=float(np.max(np.abs(st["mhat"]))),
        el_residual_norm=rep.el_residual_norm,
        kw_residual=rep.kw_residual,
        trace=tuple(trace),
        status=status,
        eps=config.eps,
        coeff=coeff.copy())


@dataclass(frozen=True)
class ContinuationResult:
    """Per-eps results plus the compactness-vs-blow-up classification."""

    results: tuple = ()
    eps_list: tuple = ()
    masses: tuple = ()
    max_values: tuple = ()
    statuses: tuple = ()
    classification: str = "inconclusive"


def continuation(eps_list, base: MinimizeConfig) -> ContinuationResult:
    """Solve along a decreasing eps ladder, warm-starting each run.

    The ladder completes even if individual runs blow up; the summary
    classifies the family as "compact" (all runs converged, masses
    bounded) or "blowing_up" (a detector fired, or masses monotonically
    explode), else "inconclusive".
    """
    eps_list = [float(e) for e in eps_list]
    if any(not (0.0 <= e < 0.5) for e in eps_list):
        raise ValueError("all eps must lie in [0, 1/2)")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")

    results = []
    warm = None
    for eps in eps_list:
        config = replace(base, eps=eps)
        res = minimize(config, initial_coeff=warm)
        results.append(res)
        if res.coeff is not None and res.status != STATUS_BLOWUP:
            warm = res.coeff

    masses = tuple(r.trace[-1].mass if r.trace else None for r in results)
    statuses = tuple(r.status for r in results)
    if any(s == STATUS_BLOWUP for s in statuses):
        classification = "blowing_up"
    elif all(s == STATUS_CONVERGED for s in statuses):
        finite = [m for m in masses if m is not None]
        exploding = (len(finite) == len(masses)
                     and all(b > a for a, b in zip(finite, finite[1:]))
                     and finite[-1] > 100.0 * finite[0])
        classification = "blowing_up" if exploding else "compact"
    else:
        classification = "inconclusive"
    return ContinuationResult(
        results=tuple(results), eps_list=tuple(eps_list), masses=masses,
        max_values=tuple(r.trace[-1].max_u if r.trace else None for r in results),
        statuses=statuses, classification=classification)
