"""Time integration of the perturbation system.

Every nonzero mode is advanced by exponential time differencing: the
linearized operator is integrated exactly and the nonlinear forcing is
frozen (order 1) or interpolated linearly across the step (order 2).
The rotational velocity follows its own heat semigroup and the means are
advanced by quadrature of the mean forcing.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .besov import HybridIndex, TimeSeries, chemin_lerner_norm, time_block_norms
from .dyadic import DyadicDecomposition, block_norms_array
from .errors import ArgumentError, SolverError
from .linear import ETDOperators, LinearCoeffs, _phi1, _phi2, from_equilibrium
from .physics import (
    EquilibriumModel,
    FlowState,
    dissipation,
    energy_total,
    nonlinear_arrays,
)
from .spectral import GridSpec, SpectralField, Transform, inverse, merge_arrays, split_arrays

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    order: int = 2
    snapshot_every: int = 1
    dealias: bool = True
    positivity_floor: float = 1e-8
    nonlinear: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ArgumentError("dt must be positive")
        if self.t_end < 0:
            raise ArgumentError("t_end must be nonnegative")
        if self.t_end > 0 and self.dt > self.t_end * (1 + 1e-12):
            raise ArgumentError("dt must not exceed t_end")
        if self.order not in (1, 2):
            raise ArgumentError("order must be 1 or 2")
        if self.snapshot_every < 1:
            raise ArgumentError("snapshot_every must be >= 1")
        ratio = self.t_end / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ArgumentError("t_end must be an integer multiple of dt")
        if self.n_steps % self.snapshot_every:
            raise ArgumentError("snapshot_every must divide the number of steps")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class NormSpec:
    """A hybrid norm of one state component recorded as a diagnostic."""

    field: str
    s: float
    t: float
    split: int = 0

    def __post_init__(self):
        if self.field not in ("q", "u", "T"):
            raise ArgumentError(f"unknown field {self.field!r}")

    @property
    def label(self) -> str:
        return f"{self.field}_hybrid_s-{self.s:g}_t-{self.t:g}"


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def component_series(self, name: str) -> TimeSeries:
        pick = {"q": lambda s: s.q, "T": lambda s: s.T}
        if name not in pick:
            raise ArgumentError("scalar series exist for 'q' and 'T' only")
        return TimeSeries(np.array(self.times), [pick[name](s) for s in self.states])

    def column(self, key: str) -> np.ndarray:
        return np.array([d[key] if key in d else d["norms"][key] for d in self.diagnostics])


def _modal_index_maps(grid: GridSpec):
    k = grid.kmag.ravel()
    active = (k > 0) & grid.nyquist_free.ravel()
    uniq, inv = np.unique(np.round(k[active], 12), return_inverse=True)
    return k, active, uniq, inv


class ETDIntegrator:
    """Exact linear propagation plus frozen or interpolated forcing on a grid."""

    def __init__(self, grid: GridSpec, coeffs: LinearCoeffs, dt: float):
        self.grid = grid
        self.coeffs = coeffs
        self.dt = dt
        self.k, self.active, uniq, inv = _modal_index_maps(grid)
        ops = ETDOperators.build(coeffs, uniq, dt)
        n = grid.npts
        self.W = np.zeros((n, 3, 3))
        self.P1 = np.zeros((n, 3, 3))
        self.P2 = np.zeros((n, 3, 3))
        self.W[self.active] = ops.W[inv]
        self.P1[self.active] = ops.P1[inv]
        self.P2[self.active] = ops.P2[inv]
        # zero mode: A = 0, so the propagators reduce to quadrature weights
        self.W[0] = np.eye(3)
        self.P1[0] = dt * np.eye(3)
        self.P2[0] = 0.5 * dt * np.eye(3)
        z = -coeffs.mu_tilde * self.k**2 * dt
        self.h0 = np.where(self.active, np.exp(z), 0.0)
        self.h1 = np.where(self.active, dt * _phi1(z).real, 0.0)
        self.h2 = np.where(self.active, dt * _phi2(z).real, 0.0)
        self.mode_mask = self.active.reshape(grid.shape) | (grid.kmag == 0)

    def to_modal(self, q_hat, u_hat, t_hat):
        d_hat, om = split_arrays(self.grid, u_hat)
        x = np.stack([q_hat, d_hat, t_hat], axis=-1).reshape(-1, 3)
        mean = u_hat[(slice(None),) + (0,) * self.grid.dim].copy()
        return x, om, mean

    def from_modal(self, x, om, mean):
        g = self.grid
        x = x.reshape(g.shape + (3,))
        u_hat = merge_arrays(g, x[..., 1], om) * self.mode_mask
        u_hat[(slice(None),) + (0,) * g.dim] = mean
        return x[..., 0] * self.mode_mask, u_hat, x[..., 2] * self.mode_mask

    def advance(self, state, f0, df=None):
        """Propagate one step given modal forcing at the start and its increment."""
        x, om, mean = state
        fx, fom, fmean = f0
        x_new = ETDOperators.apply(self.W, x) + ETDOperators.apply(self.P1, fx)
        h0, h1 = self.h0.reshape(self.grid.shape), self.h1.reshape(self.grid.shape)
        om_new = h0 * om + h1 * fom
        mean_new = mean + self.dt * fmean
        if df is not None:
            dx, dom, dmean = df
            x_new = x_new + ETDOperators.apply(self.P2, dx)
            om_new = om_new + self.h2.reshape(self.grid.shape) * dom
            mean_new = mean_new + 0.5 * self.dt * dmean
        return x_new, om_new, mean_new


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


class Stepper:
    """Nonlinear time stepper for one model on one grid."""

    def __init__(self, grid: GridSpec, model: EquilibriumModel, config: SolverConfig, coeffs: LinearCoeffs | None = None):
        self.grid = grid
        self.model = model
        self.config = config
        self.coeffs = coeffs if coeffs is not None else from_equilibrium(model)
        self.integ = ETDIntegrator(grid, self.coeffs, config.dt)

    def forcing(self, q_hat, u_hat, t_hat):
        if not self.config.nonlinear:
            return self.integ.to_modal(np.zeros_like(q_hat), np.zeros_like(u_hat), np.zeros_like(t_hat))
        f, g, h = nonlinear_arrays(self.grid, self.model, q_hat, u_hat, t_hat, dealias=self.config.dealias)
        return self.integ.to_modal(f, g, h)

    def step_arrays(self, q_hat, u_hat, t_hat):
        integ = self.integ
        s0 = integ.to_modal(q_hat, u_hat, t_hat)
        f0 = self.forcing(q_hat, u_hat, t_hat)
        pred = integ.advance(s0, f0)
        if self.config.order == 1:
            return integ.from_modal(*pred)
        f1 = self.forcing(*integ.from_modal(*pred))
        return integ.from_modal(*integ.advance(s0, f0, _sub(f1, f0)))

    def step(self, state: FlowState) -> FlowState:
        return FlowState.from_arrays(self.grid, *self.step_arrays(*state.arrays()))


def step(state: FlowState, model: EquilibriumModel, lc: LinearCoeffs, dt: float, order: int = 2, dealias: bool = True) -> FlowState:
    """Advance a state by one step (builds the propagators on every call)."""
    cfg = SolverConfig(dt=dt, t_end=dt, order=order, dealias=dealias)
    return Stepper(state.grid, model, cfg, lc).step(state)


def snapshot_diagnostics(state: FlowState, model: EquilibriumModel, norms: Sequence[NormSpec], dec: DyadicDecomposition) -> dict:
    q_hat, u_hat, t_hat = state.arrays()
    blocks = {
        "q": block_norms_array(q_hat, dec),
        "u": block_norms_array(u_hat, dec),
        "T": block_norms_array(t_hat, dec),
    }
    values = {}
    for ns in norms:
        w = HybridIndex(ns.s, ns.t, ns.split).weights(dec.levels)
        values[ns.label] = float(np.sum(w * blocks[ns.field]))
    return {
        "energy": energy_total(state, model),
        "energy_mechanical": energy_total(state, model, include_thermal=False),
        "dissipation": dissipation(state, model),
        "dissipation_work": dissipation(state, model, form="work"),
        "norms": values,
        "blocks": {k: v.tolist() for k, v in blocks.items()},
    }


def _check_state(q_hat, grid: GridSpec, floor: float, step_index: int, t: float) -> None:
    q = inverse(grid, q_hat)
    if not np.all(np.isfinite(q)):
        raise SolverError("non-finite values in the density perturbation", step_index, t)
    if (1.0 + q).min() < floor:
        raise SolverError(f"density ratio fell below the floor {floor:g}", step_index, t)


def simulate(
    initial: FlowState,
    model: EquilibriumModel,
    config: SolverConfig,
    norms: Sequence[NormSpec] = (),
    coeffs: LinearCoeffs | None = None,
    record_diagnostics: bool = True,
) -> Trajectory:
    """Integrate from ``initial`` to ``config.t_end`` storing every snapshot."""
    grid = initial.grid
    stepper = Stepper(grid, model, config, coeffs)
    dec = DyadicDecomposition.from_grid(grid)
    traj = Trajectory()
    arrays = initial.arrays()
    _check_state(arrays[0], grid, config.positivity_floor, 0, 0.0)

    def record(t, arr):
        st = FlowState.from_arrays(grid, *arr)
        traj.times.append(t)
        traj.states.append(st)
        if record_diagnostics:
            traj.diagnostics.append(snapshot_diagnostics(st, model, norms, dec))

    record(0.0, arrays)
    for n in range(1, config.n_steps + 1):
        arrays = stepper.step_arrays(*arrays)
        t = n * config.dt
        _check_state(arrays[0], grid, config.positivity_floor, n, t)
        if n % config.snapshot_every == 0:
            record(t, arrays)
    log.debug("simulated %d steps on %s", config.n_steps, grid)
    return traj


# --- heat smoothing ----------------------------------------------------------


def heat_smoothing_check(
    u0: SpectralField,
    mu: float,
    T: float,
    rho1: float,
    rho2: float,
    s: float,
    dec: DyadicDecomposition,
    n_times: int = 2000,
) -> dict:
    """Compare both sides of the heat-flow smoothing estimate with zero forcing.

    Returns ``lhs = ||u||_{L~^rho1_T(B^{s + 2/rho1})}``, ``rhs = ||u0||_{B^s}`` and
    their ratio.  The flow is exact per mode; the time integral uses the
    trapezoid rule on a geometric grid that resolves every block's scale.
    """
    if not (1 <= rho2 <= rho1 <= np.inf):
        raise ArgumentError("need 1 <= rho2 <= rho1 <= inf")
    if not mu > 0 or not T > 0:
        raise ArgumentError("mu and T must be positive")
    grid = u0.grid
    c = u0.coeffs.ravel()
    nz = np.abs(c) > 0
    k2 = (grid.kmag.ravel() ** 2)[nz]
    wts = (dec.multipliers.reshape(len(dec.levels), -1)[:, nz] ** 2) * np.abs(c[nz]) ** 2
    times = np.concatenate([[0.0], np.geomspace(T * 1e-8, T, n_times)])
    decay = np.exp(-2.0 * mu * np.outer(times, k2))
    hist = np.sqrt(grid.volume * decay @ wts.T)
    gain = 0.0 if rho1 == np.inf else 2.0 / rho1
    lhs = float(np.sum(2.0 ** (dec.levels * (s + gain)) * time_block_norms(hist, times, rho1)))
    rhs = float(np.sum(2.0 ** (dec.levels * s) * hist[0]))
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else float("nan")}


# --- Picard iteration --------------------------------------------------------


@dataclass
class PicardResult:
    times: np.ndarray
    iterates: list  # iterates[n][k] = (q_hat, u_hat, T_hat) at times[k]; n = 0 is the lift

    def state(self, grid: GridSpec, n: int, k: int) -> FlowState:
        return FlowState.from_arrays(grid, *self.iterates[n][k])

    def difference_norms(self, grid: GridSpec) -> np.ndarray:
        """``F_T`` norm of ``iterate_n - iterate_(n-1)`` for n = 1, 2, ..."""
        dec = DyadicDecomposition.from_grid(grid)
        return np.array([f_t_norm(_diff(self.iterates[n], self.iterates[n - 1]), self.times, dec) for n in range(1, len(self.iterates))])


def _diff(a, b):
    return [tuple(x - y for x, y in zip(sa, sb)) for sa, sb in zip(a, b)]


def f_t_norm(history, times: np.ndarray, dec: DyadicDecomposition) -> float:
    """Critical time-space norm used to measure Picard increments.

    ``q`` in ``L~inf(B^{N/2}) + L1(B^{N/2+2})``, ``u`` one derivative lower
    and ``T`` two derivatives lower, with ``N`` the space dimension.
    """
    half = dec.grid.dim / 2.0
    lv = dec.levels.astype(float)
    total = 0.0
    for comp, shift in ((0, 0.0), (1, -1.0), (2, -2.0)):
        hist = np.stack([block_norms_array(h[comp], dec) for h in history])
        sup = time_block_norms(hist, times, np.inf)
        l1 = time_block_norms(hist, times, 1.0)
        total += np.sum(2.0 ** (lv * (half + shift)) * sup) + np.sum(2.0 ** (lv * (half + shift + 2)) * l1)
    return float(total)


class _FrozenOperator:
    """Deviation of the frozen variable-coefficient principal part from its
    constant-coefficient value, evaluated pointwise on the padded grid."""

    def __init__(self, grid: GridSpec, model: EquilibriumModel, coeffs: LinearCoeffs, q_hat):
        self.grid = grid
        self.tr = Transform(grid, True)
        self.ik = 1j * grid.kderiv
        rb = model.rho_bar
        rho = rb * (1.0 + self.tr.to_real(q_hat))
        self.da = model.mu(rho) / rho - coeffs.mu_tilde
        self.db = (model.lam(rho) + model.mu(rho)) / rho - (coeffs.lambda_tilde + coeffs.mu_tilde)
        self.dc = rb * model.kappa(rho) - coeffs.eps
        self.dd = model.chi(rho) / rho - coeffs.alpha

    def apply(self, q_hat, u_hat, t_hat):
        tr, ik = self.tr, self.ik
        k2 = self.grid.kmag**2
        gu = tr.to_real(ik[:, None] * u_hat[None, :])
        shear = np.sum(ik[:, None] * tr.to_spec(self.da * gu), axis=0)
        div_u = tr.to_real(np.sum(ik * u_hat, axis=0))
        bulk = ik * tr.to_spec(self.db * div_u)
        cap = ik * tr.to_spec(self.dc * tr.to_real(-k2 * q_hat))
        heat = np.sum(ik * tr.to_spec(self.dd * tr.to_real(ik * t_hat)), axis=0)
        return np.zeros_like(q_hat), (shear + bulk + cap) * self.grid.dealias_mask, heat * self.grid.dealias_mask


def _linear_rhs(grid: GridSpec, c: LinearCoeffs, q_hat, u_hat, t_hat, coupled: bool):
    """Constant-coefficient linear right-hand side in primitive variables."""
    ik = 1j * grid.kderiv
    k2 = grid.kmag**2
    div_u = np.sum(ik * u_hat, axis=0)
    rq = -div_u
    ru = -c.mu_tilde * k2 * u_hat + (c.lambda_tilde + c.mu_tilde) * ik * div_u + c.eps * ik * (-k2 * q_hat)
    rt = -c.alpha * k2 * t_hat
    if coupled:
        ru = ru - c.beta * ik * q_hat - c.gamma * ik * t_hat
        rt = rt - c.delta * div_u
    return rq, ru, rt


def picard_iterate(
    initial: FlowState,
    model: EquilibriumModel,
    T: float,
    n_iters: int,
    dt: float,
) -> PicardResult:
    """Successive approximations for the local-existence scheme.

    Iterate 0 is the unit heat flow of the initial datum (the lift).  Each
    later iterate is ``lift + correction`` where the correction solves the
    linear problem with principal coefficients frozen at the previous
    iterate and all remaining terms evaluated at the previous iterate.
    Time stepping is first order: the constant-coefficient part is exact
    and the frozen-coefficient deviation is explicit.
    """
    if n_iters < 1:
        raise ArgumentError("n_iters must be >= 1")
    grid = initial.grid
    n_steps = int(round(T / dt))
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-9 * T:
        raise ArgumentError("T must be a positive integer multiple of dt")
    times = np.arange(n_steps + 1) * dt
    full = from_equilibrium(model)
    base = full.compressible_only()
    integ = ETDIntegrator(grid, base, dt)
    k2 = grid.kmag**2

    q0, u0, t0 = initial.arrays()
    lift = []
    for t in times:
        e = np.exp(-k2 * t)
        lift.append((q0 * e, u0 * e, t0 * e))

    iterates = [lift]
    bar_prev = [tuple(np.zeros_like(a) for a in lift[0]) for _ in times]
    for it in range(n_iters):
        prev = iterates[-1]
        ops = [_FrozenOperator(grid, model, base, s[0]) for s in prev]
        fixed = []
        for s, b, l in zip(prev, bar_prev, lift):
            lin = _linear_rhs(grid, full, *s, coupled=True)
            nl = nonlinear_arrays(grid, model, *s, dealias=True)
            lb = _linear_rhs(grid, base, *b, coupled=False)
            dl = tuple(-k2 * a for a in l)
            fixed.append(tuple(x + y - z - w for x, y, z, w in zip(lin, nl, lb, dl)))
        bar = [tuple(np.zeros_like(a) for a in lift[0])]
        modal = integ.to_modal(*bar[0])
        for k in range(n_steps):
            dev = ops[k].apply(*_sub(bar[k], bar_prev[k]))
            f = tuple(a + b for a, b in zip(fixed[k], dev))
            modal = integ.advance(modal, integ.to_modal(*f))
            nxt = integ.from_modal(*modal)
            if not np.all(np.isfinite(nxt[0])):
                raise SolverError("Picard iterate diverged", k + 1, times[k + 1])
            bar.append(nxt)
        new = [tuple(a + b for a, b in zip(l, bb)) for l, bb in zip(lift, bar)]
        for k, s in enumerate(new):
            _check_state(s[0], grid, 1e-8, k, times[k])
        iterates.append(new)
        bar_prev = bar
    return PicardResult(times, iterates)
