"""Constitutive laws, equilibrium model and the nonlinear right-hand sides.

The density is written ``rho = rho_bar (1 + q)`` and the temperature
``theta = theta_bar + T`` with ``T`` the perturbation.  Pointwise products
are evaluated on a 3/2-padded grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ArgumentError, DomainError, ModelError
from .spectral import GridSpec, SpectralField, Transform

FORMS = ("constant", "affine", "power", "vdw")
_PARAMS = {
    "constant": ("value",),
    "affine": ("intercept", "slope"),
    "power": ("coef", "exponent"),
    "vdw": ("temperature_coef", "attraction", "covolume"),
}


@dataclass(frozen=True)
class Coefficient:
    """A density-dependent coefficient with exact derivatives.

    ``constant``: value.  ``affine``: intercept + slope * rho.
    ``power``: coef * rho**exponent.  ``vdw``:
    temperature_coef * rho / (1 - covolume * rho) - attraction * rho**2.
    """

    form: str
    params: tuple = field(default=())

    def __post_init__(self):
        if self.form not in _PARAMS:
            raise ModelError(f"unknown coefficient form {self.form!r}; expected one of {FORMS}")
        names = _PARAMS[self.form]
        p = dict(self.params)
        missing = [n for n in names if n not in p]
        extra = [n for n in p if n not in names]
        if missing or extra:
            raise ModelError(f"{self.form} coefficient needs {names}, got {tuple(p)}")
        object.__setattr__(self, "params", tuple((n, float(p[n])) for n in names))

    @classmethod
    def constant(cls, value: float) -> "Coefficient":
        return cls("constant", (("value", value),))

    @classmethod
    def affine(cls, intercept: float, slope: float) -> "Coefficient":
        return cls("affine", (("intercept", intercept), ("slope", slope)))

    @classmethod
    def power(cls, coef: float, exponent: float) -> "Coefficient":
        return cls("power", (("coef", coef), ("exponent", exponent)))

    @classmethod
    def vdw(cls, temperature_coef: float, attraction: float, covolume: float) -> "Coefficient":
        return cls("vdw", (("temperature_coef", temperature_coef), ("attraction", attraction), ("covolume", covolume)))

    @classmethod
    def from_dict(cls, d: dict) -> "Coefficient":
        d = dict(d)
        form = d.pop("form", None)
        if form is None:
            raise ModelError("coefficient table needs a 'form' key")
        return cls(form, tuple(d.items()))

    def to_dict(self) -> dict:
        return {"form": self.form, **dict(self.params)}

    @property
    def p(self) -> dict:
        return dict(self.params)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        p = self.p
        if self.form == "constant":
            return np.full_like(rho, p["value"])
        if self.form == "affine":
            return p["intercept"] + p["slope"] * rho
        if self.form == "power":
            return p["coef"] * rho ** p["exponent"]
        b = p["covolume"]
        return p["temperature_coef"] * rho / (1.0 - b * rho) - p["attraction"] * rho**2

    def deriv(self, rho):
        rho = np.asarray(rho, dtype=float)
        p = self.p
        if self.form == "constant":
            return np.zeros_like(rho)
        if self.form == "affine":
            return np.full_like(rho, p["slope"])
        if self.form == "power":
            e = p["exponent"]
            return p["coef"] * e * rho ** (e - 1.0)
        b = p["covolume"]
        return p["temperature_coef"] / (1.0 - b * rho) ** 2 - 2.0 * p["attraction"] * rho

    def antiderivative_over_square(self, z):
        """An antiderivative of ``f(z) / z**2`` (used for the pressure potential)."""
        z = np.asarray(z, dtype=float)
        p = self.p
        if self.form == "constant":
            return -p["value"] / z
        if self.form == "affine":
            return -p["intercept"] / z + p["slope"] * np.log(z)
        if self.form == "power":
            e = p["exponent"]
            if e == 1.0:
                return p["coef"] * np.log(z)
            return p["coef"] * z ** (e - 1.0) / (e - 1.0)
        b = p["covolume"]
        return p["temperature_coef"] * np.log(z / (1.0 - b * z)) - p["attraction"] * z


@dataclass(frozen=True)
class EquilibriumModel:
    """Constant equilibrium ``(rho_bar, theta_bar)`` and the constitutive laws.

    The temperature function is linear, ``Psi(theta) = theta / A_psi``, so the
    equilibrium reduced temperature is ``theta_bar / A_psi``.
    """

    rho_bar: float = 1.0
    theta_bar: float = 1.0
    A_psi: float = 1.0
    mu: Coefficient = Coefficient.constant(1.0)
    lam: Coefficient = Coefficient.constant(0.0)
    kappa: Coefficient = Coefficient.constant(1.0)
    chi: Coefficient = Coefficient.constant(1.0)
    P0: Coefficient = Coefficient.power(1.0, 1.4)
    P1: Coefficient = Coefficient.constant(0.0)

    def __post_init__(self):
        for name in ("rho_bar", "theta_bar", "A_psi"):
            if not getattr(self, name) > 0:
                raise ModelError(f"{name} must be positive")
        self.check_hypotheses()

    @property
    def temperature_bar(self) -> float:
        return self.theta_bar / self.A_psi

    def hypothesis_values(self) -> dict[str, float]:
        rb = self.rho_bar
        return {
            "kappa": float(self.kappa(rb)),
            "mu": float(self.mu(rb)),
            "lambda_plus_2mu": float(self.lam(rb) + 2 * self.mu(rb)),
            "chi": float(self.chi(rb)),
            "dP0": float(self.P0.deriv(rb)),
        }

    def check_hypotheses(self) -> None:
        """All of kappa, mu, lambda + 2 mu, chi and P0' must be positive at rho_bar."""
        bad = [f"{k} > 0 (got {v:.6g})" for k, v in self.hypothesis_values().items() if not v > 0]
        if bad:
            raise ModelError("equilibrium violates: " + "; ".join(bad))

    def beta(self) -> float:
        return float(self.P0.deriv(self.rho_bar) + self.temperature_bar * self.P1.deriv(self.rho_bar))

    def to_dict(self) -> dict:
        return {
            "rho_bar": self.rho_bar,
            "theta_bar": self.theta_bar,
            "A_psi": self.A_psi,
            "mu": self.mu.to_dict(),
            "lambda": self.lam.to_dict(),
            "kappa": self.kappa.to_dict(),
            "chi": self.chi.to_dict(),
            "P0": self.P0.to_dict(),
            "P1": self.P1.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EquilibriumModel":
        d = dict(d)
        kw = {}
        for key in ("rho_bar", "theta_bar", "A_psi"):
            if key in d:
                kw[key] = float(d.pop(key))
        for key, attr in (("mu", "mu"), ("lambda", "lam"), ("kappa", "kappa"), ("chi", "chi"), ("P0", "P0"), ("P1", "P1")):
            if key in d:
                v = d.pop(key)
                kw[attr] = Coefficient.from_dict(v) if isinstance(v, dict) else Coefficient.constant(float(v))
        if d:
            raise ModelError(f"unknown model keys: {sorted(d)}")
        return cls(**kw)


def pressure_potential(s, model: EquilibriumModel, method: str = "auto"):
    """``Pi(s) = s (int_{rho_bar}^s P0(z)/z^2 dz - P0(rho_bar)/rho_bar)``.

    ``method='quad'`` forces adaptive Gauss-Kronrod quadrature instead of the
    closed-form antiderivative.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0):
        raise DomainError("the pressure potential is defined for positive densities")
    rb = model.rho_bar
    p0 = model.P0
    if method == "auto":
        integral = p0.antiderivative_over_square(s_arr) - p0.antiderivative_over_square(rb)
    elif method == "quad":
        f = lambda z: float(p0(z)) / z**2
        integral = np.vectorize(lambda x: quad(f, rb, x, epsabs=0.0, epsrel=1e-13, limit=200)[0])(s_arr)
    else:
        raise ArgumentError(f"unknown method {method!r}")
    out = s_arr * (integral - float(p0(rb)) / rb)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class FlowState:
    """Perturbation ``(q, u, T)``; means are stored in the zero modes."""

    q: SpectralField
    u: tuple
    T: SpectralField

    def __post_init__(self):
        grid = self.q.grid
        object.__setattr__(self, "u", tuple(self.u))
        if len(self.u) != grid.dim:
            raise ArgumentError("velocity must have one component per dimension")
        if any(f.grid != grid for f in (*self.u, self.T)):
            raise ArgumentError("state components live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.q.grid

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FlowState":
        z = SpectralField.zeros(grid)
        return cls(z, (z,) * grid.dim, z)

    @classmethod
    def from_real(cls, grid: GridSpec, q, u: Sequence, T) -> "FlowState":
        return cls(
            SpectralField.from_real(grid, q),
            tuple(SpectralField.from_real(grid, uj) for uj in u),
            SpectralField.from_real(grid, T),
        )

    @classmethod
    def from_arrays(cls, grid: GridSpec, q_hat, u_hat, T_hat) -> "FlowState":
        return cls(SpectralField(grid, q_hat), tuple(SpectralField(grid, c) for c in u_hat), SpectralField(grid, T_hat))

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.q.coeffs, np.stack([c.coeffs for c in self.u]), self.T.coeffs

    def components(self) -> list[SpectralField]:
        return [self.q, *self.u, self.T]

    @property
    def u_mean(self) -> np.ndarray:
        return np.array([c.mean for c in self.u])

    @property
    def T_mean(self) -> float:
        return self.T.mean

    def scaled(self, s: float) -> "FlowState":
        return FlowState(self.q * s, tuple(c * s for c in self.u), self.T * s)

    def min_density_ratio(self) -> float:
        """Minimum over the grid of ``rho / rho_bar = 1 + q``."""
        return float(1.0 + self.q.real().min())


class PointwiseFields:
    """Physical-space samples of a state and its derivatives on the padded grid."""

    def __init__(self, grid: GridSpec, model: EquilibriumModel, q_hat, u_hat, T_hat, padded: bool = True):
        self.tr = tr = Transform(grid, padded)
        self.grid = grid
        self.model = model
        ik = 1j * grid.kderiv
        self.ik = ik
        k2 = grid.kmag**2
        rb = model.rho_bar
        self.q = tr.to_real(q_hat)
        self.u = tr.to_real(u_hat)
        self.theta = model.theta_bar + tr.to_real(T_hat)
        self.rho = rb * (1.0 + self.q)
        self.grad_rho = rb * tr.to_real(ik * q_hat)
        self.lap_rho = rb * tr.to_real(-k2 * q_hat)
        # gu[i, j] = d_i u_j
        self.gu = tr.to_real(ik[:, None] * u_hat[None, :])
        self.lap_u = tr.to_real(-k2 * u_hat)
        self.div_u = np.trace(self.gu, axis1=0, axis2=1)
        self.grad_div = tr.to_real(ik * np.sum(ik * u_hat, axis=0))
        self.grad_T = tr.to_real(ik * T_hat)
        self.lap_T = tr.to_real(-k2 * T_hat)

    def integral(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.tr.cell_volume())

    def grad_of(self, values: np.ndarray) -> np.ndarray:
        """Spectral gradient of a pointwise scalar, returned as coefficients."""
        return self.ik * self.tr.to_spec(values)


def _terms_from_fields(pf: PointwiseFields, dealias: bool):
    m = pf.model
    grid = pf.grid
    tr = pf.tr
    rb, A = m.rho_bar, m.A_psi
    rho, q, u, gu = pf.rho, pf.q, pf.u, pf.gu
    tt = pf.theta / A
    tb = m.temperature_bar

    f_hat = -np.sum(pf.ik * tr.to_spec(q[None] * u), axis=0)

    mu, dmu = m.mu(rho), m.mu.deriv(rho)
    lam, dlam = m.lam(rho), m.lam.deriv(rho)
    kap, dkap = m.kappa(rho), m.kappa.deriv(rho)
    mu_b = float(m.mu(rb))
    zeta_b = float(m.lam(rb) + m.mu(rb))
    kap_b = float(m.kappa(rb))
    beta_b = m.beta()
    p1_b = float(m.P1(rb))

    adv = np.einsum("i...,ij...->j...", u, gu)
    sym = gu + np.swapaxes(gu, 0, 1)
    g = -adv
    g += (mu / rho - mu_b / rb) * pf.lap_u
    g += ((lam + mu) / rho - zeta_b / rb) * pf.grad_div
    g -= ((m.P0.deriv(rho) + tt * m.P1.deriv(rho)) / rho - beta_b / rb) * pf.grad_rho
    g -= (m.P1(rho) / (rho * A) - p1_b / (rb * A)) * pf.grad_T
    g += dlam * pf.grad_rho * pf.div_u / rho
    g += np.einsum("ij...,i...->j...", sym, pf.grad_rho) * dmu / rho
    capillary = 0.5 * dkap * np.sum(pf.grad_rho**2, axis=0) + (kap - kap_b) * pf.lap_rho
    g_hat = tr.to_spec(g) + pf.grad_of(capillary)

    chi, dchi = m.chi(rho), m.chi.deriv(rho)
    chi_b = float(m.chi(rb))
    heat = (chi * pf.lap_T + dchi * np.sum(pf.grad_rho * pf.grad_T, axis=0)) / rho - chi_b / rb * pf.lap_T
    work = (lam * pf.div_u**2 + mu * np.einsum("ij...,ij...->...", sym, gu)) / rho
    h = heat + (tb * p1_b / rb - tt * m.P1(rho) / rho) * pf.div_u - np.sum(u * pf.grad_T, axis=0) + work
    h_hat = tr.to_spec(h)

    if dealias:
        mask = grid.dealias_mask
        f_hat, g_hat, h_hat = f_hat * mask, g_hat * mask, h_hat * mask
    return f_hat, g_hat, h_hat


def nonlinear_arrays(grid: GridSpec, model: EquilibriumModel, q_hat, u_hat, T_hat, dealias: bool = True):
    """Coefficient-array version of :func:`nonlinear_terms`."""
    pf = PointwiseFields(grid, model, q_hat, u_hat, T_hat, padded=dealias)
    return _terms_from_fields(pf, dealias)


def nonlinear_terms(state: FlowState, model: EquilibriumModel, dealias: bool = True):
    """Nonlinear forcing ``(F, G, H)`` of the perturbation equations.

    ``F`` drives ``q``, the vector ``G`` drives ``u`` and ``H`` drives ``T``;
    everything linear in the perturbation is left to the linear operator.
    """
    grid = state.grid
    f, g, h = nonlinear_arrays(grid, model, *state.arrays(), dealias=dealias)
    return SpectralField(grid, f), tuple(SpectralField(grid, c) for c in g), SpectralField(grid, h)


def korteweg_force(rho: SpectralField, model: EquilibriumModel, form: str = "reduced", padded: bool = True):
    """Capillary force of the full density ``rho``.

    ``reduced``: ``rho grad(kappa lap rho) + (rho/2) grad(kappa' |grad rho|^2)``.
    ``tensor``: ``div K + (1/2) grad((kappa - rho kappa') |grad rho|^2)`` with
    ``K = (rho div(kappa grad rho)) I - kappa grad rho (x) grad rho``.
    The two agree for smooth positive densities.
    """
    grid = rho.grid
    tr = Transform(grid, padded)
    ik = 1j * grid.kderiv
    c = rho.coeffs
    r = tr.to_real(c)
    if np.any(r <= 0):
        raise DomainError("density must be positive")
    w = tr.to_real(ik * c)
    lap = tr.to_real(-(grid.kmag**2) * c)
    kap, dkap = model.kappa(r), model.kappa.deriv(r)
    w2 = np.sum(w**2, axis=0)
    if form == "reduced":
        a = ik * tr.to_spec(kap * lap)
        b = ik * tr.to_spec(dkap * w2)
        out = tr.to_spec(r * tr.to_real(a)) + tr.to_spec(0.5 * r * tr.to_real(b))
    elif form == "tensor":
        div_phi = tr.to_real(np.sum(ik * tr.to_spec(kap * w), axis=0))
        iso = ik * tr.to_spec(r * div_phi)
        aniso = np.sum(ik[:, None] * tr.to_spec(kap * w[:, None] * w[None, :]), axis=0)
        extra = 0.5 * ik * tr.to_spec((kap - r * dkap) * w2)
        out = iso - aniso + extra
    else:
        raise ArgumentError(f"unknown form {form!r}")
    return tuple(SpectralField(grid, out[j]) for j in range(grid.dim))


def energy_total(state: FlowState, model: EquilibriumModel, include_thermal: bool = True) -> float:
    """``int 1/2 rho|u|^2 + rho theta + (Pi(rho) - Pi(rho_bar)) + kappa/2 |grad rho|^2``.

    With ``include_thermal=False`` the ``rho theta`` term is dropped, leaving
    the mechanical energy whose decay rate is the viscous work.
    """
    pf = PointwiseFields(state.grid, model, *state.arrays())
    if np.any(pf.rho <= 0):
        raise DomainError("density must be positive")
    dens = 0.5 * pf.rho * np.sum(pf.u**2, axis=0)
    dens = dens + (pressure_potential(pf.rho, model) - pressure_potential(model.rho_bar, model))
    dens = dens + 0.5 * model.kappa(pf.rho) * np.sum(pf.grad_rho**2, axis=0)
    if include_thermal:
        dens = dens + pf.rho * pf.theta
    return pf.integral(dens)


def dissipation(state: FlowState, model: EquilibriumModel, form: str = "printed") -> float:
    """Viscous dissipation integral.

    ``printed``: ``int 2 mu D:D + (lambda + mu)|div u|^2``.
    ``work``: ``int 2 mu D:D + lambda |div u|^2``, which equals the viscous
    work ``int D:grad u`` and is the exact decay rate of the mechanical energy.
    """
    pf = PointwiseFields(state.grid, model, *state.arrays())
    mu, lam = model.mu(pf.rho), model.lam(pf.rho)
    d = 0.5 * (pf.gu + np.swapaxes(pf.gu, 0, 1))
    dd = np.einsum("ij...,ij...->...", d, d)
    if form == "printed":
        bulk = lam + mu
    elif form == "work":
        bulk = lam
    else:
        raise ArgumentError(f"unknown form {form!r}")
    return pf.integral(2 * mu * dd + bulk * pf.div_u**2)


def smooth_random_state(grid: GridSpec, amplitude: float, seed: int, max_mode: int = 4, with_temperature: bool = True) -> FlowState:
    """Seeded mean-zero datum built from modes with ``|n_j| <= max_mode``.

    Each component is scaled so its maximum modulus equals ``amplitude``.
    """
    from .besov import hermitian_embed

    rng = np.random.default_rng(int(seed))
    size = (2 * max_mode + 1,) * grid.dim
    comps = []
    for i in range(grid.dim + 2):
        raw = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        c = hermitian_embed(grid, raw, max_mode)
        peak = np.abs(np.fft.ifftn(c).real * grid.npts).max()
        c = c * (amplitude / peak) if peak > 0 else c
        if i == grid.dim + 1 and not with_temperature:
            c = np.zeros_like(c)
        comps.append(c)
    return FlowState.from_arrays(grid, comps[0], np.stack(comps[1:-1]), comps[-1])


def density_field(state: FlowState, model: EquilibriumModel) -> SpectralField:
    grid = state.grid
    c = model.rho_bar * state.q.coeffs
    c = c.copy()
    c[(0,) * grid.dim] += model.rho_bar
    return SpectralField(grid, c)

