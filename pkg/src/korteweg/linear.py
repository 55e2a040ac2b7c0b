"""Linearized dynamics around a constant equilibrium.

Per wavenumber ``xi`` the compressible part ``(q, d, T)`` obeys
``dX/dt + A(xi) X = f`` with

    A(xi) = [[0, xi, 0], [-eps xi^3 - beta xi, nu xi^2, -gamma xi], [0, delta xi, alpha xi^2]]

while every component of the rotational part decays like the heat
equation with diffusivity ``mu_tilde``.  The eigenvalues of ``-A(xi)`` are
``xi^2`` times the roots of the monic cubic returned by :func:`char_poly`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, DomainError
from .spectral import SpectralField, lambda_power

CONDITION_NAMES = ("nonneg_nu", "nonneg_eps", "nonneg_alpha", "alphabeta", "mixed", "gammadelta_beta")


@dataclass(frozen=True)
class LinearCoeffs:
    nu: float
    mu_tilde: float
    lambda_tilde: float
    eps: float
    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        scale = max(1.0, abs(self.nu))
        if abs(self.nu - (self.lambda_tilde + 2 * self.mu_tilde)) > 1e-12 * scale:
            raise DomainError("nu must equal lambda_tilde + 2 mu_tilde")

    @classmethod
    def from_tuple(cls, nu, eps, alpha, beta, gamma, delta, mu_tilde: float | None = None) -> "LinearCoeffs":
        """Build from the six coefficients that enter the compressible system.

        Without an explicit ``mu_tilde`` the viscosity is taken as pure shear,
        ``mu_tilde = nu / 2`` and ``lambda_tilde = 0``.
        """
        mu = nu / 2.0 if mu_tilde is None else float(mu_tilde)
        return cls(float(nu), mu, float(nu) - 2 * mu, float(eps), float(alpha), float(beta), float(gamma), float(delta))

    def as_tuple(self) -> tuple[float, ...]:
        return (self.nu, self.eps, self.alpha, self.beta, self.gamma, self.delta)

    def to_dict(self) -> dict:
        return asdict(self)

    def compressible_only(self) -> "LinearCoeffs":
        """Same diffusion and capillarity, with pressure and thermal coupling removed."""
        return LinearCoeffs(self.nu, self.mu_tilde, self.lambda_tilde, self.eps, self.alpha, 0.0, 0.0, 0.0)


def from_equilibrium(model) -> LinearCoeffs:
    """Linearize an :class:`~korteweg.physics.EquilibriumModel` at its equilibrium."""
    model.check_hypotheses()
    rb = model.rho_bar
    tb = model.temperature_bar
    mu = model.mu(rb) / rb
    lam = model.lam(rb) / rb
    return LinearCoeffs(
        nu=lam + 2 * mu,
        mu_tilde=mu,
        lambda_tilde=lam,
        eps=rb * model.kappa(rb),
        alpha=model.chi(rb) / rb,
        beta=model.P0.deriv(rb) + tb * model.P1.deriv(rb),
        gamma=model.P1(rb) / (rb * model.A_psi),
        delta=tb * model.P1(rb) / rb,
    )


def _check_xi(xi: float) -> None:
    if not xi > 0:
        raise ArgumentError(f"xi must be positive, got {xi}")


def system_matrix(c: LinearCoeffs, xi: float) -> np.ndarray:
    _check_xi(xi)
    return np.array(
        [
            [0.0, xi, 0.0],
            [-c.eps * xi**3 - c.beta * xi, c.nu * xi**2, -c.gamma * xi],
            [0.0, c.delta * xi, c.alpha * xi**2],
        ]
    )


def system_matrices(c: LinearCoeffs, xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    a = np.zeros(xi.shape + (3, 3))
    a[..., 0, 1] = xi
    a[..., 1, 0] = -c.eps * xi**3 - c.beta * xi
    a[..., 1, 1] = c.nu * xi**2
    a[..., 1, 2] = -c.gamma * xi
    a[..., 2, 1] = c.delta * xi
    a[..., 2, 2] = c.alpha * xi**2
    return a


def char_poly(c: LinearCoeffs, xi: float) -> np.ndarray:
    """Monic cubic ``X^3 + a2 X^2 + a1 X + a0`` as ``[1, a2, a1, a0]``."""
    _check_xi(xi)
    inv = 1.0 / xi**2
    return np.array(
        [
            1.0,
            c.nu + c.alpha,
            c.eps + c.nu * c.alpha + (c.gamma * c.delta + c.beta) * inv,
            c.alpha * c.eps + c.alpha * c.beta * inv,
        ]
    )


def _polish(coeffs: np.ndarray, roots: np.ndarray, iters: int = 3) -> np.ndarray:
    dp = np.polyder(coeffs)
    out = roots.astype(complex)
    for _ in range(iters):
        for i, r in enumerate(out):
            p = np.polyval(coeffs, r)
            d = np.polyval(dp, r)
            if abs(d) <= 1e-300 * max(1.0, abs(p)):
                continue
            cand = r - p / d
            if np.isfinite(cand) and abs(np.polyval(coeffs, cand)) <= abs(p):
                out[i] = cand
    return out


def _conjugate_clean(roots: np.ndarray, tol: float) -> np.ndarray:
    """Make the roots of a real cubic exactly real or exactly conjugate."""
    r = roots.copy()
    im = np.abs(r.imag)
    if np.all(im <= tol):
        return r.real.astype(complex)
    i_real = int(np.argmin(im))
    r[i_real] = r[i_real].real
    pair = [i for i in range(3) if i != i_real]
    a, b = r[pair[0]], r[pair[1]]
    re = 0.5 * (a.real + b.real)
    mag = 0.5 * (abs(a.imag) + abs(b.imag))
    r[pair[0]] = complex(re, mag)
    r[pair[1]] = complex(re, -mag)
    return r


def cubic_roots(coeffs: Sequence[float]) -> np.ndarray:
    """Roots of a real monic cubic ``[1, a2, a1, a0]``.

    Cardano's formula in complex arithmetic, switching to the companion
    matrix when the relative discriminant falls below 1e-12 (clustered
    roots), followed by a few Newton steps.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    _, a2, a1, a0 = coeffs
    p = a1 - a2 * a2 / 3.0
    q = 2.0 * a2**3 / 27.0 - a2 * a1 / 3.0 + a0
    disc = 4.0 * p**3 + 27.0 * q * q
    denom = 4.0 * abs(p) ** 3 + 27.0 * q * q
    if denom == 0.0 or abs(disc) < 1e-12 * denom:
        comp = np.array([[-a2, -a1, -a0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        roots = np.linalg.eigvals(comp).astype(complex)
    else:
        sq = np.sqrt(complex(q * q / 4.0 + p**3 / 27.0))
        w1, w2 = -q / 2.0 + sq, -q / 2.0 - sq
        u3 = w1 if abs(w1) >= abs(w2) else w2
        u = u3 ** (1.0 / 3.0)
        omega = np.exp(2j * np.pi / 3.0)
        roots = np.array([u * omega**k - p / (3.0 * u * omega**k) for k in range(3)]) - a2 / 3.0
    roots = _polish(coeffs, roots)
    scale = max(1.0, float(np.max(np.abs(roots))))
    return _conjugate_clean(roots, 1e-13 * scale)


def sort_eigenvalues(values: np.ndarray) -> np.ndarray:
    """Real part descending, ties broken by imaginary part descending."""
    values = np.asarray(values, dtype=complex)
    order = sorted(range(len(values)), key=lambda i: (-values[i].real, -values[i].imag))
    return values[order]


def eigenvalues(c: LinearCoeffs, xi: float) -> np.ndarray:
    """Eigenvalues of ``-A(xi)``, sorted with :func:`sort_eigenvalues`."""
    if xi == 0:
        return np.zeros(3, dtype=complex)
    return sort_eigenvalues(xi**2 * cubic_roots(char_poly(c, xi)))


def condition_values(c: LinearCoeffs) -> dict[str, float]:
    gd = c.gamma * c.delta
    return {
        "nonneg_nu": c.nu,
        "nonneg_eps": c.eps,
        "nonneg_alpha": c.alpha,
        "alphabeta": c.alpha * c.beta,
        "mixed": gd * (c.nu + c.alpha) + c.nu * c.beta,
        "gammadelta_beta": gd + c.beta,
    }


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    violated: tuple[str, ...]
    strict: bool
    values: dict

    def to_dict(self) -> dict:
        return {"stable": self.stable, "strict": self.strict, "violated": list(self.violated), "conditions": dict(self.values)}


def classify_stability(c: LinearCoeffs) -> StabilityReport:
    """Check the six sign conditions that characterize linear stability."""
    vals = condition_values(c)
    violated = tuple(k for k in CONDITION_NAMES if vals[k] < 0)
    strict = all(vals[k] > 0 for k in CONDITION_NAMES)
    return StabilityReport(not violated, violated, strict, vals)


@dataclass(frozen=True)
class LowFrequencyRates:
    rate1: float
    rate_pm: float
    osc: float

    def to_dict(self) -> dict:
        return asdict(self)


def low_freq_asymptotics(c: LinearCoeffs) -> LowFrequencyRates:
    """Leading behaviour as xi -> 0.

    The real eigenvalue behaves like ``-rate1 xi^2`` and the acoustic pair
    like ``-rate_pm xi^2 +- i osc xi``.
    """
    rep = classify_stability(c)
    gd_b = c.gamma * c.delta + c.beta
    if not rep.strict or gd_b <= 0:
        raise DomainError("low-frequency rates need strict stability and gamma*delta + beta > 0")
    return LowFrequencyRates(
        rate1=c.alpha * c.beta / gd_b,
        rate_pm=(c.gamma * c.delta * (c.nu + c.alpha) + c.nu * c.beta) / (2.0 * gd_b),
        osc=float(np.sqrt(gd_b)),
    )


def high_freq_limits(c: LinearCoeffs) -> np.ndarray:
    """Limits of the cubic's roots as xi -> infinity."""
    if c.nu == 0:
        raise DomainError("high-frequency limits need nu != 0")
    root = np.sqrt(complex(1.0 - 4.0 * c.eps / c.nu**2))
    pair = -0.5 * c.nu * np.array([1.0 + root, 1.0 - root])
    return sort_eigenvalues(np.concatenate([[complex(-c.alpha)], pair]))


# --- matrix exponential and phi-functions ---------------------------------

_PADE6 = np.array([1.0, 1.0 / 2, 5.0 / 44, 1.0 / 66, 1.0 / 792, 1.0 / 15840, 1.0 / 665280])


def expm_pade(m: np.ndarray) -> np.ndarray:
    """Scaling and squaring with the diagonal (6, 6) Pade approximant.

    Works on stacks of square matrices ``(..., n, n)``.
    """
    m = np.asarray(m, dtype=float)
    batch = m.reshape((-1,) + m.shape[-2:])
    out = np.empty_like(batch)
    n = batch.shape[-1]
    eye = np.eye(n)
    norms = np.abs(batch).sum(axis=-1).max(axis=-1)
    scale = np.where(norms > 0.5, np.ceil(np.log2(np.maximum(norms, 1e-300) / 0.5)), 0).astype(int)
    for s in np.unique(scale):
        sel = scale == s
        x = batch[sel] / 2.0**s
        num = np.broadcast_to(eye * _PADE6[0], x.shape).copy()
        den = num.copy()
        power = np.broadcast_to(eye, x.shape).copy()
        for j in range(1, len(_PADE6)):
            power = power @ x
            num += _PADE6[j] * power
            den += _PADE6[j] * (-1) ** j * power
        e = np.linalg.solve(den, num)
        for _ in range(s):
            e = e @ e
        out[sel] = e
    return out.reshape(m.shape)


def _phi1(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-5
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2.0 + z * z / 6.0, np.expm1(zs) / zs)


def _phi2(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 0.1
    zs = np.where(small, 1.0, z)
    series = np.zeros_like(z)
    fact = 2.0
    for k in range(10):
        series = series + z**k / fact
        fact *= k + 3
    return np.where(small, series, (np.expm1(zs) - zs) / (zs * zs))


def _diagonalizable(mats: np.ndarray):
    w, v = np.linalg.eig(mats)
    n = mats.shape[-1]
    gaps = np.full(mats.shape[:-2], np.inf)
    for i in range(n):
        for j in range(i + 1, n):
            gaps = np.minimum(gaps, np.abs(w[..., i] - w[..., j]))
    norms = np.abs(mats).sum(axis=-1).max(axis=-1)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(v)
    ok = (gaps > 1e-8 * norms) & (norms > 0) & np.isfinite(cond) & (cond < 1e6)
    return w, v, ok


def phi_operators(z: np.ndarray, orders: int = 2) -> list[np.ndarray]:
    """``[exp(Z), phi_1(Z), ..., phi_orders(Z)]`` for a stack of real matrices.

    ``phi_k(Z) = int_0^1 exp((1 - s) Z) s^(k-1) / (k-1)! ds``.  Diagonalizable
    matrices with well separated eigenvalues go through their eigenvectors,
    the remainder through the Pade exponential of an augmented block matrix.
    """
    z = np.asarray(z, dtype=float)
    shape = z.shape
    n = shape[-1]
    flat = z.reshape((-1, n, n))
    outs = [np.zeros_like(flat) for _ in range(orders + 1)]
    w, v, ok = _diagonalizable(flat)
    if np.any(ok):
        vo, wo = v[ok], w[ok]
        vinv = np.linalg.inv(vo)
        funcs = [np.exp, _phi1, _phi2][: orders + 1]
        for k, f in enumerate(funcs):
            outs[k][ok] = np.real(vo @ (f(wo)[..., None] * vinv))
    bad = ~ok
    if np.any(bad):
        nb = int(bad.sum())
        big = np.zeros((nb, n * (orders + 1), n * (orders + 1)))
        big[:, :n, :n] = flat[bad]
        for k in range(orders):
            big[:, k * n : (k + 1) * n, (k + 1) * n : (k + 2) * n] = np.eye(n)
        e = expm_pade(big)
        for k in range(orders + 1):
            outs[k][bad] = e[:, :n, k * n : (k + 1) * n]
    return [o.reshape(shape) for o in outs]


def semigroup(c: LinearCoeffs, xi, t: float) -> np.ndarray:
    """``W(t) = exp(-t A(xi))``; accepts a scalar or an array of wavenumbers."""
    xi_arr = np.asarray(xi, dtype=float)
    if t == 0:
        return np.broadcast_to(np.eye(3), xi_arr.shape + (3, 3)).copy()
    return phi_operators(-t * system_matrices(c, xi_arr), orders=0)[0]


@dataclass
class ETDOperators:
    """Exact one-step propagators for ``dX/dt + A X = f`` over a step ``dt``.

    ``W`` advances the free flow, ``P1 = dt phi_1(-dt A)`` integrates a
    constant forcing and ``P2 = dt phi_2(-dt A)`` the linear-in-time part.
    """

    W: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    dt: float

    @classmethod
    def build(cls, c: LinearCoeffs, xi, dt: float) -> "ETDOperators":
        xi = np.asarray(xi, dtype=float)
        e, p1, p2 = phi_operators(-dt * system_matrices(c, xi), orders=2)
        return cls(e, dt * p1, dt * p2, dt)

    @staticmethod
    def apply(m: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...j->...i", m, x)

    def step(self, x: np.ndarray, forcing: Callable, order: int = 2) -> np.ndarray:
        f0 = forcing(0.0, x)
        pred = self.apply(self.W, x) + self.apply(self.P1, f0)
        if order == 1:
            return pred
        if order != 2:
            raise DomainError("order must be 1 or 2")
        f1 = forcing(self.dt, pred)
        return pred + self.apply(self.P2, f1 - f0)


def duhamel_step(c: LinearCoeffs, xi, state_hat: np.ndarray, forcing: Callable, dt: float, order: int = 2) -> np.ndarray:
    """One exponential time-differencing step per mode.

    ``forcing(tau, X)`` returns the forcing at offset ``tau`` in the step for
    state ``X``.  Order 1 freezes it at the start of the step; order 2 adds
    the linear interpolation towards the value at the predicted end state.
    """
    return ETDOperators.build(c, xi, dt).step(np.asarray(state_hat, dtype=complex), forcing, order)


# --- block Lyapunov functionals ------------------------------------------


def _check_quadratic(value: float, what: str) -> float:
    if value < 0:
        raise DomainError(f"{what} is negative ({value:.3e}); coupling constant too large")
    return float(np.sqrt(value))


def block_lyapunov_low(c: LinearCoeffs, block_state: Sequence[SpectralField], K: float) -> float:
    """``beta|q|^2 + |d|^2 + (gamma/delta)|T|^2 - 2K<Lambda q, d>`` (square root)."""
    q, d, t = block_state
    if c.delta == 0:
        raise DomainError("the low-frequency functional needs delta != 0")
    lq = lambda_power(q, 1.0)
    val = c.beta * q.inner(q) + d.inner(d) + (c.gamma / c.delta) * t.inner(t) - 2 * K * lq.inner(d)
    return _check_quadratic(val, "low-frequency functional")


def block_lyapunov_high(c: LinearCoeffs, block_state: Sequence[SpectralField], K: float, B: float, variant: str = "theorem1") -> float:
    """High-frequency functional; ``variant`` selects how temperature is weighted.

    ``theorem1`` uses ``|Lambda^{-1} T|^2`` and ``theorem3`` uses ``|T|^2``.
    """
    q, d, t = block_state
    lq = lambda_power(q, 1.0)
    if variant == "theorem1":
        tt = lambda_power(t, -1.0)
    elif variant == "theorem3":
        tt = t
    else:
        raise DomainError(f"unknown variant {variant!r}")
    val = c.eps * B * lq.inner(lq) + B * d.inner(d) + tt.inner(tt) - 2 * K * lq.inner(d)
    return _check_quadratic(val, "high-frequency functional")


# --- decay exponents -------------------------------------------------------


@dataclass(frozen=True)
class BlockDecay:
    level: int
    xi: float
    rate: float
    omega_rate: float


def block_center(l: int) -> float:
    """A wavenumber where the block profile equals one."""
    return float(np.sqrt(2.0) * 2.0**l)


def decay_exponent_fit(
    c: LinearCoeffs,
    l_range: Sequence[int],
    t_grid: Sequence[float],
    scaled: bool = True,
    datum: Sequence[float] = (1.0, 0.5, -0.5),
) -> list[BlockDecay]:
    """Fit exponential decay rates of the linear flow block by block.

    Each block is represented by one mode at :func:`block_center`.  The
    fitted quantity is ``max(1, 2^l)|q| + |d| + min(1, 2^-l)|T|``; the rate
    is minus the least-squares slope of its logarithm.  With ``scaled`` the
    sample times are ``t_grid / xi^2`` so every block is observed over a
    comparable number of its own time scales.
    """
    if not classify_stability(c).strict:
        raise DomainError("decay rates are only fitted for strictly stable coefficients")
    t_grid = np.asarray(t_grid, dtype=float)
    x0 = np.asarray(datum, dtype=float)
    x0 = x0 / np.linalg.norm(x0)
    out = []
    for l in l_range:
        xi = block_center(l)
        times = t_grid / xi**2 if scaled else t_grid
        ws = np.stack([semigroup(c, xi, t) for t in times])
        x = ws @ x0
        wq = max(1.0, 2.0**l)
        wt = min(1.0, 2.0**-l)
        quantity = wq * np.abs(x[:, 0]) + np.abs(x[:, 1]) + wt * np.abs(x[:, 2])
        slope = np.polyfit(times, np.log(quantity), 1)[0]
        omega = np.exp(-c.mu_tilde * xi**2 * times)
        omega_slope = np.polyfit(times, np.log(omega), 1)[0]
        out.append(BlockDecay(int(l), xi, float(-slope), float(-omega_slope)))
    return out
