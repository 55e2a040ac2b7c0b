import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from korteweg.errors import ArgumentError, DomainError, ModelError
from korteweg.physics import (
    Coefficient,
    EquilibriumModel,
    FlowState,
    density_field,
    dissipation,
    energy_total,
    korteweg_force,
    nonlinear_terms,
    pressure_potential,
    smooth_random_state,
)
from korteweg.spectral import GridSpec, SpectralField, helmholtz_split

COEFFS = [
    Coefficient.constant(1.3),
    Coefficient.affine(0.5, 0.7),
    Coefficient.power(2.0, 1.4),
    Coefficient.power(1.0, 1.0),
    Coefficient.vdw(1.0, 0.4, 0.2),
]


def _fd4(v, h):
    """Fourth-order centered periodic first derivative."""
    return (-np.roll(v, -2) + 8 * np.roll(v, -1) - 8 * np.roll(v, 1) + np.roll(v, 2)) / (12 * h)


@pytest.mark.parametrize("c", COEFFS, ids=lambda c: c.form)
def test_coefficient_derivatives(c):
    r = np.linspace(0.5, 2.0, 11)
    h = 1e-6
    fd = (c(r + h) - c(r - h)) / (2 * h)
    assert np.allclose(c.deriv(r), fd, rtol=1e-7, atol=1e-8)


@pytest.mark.parametrize("c", COEFFS, ids=lambda c: c.form)
def test_antiderivative_over_square(c):
    a, b = 0.7, 1.9
    ref = quad(lambda z: float(c(z)) / z**2, a, b, epsrel=1e-13)[0]
    got = c.antiderivative_over_square(b) - c.antiderivative_over_square(a)
    assert got == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("c", COEFFS, ids=lambda c: c.form)
def test_coefficient_dict_round_trip(c):
    assert Coefficient.from_dict(c.to_dict()) == c


def test_coefficient_validation():
    with pytest.raises(ModelError):
        Coefficient("cubic", ())
    with pytest.raises(ModelError):
        Coefficient("affine", (("intercept", 1.0),))
    with pytest.raises(ModelError):
        Coefficient.from_dict({"value": 1.0})


def test_model_gates_and_round_trip():
    for bad in (
        dict(kappa=Coefficient.constant(0.0)),
        dict(mu=Coefficient.constant(-1.0)),
        dict(lam=Coefficient.constant(-3.0)),
        dict(chi=Coefficient.constant(0.0)),
        dict(P0=Coefficient.constant(1.0)),
        dict(rho_bar=0.0),
    ):
        with pytest.raises(ModelError):
            EquilibriumModel(**bad)
    m = EquilibriumModel(rho_bar=1.5, theta_bar=2.0, A_psi=0.5, P1=Coefficient.affine(0.0, 1.0))
    assert EquilibriumModel.from_dict(m.to_dict()) == m
    assert m.temperature_bar == 4.0
    with pytest.raises(ModelError):
        EquilibriumModel.from_dict({"viscosity": 1.0})


# --- pressure potential ----------------------------------------------------


def test_potential_at_equilibrium():
    m = EquilibriumModel(rho_bar=1.3)
    assert pressure_potential(1.3, m) == pytest.approx(-float(m.P0(1.3)), rel=1e-15)
    h = 1e-5
    d = (pressure_potential(1.3 + h, m) - pressure_potential(1.3 - h, m)) / (2 * h)
    assert abs(d) < 1e-8 * float(m.P0(1.3))


def test_potential_closed_form_vs_quadrature():
    m = EquilibriumModel()
    auto = pressure_potential(2.0, m)
    assert pressure_potential(2.0, m, method="quad") == pytest.approx(auto, rel=1e-10)
    # s^g/(g-1) construction for P0 = s^1.4, rho_bar = 1
    g = 1.4
    closed = 2.0 * ((2.0 ** (g - 1) - 1) / (g - 1) - 1.0)
    assert auto == pytest.approx(closed, rel=1e-13)


@pytest.mark.parametrize("p0", [Coefficient.power(1.0, 1.4), Coefficient.affine(0.2, 1.0), Coefficient.vdw(1.0, 0.1, 0.2)])
def test_potential_identity_and_convexity(p0):
    m = EquilibriumModel(P0=p0)
    s = np.linspace(0.3, 2.5, 50)
    h = 1e-5
    pi = pressure_potential(s, m)
    dpi = (pressure_potential(s + h, m) - pressure_potential(s - h, m)) / (2 * h)
    assert np.allclose(s * dpi - pi, p0(s), rtol=1e-8, atol=1e-8)
    h2 = 1e-3
    d2 = (pressure_potential(s + h2, m) - 2 * pi + pressure_potential(s - h2, m)) / h2**2
    if np.all(p0.deriv(s) >= 0):
        assert np.all(d2 >= -1e-10)


def test_potential_rejects_nonpositive():
    with pytest.raises(DomainError):
        pressure_potential(0.0, EquilibriumModel())


# --- flow state ------------------------------------------------------------


def test_flow_state_validation():
    g = GridSpec(2, 16)
    z = SpectralField.zeros(g)
    with pytest.raises(ArgumentError):
        FlowState(z, (z,), z)
    with pytest.raises(ArgumentError):
        FlowState(z, (z, SpectralField.zeros(GridSpec(2, 32))), z)
    s = smooth_random_state(g, 0.1, 0)
    assert len(s.components()) == 4
    assert np.all(np.abs(s.u_mean) < 1e-15) and abs(s.T_mean) < 1e-15
    assert s.min_density_ratio() >= 0.9 - 1e-12


def test_smooth_random_state_is_seeded():
    g = GridSpec(1, 32)
    a, b = smooth_random_state(g, 0.1, 5), smooth_random_state(g, 0.1, 5)
    assert all(np.array_equal(x.coeffs, y.coeffs) for x, y in zip(a.components(), b.components()))
    assert np.abs(a.q.real()).max() == pytest.approx(0.1)
    assert np.abs(smooth_random_state(g, 0.1, 5, with_temperature=False).T.coeffs).max() == 0


# --- Korteweg force ----------------------------------------------------------


def test_korteweg_of_constant_density_vanishes():
    g = GridSpec(2, 32)
    rho = SpectralField.constant(g, 1.5)
    for form in ("reduced", "tensor"):
        assert max(np.abs(f.coeffs).max() for f in korteweg_force(rho, EquilibriumModel(), form)) == 0.0


def test_korteweg_constant_kappa_reduces_to_gradient_of_laplacian():
    g = GridSpec(1, 64)
    x = g.coordinates()[0]
    rho = SpectralField.from_real(g, 2 + 0.1 * np.sin(x))
    (f,) = korteweg_force(rho, EquilibriumModel(kappa=Coefficient.constant(0.7)))
    expected = (2 + 0.1 * np.sin(x)) * 0.7 * (-0.1 * np.cos(x))
    # third derivative amplifies round-off by about k_max^3
    assert np.allclose(f.real(), expected, atol=1e-11)


@pytest.mark.parametrize("kappa", [Coefficient.affine(0.0, 1.0), Coefficient.power(1.0, 1.5)], ids=["linear", "power"])
def test_korteweg_identity_two_forms(kappa):
    g = GridSpec(2, 128)
    x, y = g.coordinates()
    rho = SpectralField.from_real(g, 2 + 0.1 * np.sin(x) * np.cos(y))
    m = EquilibriumModel(kappa=kappa)
    a = np.stack([c.real() for c in korteweg_force(rho, m, "reduced")])
    b = np.stack([c.real() for c in korteweg_force(rho, m, "tensor")])
    assert np.abs(a - b).max() < 1e-8 * np.abs(a).max()


def test_korteweg_errors():
    g = GridSpec(1, 32)
    with pytest.raises(DomainError):
        korteweg_force(SpectralField.constant(g, -1.0), EquilibriumModel())
    with pytest.raises(ArgumentError):
        korteweg_force(SpectralField.constant(g, 1.0), EquilibriumModel(), "other")


# --- nonlinear terms --------------------------------------------------------


def test_nonlinear_terms_vanish_at_equilibrium():
    g = GridSpec(2, 16)
    f, gg, h = nonlinear_terms(FlowState.zeros(g), EquilibriumModel(P1=Coefficient.affine(0.1, 1.0)))
    assert np.abs(f.coeffs).max() == 0
    assert max(np.abs(c.coeffs).max() for c in gg) == 0
    assert np.abs(h.coeffs).max() == 0


def test_nonlinear_terms_for_divergence_free_velocity():
    g = GridSpec(2, 32)
    x, y = g.coordinates()
    # stream function sin(x) sin(2y)
    u = [2 * np.sin(x) * np.cos(2 * y), -np.cos(x) * np.sin(2 * y)]
    st_ = FlowState.from_real(g, np.zeros(g.shape), [0.1 * c for c in u], np.zeros(g.shape))
    model = EquilibriumModel(mu=Coefficient.constant(0.8), P1=Coefficient.affine(0.1, 1.0))
    f, _, h = nonlinear_terms(st_, model)
    assert np.abs(f.coeffs).max() < 1e-15
    d, _ = helmholtz_split(st_.u)
    assert np.abs(d.coeffs).max() < 1e-14
    from korteweg.spectral import gradient

    gu = np.array([[c.real() for c in gradient(uj)] for uj in st_.u])  # gu[j, i] = d_i u_j
    sym = gu + np.swapaxes(gu, 0, 1)
    expected = 0.8 * np.einsum("ij...,ji...->...", sym, gu)
    assert np.allclose(h.real(), expected, atol=1e-13)


def test_velocity_forcing_against_finite_differences():
    """1-D single mode with constant coefficients: the full momentum
    right-hand side minus its linearization, both by 4th-order stencils."""
    n, a = 256, 0.1
    g = GridSpec(1, n)
    x = g.coordinates()[0]
    h = g.spacing
    mu, lam, kap = 0.9, 0.3, 0.6
    model = EquilibriumModel(mu=Coefficient.constant(mu), lam=Coefficient.constant(lam), kappa=Coefficient.constant(kap))
    q = a * np.cos(x)
    u = a * np.sin(x)
    st_ = FlowState.from_real(g, q, [u], np.zeros(n))
    _, (gf,), _ = nonlinear_terms(st_, model)

    rho = 1 + q
    dq = _fd4(q, h)
    du = _fd4(u, h)
    ddu = _fd4(du, h)
    dddq = _fd4(_fd4(dq, h), h)
    p0p = model.P0.deriv(rho)
    full = -u * du + (2 * mu + lam) * ddu / rho - p0p * dq / rho + kap * dddq
    linear = (2 * mu + lam) * ddu - 1.4 * dq + kap * dddq
    ref = full - linear
    assert np.abs(gf.real() - ref).max() < 1e-5 * np.abs(ref).max()


def test_nonlinear_terms_are_quadratic():
    g = GridSpec(2, 32)
    base = smooth_random_state(g, 1.0, 3, max_mode=3)
    model = EquilibriumModel(kappa=Coefficient.affine(0.5, 0.5), P1=Coefficient.affine(0.1, 1.0))

    def size(s):
        f, gg, h = nonlinear_terms(base.scaled(s), model)
        return np.sqrt(np.sum(np.abs(f.coeffs) ** 2) + sum(np.sum(np.abs(c.coeffs) ** 2) for c in gg) + np.sum(np.abs(h.coeffs) ** 2))

    r2, r3 = size(1e-2) / 1e-4, size(1e-3) / 1e-6
    assert abs(r2 - r3) / r3 < 0.1


# --- energy and dissipation --------------------------------------------------


def test_energy_at_equilibrium_and_kinetic_only():
    g = GridSpec(2, 32)
    m = EquilibriumModel(rho_bar=1.2, theta_bar=0.8)
    assert energy_total(FlowState.zeros(g), m) == pytest.approx(1.2 * 0.8 * g.volume, rel=1e-14)
    x, y = g.coordinates()
    u = [0.1 * np.sin(y), 0.05 * np.cos(x)]
    st_ = FlowState.from_real(g, np.zeros(g.shape), u, np.zeros(g.shape))
    kinetic = 0.5 * 1.2 * np.sum(u[0] ** 2 + u[1] ** 2) * g.volume / g.npts
    assert energy_total(st_, m) - energy_total(FlowState.zeros(g), m) == pytest.approx(kinetic, rel=1e-12)


def test_energy_against_finite_difference_quadrature():
    n = 256
    g = GridSpec(1, n)
    x = g.coordinates()[0]
    h = g.spacing
    q = 0.01 * np.cos(2 * x) + 0.005 * np.sin(3 * x)
    u = 0.01 * np.sin(x)
    t = 0.01 * np.cos(x)
    m = EquilibriumModel(kappa=Coefficient.constant(0.8))
    rho = 1 + q
    dens = 0.5 * rho * u**2 + rho * (1 + t) + pressure_potential(rho, m) - pressure_potential(1.0, m) + 0.4 * _fd4(rho, h) ** 2
    ref = np.sum(dens) * h
    assert energy_total(FlowState.from_real(g, q, [u], t), m) == pytest.approx(ref, rel=1e-8)


def test_energy_requires_positive_density():
    g = GridSpec(1, 16)
    x = g.coordinates()[0]
    with pytest.raises(DomainError):
        energy_total(FlowState.from_real(g, -2 + 0 * x, [0 * x], 0 * x), EquilibriumModel())


def test_dissipation_examples():
    g = GridSpec(2, 64)
    m = EquilibriumModel(mu=Coefficient.constant(1.0), lam=Coefficient.constant(0.0))
    assert dissipation(FlowState.zeros(g), m) == 0.0
    x, y = g.coordinates()
    z = np.zeros(g.shape)
    const = FlowState.from_real(g, z, [z + 0.3, z - 1.0], z)
    assert dissipation(const, m) == 0.0
    shear = FlowState.from_real(g, z, [np.sin(y), z], z)
    # 2 mu D:D = cos^2 y, so the integral is 2 pi * pi
    assert dissipation(shear, m) == pytest.approx(2 * np.pi**2, rel=1e-13)
    assert dissipation(shear, m, "work") == pytest.approx(2 * np.pi**2, rel=1e-13)
    with pytest.raises(ArgumentError):
        dissipation(shear, m, "other")


def test_dissipation_forms_differ_by_mu_div_squared():
    g = GridSpec(1, 64)
    x = g.coordinates()[0]
    st_ = FlowState.from_real(g, 0 * x, [np.sin(2 * x)], 0 * x)
    m = EquilibriumModel(mu=Coefficient.constant(0.7), lam=Coefficient.constant(0.2))
    diff = dissipation(st_, m, "printed") - dissipation(st_, m, "work")
    assert diff == pytest.approx(0.7 * 4 * np.pi, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(-2, 2), st.floats(-2, 2))
def test_dissipation_is_galilean_invariant(seed, c1, c2):
    g = GridSpec(2, 16)
    s = smooth_random_state(g, 0.1, seed, max_mode=3)
    m = EquilibriumModel(mu=Coefficient.affine(0.5, 0.5))
    shifted = FlowState(s.q, (s.u[0] + SpectralField.constant(g, c1), s.u[1] + SpectralField.constant(g, c2)), s.T)
    assert dissipation(shifted, m) == pytest.approx(dissipation(s, m), rel=1e-12)


def test_density_field():
    g = GridSpec(1, 16)
    x = g.coordinates()[0]
    st_ = FlowState.from_real(g, 0.1 * np.cos(x), [0 * x], 0 * x)
    rho = density_field(st_, EquilibriumModel(rho_bar=2.0))
    assert np.allclose(rho.real(), 2.0 * (1 + 0.1 * np.cos(x)))
