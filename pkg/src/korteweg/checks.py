"""Numerical experiments behind the ``check`` command.

Each suite returns a plain dict with ``suite``, ``passed`` and a
``details`` mapping suitable for JSON output.
"""
from __future__ import annotations

import numpy as np

from .besov import derivative_equivalence_ratio, product_law_ratio, random_bandlimited
from .dyadic import DyadicDecomposition
from .physics import Coefficient, EquilibriumModel, korteweg_force, smooth_random_state
from .solver import heat_smoothing_check, picard_iterate
from .spectral import GridSpec, SpectralField

SUITES = ("product-law", "derivative-equivalence", "heat-smoothing", "korteweg-identity", "picard-contraction")

# log(max/min) of the derivative-equivalence ratio over 100 fields; chosen
# after the first run and kept fixed
DERIVATIVE_SPREAD_LIMIT = 2.0
REFINEMENT_DRIFT_LIMIT = 0.10
KORTEWEG_TOLERANCE = 1e-8
PICARD_RATIO_LIMIT = 0.9


def _drift(a: float, b: float) -> float:
    return abs(b - a) / abs(a)


def product_law_suite(seed: int = 0, samples: int = 200) -> dict:
    """Empirical product-law constant in 2-D; stable under 64 -> 128 refinement."""
    stats = {n: product_law_ratio(samples, 1.0, 1.0, 1.0, 1.0, GridSpec(2, n), seed) for n in (64, 128)}
    drift = _drift(stats[64].max, stats[128].max)
    ok = bool(np.isfinite(stats[128].max) and drift < REFINEMENT_DRIFT_LIMIT)
    return {
        "suite": "product-law",
        "passed": ok,
        "details": {"constant_64": stats[64].max, "constant_128": stats[128].max, "drift": drift, "stats_128": stats[128].to_dict()},
    }


def derivative_equivalence_suite(seed: int = 0, samples: int = 100) -> dict:
    stats = derivative_equivalence_ratio(samples, 1.0, GridSpec(2, 64), seed)
    spread = float(np.log(stats.max / stats.min))
    in_bounds = 0.75 <= stats.min and stats.max <= 8.0 / 3.0
    return {
        "suite": "derivative-equivalence",
        "passed": bool(spread < DERIVATIVE_SPREAD_LIMIT and in_bounds),
        "details": {"log_spread": spread, "limit": DERIVATIVE_SPREAD_LIMIT, "stats": stats.to_dict()},
    }


def heat_smoothing_suite(seed: int = 0, samples: int = 20) -> dict:
    """Worst-case smoothing ratio for ``rho1 = rho2 = 1``, ``s = 0`` in 2-D."""
    worst = {}
    for n in (64, 128):
        grid = GridSpec(2, n)
        dec = DyadicDecomposition.from_grid(grid)
        ratios = [
            heat_smoothing_check(random_bandlimited(grid, np.random.default_rng([seed, i]), 8), 1.0, 1.0, 1.0, 1.0, 0.0, dec)["ratio"]
            for i in range(samples)
        ]
        worst[n] = float(max(ratios))
    drift = _drift(worst[64], worst[128])
    return {
        "suite": "heat-smoothing",
        "passed": bool(drift < REFINEMENT_DRIFT_LIMIT),
        "details": {"ratio_64": worst[64], "ratio_128": worst[128], "drift": drift},
    }


def smooth_density(grid: GridSpec, rng: np.random.Generator, base: float = 2.0, amplitude: float = 0.2) -> SpectralField:
    from .besov import hermitian_embed

    band = 4
    raw = rng.standard_normal((2 * band + 1,) * grid.dim) + 1j * rng.standard_normal((2 * band + 1,) * grid.dim)
    c = hermitian_embed(grid, raw, band)
    peak = np.abs(np.fft.ifftn(c).real * grid.npts).max()
    c = c * (amplitude / peak)
    c[(0,) * grid.dim] = base
    return SpectralField(grid, c)


KAPPA_FAMILIES = {
    "constant": Coefficient.constant(1.0),
    "affine": Coefficient.affine(0.5, 0.5),
    "power": Coefficient.power(1.0, 1.5),
}


def korteweg_errors(seed: int = 0, samples: int = 20, n: int = 128) -> dict:
    """Max relative difference between the two forms of the capillary force."""
    grid = GridSpec(2, n)
    out = {}
    for name, kappa in KAPPA_FAMILIES.items():
        model = EquilibriumModel(kappa=kappa)
        errs = []
        for i in range(samples):
            rho = smooth_density(grid, np.random.default_rng([seed, i]))
            a = np.stack([f.real() for f in korteweg_force(rho, model, "reduced")])
            b = np.stack([f.real() for f in korteweg_force(rho, model, "tensor")])
            errs.append(float(np.abs(a - b).max() / np.abs(a).max()))
        out[name] = max(errs)
    return out


def korteweg_identity_suite(seed: int = 0, samples: int = 20) -> dict:
    errs = korteweg_errors(seed, samples)
    return {
        "suite": "korteweg-identity",
        "passed": bool(max(errs.values()) < KORTEWEG_TOLERANCE),
        "details": {"max_relative_error": errs, "tolerance": KORTEWEG_TOLERANCE},
    }


def picard_contraction_suite(seed: int = 0, n_iters: int = 5) -> dict:
    grid = GridSpec(1, 128)
    model = EquilibriumModel()
    state = smooth_random_state(grid, 1e-2, seed)
    res = picard_iterate(state, model, 0.1, n_iters, 1e-3)
    d = res.difference_norms(grid)
    tail = d[1:]
    ratios = tail[1:] / tail[:-1]
    ok = bool(np.all(ratios < PICARD_RATIO_LIMIT))
    return {
        "suite": "picard-contraction",
        "passed": ok,
        "details": {"increments": d.tolist(), "ratios_from_iterate_2": ratios.tolist(), "limit": PICARD_RATIO_LIMIT},
    }


_RUNNERS = {
    "product-law": product_law_suite,
    "derivative-equivalence": derivative_equivalence_suite,
    "heat-smoothing": heat_smoothing_suite,
    "korteweg-identity": korteweg_identity_suite,
    "picard-contraction": picard_contraction_suite,
}


def run_suite(name: str, seed: int = 0) -> list[dict]:
    if name == "all":
        return [_RUNNERS[s](seed) for s in SUITES]
    return [_RUNNERS[name](seed)]
