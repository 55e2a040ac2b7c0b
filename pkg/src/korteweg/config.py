"""TOML run configuration for the ``simulate`` command."""
from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, KortewegError
from .physics import EquilibriumModel, FlowState, smooth_random_state
from .solver import NormSpec, SolverConfig
from .spectral import GridSpec, read_kwf

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SECTIONS = {
    "grid": {"dim", "points_per_dim", "domain_length"},
    "model": {"rho_bar", "theta_bar", "A_psi", "mu", "lambda", "kappa", "chi", "P0", "P1"},
    "solver": {"dt", "t_end", "order", "snapshot_every", "dealias", "positivity_floor"},
    "initial": {"amplitude", "max_mode", "file", "temperature"},
    "diagnostics": {"norms"},
    "seed": {"value"},
}


@dataclass(frozen=True)
class InitialSpec:
    amplitude: float = 1e-2
    max_mode: int = 4
    file: str | None = None
    temperature: bool = True


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    model: EquilibriumModel
    solver: SolverConfig
    initial: InitialSpec
    norms: tuple
    seed: int
    raw: dict
    base_dir: Path

    def initial_state(self) -> FlowState:
        """Seeded smooth datum, or the samples of a KWF1 file laid out as ``q, u_1..u_N, T``."""
        if self.initial.file is None:
            return smooth_random_state(self.grid, self.initial.amplitude, self.seed, self.initial.max_mode, self.initial.temperature)
        path = Path(self.initial.file)
        if not path.is_absolute():
            path = self.base_dir / path
        grid, data = read_kwf(path)
        if grid != self.grid:
            raise ConfigError(f"initial file grid {grid} differs from [grid]")
        if data.shape[0] != grid.dim + 2:
            raise ConfigError(f"initial file needs {grid.dim + 2} components, found {data.shape[0]}")
        return FlowState.from_real(grid, data[0], list(data[1:-1]), data[-1])


def _check_keys(raw: dict) -> None:
    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown sections: {unknown}")
    for name, allowed in SECTIONS.items():
        section = raw.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"[{name}] must be a table")
        extra = sorted(set(section) - allowed)
        if extra:
            raise ConfigError(f"unknown keys in [{name}]: {extra}")


def parse_config(raw: dict, base_dir: Path | str = ".", seed_override: int | None = None) -> RunConfig:
    _check_keys(raw)
    try:
        g = raw.get("grid", {})
        grid = GridSpec(int(g.get("dim", 1)), int(g.get("points_per_dim", 128)), float(g.get("domain_length", 6.283185307179586)))
        model = EquilibriumModel.from_dict(raw.get("model", {}))
        s = raw.get("solver", {})
        solver = SolverConfig(
            dt=float(s.get("dt", 1e-3)),
            t_end=float(s.get("t_end", 0.1)),
            order=int(s.get("order", 2)),
            snapshot_every=int(s.get("snapshot_every", 10)),
            dealias=bool(s.get("dealias", True)),
            positivity_floor=float(s.get("positivity_floor", 1e-8)),
        )
        i = raw.get("initial", {})
        initial = InitialSpec(float(i.get("amplitude", 1e-2)), int(i.get("max_mode", 4)), i.get("file"), bool(i.get("temperature", True)))
        norms = []
        for entry in raw.get("diagnostics", {}).get("norms", []):
            extra = sorted(set(entry) - {"field", "s", "t", "split"})
            if extra:
                raise ConfigError(f"unknown keys in a diagnostics norm: {extra}")
            s_val = float(entry["s"])
            norms.append(NormSpec(str(entry.get("field", "q")), s_val, float(entry.get("t", s_val)), int(entry.get("split", 0))))
        seed = int(raw.get("seed", {}).get("value", 0))
    except ConfigError:
        raise
    except (KortewegError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if seed_override is not None:
        seed = int(seed_override)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if 3 * initial.max_mode >= grid.points_per_dim:
        raise ConfigError("initial max_mode is not resolved on this grid")
    return RunConfig(grid, model, solver, initial, tuple(norms), seed, raw, Path(base_dir))


def load_config(path, seed_override: int | None = None) -> RunConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path}: {exc}") from exc
    return parse_config(raw, path.parent, seed_override)


def load_model(path) -> EquilibriumModel:
    """Read only the ``[model]`` section of a configuration file."""
    return load_config(path).model
