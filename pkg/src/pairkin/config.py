"""TOML scenario configuration: parsing, validation and object construction.

The dialect is TOML; every config is a flat set of sections. A complete
annotated example lives in ``configs/`` and in the README. Validation errors
carry the offending field path so the CLI can exit with a usable diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .models import Generator, MeasurementParams
from .propagate import MULTIPAIR_OBSERVABLES, ONE_PAIR_OBSERVABLES, TimeGrid
from .spin import (DIM, RateParams, STATE_PRESETS, make_hamiltonian, preset_state,
                   validate_state)

MODEL_KINDS = ("haberkorn", "measurement-only", "measurement-recombination",
               "measurement-recombination-rewritten", "jones-hore", "multipair")

DEFAULT_OBSERVABLES = ["trace", "pop_S", "pop_Tplus", "pop_T0", "pop_Tminus",
                       "coh_S_T0_re", "coh_S_T0_im", "flux_S", "flux_T"]


class ConfigError(Exception):
    """Configuration file problem; the message names the field at fault."""


def _require(table: dict, key: str, types, where: str):
    if key not in table:
        raise ConfigError(f"{where}: missing required key '{key}'")
    value = table[key]
    if not isinstance(value, types):
        raise ConfigError(f"{where}.{key}: expected {_type_names(types)}, "
                          f"got {type(value).__name__}")
    return value

def _optional(table: dict, key: str, types, where: str, default=None):
    if key not in table:
        return default
    value = table[key]
    if not isinstance(value, types):
        raise ConfigError(f"{where}.{key}: expected {_type_names(types)}, "
                          f"got {type(value).__name__}")
    return value


def _type_names(types):
    if not isinstance(types, tuple):
        types = (types,)
    return " or ".join(t.__name__ for t in types)


def _reject_unknown(table: dict, allowed, where: str) -> None:
    unknown = [k for k in table if k not in allowed]
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}; "
                          f"allowed: {', '.join(sorted(allowed))}")


_NUM = (int, float)


@dataclass
class ModelSpec:
    """One model entry: kind plus its rate/measurement parameters."""

    kind: str
    rates: RateParams = None
    measurement: MeasurementParams = None
    n_max: int = None  # multipair only; default = initial max occupancy

    def build_generator(self, h: np.ndarray) -> Generator:
        if self.kind == "multipair":
            raise ConfigError("multipair model has no one-pair generator")
        if self.kind == "haberkorn":
            return Generator.haberkorn(h, self.rates)
        if self.kind == "measurement-only":
            return Generator.measurement_only(h, self.measurement.k)
        if self.kind == "measurement-recombination":
            return Generator.measurement_recombination(h, self.measurement)
        if self.kind == "measurement-recombination-rewritten":
            return Generator.measurement_recombination_rewritten(h, self.measurement)
        if self.kind == "jones-hore":
            return Generator.jones_hore(h, self.measurement.ktilde_S,
                                        self.measurement.ktilde_T)
        raise ConfigError(f"unknown model kind {self.kind!r}")


def parse_model(table: dict, where: str) -> ModelSpec:
    kind = _require(table, "kind", str, where)
    if kind not in MODEL_KINDS:
        raise ConfigError(f"{where}.kind: unknown model {kind!r}; "
                          f"expected one of {', '.join(MODEL_KINDS)}")
    allowed = {
        "haberkorn": ("kind", "kS", "kT"),
        "multipair": ("kind", "kS", "kT", "n_max"),
        "measurement-only": ("kind", "k"),
        "measurement-recombination": ("kind", "k", "pS", "pT"),
        "measurement-recombination-rewritten": ("kind", "k", "pS", "pT"),
        "jones-hore": ("kind", "ktilde_S", "ktilde_T"),
    }[kind]
    _reject_unknown(table, allowed, where)
    try:
        if kind in ("haberkorn", "multipair"):
            kS = float(_require(table, "kS", _NUM, where))
            kT = float(_require(table, "kT", _NUM, where))
            if kS < 0:
                raise ConfigError(f"{where}.kS: must be nonnegative (got {kS})")
            if kT < 0:
                raise ConfigError(f"{where}.kT: must be nonnegative (got {kT})")
            n_max = _optional(table, "n_max", int, where)
            if n_max is not None and n_max < 1:
                raise ConfigError(f"{where}.n_max: must be at least 1 (got {n_max})")
            return ModelSpec(kind=kind, rates=RateParams(kS, kT), n_max=n_max)
        if kind == "measurement-only":
            k = float(_require(table, "k", _NUM, where))
            mp = MeasurementParams(k, 0.0, 0.0)
        elif kind == "jones-hore":
            ks = float(_require(table, "ktilde_S", _NUM, where))
            kt = float(_require(table, "ktilde_T", _NUM, where))
            if ks < 0 or kt < 0:
                raise ConfigError(f"{where}: ktilde_S and ktilde_T must be nonnegative")
            total = ks + kt
            mp = MeasurementParams(total, ks / total if total else 0.5,
                                   kt / total if total else 0.5)
        else:
            k = float(_require(table, "k", _NUM, where))
            pS = float(_require(table, "pS", _NUM, where))
            pT = float(_require(table, "pT", _NUM, where))
            mp = MeasurementParams(k, pS, pT)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return ModelSpec(kind=kind, measurement=mp)


def parse_hamiltonian(table: dict, where: str = "hamiltonian") -> np.ndarray:
    _reject_unknown(table, ("kind", "params"), where)
    kind = _require(table, "kind", str, where)
    params = _optional(table, "params", list, where, default=[])
    for i, p in enumerate(params):
        if not isinstance(p, _NUM):
            raise ConfigError(f"{where}.params[{i}]: expected a number, "
                              f"got {type(p).__name__}")
    try:
        return make_hamiltonian(kind, params)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass
class InitialSpec:
    preset: str
    alpha: complex = None
    beta: complex = None
    matrix: np.ndarray = None
    occupations: list = None
    count: int = 1

    @property
    def randomized(self) -> bool:
        return self.preset == "random"

    def build(self, rng: np.random.Generator = None) -> np.ndarray:
        if self.preset == "matrix":
            return self.matrix.copy()
        if self.preset == "fock":
            raise ConfigError("fock initial states only apply to multipair models")
        return preset_state(self.preset, alpha=self.alpha, beta=self.beta, rng=rng)


def _parse_complex(value, where: str) -> complex:
    if isinstance(value, _NUM):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and \
            all(isinstance(v, _NUM) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"{where}: expected a number or [re, im] pair")


def parse_initial(table: dict, where: str = "initial") -> InitialSpec:
    _reject_unknown(table, ("preset", "alpha", "beta", "re", "im",
                            "occupations", "count"), where)
    preset = _require(table, "preset", str, where)
    known = STATE_PRESETS + ("matrix", "fock")
    if preset not in known:
        raise ConfigError(f"{where}.preset: unknown preset {preset!r}; "
                          f"expected one of {', '.join(known)}")
    spec = InitialSpec(preset=preset)
    if preset == "coherent":
        spec.alpha = _parse_complex(_require(table, "alpha", (int, float, list), where),
                                    f"{where}.alpha")
        spec.beta = _parse_complex(_require(table, "beta", (int, float, list), where),
                                   f"{where}.beta")
    elif preset == "matrix":
        re = _require(table, "re", list, where)
        im = _optional(table, "im", list, where, default=[0.0] * (DIM * DIM))
        if len(re) != DIM * DIM or len(im) != DIM * DIM:
            raise ConfigError(f"{where}: re and im must hold {DIM * DIM} numbers each")
        m = (np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float)).reshape(DIM, DIM)
        report = validate_state(m, 1e-10)
        if not report.hermitian_ok:
            raise ConfigError(f"{where}: matrix is not Hermitian "
                              f"(defect {report.hermiticity_defect:.3e})")
        spec.matrix = m
    elif preset == "fock":
        occ = _require(table, "occupations", list, where)
        if len(occ) != DIM or not all(isinstance(n, int) and n >= 0 for n in occ):
            raise ConfigError(f"{where}.occupations: expected {DIM} nonnegative integers")
        spec.occupations = list(occ)
    elif preset == "random":
        count = _optional(table, "count", int, where, default=1)
        if count < 1:
            raise ConfigError(f"{where}.count: must be at least 1 (got {count})")
        spec.count = count
    return spec


def parse_grid(table: dict, where: str = "grid") -> TimeGrid:
    _reject_unknown(table, ("t0", "t_end", "n_steps"), where)
    t0 = float(_optional(table, "t0", _NUM, where, default=0.0))
    t_end = float(_require(table, "t_end", _NUM, where))
    n_steps = _require(table, "n_steps", int, where)
    try:
        return TimeGrid(t0, t_end, n_steps)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_observables(cfg: dict, multipair: bool, where: str = "observables") -> list:
    names = _optional(cfg, "observables", list, where=where,
                      default=list(DEFAULT_OBSERVABLES))
    vocabulary = MULTIPAIR_OBSERVABLES if multipair else ONE_PAIR_OBSERVABLES
    for name in names:
        if not isinstance(name, str) or name not in vocabulary:
            raise ConfigError(f"{where}: unknown observable {name!r}; "
                              f"expected one of {', '.join(vocabulary)}")
    if not names:
        raise ConfigError(f"{where}: list must not be empty")
    return list(names)


@dataclass
class RunConfig:
    name: str
    model: ModelSpec
    hamiltonian: np.ndarray
    initial: InitialSpec
    grid: TimeGrid
    observables: list
    seed: int = None


@dataclass
class CompareConfig:
    name: str
    model_a: ModelSpec
    model_b: ModelSpec
    hamiltonian: np.ndarray
    initial: InitialSpec
    grid: TimeGrid
    observables: list
    seed: int = None
    require_max_le: float = None
    require_max_gt: float = None


@dataclass
class BornMarkovConfig:
    name: str
    gamma: float
    delta: float
    coupling_ratios: list = field(default_factory=list)


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from None


def _parse_common(cfg: dict, path) -> tuple:
    name = _optional(cfg, "name", str, "config")
    if name is None:
        import os

        name = os.path.splitext(os.path.basename(str(path)))[0]
    seed = _optional(cfg, "seed", int, "config")
    h = parse_hamiltonian(_require(cfg, "hamiltonian", dict, "config"))
    initial = parse_initial(_require(cfg, "initial", dict, "config"))
    grid = parse_grid(_require(cfg, "grid", dict, "config"))
    if initial.randomized and seed is None:
        raise ConfigError("seed: required when initial.preset = 'random'")
    return name, seed, h, initial, grid


def parse_run_config(cfg: dict, path="config") -> RunConfig:
    _reject_unknown(cfg, ("name", "seed", "observables", "model",
                          "hamiltonian", "initial", "grid"), "config")
    model = parse_model(_require(cfg, "model", dict, "config"), "model")
    name, seed, h, initial, grid = _parse_common(cfg, path)
    if initial.preset == "fock" and model.kind != "multipair":
        raise ConfigError("initial.preset: 'fock' requires model.kind = 'multipair'")
    if initial.count != 1:
        raise ConfigError("initial.count: only compare scenarios accept "
                          "multiple random initial states")
    observables = parse_observables(cfg, multipair=model.kind == "multipair")
    return RunConfig(name=name, model=model, hamiltonian=h, initial=initial,
                     grid=grid, observables=observables, seed=seed)


def parse_compare_config(cfg: dict, path="config") -> CompareConfig:
    _reject_unknown(cfg, ("name", "seed", "observables", "model_a", "model_b",
                          "hamiltonian", "initial", "grid", "require"), "config")
    model_a = parse_model(_require(cfg, "model_a", dict, "config"), "model_a")
    model_b = parse_model(_require(cfg, "model_b", dict, "config"), "model_b")
    name, seed, h, initial, grid = _parse_common(cfg, path)
    if initial.preset == "fock":
        raise ConfigError("initial.preset: comparisons start from one-pair states")
    observables = parse_observables(cfg, multipair=False)
    require = _optional(cfg, "require", dict, "config", default={})
    _reject_unknown(require, ("max_deviation_le", "max_deviation_gt"), "require")
    max_le = _optional(require, "max_deviation_le", _NUM, "require")
    max_gt = _optional(require, "max_deviation_gt", _NUM, "require")
    return CompareConfig(name=name, model_a=model_a, model_b=model_b,
                         hamiltonian=h, initial=initial, grid=grid,
                         observables=observables, seed=seed,
                         require_max_le=None if max_le is None else float(max_le),
                         require_max_gt=None if max_gt is None else float(max_gt))


def parse_bornmarkov_config(cfg: dict, path="config") -> BornMarkovConfig:
    name = _optional(cfg, "name", str, "config")
    if name is None:
        import os

        name = os.path.splitext(os.path.basename(str(path)))[0]
    _reject_unknown(cfg, ("name", "bath", "ladder"), "config")
    bath = _require(cfg, "bath", dict, "config")
    _reject_unknown(bath, ("gamma", "delta"), "bath")
    gamma = float(_require(bath, "gamma", _NUM, "bath"))
    if gamma <= 0:
        raise ConfigError(f"bath.gamma: must be positive (got {gamma})")
    delta = float(_optional(bath, "delta", _NUM, "bath", default=0.0))
    ladder = _require(cfg, "ladder", dict, "config")
    _reject_unknown(ladder, ("coupling_ratios",), "ladder")
    ratios = _require(ladder, "coupling_ratios", list, "ladder")
    if not ratios or not all(isinstance(r, _NUM) and r >= 0 for r in ratios):
        raise ConfigError("ladder.coupling_ratios: expected a nonempty list of "
                          "nonnegative numbers")
    return BornMarkovConfig(name=name, gamma=gamma, delta=delta,
                            coupling_ratios=[float(r) for r in ratios])
