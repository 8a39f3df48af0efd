"""Run configuration: INI parsing with full validation, and initial data.

Format: INI sections [grid], [model], [physical], [run], [initial],
[diagnostics]; lowercase snake_case keys; ``#`` comments.  Unknown sections
or keys are errors, as are missing required keys and constraint violations;
every error names the key and the violated rule.  Parsing is total: any
input text yields either a validated :class:`SimulationConfig` or a
:class:`ConfigError` carrying the full error list, never a crash.

Random initial fields use a counter-based generator (Philox) keyed by the
config seed, with one draw block per wavevector in a resolution-independent
ring ordering: identical configs produce bit-identical fields, and the same
seed at a finer resolution extends the coarse field instead of reshuffling
it (coarse initial data are then truncations of one underlying field, which
the resolution study relies on).
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constitutive import ConstitutiveModel, PhysicalParams, F_KINDS, SYSTEM_VARIANTS
from .galerkin import State, StepControl
from .spectral import (
    GridSpec,
    SpectralTensorField,
    SpectralVectorField,
    hermitianize,
    l2_norm,
    leray_project,
    to_spectral,
    zero_tensor_field,
    zero_vector_field,
)

__all__ = [
    "ConfigError",
    "SimulationConfig",
    "RunSettings",
    "InitialSpec",
    "DiagnosticsSpec",
    "parse_config",
    "load_config",
    "build_initial",
    "VELOCITY_KINDS",
    "STRESS_KINDS",
]

VELOCITY_KINDS = ("zero", "taylor_green", "random_smooth")
STRESS_KINDS = ("zero", "random_smooth", "scaled_identity_mode")

_SECTIONS = ("grid", "model", "physical", "run", "initial", "diagnostics")

_BOOL_STATES = {
    "true": True, "yes": True, "on": True, "1": True,
    "false": False, "no": False, "off": False, "0": False,
}


class ConfigError(Exception):
    """Validation failure; ``errors`` lists every offending key and rule."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class RunSettings:
    t_end: float
    ctrl: StepControl
    snapshot_interval: float  # 0 disables interval snapshots
    ledger_interval: float    # 0 writes every accepted step
    freeze_velocity: bool


@dataclass(frozen=True)
class InitialSpec:
    velocity_kind: str
    velocity_seed: int
    velocity_spectrum_slope: float
    velocity_amplitude: float
    stress_kind: str
    stress_seed: int
    stress_spectrum_slope: float
    stress_amplitude: float


@dataclass(frozen=True)
class DiagnosticsSpec:
    tail_thresholds: tuple
    r_split: float
    enable_decomposition: bool


@dataclass(frozen=True)
class SimulationConfig:
    grid: GridSpec
    model: ConstitutiveModel
    params: PhysicalParams
    run: RunSettings
    initial: InitialSpec
    diagnostics: DiagnosticsSpec

    def with_resolution(self, modes_per_axis: int) -> "SimulationConfig":
        """Same configuration on a different grid (resolution studies)."""
        return dataclasses.replace(self, grid=GridSpec(int(modes_per_axis)))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _parse_bool(text: str) -> bool:
    try:
        return _BOOL_STATES[text.strip().lower()]
    except KeyError:
        raise ValueError("expected a boolean (true/false)")


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_float(text: str) -> float:
    value = float(text.strip())
    if math.isnan(value):
        raise ValueError("nan is not a valid value")
    return value


def _parse_float_list(text: str) -> tuple:
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(float(item) for item in items)


def _parse_choice(choices) -> Callable[[str], str]:
    def parse(text: str) -> str:
        value = text.strip()
        if value not in choices:
            raise ValueError(f"must be one of {', '.join(choices)}")
        return value

    return parse


# key -> (parser, required, default); defaults are ignored for required keys
_SCHEMA = {
    "grid": {
        "modes_per_axis": (_parse_int, True, None),
    },
    "model": {
        "f_kind": (_parse_choice(F_KINDS), True, None),
        "p_exp": (_parse_float, True, None),
        "system_variant": (_parse_choice(SYSTEM_VARIANTS), True, None),
        "nu0": (_parse_float, False, 1.0),
    },
    "physical": {
        "weissenberg": (_parse_float, True, None),
        "theta": (_parse_float, True, None),
        "lambda": (_parse_float, True, None),
        "r": (_parse_float, True, None),
        "nu": (_parse_float, True, None),
    },
    "run": {
        "t_end": (_parse_float, True, None),
        "dt_init": (_parse_float, False, 1e-3),
        "dt_min": (_parse_float, False, 1e-10),
        "dt_max": (_parse_float, False, 0.1),
        "rel_tol": (_parse_float, False, 1e-8),
        "abs_tol": (_parse_float, False, 1e-10),
        "blowup_threshold": (_parse_float, False, 1e12),
        "snapshot_interval": (_parse_float, False, 0.0),
        "ledger_interval": (_parse_float, False, 0.0),
        "freeze_velocity": (_parse_bool, False, False),
    },
    "initial": {
        "velocity_kind": (_parse_choice(VELOCITY_KINDS), False, "zero"),
        "velocity_seed": (_parse_int, False, 0),
        "velocity_spectrum_slope": (_parse_float, False, 2.0),
        "velocity_amplitude": (_parse_float, False, 1.0),
        "stress_kind": (_parse_choice(STRESS_KINDS), False, "zero"),
        "stress_seed": (_parse_int, False, 0),
        "stress_spectrum_slope": (_parse_float, False, 2.0),
        "stress_amplitude": (_parse_float, False, 1.0),
    },
    "diagnostics": {
        "tail_thresholds": (_parse_float_list, False, (0.5, 1.0, 2.0, 4.0)),
        "r_split": (_parse_float, False, 1.0),
        "enable_decomposition": (_parse_bool, False, False),
    },
}


def _read_sections(text: str, errors: list) -> dict:
    parser = configparser.ConfigParser(
        interpolation=None,
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        strict=True,
    )
    try:
        parser.read_string(text)
    except (configparser.Error, ValueError) as exc:
        errors.append(f"parse error: {exc}")
        return {}
    if parser.defaults():
        errors.append("unknown section: DEFAULT")
    values: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            errors.append(f"unknown section: [{section}]")
            continue
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                errors.append(f"unknown key: {section}.{key}")
    for section, keys in _SCHEMA.items():
        values[section] = {}
        for key, (parse, required, default) in keys.items():
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                try:
                    values[section][key] = parse(raw)
                except (ValueError, OverflowError) as exc:
                    errors.append(f"invalid value for {section}.{key}: {exc}")
            elif required:
                errors.append(f"missing required key: {section}.{key}")
            else:
                values[section][key] = default
    return values


def parse_config(text: str) -> SimulationConfig:
    """Parse and fully validate configuration text.

    Raises :class:`ConfigError` with the complete list of problems; never
    raises anything else on string input.
    """
    errors: list = []
    values = _read_sections(text, errors)
    if errors and not values:
        raise ConfigError(errors)

    def section_ok(name: str) -> bool:
        return all(key in values.get(name, {}) for key in _SCHEMA[name])

    grid = model = params = None
    if section_ok("grid"):
        try:
            grid = GridSpec(values["grid"]["modes_per_axis"])
        except ValueError as exc:
            errors.append(f"grid.modes_per_axis: {exc}")
    if section_ok("model") and section_ok("physical"):
        m, p = values["model"], values["physical"]
        if m["f_kind"] in ("power_additive", "power_quadratic") and m["p_exp"] <= 2.0:
            errors.append(
                "model.p_exp: power constitutive kinds require p_exp > 2 "
                "(2-D existence range p in ]2, inf["
            )
        try:
            model = ConstitutiveModel(
                f_kind=m["f_kind"],
                p_exp=m["p_exp"],
                lam=p["lambda"],
                r_exp=p["r"],
                system_variant=m["system_variant"],
                nu0=m["nu0"],
            )
        except ValueError as exc:
            errors.append(f"model/physical: {exc}")
        try:
            params = PhysicalParams(
                weissenberg=p["weissenberg"],
                theta=p["theta"],
                lam=p["lambda"],
                nu_mono=p["nu"],
            )
        except ValueError as exc:
            errors.append(f"physical: {exc}")

    run_settings = None
    if section_ok("run"):
        r = values["run"]
        if r["t_end"] < 0.0:
            errors.append("run.t_end: must be nonnegative")
        for key in ("snapshot_interval", "ledger_interval"):
            if r[key] < 0.0:
                errors.append(f"run.{key}: must be nonnegative")
        try:
            ctrl = StepControl(
                dt_init=r["dt_init"],
                dt_min=r["dt_min"],
                dt_max=r["dt_max"],
                rel_tol=r["rel_tol"],
                abs_tol=r["abs_tol"],
                blowup_threshold=r["blowup_threshold"],
            )
        except ValueError as exc:
            errors.append(f"run: {exc}")
            ctrl = None
        if ctrl is not None and r["t_end"] >= 0.0:
            run_settings = RunSettings(
                t_end=r["t_end"],
                ctrl=ctrl,
                snapshot_interval=r["snapshot_interval"],
                ledger_interval=r["ledger_interval"],
                freeze_velocity=r["freeze_velocity"],
            )

    initial = None
    if section_ok("initial"):
        i = values["initial"]
        for key in ("velocity_amplitude", "stress_amplitude"):
            if i[key] < 0.0:
                errors.append(f"initial.{key}: must be nonnegative")
        initial = InitialSpec(
            velocity_kind=i["velocity_kind"],
            velocity_seed=i["velocity_seed"],
            velocity_spectrum_slope=i["velocity_spectrum_slope"],
            velocity_amplitude=i["velocity_amplitude"],
            stress_kind=i["stress_kind"],
            stress_seed=i["stress_seed"],
            stress_spectrum_slope=i["stress_spectrum_slope"],
            stress_amplitude=i["stress_amplitude"],
        )

    diag = None
    if section_ok("diagnostics"):
        d = values["diagnostics"]
        thresholds = d["tail_thresholds"]
        if any(b < a for a, b in zip(thresholds, thresholds[1:])):
            errors.append("diagnostics.tail_thresholds: must be sorted ascending")
        if d["r_split"] <= 0.0:
            errors.append("diagnostics.r_split: must be positive")
        diag = DiagnosticsSpec(
            tail_thresholds=thresholds,
            r_split=d["r_split"],
            enable_decomposition=d["enable_decomposition"],
        )

    if errors:
        raise ConfigError(errors)
    return SimulationConfig(grid, model, params, run_settings, initial, diag)


def load_config(path) -> SimulationConfig:
    """Read a config file (UTF-8) and parse it."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read config file: {exc}"])
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError([f"config file is not valid UTF-8: {exc}"])
    return parse_config(text)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def _ring_modes(cutoff: int) -> list:
    """Nonzero retained wavevectors in ring order (resolution-independent)."""
    modes = []
    for radius in range(1, cutoff + 1):
        ring = [
            (k1, k2)
            for k1 in range(-radius, radius + 1)
            for k2 in range(-radius, radius + 1)
            if max(abs(k1), abs(k2)) == radius
        ]
        modes.extend(sorted(ring))
    return modes


def _mode_draws(seed: int, cutoff: int, per_mode: int) -> tuple:
    rng = np.random.Generator(np.random.Philox(seed))
    modes = _ring_modes(cutoff)
    draws = rng.standard_normal(len(modes) * per_mode).reshape(len(modes), per_mode)
    return modes, draws


def _spectrum_weight(k1: int, k2: int, slope: float) -> float:
    return (1.0 + math.hypot(k1, k2)) ** (-slope)


def _random_velocity(grid: GridSpec, seed: int, slope: float, amplitude: float
                     ) -> SpectralVectorField:
    n = grid.modes_per_axis
    coeffs = np.zeros((2, n, n), dtype=np.complex128)
    modes, draws = _mode_draws(seed, grid.cutoff, 4)
    for (k1, k2), row in zip(modes, draws):
        weight = _spectrum_weight(k1, k2, slope)
        coeffs[0, k1 % n, k2 % n] = weight * (row[0] + 1j * row[1])
        coeffs[1, k1 % n, k2 % n] = weight * (row[2] + 1j * row[3])
    field = leray_project(hermitianize(coeffs), grid)
    norm = l2_norm(field)
    if norm == 0.0 or amplitude == 0.0:
        return zero_vector_field(grid)
    return field * (amplitude / norm)


def _random_stress(grid: GridSpec, seed: int, slope: float, amplitude: float
                   ) -> SpectralTensorField:
    n = grid.modes_per_axis
    isq2 = 1.0 / math.sqrt(2.0)
    coeffs = np.zeros((2, 2, n, n), dtype=np.complex128)
    modes, draws = _mode_draws(seed, grid.cutoff, 6)
    for (k1, k2), row in zip(modes, draws):
        weight = _spectrum_weight(k1, k2, slope)
        w11 = weight * (row[0] + 1j * row[1])
        w22 = weight * (row[2] + 1j * row[3])
        w12 = weight * (row[4] + 1j * row[5]) * isq2
        coeffs[0, 0, k1 % n, k2 % n] = w11
        coeffs[1, 1, k1 % n, k2 % n] = w22
        coeffs[0, 1, k1 % n, k2 % n] = w12
        coeffs[1, 0, k1 % n, k2 % n] = w12
    coeffs = hermitianize(coeffs)
    coeffs[:, :, 0, 0] = 0.0
    field = SpectralTensorField(coeffs, grid)
    norm = l2_norm(field)
    if norm == 0.0 or amplitude == 0.0:
        return zero_tensor_field(grid)
    return field * (amplitude / norm)


def _taylor_green(grid: GridSpec, amplitude: float) -> SpectralVectorField:
    x, y = grid.physical_coords()
    vals = amplitude * np.stack((np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)))
    return leray_project(to_spectral(vals, grid), grid)


def _identity_mode_stress(grid: GridSpec, amplitude: float) -> SpectralTensorField:
    n = grid.modes_per_axis
    coeffs = np.zeros((2, 2, n, n), dtype=np.complex128)
    for idx in (0, 1):
        coeffs[idx, idx, 1 % n, 0] = 0.5 * amplitude
        coeffs[idx, idx, (-1) % n, 0] = 0.5 * amplitude
    return SpectralTensorField(coeffs, grid)


def build_initial(config: SimulationConfig) -> State:
    """Construct the initial state: evaluate, truncate, project.

    Deterministic per configuration (counter-based draws, fixed traversal
    order): identical configs produce bit-identical states.
    """
    grid, spec = config.grid, config.initial
    if spec.velocity_kind == "zero":
        v = zero_vector_field(grid)
    elif spec.velocity_kind == "taylor_green":
        v = _taylor_green(grid, spec.velocity_amplitude)
    else:
        v = _random_velocity(
            grid, spec.velocity_seed, spec.velocity_spectrum_slope, spec.velocity_amplitude
        )
    if spec.stress_kind == "zero":
        tau = zero_tensor_field(grid)
    elif spec.stress_kind == "scaled_identity_mode":
        tau = _identity_mode_stress(grid, spec.stress_amplitude)
    else:
        tau = _random_stress(
            grid, spec.stress_seed, spec.stress_spectrum_slope, spec.stress_amplitude
        )
    return State(v, tau, 0.0)
