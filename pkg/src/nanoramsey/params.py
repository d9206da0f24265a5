"""Experiment parameters, validation, and the spin-dependent force convention.

The protocol: a nanodiamond holding NV spins is released from a harmonic trap
(angular frequency ``trap_omega``) whose axis is tilted by ``theta`` against
gravity, inside a magnetic field gradient ``b_gradient`` along that axis.
The spin projection s in {-1, 0, +1} feels the signed force

    F(s) = s * g_nv * mu_bohr * b_gradient - mass * g_earth * cos(theta)

with the magnetic term A = g_nv * mu_bohr * b_gradient and the gravity
component C = mass * g_earth * cos(theta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import IntEnum

from .constants import CODATA, DEFAULT_G_NV, PhysicalConstants


class ConfigError(ValueError):
    """Raised when a parameter map or config file fails validation."""


class SpinBranch(IntEnum):
    """Eigenvalue of the spin projection along the trap axis."""

    MINUS = -1
    ZERO = 0
    PLUS = 1


@dataclass(frozen=True)
class ExperimentParams:
    """All physical knobs of one protocol run (SI units throughout).

    mass            kg, of the test object
    b_gradient      T/m, magnetic field gradient along the flight axis
    theta           rad, tilt of the flight axis against gravity, [0, pi/2]
    t3              s, total flight time
    trap_omega      rad/s, trap angular frequency before release
    g_nv            Lande factor of the NV spin (dimensionless)
    t_internal      K, internal temperature of the object
    t_environment   K, temperature of the surrounding blackbody field
    t_cm            K, centre-of-mass temperature in the trap
    mw_frequency    Hz, microwave carrier used for spin control
    pulse_duration  s, duration of one control pulse
    n_nucleons      nucleon count used for collapse-model bounds
    radius          m, object radius (optional; needed by the decoherence model)
    density         kg/m^3 (optional; with radius it determines the mass)
    """

    mass: float
    b_gradient: float
    theta: float
    t3: float
    trap_omega: float
    mw_frequency: float
    pulse_duration: float
    t_internal: float
    t_environment: float
    t_cm: float
    g_nv: float = DEFAULT_G_NV
    n_nucleons: float | None = None
    radius: float | None = None
    density: float | None = None
    constants: PhysicalConstants = field(default=CODATA)

    def __post_init__(self):
        _require(self.mass > 0.0, "mass", "must be > 0")
        _require(self.t3 > 0.0, "t3", "must be > 0")
        _require(self.trap_omega > 0.0, "trap_omega", "must be > 0")
        _require(0.0 <= self.theta <= math.pi / 2.0, "theta", "must lie in [0, pi/2]")
        for name in ("t_internal", "t_environment", "t_cm"):
            _require(getattr(self, name) >= 0.0, name, "must be >= 0")
        _require(self.mw_frequency > 0.0, "mw_frequency", "must be > 0")
        _require(self.pulse_duration > 0.0, "pulse_duration", "must be > 0")
        if self.radius is not None:
            _require(self.radius > 0.0, "radius", "must be > 0")
        if self.density is not None:
            _require(self.density > 0.0, "density", "must be > 0")
        if self.n_nucleons is None:
            object.__setattr__(self, "n_nucleons", self.mass / self.constants.amu)
        _require(self.n_nucleons >= 1.0, "n_nucleons", "must be >= 1")

    # -- derived quantities ------------------------------------------------

    def spin_coupling(self) -> float:
        """Magnetic force per unit spin projection, A = g_nv mu_B dB/dx (N)."""
        return self.g_nv * self.constants.mu_bohr * self.b_gradient

    def gravity_force(self) -> float:
        """Axis projection of the weight, C = m g cos(theta) (N)."""
        return self.mass * self.constants.g_earth * math.cos(self.theta)

    def sigma0(self) -> float:
        """Ground-state width of the trapped packet, sqrt(hbar / 2 m omega) (m)."""
        return math.sqrt(self.constants.hbar / (2.0 * self.mass * self.trap_omega))


@dataclass(frozen=True)
class SpinForce:
    """Force decomposition for a parameter set with a non-negative gradient.

    magnitude          A = g_nv mu_B dB/dx (N), validated >= 0
    gravity_component  C = m g cos(theta) (N)

    The signed branch force for spin s is s * magnitude - gravity_component.
    """

    magnitude: float
    gravity_component: float

    def __post_init__(self):
        if self.magnitude < 0.0:
            raise ValueError("spin force magnitude must be >= 0; flip the gradient sign instead")

    @classmethod
    def from_params(cls, params: ExperimentParams) -> "SpinForce":
        return cls(magnitude=params.spin_coupling(), gravity_component=params.gravity_force())

    def on_branch(self, s: int) -> float:
        return s * self.magnitude - self.gravity_component


def branch_force(params: ExperimentParams, s: SpinBranch | int) -> float:
    """Signed force (N) along the flight axis for spin projection ``s``.

    Works for any integer projection, which covers single spins (|s| <= 1)
    and collective sectors alike.
    """
    return int(s) * params.spin_coupling() - params.gravity_force()


# -- configuration ---------------------------------------------------------

_DERIVED_MASS_RTOL = 1e-12

_PARAM_KEYS = {
    "mass", "radius", "density", "b_gradient", "theta", "t3", "trap_omega",
    "g_nv", "t_internal", "t_environment", "t_cm", "mw_frequency",
    "pulse_duration", "n_nucleons", "g_earth",
}
_SEQUENCE_KEYS = {"t1", "t2", "jitter_t1", "jitter_t2", "jitter_t3"}
_EXTRA_KEYS = {"seed", "response_im", "response_mod_sq"}
KNOWN_CONFIG_KEYS = _PARAM_KEYS | _SEQUENCE_KEYS | _EXTRA_KEYS

_MANDATORY = ("b_gradient", "theta", "t3", "trap_omega", "mw_frequency",
              "pulse_duration", "t_internal", "t_environment", "t_cm")


def sphere_mass(radius: float, density: float) -> float:
    """Mass of a homogeneous sphere (kg)."""
    return 4.0 / 3.0 * math.pi * radius**3 * density


def build_params(config: dict) -> ExperimentParams:
    """Validate a flat key/value map (SI units) into :class:`ExperimentParams`.

    The mass may be given directly, derived from ``radius`` and ``density``,
    or both; when all three are present they must agree to 1e-12 relative,
    otherwise the conflict is reported instead of silently resolved.
    """
    unknown = set(config) - KNOWN_CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    missing = [k for k in _MANDATORY if k not in config]
    if missing:
        raise ConfigError(f"missing mandatory config key(s): {', '.join(missing)}")

    mass = config.get("mass")
    radius = config.get("radius")
    density = config.get("density")
    if mass is None:
        if radius is None or density is None:
            raise ConfigError("missing mandatory config key(s): mass (or radius and density)")
        if radius <= 0 or density <= 0:
            raise ConfigError("radius and density must be > 0 to derive the mass")
        mass = sphere_mass(radius, density)
    elif radius is not None and density is not None:
        derived = sphere_mass(radius, density)
        if abs(derived - mass) > _DERIVED_MASS_RTOL * abs(mass):
            raise ConfigError(
                f"mass={mass!r} conflicts with radius/density (sphere mass {derived!r}); "
                "drop one of the keys"
            )

    constants = CODATA
    if "g_earth" in config:
        if not config["g_earth"] > 0:
            raise ConfigError("g_earth must be > 0")
        constants = PhysicalConstants(g_earth=float(config["g_earth"]))

    kwargs = {
        "mass": float(mass),
        "constants": constants,
    }
    for key in ("b_gradient", "theta", "t3", "trap_omega", "mw_frequency",
                "pulse_duration", "t_internal", "t_environment", "t_cm"):
        kwargs[key] = float(config[key])
    for key in ("g_nv", "n_nucleons", "radius", "density"):
        if key in config and config[key] is not None:
            kwargs[key] = float(config[key])
    try:
        return ExperimentParams(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config_text(text: str) -> dict:
    """Parse the flat ``key = value`` config format.

    One assignment per line, ``#`` starts a comment, values are numbers.
    Unknown keys are rejected by :func:`build_params`, not here, so that
    callers can carve off their own keys first.
    """
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            out[key] = int(value) if key == "seed" else float(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: could not parse value for {key!r}: {value!r}") from exc
    return out


def load_config(path) -> dict:
    """Read and parse a config file; returns the raw key/value map."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _require(cond: bool, key: str, message: str):
    if not cond:
        raise ConfigError(f"{key} {message}")
