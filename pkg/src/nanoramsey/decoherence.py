"""Momentum-kick dephasing model and the visibility surface.

Environmental photons and gas particles kick the object with random
directions; a kick of wavenumber k resolves a superposition of separation
dx with probability governed by the isotropic sphere average of the kick
phase, whose closed form is 1 - sinc(k*dx). Summed over the spectral rate
densities gamma_i(omega) of all channels this gives the localization rate

    eta(dx) = sum_i  integral domega gamma_i(omega) * (1 - sinc(omega*dx/c))

and the worst-case spin visibility after a flight of duration t is
exp(-eta(dx_max) * t), evaluated at the peak separation (a strict upper
bound on the dephasing; the time-resolved refinement below is always
smaller).

Default channels. No public tabulation of the object's spectral response is
assumed. The built-in defaults use textbook point-dipole blackbody forms:
absorption and thermal emission use the cross-section
(omega/c) * 4 pi R^3 * Im[(eps-1)/(eps+2)], Rayleigh scattering uses
(8 pi/3) (omega/c)^4 R^6 |(eps-1)/(eps+2)|^2, each weighted by a Planck
photon flux at the relevant temperature. THE MATERIAL RESPONSE FACTORS ARE
ROUGH PLACEHOLDERS (constant Im[(eps-1)/(eps+2)] = 1e-3 and the static
permittivity 5.7 for the modulus), chosen so that the surface is
qualitatively right; ingest a measured response table for quantitative work.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .constants import CODATA
from .dynamics import PulseSequence, max_separation, separation_at
from .params import ExperimentParams

#: Default constant Im[(eps-1)/(eps+2)] used by absorption/emission channels.
DEFAULT_RESPONSE_IM = 1.0e-3
#: Static relative permittivity used for the default scattering response.
EPSILON_STATIC = 5.7
#: Default |(eps-1)/(eps+2)|^2 for the scattering channel.
DEFAULT_RESPONSE_MOD_SQ = ((EPSILON_STATIC - 1.0) / (EPSILON_STATIC + 2.0)) ** 2
#: Planck spectra are truncated at this multiple of kT/hbar (relative tail ~1e-17).
PLANCK_CUTOFF = 50.0

_SPEED_OF_LIGHT = CODATA.light_speed
_HBAR = CODATA.hbar
_KB = CODATA.k_boltzmann


class QuadratureError(RuntimeError):
    """A channel integral failed to converge under refinement."""


def angular_factor(k: float, delta_x: float) -> float:
    """Sphere-averaged which-path factor 1 - sinc(k*dx), sinc(z) = sin(z)/z.

    This is the closed form of 1 - (1/4pi) * integral dOmega exp(i k n_x dx);
    the imaginary part vanishes by the n_x -> -n_x symmetry. Ranges over
    [0, 2), -> 0 as k*dx -> 0 (no which-path information) and oscillates
    about 1 with a 1/(k*dx) envelope once the kick resolves the separation.
    """
    if k < 0.0 or delta_x < 0.0:
        raise ValueError("k and delta_x must be >= 0")
    return float(_angular_factor_array(np.asarray(k * delta_x)))


def _angular_factor_array(z) -> np.ndarray:
    # 1 - sinc(z) cancels catastrophically for small z; switch to the series
    z = np.asarray(z, dtype=float)
    z2 = z * z
    series = z2 / 6.0 - z2 * z2 / 120.0 + z2 * z2 * z2 / 5040.0
    with np.errstate(invalid="ignore"):
        direct = 1.0 - np.sinc(z / np.pi)
    return np.where(np.abs(z) < 0.1, series, direct)


# -- spectral channels -------------------------------------------------------

def _planck_flux(omega: np.ndarray, temperature: float) -> np.ndarray:
    """Photon flux spectral density of an isotropic Planck field.

    Photons per unit area, time and angular frequency: c * n(omega) with the
    mode density omega^2/(pi^2 c^3) weighted by the Bose occupation.
    """
    occ = 1.0 / np.expm1(_HBAR * omega / (_KB * temperature))
    return omega**2 / (math.pi**2 * _SPEED_OF_LIGHT**2) * occ


@dataclass(frozen=True)
class BlackbodyChannel:
    """Planck-weighted photon channel (absorption, emission or scattering).

    response: constant material factor, or a (omega, value) table that is
    linearly interpolated. For absorption/emission it is Im[(eps-1)/(eps+2)],
    for scattering |(eps-1)/(eps+2)|^2.
    """

    name: str
    kind: str                    # "absorption" | "emission" | "scattering"
    temperature: float           # K
    radius: float                # m
    response: float | tuple = DEFAULT_RESPONSE_IM

    def __post_init__(self):
        if self.kind not in ("absorption", "emission", "scattering"):
            raise ValueError(f"unknown blackbody channel kind {self.kind!r}")
        if self.temperature < 0.0 or self.radius <= 0.0:
            raise ValueError("temperature must be >= 0 and radius > 0")

    def support(self) -> tuple[float, float]:
        if self.temperature == 0.0:
            return (0.0, 0.0)
        return (0.0, PLANCK_CUTOFF * _KB * self.temperature / _HBAR)

    def _response_at(self, omega: np.ndarray) -> np.ndarray:
        if isinstance(self.response, (int, float)):
            return np.full_like(omega, float(self.response))
        grid, values = self.response
        return np.interp(omega, np.asarray(grid), np.asarray(values))

    def rate_density(self, omega: np.ndarray) -> np.ndarray:
        """gamma(omega) in s^-1 per unit angular frequency."""
        if self.temperature == 0.0:
            return np.zeros_like(omega)
        flux = _planck_flux(omega, self.temperature)
        resp = self._response_at(omega)
        if self.kind == "scattering":
            cross = (8.0 * math.pi / 3.0) * (omega / _SPEED_OF_LIGHT) ** 4 * self.radius**6 * resp
        else:
            cross = (omega / _SPEED_OF_LIGHT) * 4.0 * math.pi * self.radius**3 * resp
        return flux * cross


@dataclass(frozen=True)
class TabulatedChannel:
    """Channel given as a sampled rate density curve (linear interpolation)."""

    name: str
    omega: tuple                 # rad/s, strictly increasing
    gamma_density: tuple         # s^-1 per rad/s, >= 0

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        g = np.asarray(self.gamma_density, dtype=float)
        if w.ndim != 1 or w.size < 2 or w.shape != g.shape:
            raise ValueError("need matching 1-d omega and gamma_density arrays of length >= 2")
        if np.any(np.diff(w) <= 0.0):
            raise ValueError("omega grid must be strictly increasing")
        if np.any(g < 0.0):
            raise ValueError("gamma_density must be >= 0 everywhere")

    def support(self) -> tuple[float, float]:
        return (float(self.omega[0]), float(self.omega[-1]))

    def rate_density(self, omega: np.ndarray) -> np.ndarray:
        return np.interp(omega, np.asarray(self.omega), np.asarray(self.gamma_density),
                         left=0.0, right=0.0)


@dataclass(frozen=True)
class CollisionChannel:
    """Gas collisions folded into a single total rate and kick wavenumber.

    Default rate zero: the chamber is assumed pumped to a vacuum where the
    collision rate is negligible; supply a measured rate to include it.
    """

    name: str
    total_rate: float = 0.0      # s^-1
    kick_wavenumber: float = 0.0  # rad/m

    def __post_init__(self):
        if self.total_rate < 0.0 or self.kick_wavenumber < 0.0:
            raise ValueError("collision rate and wavenumber must be >= 0")


@dataclass(frozen=True)
class SpectralRateModel:
    """Named decoherence channels whose localization rates add."""

    channels: tuple

    def named(self, name: str):
        for ch in self.channels:
            if ch.name == name:
                return ch
        raise KeyError(name)


def default_model(
    params: ExperimentParams,
    t_internal: float | None = None,
    response_im: float = DEFAULT_RESPONSE_IM,
    response_mod_sq: float = DEFAULT_RESPONSE_MOD_SQ,
) -> SpectralRateModel:
    """Blackbody absorption + scattering at t_environment, emission at t_internal.

    Requires ``params.radius``. The gas channel is present but zero.
    """
    if params.radius is None:
        raise ValueError("decoherence model needs the object radius; set the radius key")
    t_int = params.t_internal if t_internal is None else t_internal
    return SpectralRateModel(channels=(
        BlackbodyChannel("blackbody_absorption", "absorption",
                         params.t_environment, params.radius, response_im),
        BlackbodyChannel("blackbody_scattering", "scattering",
                         params.t_environment, params.radius, response_mod_sq),
        BlackbodyChannel("thermal_emission", "emission",
                         t_int, params.radius, response_im),
        CollisionChannel("gas_collisions"),
    ))


# -- localization rate -------------------------------------------------------

@lru_cache(maxsize=32)
def _leggauss_cached(n: int) -> tuple[np.ndarray, np.ndarray]:
    return leggauss(n)


def _gauss_nodes(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = _leggauss_cached(n)
    half = 0.5 * (hi - lo)
    return lo + half * (nodes + 1.0), half * weights


def _channel_rate(channel, delta_x: np.ndarray, n_nodes: int) -> np.ndarray:
    """Localization rate of one channel over an array of separations."""
    if isinstance(channel, CollisionChannel):
        if channel.total_rate == 0.0:
            return np.zeros_like(delta_x)
        return channel.total_rate * _angular_factor_array(channel.kick_wavenumber * delta_x)
    if isinstance(channel, TabulatedChannel):
        # integrate piecewise so that narrow tabulated features are never missed
        total = np.zeros_like(delta_x)
        w = np.asarray(channel.omega)
        per_piece = max(4, n_nodes // max(1, w.size - 1))
        for a, b in zip(w[:-1], w[1:]):
            nodes, weights = _gauss_nodes(float(a), float(b), per_piece)
            gam = channel.rate_density(nodes)
            kick = _angular_factor_array(np.outer(delta_x, nodes) / _SPEED_OF_LIGHT)
            total += kick @ (gam * weights)
        return total
    lo, hi = channel.support()
    if hi <= lo:
        return np.zeros_like(delta_x)
    nodes, weights = _gauss_nodes(lo, hi, n_nodes)
    gam = channel.rate_density(nodes)
    kick = _angular_factor_array(np.outer(delta_x, nodes) / _SPEED_OF_LIGHT)
    return kick @ (gam * weights)


def localization_rate_profile(
    model: SpectralRateModel,
    delta_x,
    n_nodes: int = 512,
    rtol: float = 1.0e-6,
) -> np.ndarray:
    """eta(delta_x) for an array of separations (s^-1).

    Every channel is integrated with fixed-order Gauss-Legendre quadrature at
    ``n_nodes`` and at twice that; a relative mismatch beyond ``rtol`` raises
    :class:`QuadratureError` naming the channel, so silent under-resolution
    is impossible.
    """
    dx = np.atleast_1d(np.asarray(delta_x, dtype=float))
    if np.any(dx < 0.0):
        raise ValueError("delta_x must be >= 0")
    total = np.zeros_like(dx)
    for channel in model.channels:
        coarse = _channel_rate(channel, dx, n_nodes)
        fine = _channel_rate(channel, dx, 2 * n_nodes)
        scale = np.maximum(np.abs(fine), 1e-300)
        worst = float(np.max(np.abs(fine - coarse) / scale))
        if worst > rtol and float(np.max(np.abs(fine - coarse))) > 1e-302:
            raise QuadratureError(
                f"channel {channel.name!r} not converged: refinement changed the "
                f"integral by {worst:.2e} relative (tol {rtol:.0e}); raise n_nodes"
            )
        total += fine
    return total


def localization_rate(
    model: SpectralRateModel,
    delta_x: float,
    n_nodes: int = 512,
    rtol: float = 1.0e-6,
) -> float:
    """Total which-path localization rate eta(delta_x) in s^-1."""
    return float(localization_rate_profile(model, [delta_x], n_nodes, rtol)[0])


def localization_rate_adaptive(model: SpectralRateModel, delta_x: float) -> float:
    """Cross-check path: the same eta via adaptive Gauss-Kronrod quadrature."""
    if delta_x < 0.0:
        raise ValueError("delta_x must be >= 0")
    total = 0.0
    for channel in model.channels:
        if isinstance(channel, CollisionChannel):
            if channel.total_rate:
                total += channel.total_rate * angular_factor(channel.kick_wavenumber, delta_x)
            continue
        lo, hi = channel.support()
        if hi <= lo:
            continue

        def integrand(omega):
            gam = channel.rate_density(np.asarray([omega]))[0]
            return gam * angular_factor(omega / _SPEED_OF_LIGHT, delta_x)

        points = None
        if isinstance(channel, TabulatedChannel):
            interior = [w for w in channel.omega[1:-1]]
            points = interior[:40] if interior else None
        value, abserr = integrate.quad(integrand, lo, hi, limit=400, points=points)
        if abserr > max(1e-10, 1e-6 * abs(value)):
            raise QuadratureError(
                f"adaptive quadrature for channel {channel.name!r} reports error "
                f"{abserr:.2e} on value {value:.2e}"
            )
        total += value
    return total


def visibility(eta: float, t: float) -> float:
    """Off-diagonal spin survival exp(-eta t) for a fixed-separation state."""
    if eta < 0.0 or t < 0.0:
        raise ValueError("eta and t must be >= 0")
    return math.exp(-eta * t)


# -- visibility surface --------------------------------------------------------

@dataclass(frozen=True)
class VisibilitySurface:
    """Visibility over the (peak separation, internal temperature) plane."""

    delta_x_axis: np.ndarray     # m
    t_int_axis: np.ndarray       # K
    visibility: np.ndarray       # shape (len(delta_x_axis), len(t_int_axis)), in [0, 1]
    flight_time: float           # s

    def __post_init__(self):
        if self.visibility.shape != (self.delta_x_axis.size, self.t_int_axis.size):
            raise ValueError("visibility matrix shape must match the axes")
        if np.any(self.visibility < 0.0) or np.any(self.visibility > 1.0):
            raise ValueError("visibility entries must lie in [0, 1]")


def visibility_surface(
    model_family,
    delta_x_range,
    t_int_range,
    flight_time: float,
    n_nodes: int = 512,
) -> VisibilitySurface:
    """Tabulate exp(-eta(dx; T_int) * t) on the given axes.

    ``model_family`` maps an internal temperature to a
    :class:`SpectralRateModel`; use :func:`default_model_family` for the
    built-in blackbody defaults.
    """
    dx = np.asarray(list(delta_x_range), dtype=float)
    tins = np.asarray(list(t_int_range), dtype=float)
    if dx.size == 0 or tins.size == 0:
        raise ValueError("axes must be non-empty")
    vis = np.empty((dx.size, tins.size))
    for j, t_int in enumerate(tins):
        model = model_family(float(t_int))
        eta = localization_rate_profile(model, dx, n_nodes)
        vis[:, j] = np.exp(-eta * flight_time)
    return VisibilitySurface(delta_x_axis=dx, t_int_axis=tins,
                             visibility=vis, flight_time=flight_time)


def default_model_family(params: ExperimentParams,
                         response_im: float = DEFAULT_RESPONSE_IM,
                         response_mod_sq: float = DEFAULT_RESPONSE_MOD_SQ):
    """t_int -> default blackbody model, for :func:`visibility_surface`."""
    def family(t_int: float) -> SpectralRateModel:
        return default_model(params, t_internal=t_int,
                             response_im=response_im, response_mod_sq=response_mod_sq)
    return family


# -- time-resolved refinement ---------------------------------------------------

def dephasing_exposures(
    params: ExperimentParams,
    seq: PulseSequence,
    model: SpectralRateModel,
    n_time_nodes: int = 24,
    n_nodes: int = 512,
) -> tuple[float, float]:
    """(worst-case, time-resolved) dimensionless dephasing exposures.

    Worst case is eta(peak separation) * t3; the refinement integrates
    eta(|dx(t)|) dt along the actual separation profile and is strictly
    smaller whenever the spin force is nonzero.
    """
    t3 = seq.effective_times()[2]
    bound = localization_rate(model, max_separation(params, seq), n_nodes) * t3
    edges = sorted({0.0, *seq.effective_times(), t3 / 2.0})
    refined = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        nodes, weights = _gauss_nodes(a, b, n_time_nodes)
        seps = np.abs([separation_at(params, seq, float(t)) for t in nodes])
        rates = localization_rate_profile(model, seps, n_nodes)
        refined += float(np.dot(rates, weights))
    return bound, refined


# -- collapse-model dephasing -----------------------------------------------------

def csl_dephasing_rate(lambda_csl: float, n_nucleons: float,
                       delta_x: float, r_csl: float) -> float:
    """Amplified collapse dephasing rate for an N-nucleon superposition (s^-1).

    Saturates at lambda * N^2 once the separation exceeds the localization
    length; below it the standard quadratic suppression (delta_x/r_csl)^2
    applies (a modeling choice for the unsaturated regime).
    """
    if min(lambda_csl, n_nucleons, delta_x, r_csl) < 0.0:
        raise ValueError("all arguments must be >= 0")
    base = lambda_csl * n_nucleons**2
    if r_csl == 0.0:
        return base if delta_x > 0.0 else 0.0
    if delta_x >= r_csl:
        return base
    return base * (delta_x / r_csl) ** 2


# -- serialization -----------------------------------------------------------------

def load_response_table(path) -> tuple:
    """Two-column CSV (omega_rad_s, response) -> interpolation table."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("response table must have exactly two columns")
    omega, resp = data[:, 0], data[:, 1]
    if np.any(np.diff(omega) <= 0):
        raise ValueError("response table omega column must be strictly increasing")
    return (tuple(omega.tolist()), tuple(resp.tolist()))


def surface_to_csv(surface: VisibilitySurface, fmt=lambda v: f"{v:.11e}") -> str:
    """Matrix CSV: first row the T_int axis, first column the delta_x axis."""
    lines = ["delta_x_m\\t_int_K," + ",".join(fmt(t) for t in surface.t_int_axis)]
    for i, dx in enumerate(surface.delta_x_axis):
        lines.append(fmt(dx) + "," + ",".join(fmt(v) for v in surface.visibility[i]))
    return "\n".join(lines) + "\n"


def surface_to_json(surface: VisibilitySurface, metadata: dict | None = None) -> str:
    payload = {
        "delta_x_m": [float(v) for v in surface.delta_x_axis],
        "t_int_K": [float(v) for v in surface.t_int_axis],
        "flight_time_s": surface.flight_time,
        "visibility": [[float(v) for v in row] for row in surface.visibility],
    }
    if metadata:
        payload["metadata"] = metadata
    return json.dumps(payload, sort_keys=True, indent=1)
