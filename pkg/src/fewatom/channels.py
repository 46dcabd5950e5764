"""Cold-collision loss channels and optical shielding of the ground-state channel.

Three two-body channels are modeled:

  hcc  ground-state hyperfine-changing collisions, 0.22 K per atom, suppressed
       by the repump light (see suppression_ratio);
  re   radiative-escape collisions; both atoms share one exponentially
       distributed energy;
  fcc  fine-structure-changing collisions, 400 K per atom, always over threshold.

Rate coefficients are quoted in the total-loss flux convention: a channel with
coefficient beta whose every collision ejects both atoms removes atoms at
beta * N(N-1) / V per second. The pair-event coefficient is then beta/2.

Shielding model: the blue-detuned repump dresses a repulsive excited pair state
that crosses the ground asymptote at the Condon radius. The implemented
suppression factor is a Gaussian in the ratio of the Rabi energy hbar*Omega to
the collision energy scale, where the thermal scale kB*T and the linewidth
floor sqrt(2)*kB*T_D add in quadrature:

    P_hcc(s0, T) = exp(-(hbar Omega)^2 / ((kB T)^2 + 2 (kB T_D)^2)),
    Omega = rabi_coeff * Gamma * sqrt(s0).

With the default rabi_coeff = 1/sqrt(2) this is identical to exp(-s0 / A(T))
with A(T) = 1 + (T/T_D)^2 / 2. The explicit single-crossing Landau-Zener
average (lz_thermal_average) is kept as a reference model; at 9 GHz detuning
its crossing is traversed almost fully diabatically, so it suppresses far less
than the calibrated law and is not used for rate composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .constants import CESIUM, H_PLANCK, PhysConstants
from .trap import TrapConfig, depth_from_cos, depth_minimum


class Outcome(IntEnum):
    """Atoms lost in a single two-body collision event."""

    NONE = 0
    ONE_ATOM = 1
    TWO_ATOMS = 2


CHANNELS = ("hcc", "re", "fcc")


@dataclass
class ChannelSet:
    """Intrinsic channel coefficients (cm^3/s) and the classifier's nuisance parameters."""

    beta_hcc: float = 4.1e-11  # cm^3/s, unshielded ground-state coefficient
    beta_re: float = 2.0e-11  # cm^3/s
    beta_fcc: float = 5.0e-12  # cm^3/s
    re_energy_scale: float = 0.43  # K, exponential scale of the shared RE energy
    depth_jitter: float = 0.03  # fractional rms fluctuation of the escape threshold
    angular_spread: float = 0.35  # rad, rms deviation of atom 2 from back-to-back

    def __post_init__(self):
        for name in ("beta_hcc", "beta_re", "beta_fcc"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.re_energy_scale <= 0:
            raise ValueError("re_energy_scale must be positive")
        if not 0.0 <= self.depth_jitter < 0.2:
            raise ValueError("depth_jitter must lie in [0, 0.2)")
        if not 0.0 <= self.angular_spread < math.pi / 2:
            raise ValueError("angular_spread must lie in [0, pi/2)")


@dataclass
class ShieldingParams:
    """Repump-dressing parameters for the ground-channel suppression."""

    repump_detuning: float = 9.0e9  # Hz, blue detuning of the repump
    c3: float | None = None  # J m^3; None -> constants default
    rabi_coeff: float = 1.0 / math.sqrt(2.0)  # Omega = rabi_coeff * Gamma * sqrt(s0)

    def __post_init__(self):
        if self.repump_detuning <= 0:
            raise ValueError("repump_detuning must be positive")
        if self.c3 is not None and self.c3 <= 0:
            raise ValueError("c3 must be positive when given")
        if self.rabi_coeff <= 0:
            raise ValueError("rabi_coeff must be positive")

    def c3_value(self, pc: PhysConstants) -> float:
        return pc.c3 if self.c3 is None else self.c3


def condon_radius(params: ShieldingParams, pc: PhysConstants = CESIUM) -> float:
    """Crossing radius R_C = (C3 / (h * detuning))^(1/3), meters."""
    return (params.c3_value(pc) / (H_PLANCK * params.repump_detuning)) ** (1.0 / 3.0)


def lz_pass_probability(v_rel: float, omega: float, params: ShieldingParams,
                        pc: PhysConstants = CESIUM):
    """Diabatic passage probability through the dressed crossing.

    exp(-2 pi (hbar Omega / 2)^2 / (hbar v |dV/dR|)) with the difference-potential
    slope 3 C3 / R_C^4 at the Condon point. This is the probability that an
    incoming pair stays on the ground curve.
    """
    v = np.asarray(v_rel, dtype=float)
    if np.any(v <= 0):
        raise ValueError("v_rel must be positive (sub-threshold pairs are handled by the caller)")
    rc = condon_radius(params, pc)
    slope = 3.0 * params.c3_value(pc) / rc**4
    expo = 2.0 * math.pi * (pc.hbar * omega / 2.0) ** 2 / (pc.hbar * v * slope)
    out = np.exp(-expo)
    return float(out) if np.isscalar(v_rel) else out


def scaling_constant(temperature: float, pc: PhysConstants = CESIUM):
    """Suppression decay constant A(T) = 1 + (T / T_D)^2 / 2."""
    t = np.asarray(temperature, dtype=float)
    if np.any(t < 0):
        raise ValueError("temperature must be non-negative")
    out = 1.0 + 0.5 * (t / pc.doppler_temp) ** 2
    return float(out) if np.isscalar(temperature) else out


def suppression_ratio(s0, temperature: float, params: ShieldingParams | None = None,
                      pc: PhysConstants = CESIUM):
    """Fraction of ground-channel collisions surviving the repump shielding.

    Gaussian in hbar*Omega over the quadrature sum of the thermal and linewidth
    energy scales (module docstring). Equals exp(-s0/A(T)) at the default
    rabi_coeff; monotone non-increasing in s0, non-decreasing in T, and 1 at s0=0.
    """
    if params is None:
        params = ShieldingParams()
    s = np.asarray(s0, dtype=float)
    if np.any(s < 0):
        raise ValueError("s0 must be non-negative")
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    omega_sq = (params.rabi_coeff * pc.gamma) ** 2 * s
    e_thermal = pc.kb * temperature
    e_floor = pc.kb * pc.doppler_temp
    out = np.exp(-(pc.hbar**2) * omega_sq / (e_thermal**2 + 2.0 * e_floor**2))
    return float(out) if np.isscalar(s0) else out


def lz_thermal_average(s0: float, temperature: float,
                       params: ShieldingParams | None = None,
                       pc: PhysConstants = CESIUM, n_grid: int = 20000) -> float:
    """Reference model: 1D Maxwell-Boltzmann average of the single-crossing pass probability.

    Pairs whose asymptotic kinetic energy (reduced mass m/2) is below the
    avoided-crossing barrier hbar*Omega/2 contribute zero; surviving pairs pass
    diabatically with lz_pass_probability evaluated at the decelerated local
    speed. Shares the qualitative properties of suppression_ratio but not its
    calibration; kept for transparency of the microscopic picture.
    """
    if params is None:
        params = ShieldingParams()
    if s0 < 0:
        raise ValueError("s0 must be non-negative")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if s0 == 0:
        return 1.0
    mu = pc.mass / 2.0
    omega = params.rabi_coeff * pc.gamma * math.sqrt(s0)
    v_barrier = math.sqrt(pc.hbar * omega / mu)  # mu v^2 / 2 = hbar Omega / 2
    sigma = math.sqrt(pc.kb * temperature / mu)
    v = np.linspace(1e-9, v_barrier + 10.0 * sigma, n_grid)
    weight = np.exp(-(v**2) / (2.0 * sigma**2))
    v_local = np.sqrt(np.clip(v**2 - v_barrier**2, 0.0, None))
    passed = np.zeros_like(v)
    over = v_local > 0
    passed[over] = lz_pass_probability(v_local[over], omega, params, pc)
    return float(np.trapezoid(weight * passed, v) / np.trapezoid(weight, v))


def re_energy_sample(rng: np.random.Generator, e0: float, size=None):
    """Draw the shared per-atom kinetic energy of a radiative-escape pair, kelvin."""
    if e0 <= 0:
        raise ValueError("e0 must be positive")
    return rng.exponential(e0, size)


def _escape_counts(channel: str, trap: TrapConfig, cs: ChannelSet,
                   rng: np.random.Generator, n: int, pc: PhysConstants) -> np.ndarray:
    """Vectorized outcome sampler; returns the number of escaping atoms per trial."""
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}")
    # atom 1 direction: isotropic, only cos(theta) matters for the depth
    c1 = rng.uniform(-1.0, 1.0, n)
    # atom 2: back-to-back up to a half-normal tilt with uniform azimuth
    if cs.angular_spread > 0:
        alpha = np.abs(rng.normal(0.0, cs.angular_spread, n))
        phi = rng.uniform(0.0, 2.0 * math.pi, n)
        s1 = np.sqrt(1.0 - c1**2)
        c2 = -c1 * np.cos(alpha) + s1 * np.sin(alpha) * np.cos(phi)
    else:
        c2 = -c1
    d1 = depth_from_cos(trap, c1, pc)
    d2 = depth_from_cos(trap, c2, pc)
    if cs.depth_jitter > 0:
        d1 = d1 * (1.0 + rng.normal(0.0, cs.depth_jitter, n))
        d2 = d2 * (1.0 + rng.normal(0.0, cs.depth_jitter, n))
    if channel == "hcc":
        energy = np.full(n, pc.e_hcc_per_atom)
    elif channel == "fcc":
        energy = np.full(n, pc.e_fcc_per_atom)
    else:
        energy = re_energy_sample(rng, cs.re_energy_scale, n)
    return (energy > d1).astype(np.int64) + (energy > d2)


def classify_outcome(channel: str, trap: TrapConfig, cs: ChannelSet,
                     rng: np.random.Generator, pc: PhysConstants = CESIUM) -> Outcome:
    """Sample one collision event and report how many atoms left the trap."""
    return Outcome(int(_escape_counts(channel, trap, cs, rng, 1, pc)[0]))


def outcome_probabilities(channel: str, trap: TrapConfig, cs: ChannelSet,
                          rng: np.random.Generator, n_samples: int = 100_000,
                          pc: PhysConstants = CESIUM) -> tuple[float, float, float]:
    """Monte Carlo estimate of (P_none, P_one, P_two) for a channel."""
    counts = _escape_counts(channel, trap, cs, rng, n_samples, pc)
    hist = np.bincount(counts, minlength=3)
    return tuple(hist / n_samples)


def effective_betas(trap: TrapConfig, cs: ChannelSet,
                    shielding: ShieldingParams | None = None,
                    pc: PhysConstants = CESIUM,
                    seed: int = 7070, n_samples: int = 200_000) -> tuple[float, float]:
    """Compose the channels into observable loss coefficients (cm^3/s).

    Returns (beta_1atom, beta_2atoms): beta_1atom * N(N-1)/V is the one-atom
    collisional loss flux, beta_2atoms * N(N-1)/V is twice the two-atom event
    rate. The hcc channel is weighted by suppression_ratio at the trap's
    repump_sat and temperature.
    """
    if shielding is None:
        shielding = ShieldingParams()
    rng = np.random.default_rng(seed)
    w = {
        "hcc": suppression_ratio(trap.repump_sat, trap.temperature, shielding, pc),
        "re": 1.0,
        "fcc": 1.0,
    }
    beta = {"hcc": cs.beta_hcc, "re": cs.beta_re, "fcc": cs.beta_fcc}
    beta1 = 0.0
    beta2 = 0.0
    for ch in CHANNELS:
        if beta[ch] == 0.0:
            continue
        _, p1, p2 = outcome_probabilities(ch, trap, cs, rng, n_samples, pc)
        beta1 += beta[ch] * w[ch] * p1 / 2.0
        beta2 += beta[ch] * w[ch] * p2
    return beta1, beta2
