"""Scenario configuration, unit conversion, derived constants and device placement.

All powers are stored in watts; dBm values appear only at the config-file /
CLI / API boundary.  Device placement and the stochastic solvers draw from
two independent RNG streams spawned from the same seed, so changing solver
randomness never changes the scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

SPEED_OF_LIGHT = 2.99792458e8  # m/s, fixed so goldens are reproducible


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0.0:
        raise ConfigurationError(f"cannot express non-positive power {watts} W in dBm")
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical and protocol constants for one scenario.

    Defaults follow the reference simulation setup: a 30 m x 10 m service
    area, waveguide at 3 m height, 1 s frame, 4 devices, 4 antennas,
    43 dBm base-station power, -174 dBm/Hz noise density, 100 MHz bandwidth,
    200 cycles/bit, kappa = 1e-28, 28 GHz carrier and refractive index 1.4.
    """

    area_x: float = 30.0              # m, waveguide span (D_x)
    area_y: float = 10.0              # m
    waveguide_height: float = 3.0     # m
    frame_duration: float = 1.0       # s
    num_devices: int = 4
    num_antennas: int = 4
    bs_power: float = dbm_to_watts(43.0)  # W
    noise_psd: float = -174.0         # dBm/Hz
    bandwidth: float = 100e6          # Hz
    cycles_per_bit: float = 200.0
    chip_kappa: float = 1e-28         # J*s^2/cycle^3
    harvest_efficiency: float = 0.8   # dimensionless, in (0, 1]
    carrier_freq: float = 28e9        # Hz
    refractive_index: float = 1.4
    min_spacing: float = 5e-3         # m, minimum antenna separation
    rng_seed: int = 0

    def __post_init__(self):
        if self.area_x <= 0 or self.area_y <= 0:
            raise ConfigurationError("service area dimensions must be positive")
        if self.waveguide_height <= 0:
            raise ConfigurationError("waveguide height must be positive")
        if self.frame_duration <= 0:
            raise ConfigurationError("frame duration must be positive")
        if self.num_devices < 0:
            raise ConfigurationError("num_devices must be non-negative")
        if self.num_antennas < 1:
            raise ConfigurationError("num_antennas must be at least 1")
        if self.bs_power <= 0:
            raise ConfigurationError("base-station power must be positive")
        if self.bandwidth <= 0:
            raise ConfigurationError("bandwidth must be positive")
        if self.carrier_freq <= 0:
            raise ConfigurationError("carrier frequency must be positive")
        if not 0.0 < self.harvest_efficiency <= 1.0:
            raise ConfigurationError("harvest efficiency must lie in (0, 1]")
        if self.refractive_index < 1.0:
            raise ConfigurationError("refractive index must be >= 1")
        if self.min_spacing < 0.0:
            raise ConfigurationError("minimum spacing must be non-negative")
        if self.cycles_per_bit <= 0:
            raise ConfigurationError("cycles_per_bit must be positive")
        if self.chip_kappa <= 0:
            raise ConfigurationError("chip_kappa must be positive")
        if (self.num_antennas - 1) * self.min_spacing > self.area_x:
            raise ConfigurationError(
                f"no feasible antenna layout: (num_antennas-1)*min_spacing = "
                f"{(self.num_antennas - 1) * self.min_spacing:g} m exceeds area_x = "
                f"{self.area_x:g} m"
            )


@dataclass(frozen=True)
class ChannelConstants:
    """Derived propagation constants: eta = lambda/(4*pi), guided wavelength
    lambda_g = lambda/n_e, and noise power sigma^2 in watts."""

    eta: float
    lambda_free: float
    lambda_guided: float
    noise_power: float


@dataclass(frozen=True)
class DeviceLayout:
    """Device positions, one (x, y, 0) row per device, in meters."""

    positions: np.ndarray  # (K, 3)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return self.positions.shape[0]


def derive_constants(config: ScenarioConfig) -> ChannelConstants:
    """Compute eta, free/guided wavelengths and the noise power from a config."""
    if config.carrier_freq <= 0 or config.bandwidth <= 0:
        raise ConfigurationError("carrier frequency and bandwidth must be positive")
    lam = SPEED_OF_LIGHT / config.carrier_freq
    eta = lam / (4.0 * math.pi)
    lam_g = lam / config.refractive_index
    noise_dbm = config.noise_psd + 10.0 * math.log10(config.bandwidth)
    return ChannelConstants(
        eta=eta,
        lambda_free=lam,
        lambda_guided=lam_g,
        noise_power=dbm_to_watts(noise_dbm),
    )


def device_rng(config: ScenarioConfig) -> np.random.Generator:
    """Dedicated RNG stream for device placement."""
    return np.random.default_rng(np.random.SeedSequence(config.rng_seed, spawn_key=(0,)))


def solver_rng(config: ScenarioConfig) -> np.random.Generator:
    """Independent RNG stream for stochastic solvers (same seed, separate key)."""
    return np.random.default_rng(np.random.SeedSequence(config.rng_seed, spawn_key=(1,)))


def sample_devices(config: ScenarioConfig) -> DeviceLayout:
    """Draw device positions uniformly over the service rectangle (z = 0)."""
    rng = device_rng(config)
    k = config.num_devices
    xy = rng.uniform(0.0, 1.0, size=(k, 2)) * np.array([config.area_x, config.area_y])
    return DeviceLayout(positions=np.column_stack([xy, np.zeros(k)]))


# --- flat key = value config files -------------------------------------------

# file key -> (config field, parser).  Powers carry an explicit _dbm suffix
# and are converted to watts here, at the boundary.
_INT_KEYS = {"num_devices", "num_antennas", "rng_seed"}
_FILE_KEYS = {
    "area_x": "area_x",
    "area_y": "area_y",
    "waveguide_height": "waveguide_height",
    "frame_duration": "frame_duration",
    "num_devices": "num_devices",
    "num_antennas": "num_antennas",
    "bs_power_dbm": "bs_power",
    "noise_psd": "noise_psd",
    "bandwidth": "bandwidth",
    "cycles_per_bit": "cycles_per_bit",
    "chip_kappa": "chip_kappa",
    "harvest_efficiency": "harvest_efficiency",
    "carrier_freq": "carrier_freq",
    "refractive_index": "refractive_index",
    "min_spacing": "min_spacing",
    "rng_seed": "rng_seed",
}


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse a flat ``key = value`` config file; unset keys keep their defaults."""
    overrides = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FILE_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        field = _FILE_KEYS[key]
        try:
            parsed = int(value) if key in _INT_KEYS else float(value)
        except ValueError as exc:
            raise ConfigurationError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
        if key == "bs_power_dbm":
            parsed = dbm_to_watts(parsed)
        overrides[field] = parsed
    return ScenarioConfig(**overrides)


def dump_config(config: ScenarioConfig) -> str:
    """Render a config as a flat key = value file (inverse of load_config)."""
    lines = []
    for key, field in _FILE_KEYS.items():
        value = getattr(config, field)
        if key == "bs_power_dbm":
            value = watts_to_dbm(value)
        lines.append(f"{key} = {value:.17g}" if key not in _INT_KEYS else f"{key} = {value}")
    return "\n".join(lines) + "\n"


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(config, rng_seed=seed)
