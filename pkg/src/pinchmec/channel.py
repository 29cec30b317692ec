"""Line-of-sight channel coefficients for waveguide-fed pinching antennas.

Antenna m sits at (x_m, 0, d) on a waveguide fed from the origin; a device
sits at (x_k, y_k, 0).  The complex coefficient factors into an amplitude
eta*alpha/r, a free-space phase at the free-space wavelength, and an
in-waveguide phase accumulated over the feed-to-antenna run x_m at the
guided wavelength.  All functions are pure and broadcast over leading axes,
so a whole particle swarm can be evaluated in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ChannelConstants, DeviceLayout


@dataclass(frozen=True)
class PaLayout:
    """Antenna x-coordinates along one waveguide at a fixed height."""

    xs: np.ndarray  # (M,)
    height: float

    def __post_init__(self):
        object.__setattr__(self, "xs", np.asarray(self.xs, dtype=float).reshape(-1))

    def __len__(self) -> int:
        return self.xs.shape[0]


def _device_array(devices) -> np.ndarray:
    if isinstance(devices, DeviceLayout):
        return devices.positions
    return np.atleast_2d(np.asarray(devices, dtype=float))


def field_terms(xs, height: float, devices, consts: ChannelConstants) -> np.ndarray:
    """Per-antenna unit-radiation phasors exp(-j*2*pi*(r/lambda + x/lambda_g))/r.

    xs may carry leading batch axes; the result has shape (..., M, K) for K
    devices.  The in-waveguide run is |x| (feed at the origin).
    """
    xs = np.asarray(xs, dtype=float)
    dev = _device_array(devices)
    dx = xs[..., :, None] - dev[:, 0]
    r = np.sqrt(dx * dx + dev[:, 1] ** 2 + height**2)
    phase = -2.0 * np.pi * (r / consts.lambda_free + np.abs(xs)[..., :, None] / consts.lambda_guided)
    return np.exp(1j * phase) / r


def downlink_coeff(layout: PaLayout, m: int, device, alpha_m: float, consts: ChannelConstants) -> complex:
    """Downlink coefficient through antenna m with radiation factor alpha_m."""
    term = field_terms(layout.xs[m : m + 1], layout.height, np.asarray(device), consts)
    return complex(consts.eta * alpha_m * term[0, 0])


def uplink_coeff(layout: PaLayout, m: int, device, consts: ChannelConstants) -> complex:
    """Uplink coefficient through antenna m; identical to downlink with alpha = 1."""
    return downlink_coeff(layout, m, device, 1.0, consts)


def downlink_field_sums(xs, height: float, devices, consts: ChannelConstants, alpha) -> np.ndarray:
    """Coherent sums sum_m h^D_mk, shape (..., K)."""
    terms = field_terms(xs, height, devices, consts)
    return consts.eta * np.einsum("...mk,...m->...k", terms, np.broadcast_to(alpha, np.shape(xs)))


def uplink_field_sums(xs, height: float, devices, consts: ChannelConstants) -> np.ndarray:
    """Coherent sums sum_m h^U_mk (unit radiation factors), shape (..., K)."""
    return consts.eta * field_terms(xs, height, devices, consts).sum(axis=-2)


def aggregate_downlink_gain(layout: PaLayout, w, device, consts: ChannelConstants) -> float:
    """|sum_m h^D_mk|^2 for a single device."""
    alpha = np.asarray(getattr(w, "alpha", w), dtype=float)
    if alpha.shape[0] != len(layout):
        raise ValueError(f"radiation vector length {alpha.shape[0]} != layout length {len(layout)}")
    s = downlink_field_sums(layout.xs, layout.height, np.asarray(device), consts, alpha)
    return float(np.abs(s[0]) ** 2)


def aggregate_uplink_gain(layout: PaLayout, device, consts: ChannelConstants) -> float:
    """Uplink channel gain g_k = |sum_m h^U_mk|^2 for a single device."""
    s = uplink_field_sums(layout.xs, layout.height, np.asarray(device), consts)
    return float(np.abs(s[0]) ** 2)


def uplink_gains(layout: PaLayout, devices, consts: ChannelConstants) -> np.ndarray:
    """g_k for every device, shape (K,)."""
    s = uplink_field_sums(layout.xs, layout.height, devices, consts)
    return np.abs(s) ** 2


def downlink_gains(layout: PaLayout, w, devices, consts: ChannelConstants) -> np.ndarray:
    """|sum_m h^D_mk|^2 for every device, shape (K,)."""
    alpha = np.asarray(getattr(w, "alpha", w), dtype=float)
    s = downlink_field_sums(layout.xs, layout.height, devices, consts, alpha)
    return np.abs(s) ** 2


def spacing_feasible(xs, delta: float, x_range: float) -> bool:
    """True iff all pairwise separations are >= delta and 0 <= x <= x_range."""
    xs = np.sort(np.asarray(getattr(xs, "xs", xs), dtype=float).reshape(-1))
    if xs.size == 0:
        return True
    if xs[0] < 0.0 or xs[-1] > x_range:
        return False
    return bool(np.all(np.diff(xs) >= delta))


def spacing_feasible_batch(xs_batch: np.ndarray, delta: float, x_range: float) -> np.ndarray:
    """Vectorized spacing/range predicate over a (N, M) batch of layouts."""
    xs = np.sort(np.asarray(xs_batch, dtype=float), axis=-1)
    in_range = (xs[..., 0] >= 0.0) & (xs[..., -1] <= x_range)
    if xs.shape[-1] == 1:
        return in_range
    return in_range & np.all(np.diff(xs, axis=-1) >= delta, axis=-1)
