"""Downshift passband S-data to an offset-frequency (equivalent-baseband) grid and back.

Envelope convention shared across the package: x(t) = Re{x~(t) exp(+j 2 pi f_c t)},
so a passband tone at f_c + df has baseband angular offset 2 pi df.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .touchstone import NetworkData


@dataclass(frozen=True, eq=False)
class BasebandData:
    offsets_rad: np.ndarray
    s: np.ndarray
    carrier_hz: float
    half_bandwidth_rad: float
    z_ref: float = 50.0
    # passband grid this data came from; kept so the axis shift round-trips exactly
    freqs_hz: np.ndarray | None = None

    def __post_init__(self):
        offsets = np.asarray(self.offsets_rad, dtype=float).reshape(-1)
        s = np.asarray(self.s, dtype=complex)
        if s.ndim == 1:
            s = s.reshape(-1, 1, 1)
        object.__setattr__(self, "offsets_rad", offsets)
        object.__setattr__(self, "s", s)
        wm = float(self.half_bandwidth_rad)
        object.__setattr__(self, "half_bandwidth_rad", wm)
        object.__setattr__(self, "carrier_hz", float(self.carrier_hz))

        if offsets.size < 2:
            raise ValidationError(f"baseband data needs at least 2 points, got {offsets.size}")
        if np.any(np.diff(offsets) <= 0):
            raise ValidationError("offsets must be strictly increasing")
        if s.ndim != 3 or s.shape[0] != offsets.size or s.shape[1] != s.shape[2]:
            raise ValidationError(f"s shape {s.shape} does not match {offsets.size} offsets")
        if not wm > 0:
            raise ValidationError("half bandwidth must be positive")
        if np.abs(offsets).max() > wm:
            raise ValidationError("offsets exceed the half bandwidth (support must lie in [-w_m, w_m])")
        if not 2 * np.pi * self.carrier_hz > wm:
            raise ValidationError("carrier too low: passband would reach negative frequencies")
        if self.freqs_hz is None:
            object.__setattr__(self, "freqs_hz", self.carrier_hz + offsets / (2 * np.pi))
        else:
            object.__setattr__(self, "freqs_hz", np.asarray(self.freqs_hz, dtype=float).reshape(-1))

    @property
    def port_count(self) -> int:
        return self.s.shape[1]

    @property
    def dt_s(self) -> float:
        return np.pi / self.half_bandwidth_rad


def to_baseband(
    net: NetworkData,
    carrier_hz: float | None = None,
    half_bandwidth_rad: float | None = None,
) -> BasebandData:
    """Move the frequency axis of ``net`` down by ``carrier_hz`` (default: band center).

    S values are copied untouched. The half bandwidth defaults to the largest
    absolute offset on the grid; an override must be at least that large.
    """
    freqs = net.freqs_hz
    if freqs.size < 2:
        raise ValidationError("need at least 2 frequency points")
    f_lo, f_hi = freqs[0], freqs[-1]
    if carrier_hz is None:
        carrier_hz = 0.5 * (f_lo + f_hi)
    carrier_hz = float(carrier_hz)
    if not f_lo <= carrier_hz <= f_hi:
        raise ValidationError(f"carrier {carrier_hz} Hz outside the data band [{f_lo}, {f_hi}] Hz")

    offsets = 2 * np.pi * (freqs - carrier_hz)
    extent = float(np.abs(offsets).max())
    if half_bandwidth_rad is None:
        half_bandwidth_rad = extent
    elif half_bandwidth_rad < extent:
        raise ValidationError(
            f"half bandwidth override {half_bandwidth_rad} rad/s is below the data extent {extent} rad/s"
        )
    return BasebandData(
        offsets_rad=offsets,
        s=net.s.copy(),
        carrier_hz=carrier_hz,
        half_bandwidth_rad=half_bandwidth_rad,
        z_ref=net.z_ref,
        freqs_hz=freqs.copy(),
    )


def to_passband(bb: BasebandData) -> NetworkData:
    return NetworkData(bb.freqs_hz.copy(), bb.s.copy(), bb.z_ref)
