"""Analytic reference for cascaded lossless transmission lines terminated in a resistor."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from .touchstone import NetworkData
from .transient import MultisineSpec

# stands in for an open circuit unless open_load is set
OPEN_OHMS = 1e9


@dataclass(frozen=True)
class LineSection:
    z0: float
    delay_s: float

    def __post_init__(self):
        if not self.z0 > 0:
            raise ValidationError(f"line impedance must be positive, got {self.z0}")
        if not self.delay_s > 0:
            raise ValidationError(f"line delay must be positive, got {self.delay_s}")


@dataclass(frozen=True)
class LineCascade:
    """Sections listed from the port toward the load."""

    sections: Sequence[LineSection]
    load_ohms: float = OPEN_OHMS
    z_ref: float = 50.0
    open_load: bool = False

    def __post_init__(self):
        secs = tuple(s if isinstance(s, LineSection) else LineSection(*s) for s in self.sections)
        if not secs:
            raise ValidationError("cascade needs at least one line section")
        if not self.load_ohms >= 0:
            raise ValidationError(f"load must be non-negative, got {self.load_ohms}")
        if not self.z_ref > 0:
            raise ValidationError(f"reference impedance must be positive, got {self.z_ref}")
        object.__setattr__(self, "sections", secs)


def harness_cascade() -> LineCascade:
    """Default two-section test network: delays chosen non-commensurate so the response is aperiodic."""
    return LineCascade(
        sections=(LineSection(65.0, 250e-12), LineSection(40.0, 417e-12)),
        load_ohms=30.0,
        z_ref=50.0,
    )


def _rereference(gamma, z_from: float, z_to: float):
    # Reflection w.r.t. z_from -> w.r.t. z_to, written in Gamma so Gamma = 1 (open) stays finite:
    # Z = z_from (1+G)/(1-G),  G' = (Z - z_to)/(Z + z_to)
    num = z_from * (1 + gamma) - z_to * (1 - gamma)
    den = z_from * (1 + gamma) + z_to * (1 - gamma)
    return num / den


def input_reflection(net: LineCascade, omega_rad):
    """Input reflection coefficient w.r.t. ``net.z_ref`` at angular frequency ``omega_rad``."""
    w = np.asarray(omega_rad, dtype=float)
    last = net.sections[-1]
    if net.open_load:
        gamma = np.ones_like(w, dtype=complex)
    else:
        gamma = np.full(w.shape, (net.load_ohms - last.z0) / (net.load_ohms + last.z0), dtype=complex)

    secs = net.sections
    for idx in range(len(secs) - 1, -1, -1):
        sec = secs[idx]
        gamma = gamma * np.exp(-2j * w * sec.delay_s)
        z_next = secs[idx - 1].z0 if idx > 0 else net.z_ref
        gamma = _rereference(gamma, sec.z0, z_next)
    if not np.all(np.isfinite(gamma)):
        raise NumericalError("non-finite reflection coefficient")
    return gamma if gamma.ndim else complex(gamma)


def sample_network(net: LineCascade, freqs_hz) -> NetworkData:
    freqs = np.asarray(freqs_hz, dtype=float)
    gamma = input_reflection(net, 2 * np.pi * freqs)
    return NetworkData(freqs, np.asarray(gamma).reshape(-1, 1, 1), net.z_ref)


@dataclass(frozen=True, eq=False)
class SteadyState:
    """Per-tone phasors of the exact LTI response; envelopes are sums of ``phasor * exp(j dw t)``."""

    offsets_rad: np.ndarray
    gamma: np.ndarray
    z_in: np.ndarray
    a: np.ndarray
    b: np.ndarray
    v: np.ndarray
    i: np.ndarray
    vs: np.ndarray = field(repr=False)

    def _envelope(self, phasors, t_s):
        t = np.asarray(t_s, dtype=float)
        return np.exp(1j * np.multiply.outer(t, self.offsets_rad)) @ phasors

    def current(self, t_s):
        return self._envelope(self.i, t_s)

    def voltage(self, t_s):
        return self._envelope(self.v, t_s)

    def incident(self, t_s):
        return self._envelope(self.a, t_s)

    def scattered(self, t_s):
        return self._envelope(self.b, t_s)


def steady_state_multisine(
    net: LineCascade, spec: MultisineSpec, carrier_hz: float, r_s: float
) -> SteadyState:
    """Exact steady state of a Thevenin source (``r_s``) driving ``net`` with a multisine envelope."""
    if not r_s > 0:
        raise ValidationError("source resistance must be positive")
    dw = 2 * np.pi * spec.tone_offsets_hz
    gamma = np.atleast_1d(input_reflection(net, 2 * np.pi * carrier_hz + dw))
    if np.any(np.abs(1 - gamma) < 1e-12):
        raise NumericalError("open-circuit input impedance at a tone")
    z = net.z_ref
    z_in = z * (1 + gamma) / (1 - gamma)
    vs = spec.amplitudes_v * np.exp(1j * spec.phases_rad)
    i = vs / (r_s + z_in)
    v = vs - r_s * i
    rz = np.sqrt(z)
    a = (v + z * i) / (2 * rz)
    b = (v - z * i) / (2 * rz)
    return SteadyState(dw, gamma, z_in, a, b, v, i, vs)
