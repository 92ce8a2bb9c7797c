"""Equivalent-baseband transient solver with per-port Thevenin terminations.

Each port p is driven by a source ``v_s`` behind a resistance ``R_s``:

    v_s[n] = R_s i[n] + v[n],   v = sqrt(z0) (a + b),   i = (a - b) / sqrt(z0)

with ``b[n] = s_0 a[n] + H[n]`` from the convolver. Eliminating ``b`` leaves a P x P
linear system for the unknown incident wave ``a[n]`` at every step.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .convolution import Convolver
from .errors import NumericalError, ParseError, ValidationError
from .fourier_fit import ImpulseResponse

# Tests switch this on to assert the source constraint at every step.
CHECK_THEVENIN = False
THEVENIN_RTOL = 1e-12
MAX_SYSTEM_CONDITION = 1e12

Envelope = Callable[[int], complex]


def waves_from_vi(v, i, z0: float):
    """Pseudowaves ``a = (v + z0 i) / (2 sqrt z0)``, ``b = (v - z0 i) / (2 sqrt z0)``."""
    if not z0 > 0:
        raise ValidationError("z0 must be positive")
    k = 2.0 * math.sqrt(z0)
    v = np.asarray(v, dtype=complex)
    i = np.asarray(i, dtype=complex)
    return (v + z0 * i) / k, (v - z0 * i) / k


def vi_from_waves(a, b, z0: float):
    if not z0 > 0:
        raise ValidationError("z0 must be positive")
    r = math.sqrt(z0)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return r * (a + b), (a - b) / r


@dataclass(frozen=True)
class TheveninSource:
    r_s: float
    envelope: Envelope

    def __post_init__(self):
        if not self.r_s > 0:
            raise ValidationError(f"source resistance must be positive, got {self.r_s}")


@dataclass(frozen=True, eq=False)
class MultisineSpec:
    tone_offsets_hz: np.ndarray
    amplitudes_v: np.ndarray
    phases_rad: np.ndarray | None = None

    def __post_init__(self):
        off = np.atleast_1d(np.asarray(self.tone_offsets_hz, dtype=float))
        amp = np.atleast_1d(np.asarray(self.amplitudes_v, dtype=float))
        if amp.size == 1 and off.size > 1:
            amp = np.full(off.size, amp[0])
        ph = np.zeros(off.size) if self.phases_rad is None else np.atleast_1d(
            np.asarray(self.phases_rad, dtype=float)
        )
        if not off.size == amp.size == ph.size:
            raise ValidationError("tone offsets, amplitudes and phases must have equal length")
        if off.size == 0:
            raise ValidationError("multisine needs at least one tone")
        object.__setattr__(self, "tone_offsets_hz", off)
        object.__setattr__(self, "amplitudes_v", amp)
        object.__setattr__(self, "phases_rad", ph)

    @classmethod
    def equally_spaced(
        cls, f_low_hz: float, f_high_hz: float, count: int, carrier_hz: float, amplitude_v: float = 1.0
    ) -> MultisineSpec:
        """``count`` tones of equal amplitude from ``f_low_hz`` to ``f_high_hz`` inclusive, zero phase."""
        tones = np.linspace(f_low_hz, f_high_hz, count) - carrier_hz
        return cls(tones, np.full(count, float(amplitude_v)), np.zeros(count))

    def check_in_band(self, half_bandwidth_rad: float) -> None:
        # relative slack so a tone placed exactly on the band edge is accepted
        limit = half_bandwidth_rad * (1 + 1e-12)
        bad = np.abs(2 * np.pi * self.tone_offsets_hz) > limit
        if np.any(bad):
            raise ValidationError(
                f"tones {self.tone_offsets_hz[bad].tolist()} Hz lie outside +/- {half_bandwidth_rad / (2 * np.pi):g} Hz"
            )


def multisine_envelope(spec: MultisineSpec, dt_s: float) -> Envelope:
    """Sampled envelope ``sum_m A_m exp(j(2 pi df_m n dt + phi_m))``; accepts int or array ``n``.

    The in-band limit is ``pi / dt_s``, the half bandwidth implied by the step.
    """
    spec.check_in_band(np.pi / dt_s)
    w = 2 * np.pi * spec.tone_offsets_hz * dt_s
    c = spec.amplitudes_v * np.exp(1j * spec.phases_rad)

    def envelope(n):
        n_arr = np.asarray(n, dtype=float)
        out = np.exp(1j * np.multiply.outer(n_arr, w)) @ c
        return complex(out) if n_arr.ndim == 0 else out

    return envelope


def constant_envelope(value: complex) -> Envelope:
    return lambda n: complex(value)


def impulse_envelope(value: complex) -> Envelope:
    return lambda n: complex(value) if n == 0 else 0j


def solve_step(s0, h, vs_n, r_s, z0: float) -> np.ndarray:
    """Incident waves ``a[n]`` satisfying the Thevenin constraint at every port.

    Solves ``(D1 + D2 s0) a = v_s - D2 h`` with ``D1 = diag(sqrt z0 + R_s / sqrt z0)`` and
    ``D2 = diag(sqrt z0 - R_s / sqrt z0)``.
    """
    s0 = np.atleast_2d(np.asarray(s0, dtype=complex))
    p = s0.shape[0]
    h = np.asarray(h, dtype=complex).reshape(p)
    vs = np.asarray(vs_n, dtype=complex).reshape(p)
    r = np.broadcast_to(np.asarray(r_s, dtype=float), (p,))
    rz = math.sqrt(z0)
    # (z0 - R) / sqrt(z0) is exactly zero for a matched source
    d1 = (z0 + r) / rz
    d2 = (z0 - r) / rz
    system = np.diag(d1) + d2[:, None] * s0
    rhs = vs - d2 * h
    if p == 1:
        den = system[0, 0]
        if abs(den) <= abs(d1[0]) / MAX_SYSTEM_CONDITION:
            raise NumericalError(f"singular one-port system (denominator {den})")
        return rhs / den
    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > MAX_SYSTEM_CONDITION:
        raise NumericalError(f"singular port system (condition estimate {cond:.3g})")
    return np.linalg.solve(system, rhs)


@dataclass(frozen=True, eq=False)
class SimResult:
    """Waveforms of shape ``(n_steps, P)``; ``vs`` is the source envelope actually applied."""

    dt_s: float
    z0: float
    a: np.ndarray
    b: np.ndarray
    v: np.ndarray
    i: np.ndarray
    vs: np.ndarray | None = None
    r_s: np.ndarray | None = None

    @property
    def n_steps(self) -> int:
        return self.a.shape[0]

    @property
    def port_count(self) -> int:
        return self.a.shape[1]

    @property
    def t_s(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt_s

    def thevenin_residual(self) -> np.ndarray:
        if self.vs is None or self.r_s is None:
            raise ValidationError("result carries no source record")
        return np.abs(self.vs - self.r_s * self.i - self.v)


def run(
    ir: ImpulseResponse,
    sources: TheveninSource | Sequence[TheveninSource],
    n_steps: int,
    check: bool | None = None,
) -> SimResult:
    """Step the terminated network for ``n_steps`` at ``ir.dt_s`` from rest."""
    if isinstance(sources, TheveninSource):
        sources = [sources]
    sources = list(sources)
    p = ir.port_count
    if len(sources) != p:
        raise ValidationError(f"{p}-port response needs {p} sources, got {len(sources)}")
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ValidationError("n_steps must be at least 1")
    check = CHECK_THEVENIN if check is None else check

    z0 = ir.z_ref
    r_s = np.array([src.r_s for src in sources], dtype=float)
    conv = Convolver(ir)
    s0 = ir.taps[0]
    a = np.empty((n_steps, p), dtype=complex)
    b = np.empty((n_steps, p), dtype=complex)
    vs = np.empty((n_steps, p), dtype=complex)

    for n in range(n_steps):
        vs[n] = [src.envelope(n) for src in sources]
        h = conv.history_term()
        a[n] = solve_step(s0, h, vs[n], r_s, z0)
        b[n] = conv.advance(a[n])
        if check:
            v_n, i_n = vi_from_waves(a[n], b[n], z0)
            resid = np.abs(vs[n] - r_s * i_n - v_n)
            if np.any(resid >= THEVENIN_RTOL * (np.abs(vs[n]) + 1)):
                raise AssertionError(f"Thevenin constraint violated at step {n}: residual {resid.max():.3g}")

    v, i = vi_from_waves(a, b, z0)
    return SimResult(ir.dt_s, z0, a, b, v, i, vs, r_s)


_WAVES = ("a", "b", "v", "i")


def write_sim_csv(result: SimResult) -> str:
    """Columns ``n,t_s`` then ``re_a{p},im_a{p},re_b{p},...,im_i{p}`` for each port ``p`` (1-based)."""
    p = result.port_count
    cols = ["n", "t_s"]
    for port in range(1, p + 1):
        for w in _WAVES:
            cols += [f"re_{w}{port}", f"im_{w}{port}"]
    out = io.StringIO()
    out.write(f"# dt_s={result.dt_s!r}\n# z0={result.z0!r}\n")
    out.write(",".join(cols) + "\n")
    for n in range(result.n_steps):
        fields = [str(n), repr(float(n * result.dt_s))]
        for port in range(p):
            for w in _WAVES:
                val = getattr(result, w)[n, port]
                fields += [repr(float(val.real)), repr(float(val.imag))]
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def read_sim_csv(text: str) -> SimResult:
    meta: dict[str, float] = {}
    header = None
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            try:
                meta[key.strip()] = float(val)
            except ValueError:
                raise ParseError(f"waveform line {lineno}: bad metadata {line!r}") from None
            continue
        if header is None:
            header = line.split(",")
            continue
        fields = line.split(",")
        if len(fields) != len(header):
            raise ParseError(f"waveform line {lineno}: expected {len(header)} fields, got {len(fields)}")
        try:
            rows.append([float(x) for x in fields])
        except ValueError:
            raise ParseError(f"waveform line {lineno}: non-numeric field") from None
    if header is None or not rows:
        raise ParseError("waveform file has no samples")
    if header[:2] != ["n", "t_s"] or (len(header) - 2) % 8:
        raise ParseError(f"unexpected waveform header {header}")
    p = (len(header) - 2) // 8
    arr = np.asarray(rows)
    if "dt_s" in meta:
        dt = meta["dt_s"]
    elif arr.shape[0] > 1:
        dt = arr[1, 1] - arr[0, 1]
    else:
        raise ParseError("cannot determine time step")
    waves = {}
    for k, w in enumerate(_WAVES):
        cols = [2 + 8 * port + 2 * k for port in range(p)]
        waves[w] = arr[:, cols] + 1j * arr[:, [c + 1 for c in cols]]
    return SimResult(dt, meta.get("z0", 50.0), **waves)


def load_sim_csv(path: str | Path) -> SimResult:
    return read_sim_csv(Path(path).read_text())


def save_sim_csv(path: str | Path, result: SimResult) -> None:
    Path(path).write_text(write_sim_csv(result))
