"""Least-squares extraction of a causal complex Fourier series from baseband S-data.

The model is

    S~(w) = sum_{k=0..N} s_k exp(-j k (pi / w_m) w)

whose coefficients are, read in the time domain, taps of a discrete-time impulse
response with spacing pi / w_m.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baseband import BasebandData
from .errors import NumericalError, ParseError, ValidationError

MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    """Complex taps ``s_0..s_N`` (shape ``(N+1, P, P)``) at spacing ``pi / half_bandwidth_rad``.

    A 1-D ``taps`` array is accepted as a one-port response.
    """

    taps: np.ndarray
    half_bandwidth_rad: float
    carrier_hz: float = 0.0
    z_ref: float = 50.0

    def __post_init__(self):
        taps = np.array(self.taps, dtype=complex)
        if taps.ndim == 1:
            taps = taps.reshape(-1, 1, 1)
        if taps.ndim != 3 or taps.shape[1] != taps.shape[2] or taps.shape[0] < 1:
            raise ValidationError(f"taps must have shape (N+1, P, P), got {taps.shape}")
        if not np.all(np.isfinite(taps)):
            raise ValidationError("non-finite tap value")
        if not self.half_bandwidth_rad > 0:
            raise ValidationError("half bandwidth must be positive")
        if not self.z_ref > 0:
            raise ValidationError("reference impedance must be positive")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "half_bandwidth_rad", float(self.half_bandwidth_rad))

    @property
    def order_n(self) -> int:
        return self.taps.shape[0] - 1

    @property
    def port_count(self) -> int:
        return self.taps.shape[1]

    @property
    def dt_s(self) -> float:
        return np.pi / self.half_bandwidth_rad

    @property
    def tap_times_s(self) -> np.ndarray:
        return np.arange(self.order_n + 1) * self.dt_s

    def with_taps(self, taps: np.ndarray) -> ImpulseResponse:
        return ImpulseResponse(taps, self.half_bandwidth_rad, self.carrier_hz, self.z_ref)


@dataclass(frozen=True, eq=False)
class FitReport:
    order_n: int
    max_abs_error: float
    rms_error: float
    residual: np.ndarray  # model - data, shape (F, P, P)
    condition_estimate: float


def build_design_matrix(offsets_rad, order_n: int, half_bandwidth_rad: float | None = None) -> np.ndarray:
    """Rows are frequency samples, columns harmonics: ``M[i, k] = exp(-j k pi w_i / w_m)``.

    ``w_m`` defaults to ``max |offsets_rad|``.
    """
    offsets = np.asarray(offsets_rad, dtype=float).reshape(-1)
    if order_n < 0:
        raise ValidationError(f"order must be non-negative, got {order_n}")
    if offsets.size == 0:
        raise ValidationError("no offsets")
    if half_bandwidth_rad is None:
        half_bandwidth_rad = float(np.abs(offsets).max())
    if not half_bandwidth_rad > 0:
        raise ValidationError("half bandwidth must be positive")
    k = np.arange(order_n + 1)
    return np.exp(-1j * (np.pi / half_bandwidth_rad) * np.outer(offsets, k))


def normal_equation_solve(m: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Explicit ``(M^H M)^-1 M^H F``. Squares the condition number; used as a cross-check only."""
    mh = m.conj().T
    return np.linalg.inv(mh @ m) @ (mh @ f)


def fit(bb: BasebandData, order_n: int) -> tuple[ImpulseResponse, FitReport]:
    """Fit every (i, j) entry against one shared design matrix via a QR factorization."""
    order_n = int(order_n)
    if order_n < 0:
        raise ValidationError(f"order must be non-negative, got {order_n}")
    npts = bb.offsets_rad.size
    if npts < order_n + 1:
        raise ValidationError(f"underdetermined fit: {npts} points for {order_n + 1} coefficients")

    m = build_design_matrix(bb.offsets_rad, order_n, bb.half_bandwidth_rad)
    p = bb.port_count
    rhs = bb.s.reshape(npts, p * p)

    q, r = np.linalg.qr(m, mode="reduced")
    cond = float(np.linalg.cond(r))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericalError(f"design matrix is numerically rank deficient (condition estimate {cond:.3g})")
    coeffs = np.linalg.solve(r, q.conj().T @ rhs)

    taps = coeffs.reshape(order_n + 1, p, p)
    residual = (m @ coeffs - rhs).reshape(npts, p, p)
    err = np.abs(residual)
    report = FitReport(
        order_n=order_n,
        max_abs_error=float(err.max()),
        rms_error=float(np.sqrt(np.mean(err**2))),
        residual=residual,
        condition_estimate=cond,
    )
    ir = ImpulseResponse(taps, bb.half_bandwidth_rad, bb.carrier_hz, bb.z_ref)
    return ir, report


def evaluate(ir: ImpulseResponse, offset_rad) -> np.ndarray:
    """Series value at baseband offset(s); ``(P, P)`` for a scalar, ``(n, P, P)`` for an array."""
    w = np.asarray(offset_rad, dtype=float)
    scalar = w.ndim == 0
    w = w.reshape(-1)
    basis = build_design_matrix(w, ir.order_n, ir.half_bandwidth_rad)
    p = ir.port_count
    out = (basis @ ir.taps.reshape(ir.order_n + 1, p * p)).reshape(w.size, p, p)
    return out[0] if scalar else out


def choose_order(bb: BasebandData, tol: float, n_max: int = 64) -> int:
    """Smallest order whose fit meets ``max_abs_error <= tol``."""
    if not tol > 0:
        raise ValidationError(f"tolerance must be positive, got {tol}")
    limit = min(int(n_max), bb.offsets_rad.size - 1)
    best = np.inf
    for n in range(limit + 1):
        _, report = fit(bb, n)
        best = min(best, report.max_abs_error)
        if report.max_abs_error <= tol:
            return n
    raise NumericalError(
        f"tolerance {tol:g} not reached for N <= {limit} (best max_abs_error {best:.3g})"
    )


def _tap_energy(taps: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(taps) ** 2, axis=(1, 2))


def tap_energy_profile(ir: ImpulseResponse) -> np.ndarray:
    """Cumulative fraction of total tap energy (Frobenius norm for matrix taps)."""
    e = _tap_energy(ir.taps)
    total = e.sum()
    if total == 0:
        raise ValidationError("impulse response is identically zero")
    profile = np.cumsum(e) / total
    profile[-1] = 1.0
    return profile


def write_taps(ir: ImpulseResponse) -> str:
    p = ir.port_count
    out = io.StringIO()
    out.write(f"# carrier_hz={ir.carrier_hz!r}\n")
    out.write(f"# omega_m_rad={ir.half_bandwidth_rad!r}\n")
    out.write(f"# z_ref={ir.z_ref!r}\n")
    out.write(f"# N={ir.order_n}\n")
    cols = ["k", "t_s"]
    for i in range(1, p + 1):
        for j in range(1, p + 1):
            cols += [f"re_s{i}{j}", f"im_s{i}{j}"]
    out.write(",".join(cols) + "\n")
    for k, (t, tap) in enumerate(zip(ir.tap_times_s, ir.taps)):
        fields = [str(k), repr(float(t))]
        for v in tap.reshape(-1):
            fields += [repr(float(v.real)), repr(float(v.imag))]
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def read_taps(text: str) -> ImpulseResponse:
    meta: dict[str, str] = {}
    rows = []
    header = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            meta[key.strip()] = val.strip()
            continue
        if header is None:
            header = line.split(",")
            continue
        fields = line.split(",")
        if len(fields) != len(header):
            raise ParseError(f"tap file line {lineno}: expected {len(header)} fields, got {len(fields)}")
        try:
            rows.append([float(x) for x in fields])
        except ValueError:
            raise ParseError(f"tap file line {lineno}: non-numeric field") from None
    for key in ("carrier_hz", "omega_m_rad", "z_ref"):
        if key not in meta:
            raise ParseError(f"tap file missing '# {key}=' metadata")
    if header is None or not rows:
        raise ParseError("tap file has no taps")
    ncoef = len(header) - 2
    p = int(round(np.sqrt(ncoef / 2)))
    if ncoef < 2 or 2 * p * p != ncoef:
        raise ParseError(f"tap file header has {ncoef} value columns, not 2*P^2")
    arr = np.asarray(rows)
    if not np.array_equal(arr[:, 0], np.arange(len(rows))):
        raise ParseError("tap indices must run 0, 1, 2, ...")
    taps = (arr[:, 2::2] + 1j * arr[:, 3::2]).reshape(-1, p, p)
    if "N" in meta and int(meta["N"]) != taps.shape[0] - 1:
        raise ParseError(f"tap file declares N={meta['N']} but holds {taps.shape[0]} taps")
    try:
        return ImpulseResponse(
            taps,
            float(meta["omega_m_rad"]),
            float(meta["carrier_hz"]),
            float(meta["z_ref"]),
        )
    except (ValueError, ValidationError) as exc:
        raise ParseError(f"tap file: {exc}") from None


def load_taps(path: str | Path) -> ImpulseResponse:
    return read_taps(Path(path).read_text())


def save_taps(path: str | Path, ir: ImpulseResponse) -> None:
    Path(path).write_text(write_taps(ir))
