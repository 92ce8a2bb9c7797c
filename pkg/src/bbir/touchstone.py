"""Touchstone v1 and CSV readers/writers for tabulated S-parameter data."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

UNIT_SCALE = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
FORMATS = ("RI", "MA", "DB")
# 20*log10 of an exact zero has no finite representation
DB_FLOOR = -999.0

_SNP = re.compile(r"\.s(\d+)p$", re.IGNORECASE)


@dataclass(frozen=True, eq=False)
class NetworkData:
    """P-port S-parameters tabulated on an ascending frequency grid.

    ``s`` has shape ``(len(freqs_hz), P, P)`` and is indexed ``s[f, i, j] = S_(i+1)(j+1)``.
    """

    freqs_hz: np.ndarray
    s: np.ndarray
    z_ref: float = 50.0

    def __post_init__(self):
        freqs = np.asarray(self.freqs_hz, dtype=float).reshape(-1)
        s = np.asarray(self.s, dtype=complex)
        if s.ndim == 1:
            s = s.reshape(-1, 1, 1)
        object.__setattr__(self, "freqs_hz", freqs)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "z_ref", float(self.z_ref))

        if freqs.size < 2:
            raise ValidationError(f"network needs at least 2 frequency points, got {freqs.size}")
        if s.ndim != 3 or s.shape[1] != s.shape[2] or s.shape[1] < 1:
            raise ValidationError(f"s must have shape (F, P, P), got {s.shape}")
        if s.shape[0] != freqs.size:
            raise ValidationError(f"{s.shape[0]} S matrices for {freqs.size} frequencies")
        if not np.all(np.isfinite(freqs)) or not np.all(np.isfinite(s)):
            raise ValidationError("non-finite frequency or S value")
        if freqs[0] <= 0:
            raise ValidationError("frequencies must be strictly positive")
        if np.any(np.diff(freqs) <= 0):
            raise ValidationError("frequencies must be strictly increasing")
        if not self.z_ref > 0:
            raise ValidationError(f"reference impedance must be positive, got {self.z_ref}")

    @property
    def port_count(self) -> int:
        return self.s.shape[1]

    def __len__(self) -> int:
        return self.freqs_hz.size


def port_count_from_name(name: str | Path) -> int | None:
    m = _SNP.search(str(name))
    return int(m.group(1)) if m else None


def _parse_option_line(line: str, lineno: int) -> tuple[str, str, float]:
    unit, fmt, z_ref = "GHZ", "MA", 50.0
    tokens = line[1:].upper().split()
    k = 0
    while k < len(tokens):
        tok = tokens[k]
        if tok in UNIT_SCALE:
            unit = tok
        elif tok in FORMATS:
            fmt = tok
        elif tok == "S":
            pass
        elif tok in ("Y", "Z", "H", "G"):
            raise ParseError(f"line {lineno}: unsupported parameter type {tok!r} (only S)")
        elif tok == "R":
            if k + 1 >= len(tokens):
                raise ParseError(f"line {lineno}: option 'R' without impedance value")
            try:
                z_ref = float(tokens[k + 1])
            except ValueError:
                raise ParseError(f"line {lineno}: bad reference impedance {tokens[k + 1]!r}") from None
            k += 1
        else:
            raise ParseError(f"line {lineno}: unrecognized option token {tok!r}")
        k += 1
    return unit, fmt, z_ref


def _pairs_to_complex(a: np.ndarray, b: np.ndarray, fmt: str) -> np.ndarray:
    if fmt == "RI":
        return a + 1j * b
    if fmt == "MA":
        mag = a
    else:
        mag = 10.0 ** (a / 20.0)
    # cos/sin separately: exp(1j*deg2rad(90)) leaves a 6e-17 real part
    ang = np.deg2rad(b)
    return mag * np.cos(ang) + 1j * mag * np.sin(ang)


def _record_to_matrix(values: np.ndarray, fmt: str, p: int) -> np.ndarray:
    c = _pairs_to_complex(values[0::2], values[1::2], fmt)
    if p == 2:
        # v1 two-port order is S11 S21 S12 S22 (column-major)
        return c.reshape(2, 2).T
    return c.reshape(p, p)


def parse_touchstone(text: str, port_count_hint: int | None = None) -> NetworkData:
    """Parse Touchstone v1 text.

    ``port_count_hint`` is mandatory here; :func:`load_touchstone` derives it from the
    ``.sNp`` extension. Records of networks with more than two ports may wrap over
    several lines.
    """
    if port_count_hint is None:
        raise ParseError("port count unknown: pass port_count_hint or use a .sNp file name")
    p = int(port_count_hint)
    if p < 1:
        raise ParseError(f"port count must be positive, got {p}")
    per_record = 1 + 2 * p * p

    unit, fmt, z_ref = "GHZ", "MA", 50.0
    seen_option = False
    records: list[tuple[int, list[float]]] = []
    pending: list[float] = []
    pending_line = 0

    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            raise ParseError(f"line {lineno}: Touchstone v2 keyword {line.split()[0]!r} not supported")
        if line.startswith("#"):
            # only the first option line counts
            if not seen_option:
                unit, fmt, z_ref = _parse_option_line(line, lineno)
                seen_option = True
            continue
        try:
            values = [float(t) for t in line.split()]
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric data {line!r}") from None

        if p <= 2:
            if len(values) != per_record:
                raise ParseError(
                    f"line {lineno}: expected {per_record} values for a {p}-port record, got {len(values)}"
                )
            records.append((lineno, values))
            continue

        if not pending:
            pending_line = lineno
        pending.extend(values)
        if len(pending) > per_record:
            raise ParseError(f"line {lineno}: record starting at line {pending_line} has too many values")
        if len(pending) == per_record:
            records.append((pending_line, pending))
            pending = []

    if pending:
        raise ParseError(
            f"line {pending_line}: incomplete record, {len(pending)} of {per_record} values"
        )
    if len(records) < 2:
        raise ParseError(f"need at least 2 frequency records, found {len(records)}")

    scale = UNIT_SCALE[unit]
    freqs = np.empty(len(records))
    s = np.empty((len(records), p, p), dtype=complex)
    for idx, (lineno, values) in enumerate(records):
        freqs[idx] = values[0] * scale
        if idx and freqs[idx] <= freqs[idx - 1]:
            raise ParseError(f"line {lineno}: frequency {values[0]} not above the previous one")
        s[idx] = _record_to_matrix(np.asarray(values[1:]), fmt, p)
    if not np.all(np.isfinite(s)):
        raise ParseError("non-finite S value in data")
    try:
        return NetworkData(freqs, s, z_ref)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def _fmt_pair(value: complex, fmt: str) -> tuple[float, float]:
    if fmt == "RI":
        return value.real, value.imag
    mag = abs(value)
    ang = math.degrees(math.atan2(value.imag, value.real))
    if fmt == "MA":
        return mag, ang
    return (20.0 * math.log10(mag) if mag > 0 else DB_FLOOR), ang


def write_touchstone(net: NetworkData, format: str = "RI", unit: str = "GHZ") -> str:
    fmt = format.upper()
    unit = unit.upper()
    if fmt not in FORMATS:
        raise ValidationError(f"unknown format {format!r}")
    if unit not in UNIT_SCALE:
        raise ValidationError(f"unknown unit {unit!r}")
    p = net.port_count
    scale = UNIT_SCALE[unit]

    out = io.StringIO()
    out.write(f"! {p}-port S-parameters, {len(net)} points\n")
    out.write(f"# {unit} S {fmt} R {net.z_ref!r}\n")
    for f, m in zip(net.freqs_hz, net.s):
        freq = repr(float(f / scale))
        if p == 2:
            order = [m[0, 0], m[1, 0], m[0, 1], m[1, 1]]
            pairs = [_fmt_pair(complex(v), fmt) for v in order]
            out.write(freq + " " + " ".join(f"{a!r} {b!r}" for a, b in pairs) + "\n")
            continue
        for i in range(p):
            pairs = [_fmt_pair(complex(v), fmt) for v in m[i]]
            for start in range(0, p, 4):
                chunk = " ".join(f"{a!r} {b!r}" for a, b in pairs[start:start + 4])
                lead = freq if (i == 0 and start == 0) else " " * len(freq)
                out.write(f"{lead} {chunk}\n")
    return out.getvalue()


def load_touchstone(path: str | Path, port_count: int | None = None) -> NetworkData:
    path = Path(path)
    p = port_count or port_count_from_name(path)
    return parse_touchstone(path.read_text(), p)


def save_touchstone(path: str | Path, net: NetworkData, format: str = "RI", unit: str = "GHZ") -> None:
    Path(path).write_text(write_touchstone(net, format, unit))


def _csv_columns(p: int) -> list[str]:
    cols = ["freq_hz"]
    for i in range(1, p + 1):
        for j in range(1, p + 1):
            cols += [f"re_s{i}{j}", f"im_s{i}{j}"]
    return cols


def write_csv(net: NetworkData) -> str:
    """CSV interchange: ``freq_hz,re_s11,im_s11,...`` in row-major (i, j) order.

    The reference impedance travels in a leading ``# z_ref=`` comment line.
    """
    p = net.port_count
    out = io.StringIO()
    out.write(f"# z_ref={net.z_ref!r}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_csv_columns(p))
    for f, m in zip(net.freqs_hz, net.s):
        row = [repr(float(f))]
        for v in m.reshape(-1):
            row += [repr(float(v.real)), repr(float(v.imag))]
        writer.writerow(row)
    return out.getvalue()


def read_csv(text: str, z_ref: float | None = None) -> NetworkData:
    lines = text.splitlines()
    body = []
    for line in lines:
        stripped = line.strip()
        if stripped.startswith("#"):
            key, _, val = stripped[1:].partition("=")
            if key.strip() == "z_ref" and z_ref is None:
                try:
                    z_ref = float(val)
                except ValueError:
                    raise ParseError(f"bad z_ref comment {stripped!r}") from None
            continue
        if stripped:
            body.append(line)
    if not body:
        raise ParseError("empty CSV")

    rows = list(csv.reader(body))
    header = [h.strip() for h in rows[0]]
    ncol = len(header)
    # 1 + 2 P^2 columns
    p = int(round(math.sqrt((ncol - 1) / 2))) if ncol > 1 else 0
    if p < 1:
        raise ParseError(f"CSV header has no S columns: {header}")
    expected = _csv_columns(p)
    missing = [c for c in expected if c not in header]
    if missing or ncol != len(expected):
        raise ParseError(f"CSV header missing columns {missing or expected}")
    index = [header.index(c) for c in expected]

    data = []
    for rowno, row in enumerate(rows[1:], start=2):
        if len(row) != ncol:
            raise ParseError(f"CSV row {rowno}: expected {ncol} fields, got {len(row)}")
        try:
            vals = [float(row[k]) for k in index]
        except ValueError:
            raise ParseError(f"CSV row {rowno}: non-numeric field") from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(f"CSV row {rowno}: non-finite value")
        data.append(vals)
    arr = np.asarray(data, dtype=float).reshape(len(data), ncol)
    s = (arr[:, 1::2] + 1j * arr[:, 2::2]).reshape(-1, p, p)
    try:
        return NetworkData(arr[:, 0], s, 50.0 if z_ref is None else z_ref)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def load_network(path: str | Path, port_count: int | None = None) -> NetworkData:
    """Load a ``.sNp`` Touchstone file or a ``.csv`` interchange file."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv(path.read_text())
    return load_touchstone(path, port_count)
