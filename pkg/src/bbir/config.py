"""YAML run configuration for the CLI. Keys carry their units (``_hz``, ``_ohm``, ``_s``, ``_rad``)."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ParseError, ValidationError
from .oracle import LineCascade, LineSection
from .transient import MultisineSpec

DEFAULTS: dict[str, Any] = {
    "network": {
        "sections": [
            {"z0_ohm": 65.0, "delay_s": 250e-12},
            {"z0_ohm": 40.0, "delay_s": 417e-12},
        ],
        "load_ohm": 30.0,
        "open_load": False,
        "z_ref_ohm": 50.0,
    },
    "band": {"f_start_hz": 9.5e9, "f_stop_hz": 10.5e9, "points": 201},
    "fit": {"carrier_hz": None, "omega_m_rad": None, "order": None, "tol": 1e-3, "n_max": 64},
    "source": {
        "kind": "multisine",
        "r_s_ohm": 50.0,
        "value_v": 1.0,
        "multisine": {"f_low_hz": 9.8e9, "f_high_hz": 10.2e9, "count": 4, "amplitude_v": 1.0},
    },
    "sim": {"n_steps": 256},
    "compare": {"warmup_steps": None, "threshold": 1e-2},
    "outputs": {
        "touchstone": "network.s1p",
        "touchstone_format": "RI",
        "taps": "taps.csv",
        "fit_report": "fit_report.json",
        "fit_table": "fit_table.csv",
        "waveform": "waveform.csv",
        "compare_report": "compare.json",
    },
}

SOURCE_KINDS = ("multisine", "constant", "impulse")


def _merge(base: dict, over: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key not in base:
            raise ParseError(f"unknown config key '{where}{key}'")
        if isinstance(base[key], dict) and isinstance(val, dict) and key != "multisine":
            out[key] = _merge(base[key], val, f"{where}{key}.")
        else:
            out[key] = val
    return out


def _num(section: dict, key: str, where: str, optional: bool = False) -> float | None:
    val = section.get(key)
    if val is None:
        if optional:
            return None
        raise ParseError(f"config '{where}.{key}' is required")
    try:
        # PyYAML reads '1e-3' (no dot) as a string
        return float(val)
    except (TypeError, ValueError):
        raise ParseError(f"config '{where}.{key}' must be a number, got {val!r}") from None


def _int(section: dict, key: str, where: str, optional: bool = False) -> int | None:
    val = _num(section, key, where, optional)
    if val is None:
        return None
    if val != int(val):
        raise ParseError(f"config '{where}.{key}' must be an integer, got {val!r}")
    return int(val)


@dataclass
class RunConfig:
    network: LineCascade
    freqs_hz: np.ndarray
    carrier_hz: float | None
    omega_m_rad: float | None
    order: int | None
    tol: float
    n_max: int
    source_kind: str
    r_s_ohm: float
    source_value_v: float
    multisine: MultisineSpec | None
    multisine_raw: dict
    n_steps: int
    warmup_steps: int | None
    threshold: float
    outputs: dict[str, Any] = field(default_factory=dict)
    base_dir: Path = Path(".")

    def output_path(self, key: str) -> Path:
        p = Path(self.outputs[key])
        return p if p.is_absolute() else self.base_dir / p

    def multisine_for_carrier(self, carrier_hz: float) -> MultisineSpec:
        """Tones given as absolute ``f_low_hz..f_high_hz`` need the carrier to become offsets."""
        raw = self.multisine_raw
        if "tone_offsets_hz" in raw:
            return self.multisine
        return MultisineSpec.equally_spaced(
            float(raw["f_low_hz"]), float(raw["f_high_hz"]), int(raw["count"]), carrier_hz,
            float(raw.get("amplitude_v", 1.0)),
        )


def _build_multisine(raw: dict) -> MultisineSpec | None:
    if "tone_offsets_hz" in raw:
        try:
            return MultisineSpec(
                [float(x) for x in raw["tone_offsets_hz"]],
                [float(x) for x in raw.get("amplitudes_v", [1.0])],
                None if raw.get("phases_rad") is None else [float(x) for x in raw["phases_rad"]],
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(f"config 'source.multisine': {exc}") from None
    needed = ("f_low_hz", "f_high_hz", "count")
    missing = [k for k in needed if k not in raw]
    if missing:
        raise ParseError(f"config 'source.multisine' needs tone_offsets_hz or {missing}")
    for k in ("f_low_hz", "f_high_hz", "amplitude_v"):
        if k in raw:
            _num(raw, k, "source.multisine")
    _int(raw, "count", "source.multisine")
    return None


def parse_config(data: dict | None, base_dir: Path = Path(".")) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParseError("config root must be a mapping")
    cfg = _merge(DEFAULTS, data)

    net = cfg["network"]
    try:
        sections = [
            LineSection(_num(s, "z0_ohm", "network.sections"), _num(s, "delay_s", "network.sections"))
            for s in net["sections"]
        ]
        cascade = LineCascade(
            sections,
            load_ohms=_num(net, "load_ohm", "network"),
            z_ref=_num(net, "z_ref_ohm", "network"),
            open_load=bool(net.get("open_load", False)),
        )
    except ValidationError as exc:
        raise ParseError(f"config 'network': {exc}") from None
    except (TypeError, AttributeError):
        raise ParseError("config 'network.sections' must be a list of {z0_ohm, delay_s}") from None

    band = cfg["band"]
    f0 = _num(band, "f_start_hz", "band")
    f1 = _num(band, "f_stop_hz", "band")
    npts = _int(band, "points", "band")
    if not 0 < f0 < f1:
        raise ParseError(f"config 'band': need 0 < f_start_hz < f_stop_hz, got {f0} .. {f1}")
    if npts < 2:
        raise ParseError("config 'band.points' must be at least 2")

    fit = cfg["fit"]
    src = cfg["source"]
    kind = str(src["kind"]).lower()
    if kind not in SOURCE_KINDS:
        raise ParseError(f"config 'source.kind' must be one of {SOURCE_KINDS}, got {kind!r}")
    raw_ms = dict(src["multisine"] or {})
    multisine = _build_multisine(raw_ms) if kind == "multisine" else None

    tol = _num(fit, "tol", "fit")
    if not tol >= 0:
        raise ParseError("config 'fit.tol' must be non-negative")
    r_s = _num(src, "r_s_ohm", "source")
    if not r_s > 0:
        raise ParseError("config 'source.r_s_ohm' must be positive")
    n_steps = _int(cfg["sim"], "n_steps", "sim")
    if n_steps < 1:
        raise ParseError("config 'sim.n_steps' must be at least 1")

    return RunConfig(
        network=cascade,
        freqs_hz=np.linspace(f0, f1, npts),
        carrier_hz=_num(fit, "carrier_hz", "fit", optional=True),
        omega_m_rad=_num(fit, "omega_m_rad", "fit", optional=True),
        order=_int(fit, "order", "fit", optional=True),
        tol=tol,
        n_max=_int(fit, "n_max", "fit"),
        source_kind=kind,
        r_s_ohm=r_s,
        source_value_v=_num(src, "value_v", "source"),
        multisine=multisine,
        multisine_raw=raw_ms,
        n_steps=n_steps,
        warmup_steps=_int(cfg["compare"], "warmup_steps", "compare", optional=True),
        threshold=_num(cfg["compare"], "threshold", "compare"),
        outputs=dict(cfg["outputs"]),
        base_dir=Path(base_dir),
    )


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return parse_config({}, Path("."))
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML in {path}: {exc}") from None
    return parse_config(data, path.parent)
