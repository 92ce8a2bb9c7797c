"""Equivalent-baseband discrete-time impulse responses from passband S-parameter data."""

from .baseband import BasebandData, to_baseband, to_passband
from .convolution import Convolver, convolve_stream, truncate
from .errors import BBIRError, NumericalError, ParseError, ValidationError
from .fourier_fit import (
    FitReport,
    ImpulseResponse,
    build_design_matrix,
    choose_order,
    evaluate,
    fit,
    tap_energy_profile,
)
from .oracle import LineCascade, LineSection, harness_cascade, input_reflection, sample_network, steady_state_multisine
from .touchstone import NetworkData, load_network, parse_touchstone, read_csv, write_csv, write_touchstone
from .transient import (
    MultisineSpec,
    SimResult,
    TheveninSource,
    multisine_envelope,
    run,
    solve_step,
    vi_from_waves,
    waves_from_vi,
)

__version__ = "0.1.0"
