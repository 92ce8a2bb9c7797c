import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bbir.baseband import BasebandData
from bbir.errors import NumericalError, ParseError, ValidationError
from bbir.fourier_fit import (
    ImpulseResponse,
    build_design_matrix,
    choose_order,
    evaluate,
    fit,
    normal_equation_solve,
    read_taps,
    tap_energy_profile,
    write_taps,
)

WM = 2 * math.pi * 0.5e9
FC = 10e9


def _bb(values, npts=201, wm=WM):
    offsets = np.linspace(-WM, WM, npts)
    s = values(offsets) if callable(values) else values
    return BasebandData(offsets, np.broadcast_to(np.asarray(s, dtype=complex), (npts,)), FC, wm)


def _design_loop(offsets, n, wm):
    return np.array([[cmath.exp(-1j * (math.pi / wm) * k * w) for k in range(n + 1)] for w in offsets])


def test_design_matrix_three_points():
    m = build_design_matrix([-WM, 0.0, WM], 1)
    np.testing.assert_allclose(m, [[1, -1], [1, 1], [1, -1]], atol=1e-15)


def test_design_matrix_order_zero_and_zero_offset():
    m = build_design_matrix([-3.0, 0.0, 1.0], 0)
    assert m.shape == (3, 1)
    assert np.all(m == 1)
    assert np.all(build_design_matrix([0.0, 5.0], 7)[0] == 1)


def test_design_matrix_matches_loop(rng):
    offsets = np.sort(rng.uniform(-WM, WM, 17))
    np.testing.assert_allclose(build_design_matrix(offsets, 9, WM), _design_loop(offsets, 9, WM), atol=1e-13)


@pytest.mark.parametrize("n", [0, 3, 20])
def test_constant_data(n):
    c = 0.25 - 0.7j
    ir, rep = fit(_bb(c), n)
    assert ir.taps[0, 0, 0] == pytest.approx(c, abs=1e-12)
    assert np.all(np.abs(ir.taps[1:]) < 1e-12)
    assert rep.max_abs_error < 1e-12


@pytest.mark.parametrize("m,n", [(0, 4), (3, 3), (5, 12), (11, 40)])
def test_pure_delay_data(m, n):
    g = 0.8 * cmath.exp(0.3j)
    ir, rep = fit(_bb(lambda w: g * np.exp(-1j * m * (math.pi / WM) * w)), n)
    assert ir.taps[m, 0, 0] == pytest.approx(g, abs=1e-10)
    others = np.delete(np.abs(ir.taps[:, 0, 0]), m)
    assert np.all(others < 1e-10)


def test_fit_report_invariants(rng):
    bb = _bb(rng.normal(size=201) + 1j * rng.normal(size=201))
    ir, rep = fit(bb, 10)
    assert rep.max_abs_error >= rep.rms_error >= 0
    model = evaluate(ir, bb.offsets_rad)
    np.testing.assert_allclose(model - bb.s, rep.residual, atol=1e-12)
    assert ir.dt_s * ir.half_bandwidth_rad == pytest.approx(math.pi, rel=1e-15)
    assert ir.order_n == 10 and ir.taps.shape == (11, 1, 1)


def test_underdetermined_and_rank_deficient():
    with pytest.raises(ValidationError, match="underdetermined"):
        fit(_bb(1.0, npts=3), 10)
    # offsets packed near zero make high harmonics indistinguishable
    bb = BasebandData(np.linspace(-1e-3, 1e-3, 50), np.ones(50), FC, WM)
    with pytest.raises(NumericalError, match="condition"):
        fit(bb, 20)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(0, 12), extra=st.integers(0, 30))
def test_stable_solver_matches_normal_equations(seed, n, extra):
    r = np.random.default_rng(seed)
    npts = 2 * (n + 1) + extra
    offsets = np.linspace(-WM, WM, npts) + r.uniform(-0.2, 0.2, npts) * (2 * WM / npts)
    offsets = np.clip(np.sort(offsets), -WM, WM)
    values = r.normal(size=npts) + 1j * r.normal(size=npts)
    bb = BasebandData(offsets, values, FC, WM)
    ir, rep = fit(bb, n)
    m = _design_loop(offsets, n, WM)
    ref = normal_equation_solve(m, values)
    got = ir.taps[:, 0, 0]
    assert np.linalg.norm(got - ref) <= 1e-8 * np.linalg.norm(ref)
    # first-order optimality
    resid = m @ got - values
    assert np.linalg.norm(m.conj().T @ resid) <= 1e-8 * np.linalg.norm(values)


def test_exact_interpolation(rng):
    n = 9
    offsets = np.linspace(-WM, WM, n + 2)[:-1]  # n+1 distinct points on one period
    values = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    _, rep = fit(BasebandData(offsets, values, FC, WM), n)
    assert rep.max_abs_error <= 1e-10


def test_more_points_never_lower_residual(rng):
    offsets = np.linspace(-WM, WM, 121)
    values = rng.normal(size=121) + 1j * rng.normal(size=121)
    n = 6
    prev = -1.0
    for step in (4, 2, 1):
        sub = slice(None, None, step)
        _, rep = fit(BasebandData(offsets[sub], values[sub], FC, WM), n)
        ssr = float(np.sum(np.abs(rep.residual) ** 2))
        assert ssr >= prev - 1e-12
        prev = ssr


def test_multiport_fits_each_entry_independently(rng):
    offsets = np.linspace(-WM, WM, 81)
    s = rng.normal(size=(81, 2, 2)) + 1j * rng.normal(size=(81, 2, 2))
    ir, rep = fit(BasebandData(offsets, s, FC, WM), 5)
    for i in range(2):
        for j in range(2):
            ir1, _ = fit(BasebandData(offsets, s[:, i, j], FC, WM), 5)
            np.testing.assert_allclose(ir.taps[:, i, j], ir1.taps[:, 0, 0], atol=1e-13)
    assert evaluate(ir, 0.3).shape == (2, 2)


def test_evaluate_examples():
    c = ImpulseResponse([0.3 + 0.1j], WM)
    assert np.all(evaluate(c, np.linspace(-5 * WM, 5 * WM, 11))[:, 0, 0] == 0.3 + 0.1j)
    d = ImpulseResponse([0, 1], WM)
    assert evaluate(d, WM)[0, 0] == pytest.approx(-1, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), w=st.floats(-3.0, 3.0))
def test_evaluate_periodic(seed, w):
    r = np.random.default_rng(seed)
    ir = ImpulseResponse(r.normal(size=8) + 1j * r.normal(size=8), WM)
    a = evaluate(ir, w * WM)
    b = evaluate(ir, w * WM + 2 * WM)
    assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(ir.taps).sum())


def test_choose_order_examples():
    assert choose_order(_bb(1 + 2j), 1e-6) == 0
    delay5 = _bb(lambda w: np.exp(-5j * (math.pi / WM) * w))
    assert choose_order(delay5, 1e-6) == 5
    with pytest.raises(NumericalError):
        choose_order(delay5, 1e-6, n_max=4)
    with pytest.raises(ValidationError):
        choose_order(delay5, 0.0)
    with pytest.raises(NumericalError):
        # rough data, only three points: the interpolating limit is N=2
        choose_order(BasebandData([-WM, 0.0, WM], [0, 1, 2], FC, WM), 1e-6)


def test_tap_energy_profile():
    np.testing.assert_allclose(tap_energy_profile(ImpulseResponse([0, 0, 2j, 0], WM)), [0, 0, 1, 1])
    np.testing.assert_allclose(tap_energy_profile(ImpulseResponse([1, 1j], WM)), [0.5, 1.0])
    with pytest.raises(ValidationError):
        tap_energy_profile(ImpulseResponse([0, 0], WM))


def test_tap_file_round_trip(rng):
    taps = rng.normal(size=(6, 2, 2)) + 1j * rng.normal(size=(6, 2, 2))
    ir = ImpulseResponse(taps, WM, FC, 75.0)
    text = write_taps(ir)
    assert text.splitlines()[4] == (
        "k,t_s,re_s11,im_s11,re_s12,im_s12,re_s21,im_s21,re_s22,im_s22"
    )
    back = read_taps(text)
    assert np.array_equal(back.taps, ir.taps)
    assert (back.half_bandwidth_rad, back.carrier_hz, back.z_ref) == (WM, FC, 75.0)


def test_tap_file_errors():
    with pytest.raises(ParseError):
        read_taps("k,t_s,re_s11,im_s11\n0,0,1,0\n")
    good = write_taps(ImpulseResponse([1, 2], WM, FC))
    with pytest.raises(ParseError):
        read_taps(good.replace("# N=1", "# N=4"))
