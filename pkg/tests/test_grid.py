from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from btlh.grid import (
    DyadicCube,
    InvariantViolation,
    SampledField,
    ScaleGrid,
    cube_geometry,
    dyadic_resample,
    enumerate_cubes,
    indicator,
    load_field,
    load_field_csv,
    save_field,
    save_field_csv,
)

tol_exact = 0.0
tol_mean = 1e-12


def _rng_field(n: int, J: int, seed: int = 0, band_limit: int | None = None) -> SampledField:
    """Random real mean-zero field, optionally band-limited below Nyquist."""
    rng = np.random.default_rng(seed)
    N = 1 << J
    shape = (N,) * n
    v = rng.normal(size=shape)
    if band_limit is not None:
        F = np.fft.fftn(v)
        freqs = np.fft.fftfreq(N, d=1.0 / N)
        keep = np.abs(freqs) <= band_limit
        mask = keep if n == 1 else np.outer(keep, keep)
        F[~mask] = 0.0
        v = np.fft.ifftn(F).real
    v -= v.mean()
    return SampledField(n, J, v)


####
# SampledField
####


def test_field_shape_and_steps():
    f = _rng_field(1, 5)
    assert f.N == 32
    assert f.h == 2.0**-5
    f2 = _rng_field(2, 4)
    assert f2.values.shape == (16, 16)


def test_field_wrong_length_rejected():
    with pytest.raises(InvariantViolation):
        SampledField(1, 3, np.zeros(7))
    with pytest.raises(InvariantViolation):
        SampledField(2, 3, np.zeros((8, 4)))


def test_mean_zero_flag_enforced():
    v = np.ones(8)
    with pytest.raises(InvariantViolation):
        SampledField(1, 3, v)
    f = SampledField(1, 3, v, mean_zero=False)
    assert f.values.sum() == 8.0


def test_from_samples_detects_mean():
    f = SampledField.from_samples(np.ones(8) * 3.0, remove_mean=True)
    assert f.mean_zero
    assert_array_equal(f.values, np.zeros(8))


####
# DyadicCube / enumerate / geometry
####


def test_enumerate_single_level_counts():
    assert enumerate_cubes((0, 0), 1) == [DyadicCube(1, 0, (0,))]
    assert enumerate_cubes((1, 1), 1) == [DyadicCube(1, 1, (0,)), DyadicCube(1, 1, (1,))]


def test_enumerate_2d_count():
    # 4^j cubes per level: 1 + 4 + 16
    cubes = enumerate_cubes((0, 2), 2)
    assert len(cubes) == 21
    assert len(set(cubes)) == 21


def test_enumerate_empty_range_rejected():
    with pytest.raises(InvariantViolation, match="degenerate level window"):
        enumerate_cubes((2, 1), 1)


def test_cube_geometry_values():
    assert cube_geometry(DyadicCube(1, 0, (0,))) == (1.0, (0.0,), (0.5,))
    assert cube_geometry(DyadicCube(1, 1, (1,))) == (0.5, (0.5,), (0.75,))
    # formula extends to negative levels even though enumeration starts at 0
    assert cube_geometry(DyadicCube(1, -1, (0,))) == (2.0, (0.0,), (1.0,))


def test_parent_contains_child():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 3))
        j = int(rng.integers(1, 7))
        k = tuple(int(rng.integers(0, 1 << j)) for _ in range(n))
        q = DyadicCube(n, j, k)
        par = q.parent()
        assert par.side == 2 * q.side
        for c_lo, p_lo in zip(q.corner, par.corner):
            assert p_lo <= c_lo and c_lo + q.side <= p_lo + par.side


####
# indicator
####


def test_indicator_unit_cube_all_ones():
    f = indicator(DyadicCube(1, 0, (0,)), J=3)
    assert_array_equal(f.values, np.ones(8))


def test_indicator_half_cube():
    f = indicator(DyadicCube(1, 1, (0,)), J=3)
    assert_array_equal(f.values, [1, 1, 1, 1, 0, 0, 0, 0])


def test_indicator_mass_is_volume():
    # direct summation: sum of samples x h^n = |Q|
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 3))
        J = int(rng.integers(3, 7))
        j = int(rng.integers(0, J + 1))
        k = tuple(int(rng.integers(0, 1 << j)) for _ in range(n))
        f = indicator(DyadicCube(n, j, k), J)
        assert f.values.sum() * f.h**n == 2.0 ** (-j * n)


def test_indicator_finer_than_grid_rejected():
    with pytest.raises(InvariantViolation):
        indicator(DyadicCube(1, 5, (0,)), J=3)


def test_level_partition_of_unity():
    for n in (1, 2):
        for j in range(0, 4):
            total = sum(
                indicator(q, 5).values for q in enumerate_cubes((j, j), n)
            )
            assert_array_equal(total, np.ones((32,) * n))


####
# ScaleGrid
####


def test_scale_grid_rows_decreasing():
    g = ScaleGrid(0, 3, m=4)
    t = g.scales()
    assert t.size == g.n_rows == 16
    assert np.all(np.diff(t) < 0)
    assert t[0] == 1.0
    assert t[-1] == 2.0 ** -(3 + 3 / 4)


def test_scale_grid_octave_bookkeeping():
    g = ScaleGrid(1, 4, m=2)
    assert g.octave_of_row(0) == 1
    assert g.octave_of_row(5) == 3
    assert g.log_weight == pytest.approx(np.log(2) / 2)
    t = g.scales()
    for row in (0, 3, 7):
        assert g.row_of_scale(float(t[row])) == row


def test_scale_grid_bad_window():
    with pytest.raises(InvariantViolation):
        ScaleGrid(3, 2, m=1)
    with pytest.raises(InvariantViolation):
        ScaleGrid(0, 1, m=0)


####
# dyadic_resample
####


def test_resample_round_trip_band_limited():
    f = _rng_field(1, 5, seed=11, band_limit=12)
    up = dyadic_resample(f, "up")
    back = dyadic_resample(up, "down")
    assert_allclose(back.values, f.values, rtol=0, atol=1e-14)


def test_resample_constant_preserved():
    f = SampledField(1, 4, np.full(16, 2.5), mean_zero=False)
    assert_allclose(dyadic_resample(f, "up").values, 2.5, rtol=1e-13)
    assert_allclose(dyadic_resample(f, "down").values, 2.5, rtol=1e-13)


def test_resample_preserves_mean():
    f = SampledField(2, 4, np.ones((16, 16)) * 0.7, mean_zero=False)
    for direction in ("up", "down"):
        g = dyadic_resample(f, direction)
        assert abs(g.values.mean() - 0.7) < tol_mean


def test_resample_l2_isometry():
    # discrete L2 with the h^n weight, fields with empty Nyquist bin
    f = _rng_field(2, 4, seed=5, band_limit=6)
    up = dyadic_resample(f, "up")
    l2 = lambda g: np.sqrt(np.sum(np.abs(g.values) ** 2) * g.h**g.n)
    assert abs(l2(up) - l2(f)) <= 1e-12 * l2(f)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), J=st.integers(3, 6))
def test_resample_down_up_projects(seed, J):
    # down o up is the identity on any field, band-limited or not
    f = _rng_field(1, J, seed=seed)
    again = dyadic_resample(dyadic_resample(f, "up"), "down")
    assert_allclose(again.values, f.values, rtol=0, atol=1e-13)


####
# I/O
####


def test_binary_round_trip(tmp_path):
    for n in (1, 2):
        f = _rng_field(n, 4, seed=n)
        p = tmp_path / f"f{n}.btlh"
        save_field(f, str(p))
        g = load_field(str(p))
        assert (g.n, g.J) == (f.n, f.J)
        assert_array_equal(g.values, f.values)


def test_binary_round_trip_complex(tmp_path):
    f = _rng_field(1, 4, seed=1)
    fc = f.with_values(f.values + 1j * f.values[::-1])
    p = tmp_path / "c.btlh"
    save_field(fc, str(p))
    g = load_field(str(p))
    assert np.iscomplexobj(g.values)
    assert_array_equal(g.values, fc.values)


def test_csv_round_trip(tmp_path):
    f = _rng_field(1, 5, seed=9)
    p = tmp_path / "f.csv"
    save_field_csv(f, str(p))
    g = load_field_csv(str(p))
    assert_allclose(g.values, f.values, rtol=0, atol=1e-15)
