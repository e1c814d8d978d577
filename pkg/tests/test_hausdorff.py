from __future__ import annotations

from functools import lru_cache

import numpy as np
import pytest
from numpy.testing import assert_allclose

from btlh.grid import BtlhError, InvariantViolation, SampledField, ScaleGrid
from btlh.hausdorff import (
    CapacityBracket,
    GridSet,
    WeightField,
    admissible,
    capacity,
    choquet_integral,
    level_set,
    load_set,
    nontangential_max,
    normalize_weight,
    save_set,
)

tol_cap = 1e-12

# layer-cake value of the nested staircase field on eight cells at d = 1/2:
# capacities 2^-1/2 + 2^-1 + 2^-3/2 + 2^-2 summed over unit-width layers
NESTED_CHOQUET = 2.0**-0.5 + 2.0**-1 + 2.0**-1.5 + 2.0**-2


def _oracle_cover_1d(mask: tuple[bool, ...], J: int, d: float) -> float:
    """Minimal sum of r^d over circular covers by aligned dyadic windows.

    A ball of dyadic radius L h / 2 covers exactly L consecutive whole
    cells; exhaustive recursion over the first uncovered cell.
    """
    N = 1 << J
    h = 1.0 / N
    lengths = [1 << k for k in range(J + 1)]
    costs = {L: (L * h / 2.0) ** d for L in lengths}
    target = frozenset(i for i in range(N) if mask[i])
    if not target:
        return 0.0

    @lru_cache(maxsize=None)
    def rec(todo: frozenset) -> float:
        if not todo:
            return 0.0
        first = min(todo)
        best = np.inf
        for L in lengths:
            for start in range(first - L + 1, first + 1):
                cov = frozenset((start + j) % N for j in range(L))
                if first in cov:
                    best = min(best, costs[L] + rec(todo - cov))
        return best

    return rec(target)


####
# GridSet basics
####


def test_grid_set_shape_checked():
    with pytest.raises(BtlhError, match="mask shape"):
        GridSet(1, 3, np.zeros(7, dtype=bool))
    with pytest.raises(BtlhError, match="dimension"):
        GridSet(3, 2, np.zeros((4, 4, 4), dtype=bool))


def test_level_set_strict_and_loose():
    f = SampledField(1, 3, np.array([0.0, 1.0, 2.0, 1.0, 0.0, 0.0, 3.0, 1.0]), mean_zero=False)
    assert level_set(f, 1.0).cell_count == 2
    assert level_set(f, 1.0, strict=False).cell_count == 5
    assert not level_set(f, 5.0).nonempty


def test_set_translate_wraps():
    m = np.zeros(8, dtype=bool)
    m[7] = True
    E = GridSet(1, 3, m).translate(1)
    assert E.mask[0] and E.cell_count == 1


def test_set_io_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    for n, J in ((1, 5), (2, 4)):
        shape = (1 << J,) * n
        E = GridSet(n, J, rng.random(shape) < 0.3)
        p = tmp_path / f"set_{n}_{J}.bts"
        save_set(E, str(p))
        back = load_set(str(p))
        assert back.n == n and back.J == J
        assert np.array_equal(back.mask, E.mask)


def test_set_io_rejects_garbage(tmp_path):
    p = tmp_path / "junk.bts"
    p.write_bytes(b"\x00" * 64)
    with pytest.raises(BtlhError, match="not a grid-set"):
        load_set(str(p))


####
# capacity: exact small-grid path against the exhaustive cover oracle
####


def test_capacity_matches_exhaustive_cover():
    rng = np.random.default_rng(5)
    for J in (3, 4):
        N = 1 << J
        for _ in range(8):
            mask = rng.random(N) < 0.4
            if not mask.any():
                mask[rng.integers(N)] = True
            for d in (0.3, 0.5, 1.0):
                br = capacity(GridSet(1, J, mask), d)
                oc = _oracle_cover_1d(tuple(mask), J, d)
                assert br.method == "exact-dp"
                assert br.lower == br.upper
                assert abs(br.upper - oc) < tol_cap


def test_capacity_single_cell_exact():
    m = np.zeros(8, dtype=bool)
    m[2] = True
    for d in (0.5, 1.0):
        br = capacity(GridSet(1, 3, m), d)
        assert_allclose(br.upper, (1.0 / 16.0) ** d, rtol=0, atol=0)


def test_capacity_d_zero_is_one():
    m = np.zeros(16, dtype=bool)
    m[[3, 9]] = True
    br = capacity(GridSet(1, 4, m), 0.0)
    assert br.lower == 1.0 and br.upper == 1.0


def test_capacity_empty_set():
    br = capacity(GridSet(1, 4, np.zeros(16, dtype=bool)), 0.7)
    assert br.lower == 0.0 and br.upper == 0.0


def test_capacity_monotone_in_set():
    rng = np.random.default_rng(9)
    for _ in range(6):
        small = rng.random(16) < 0.25
        extra = rng.random(16) < 0.25
        A = GridSet(1, 4, small)
        B = A.union(GridSet(1, 4, small | extra))
        for d in (0.4, 1.0):
            assert capacity(A, d).upper <= capacity(B, d).upper + tol_cap


def test_capacity_subadditive():
    rng = np.random.default_rng(13)
    for _ in range(6):
        ma = rng.random(16) < 0.3
        mb = rng.random(16) < 0.3
        A, B = GridSet(1, 4, ma), GridSet(1, 4, mb)
        U = A.union(B)
        for d in (0.5, 1.0):
            assert (
                capacity(U, d).upper
                <= capacity(A, d).upper + capacity(B, d).upper + tol_cap
            )


def test_capacity_translation_invariant():
    rng = np.random.default_rng(17)
    m = rng.random(16) < 0.3
    m[0] = True
    E = GridSet(1, 4, m)
    for shift in (1, 5, 11):
        for d in (0.5, 1.0):
            assert (
                abs(capacity(E, d).upper - capacity(E.translate(shift), d).upper)
                < tol_cap
            )


def test_capacity_dyadic_dilation_scaling():
    # 2E for a set in the lower half-torus: optimal covers map radius for
    # radius, so the capacity scales by exactly 2^d
    m = np.zeros(16, dtype=bool)
    m[[1, 2, 3]] = True
    E = GridSet(1, 4, m)
    E2 = E.dilate_double()
    for d in (0.4, 0.7, 1.0):
        assert_allclose(
            capacity(E2, d).upper, 2.0**d * capacity(E, d).upper, rtol=1e-13
        )


def test_capacity_parameter_range():
    E = GridSet(1, 3, np.ones(8, dtype=bool))
    with pytest.raises(BtlhError, match="outside"):
        capacity(E, -0.1)
    with pytest.raises(BtlhError, match="outside"):
        capacity(E, 1.5)


def test_capacity_2d_ball_brackets():
    N = 32
    yy, xx = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    prev_upper = 0.0
    for rc in (4, 8):
        ball = ((xx - 16) ** 2 + (yy - 16) ** 2) < rc**2
        br = capacity(GridSet(2, 5, ball), 1.0)
        r = rc / N
        assert br.method == "greedy-packing"
        assert 0.0 < br.lower <= br.upper
        # one dyadic ball of radius 2r always suffices
        assert br.upper <= 2.0 * r + tol_cap
        assert br.upper >= prev_upper
        prev_upper = br.upper


def test_capacity_bracket_validation():
    with pytest.raises(InvariantViolation, match="out of order"):
        CapacityBracket(2.0, 1.0, 0.5, "bad")


####
# Choquet integral
####


def test_choquet_nested_staircase_exact():
    v = np.array([4.0, 3.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0])
    lo, hi = choquet_integral(SampledField(1, 3, v, mean_zero=False), 0.5)
    assert_allclose(lo, NESTED_CHOQUET, rtol=0, atol=tol_cap)
    assert_allclose(hi, NESTED_CHOQUET, rtol=0, atol=tol_cap)


def test_choquet_indicator_equals_capacity():
    m = np.zeros(16, dtype=bool)
    m[[2, 3, 10]] = True
    f = SampledField(1, 4, m.astype(float), mean_zero=False)
    lo, hi = choquet_integral(f, 0.6)
    br = capacity(GridSet(1, 4, m), 0.6)
    assert_allclose([lo, hi], [br.lower, br.upper], rtol=0, atol=tol_cap)


def test_choquet_positively_homogeneous():
    rng = np.random.default_rng(23)
    v = rng.random(16)
    f = SampledField(1, 4, v, mean_zero=False)
    lo, hi = choquet_integral(f, 0.5)
    lo3, hi3 = choquet_integral(f.with_values(3.0 * v), 0.5)
    assert_allclose([lo3, hi3], [3.0 * lo, 3.0 * hi], rtol=1e-12)


def test_choquet_monotone_in_integrand():
    rng = np.random.default_rng(29)
    v = rng.random(16)
    w = v + rng.random(16)
    _, hi_v = choquet_integral(SampledField(1, 4, v, mean_zero=False), 0.5)
    _, hi_w = choquet_integral(SampledField(1, 4, w, mean_zero=False), 0.5)
    assert hi_v <= hi_w + tol_cap


def test_choquet_bucketing_still_brackets():
    rng = np.random.default_rng(31)
    v = rng.random(32)
    f = SampledField(1, 5, v, mean_zero=False)
    lo_full, hi_full = choquet_integral(f, 0.5, max_levels=48)
    lo_b, hi_b = choquet_integral(f, 0.5, max_levels=6)
    assert lo_b <= lo_full + tol_cap
    assert hi_b >= hi_full - tol_cap


def test_choquet_rejects_negative():
    f = SampledField(1, 3, np.array([1.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), mean_zero=False)
    with pytest.raises(InvariantViolation, match="nonnegative"):
        choquet_integral(f, 0.5)


def test_choquet_max_at_d_zero():
    # H^0 of every nonempty set is 1, so the layer cake collapses to the sup
    rng = np.random.default_rng(37)
    v = rng.random(16)
    lo, hi = choquet_integral(SampledField(1, 4, v, mean_zero=False), 0.0)
    assert_allclose([lo, hi], [v.max(), v.max()], rtol=0, atol=tol_cap)


####
# nontangential maximal function and admissible weights
####


def _cone_oracle(omega: WeightField, beta: float) -> np.ndarray:
    # direct O(rows N^2) sup over |y - x| < beta t with torus distance
    N = 1 << omega.J
    h = 2.0**-omega.J
    x = (np.arange(N) + 0.5) * h
    out = np.zeros(N)
    for i, t in enumerate(omega.scales.scales()):
        for c in range(N):
            dist = np.abs(x - x[c])
            dist = np.minimum(dist, 1.0 - dist)
            inside = dist < beta * t
            if inside.any():
                out[c] = max(out[c], omega.values[i][inside].max())
    return out


def test_nontangential_matches_cone_oracle():
    rng = np.random.default_rng(41)
    grid = ScaleGrid(0, 2, 2)
    vals = rng.random((grid.n_rows, 32))
    omega = WeightField(1, 5, grid, vals)
    got = nontangential_max(omega).values
    want = _cone_oracle(omega, 1.0)
    assert_allclose(got, want, rtol=0, atol=1e-13)


def test_nontangential_dominates_rows():
    rng = np.random.default_rng(43)
    grid = ScaleGrid(0, 1, 2)
    vals = rng.random((grid.n_rows, 16))
    omega = WeightField(1, 4, grid, vals)
    nmax = nontangential_max(omega).values
    assert np.all(nmax >= vals.max(axis=0) - 1e-15)


def test_nontangential_aperture_widens():
    rng = np.random.default_rng(47)
    grid = ScaleGrid(0, 1, 2)
    omega = WeightField(1, 4, grid, rng.random((grid.n_rows, 16)))
    n1 = nontangential_max(omega, beta=1.0).values
    n2 = nontangential_max(omega, beta=2.0).values
    assert np.all(n2 >= n1 - 1e-15)
    with pytest.raises(BtlhError, match="aperture"):
        nontangential_max(omega, beta=0.5)


def test_admissible_constant_weight_threshold():
    # at tau = 0 the constraint is sup (N omega)^cp <= 1: constants pass
    # at 1 and fail just above
    grid = ScaleGrid(0, 1, 1)
    ones = WeightField(1, 4, grid, np.ones((grid.n_rows, 16)))
    ok, margin = admissible(ones, 2.0, 2.0, 0.0)
    assert ok and abs(margin) < 1e-12
    hot = WeightField(1, 4, grid, np.full((grid.n_rows, 16), 1.01))
    ok2, margin2 = admissible(hot, 2.0, 2.0, 0.0)
    assert not ok2 and margin2 < 0.0


def test_admissible_parameter_validation():
    grid = ScaleGrid(0, 1, 1)
    w = WeightField(1, 4, grid, np.ones((grid.n_rows, 16)))
    with pytest.raises(BtlhError, match="p must lie"):
        admissible(w, 1.0, 2.0, 0.0)
    with pytest.raises(BtlhError, match="tau"):
        admissible(w, 2.0, 2.0, 0.9)


def test_normalize_weight_is_tight():
    rng = np.random.default_rng(53)
    grid = ScaleGrid(0, 2, 2)
    vals = 0.2 + rng.random((grid.n_rows, 32))
    omega = WeightField(1, 5, grid, vals)
    p, q, tau = 2.0, 2.0, 0.1
    scaled = normalize_weight(omega, p, q, tau)
    ok, margin = admissible(scaled, p, q, tau)
    assert ok
    assert 0.0 <= margin < 1e-6
    # strictly larger rescale breaks admissibility
    ok_hot, _ = admissible(scaled.scaled(1.001), p, q, tau)
    assert not ok_hot


def test_normalize_rejects_zero_weight():
    grid = ScaleGrid(0, 1, 1)
    w = WeightField(1, 4, grid, np.zeros((grid.n_rows, 16)))
    with pytest.raises(BtlhError, match="zero weight"):
        normalize_weight(w, 2.0, 2.0, 0.1)
