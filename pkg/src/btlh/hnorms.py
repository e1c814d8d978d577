"""Besov-Hausdorff and Triebel-Lizorkin-Hausdorff quasi-norms.

Each norm is an infimum over admissible weights omega of a weighted
functional; here the infimum is relaxed to a finite search: a fixed
dictionary of normalized candidate weights, refined by multiplicative
coordinate descent over dyadic boxes with re-normalization after each
accepted move.  Every reported value is therefore a certified upper bound
of the defining infimum, with the optimizing weight returned for
re-verification.  Comparisons between variants always run the same search
scheme on both sides, so optimizer slack cancels to first order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import BtlhError, SampledField, ScaleGrid
from .hausdorff import WeightField, admissible, normalize_weight
from .kernels import KernelSpec
from .norms import (
    DEFAULT_SCALES_PER_OCTAVE,
    _disk_sum,
    _magnitude_rows,
    _r_integrated_rows,
    continuous_scale_grid,
    level_limit,
)

FH_VARIANTS = (1, 2, 3, 4, 5, 6)
BH_VARIANTS = (1, 2, 3, 4, 5)
DESCENT_SWEEPS = 8
DESCENT_STEP = 2.0 ** (1.0 / 4.0)


@dataclass(frozen=True)
class HausdorffSpaceParams:
    """Exponents of the Hausdorff-type spaces.

    p is restricted to (1, inf) and tau to [0, 1/(p v q)']; the conjugate
    exponent and the Aoki-Rolewicz exponent v = 1/(1 + (p v q)') are
    derived.
    """

    s: float
    tau: float
    p: float
    q: float
    a: float | None = None
    r: float | None = None
    R: int = 1

    @property
    def conj(self) -> float:
        big = max(self.p, self.q)
        return big / (big - 1.0)

    @property
    def aoki_v(self) -> float:
        return 1.0 / (1.0 + self.conj)

    @property
    def pq_floor(self) -> float:
        return min(self.p, self.q)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise BtlhError(msg)


def validate_h_params(
    HP: HausdorffSpaceParams, family: str, variant: int | None, n: int
) -> None:
    """Parameter bounds of the chosen Hausdorff characterization."""
    _require(family in ("FH", "BH"), f"unknown family {family!r}")
    _require(1.0 < HP.p < np.inf, "Hausdorff spaces require p in (1, inf)")
    if family == "FH":
        _require(1.0 < HP.q < np.inf, "FH requires q in (1, inf)")
    else:
        _require(1.0 <= HP.q < np.inf, "BH requires q in [1, inf)")
    _require(
        0.0 <= HP.tau <= 1.0 / HP.conj + 1e-15,
        f"tau bound violated: needs tau in [0, 1/(p v q)'] = [0, {1.0 / HP.conj:.6g}]",
    )
    _require(
        HP.s + n * HP.tau < HP.R + 1,
        f"moment order too small: needs s + n tau < R + 1, got "
        f"{HP.s} + {n}*{HP.tau} >= {HP.R} + 1",
    )
    if variant is None:
        return
    variants = FH_VARIANTS if family == "FH" else BH_VARIANTS
    _require(variant in variants, f"{family}-variant must be one of {variants}")
    peetre = variant in ((2, 5) if family == "FH" else (2, 4))
    r_form = (family == "FH" and variant == 6) or (family == "BH" and variant == 5)
    if peetre:
        _require(HP.a is not None, f"variant {variant} needs the Peetre exponent a")
        if family == "FH":
            bound = n * (1.0 / HP.pq_floor + HP.tau)
            name = "n(1/min(p, q) + tau)"
        else:
            bound = n * (1.0 / HP.p + HP.tau)
            name = "n(1/p + tau)"
        _require(HP.a > bound, f"Peetre bound violated: needs a > {name} = {bound:.6g}")
    if r_form:
        _require(HP.a is not None and HP.r is not None, f"variant {variant} needs a and r")
        if family == "FH":
            bound = 2.0 * n * (1.0 / HP.pq_floor + HP.tau)
            name = "2n(1/min(p, q) + tau)"
            r_hi = HP.pq_floor
            r_name = "min(p, q)"
        else:
            bound = 2.0 * n / HP.p + n * HP.tau
            name = "2n/p + n tau"
            r_hi = HP.p
            r_name = "p"
        _require(HP.a > bound, f"Peetre bound violated: needs a > {name} = {bound:.6g}")
        _require(
            0.0 < HP.r < r_hi,
            f"inner exponent bound violated: needs r in (0, {r_name}) = (0, {r_hi:.6g})",
        )
        _require(
            (HP.a - n * HP.tau) * HP.r > 2.0 * n,
            f"product bound violated: needs (a - n tau) r > 2n = {2 * n}",
        )


def build_weight_dictionary(
    n: int, J: int, grid: ScaleGrid, HP: HausdorffSpaceParams
) -> list[WeightField]:
    """Fixed candidate weights, each normalized to a tight constraint.

    Members: the constant weight; spatial cones anchored at every dyadic
    cube of levels 0 and 1 (widest where the cube is); and two pure scale
    windows favoring coarse or fine scales.  The family is data
    independent, so comparisons across variants share it exactly.
    """
    N = 1 << J
    t = grid.scales()
    axes = (np.arange(N) + 0.5) / N
    shape = (t.size,) + (N,) * n
    members: list[np.ndarray] = [np.ones(shape)]
    for lam in (0, 1):
        side = 2.0**-lam
        for k_flat in range((1 << lam) ** n):
            if n == 1:
                centers = [(k_flat + 0.5) * side]
            else:
                centers = [
                    ((k_flat >> 1) + 0.5) * side,
                    ((k_flat & 1) + 0.5) * side,
                ]
            dist = None
            for ax, c in enumerate(centers):
                d1 = np.abs(axes - c)
                d1 = np.minimum(d1, 1.0 - d1)
                d1 = d1.reshape((-1, 1) if ax == 0 and n == 2 else (1, -1)) if n == 2 else d1
                dist = d1 if dist is None else np.hypot(dist, d1)
            cone = (1.0 + dist[None] / (t.reshape((-1,) + (1,) * n) + side / 4.0)) ** -2.0
            members.append(np.broadcast_to(cone, shape).copy())
    coarse = ((t / t[0]) ** 0.5).reshape((-1,) + (1,) * n)
    fine = ((t[-1] / t) ** 0.5).reshape((-1,) + (1,) * n)
    members.append(np.broadcast_to(coarse, shape).copy())
    members.append(np.broadcast_to(fine, shape).copy())
    out = []
    for vals in members:
        w = WeightField(n, J, grid, vals)
        out.append(normalize_weight(w, HP.p, HP.q, HP.tau))
    return out


def _descent_boxes(n: int, J: int, grid: ScaleGrid) -> list[tuple]:
    """Partition of the lattice into (row-group, spatial-cell) boxes."""
    rows = grid.n_rows
    m = grid.m
    groups = [slice(i, min(i + m, rows)) for i in range(0, rows, m)]
    lam = min(2 if n == 1 else 1, J)
    side = 1 << (J - lam)
    if n == 1:
        cells = [(slice(k * side, (k + 1) * side),) for k in range(1 << lam)]
    else:
        cells = [
            (slice(k0 * side, (k0 + 1) * side), slice(k1 * side, (k1 + 1) * side))
            for k0 in range(1 << lam)
            for k1 in range(1 << lam)
        ]
    return [(g,) + c for g in groups for c in cells]


def optimize_weight(
    objective,
    HP: HausdorffSpaceParams,
    n: int,
    J: int,
    grid: ScaleGrid,
    mask: np.ndarray | None = None,
    sweeps: int = DESCENT_SWEEPS,
) -> tuple[WeightField, float, list[float]]:
    """Upper-bound the infimum over admissible weights of the objective.

    objective maps a WeightField to a float and must be pointwise
    non-increasing in the weight.  Phase one scores the fixed dictionary;
    phase two runs multiplicative coordinate descent on the best member
    over dyadic boxes, re-normalizing every candidate, keeping only
    improving moves.  The trace of accepted values is monotone.  mask, if
    given, marks lattice points where the weight is allowed to vanish.
    """
    best_w = None
    best_v = np.inf
    for cand in build_weight_dictionary(n, J, grid, HP):
        v = objective(cand)
        if v < best_v:
            best_w, best_v = cand, v
    trace = [best_v]
    boxes = _descent_boxes(n, J, grid)
    for _ in range(max(0, sweeps)):
        improved = False
        for box in boxes:
            for step in (DESCENT_STEP, 1.0 / DESCENT_STEP):
                vals = best_w.values.copy()
                vals[box] *= step
                cand = normalize_weight(
                    WeightField(n, J, grid, vals, mask), HP.p, HP.q, HP.tau
                )
                v = objective(cand)
                if v < best_v * (1.0 - 1e-12):
                    best_w, best_v = cand, v
                    trace.append(v)
                    improved = True
                    break
        if not improved:
            break
    ok, _ = admissible(best_w, HP.p, HP.q, HP.tau)
    if not ok:
        raise BtlhError("optimizer produced an inadmissible weight")
    return best_w, best_v, trace


def _omega_inverse_times(M: np.ndarray, omega: np.ndarray) -> np.ndarray | None:
    """M / omega with 0/0 read as 0; None when the weight kills real mass."""
    bad = (M > 0.0) & (omega <= 0.0)
    if bad.any():
        return None
    return np.where(M > 0.0, M / np.where(omega > 0.0, omega, 1.0), 0.0)


def _lp(values: np.ndarray, p: float, h_n: float) -> float:
    return float((h_n * np.sum(values**p)) ** (1.0 / p))


def _f_objective(M: np.ndarray, w: np.ndarray, p: float, q: float, h_n: float):
    """L^p of the q-aggregated weighted rows (Lizorkin ordering)."""

    def value(omega: WeightField) -> float:
        ratio = _omega_inverse_times(M, omega.values)
        if ratio is None:
            return np.inf
        S = np.tensordot(w, ratio**q, axes=(0, 0))
        return _lp(S ** (1.0 / q), p, h_n)

    return value


def _b_objective(M: np.ndarray, w: np.ndarray, p: float, q: float, h_n: float):
    """q-aggregation of per-row L^p norms (Besov ordering)."""

    def value(omega: WeightField) -> float:
        ratio = _omega_inverse_times(M, omega.values)
        if ratio is None:
            return np.inf
        flat = ratio.reshape(ratio.shape[0], -1)
        per_row = (h_n * np.sum(flat**p, axis=1)) ** (1.0 / p)
        return float(np.sum(w * per_row**q) ** (1.0 / q))

    return value


def _tent_objective(
    M: np.ndarray, scales: np.ndarray, lw: float, HP: HausdorffSpaceParams, n: int, J: int
):
    """Tent form: the weight rides inside the shifted aperture integral."""
    h = 2.0**-J
    h_n = h**n

    def value(omega: WeightField) -> float:
        ratio = _omega_inverse_times(M, omega.values)
        if ratio is None:
            return np.inf
        S = np.zeros(M.shape[1:])
        for i, t in enumerate(scales):
            D = _disk_sum(ratio[i] ** HP.q, t / h, n) * h_n
            S += lw * t ** (-HP.s * HP.q - n) * D
        return _lp(S ** (1.0 / HP.q), HP.p, h_n)

    return value


@dataclass(frozen=True)
class HNormResult:
    """Certified upper bound with the optimizing weight and descent trace."""

    value: float
    omega: WeightField
    trace: tuple[float, ...]


def _rows_and_grid(
    f: SampledField,
    HP: HausdorffSpaceParams,
    kernel: KernelSpec,
    family: str,
    variant: int,
    m_scales: int,
) -> tuple[np.ndarray, np.ndarray, float, ScaleGrid]:
    continuous = variant in (1, 2, 3) if family == "FH" else variant in (1, 2)
    peetre = variant in ((2, 5) if family == "FH" else (2, 4))
    r_form = (family == "FH" and variant == 6) or (family == "BH" and variant == 5)
    if continuous:
        grid = continuous_scale_grid(kernel, f.J, m_scales)
        lw = grid.log_weight
    else:
        j_hi = level_limit(kernel, f.J)
        grid = ScaleGrid(0, j_hi, 1)
        lw = 1.0
    scales = grid.scales()
    if r_form:
        M = _r_integrated_rows(f, kernel, HP.a, HP.r, np.arange(grid.j_max + 1))
    else:
        M = _magnitude_rows(f, kernel, scales, "peetre" if peetre else "conv", HP.a)
    return M, scales, lw, grid


def _norm_h_impl(
    f: SampledField,
    HP: HausdorffSpaceParams,
    kernel: KernelSpec,
    family: str,
    variant: int,
    m_scales: int,
    sweeps: int,
) -> HNormResult:
    validate_h_params(HP, family, variant, f.n)
    M, scales, lw, grid = _rows_and_grid(f, HP, kernel, family, variant, m_scales)
    if not M.any():
        omega = normalize_weight(
            WeightField(f.n, f.J, grid, np.ones(M.shape)), HP.p, HP.q, HP.tau
        )
        return HNormResult(0.0, omega, (0.0,))
    h_n = f.h**f.n
    if family == "FH" and variant == 3:
        objective = _tent_objective(M, scales, lw, HP, f.n, f.J)
    else:
        w = lw * scales ** (-HP.s * HP.q)
        make = _f_objective if family == "FH" else _b_objective
        objective = make(M, w, HP.p, HP.q, h_n)
    omega, value, trace = optimize_weight(objective, HP, f.n, f.J, grid, sweeps=sweeps)
    return HNormResult(value, omega, tuple(trace))


def norm_FH_variant(
    f: SampledField,
    HP: HausdorffSpaceParams,
    kernel: KernelSpec,
    variant: int,
    m_scales: int = DEFAULT_SCALES_PER_OCTAVE,
    sweeps: int = DESCENT_SWEEPS,
    detail: bool = False,
):
    """The variant-th Triebel-Lizorkin-Hausdorff functional of f."""
    res = _norm_h_impl(f, HP, kernel, "FH", variant, m_scales, sweeps)
    return res if detail else res.value


def norm_BH_variant(
    f: SampledField,
    HP: HausdorffSpaceParams,
    kernel: KernelSpec,
    variant: int,
    m_scales: int = DEFAULT_SCALES_PER_OCTAVE,
    sweeps: int = DESCENT_SWEEPS,
    detail: bool = False,
):
    """The variant-th Besov-Hausdorff functional of f."""
    res = _norm_h_impl(f, HP, kernel, "BH", variant, m_scales, sweeps)
    return res if detail else res.value


def norm_FH_base(
    f: SampledField,
    HP: HausdorffSpaceParams,
    phi: KernelSpec,
    sweeps: int = DESCENT_SWEEPS,
    detail: bool = False,
):
    """Defining Triebel-Lizorkin-Hausdorff norm with a band-limited analyzer."""
    if phi.kind != "band_limited":
        raise BtlhError("base norm needs a band-limited analyzer")
    res = _norm_h_impl(f, HP, phi, "FH", 4, 1, sweeps)
    return res if detail else res.value


def norm_BH_base(
    f: SampledField,
    HP: HausdorffSpaceParams,
    phi: KernelSpec,
    sweeps: int = DESCENT_SWEEPS,
    detail: bool = False,
):
    """Defining Besov-Hausdorff norm with a band-limited analyzer."""
    if phi.kind != "band_limited":
        raise BtlhError("base norm needs a band-limited analyzer")
    res = _norm_h_impl(f, HP, phi, "BH", 3, 1, sweeps)
    return res if detail else res.value


def aoki_combine(values, HP: HausdorffSpaceParams) -> float:
    """(sum v_i^v)^{1/v} with the Aoki-Rolewicz exponent of the space."""
    arr = np.asarray(values, dtype=np.float64)
    if (arr < 0).any():
        raise BtlhError("aoki_combine takes nonnegative values")
    v = HP.aoki_v
    return float(np.sum(arr**v) ** (1.0 / v))


def optimize_group_weight(
    G: np.ndarray,
    grid: ScaleGrid,
    J: int,
    GP,
    space: str,
    sweeps: int = DESCENT_SWEEPS,
) -> float:
    """Weight infimum of the group-side Hausdorff flavors.

    G holds the inner Peetre sup rows of the group field; the functional is
    the global (no cube sup) mixed norm with the t^{-n} Haar factor and the
    weight applied row-wise.
    """
    n = G.ndim - 1
    HP = HausdorffSpaceParams(s=GP.s, tau=GP.tau, p=GP.p, q=GP.q, a=GP.a)
    t = grid.scales()
    s_g = GP.g_smoothness(n)
    w = grid.log_weight * t ** (-s_g * GP.q - n)
    h_n = (2.0**-J) ** n
    if not G.any():
        return 0.0
    make = _f_objective if space == "PH" else _b_objective
    objective = make(G, w, GP.p, GP.q, h_n)
    _, value, _ = optimize_weight(objective, HP, n, J, grid, sweeps=sweeps)
    return value
