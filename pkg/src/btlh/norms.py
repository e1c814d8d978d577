"""Besov-type and Triebel-Lizorkin-type quasi-norms and their variants.

The base norms take a band-limited analyzer; the numbered variants replace
it by local means, Peetre maximal functions, tent functionals, or the
r-integrated maximal form, in continuous-scale or discrete-level flavors.
All of them share one aggregation core: per-scale nonnegative rows are
suffix-combined over the level window of each dyadic cube, integrated over
the cube, and the cube sup is taken with the Morrey factor |P|^-tau.
Routing every variant through the same core keeps the pointwise domination
chains exact in floating point, not just up to rounding.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .grid import BtlhError, NumericalRangeError, SampledField, ScaleGrid, dyadic_resample
from .kernels import (
    KernelSpec,
    PeetreParams,
    convolve_scale,
    peetre_maximal,
    signed_coords,
)

F_VARIANTS = (1, 2, 3, 4, 5, 6)
B_VARIANTS = (1, 2, 3, 4, 5)
DEFAULT_SCALES_PER_OCTAVE = 4

_F_LABELS = {
    1: "F1-cont-local-means",
    2: "F2-cont-peetre",
    3: "F3-tent",
    4: "F4-disc-peetre",
    5: "F5-disc-local-means",
    6: "F6-r-integrated",
}
_B_LABELS = {
    1: "B1-cont-local-means",
    2: "B2-cont-peetre",
    3: "B3-disc-peetre",
    4: "B4-disc-local-means",
    5: "B5-r-integrated",
}


@dataclass(frozen=True)
class SpaceParams:
    """Exponents of the type spaces: smoothness s, Morrey tau, integrability
    p and q, Peetre exponent a, inner exponent r, kernel moment order R."""

    s: float
    tau: float
    p: float
    q: float
    a: float | None = None
    r: float | None = None
    R: int = 1

    def __post_init__(self) -> None:
        if not (self.p > 0):
            raise BtlhError("p must be positive")
        if not (self.q > 0):
            raise BtlhError("q must be positive")
        if self.tau < 0:
            raise BtlhError("tau must be nonnegative")

    @property
    def pq_floor(self) -> float:
        return min(self.p, self.q)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise BtlhError(msg)


def validate_params(
    P: SpaceParams, family: str, variant: int, n: int, kernel: KernelSpec
) -> None:
    """Check the parameter bounds of the chosen characterization.

    Error messages name the violated bound so a failing configuration can
    be read off directly.
    """
    _require(family in ("F", "B"), f"unknown family {family!r}")
    if family == "F":
        _require(variant in F_VARIANTS, f"F-variant must be one of {F_VARIANTS}")
        _require(np.isfinite(P.p), "F-type requires p < inf")
    else:
        _require(variant in B_VARIANTS, f"B-variant must be one of {B_VARIANTS}")
    _require(
        P.s + n * P.tau < P.R + 1,
        f"moment order too small: needs s + n tau < R + 1, got "
        f"{P.s} + {n}*{P.tau} >= {P.R} + 1",
    )
    _require(
        kernel.moment_order >= P.R,
        f"kernel declares moment order {kernel.moment_order} < required R = {P.R}",
    )
    floor = P.pq_floor if family == "F" else P.p
    name = "min(p, q)" if family == "F" else "p"
    if (family == "F" and variant in (2, 4)) or (family == "B" and variant in (2, 3)):
        _require(P.a is not None, f"variant {variant} needs the Peetre exponent a")
        _require(P.a > n / floor, f"Peetre bound violated: needs a > n/{name} = {n / floor:.6g}")
    if (family == "F" and variant == 6) or (family == "B" and variant == 5):
        _require(P.a is not None and P.r is not None, f"variant {variant} needs a and r")
        _require(
            0 < P.r < floor, f"inner exponent bound violated: needs r in (0, {name}) = (0, {floor:.6g})"
        )
        _require(
            P.a > 2 * n / floor,
            f"Peetre bound violated: needs a > 2n/{name} = {2 * n / floor:.6g}",
        )
        _require(P.a * P.r > 2 * n, f"product bound violated: needs a r > 2n = {2 * n}")
    if family == "F" and variant == 3:
        _require(np.isfinite(P.q), "tent functional requires q < inf")


def level_limit(kernel: KernelSpec, J: int) -> int:
    """Finest dyadic level j with 2^-j still resolvable by this kernel."""
    j = int(np.floor(-np.log2(kernel.min_scale(J)) + 1e-9))
    if j < 0:
        raise NumericalRangeError("kernel support leaves no admissible levels at this grid")
    return j


def continuous_scale_grid(kernel: KernelSpec, J: int, m: int) -> ScaleGrid:
    """Scale lattice for the continuous variants, every row resolvable."""
    L = -np.log2(kernel.min_scale(J))
    j_max = int(np.floor(L - (m - 1) / m + 1e-9))
    if j_max < 0:
        raise NumericalRangeError("kernel support leaves no admissible scales at this grid")
    return ScaleGrid(0, j_max, m)


def _cube_reduce(W: np.ndarray, level: int, n: int, op: str) -> np.ndarray:
    """Reduce a per-cell array over every dyadic cube at one level."""
    N = W.shape[-1]
    side = N >> level
    if n == 1:
        parts = W.reshape(1 << level, side)
        return parts.sum(axis=1) if op == "sum" else parts.max(axis=1)
    parts = W.reshape(1 << level, side, 1 << level, side)
    return parts.sum(axis=(1, 3)) if op == "sum" else parts.max(axis=(1, 3))


def _f_aggregate(
    T: np.ndarray,
    stride: int,
    n: int,
    J: int,
    tau: float,
    p: float,
    outer_exp: float,
    sup_mode: bool,
) -> tuple[float, np.ndarray]:
    """Cube sup of the F-type outer integral from weighted scale rows.

    T has one fully weighted row per scale; the window of a level-lambda
    cube is the row suffix starting at lambda*stride.  In sup_mode the rows
    combine by max (q = inf), otherwise by sum.
    """
    R = T.shape[0]
    h_n = 2.0 ** (-n * J)
    n_levels = (R - 1) // stride + 1
    if sup_mode:
        suffix = np.maximum.accumulate(T[::-1], axis=0)[::-1]
    else:
        suffix = np.cumsum(T[::-1], axis=0)[::-1]
    per_level = np.empty(n_levels)
    for lam in range(n_levels):
        S = suffix[lam * stride]
        W = S if outer_exp == 1.0 else S**outer_exp
        sums = _cube_reduce(W, lam, n, "sum") * h_n
        per_level[lam] = 2.0 ** (lam * n * tau) * float(sums.max()) ** (1.0 / p)
    return float(per_level.max()), per_level


def _b_aggregate(
    M: np.ndarray,
    w: np.ndarray,
    stride: int,
    n: int,
    J: int,
    tau: float,
    p: float,
    q: float,
) -> tuple[float, np.ndarray]:
    """Cube sup of the B-type norm from magnitude rows and their weights.

    For finite q the weights multiply U^q before the row sum; for q = inf
    they multiply U directly and rows combine by max.
    """
    R = M.shape[0]
    h_n = 2.0 ** (-n * J)
    n_levels = (R - 1) // stride + 1
    q_inf = np.isinf(q)
    p_inf = np.isinf(p)
    Mp = None if p_inf else M**p
    per_level = np.empty(n_levels)
    for lam in range(n_levels):
        acc = None
        for row in range(lam * stride, R):
            if p_inf:
                U = _cube_reduce(M[row], lam, n, "max")
            else:
                U = (_cube_reduce(Mp[row], lam, n, "sum") * h_n) ** (1.0 / p)
            term = w[row] * U if q_inf else w[row] * U**q
            if acc is None:
                acc = term.copy()
            elif q_inf:
                np.maximum(acc, term, out=acc)
            else:
                acc += term
        vals = acc if q_inf else acc ** (1.0 / q)
        per_level[lam] = 2.0 ** (lam * n * tau) * float(vals.max())
    return float(per_level.max()), per_level


def _strict_offset(limit_cells: float) -> int:
    return max(int(np.ceil(limit_cells - 1e-9)) - 1, 0)


def _disk_sum(vq: np.ndarray, radius_cells: float, n: int) -> np.ndarray:
    """Sum of vq over cells whose centers lie strictly within the radius."""
    from scipy import ndimage

    if n == 1:
        m = _strict_offset(radius_cells)
        N = vq.size
        if 2 * m + 1 >= N:
            return np.full_like(vq, vq.sum())
        return ndimage.uniform_filter1d(vq, size=2 * m + 1, mode="wrap") * (2 * m + 1)
    my = _strict_offset(radius_cells)
    N = vq.shape[0]
    out = np.zeros_like(vq)
    for dy in range(-my, my + 1):
        rem2 = radius_cells**2 - dy * dy
        if rem2 <= 0:
            continue
        mx = _strict_offset(np.sqrt(rem2))
        shifted = np.roll(vq, -dy, axis=0)
        if 2 * mx + 1 >= N:
            out += shifted.sum(axis=1, keepdims=True)
        else:
            out += ndimage.uniform_filter1d(shifted, size=2 * mx + 1, mode="wrap", axis=1) * (
                2 * mx + 1
            )
    return out


def _torus_radius_grid(n: int, J: int) -> np.ndarray:
    d = np.abs(signed_coords(J))
    return d if n == 1 else np.hypot(d[:, None], d[None, :])


def _r_integrated_rows(
    f: SampledField, kernel: KernelSpec, a: float, r: float, levels: np.ndarray
) -> np.ndarray:
    """G_j(x) = [2^{jn} integral |Phi_j*f|^r (1 + 2^j |x-y|)^{-ar} dy]^{1/r}."""
    dist = _torus_radius_grid(f.n, f.J)
    h_n = f.h**f.n
    rows = np.empty((levels.size,) + f.values.shape[-f.n :])
    for i, j in enumerate(levels):
        conv = convolve_scale(f, kernel, 2.0 ** (-int(j)))
        wgt = 2.0 ** (int(j) * f.n) * (1.0 + dist * 2.0 ** int(j)) ** (-a * r)
        prod = np.fft.ifftn(np.fft.fftn(np.abs(conv.values) ** r) * np.fft.fftn(wgt)).real
        rows[i] = np.maximum(prod * h_n, 0.0) ** (1.0 / r)
    return rows


def _magnitude_rows(
    f: SampledField,
    kernel: KernelSpec,
    scales: np.ndarray,
    kind: str,
    a: float | None,
) -> np.ndarray:
    rows = np.empty((scales.size,) + f.values.shape[-f.n :])
    for i, t in enumerate(scales):
        if kind == "peetre":
            rows[i] = peetre_maximal(f, kernel, PeetreParams(a, float(t))).values
        else:
            rows[i] = np.abs(convolve_scale(f, kernel, float(t)).values)
    return rows


def _norm_impl(
    f: SampledField,
    P: SpaceParams,
    kernel: KernelSpec,
    family: str,
    variant: int,
    m_scales: int,
) -> tuple[float, np.ndarray]:
    validate_params(P, family, variant, f.n, kernel)
    continuous = variant in ((1, 2, 3) if family == "F" else (1, 2))
    peetre_kind = variant in ((2,) if family == "F" else (2, 3)) or (
        family == "F" and variant == 4
    )
    if continuous:
        grid = continuous_scale_grid(kernel, f.J, m_scales)
        scales = grid.scales()
        stride = grid.m
        lw = grid.log_weight
    else:
        j_hi = level_limit(kernel, f.J)
        scales = 2.0 ** (-np.arange(j_hi + 1, dtype=float))
        stride = 1
        lw = 1.0
    if (family == "F" and variant == 6) or (family == "B" and variant == 5):
        M = _r_integrated_rows(f, kernel, P.a, P.r, np.arange(j_hi + 1))
    else:
        M = _magnitude_rows(f, kernel, scales, "peetre" if peetre_kind else "conv", P.a)
    q_inf = np.isinf(P.q)
    if family == "B":
        if q_inf:
            w = scales ** (-P.s)
        else:
            w = lw * scales ** (-P.s * P.q)
        return _b_aggregate(M, w, stride, f.n, f.J, P.tau, P.p, P.q)
    if variant == 3:
        h = f.h
        D = np.empty_like(M)
        for i, t in enumerate(scales):
            D[i] = _disk_sum(M[i] ** P.q, t / h, f.n) * h**f.n
        T = D * (lw * scales ** (-P.s * P.q - f.n)).reshape((-1,) + (1,) * f.n)
        return _f_aggregate(T, stride, f.n, f.J, P.tau, P.p, P.p / P.q, False)
    if q_inf:
        T = M * (scales ** (-P.s)).reshape((-1,) + (1,) * f.n)
        return _f_aggregate(T, stride, f.n, f.J, P.tau, P.p, P.p, True)
    T = M**P.q * (lw * scales ** (-P.s * P.q)).reshape((-1,) + (1,) * f.n)
    return _f_aggregate(T, stride, f.n, f.J, P.tau, P.p, P.p / P.q, False)


def norm_F_variant(
    f: SampledField,
    P: SpaceParams,
    kernel: KernelSpec,
    variant: int,
    m_scales: int = DEFAULT_SCALES_PER_OCTAVE,
) -> float:
    """The variant-th Triebel-Lizorkin-type quasi-norm of f."""
    return _norm_impl(f, P, kernel, "F", variant, m_scales)[0]


def norm_B_variant(
    f: SampledField,
    P: SpaceParams,
    kernel: KernelSpec,
    variant: int,
    m_scales: int = DEFAULT_SCALES_PER_OCTAVE,
) -> float:
    """The variant-th Besov-type quasi-norm of f."""
    return _norm_impl(f, P, kernel, "B", variant, m_scales)[0]


def norm_F_base(f: SampledField, P: SpaceParams, phi: KernelSpec) -> float:
    """Defining Triebel-Lizorkin-type norm with a band-limited analyzer."""
    if phi.kind != "band_limited":
        raise BtlhError("base norm needs a band-limited analyzer")
    return _norm_impl(f, P, phi, "F", 5, 1)[0]


def norm_B_base(f: SampledField, P: SpaceParams, phi: KernelSpec) -> float:
    """Defining Besov-type norm with a band-limited analyzer."""
    if phi.kind != "band_limited":
        raise BtlhError("base norm needs a band-limited analyzer")
    return _norm_impl(f, P, phi, "B", 4, 1)[0]


def variant_label(family: str, variant: int) -> str:
    return (_F_LABELS if family == "F" else _B_LABELS)[variant]


@dataclass(frozen=True)
class NormReport:
    """Empirical record of the variant values across a corpus.

    values[i, k, v] is the norm of field i under kernel k and the v-th
    listed variant; the ratio matrices hold min and max of value_v1/value_v2
    across all (field, kernel) pairs; refinement_delta[v] is the largest
    relative change after one octave of upsampling.
    """

    family: str
    variants: tuple[int, ...]
    values: np.ndarray
    ratio_min: np.ndarray
    ratio_max: np.ndarray
    refinement_delta: np.ndarray

    @property
    def spread(self) -> np.ndarray:
        """Worst-case equivalence spread per variant pair."""
        return self.ratio_max / self.ratio_min

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": self.family,
                "variants": [variant_label(self.family, v) for v in self.variants],
                "values": self.values.tolist(),
                "ratio_min": self.ratio_min.tolist(),
                "ratio_max": self.ratio_max.tolist(),
                "refinement_delta": self.refinement_delta.tolist(),
            },
            indent=2,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf)
        wr.writerow(["field", "kernel", "variant", "value"])
        nf, nk, nv = self.values.shape
        for i in range(nf):
            for k in range(nk):
                for v in range(nv):
                    wr.writerow(
                        [i, k, variant_label(self.family, self.variants[v]), repr(float(self.values[i, k, v]))]
                    )
        return buf.getvalue()


def equivalence_report(
    corpus: list[SampledField],
    P: SpaceParams,
    kernels: list[KernelSpec],
    family: str = "F",
    variants: tuple[int, ...] | None = None,
    m_scales: int = DEFAULT_SCALES_PER_OCTAVE,
    refine: bool = True,
) -> NormReport:
    """Evaluate every requested variant over a corpus and record ratios."""
    if not corpus:
        raise BtlhError("corpus must be nonempty")
    if variants is None:
        variants = F_VARIANTS if family == "F" else B_VARIANTS
    norm_fn = norm_F_variant if family == "F" else norm_B_variant
    nf, nk, nv = len(corpus), len(kernels), len(variants)
    values = np.empty((nf, nk, nv))
    deltas = np.zeros(nv)
    for i, f in enumerate(corpus):
        if not np.any(f.values):
            raise BtlhError(f"corpus field {i} is identically zero")
        for k, ker in enumerate(kernels):
            for v, var in enumerate(variants):
                values[i, k, v] = norm_fn(f, P, ker, var, m_scales)
                if refine:
                    up = dyadic_resample(f, "up")
                    fine = norm_fn(up, P, ker, var, m_scales)
                    deltas[v] = max(
                        deltas[v], abs(fine - values[i, k, v]) / values[i, k, v]
                    )
    ratio_min = np.full((nv, nv), np.inf)
    ratio_max = np.zeros((nv, nv))
    for v1 in range(nv):
        for v2 in range(nv):
            ratios = values[:, :, v1] / values[:, :, v2]
            ratio_min[v1, v2] = float(ratios.min())
            ratio_max[v1, v2] = float(ratios.max())
    return NormReport(
        family=family,
        variants=tuple(variants),
        values=values,
        ratio_min=ratio_min,
        ratio_max=ratio_max,
        refinement_delta=deltas,
    )
