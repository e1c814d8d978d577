"""The n-dimensional ax+b group: translations, Haar quadrature, Peetre-type norms.

Group elements are pairs (x, t) of a spatial point and a positive scale,
multiplying as (x,t)(y,s) = (x+ty, st).  Functions on the group are stored
as GField arrays over (scale row x spatial grid); the scale axis is a
ScaleGrid and carries the log-uniform quadrature of dt/t.  The four norm
flavors share the aggregation cores of the type-space module; the two
Hausdorff flavors route their weight infimum through the optimizer of the
Hausdorff-norm module.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import BtlhError, InvariantViolation, NumericalRangeError, ScaleGrid
from .kernels import _peetre_from_conv
from .norms import _b_aggregate, _f_aggregate


@dataclass(frozen=True)
class GroupPoint:
    """Element (x, t) of the ax+b group; x is an n-vector, t > 0."""

    x: tuple[float, ...]
    t: float

    def __post_init__(self) -> None:
        if not (self.t > 0):
            raise InvariantViolation(f"scale component must be positive, got {self.t}")


def identity(n: int) -> GroupPoint:
    return GroupPoint((0.0,) * n, 1.0)


def group_mul(g1: GroupPoint, g2: GroupPoint) -> GroupPoint:
    """(x,t)(y,s) = (x + t y, s t)."""
    x = tuple(xi + g1.t * yi for xi, yi in zip(g1.x, g2.x))
    return GroupPoint(x, g1.t * g2.t)


def group_inv(g: GroupPoint) -> GroupPoint:
    """(x,t)^{-1} = (-x/t, 1/t)."""
    return GroupPoint(tuple(-xi / g.t for xi in g.x), 1.0 / g.t)


@dataclass(frozen=True)
class GField:
    """Function on the group sampled over (scale rows x spatial grid).

    values has shape (scale_grid.n_rows,) + (2^J,)*n.  source records how
    the field was produced (free-form metadata, not interpreted).
    """

    n: int
    J: int
    scale_grid: ScaleGrid
    values: np.ndarray
    source: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        want = (self.scale_grid.n_rows,) + (1 << self.J,) * self.n
        if v.shape != want:
            raise InvariantViolation(
                f"value array shape {v.shape} does not match lattice {want}"
            )
        if not np.all(np.isfinite(v)):
            raise InvariantViolation("non-finite samples in group field")
        object.__setattr__(self, "values", v)

    @property
    def h(self) -> float:
        return 2.0**-self.J

    def with_values(self, values: np.ndarray) -> "GField":
        return GField(self.n, self.J, self.scale_grid, values, dict(self.source))


@dataclass(frozen=True)
class GSpaceParams:
    """Exponents of the group-side spaces, in function-space convention.

    s is the smoothness of the associated function space; the group-side
    smoothness is shifted by the coorbit correspondence, see g_smoothness.
    """

    s: float
    tau: float
    p: float
    q: float
    a: float

    def g_smoothness(self, n: int) -> float:
        return self.s + n / 2.0 - n / self.q

    def validate(self, space: str, n: int) -> None:
        if space not in ("L", "P", "LH", "PH"):
            raise BtlhError(f"unknown group space {space!r}")
        if not (self.p > 0 and self.q > 0):
            raise BtlhError("p and q must be positive")
        if self.tau < 0:
            raise BtlhError("tau must be nonnegative")
        if space == "P" and not np.isfinite(self.p):
            raise BtlhError("P-type space requires p < inf")
        if space in ("L", "P"):
            floor = min(self.p, self.q) if space == "P" else self.p
            name = "min(p, q)" if space == "P" else "p"
            if not self.a > n / floor:
                raise BtlhError(
                    f"Peetre bound violated: needs a > n/{name} = {n / floor:.6g}"
                )
        else:
            if not (1.0 < self.p < np.inf):
                raise BtlhError("Hausdorff flavors require p in (1, inf)")
            if not (1.0 <= self.q < np.inf):
                raise BtlhError("Hausdorff flavors require q in [1, inf)")
            cp = _conjugate(max(self.p, self.q))
            if self.tau > 1.0 / cp + 1e-15:
                raise BtlhError(
                    f"tau bound violated: needs tau <= 1/(p v q)' = {1.0 / cp:.6g}"
                )
            floor = min(self.p, self.q) if space == "PH" else self.p
            name = "min(p, q)" if space == "PH" else "p"
            if not self.a > n * (1.0 / floor + self.tau):
                raise BtlhError(
                    f"Peetre bound violated: needs a > n(1/{name} + tau) = "
                    f"{n * (1.0 / floor + self.tau):.6g}"
                )


def _conjugate(e: float) -> float:
    if np.isinf(e):
        return 1.0
    return e / (e - 1.0)


def haar_integral(F: GField) -> float:
    """Quadrature of the left Haar integral: sum over the lattice of
    F dx dt/t^{n+1} with log-uniform scale weights."""
    t = F.scale_grid.scales()
    lw = F.scale_grid.log_weight
    h_n = F.h**F.n
    row_sums = F.values.reshape(t.size, -1).sum(axis=1) * h_n
    return float(np.sum(lw * t ** (-float(F.n)) * row_sums))


def _interp_rows(F: GField, query_log_t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values of F at arbitrary scales by linear interpolation in log t.

    Returns (rows, in_range) where rows[i] is the field at the i-th query
    scale and in_range flags queries inside the lattice window.
    """
    t = F.scale_grid.scales()
    lt = -np.log2(t)
    lo, hi = lt[0], lt[-1]
    q = np.asarray(query_log_t, dtype=np.float64)
    in_range = (q >= lo - 1e-9) & (q <= hi + 1e-9)
    qc = np.clip(q, lo, hi)
    idx = np.clip(np.searchsorted(lt, qc, side="right") - 1, 0, lt.size - 2)
    frac = (qc - lt[idx]) / (lt[idx + 1] - lt[idx])
    # snap to lattice rows so lattice-exact translations stay exact
    frac = np.where(frac < 1e-9, 0.0, np.where(frac > 1.0 - 1e-9, 1.0, frac))
    rows = (1.0 - frac).reshape((-1,) + (1,) * F.n) * F.values[idx] + frac.reshape(
        (-1,) + (1,) * F.n
    ) * F.values[idx + 1]
    return rows, in_range


def _shift_spatial(rows: np.ndarray, offsets: np.ndarray, n: int, J: int) -> np.ndarray:
    """Translate each scale row by its own spatial offset, periodically.

    offsets is (n_rows, n) in torus units; non-lattice offsets interpolate
    bilinearly between neighboring cells.
    """
    N = 1 << J
    out = np.empty_like(rows)
    for i in range(rows.shape[0]):
        sh = offsets[i] * N
        base = np.floor(sh).astype(int)
        frac = sh - base
        r = rows[i]
        if n == 1:
            a = np.roll(r, -base[0])
            b = np.roll(r, -(base[0] + 1))
            out[i] = (1 - frac[0]) * a + frac[0] * b
        else:
            a = np.roll(r, (-base[0], -base[1]), axis=(0, 1))
            b = np.roll(r, (-base[0] - 1, -base[1]), axis=(0, 1))
            c = np.roll(r, (-base[0], -base[1] - 1), axis=(0, 1))
            d = np.roll(r, (-base[0] - 1, -base[1] - 1), axis=(0, 1))
            out[i] = (
                (1 - frac[0]) * (1 - frac[1]) * a
                + frac[0] * (1 - frac[1]) * b
                + (1 - frac[0]) * frac[1] * c
                + frac[0] * frac[1] * d
            )
    return out


def left_translate(F: GField, g: GroupPoint) -> GField:
    """L_{(y,r)} F (x,t) = F((x-y)/r, t/r)."""
    y = np.asarray(g.x)
    r = g.t
    t = F.scale_grid.scales()
    # query scale t/r per output row, then spatial map (x-y)/r
    rows, ok = _interp_rows(F, -np.log2(t / r))
    if not ok.any():
        raise NumericalRangeError(
            "left translation pushes every scale row outside the lattice window"
        )
    if not ok.all():
        warnings.warn(
            f"left translation clips {int((~ok).sum())} of {ok.size} scale rows",
            stacklevel=2,
        )
    rows = rows * ok.reshape((-1,) + (1,) * F.n)
    N = 1 << F.J
    out = np.empty_like(rows)
    axes = np.arange(N) / N
    for i in range(t.size):
        # sample F at (x - y)/r for every grid x, one axis at a time
        qs = [((axes - yi) / r) % 1.0 for yi in y]
        if F.n == 1:
            out[i] = _bilinear_1d(rows[i], qs[0] * N)
        else:
            out[i] = _bilinear_2d(rows[i], qs[0] * N, qs[1] * N)
    return F.with_values(out)


def right_translate(F: GField, g: GroupPoint) -> GField:
    """R_{(y,r)} F (x,t) = F(x + t y, r t)."""
    y = np.asarray(g.x)
    r = g.t
    t = F.scale_grid.scales()
    rows, ok = _interp_rows(F, -np.log2(r * t))
    if not ok.any():
        raise NumericalRangeError(
            "right translation pushes every scale row outside the lattice window"
        )
    if not ok.all():
        warnings.warn(
            f"right translation clips {int((~ok).sum())} of {ok.size} scale rows",
            stacklevel=2,
        )
    rows = rows * ok.reshape((-1,) + (1,) * F.n)
    offsets = t[:, None] * y[None, :]
    return F.with_values(_shift_spatial(rows, offsets, F.n, F.J))


def _bilinear_1d(row: np.ndarray, pos: np.ndarray) -> np.ndarray:
    N = row.size
    base = np.floor(pos).astype(int) % N
    frac = pos - np.floor(pos)
    return (1 - frac) * row[base] + frac * row[(base + 1) % N]


def _bilinear_2d(rowv: np.ndarray, pos0: np.ndarray, pos1: np.ndarray) -> np.ndarray:
    N = rowv.shape[0]
    b0 = np.floor(pos0).astype(int) % N
    f0 = (pos0 - np.floor(pos0))[:, None]
    b1 = np.floor(pos1).astype(int) % N
    f1 = (pos1 - np.floor(pos1))[None, :]
    v00 = rowv[np.ix_(b0, b1)]
    v10 = rowv[np.ix_((b0 + 1) % N, b1)]
    v01 = rowv[np.ix_(b0, (b1 + 1) % N)]
    v11 = rowv[np.ix_((b0 + 1) % N, (b1 + 1) % N)]
    return (1 - f0) * (1 - f1) * v00 + f0 * (1 - f1) * v10 + (1 - f0) * f1 * v01 + f0 * f1 * v11


def peetre_rows(F: GField, a: float) -> np.ndarray:
    """Inner Peetre sup of the group norms, per output scale row.

    At scale t the sup runs over all grid offsets y and all lattice scales
    r in [t/2, t]: max_r sup_y |F(x+y, r)| / (1 + |y|/r)^a.
    """
    t = F.scale_grid.scales()
    m = F.scale_grid.m
    out = np.zeros_like(F.values, dtype=np.float64)
    mag = np.abs(F.values)
    for i in range(t.size):
        # lattice scales within [t/2, t] are the next m rows downward
        for k in range(i, min(i + m + 1, t.size)):
            cand = _peetre_from_conv(mag[k], F.n, F.J, float(t[k]), a)
            np.maximum(out[i], cand, out[i])
    return out


def norm_G(F: GField, GP: GSpaceParams, space: str) -> float:
    """Peetre-type norm of a group field, flavors L, P, LH, PH.

    L and P use the cube-sup aggregation; LH and PH take the infimum over
    admissible Hausdorff weights through the shared optimizer and report
    its certified upper bound.
    """
    GP.validate(space, F.n)
    s_g = GP.g_smoothness(F.n)
    t = F.scale_grid.scales()
    lw = F.scale_grid.log_weight
    G = peetre_rows(F, GP.a)
    if space in ("L", "P"):
        q_inf = np.isinf(GP.q)
        if space == "P":
            if q_inf:
                # the measure factor t^-n is absorbed by the essential sup
                T = G * (t**-s_g).reshape((-1,) + (1,) * F.n)
                return _f_aggregate(T, F.scale_grid.m, F.n, F.J, GP.tau, GP.p, GP.p, True)[0]
            T = G**GP.q * (lw * t ** (-s_g * GP.q - F.n)).reshape((-1,) + (1,) * F.n)
            return _f_aggregate(
                T, F.scale_grid.m, F.n, F.J, GP.tau, GP.p, GP.p / GP.q, False
            )[0]
        w = t ** (-s_g - F.n / GP.q) if q_inf else lw * t ** (-s_g * GP.q - F.n)
        return _b_aggregate(G, w, F.scale_grid.m, F.n, F.J, GP.tau, GP.p, GP.q)[0]
    from .hnorms import optimize_group_weight

    return optimize_group_weight(G, F.scale_grid, F.J, GP, space)


def operator_bound_check(
    space: str,
    GP: GSpaceParams,
    direction: str,
    g: GroupPoint,
    corpus: list[GField],
) -> tuple[float, float]:
    """Empirical translate-norm ratio against the predicted bound shape.

    Returns (max over corpus of norm(translated F)/norm(F), bound_shape).
    The bound shape is the operator-norm envelope: for right translation by
    (z, r) it is r^{s_g + n/q} (1 v r^-a)(1 v r^{n tau})(1+|z|)^a; for left
    translation r^{n(1/p - 1/q) - s_g - n tau}, with the tau term entering
    the opposite way for the Hausdorff flavors.
    """
    if direction not in ("left", "right"):
        raise BtlhError(f"direction must be left or right, got {direction!r}")
    if not corpus:
        raise InvariantViolation("empty corpus")
    n = corpus[0].n
    GP.validate(space, n)
    s_g = GP.g_smoothness(n)
    r = g.t
    z = float(np.sqrt(sum(xi * xi for xi in g.x)))
    tau_sign = -1.0 if space in ("LH", "PH") else 1.0
    if direction == "right":
        shape = (
            r ** (s_g + n / GP.q)
            * max(1.0, r**-GP.a)
            * max(1.0, r ** (tau_sign * n * GP.tau))
            * (1.0 + z) ** GP.a
        )
    else:
        shape = r ** (n * (1.0 / GP.p - 1.0 / GP.q) - s_g - tau_sign * n * GP.tau)
    translate = right_translate if direction == "right" else left_translate
    worst = 0.0
    for F in corpus:
        base = norm_G(F, GP, space)
        if base == 0.0:
            raise InvariantViolation("corpus member has zero norm")
        moved = norm_G(translate(F, g), GP, space)
        worst = max(worst, moved / base)
    return worst, shape


def wiener_control(F: GField) -> GField:
    """Control function over Q = [-1,1]^n x [1/2, 2]:
    K(x,t) = sup of |F| over the set (x,t)Q = {(x+ty, ts)}."""
    from scipy.ndimage import maximum_filter1d

    t = F.scale_grid.scales()
    m = F.scale_grid.m
    mag = np.abs(F.values)
    N = 1 << F.J
    out = np.zeros_like(mag)
    for i in range(t.size):
        # scale part: ts for s in [1/2, 2] spans rows i-m .. i+m
        acc = np.zeros_like(mag[i])
        for k in range(max(0, i - m), min(i + m + 1, t.size)):
            np.maximum(acc, mag[k], acc)
        # spatial part: offsets ty with |y| <= 1 per axis, half-width t
        w_cells = int(np.floor(t[i] / F.h + 1e-9))
        size = 2 * w_cells + 1
        if size >= N:
            acc = np.full_like(acc, acc.max())
        elif F.n == 1:
            acc = maximum_filter1d(acc, size=size, mode="wrap")
        else:
            acc = maximum_filter1d(acc, size=size, mode="wrap", axis=0)
            acc = maximum_filter1d(acc, size=size, mode="wrap", axis=1)
        out[i] = acc
    return F.with_values(out)


def weight_wY_exponents(GP: GSpaceParams, n: int) -> tuple[float, float, float]:
    """Envelope exponents (v, r1, r2) controlling the space's weight:
    w(x,t) <= (1+|x|)^v (t^{r2} + t^{-r1})."""
    s, tau, p, a = GP.s, GP.tau, GP.p, GP.a
    r1 = max(
        s + n * tau + n * (0.5 - 1.0 / p),
        -s + n * tau + n * (1.0 / p - 0.5),
        s + a - n / 2.0,
        -s - n / 2.0 + a,
    )
    r2 = max(
        -s + n * tau + n * (1.0 / p - 0.5),
        s - n * (1.0 / p - 0.5) + n * tau,
        s + n / 2.0,
        -s + n / 2.0 + a,
    )
    return a, r1, r2
