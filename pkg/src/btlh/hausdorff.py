"""Dyadic Hausdorff capacity, Choquet integrals, and admissible weights.

Capacity of a grid set is bracketed by covers and packings built from
grid-aligned Euclidean balls with dyadic radii.  In one dimension at desk
scale the cover problem is solved exactly by a circular interval-cover DP,
so the bracket collapses to a point; elsewhere a greedy cover provides the
upper end and a disjoint packing with a covering-multiplicity constant the
lower end.  On top of the capacity sit the layer-cake Choquet integral, the
nontangential maximal function of a scale-indexed weight, and the unit-ball
constraint that makes a weight admissible for the Hausdorff-type norms.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import ndimage

from .grid import BtlhError, InvariantViolation, SampledField, ScaleGrid

EXACT_CELL_LIMIT = 32
CHOQUET_MAX_LEVELS = 48

_SET_HEADER = struct.Struct("<4sBBBB24x")
_SET_MAGIC = b"BTLS"


@dataclass(frozen=True)
class GridSet:
    """Subset of the dyadic grid at resolution J, stored as a cell mask."""

    n: int
    J: int
    mask: np.ndarray

    def __post_init__(self) -> None:
        if self.n not in (1, 2):
            raise BtlhError("dimension must be 1 or 2")
        mask = np.asarray(self.mask, dtype=bool)
        N = 1 << self.J
        want = (N,) if self.n == 1 else (N, N)
        if mask.shape != want:
            raise BtlhError(f"mask shape {mask.shape} does not match grid {want}")
        object.__setattr__(self, "mask", mask)

    @property
    def nonempty(self) -> bool:
        return bool(self.mask.any())

    @property
    def cell_count(self) -> int:
        return int(self.mask.sum())

    def translate(self, shift: tuple[int, ...] | int) -> "GridSet":
        """Shift by whole cells, wrapping around the torus."""
        if isinstance(shift, int):
            shift = (shift,) * self.n
        return GridSet(self.n, self.J, np.roll(self.mask, shift, axis=tuple(range(self.n))))

    def dilate_double(self) -> "GridSet":
        """The set 2E on the same grid; each cell becomes a 2^n block.

        Wrap-around aliasing makes this faithful only for sets inside the
        lower half of the torus in every coordinate.
        """
        idx = np.arange(1 << self.J) // 2
        if self.n == 1:
            return GridSet(self.n, self.J, self.mask[idx])
        return GridSet(self.n, self.J, self.mask[np.ix_(idx, idx)])

    def union(self, other: "GridSet") -> "GridSet":
        if (other.n, other.J) != (self.n, self.J):
            raise BtlhError("grid mismatch in set union")
        return GridSet(self.n, self.J, self.mask | other.mask)


def level_set(f: SampledField, lam: float, strict: bool = True) -> GridSet:
    """Cells where f exceeds the level: {f > lam}, or {f >= lam} if not strict."""
    v = f.values.real
    return GridSet(f.n, f.J, v > lam if strict else v >= lam)


def save_set(E: GridSet, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(_SET_HEADER.pack(_SET_MAGIC, 1, E.n, E.J, 0))
        fh.write(np.packbits(E.mask.ravel()).tobytes())


def load_set(path: str) -> GridSet:
    with open(path, "rb") as fh:
        magic, version, n, J, _flags = _SET_HEADER.unpack(fh.read(_SET_HEADER.size))
        if magic != _SET_MAGIC or version != 1:
            raise BtlhError("not a grid-set file")
        N = 1 << J
        count = N if n == 1 else N * N
        bits = np.unpackbits(np.frombuffer(fh.read(), dtype=np.uint8), count=count)
        mask = bits.astype(bool).reshape((N,) if n == 1 else (N, N))
        return GridSet(n, J, mask)


@dataclass(frozen=True)
class CapacityBracket:
    """Two-sided enclosure of the dyadic Hausdorff capacity H^d."""

    lower: float
    upper: float
    d: float
    method: str

    def __post_init__(self) -> None:
        if not (0.0 <= self.lower <= self.upper):
            raise InvariantViolation("capacity bracket endpoints out of order")

    def scaled(self, c: float) -> "CapacityBracket":
        return replace(self, lower=self.lower * c, upper=self.upper * c)

    def to_json(self) -> str:
        return json.dumps(
            {"d": self.d, "lower": self.lower, "upper": self.upper, "method": self.method}
        )


def _dyadic_radii(n: int, J: int) -> list[float]:
    # n = 1 includes the half-cell radius so a lone cell is covered exactly
    # and dyadic dilation maps optimal covers radius-for-radius; n = 2 needs
    # the full-torus radius 1 because no radius-1/2 ball holds the square
    lo = -(J + 1) if n == 1 else -J
    hi = 0 if n == 2 else -1
    return [2.0**e for e in range(lo, hi + 1)]


def _exact_cover_1d(mask: np.ndarray, J: int, d: float) -> float:
    """Minimal cover cost of a 1-D grid set, exact over dyadic arcs.

    Works in half-cell integer units on the circle of size 2N.  The outer
    loop conditions on the arc covering the first required unit; the rest
    is a linear interval-cover DP on the cut-open remainder.  Joint coverage
    of a cell by several arcs is handled exactly because every arc boundary
    falls on the unit lattice.
    """
    N = mask.size
    size = 2 * N
    pts = np.nonzero(np.repeat(mask, 2))[0]
    if pts.size == 0:
        return 0.0
    u = 0.5 / N
    lengths = [(2 * (1 << a), ((1 << a) * u) ** d) for a in range(J + 1)]

    def linear_cover(xs: np.ndarray, window: int) -> float:
        # xs sorted ascending in [0, window); f[i] covers the first i points
        f = np.full(xs.size + 1, np.inf)
        f[0] = 0.0
        for i in range(1, xs.size + 1):
            x = int(xs[i - 1])
            for L, cost in lengths:
                a = max(0, x - L + 1)
                j = int(np.searchsorted(xs, a))
                if f[j] + cost < f[i]:
                    f[i] = f[j] + cost
        return float(f[-1])

    best = np.inf
    p0 = int(pts[0])
    for L, cost in lengths:
        if L >= size:
            best = min(best, cost)
            continue
        for s in range(p0 - L + 1, p0 + 1):
            lo = s % size
            covered = (pts - lo) % size < L
            rest = pts[~covered]
            if rest.size == 0:
                best = min(best, cost)
                continue
            end = (lo + L) % size
            q = np.sort((rest - end) % size)
            best = min(best, cost + linear_cover(q, size - L))
    return best


def _ball_indicator(n: int, J: int, r_cells: float) -> np.ndarray:
    """Torus indicator at the origin of offsets whose cell fits in the ball."""
    N = 1 << J
    m = min(int(np.floor(r_cells + 0.5)), N)
    off = np.arange(-m, m + 1)
    # farthest point of the cell at a given offset, capped by the torus
    # wrap: beyond half a period the distance folds back
    far = np.minimum(np.abs(off) + 0.5, N / 2.0)
    ind = np.zeros((N,) if n == 1 else (N, N), dtype=bool)
    if n == 1:
        keep = far**2 <= r_cells**2 + 1e-12
        ind[off[keep] % N] = True
    else:
        d2 = far[:, None] ** 2 + far[None, :] ** 2
        oy, ox = np.nonzero(d2 <= r_cells**2 + 1e-12)
        ind[off[oy] % N, off[ox] % N] = True
    return ind


def _greedy_cover(E: GridSet, d: float) -> float:
    """Largest-gain-per-cost greedy cover; ties to smaller radius, then
    lexicographic center.  Refined by the best single-ball cover when one
    candidate ball already contains the whole set.

    Coverage counts come from circular cross-correlation with the ball
    indicator, so each pass costs a handful of FFTs.
    """
    radii = _dyadic_radii(E.n, E.J)
    h = 2.0**-E.J
    stamps = []
    for r in radii:
        ind = _ball_indicator(E.n, E.J, r / h)
        stamps.append((r, ind, np.conj(np.fft.fftn(ind.astype(np.float64))), r**d))
    uncovered = E.mask.copy()
    total_cells = int(uncovered.sum())
    total = 0.0
    best_single = np.inf
    first_pass = True
    while uncovered.any():
        U = np.fft.fftn(uncovered.astype(np.float64))
        best = None
        for r, ind, sfft, cost in stamps:
            counts = np.rint(np.fft.ifftn(U * sfft).real).astype(np.int64)
            if first_pass and counts.max() == total_cells:
                best_single = min(best_single, cost)
            flat = int(np.argmax(counts))
            gain = int(counts.ravel()[flat])
            if gain == 0:
                continue
            key = (-gain / cost, r, flat)
            if best is None or key < best[0]:
                best = (key, ind, cost, np.unravel_index(flat, counts.shape))
        first_pass = False
        if best is None:
            raise InvariantViolation("greedy cover cannot make progress")
        _, ind, cost, center = best
        total += cost
        covered = np.roll(ind, center, axis=tuple(range(E.n)))
        uncovered &= ~covered
    return min(total, best_single)


def _torus_dist2(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    diff = np.abs(a - b)
    diff = np.minimum(diff, 1.0 - diff)
    return diff**2 if n == 1 else (diff**2).sum(axis=-1)


def _packing_lower(E: GridSet, d: float) -> float:
    """Disjoint balls meeting E, discounted by the covering multiplicity.

    Any cover ball of radius r can eat at most (r/rho + 2)^n packing balls
    of radius rho, so each packing ball certifies at least
    min_r r^d / (r/rho + 2)^n of covering cost.
    """
    h = 2.0**-E.J
    radii = _dyadic_radii(E.n, E.J)
    if E.n == 1:
        centers = (np.nonzero(E.mask)[0] + 0.5) * h
    else:
        yy, xx = np.nonzero(E.mask)
        centers = np.stack([(yy + 0.5) * h, (xx + 0.5) * h], axis=-1)
    best = 0.0
    for rho in radii:
        chosen: list[np.ndarray] = []
        for c in centers:
            ok = all(_torus_dist2(c, o, E.n) >= (2 * rho) ** 2 - 1e-15 for o in chosen)
            if ok:
                chosen.append(c)
        per_ball = min(r**d / (r / rho + 2.0) ** E.n for r in radii)
        best = max(best, len(chosen) * per_ball)
    return best


def capacity(E: GridSet, d: float) -> CapacityBracket:
    """Bracket the d-dimensional dyadic Hausdorff capacity of a grid set."""
    if not (0.0 <= d <= E.n):
        raise BtlhError(f"dimension parameter {d} outside [0, {E.n}]")
    if not E.nonempty:
        return CapacityBracket(0.0, 0.0, d, "empty")
    if d == 0.0:
        # every cover has at least one ball and one torus-sized ball suffices
        return CapacityBracket(1.0, 1.0, d, "exact-d0")
    if E.n == 1 and E.mask.size <= EXACT_CELL_LIMIT:
        v = _exact_cover_1d(E.mask, E.J, d)
        return CapacityBracket(v, v, d, "exact-dp")
    upper = _greedy_cover(E, d)
    lower = min(_packing_lower(E, d), upper)
    return CapacityBracket(lower, upper, d, "greedy-packing")


def choquet_integral(
    f: SampledField, d: float, max_levels: int = CHOQUET_MAX_LEVELS
) -> tuple[float, float]:
    """Layer-cake Choquet integral of a nonnegative field against H^d.

    Exact (as an interval of capacity brackets) when the number of distinct
    sample levels fits the budget; otherwise consecutive levels are grouped
    into quantile buckets and each bucket is bounded one-sidedly, keeping
    the enclosure valid.
    """
    v = f.values.real
    if (v < 0).any():
        raise InvariantViolation("Choquet integral needs nonnegative samples")
    levels = np.unique(v)
    if levels[0] > 0.0:
        levels = np.concatenate(([0.0], levels))
    if levels.size == 1:
        return (0.0, 0.0)
    if levels.size - 1 > max_levels:
        pick = np.unique(
            np.linspace(0, levels.size - 1, max_levels + 1).round().astype(int)
        )
        bounds = levels[pick]
    else:
        bounds = levels
    lo = 0.0
    hi = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        width = float(b - a)
        upper_set = GridSet(f.n, f.J, v > a)
        lower_set = GridSet(f.n, f.J, v >= b)
        hi += width * capacity(upper_set, d).upper
        lo += width * capacity(lower_set, d).lower
    return (lo, hi)


@dataclass(frozen=True)
class WeightField:
    """Nonnegative weight on the space-scale lattice (grid x ScaleGrid).

    `vanish_ok` marks the lattice points where the governed function
    vanishes; the admissibility check rejects a weight that vanishes
    anywhere else, per the definition of the tilde spaces.
    """

    n: int
    J: int
    scales: ScaleGrid
    values: np.ndarray
    vanish_ok: np.ndarray | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        N = 1 << self.J
        want = (self.scales.n_rows,) + ((N,) if self.n == 1 else (N, N))
        if vals.shape != want:
            raise BtlhError(f"weight shape {vals.shape} does not match lattice {want}")
        if (vals < 0).any():
            raise InvariantViolation("weights must be nonnegative")
        object.__setattr__(self, "values", vals)
        if self.vanish_ok is not None:
            m = np.asarray(self.vanish_ok, dtype=bool)
            if m.shape != want:
                raise BtlhError("vanish mask shape does not match lattice")
            object.__setattr__(self, "vanish_ok", m)

    def scaled(self, c: float) -> "WeightField":
        return replace(self, values=self.values * float(c))

    def vanishing_rule_ok(self) -> bool:
        if self.vanish_ok is None:
            return True
        return not np.any((self.values == 0.0) & ~self.vanish_ok)


def _strict_offset(limit_cells: float) -> int:
    # largest integer offset with |offset| strictly below the limit
    return max(int(np.ceil(limit_cells - 1e-9)) - 1, 0)


def _row_cone_max(row: np.ndarray, radius_cells: float, n: int) -> np.ndarray:
    """Max of one scale-row over the open ball |y - x| < radius (torus)."""
    if n == 1:
        m = _strict_offset(radius_cells)
        N = row.size
        if 2 * m + 1 >= N:
            return np.full_like(row, row.max())
        return ndimage.maximum_filter1d(row, size=2 * m + 1, mode="wrap")
    my = _strict_offset(radius_cells)
    N = row.shape[0]
    out = np.full_like(row, -np.inf)
    for dy in range(-my, my + 1):
        rem2 = radius_cells**2 - dy * dy
        if rem2 <= 0:
            continue
        mx = _strict_offset(np.sqrt(rem2))
        shifted = np.roll(row, -dy, axis=0)
        if 2 * mx + 1 >= N:
            line = shifted.max(axis=1, keepdims=True).repeat(N, axis=1)
        else:
            line = ndimage.maximum_filter1d(shifted, size=2 * mx + 1, mode="wrap", axis=1)
        np.maximum(out, line, out=out)
    return out


def nontangential_max(omega: WeightField, beta: float = 1.0) -> SampledField:
    """N_beta omega(x) = sup over lattice points with torus |y-x| < beta t."""
    if beta < 1.0:
        raise BtlhError("aperture must be at least 1")
    h = 2.0**-omega.J
    out = None
    for i, t in enumerate(omega.scales.scales()):
        row = _row_cone_max(omega.values[i], beta * t / h, omega.n)
        out = row if out is None else np.maximum(out, row)
    return SampledField(omega.n, omega.J, out, mean_zero=False)


def _dual_exponent(p: float, q: float) -> float:
    big = max(p, q)
    if np.isinf(big):
        return 1.0
    return big / (big - 1.0)


def _check_weight_params(p: float, q: float, tau: float) -> float:
    if not (1.0 < p < np.inf):
        raise BtlhError("p must lie in (1, inf)")
    if not (q >= 1.0):
        raise BtlhError("q must be at least 1")
    cp = _dual_exponent(p, q)
    if not (0.0 <= tau <= 1.0 / cp + 1e-15):
        raise BtlhError(f"tau {tau} outside [0, 1/(p v q)' = {1.0 / cp:.6g}]")
    return cp


def admissible(
    omega: WeightField, p: float, q: float, tau: float
) -> tuple[bool, float]:
    """Check the unit Choquet-ball constraint on (N omega)^{(p v q)'}.

    Returns (ok, margin) with margin = 1 - upper end of the Choquet
    enclosure at d = n tau (p v q)'.  A weight that vanishes where the
    governed function does not is rejected outright.
    """
    cp = _check_weight_params(p, q, tau)
    d = omega.n * tau * cp
    nmax = nontangential_max(omega)
    integrand = nmax.with_values(nmax.values.real**cp)
    _, hi = choquet_integral(integrand, d)
    margin = 1.0 - hi
    return (margin >= 0.0) and omega.vanishing_rule_ok(), margin


def normalize_weight(omega: WeightField, p: float, q: float, tau: float) -> WeightField:
    """Rescale a weight so the admissibility constraint is tight.

    The Choquet functional is exactly homogeneous of degree (p v q)' in the
    weight, so the ideal factor is upper^(-1/(p v q)'); a few nextafter
    nudges absorb the rounding of the recomputed functional.
    """
    cp = _check_weight_params(p, q, tau)
    if not omega.values.any():
        raise BtlhError("cannot normalize an identically zero weight")
    d = omega.n * tau * cp
    nmax = nontangential_max(omega)
    _, hi = choquet_integral(nmax.with_values(nmax.values.real**cp), d)
    if hi == 1.0:
        return omega
    c = float(hi) ** (-1.0 / cp)
    for _ in range(8):
        cand = omega.scaled(c)
        _, margin = admissible(cand, p, q, tau)
        if margin >= 0.0:
            return cand
        c = np.nextafter(c, 0.0)
    return omega.scaled(c)
