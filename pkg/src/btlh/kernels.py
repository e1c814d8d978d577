"""Kernel constructions, scale convolutions, and maximal functions.

Frequencies are measured in integer torus modes (cycles per unit length), so
a kernel symbol is a radial profile r -> Phi-hat(r) evaluated at r = t*|k|.
Three constructions are provided:

* a smooth band-limited annulus kernel (symbol 1 on 3/5 <= r <= 5/3, 0 off
  1/2 <= r <= 2),
* local means: N-fold Laplacians of a mean-one base bump, symbol
  (-|2 pi r|^2)^N k-hat(r),
* radial differences: phi0(r) - phi0(2r) of a radial Fourier profile.

Scale convolutions are exact Fourier multiplications on the periodic grid.
The smallest admissible scale is 4h: below that the symbol's annulus leaves
the resolved frequency band.  Hardy-Littlewood and Peetre-type maximal
functions and the continuous wavelet transform live here as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, TYPE_CHECKING

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import uniform_filter

from .grid import (
    InvariantViolation,
    NumericalRangeError,
    SampledField,
    ScaleGrid,
)

if TYPE_CHECKING:
    from .group import GField

TAUBERIAN_THRESHOLD = 1e-3
MOMENT_RTOL = 1e-6
MIN_SCALE_CELLS = 4

_radii_cache: dict[tuple[int, int], np.ndarray] = {}


def mode_radii(n: int, J: int) -> np.ndarray:
    """|k| over the FFT-ordered integer frequency grid."""
    key = (n, J)
    if key not in _radii_cache:
        N = 1 << J
        k = np.fft.fftfreq(N, d=1.0 / N)
        if n == 1:
            _radii_cache[key] = np.abs(k)
        else:
            _radii_cache[key] = np.hypot(k[:, None], k[None, :])
    return _radii_cache[key]


def signed_coords(J: int) -> np.ndarray:
    """Grid coordinates folded to [-1/2, 1/2), aligned with FFT ordering of x."""
    N = 1 << J
    idx = np.arange(N)
    return ((idx + N // 2) % N - N // 2) * 2.0 ** (-J)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A convolution kernel given by a radial Fourier profile.

    Attributes
    ----------
    kind : str
        One of 'band_limited', 'local_means', 'radial_diff'.
    n, J : int
        Grid the symbol field is sampled on.
    moment_order : int
        Vanishing moments: all moments of total order <= moment_order vanish.
        Band-limited kernels record J here (every discrete moment vanishes).
    tauberian_eps : float
        Scale normalization of the positivity annulus.
    annulus : (float, float)
        Interval of radii on which |profile| >= 1e-3 * max|profile|.
    symbol : ndarray
        profile(|k|) on the (n, J) frequency grid, FFT ordering.
    params : dict
        Construction parameters, JSON-serializable (kernel catalog entry).
    """

    kind: str
    n: int
    J: int
    moment_order: int
    tauberian_eps: float
    annulus: tuple[float, float]
    support_hi: float
    params: dict = field(repr=False)
    _profile: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    symbol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbol", self.profile(mode_radii(self.n, self.J)))

    def profile(self, r: np.ndarray | float) -> np.ndarray:
        """Evaluate the radial symbol at arbitrary nonnegative radii."""
        return self._profile(np.asarray(r, dtype=np.float64))

    def min_scale(self, J: int) -> float:
        """Smallest scale resolvable at resolution J.

        The symbol's essential support must stay inside the Nyquist band
        |k| <= N/2, i.e. support_hi / t <= N/2; never below four grid cells.
        """
        h = 2.0 ** (-J)
        return max(MIN_SCALE_CELLS, 2.0 * self.support_hi) * h


def _smoothstep(u: np.ndarray) -> np.ndarray:
    # C-infinity transition: 0 for u <= 0, 1 for u >= 1
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    return a / (a + b)


def _band_profile(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    plateau = (r >= 0.6) & (r <= 5.0 / 3.0)
    out[plateau] = 1.0
    rise = (r > 0.5) & (r < 0.6)
    out[rise] = _smoothstep((r[rise] - 0.5) / 0.1)
    fall = (r > 5.0 / 3.0) & (r < 2.0)
    out[fall] = _smoothstep((2.0 - r[fall]) / (2.0 - 5.0 / 3.0))
    return out


def _scan_radii(r_max: float) -> np.ndarray:
    # log-spaced scan resolves both tiny and large radii; 0 included explicitly
    return np.concatenate(([0.0], np.geomspace(r_max * 1e-6, r_max, 6000)))


def _threshold_interval(
    profile: Callable, r_max: float, threshold_ratio: float
) -> tuple[float, float]:
    """Widest radius interval with |profile| >= threshold_ratio * max."""
    r = _scan_radii(r_max)
    v = np.abs(profile(r))
    peak = v.max()
    if peak <= 0.0:
        raise InvariantViolation("kernel symbol is identically zero")
    mask = v >= threshold_ratio * peak
    best = (0, 0)
    lo = None
    for i, m in enumerate(mask):
        if m and lo is None:
            lo = i
        elif not m and lo is not None:
            if i - lo > best[1] - best[0]:
                best = (lo, i)
            lo = None
    if lo is not None and mask.size - lo > best[1] - best[0]:
        best = (lo, mask.size)
    return float(r[best[0]]), float(r[best[1] - 1])


def _locate_annulus(profile: Callable, r_max: float) -> tuple[float, float]:
    return _threshold_interval(profile, r_max, TAUBERIAN_THRESHOLD)


def _locate_support(profile: Callable, r_max: float) -> float:
    """Largest radius carrying more than 1e-10 of the symbol peak.

    The threshold sits above the quadrature noise floor of sampled profiles,
    which (2 pi r)^2-type factors would otherwise amplify into a fake tail.
    """
    r = _scan_radii(r_max)
    v = np.abs(profile(r))
    alive = np.nonzero(v >= 1e-10 * v.max())[0]
    return float(r[alive[-1]]) * 1.05


def _choose_eps(annulus: tuple[float, float]) -> float:
    """An eps with [eps/2, 2 eps] inside the annulus; geometric-mean preference."""
    lo, hi = annulus
    if hi < 4.0 * lo:
        raise InvariantViolation(
            f"no Tauberian annulus: positivity interval [{lo:.4g}, {hi:.4g}] "
            "is narrower than one octave on each side"
        )
    return float(np.clip(np.sqrt(lo * hi), 2.0 * lo, hi / 2.0))


def make_band_limited_kernel(n: int, J: int) -> KernelSpec:
    """Smooth radial annulus kernel: symbol 1 on [3/5, 5/3], 0 off [1/2, 2].

    The transition zones use a C-infinity smoothstep, so all spatial moments
    vanish; moment_order records J as a stand-in for infinity.  The Tauberian
    interval of this kernel is its plateau [3/5, 5/3] (a two-sided annulus of
    ratio 4 cannot fit inside the support [1/2, 2]); eps is recorded as 1.
    """
    if J < 3:
        raise NumericalRangeError(
            f"grid too coarse to resolve the annulus: need J >= 3, got {J}"
        )
    return KernelSpec(
        kind="band_limited",
        n=n,
        J=J,
        moment_order=J,
        tauberian_eps=1.0,
        annulus=(0.6, 5.0 / 3.0),
        support_hi=2.0,
        params={"kind": "band_limited", "n": n, "J": J},
        _profile=_band_profile,
    )


def _radial_ft_1d(values: np.ndarray, J: int) -> Callable[[np.ndarray], np.ndarray]:
    """k-hat(r) of a real even 1-D sample field, at arbitrary real radii.

    Direct quadrature h * sum k(x) cos(2 pi r x) over signed coordinates;
    exact for the field's periodization against non-integer frequencies up to
    the field's own localization error.
    """
    x = signed_coords(J)
    h = 2.0 ** (-J)
    v = values.astype(np.float64)

    def evaluate(r: np.ndarray) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=np.float64))
        out = h * (np.cos(2.0 * np.pi * np.outer(r.ravel(), x)) @ v)
        return out.reshape(r.shape)

    return evaluate


def _radial_ft_2d(values: np.ndarray, J: int) -> Callable[[np.ndarray], np.ndarray]:
    """Radialized k-hat for a real radial 2-D field, via dense table + spline."""
    x = signed_coords(J)
    h = 2.0 ** (-J)
    N = 1 << J
    r_max = np.sqrt(2.0) * (N / 2) * 2.0 + 4.0
    r_tab = np.arange(0.0, r_max, 1.0 / 64.0)
    # for radial k the transform is radial, so evaluating along (r, 0)
    # suffices; the second axis collapses at frequency zero
    row = values.astype(np.float64).sum(axis=1) * h
    tab = h * (np.cos(2.0 * np.pi * np.outer(r_tab, x)) @ row)
    spline = CubicSpline(r_tab, tab, extrapolate=False)

    def evaluate(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        out = spline(np.clip(r, 0.0, r_tab[-1]))
        return np.nan_to_num(out, nan=0.0)

    return evaluate


def make_local_means_kernel(k_base: SampledField, N: int) -> KernelSpec:
    """Local-means kernel: N-fold Laplacian of a base bump k.

    Symbol (-|2 pi r|^2)^N k-hat(r); the base must have nonzero mean.  Gives
    2N - 1 vanishing moment orders.  The Tauberian annulus is located as the
    widest interval where |symbol| >= 1e-3 of its peak.
    """
    base_mean = float(np.real(k_base.values.mean()))
    if abs(base_mean) < 1e-14:
        raise InvariantViolation("not a valid local-means generator: k-hat(0) = 0")
    khat = (_radial_ft_1d if k_base.n == 1 else _radial_ft_2d)(
        np.real(k_base.values), k_base.J
    )

    def profile(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        return (-((2.0 * np.pi * r) ** 2)) ** N * khat(r)

    half_band = (1 << k_base.J) // 2
    annulus = _locate_annulus(profile, float(half_band))
    return KernelSpec(
        kind="local_means",
        n=k_base.n,
        J=k_base.J,
        moment_order=2 * N - 1,
        tauberian_eps=_choose_eps(annulus),
        annulus=annulus,
        support_hi=_locate_support(profile, float(half_band)),
        params={"kind": "local_means", "N": N, "n": k_base.n, "J": k_base.J},
        _profile=profile,
    )


def make_radial_diff_kernel(
    phi0: SampledField | Callable[[np.ndarray], np.ndarray],
    R: int,
    n: int | None = None,
    J: int | None = None,
) -> KernelSpec:
    """Difference kernel from a radial Fourier profile: symbol phi0(r) - phi0(2r).

    phi0 is either its values on the frequency grid (FFT ordering, radial,
    phi0(0) != 0, flat to order R at the origin; verified numerically) or an
    analytic radial callable, in which case n and J fix the symbol grid.
    Sampled profiles must be resolved by the unit frequency spacing; analytic
    ones are evaluated exactly.
    """
    if callable(phi0):
        if n is None or J is None:
            raise InvariantViolation("analytic profile input needs explicit n and J")
        base = phi0
        if abs(float(np.asarray(base(np.array([0.0]))).ravel()[0])) < 1e-14:
            raise InvariantViolation("phi0(0) must be nonzero")
    else:
        n, J = phi0.n, phi0.J
        vals = np.real(phi0.values)
        if phi0.n == 2:
            # radial check: sample at (r,0) and (0,r) must agree
            if not np.allclose(vals[:, 0], vals[0, :], rtol=1e-9, atol=1e-12):
                raise InvariantViolation("non-radial input profile")
        if abs(vals.flat[0]) < 1e-14:
            raise InvariantViolation("phi0(0) must be nonzero")
        base = _profile_from_frequency_samples(vals, phi0.n, phi0.J)

    def profile(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        return base(r) - base(2.0 * r)

    half_band = (1 << J) // 2
    annulus = _locate_annulus(profile, float(half_band))
    return KernelSpec(
        kind="radial_diff",
        n=n,
        J=J,
        moment_order=R,
        tauberian_eps=_choose_eps(annulus),
        annulus=annulus,
        support_hi=_locate_support(profile, float(half_band)),
        params={"kind": "radial_diff", "R": R, "n": n, "J": J},
        _profile=profile,
    )


def _profile_from_frequency_samples(
    vals: np.ndarray, n: int, J: int
) -> Callable[[np.ndarray], np.ndarray]:
    """Trigonometric radial interpolant through frequency-grid samples.

    The samples are treated as one period of an even sequence; the unique
    band-limited interpolant is evaluated at arbitrary radii and cut to zero
    beyond the Nyquist radius, where a resolved profile has already decayed.
    """
    seq = (vals if n == 1 else vals[:, 0]).astype(np.float64)
    N = seq.size
    half = N // 2
    coeff = np.fft.ifft(seq)
    m = np.fft.fftfreq(N, d=1.0 / N)

    def evaluate(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        flat = r.ravel()
        out = np.empty_like(flat)
        for start in range(0, flat.size, 8192):
            chunk = flat[start : start + 8192]
            phases = np.exp(2j * np.pi * np.outer(chunk, m) / N)
            out[start : start + chunk.size] = (phases @ coeff).real
        out = np.where(flat > half, 0.0, out)
        return out.reshape(r.shape)

    return evaluate


def gaussian_bump(n: int, J: int, sigma: float = 0.125) -> SampledField:
    """Unit-mass Gaussian bump centered at the origin of the torus (wrapped).

    The width must keep the bump away from the opposite side of the torus:
    a wrapped tail puts a corner at distance 1/2 whose slow spectral decay
    the Laplacian in a local-means kernel would amplify into a plateau.
    """
    d = np.abs(signed_coords(J))
    if n == 1:
        rho = d
    else:
        rho = np.hypot(d[:, None], d[None, :])
    v = np.exp(-np.pi * (rho / sigma) ** 2) / sigma**n
    return SampledField(n, J, v, mean_zero=False)


def gaussian_frequency_profile(n: int, J: int, width: float = 8.0) -> SampledField:
    """exp(-pi (r/width)^2) on the frequency grid, as a radial_diff input.

    The width must be large enough for unit-spaced samples to resolve the
    profile: its sample-sequence spectrum decays like exp(-pi (width m / N)^2),
    and widths below ~8 at N = 256 leave that spectrum alive at the sequence
    Nyquist, which rings through the interpolant as a fake far tail.
    """
    r = mode_radii(n, J)
    return SampledField(n, J, np.exp(-np.pi * (r / width) ** 2), mean_zero=False)


def plateau_profile(inner: float = 0.8, outer: float = 3.2) -> Callable[[np.ndarray], np.ndarray]:
    """Analytic radial_diff base: 1 up to `inner`, C-infinity down to 0 at `outer`.

    Flat to all orders at the origin and compactly supported, so the
    difference kernel phi0(r) - phi0(2r) lives on [inner/2, outer] exactly.
    The default outer/inner ratio 4 leaves room for a Tauberian interval.
    """

    def base(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        return 1.0 - _smoothstep((r - inner) / (outer - inner))

    return base


def convolve_scale(f: SampledField, kernel: KernelSpec, t: float) -> SampledField:
    """Phi_t * f with Phi_t = t^-n Phi(./t), as inverse FFT of profile(t|k|) f-hat.

    Exact on the periodic grid for band-limited data.  Scales with the
    symbol's support beyond the Nyquist band are rejected as aliasing.
    """
    t_min = kernel.min_scale(f.J)
    if t < t_min * (1.0 - 1e-12):
        raise NumericalRangeError(
            f"scale t={t:.6g} under-resolved at J={f.J}: admissible range is "
            f"[{t_min:.6g}, inf)"
        )
    spec = np.fft.fftn(f.values)
    out = np.fft.ifftn(kernel.profile(t * mode_radii(f.n, f.J)) * spec)
    if not np.iscomplexobj(f.values):
        out = out.real
    return SampledField(f.n, f.J, out, mean_zero=True)


def convolve_level(f: SampledField, kernel: KernelSpec, j: int) -> SampledField:
    """Dyadic convolution phi_j * f = convolve_scale at t = 2^-j."""
    return convolve_scale(f, kernel, 2.0 ** (-j))


def hl_maximal(f: SampledField) -> SampledField:
    """Hardy-Littlewood maximal function over centered grid-aligned cubes.

    Windows are all odd side lengths up to N; the side-1 window makes
    Mf >= |f| hold exactly.
    """
    a = np.abs(f.values)
    out = a.copy()
    for w in range(3, f.N + 1, 2):
        np.maximum(out, uniform_filter(a, size=w, mode="wrap"), out=out)
    return SampledField(f.n, f.J, out, mean_zero=False)


@dataclass(frozen=True)
class PeetreParams:
    """Decay exponent and scale for Peetre-type maximal functions.

    variant 'sharp' takes the sup over spatial offsets at fixed scale t;
    'tilde' additionally sups over lattice scales s in [t/2, t], with the
    weight (1 + |y|/s)^-a following the inner scale.
    """

    a: float
    t: float
    variant: str = "sharp"

    def __post_init__(self) -> None:
        if self.a <= 0:
            raise InvariantViolation(f"Peetre exponent a must be positive, got {self.a}")
        if self.variant not in ("sharp", "tilde"):
            raise InvariantViolation(f"unknown Peetre variant {self.variant!r}")


def torus_distance_1d(J: int) -> np.ndarray:
    """d(0, y) for all grid offsets y, n=1."""
    N = 1 << J
    idx = np.arange(N)
    return np.minimum(idx, N - idx) * 2.0 ** (-J)


def _peetre_from_conv(conv: np.ndarray, n: int, J: int, t: float, a: float) -> np.ndarray:
    """sup_y |conv(x+y)| / (1 + |y|/t)^a over all grid offsets y."""
    mag = np.abs(conv)
    N = 1 << J
    if n == 1:
        w = (1.0 + torus_distance_1d(J) / t) ** (-a)
        idx = (np.arange(N)[:, None] + np.arange(N)[None, :]) % N
        return np.max(mag[idx] * w[None, :], axis=1)
    d1 = torus_distance_1d(J)
    out = np.zeros_like(mag)
    for dy in range(N):
        dist = np.hypot(d1[dy], d1)  # offset (dy, dx) for all dx
        w = (1.0 + dist / t) ** (-a)
        rolled = np.roll(mag, -dy, axis=0)
        # max over dx of rolled(x0, x1+dx) * w[dx]
        idx = (np.arange(N)[:, None] + np.arange(N)[None, :]) % N
        cand = np.max(rolled[:, idx] * w[None, None, :], axis=2)
        np.maximum(out, cand, out=out)
    return out


def peetre_maximal(
    f: SampledField,
    kernel: KernelSpec,
    params: PeetreParams,
    scale_grid: ScaleGrid | None = None,
) -> SampledField:
    """Peetre-type maximal function of Phi_t * f at scale t = params.t.

    The sup over y runs over grid points with torus distances; for the tilde
    variant the sup extends over lattice scales s in [t/2, t] drawn from
    scale_grid, whose oversampling fixes the s-resolution.
    """
    if params.variant == "sharp":
        conv = convolve_scale(f, kernel, params.t)
        out = _peetre_from_conv(conv.values, f.n, f.J, params.t, params.a)
        return SampledField(f.n, f.J, out, mean_zero=False)
    if scale_grid is None:
        raise InvariantViolation("tilde variant needs a ScaleGrid for the inner scales")
    s_all = params.t * 2.0 ** (-np.arange(scale_grid.m + 1) / scale_grid.m)
    out = np.zeros((f.N,) * f.n)
    for s in s_all:
        conv = convolve_scale(f, kernel, s)
        np.maximum(out, _peetre_from_conv(conv.values, f.n, f.J, s, params.a), out=out)
    return SampledField(f.n, f.J, out, mean_zero=False)


def cwt(f: SampledField, g: SampledField, scale_grid: ScaleGrid) -> "GField":
    """Continuous wavelet transform W_g f(x,t) = t^{n/2} (D_t g(-.) * f-bar)(x).

    g is a real even mean-zero analyzing window given by its samples; its
    radial Fourier profile is evaluated at the scaled frequencies by direct
    quadrature, so non-lattice scales are admitted.
    """
    from .group import GField

    peak = float(np.max(np.abs(g.values)))
    if abs(complex(g.values.mean())) > 1e-10 * peak:
        raise InvariantViolation("analyzing window must be mean-zero")
    ghat = (_radial_ft_1d if g.n == 1 else _radial_ft_2d)(np.real(g.values), g.J)
    spec = np.fft.fftn(np.conj(f.values))
    radii = mode_radii(f.n, f.J)
    scales = scale_grid.scales()
    g_support = _locate_support(ghat, float(1 << (g.J - 1)))
    t_min_ok = max(MIN_SCALE_CELLS, 2.0 * g_support) * f.h
    if scales[-1] < t_min_ok * (1.0 - 1e-12):
        raise NumericalRangeError(
            f"smallest scale {scales[-1]:.6g} aliases at J={f.J}; "
            f"admissible scales are >= {t_min_ok:.6g}"
        )
    rows = np.empty((scales.size,) + f.values.shape, dtype=np.complex128)
    for i, t in enumerate(scales):
        rows[i] = t ** (f.n / 2.0) * np.fft.ifftn(ghat(t * radii) * spec)
    if not np.iscomplexobj(f.values) and not np.iscomplexobj(g.values):
        rows = rows.real
    return GField(n=f.n, J=f.J, scale_grid=scale_grid, values=rows)


def lp_norm(values: np.ndarray, p: float, h_n: float) -> float:
    """Discrete L^p norm with cell measure h^n; p = inf gives the sup."""
    mag = np.abs(values)
    if np.isinf(p):
        return float(mag.max())
    return float((h_n * np.sum(mag**p)) ** (1.0 / p))


def fefferman_stein_ratio(family: list[SampledField], p: float, q: float) -> float:
    """Vector-valued maximal ratio ||(sum (M f_i)^q)^{1/q}||_p over the same of |f_i|.

    A test harness: the ratio is finite and >= 1; p must lie in (1, inf) and
    q in (1, inf].
    """
    if not family:
        raise InvariantViolation("empty family")
    if not (1.0 < p < np.inf):
        raise InvariantViolation(f"p must lie in (1, inf), got {p}")
    if not (1.0 < q):
        raise InvariantViolation(f"q must lie in (1, inf], got {q}")
    h_n = family[0].h ** family[0].n
    maximals = np.stack([hl_maximal(f).values for f in family])
    plain = np.stack([np.abs(f.values) for f in family])
    if np.isinf(q):
        num = lp_norm(maximals.max(axis=0), p, h_n)
        den = lp_norm(plain.max(axis=0), p, h_n)
    else:
        num = lp_norm((maximals**q).sum(axis=0) ** (1.0 / q), p, h_n)
        den = lp_norm((plain**q).sum(axis=0) ** (1.0 / q), p, h_n)
    if den == 0.0:
        raise InvariantViolation("zero family has no maximal ratio")
    return num / den


def kernel_moments(
    kernel: KernelSpec,
    orders: int,
    t: float | None = None,
    J: int | None = None,
    scaled: bool = True,
    windowed: bool = False,
) -> dict[tuple[int, ...], float]:
    """Spatial moments of Phi_t on the grid: h^n sum x^alpha Phi_t(x).

    Evaluating at a small admissible scale keeps the kernel localized away
    from the periodic seam, so the grid quadrature tracks the continuum
    moments.  By default t sits at the resolution floor of the evaluation
    grid, where the symbol is sampled most finely across its features.

    With ``scaled`` the result is divided by t^|alpha|, expressing the moment
    in units of the kernel's own width.  The scaled residual of a vanishing
    moment cannot be resolved past roughly eps_mach * (1/2t)^|alpha|, so only
    low orders are meaningful at small t; raw moments have no such floor.
    With ``windowed`` the integrand is tapered smoothly to zero near the
    torus seam, removing the wrap-around contribution of the kernel tail.
    """
    J_eval = kernel.J if J is None else J
    if t is None:
        t = kernel.min_scale(J_eval)
    radii = mode_radii(kernel.n, J_eval)
    # ifftn carries 1/N^n, the quadrature h^n; together they cancel the N^n
    # of sample values, so the raw ifftn output IS h^n * samples
    spat = np.fft.ifftn(kernel.profile(t * radii)).real
    x = signed_coords(J_eval)
    if windowed:
        taper = 1.0 - _smoothstep((np.abs(x) - 0.25) / 0.2)
        if kernel.n == 1:
            spat = spat * taper
        else:
            spat = spat * taper[:, None] * taper[None, :]
    out: dict[tuple[int, ...], float] = {}
    if kernel.n == 1:
        for a0 in range(orders + 1):
            m = float(np.sum(x**a0 * spat))
            out[(a0,)] = m / t**a0 if scaled else m
    else:
        for a0 in range(orders + 1):
            for a1 in range(orders + 1 - a0):
                m = float(np.sum((x**a0)[:, None] * (x**a1)[None, :] * spat))
                out[(a0, a1)] = m / t ** (a0 + a1) if scaled else m
    return out


def kernel_validity_report(kernel: KernelSpec, moment_orders: int = 4) -> dict:
    """Numeric check of the declared kernel invariants.

    Returns the annulus floor ratio min|symbol|/max|symbol| over the declared
    annulus and the worst scaled moment residual relative to ||Phi||_1.
    """
    r = np.linspace(kernel.annulus[0], kernel.annulus[1], 4097)
    vals = np.abs(kernel.profile(r))
    peak_r = np.linspace(0.0, max(4.0, kernel.annulus[1] * 2), 8193)
    peak = float(np.abs(kernel.profile(peak_r)).max())
    annulus_floor = float(vals.min()) / peak
    # scaled residuals past order 2 drown in the eps * (1/2t)^|alpha|
    # cancellation floor, so the relative gate covers orders 0..2 only
    orders = min(moment_orders, kernel.moment_order, 2)
    # n = 2 starts from a coarser base grid, so it needs the extra octave to
    # sample symbol transitions finely enough at the evaluation scale
    J_eval = kernel.J + (4 if kernel.n == 1 else 5)
    t = kernel.min_scale(J_eval)
    moments = kernel_moments(kernel, orders, t=t, J=J_eval)
    spat = np.fft.ifftn(kernel.profile(t * mode_radii(kernel.n, J_eval)))
    l1 = float(np.sum(np.abs(spat.real)))
    worst = max(abs(v) for k, v in moments.items() if 0 < sum(k) <= orders) if orders else 0.0
    return {
        "annulus_floor_ratio": annulus_floor,
        "annulus_ok": annulus_floor >= TAUBERIAN_THRESHOLD,
        "worst_moment_residual": worst,
        "moment_scale": l1,
        "moments_ok": worst <= MOMENT_RTOL * l1,
    }
