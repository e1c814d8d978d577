"""Discrete geometry substrate: periodic grids, dyadic cubes, scale lattices.

Everything lives on the unit torus [0,1)^n with n in {1, 2}, sampled on a
regular grid of N = 2^J points per axis (step h = 2^-J).  Fields are stored
as plain float64/complex128 arrays in row-major order; all downstream modules
treat them as trigonometric polynomials, so resampling is Fourier zero-padding
or truncation and is exact for band-limited data.

Scale lattices discretize the multiplicative measure dt/t: the scales are
t = 2^{-(j + i/m)} with m samples per octave, so every quadrature against
dt/t uses the uniform log-weight ln(2)/m.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MEAN_ZERO_RTOL = 1e-12

_MAGIC = b"BTLH"
_HEADER = struct.Struct("<4sBBBB24x")  # magic, version, n, J, flags; 32 bytes
_FLAG_COMPLEX = 1
_FLAG_MEAN_ZERO = 2


class BtlhError(Exception):
    """Base class for library errors."""


class InvariantViolation(BtlhError):
    """A declared invariant failed to hold on concrete data."""


class NumericalRangeError(BtlhError):
    """A parameter left the numerically representable range."""


@dataclass(frozen=True)
class SampledField:
    """Samples of a periodic function on the [0,1)^n grid.

    Parameters
    ----------
    n : int
        Spatial dimension, 1 or 2.
    J : int
        Dyadic resolution; the grid has N = 2^J points per axis.
    values : ndarray
        Shape (N,) for n=1 or (N, N) for n=2, float64 or complex128.
    mean_zero : bool
        If set, the sample mean must vanish to 1e-12 relative to max|values|.
        This is the concrete stand-in for working modulo polynomials.
    """

    n: int
    J: int
    values: np.ndarray = field(repr=False)
    mean_zero: bool = True

    def __post_init__(self) -> None:
        if self.n not in (1, 2):
            raise InvariantViolation(f"dimension must be 1 or 2, got {self.n}")
        if self.J < 0:
            raise InvariantViolation(f"resolution J must be >= 0, got {self.J}")
        v = np.asarray(self.values)
        if v.dtype not in (np.float64, np.complex128):
            v = v.astype(np.complex128 if np.iscomplexobj(v) else np.float64)
        expected = (self.N,) * self.n
        if v.shape != expected:
            raise InvariantViolation(
                f"value shape {v.shape} does not match (2^{self.J},)*{self.n} = {expected}"
            )
        object.__setattr__(self, "values", v)
        if self.mean_zero:
            peak = float(np.max(np.abs(v))) if v.size else 0.0
            if peak > 0.0 and abs(complex(v.mean())) > MEAN_ZERO_RTOL * peak:
                raise InvariantViolation(
                    f"field flagged mean_zero has mean {complex(v.mean()):.3e} "
                    f"(peak {peak:.3e})"
                )

    @property
    def N(self) -> int:
        return 1 << self.J

    @property
    def h(self) -> float:
        return 2.0 ** (-self.J)

    def with_values(self, values: np.ndarray, mean_zero: bool | None = None) -> "SampledField":
        flag = self.mean_zero if mean_zero is None else mean_zero
        return SampledField(self.n, self.J, values, mean_zero=flag)

    @staticmethod
    def from_samples(values: np.ndarray, remove_mean: bool = False) -> "SampledField":
        v = np.asarray(values, dtype=np.complex128 if np.iscomplexobj(values) else np.float64)
        n = v.ndim
        N = v.shape[0]
        J = int(round(np.log2(N)))
        if 1 << J != N:
            raise InvariantViolation(f"axis length {N} is not a power of two")
        if remove_mean:
            v = v - v.mean()
        peak = float(np.max(np.abs(v))) if v.size else 0.0
        is_mz = peak == 0.0 or abs(complex(v.mean())) <= MEAN_ZERO_RTOL * peak
        return SampledField(n, J, v, mean_zero=is_mz)

    def grid_axes(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.N) * self.h
        return (x,) * self.n


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Dyadic cube 2^-j([0,1)^n + k) on the torus; j >= 0, k componentwise in [0, 2^j)."""

    n: int
    j: int
    k: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.k) != self.n:
            raise InvariantViolation(f"index {self.k} does not have {self.n} components")

    @property
    def side(self) -> float:
        return 2.0 ** (-self.j)

    @property
    def corner(self) -> tuple[float, ...]:
        return tuple(ki * self.side for ki in self.k)

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(c + self.side / 2 for c in self.corner)

    @property
    def volume(self) -> float:
        return self.side**self.n

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.n, self.j - 1, tuple(ki >> 1 for ki in self.k))


def cube_geometry(cube: DyadicCube) -> tuple[float, tuple[float, ...], tuple[float, ...]]:
    """Return (side length, lower-left corner, center)."""
    return cube.side, cube.corner, cube.center


def enumerate_cubes(j_range: tuple[int, int], n: int) -> list[DyadicCube]:
    """All dyadic cubes of the torus with level in the closed interval j_range.

    Levels are restricted to j >= 0 (cubes no larger than the torus); the
    caller caps the fine end at its grid resolution.  Order is lexicographic
    in (j, k), so reductions over the list are run-to-run deterministic.
    """
    j_lo, j_hi = j_range
    if j_hi < j_lo:
        raise InvariantViolation("degenerate level window: empty j_range")
    if j_lo < 0:
        raise InvariantViolation(f"cube levels start at 0 on the torus, got {j_lo}")
    out: list[DyadicCube] = []
    for j in range(j_lo, j_hi + 1):
        side = 1 << j
        if n == 1:
            out.extend(DyadicCube(1, j, (k,)) for k in range(side))
        else:
            out.extend(
                DyadicCube(2, j, (k0, k1)) for k0 in range(side) for k1 in range(side)
            )
    return out


def cube_slices(cube: DyadicCube, J: int) -> tuple[slice, ...]:
    """Index slices selecting the cube's grid cells at resolution J."""
    if cube.j > J:
        raise InvariantViolation(
            f"cube at level {cube.j} is finer than the grid (J={J})"
        )
    w = 1 << (J - cube.j)
    return tuple(slice(ki * w, (ki + 1) * w) for ki in cube.k)


def indicator(cube: DyadicCube, J: int) -> SampledField:
    """Exact 0/1 sample field of the cube at resolution J."""
    N = 1 << J
    v = np.zeros((N,) * cube.n)
    v[cube_slices(cube, J)] = 1.0
    return SampledField(cube.n, J, v, mean_zero=False)


@dataclass(frozen=True)
class ScaleGrid:
    """Finite log-uniform scale lattice t = 2^{-(j + i/m)}.

    j runs over [j_min, j_max] and i over [0, m).  Scales are strictly
    decreasing; integrals against dt/t become sums with weight ln(2)/m.
    """

    j_min: int
    j_max: int
    m: int = 1

    def __post_init__(self) -> None:
        if self.j_max < self.j_min:
            raise InvariantViolation("degenerate level window: j_max < j_min")
        if self.m < 1:
            raise InvariantViolation(f"oversampling m must be >= 1, got {self.m}")

    @property
    def n_octaves(self) -> int:
        return self.j_max - self.j_min + 1

    def scales(self) -> np.ndarray:
        j = np.arange(self.j_min, self.j_max + 1)
        i = np.arange(self.m) / self.m
        return 2.0 ** (-(j[:, None] + i[None, :])).ravel()

    def octave_of_row(self, row: int) -> int:
        return self.j_min + row // self.m

    @property
    def n_rows(self) -> int:
        return self.n_octaves * self.m

    @property
    def log_weight(self) -> float:
        """Quadrature weight for dt/t on this lattice."""
        return float(np.log(2.0) / self.m)

    def row_of_scale(self, t: float) -> int:
        s = self.scales()
        idx = int(np.argmin(np.abs(np.log2(s) - np.log2(t))))
        if not np.isclose(s[idx], t, rtol=1e-9):
            raise NumericalRangeError(f"scale {t} is not on the lattice")
        return idx


def dyadic_resample(f: SampledField, direction: str) -> SampledField:
    """Move a field one octave up (J+1) or down (J-1) by Fourier padding/truncation.

    Up-sampling is band-limited interpolation: the trigonometric polynomial
    through the samples is evaluated on the finer grid.  A populated Nyquist
    bin is split symmetrically going up and folded back going down, so the
    round trip down(up(f)) is exact for every field and up(down(f)) is exact
    for fields band-limited to the coarse grid.
    """
    if direction not in ("up", "down"):
        raise InvariantViolation(f"direction must be 'up' or 'down', got {direction!r}")
    if direction == "down" and f.J < 1:
        raise NumericalRangeError("cannot downsample below J = 0")

    N = f.N
    spec = np.fft.fftn(f.values) / f.values.size
    if direction == "up":
        M = 2 * N
    else:
        M = N // 2
    out_spec = np.zeros((M,) * f.n, dtype=np.complex128)

    def axis_map(src_len: int, dst_len: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        # frequencies kept: |k| <= min(src, dst)/2, with weights handling the
        # Nyquist split/fold on that axis
        half = min(src_len, dst_len) // 2
        ks = np.arange(-half, half + 1)
        src_idx = ks % src_len
        dst_idx = ks % dst_len
        w = np.ones(ks.size)
        if dst_len > src_len:
            w[0] = w[-1] = 0.5  # split source Nyquist across +/- half
        return src_idx, dst_idx, w

    if f.n == 1:
        si, di, w = axis_map(N, M)
        np.add.at(out_spec, di, spec[si] * w)
    else:
        si0, di0, w0 = axis_map(N, M)
        si1, di1, w1 = axis_map(N, M)
        block = spec[np.ix_(si0, si1)] * w0[:, None] * w1[None, :]
        np.add.at(out_spec, np.ix_(di0, di1), block)

    out = np.fft.ifftn(out_spec) * out_spec.size
    if not np.iscomplexobj(f.values):
        out = out.real
    return SampledField(f.n, f.J + (1 if direction == "up" else -1), out,
                        mean_zero=f.mean_zero)


def save_field(f: SampledField, path: str) -> None:
    """Write a field as 32-byte header + row-major float64/complex128 payload."""
    flags = 0
    if np.iscomplexobj(f.values):
        flags |= _FLAG_COMPLEX
    if f.mean_zero:
        flags |= _FLAG_MEAN_ZERO
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, f.n, f.J, flags))
        fh.write(np.ascontiguousarray(f.values).tobytes())


def load_field(path: str) -> SampledField:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        magic, version, n, J, flags = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise InvariantViolation(f"bad magic {magic!r} in {path}")
        if version != 1:
            raise InvariantViolation(f"unsupported field-file version {version}")
        dtype = np.complex128 if flags & _FLAG_COMPLEX else np.float64
        raw = fh.read()
    v = np.frombuffer(raw, dtype=dtype).reshape(((1 << J),) * n).copy()
    return SampledField(n, J, v, mean_zero=bool(flags & _FLAG_MEAN_ZERO))


def save_field_csv(f: SampledField, path: str) -> None:
    """CSV form (n=1 only): index,value rows with full-precision floats."""
    if f.n != 1:
        raise InvariantViolation("CSV field format is defined for n=1 only")
    with open(path, "w") as fh:
        if np.iscomplexobj(f.values):
            fh.write("index,re,im\n")
            for i, z in enumerate(f.values):
                fh.write(f"{i},{z.real!r},{z.imag!r}\n")
        else:
            fh.write("index,value\n")
            for i, x in enumerate(f.values):
                fh.write(f"{i},{float(x)!r}\n")


def load_field_csv(path: str) -> SampledField:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header == ["index", "re", "im"]:
        v = np.array([complex(float(r[1]), float(r[2])) for r in rows])
    elif header == ["index", "value"]:
        v = np.array([float(r[1]) for r in rows])
    else:
        raise InvariantViolation(f"unrecognized CSV header {header} in {path}")
    return SampledField.from_samples(v)
