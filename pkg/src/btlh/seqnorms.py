"""Sequence-space quasi-norms over dyadic wavelet coefficients.

Coefficient sequences carry the same space-scale geometry as sampled
functions once each entry is spread over its cell: level j contributes a
piecewise-constant row on the ambient grid, and the function-side
aggregation cores apply verbatim with one row per level.  The plain f/b
forms weight rows by 2^{l(s+n/q)q}; the Hausdorff forms divide by an
admissible weight first and share the descent optimizer.  A generic
Y-norm lift and the lattice maximal operator round out the toolkit.

Smoothness convention: the s stored here is the sequence-side exponent.
Converting from a function space or a group space shifts it by
n/2 - n/q, which is exactly the factor separating unit-normalized cell
indicators from L^2-normalized atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import BtlhError, ScaleGrid
from .group import GField, GSpaceParams
from .hnorms import HausdorffSpaceParams, _b_objective, _f_objective, optimize_weight
from .norms import _b_aggregate, _f_aggregate
from .wavelets import CoeffSequence

SEQ_SPACES = ("f", "b", "fh", "bh")
SHIFT_HALF = 0.5


def _conjugate(e: float) -> float:
    return e / (e - 1.0)


@dataclass(frozen=True)
class SeqSpaceParams:
    """Exponents of the sequence spaces, in sequence-side convention."""

    s: float
    tau: float
    p: float
    q: float
    a: float | None = None

    def validate(self, space: str, n: int) -> None:
        if space not in SEQ_SPACES:
            raise BtlhError(f"unknown sequence space {space!r}; one of {SEQ_SPACES}")
        if not (self.p > 0 and self.q > 0):
            raise BtlhError("p and q must be positive")
        if self.tau < 0:
            raise BtlhError("tau must be nonnegative")
        if space in ("f", "fh") and not np.isfinite(self.p):
            raise BtlhError("f-type sequence spaces require p < inf")
        if space in ("fh", "bh"):
            if not (1.0 < self.p < np.inf):
                raise BtlhError("Hausdorff sequence spaces require p in (1, inf)")
            if space == "fh" and not (1.0 < self.q < np.inf):
                raise BtlhError("fh requires q in (1, inf)")
            if space == "bh" and not (1.0 <= self.q < np.inf):
                raise BtlhError("bh requires q in [1, inf)")
            cp = _conjugate(max(self.p, self.q))
            if self.tau > 1.0 / cp + 1e-15:
                raise BtlhError(
                    f"tau bound violated: needs tau <= 1/(p v q)' = {1.0 / cp:.6g}"
                )
        if self.a is None:
            return
        # the lattice maximal bounds under which the equivalent forms hold;
        # both Hausdorff flavors carry the min(p, q) floor as stated
        if space == "b":
            bound, name = n / self.p, "n/p"
        elif space == "f":
            bound, name = n / min(self.p, self.q), "n/min(p, q)"
        else:
            bound = n * (1.0 / min(self.p, self.q) + self.tau)
            name = "n(1/min(p, q) + tau)"
        if not self.a > bound:
            raise BtlhError(f"Peetre bound violated: needs a > {name} = {bound:.6g}")


def from_function_params(
    s: float, tau: float, p: float, q: float, a: float | None = None, n: int = 1
) -> SeqSpaceParams:
    """Sequence parameters matching the function space with smoothness s."""
    shift = n * SHIFT_HALF - (0.0 if np.isinf(q) else n / q)
    return SeqSpaceParams(s + shift, tau, p, q, a)


def from_group_params(GP: GSpaceParams, n: int) -> SeqSpaceParams:
    """Sequence parameters matching a group space; same shift as g_smoothness."""
    return SeqSpaceParams(GP.g_smoothness(n), GP.tau, GP.p, GP.q, GP.a)


def _ambient_rows(lam: CoeffSequence, channel: tuple[int, ...]) -> np.ndarray:
    """|coefficients| of one channel spread over cells, one row per level.

    Levels below the sequence window are zero rows, so row index equals
    level and the cube windows line up with stride one.
    """
    J = lam.j_max
    M = np.zeros((J + 1,) + (1 << J,) * lam.n)
    for j in range(lam.j_min, J + 1):
        arr = np.abs(lam.get(channel, j))
        rep = 1 << (J - j)
        row = np.repeat(arr, rep, axis=0)
        if lam.n == 2:
            row = np.repeat(row, rep, axis=1)
        M[j] = row
    return M


def _row_weights(SP: SeqSpaceParams, n: int, J: int) -> np.ndarray:
    levels = np.arange(J + 1, dtype=np.float64)
    if np.isinf(SP.q):
        return 2.0 ** (levels * SP.s)
    return 2.0 ** (levels * (SP.s + n / SP.q) * SP.q)


def _seq_norm_rows(M: np.ndarray, SP: SeqSpaceParams, space: str, n: int) -> float:
    J = M.shape[0] - 1
    w = _row_weights(SP, n, J).reshape((-1,) + (1,) * n)
    if space == "f":
        if np.isinf(SP.q):
            value, _ = _f_aggregate(w * M, 1, n, J, SP.tau, SP.p, SP.p, True)
        else:
            value, _ = _f_aggregate(w * M**SP.q, 1, n, J, SP.tau, SP.p, SP.p / SP.q, False)
        return value
    if space == "b":
        value, _ = _b_aggregate(M, w.ravel(), 1, n, J, SP.tau, SP.p, SP.q)
        return value
    h_n = 2.0 ** (-n * J)
    HP = HausdorffSpaceParams(SP.s, SP.tau, SP.p, SP.q, SP.a)
    make = _f_objective if space == "fh" else _b_objective
    objective = make(M, w.ravel(), SP.p, SP.q, h_n)
    _, value, _ = optimize_weight(objective, HP, n, J, ScaleGrid(0, J, 1))
    return value


def per_channel_seq_norms(
    lam: CoeffSequence, SP: SeqSpaceParams, space: str
) -> dict[tuple[int, ...], float]:
    """The sequence norm of each orientation channel separately."""
    SP.validate(space, lam.n)
    return {
        ch: _seq_norm_rows(_ambient_rows(lam, ch), SP, space, lam.n)
        for ch in lam.channels
    }


def seq_norm(lam: CoeffSequence, SP: SeqSpaceParams, space: str) -> float:
    """Headline sequence quasi-norm: the max over orientation channels."""
    return max(per_channel_seq_norms(lam, SP, space).values())


def y_sharp_norm(lam: CoeffSequence, y_norm) -> float:
    """Lift the sequence to a space-scale field and apply a supplied norm.

    Each level j occupies the scale octave [2^-(j+1), 2^-j); on the
    one-row-per-octave lattice that octave is the single row t = 2^-j
    holding sum_k |coeff| over cells.  y_norm maps a GField to a float;
    channels combine by max like the headline sequence norm.
    """
    grid = ScaleGrid(0, lam.j_max, 1)
    best = 0.0
    for ch in lam.channels:
        F = GField(lam.n, lam.j_max, grid, _ambient_rows(lam, ch), {"lift": "y-sharp"})
        best = max(best, float(y_norm(F)))
    return best


def star_lift(lam: CoeffSequence, r: float, lambda_exp: float) -> CoeffSequence:
    """Per-level lattice maximal operator with polynomial off-diagonal decay.

    Each cell receives the r-mean of all same-level cells weighted by
    (1 + d)^-lambda_exp, d the torus distance in cell units.  The self
    term has weight one, so the lift dominates the input entrywise.
    lambda_exp must exceed the dimension: the continuum sum behind this
    operator diverges otherwise, even though the torus sum stays finite.
    """
    if not r > 0:
        raise BtlhError(f"inner exponent must be positive, got r = {r}")
    if not lambda_exp > lam.n:
        raise BtlhError(
            f"decay too weak: needs lambda_exp > n = {lam.n}, got {lambda_exp}"
        )
    out = {}
    for (ch, j), arr in lam.items():
        N = 1 << j
        tr = np.abs(arr) ** r
        d = np.abs(np.arange(N)[:, None] - np.arange(N)[None, :])
        d = np.minimum(d, N - d).astype(np.float64)
        if lam.n == 1:
            acc = ((1.0 + d) ** (-lambda_exp)) @ tr
        else:
            # circulant in both axes: kernel row 0 gives every distance
            dist = np.sqrt(d[0][:, None] ** 2 + d[0][None, :] ** 2)
            kern = (1.0 + dist) ** (-lambda_exp)
            conv = np.fft.irfft2(
                np.fft.rfft2(tr) * np.fft.rfft2(kern), s=(N, N)
            )
            acc = np.maximum(conv, 0.0)
        out[(ch, j)] = acc ** (1.0 / r)
    return CoeffSequence(lam.n, lam.j_min, lam.j_max, out)
