"""Periodic Fourier analysis and singular integrals on the torus of length 2*pi*q.

Conventions
-----------
Nodes are ``alpha_j = -q*pi + h*j`` with ``h = 2*pi*q/n``.  Spectral
coefficients are stored without the 1/(2 q pi) factor::

    f_k = int f(x) exp(-i k x / q) dx        (trapezoid: h * sum)
    f(x) = 1/(2 q pi) * sum_k f_k exp(i k x / q)

Every norm inserts the 1/(2 q pi) Parseval factor, so the L2 norm is the
plain integral norm and a constant function has norm sqrt(2 q pi).

The flat Hilbert transform acts as ``H0 exp(i k a / q) = -sgn(k) exp(i k a / q)``
with ``H0 1 = 0``.  With this sign, boundary values of functions holomorphic
in the lower half plane satisfy ``(I - H0) f = 0``.

The curve transform ``H_zeta`` is evaluated by kernel splitting: the flat
cotangent kernel is applied exactly in Fourier space and the smooth
remainder is summed by the trapezoid rule with its analytic diagonal limit
``-q * zeta_aa / zeta_a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .errors import ChordArcViolation, NoConvergence

CHORD_ARC_MIN = 0.1
NEAR_FLAT_MAX = 0.3


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-q*pi, q*pi) with n nodes."""

    q: float
    n: int

    def __post_init__(self):
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")

    @property
    def length(self) -> float:
        return 2.0 * np.pi * self.q

    @property
    def h(self) -> float:
        return self.length / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        return -self.q * np.pi + self.h * np.arange(self.n)

    @cached_property
    def k(self) -> np.ndarray:
        """Integer frequencies in FFT order, covering [-n/2, n/2)."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).round().astype(np.int64)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return self.k / self.q

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(i k q pi / q) = (-1)^k accounts for the left endpoint -q*pi
        return np.where(self.k % 2 == 0, 1.0, -1.0)

    @cached_property
    def _sign(self) -> np.ndarray:
        return np.sign(self.k).astype(float)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on the modes kept by the 2/3 rule (|k| <= n/3)."""
        return np.abs(self.k) <= self.n // 3

    @property
    def k_max(self) -> float:
        """Largest retained physical wavenumber after dealiasing."""
        return (self.n // 3) / self.q

    @cached_property
    def _flat_tables(self):
        m = np.arange(self.n) * self.h / (2.0 * self.q)
        with np.errstate(divide="ignore"):
            p0_im = -1.0 / np.tan(m)
            inv_d0 = 1.0 / (4.0 * np.sin(m) ** 2)
        p0_im[0] = 0.0
        inv_d0[0] = 0.0
        return p0_im, inv_d0


# --------------------------------------------------------------------------
# array-level transforms


def fourier(grid: Grid, x: np.ndarray) -> np.ndarray:
    """Coefficients f_k (FFT order) of samples x; works along axis 0."""
    ph = grid._phase if x.ndim == 1 else grid._phase[:, None]
    return grid.h * ph * np.fft.fft(x, axis=0)


def inverse(grid: Grid, c: np.ndarray) -> np.ndarray:
    """Samples from coefficients f_k (FFT order); works along axis 0."""
    ph = grid._phase if c.ndim == 1 else grid._phase[:, None]
    return np.fft.ifft(ph * c, axis=0) / grid.h


def _mult(grid: Grid, x: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    if x.ndim > 1:
        symbol = symbol[:, None]
    return np.fft.ifft(symbol * np.fft.fft(x, axis=0), axis=0)


def deriv(grid: Grid, x: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral derivative d^order/dalpha^order (Nyquist mode dropped for odd orders)."""
    symbol = (1j * grid.wavenumbers) ** order
    if order % 2:
        symbol = symbol.copy()
        symbol[grid.n // 2] = 0.0
    out = _mult(grid, x, symbol)
    return out.real if np.isrealobj(x) else out


def hilbert0(grid: Grid, x: np.ndarray) -> np.ndarray:
    """Flat Hilbert transform: multiplier -sgn(k), zero on the mean."""
    return _mult(grid, x, -grid._sign)


def dealias(grid: Grid, x: np.ndarray) -> np.ndarray:
    out = _mult(grid, x, grid.dealias_mask.astype(float))
    return out.real if np.isrealobj(x) else out


def krasny(grid: Grid, x: np.ndarray, level: float = 1e-13) -> np.ndarray:
    """Zero Fourier modes whose magnitude is below level * (largest magnitude)."""
    c = np.fft.fft(x)
    mag = np.abs(c)
    c[mag < level * mag.max()] = 0.0
    out = np.fft.ifft(c)
    return out.real if np.isrealobj(x) else out


def l2(grid: Grid, x: np.ndarray) -> float:
    """Integral L2 norm, sqrt(int |x|^2)."""
    return float(np.sqrt(grid.h * np.sum(np.abs(x) ** 2)))


def hs_norm(grid: Grid, x: np.ndarray, s: float) -> float:
    """H^s norm ((1/2 q pi) sum (1 + |k/q|)^(2s) |f_k|^2)^(1/2)."""
    c = fourier(grid, x)
    w = (1.0 + np.abs(grid.wavenumbers)) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(c) ** 2) / grid.length))


def flat_commutator(grid: Grid, g: np.ndarray, f: np.ndarray) -> np.ndarray:
    """[g, H0] f = g H0 f - H0 (g f)."""
    return g * hilbert0(grid, f) - hilbert0(grid, g * f)


# --------------------------------------------------------------------------
# Field


@dataclass(frozen=True, eq=False)
class Field:
    """A complex periodic function: samples on ``grid`` and/or its coefficients."""

    grid: Grid
    _samples: np.ndarray | None = field(default=None, repr=False)
    _spectrum: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self._samples is None and self._spectrum is None:
            raise ValueError("Field needs samples or a spectrum")
        for arr in (self._samples, self._spectrum):
            if arr is not None:
                if arr.shape != (self.grid.n,):
                    raise ValueError("array length does not match grid")
                arr.setflags(write=False)

    @classmethod
    def from_samples(cls, grid: Grid, samples) -> "Field":
        return cls(grid, np.array(samples, dtype=np.complex128))

    @classmethod
    def from_spectrum(cls, grid: Grid, coeffs) -> "Field":
        return cls(grid, None, np.array(coeffs, dtype=np.complex128))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls.from_samples(grid, fn(grid.nodes))

    @property
    def samples(self) -> np.ndarray:
        if self._samples is None:
            object.__setattr__(self, "_samples", inverse(self.grid, self._spectrum))
            self._samples.setflags(write=False)
        return self._samples

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            object.__setattr__(self, "_spectrum", fourier(self.grid, self._samples))
            self._spectrum.setflags(write=False)
        return self._spectrum

    @property
    def has_spectrum(self) -> bool:
        return self._spectrum is not None

    @property
    def has_samples(self) -> bool:
        return self._samples is not None

    def coefficient(self, k: int) -> complex:
        """Coefficient f_k for an integer frequency k in [-n/2, n/2)."""
        return complex(self.spectrum[k % self.grid.n])

    def _wrap(self, samples) -> "Field":
        return Field.from_samples(self.grid, samples)

    def __add__(self, other):
        return self._wrap(self.samples + _values(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.samples - _values(other))

    def __rsub__(self, other):
        return self._wrap(_values(other) - self.samples)

    def __mul__(self, other):
        return self._wrap(self.samples * _values(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.samples)

    def conj(self) -> "Field":
        return self._wrap(np.conj(self.samples))

    @property
    def real(self) -> "Field":
        return self._wrap(self.samples.real)

    def derivative(self, order: int = 1) -> "Field":
        return self._wrap(deriv(self.grid, self.samples, order))


def _values(x):
    return x.samples if isinstance(x, Field) else x


def _as_field(grid: Grid, x) -> Field:
    return x if isinstance(x, Field) else Field.from_samples(grid, x)


# --------------------------------------------------------------------------
# Field-level operations


def to_spectrum(f: Field) -> Field:
    """Return f with its coefficients f_k populated."""
    return Field(f.grid, f._samples, np.array(f.spectrum))


def to_samples(f: Field) -> Field:
    """Return f with its node samples populated."""
    return Field(f.grid, np.array(f.samples), f._spectrum)


def sobolev_norm(f: Field, s: float) -> float:
    """H^s(qT) norm with the Parseval factor 1/(2 q pi)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    w = (1.0 + np.abs(f.grid.wavenumbers)) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(f.spectrum) ** 2) / f.grid.length))


def flat_hilbert(f: Field) -> Field:
    """H0 f, diagonal in Fourier space with multiplier -sgn(k)."""
    return Field.from_spectrum(f.grid, -f.grid._sign * f.spectrum)


def mean(f: Field) -> complex:
    """M(f) = (1/2 q pi) int f."""
    return complex(f.spectrum[0] / f.grid.length)


def expansion_terms(z1: Field, z2: Field, f: Field) -> tuple[Field, Field]:
    """First two correction terms of H_zeta around H0 for zeta = alpha + z1 + z2 + ...

    H1 f = [z1, H0] f_a
    H2 f = [z2, H0] f_a - [z1, H0](z1_a f_a) + 1/2 [z1, [z1, H0]] f_aa
    """
    g = f.grid
    a1 = z1.samples
    fa = deriv(g, f.samples)
    faa = deriv(g, f.samples, 2)
    h1 = flat_commutator(g, a1, fa)
    z1a = deriv(g, a1)
    double = a1 * flat_commutator(g, a1, faa) - flat_commutator(g, a1, a1 * faa)
    h2 = (
        flat_commutator(g, z2.samples, fa)
        - flat_commutator(g, a1, z1a * fa)
        + 0.5 * double
    )
    return Field.from_samples(g, h1), Field.from_samples(g, h2)


class CurveKernel:
    """Dense discretization of H_zeta and its real companions for one curve.

    Parameters
    ----------
    grid : Grid
    offset : complex array, the periodic part zeta - alpha at the nodes.
    check : bool, raise ChordArcViolation when the chord-arc ratio is below 0.1.
    """

    def __init__(self, grid: Grid, offset: np.ndarray, check: bool = True):
        self.grid = grid
        offset = np.asarray(offset, dtype=np.complex128)
        self.offset = offset
        self.zeta = grid.nodes + offset
        self.zeta_a = 1.0 + deriv(grid, offset)
        self.zeta_aa = deriv(grid, offset, 2)
        self.e = np.exp(1j * self.zeta / grid.q)
        p0_im, inv_d0 = grid._flat_tables
        self.R, self.K, self.Kw, self.chord_arc = kernels.hilbert_matrices(
            self.e, self.zeta_a, self.zeta_aa, p0_im, inv_d0, grid.h, float(grid.q)
        )
        if check and not self.chord_arc >= CHORD_ARC_MIN:
            raise ChordArcViolation(self.chord_arc, CHORD_ARC_MIN)
        self.abs_za = np.abs(self.zeta_a)
        self.tangent = self.zeta_a / self.abs_za

    # -- transforms ---------------------------------------------------------

    def hilbert(self, f: np.ndarray) -> np.ndarray:
        """H_zeta f for a complex array f (or an n x m batch)."""
        f = np.asarray(f, dtype=np.complex128)
        return hilbert0(self.grid, f) + self.R @ f

    def double_layer(self, f: np.ndarray) -> np.ndarray:
        """K_zeta f = Re H_zeta f for real f."""
        return self.K @ np.asarray(f, dtype=float)

    def adjoint_double_layer(self, f: np.ndarray) -> np.ndarray:
        """K*_zeta f = int Re{-(1/2 q pi i) (zeta_a/|zeta_a|) |zeta_b| cot(...)} f."""
        return -(self.Kw @ np.asarray(f, dtype=float))

    def cauchy_constant(self, f: np.ndarray) -> complex:
        """(1/2 q pi) int f dzeta, the constant c0 with (I - H_zeta) f = c0."""
        return complex(np.sum(f * self.zeta_a) * self.grid.h / self.grid.length)

    def commutator(self, g: np.ndarray, f: np.ndarray) -> np.ndarray:
        """S(f, g) = [g, H_zeta](f_a / zeta_a)."""
        return self.commutator_plain(g, deriv(self.grid, f) / self.zeta_a)

    def commutator_plain(self, g: np.ndarray, F: np.ndarray) -> np.ndarray:
        """[g, H_zeta] F = g H_zeta F - H_zeta (g F)."""
        both = self.hilbert(np.stack([F, g * F], axis=1))
        return g * both[:, 0] - both[:, 1]

    def square_kernel(self, u: np.ndarray, f: np.ndarray) -> np.ndarray:
        """(1/4 pi q^2 i) int ((u(a)-u(b)) / sin((zeta(a)-zeta(b))/2q))^2 f_b db."""
        g = self.grid
        u = np.asarray(u, dtype=np.complex128)
        ua = deriv(g, u)
        diag = (2.0 * g.q * ua / self.zeta_a) ** 2
        fb = np.asarray(deriv(g, np.asarray(f, dtype=np.complex128)), dtype=np.complex128)
        return kernels.square_kernel_apply(self.e, u, diag, fb, g.h, float(g.q))

    # -- real solves ----------------------------------------------------------

    def solve_real(self, g, weighted: bool = False, tol: float = 1e-12,
                   max_iter: int = 50, x0=None) -> np.ndarray:
        """Real h with (I - H_zeta) h = g, or (I - H_zeta)(h conj(zeta_a)) = g.

        Fixed-point iteration h <- Re g + K h.  The weighted equation is
        rewritten for v = h |zeta_a| as v <- Re{t g} + Kw v (t the unit
        tangent), whose kernel is smooth.  Convergence when the L2 change
        between iterates is at most tol * max(1, |h|).
        """
        g = np.asarray(g, dtype=np.complex128)
        if weighted:
            rhs = np.real(self.tangent * g)
            M = self.Kw
            x = rhs.copy() if x0 is None else np.asarray(x0, float) * self.abs_za
        else:
            rhs = g.real.copy()
            M = self.K
            x = rhs.copy() if x0 is None else np.asarray(x0, float).copy()
        sq = np.sqrt(self.grid.h)
        for it in range(1, max_iter + 1):
            x_new = rhs + M @ x
            diff = sq * np.linalg.norm(x_new - x)
            x = x_new
            if diff <= tol * max(1.0, sq * np.linalg.norm(x)):
                self.last_iterations = it
                return x / self.abs_za if weighted else x
        raise NoConvergence(
            f"real Hilbert solve did not converge in {max_iter} iterations (last change {diff:.3e})"
        )


# --------------------------------------------------------------------------
# Field-level wrappers around CurveKernel


def _kernel(zeta: Field) -> CurveKernel:
    g = zeta.grid
    return CurveKernel(g, zeta.samples - g.nodes)


def curve_hilbert(zeta: Field, f: Field) -> Field:
    """H_zeta f for the full curve zeta (alpha plus a periodic offset)."""
    return Field.from_samples(f.grid, _kernel(zeta).hilbert(f.samples))


def double_layer(zeta: Field, f: Field) -> Field:
    return Field.from_samples(f.grid, _kernel(zeta).double_layer(f.samples.real))


def adjoint_double_layer(zeta: Field, f: Field) -> Field:
    return Field.from_samples(f.grid, _kernel(zeta).adjoint_double_layer(f.samples.real))


def solve_real_hilbert(zeta: Field, g: Field, weighted: bool = False) -> Field:
    """Real h solving (I - H_zeta) h = g, or the conj(zeta_a)-weighted version."""
    ker = _kernel(zeta)
    if np.max(np.abs(ker.zeta_a - 1.0)) > NEAR_FLAT_MAX:
        raise NoConvergence("curve is not near-flat (|zeta_a - 1| > 0.3)")
    return Field.from_samples(g.grid, ker.solve_real(g.samples, weighted=weighted))


def commutator_bracket(zeta: Field, g: Field, f: Field) -> Field:
    """S_zeta(f, g) = [g, H_zeta](f_a / zeta_a)."""
    return Field.from_samples(f.grid, _kernel(zeta).commutator(g.samples, f.samples))


def square_kernel(zeta: Field, u: Field, f: Field) -> Field:
    return Field.from_samples(f.grid, _kernel(zeta).square_kernel(u.samples, f.samples))
