"""Stokes waves in Wu's modified Lagrangian coordinates.

A Stokes wave is a traveling solution

    zeta(alpha, t) = alpha + F(alpha + omega t),   D_t zeta = G(alpha + omega t)

with F, G periodic of period 2 pi.  Profiles are stored by their normalized
Fourier coefficients ``c_k`` (``F = sum_k c_k exp(i k Gamma)``), so the
leading coefficient of F is ``i * eps``.

Symmetry: Re F is odd and Im F is even, so every ``c_k`` of F is purely
imaginary.  Then G = omega F' + b (1 + F') with b real and even, so
Re G is even, Im G is odd and the coefficients of G are purely real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import (
    AmplitudeOutOfRange,
    IncompatiblePeriod,
    NewtonDiverged,
    NonMonotoneParametrization,
    WuWaveError,
)
from .spectral import Grid, deriv, fourier, inverse, l2
from .waterwave import WaterState, time_derivative

EXPANSION_MAX_EPS = 0.2
NEWTON_MAX_EPS = 0.15
CONTINUATION_START = 0.05
CONTINUATION_STEP = 0.01
TABLE_VERSION = 1


@dataclass(frozen=True, eq=False)
class StokesWave:
    """Traveling profile (eps, omega, F, G) on the 2 pi torus.

    ``modes`` lists the integer wavenumbers; ``F_hat`` and ``G_hat`` are the
    normalized coefficients on those modes.
    """

    eps: float
    omega: float
    modes: np.ndarray
    F_hat: np.ndarray
    G_hat: np.ndarray
    residual: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, dtype in (("modes", np.int64), ("F_hat", np.complex128),
                            ("G_hat", np.complex128)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def coefficient(self, which: str, k: int) -> complex:
        """Normalized coefficient of exp(i k Gamma) in F (which='F') or G."""
        hit = np.nonzero(self.modes == k)[0]
        if hit.size == 0:
            return 0.0j
        return complex((self.F_hat if which == "F" else self.G_hat)[hit[0]])

    def evaluate(self, gamma) -> tuple[np.ndarray, np.ndarray]:
        """(F, G) at the phase points gamma."""
        gamma = np.asarray(gamma, dtype=float)
        basis = np.exp(1j * np.multiply.outer(gamma, self.modes))
        return basis @ self.F_hat, basis @ self.G_hat

    def symmetry_defect(self) -> float:
        """Largest real part of F_hat or imaginary part of G_hat."""
        return float(max(np.max(np.abs(self.F_hat.real), initial=0.0),
                         np.max(np.abs(self.G_hat.imag), initial=0.0)))


# --------------------------------------------------------------------------
# expansion


def stokes_expansion(eps: float) -> StokesWave:
    """Small-amplitude expansion, exact through eps^3.

    F = i eps e^{iG} + i eps^2 + (i/2) eps^3 e^{-iG}, omega = 1 + eps^2 / 2, and
    G = omega F' + b (1 + F') truncated at eps^3, where
    b = -omega eps^2 - 2 eps^3 cos(Gamma) + O(eps^4).  The cubic term of b is
    fixed by the traveling-wave solve and is needed for G to be exact at eps^3.
    """
    if not 0.0 <= eps <= EXPANSION_MAX_EPS:
        raise AmplitudeOutOfRange(f"expansion needs 0 <= eps <= {EXPANSION_MAX_EPS}, got {eps}")
    omega = 1.0 + 0.5 * eps**2
    modes = np.array([-1, 0, 1])
    F_hat = 1j * np.array([0.5 * eps**3, eps**2, eps])
    G_hat = np.array([-0.5 * eps**3, -(eps**2), -eps - 0.5 * eps**3], dtype=complex)
    if eps == 0.0:
        modes = np.zeros(0, dtype=np.int64)
        F_hat = G_hat = np.zeros(0, dtype=complex)
    return StokesWave(eps, omega, modes, F_hat, G_hat, meta={"source": "expansion"})


# --------------------------------------------------------------------------
# Newton solver


class _Profile:
    """Unknown layout x = [Im F_hat(k), Re G_hat(k) for |k| <= m, omega]."""

    def __init__(self, n_modes: int):
        self.m = n_modes
        self.grid = Grid(1.0, 3 * n_modes + (3 * n_modes) % 2 + 2)
        self.modes = np.arange(-n_modes, n_modes + 1)
        self.idx = self.modes % self.grid.n
        self.size = 2 * self.modes.size + 1

    def pack(self, wave: StokesWave) -> np.ndarray:
        x = np.zeros(self.size)
        nk = self.modes.size
        for j, k in enumerate(self.modes):
            x[j] = wave.coefficient("F", k).imag
            x[nk + j] = wave.coefficient("G", k).real
        x[-1] = wave.omega
        return x

    def fields(self, x):
        g = self.grid
        nk = self.modes.size
        cF = np.zeros(g.n, complex)
        cG = np.zeros(g.n, complex)
        cF[self.idx] = 1j * x[:nk]
        cG[self.idx] = x[nk:2 * nk]
        return inverse(g, g.length * cF), inverse(g, g.length * cG), x[-1]

    def residual(self, x, eps):
        g = self.grid
        F, G, omega = self.fields(x)
        state = WaterState(g, 0.0, F, G)
        d_off, d_u = time_derivative(state)
        r1 = fourier(g, d_off - omega * deriv(g, F))[self.idx] / g.length
        r2 = fourier(g, d_u - omega * deriv(g, G))[self.idx] / g.length
        # the mean level is a null direction of the dynamics; it is fixed by
        # requiring conj(F) and conj(G) to be exact holomorphic boundary values
        c1 = state.kernel.cauchy_constant(np.conj(F))
        c2 = state.kernel.cauchy_constant(np.conj(G))
        amp = x[self.m + 1] - eps
        return np.concatenate([r1.real, r2.imag, [amp, c1.real, c1.imag, c2.real, c2.imag]])

    def jacobian(self, x, eps, step=1e-7):
        cols = []
        for j in range(x.size):
            dx = np.zeros_like(x)
            dx[j] = step
            cols.append((self.residual(x + dx, eps) - self.residual(x - dx, eps)) / (2 * step))
        return np.column_stack(cols)

    def wave(self, x, eps, res):
        nk = self.modes.size
        keep = (np.abs(x[:nk]) > 0) | (np.abs(x[nk:2 * nk]) > 0)
        return StokesWave(eps, float(x[-1]), self.modes[keep], 1j * x[:nk][keep],
                          x[nk:2 * nk][keep].astype(complex), residual=res,
                          meta={"source": "newton", "n_modes": self.m})


def _newton(profile: _Profile, x, eps, tol, max_iter):
    r = profile.residual(x, eps)
    res = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if res <= tol:
            return x, res
        J = profile.jacobian(x, eps)
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while lam >= 1.0 / 64:
            x_try = x + lam * step
            try:
                r_try = profile.residual(x_try, eps)
            except WuWaveError:  # trial left the admissible regime; damp further
                lam *= 0.5
                continue
            res_try = float(np.linalg.norm(r_try))
            if res_try < res:
                break
            lam *= 0.5
        else:
            raise NewtonDiverged(f"no descent step at eps={eps}, residual {res:.3e}")
        x, r, res = x_try, r_try, res_try
    if res <= tol:
        return x, res
    raise NewtonDiverged(f"eps={eps}: residual {res:.3e} after {max_iter} iterations")


def stokes_newton(eps: float, n_modes: int = 21, tol: float = 1e-11,
                  max_iter: int = 20, guess: StokesWave | None = None) -> StokesWave:
    """Solve the traveling-wave condition for the profile with amplitude eps.

    The residual is the evolution right-hand side of the profile state minus
    omega times its phase derivative, restricted to the symmetric subspace.
    Above eps = 0.05 a cold start continues from 0.05 in steps of 0.01.
    """
    if not 0.0 <= eps <= NEWTON_MAX_EPS:
        raise AmplitudeOutOfRange(f"Newton solver needs 0 <= eps <= {NEWTON_MAX_EPS}, got {eps}")
    if eps == 0.0:
        return StokesWave(0.0, 1.0, np.zeros(0), np.zeros(0), np.zeros(0), residual=0.0,
                          meta={"source": "newton", "n_modes": n_modes})
    profile = _Profile(n_modes)
    if guess is not None:
        path = [eps]
        x = profile.pack(guess)
    elif eps > CONTINUATION_START:
        nsteps = math.ceil(round((eps - CONTINUATION_START) / CONTINUATION_STEP, 9))
        path = list(np.linspace(CONTINUATION_START, eps, nsteps + 1))
        x = profile.pack(stokes_expansion(CONTINUATION_START))
    else:
        path = [eps]
        x = profile.pack(stokes_expansion(eps))
    res = float("nan")
    prev_eps = None
    for e in path:
        if prev_eps is not None:
            x = x.copy()
            x[: 2 * profile.modes.size] *= e / prev_eps  # crude rescale toward the new amplitude
            x[-1] = 1.0 + (x[-1] - 1.0) * (e / prev_eps) ** 2
        x, res = _newton(profile, x, e, tol, max_iter)
        prev_eps = e
    return profile.wave(x, eps, res)


# --------------------------------------------------------------------------
# sampling onto a simulation grid


def _grid_factor(grid: Grid) -> int:
    q = grid.q
    if not (q >= 1 and abs(q - round(q)) < 1e-12):
        raise IncompatiblePeriod(f"grid period 2*pi*{q} is not a multiple of 2*pi")
    return int(round(q))


def stokes_state(wave: StokesWave, t: float, grid: Grid, phase: float = 0.0) -> WaterState:
    """State zeta = alpha + F(alpha + phase + omega t), D_t zeta = G(...) on grid.

    Profile mode k becomes grid mode k*q; modes beyond the grid Nyquist
    frequency are dropped.
    """
    q = _grid_factor(grid)
    shift = phase + wave.omega * t
    cF = np.zeros(grid.n, complex)
    cG = np.zeros(grid.n, complex)
    for k, f, g in zip(wave.modes, wave.F_hat, wave.G_hat):
        kk = int(k) * q
        if abs(kk) >= grid.n // 2:
            continue
        rot = np.exp(1j * k * shift) * grid.length
        cF[kk % grid.n] += f * rot
        cG[kk % grid.n] += g * rot
    return WaterState(grid, t, inverse(grid, cF), inverse(grid, cG))


# --------------------------------------------------------------------------
# distance to the Stokes family


class StokesFamily:
    """Newton profiles on a uniform gamma grid, interpolated in gamma by cubic splines."""

    def __init__(self, gamma_max: float, resolution: int = 41, n_modes: int = 21,
                 tol: float = 1e-11):
        self.gamma_max = float(gamma_max)
        self.gammas = np.linspace(0.0, gamma_max, resolution)
        self.modes = np.arange(-n_modes, n_modes + 1)
        table = np.zeros((resolution, self.modes.size), complex)
        omegas = np.ones(resolution)
        prev = None
        for i, gam in enumerate(self.gammas):
            guess = None
            if prev is not None and prev.eps > 0:
                guess = prev
            w = stokes_newton(float(gam), n_modes, tol, guess=guess) if gam > 0 else None
            if w is not None:
                for j, k in enumerate(self.modes):
                    table[i, j] = w.coefficient("F", int(k))
                omegas[i] = w.omega
                prev = w
        self.F_table = table
        self.omegas = omegas
        self._spline = CubicSpline(self.gammas, table, axis=0)
        self._omega_spline = CubicSpline(self.gammas, omegas)

    def coefficients(self, gamma: float) -> np.ndarray:
        return self._spline(gamma)

    def omega(self, gamma: float) -> float:
        return float(self._omega_spline(gamma))

    def best_phase(self, state: WaterState, gamma: float) -> tuple[float, float]:
        """Minimize the L2 distance over the phase at fixed gamma.

        Returns (distance, phase) where the phase is in the convention of
        ``stokes_state`` at time ``state.t``.
        """
        grid = state.grid
        q = _grid_factor(grid)
        c = self.coefficients(gamma)
        a_hat = fourier(grid, state.offset)
        L = grid.length
        norm_a2 = np.sum(np.abs(a_hat) ** 2) / L
        norm_b2 = L * np.sum(np.abs(c) ** 2)
        # <a, b_phi> = sum_k a_{kq} conj(c_k) exp(-i k phi); sample phi on n points
        n = grid.n
        spec = np.zeros(n, complex)
        for k, ck in zip(self.modes, c):
            if abs(int(k) * q) < n // 2:
                spec[int(k) % n] += a_hat[(int(k) * q) % n] * np.conj(ck)
        cross = np.fft.fft(spec).real  # phi_j = 2 pi j / n
        d2 = norm_a2 + norm_b2 - 2.0 * cross
        j = int(np.argmin(d2))
        # three-point parabolic refinement
        dm, d0, dp = d2[(j - 1) % n], d2[j], d2[(j + 1) % n]
        denom = dm - 2.0 * d0 + dp
        off = 0.5 * (dm - dp) / denom if denom > 0 else 0.0
        phi = 2.0 * np.pi * (j + off) / n
        ks = self.modes
        w = spec[ks % n]
        # polish on the exact trigonometric polynomial (maximize the correlation)
        for _ in range(4):
            rot = w * np.exp(-1j * ks * phi)
            d1 = np.real(np.sum(-1j * ks * rot))
            d2c = np.real(np.sum(-(ks**2) * rot))
            if d2c >= 0:
                break
            phi -= d1 / d2c
        # final value from samples, free of the cancellation in |a|^2 + |b|^2 - 2<a,b>
        b_hat = np.zeros(n, complex)
        for k, ck in zip(ks, c):
            kk = int(k) * q
            if abs(kk) < n // 2:
                b_hat[kk % n] += L * ck * np.exp(1j * k * phi)
        dist = l2(grid, state.offset - inverse(grid, b_hat))
        phase = (phi - self.omega(gamma) * state.t + np.pi) % (2.0 * np.pi) - np.pi
        return float(dist), float(phase)

    def distance(self, state: WaterState) -> tuple[float, float, float]:
        """(dist, gamma*, phi*) minimizing the L2 distance over the family."""
        vals = [self.best_phase(state, g)[0] for g in self.gammas]
        i = int(np.argmin(vals))
        lo = self.gammas[max(i - 1, 0)]
        hi = self.gammas[min(i + 1, len(self.gammas) - 1)]
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        x1 = b - invphi * (b - a)
        x2 = a + invphi * (b - a)
        f1 = self.best_phase(state, x1)[0]
        f2 = self.best_phase(state, x2)[0]
        for _ in range(60):
            if b - a < 1e-12 * max(1.0, self.gamma_max):
                break
            if f1 < f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - invphi * (b - a)
                f1 = self.best_phase(state, x1)[0]
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + invphi * (b - a)
                f2 = self.best_phase(state, x2)[0]
        cands = [(vals[i], self.gammas[i]), (f1, x1), (f2, x2)]
        _, g_best = min(cands)
        d, phi = self.best_phase(state, g_best)
        return d, float(g_best), phi


def family_distance(state: WaterState, gamma_max: float, resolution: int = 41,
                    family: StokesFamily | None = None) -> tuple[float, float, float]:
    """inf over (gamma, phi) of the L2 distance from state to the Stokes family."""
    if family is None:
        family = StokesFamily(gamma_max, resolution)
    return family.distance(state)


# --------------------------------------------------------------------------
# Eulerian elevation


def eulerian_elevation(state: WaterState) -> np.ndarray:
    """eta sampled at x = grid nodes, from x = Re zeta and eta = Im zeta.

    x(alpha) is inverted by periodic monotone cubic interpolation.
    """
    grid = state.grid
    x = state.zeta.real
    y = state.zeta.imag
    L = grid.length
    if np.any(np.diff(x) <= 0) or not x[-1] < x[0] + L:
        raise NonMonotoneParametrization("Re zeta is not strictly increasing")
    xs = np.concatenate([x[-3:] - L, x, x[:3] + L])
    ys = np.concatenate([y[-3:], y, y[:3]])
    return PchipInterpolator(xs, ys)(grid.nodes)


def cosine_amplitudes(grid: Grid, eta: np.ndarray, kmax: int = 3) -> np.ndarray:
    """Mean and cosine amplitudes a_1..a_kmax of eta in profile modes (grid mode k*q)."""
    q = _grid_factor(grid)
    c = fourier(grid, eta) / grid.length
    out = [c[0].real]
    for k in range(1, kmax + 1):
        kk = k * q
        out.append(2.0 * c[kk % grid.n].real)
    return np.array(out)


# --------------------------------------------------------------------------
# coefficient tables


def write_table(wave: StokesWave, path, tol: float = 1e-11) -> None:
    """Text table: header lines then ``k  Im F_hat  Re G_hat`` per mode."""
    lines = [
        f"# wuwave stokes table v{TABLE_VERSION}",
        f"# eps {wave.eps!r}",
        f"# omega {wave.omega!r}",
        f"# tol {tol!r}",
        "# columns: k Im(F_hat) Re(G_hat)",
    ]
    for k, f, g in zip(wave.modes, wave.F_hat, wave.G_hat):
        lines.append(f"{int(k)} {f.imag:.17g} {g.real:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path) -> StokesWave:
    header = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] in ("eps", "omega", "tol"):
                    header[parts[0]] = float(parts[1])
                continue
            k, f, g = line.split()
            rows.append((int(k), float(f), float(g)))
    modes = np.array([r[0] for r in rows], dtype=np.int64)
    F_hat = 1j * np.array([r[1] for r in rows])
    G_hat = np.array([r[2] for r in rows], dtype=complex)
    return StokesWave(header["eps"], header["omega"], modes, F_hat, G_hat,
                      meta={"source": "table", "tol": header.get("tol")})
