"""Envelope equation and its instability around the Stokes solution B = i.

The rescaled envelope equation is

    i B_T + (1/8) B_XX + (1/2) |B|^2 B - (1/2) B = 0        on the torus q1*T,

and u(x, t) = exp(i t) B(x/2, 2 t) solves the standard focusing equation
i u_t + u_xx + |u|^2 u = 0 on the torus of period factor 2*q1.

The instability analysis works in the standard form with u = e^{it}(1 + w)
(any constant phase can be gauged in), where w = phi + i psi obeys
d/dt (phi, psi) = J L (phi, psi) + N at linear order, mode by mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoUnstableMode
from .spectral import Grid, fourier, inverse

DEFAULT_S_PRIME = 11
ETA_FRACTION = 1.0 / 200.0
FILTER_LEVEL = 1e-13


@dataclass(frozen=True, eq=False)
class NlsState:
    """Envelope B sampled on Grid(q1, n) at slow time T."""

    q1: float
    T: float
    B: np.ndarray

    def __post_init__(self):
        if not self.q1 > 0:
            raise ValueError(f"q1 must be positive, got {self.q1}")
        arr = np.array(self.B, dtype=np.complex128)
        arr.setflags(write=False)
        object.__setattr__(self, "B", arr)

    @property
    def grid(self) -> Grid:
        return Grid(self.q1, self.B.shape[0])

    @classmethod
    def constant(cls, q1: float, n: int, value: complex = 1j, T: float = 0.0) -> "NlsState":
        return cls(q1, T, np.full(n, value, dtype=complex))


@dataclass(frozen=True, eq=False)
class StandardState:
    """Solution u of i u_t + u_xx + |u|^2 u = 0 sampled on Grid(q, n) at time t."""

    q: float
    t: float
    u: np.ndarray

    def __post_init__(self):
        arr = np.array(self.u, dtype=np.complex128)
        arr.setflags(write=False)
        object.__setattr__(self, "u", arr)

    @property
    def grid(self) -> Grid:
        return Grid(self.q, self.u.shape[0])


@dataclass(frozen=True)
class LinFlow:
    """Per-mode propagator of the linearization: (phi_k, psi_k)(t) = m (phi_k, psi_k)(0)."""

    k: int
    q: float
    t: float
    m: np.ndarray


# --------------------------------------------------------------------------
# split-step integration


def _split_step(grid: Grid, v: np.ndarray, dt: float, nsteps: int,
                disp: float, cubic: float, linear: float, observer=None, t0: float = 0.0,
                filter_level: float = FILTER_LEVEL):
    """Strang splitting for i v_t + disp v_xx + cubic |v|^2 v + linear v = 0.

    After each step, Fourier modes below filter_level times the largest one
    are zeroed, so round-off cannot seed the high modes that dominate the
    H^s' norms.
    """
    kap = grid.wavenumbers
    half = np.exp(0.5j * dt * (-disp * kap**2 + linear))
    v = np.array(v, dtype=complex)
    c = np.fft.fft(v)
    for i in range(nsteps):
        c *= half
        v = np.fft.ifft(c)
        v *= np.exp(1j * cubic * dt * np.abs(v) ** 2)
        c = np.fft.fft(v)
        c *= half
        if filter_level:
            mag = np.abs(c)
            c[mag < filter_level * mag.max()] = 0.0
        if observer is not None:
            observer(t0 + (i + 1) * dt, c)
    return np.fft.ifft(c)


def _sample_observer(observer):
    """Adapt observer(t, samples) to the raw-spectrum callback of _split_step."""
    if observer is None:
        return None
    return lambda t, c: observer(t, np.fft.ifft(c))


def _steps(span: float, dt: float) -> tuple[int, float]:
    if span < 0:
        raise ValueError("end time precedes start time")
    nsteps = max(1, math.ceil(span / dt - 1e-9)) if span > 0 else 0
    return nsteps, (span / nsteps if nsteps else dt)


def split_step_evolve(state: NlsState, dt: float, T_end: float, observer=None) -> NlsState:
    """Advance B to T_end with Strang splitting.

    The linear half-steps are exact Fourier multipliers for
    i B_T = -(1/8) B_XX + (1/2) B, the nonlinear step is the exact rotation
    B <- B exp(i |B|^2 dt / 2).  dt is shrunk so that the steps land on T_end.
    observer(T, B), if given, is called after every step.
    """
    bound = 0.1 / (1.0 + float(np.max(np.abs(state.B)) ** 2))
    if dt > bound * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the step bound {bound:.4g}")
    nsteps, h = _steps(T_end - state.T, dt)
    if nsteps == 0:
        return state
    B = _split_step(state.grid, state.B, h, nsteps, 1.0 / 8.0, 0.5, -0.5,
                    _sample_observer(observer), state.T)
    return NlsState(state.q1, T_end, B)


def evolve_standard(state: StandardState, dt: float, t_end: float, observer=None,
                    spectral_observer=None) -> StandardState:
    """Strang splitting for i u_t + u_xx + |u|^2 u = 0.

    observer(t, u) receives samples; spectral_observer(t, c) receives the raw
    numpy FFT of u after filtering, which avoids the round-off of a transform
    back to samples.
    """
    nsteps, h = _steps(t_end - state.t, dt)
    if nsteps == 0:
        return state
    obs = spectral_observer if spectral_observer is not None else _sample_observer(observer)
    u = _split_step(state.grid, state.u, h, nsteps, 1.0, 1.0, 0.0, obs, state.t)
    return StandardState(state.q, t_end, u)


def plane_wave(q1: float, n: int, amplitude: complex, k: int, T: float) -> np.ndarray:
    """Exact solution c exp(i kappa X - i (kappa^2/8 - |c|^2/2 + 1/2) T), kappa = k/q1."""
    grid = Grid(q1, n)
    kap = k / q1
    freq = kap**2 / 8.0 - 0.5 * abs(amplitude) ** 2 + 0.5
    return amplitude * np.exp(1j * kap * grid.nodes - 1j * freq * T)


# --------------------------------------------------------------------------
# change of variables


def to_standard_form(state: NlsState) -> StandardState:
    """u(x, t) = exp(i t) B(x/2, 2 t) on Grid(2 q1, n), at t = T/2.

    The nodes x_j of Grid(2 q1, n) are exactly 2 X_j, so samples carry over.
    """
    t = state.T / 2.0
    return StandardState(2.0 * state.q1, t, np.exp(1j * t) * state.B)


def from_standard_form(state: StandardState) -> NlsState:
    """Inverse of to_standard_form."""
    return NlsState(state.q / 2.0, 2.0 * state.t, np.exp(-1j * state.t) * state.u)


# --------------------------------------------------------------------------
# conserved quantities


def conserved(state: NlsState) -> tuple[float, float]:
    """(mass, hamiltonian), both with the 1/(2 q1 pi) normalization.

    H = (1/2 q1 pi) int (1/8)|B_X|^2 - (1/4)|B|^4 + (1/2)|B|^2, so that
    i B_T = dH/d(conj B) reproduces the envelope equation.
    """
    g = state.grid
    B = state.B
    c = fourier(g, B)
    BX = inverse(g, 1j * g.wavenumbers * c)
    mass = float(np.sum(np.abs(B) ** 2) * g.h / g.length)
    dens = 0.125 * np.abs(BX) ** 2 - 0.25 * np.abs(B) ** 4 + 0.5 * np.abs(B) ** 2
    return mass, float(np.sum(dens) * g.h / g.length)


# --------------------------------------------------------------------------
# linearization around the Stokes solution


def linear_flow(k: int, q: float, t: float) -> LinFlow:
    """exp(t J L) on mode k of the torus q*T.

    With K = |k/q|, the generator on (phi_k, psi_k) is [[0, K^2], [2 - K^2, 0]].
    Growing branch K < sqrt(2): cosh / sinh with rate K sqrt(2 - K^2);
    oscillating branch K > sqrt(2): cos / sin.  K = 0 and K = sqrt(2) are the
    continuous limits.
    """
    K2 = (k / q) ** 2
    d = 2.0 - K2
    lam2 = K2 * d  # squared eigenvalue of the generator
    if abs(lam2) < 1e-300:
        m = np.array([[1.0, K2 * t], [d * t, 1.0]])
    elif lam2 > 0:
        lam = math.sqrt(lam2)
        ch, sh = math.cosh(lam * t), math.sinh(lam * t) / lam
        m = np.array([[ch, sh * K2], [sh * d, ch]])
    else:
        lam = math.sqrt(-lam2)
        cs, sn = math.cos(lam * t), math.sin(lam * t) / lam
        m = np.array([[cs, sn * K2], [sn * d, cs]])
    return LinFlow(int(k), float(q), float(t), m)


def mode_rate(k: int, q: float) -> float:
    K = abs(k / q)
    return K * math.sqrt(2.0 - K * K) if K * K < 2.0 else 0.0


def growth_rate(q: float) -> tuple[float, int]:
    """(tau, k0): the largest growth rate over integer modes and its smallest k > 0."""
    if not q > 0:
        raise ValueError(f"q must be positive, got {q}")
    kmax = math.ceil(math.sqrt(2.0) * q) + 1
    rates = [(mode_rate(k, q), k) for k in range(1, kmax + 1)]
    tau = max(r for r, _ in rates)
    if tau <= 0.0:
        return 0.0, 0
    k0 = min(k for r, k in rates if r >= tau * (1 - 1e-12))
    return tau, k0


def unstable_direction(k: int, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Right and left eigenvectors (r, l) of the growing eigenvalue, with l.r = 1."""
    K2 = (k / q) ** 2
    a, b = math.sqrt(K2), math.sqrt(2.0 - K2)
    r = np.array([a, b])
    l = np.array([b, a]) / (2.0 * a * b)
    return r, l


def modal_split(grid: Grid, w: np.ndarray, k: int) -> np.ndarray:
    """(phi_k, psi_k): normalized coefficients of Re w and Im w on mode k."""
    c = fourier(grid, w) / grid.length
    n = grid.n
    ck, cmk = c[k % n], c[(-k) % n]
    return np.array([(ck + np.conj(cmk)) / 2.0, (ck - np.conj(cmk)) / 2j])


def unstable_amplitude(grid: Grid, w: np.ndarray, k: int) -> float:
    """Modulus of the growing-eigenvector component of mode k."""
    _, l = unstable_direction(k, grid.q)
    return float(abs(l @ modal_split(grid, w, k)))


# --------------------------------------------------------------------------
# seeds


def unstable_seed(q: float, delta: float, s_prime: int = DEFAULT_S_PRIME, k0: int | None = None,
                  eta: float | None = None, n: int = 128) -> np.ndarray:
    """w0 = (1/sqrt q)(d1 e^{i k0 x/q} + d2 e^{-i k0 x/q} + e1 e^{i x/q} + e2 e^{-i x/q}).

    d1 = d2 = delta/(2 s'), real positive; e1 = e2 = delta/200 by default.
    Returns samples on Grid(q, n).
    """
    tau, k_best = growth_rate(q)
    if tau == 0.0:
        raise NoUnstableMode(f"no integer mode is unstable on the torus q={q}")
    k0 = k_best if k0 is None else k0
    d = delta / (2.0 * s_prime)
    e = delta * ETA_FRACTION if eta is None else eta
    x = Grid(q, n).nodes
    w = d * (np.exp(1j * k0 * x / q) + np.exp(-1j * k0 * x / q))
    w = w + e * (np.exp(1j * x / q) + np.exp(-1j * x / q))
    return w / math.sqrt(q)


def lift_to_B(w0: np.ndarray, q1: float) -> NlsState:
    """Envelope B = i (1 + w0) at T = 0 on the torus q1*T."""
    return NlsState(q1, 0.0, 1j * (1.0 + np.asarray(w0)))


def perturbation(state: StandardState) -> np.ndarray:
    """w with u = i e^{it} (1 + w)."""
    return state.u * np.exp(-1j * state.t) / 1j - 1.0


# --------------------------------------------------------------------------
# experiments


def coefficient_norm(grid: Grid, c: np.ndarray, s: float) -> float:
    """H^s norm from coefficients f_k (FFT order), same normalization as spectral.hs_norm."""
    w = (1.0 + np.abs(grid.wavenumbers)) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(c) ** 2) / grid.length))


def seed_norm(grid: Grid, w: np.ndarray, s_prime: float = DEFAULT_S_PRIME) -> float:
    """H^s' norm of w with round-off level modes (relative 1e-13) zeroed in coefficient space."""
    c = fourier(grid, np.asarray(w, complex))
    c[np.abs(c) < FILTER_LEVEL * np.abs(c).max()] = 0.0
    return coefficient_norm(grid, c, s_prime)


def _perturbation_coefficients(grid: Grid, raw: np.ndarray, t: float) -> np.ndarray:
    """Coefficients of w = u e^{-it}/i - 1 from the raw FFT of u."""
    c = grid.h * grid._phase * raw * (np.exp(-1j * t) / 1j)
    c[0] -= grid.length
    return c


def instability_run(q: float, delta: float, mu: float, s_prime: int = DEFAULT_S_PRIME,
                    n: int = 128, dt: float = 1e-3, w0: np.ndarray | None = None,
                    record_every: int = 0) -> dict:
    """Evolve the standard-form equation from i(1 + w0) up to T0 = log(mu/delta)/tau.

    Reports sup_t |w|_{H^s'} / (delta e^{tau t}), the same ratio with delta
    replaced by |w0|_{H^s'}, and |w(T0)|_{H^s'}.  With ``record_every > 0`` the
    entry "history" lists (t, |w(t)|_{H^s'}) every that many steps and at T0.
    """
    tau, k0 = growth_rate(q)
    if tau == 0.0:
        raise NoUnstableMode(f"no integer mode is unstable on the torus q={q}")
    if w0 is None:
        w0 = unstable_seed(q, delta, s_prime, k0, n=n)
    grid = Grid(q, len(w0))
    T0 = math.log(mu / delta) / tau
    norm0 = seed_norm(grid, w0, s_prime)
    track = {"max_ratio": norm0 / delta, "max_ratio_normalized": 1.0}

    last = {}
    history = [(0.0, norm0)]
    count = [0]

    def obs(t, raw):
        c = _perturbation_coefficients(grid, raw, t)
        nrm = coefficient_norm(grid, c, s_prime)
        last["norm"], last["t"] = nrm, t
        count[0] += 1
        if record_every and count[0] % record_every == 0:
            history.append((t, nrm))
        growth = math.exp(tau * t)
        track["max_ratio"] = max(track["max_ratio"], nrm / (delta * growth))
        track["max_ratio_normalized"] = max(track["max_ratio_normalized"], nrm / (norm0 * growth))

    final = evolve_standard(StandardState(q, 0.0, 1j * (1.0 + w0)), dt, T0, spectral_observer=obs)
    w_end = perturbation(final)
    if record_every and "t" in last and history[-1][0] != last["t"]:
        history.append((last["t"], last["norm"]))
    return {
        "q": q, "tau": tau, "k0": k0, "T0": T0, "delta": delta, "mu": mu,
        "initial_norm": norm0,
        "max_ratio": track["max_ratio"],
        "max_ratio_normalized": track["max_ratio_normalized"],
        "final_norm": last.get("norm", norm0),
        "final_l2": float(np.sqrt(np.sum(np.abs(w_end) ** 2) * grid.h / grid.length)),
        "history": history,
    }


def fit_rate(times, amplitudes) -> float:
    """Least-squares slope of log(amplitude) against time."""
    t = np.asarray(times, float)
    y = np.log(np.asarray(amplitudes, float))
    return float(np.polyfit(t, y, 1)[0])


def linear_growth_fit(q: float, amplitude: float = 1e-6, t_end: float = 5.0, dt: float = 1e-3,
                      n: int = 128, samples: int = 51) -> dict:
    """Fit the growth of the unstable component of mode k0 under a small seed."""
    tau, k0 = growth_rate(q)
    if tau == 0.0:
        raise NoUnstableMode(f"no integer mode is unstable on the torus q={q}")
    grid = Grid(q, n)
    x = grid.nodes
    w0 = amplitude * 2.0 * np.cos(k0 * x / q)
    times = np.linspace(0.0, t_end, samples)
    amps = [unstable_amplitude(grid, w0, k0)]
    state = StandardState(q, 0.0, 1j * (1.0 + w0))
    for t in times[1:]:
        state = evolve_standard(state, dt, t)
        amps.append(unstable_amplitude(grid, perturbation(state), k0))
    rate = fit_rate(times, amps)
    return {"q": q, "k0": k0, "tau": tau, "fitted_rate": rate,
            "rel_err": abs(rate - tau) / tau}


def rate_scan(qs, **kwargs) -> list[dict]:
    """Rows (q, k0, tau, fitted_rate, rel_err) for each q with an unstable mode."""
    rows = []
    for q in qs:
        tau, k0 = growth_rate(q)
        if tau == 0.0:
            rows.append({"q": q, "k0": 0, "tau": 0.0, "fitted_rate": float("nan"),
                         "rel_err": float("nan")})
            continue
        rows.append(linear_growth_fit(q, **kwargs))
    return rows


def envelope_rate(k: int, q1: float) -> float:
    """Growth rate in slow time T of mode e^{i k X / q1} of B around B = i.

    Through the change of variables this is half the standard-form rate of
    mode k on the torus 2*q1.
    """
    return 0.5 * mode_rate(k, 2.0 * q1)
