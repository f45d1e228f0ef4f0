"""Multi-scale approximation of a modulated Stokes wave.

The envelope B(X, T) on the slow torus q1*T enters the fast torus q*T
(q = q1 / eps, an integer) through

    X = eps (alpha + t / (2 omega)),   T = eps^2 t,   phi = alpha + omega t,

and builds the fields

    z1 = B e^{i phi}
    z2 = (i/2)(I + H0)|B|^2 + (i/2) M(|B|^2)
    z3 = -(1/2) conj(B) |B|^2 e^{-i phi} + (1/2)(I + H0)(conj(B) B_X)

with zeta~ = alpha + eps z1 + eps^2 z2 + eps^3 z3 and b~ = -eps^2 omega |B|^2.
For B = i these reduce to the truncated Stokes profile zeta~_ST.

Time derivatives are exact: every field is a polynomial in B, conj(B), their
X-derivatives and e^{+-i phi}, so it is carried as a second-order jet in t,
with dB/dt = (eps / 2 omega) B_X + eps^2 B_T and B_T taken from the envelope
equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IncompatiblePeriod
from .nls import NlsState
from .spectral import CurveKernel, Grid, deriv, fourier, hilbert0, hs_norm
from .stokes import StokesWave, stokes_state
from .waterwave import WaterState, dt2_zeta, theta

DEFAULT_S = 4.0


# --------------------------------------------------------------------------
# second-order jets in t


@dataclass(frozen=True)
class _Jet:
    """(f, df/dt, d^2f/dt^2) as node arrays."""

    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def __add__(self, o):
        if isinstance(o, _Jet):
            return _Jet(self.v0 + o.v0, self.v1 + o.v1, self.v2 + o.v2)
        return _Jet(self.v0 + o, self.v1, self.v2)

    __radd__ = __add__

    def __sub__(self, o):
        return self + (-1.0) * o

    def __mul__(self, o):
        if isinstance(o, _Jet):
            return _Jet(self.v0 * o.v0,
                        self.v1 * o.v0 + self.v0 * o.v1,
                        self.v2 * o.v0 + 2.0 * self.v1 * o.v1 + self.v0 * o.v2)
        return _Jet(o * self.v0, o * self.v1, o * self.v2)

    __rmul__ = __mul__

    def conj(self):
        return _Jet(np.conj(self.v0), np.conj(self.v1), np.conj(self.v2))

    def map(self, fn):
        """Apply a t-independent linear operator to each component."""
        return _Jet(fn(self.v0), fn(self.v1), fn(self.v2))


# --------------------------------------------------------------------------
# slow-to-fast sampling


def _fast_factor(grid: Grid, q1: float, eps: float) -> int:
    q = grid.q
    if not (eps > 0 and abs(q - round(q)) < 1e-9 and round(q) >= 1):
        raise IncompatiblePeriod(f"fast period factor {q} is not a positive integer")
    if abs(q * eps - q1) > 1e-9 * max(1.0, q1):
        raise IncompatiblePeriod(f"q * eps = {q * eps} differs from q1 = {q1}")
    return int(round(q))


def embed_slow(slow: Grid, f: np.ndarray, grid: Grid, eps: float, shift: float = 0.0) -> np.ndarray:
    """Samples of f(eps * (alpha + shift)) on the fast grid.

    Slow mode k of the torus q1*T is exactly fast mode k of q*T, so the
    embedding is a relabeling of Fourier coefficients times q/q1.
    """
    q = _fast_factor(grid, slow.q, eps)
    if slow.n > grid.n:
        raise ValueError("fast grid must have at least as many nodes as the slow grid")
    c = fourier(slow, np.asarray(f, dtype=complex))
    k = slow.k
    fast = np.zeros(grid.n, complex)
    fast[k % grid.n] = (q / slow.q) * c * np.exp(1j * k * shift / q)
    return np.fft.ifft(grid._phase * fast) / grid.h


def _nls_rhs(B, BXX):
    """B_T from i B_T + (1/8) B_XX + (1/2)|B|^2 B - (1/2) B = 0."""
    return 1j * (0.125 * BXX + 0.5 * np.abs(B) ** 2 * B - 0.5 * B)


def _envelope_jet(state: NlsState, eps: float, t: float, omega: float, grid: Grid):
    """Jets of B and B_X on the fast grid at time t."""
    Bf = embed_slow(state.grid, state.B, grid, eps, t / (2.0 * omega))

    def dX(f):
        return deriv(grid, f) / eps

    BX = dX(Bf)
    BXX = dX(BX)
    BT = _nls_rhs(Bf, BXX)
    BXT = dX(BT)
    BXXT = dX(BXT)
    # d/dT of |B|^2 B is 2|B|^2 B_T + B^2 conj(B_T)
    BTT = 1j * (0.125 * BXXT + 0.5 * (2.0 * np.abs(Bf) ** 2 * BT + Bf**2 * np.conj(BT)) - 0.5 * BT)
    c = eps / (2.0 * omega)
    e2 = eps**2
    B1 = c * BX + e2 * BT
    B2 = c * c * BXX + 2.0 * c * e2 * BXT + e2 * e2 * BTT
    B = _Jet(Bf, B1, B2)
    return B, B.map(dX)


def _phase_jet(grid: Grid, t: float, omega: float, sign: int) -> _Jet:
    E = np.exp(1j * sign * (grid.nodes + omega * t))
    w = 1j * sign * omega
    return _Jet(E, w * E, w * w * E)


# --------------------------------------------------------------------------
# the bundle


@dataclass(frozen=True, eq=False)
class EnvelopeBundle:
    """Multi-scale fields at one time t on the fast grid.

    Offsets are stored (zeta - alpha).  ``tilde_u`` is D~_t zeta~ and
    ``tilde_w`` is D~_t^2 zeta~; the ``_st`` entries are their Stokes
    counterparts with b~_ST = -eps^2 omega.  The ``app`` entries are filled when
    a Stokes wave is supplied.
    """

    eps: float
    B: NlsState
    omega: float
    t: float
    grid: Grid
    z1: np.ndarray
    z2: np.ndarray
    z3: np.ndarray
    b_tilde: np.ndarray
    tilde_zeta: np.ndarray
    tilde_zeta_st: np.ndarray
    tilde_u: np.ndarray
    tilde_u_st: np.ndarray
    tilde_w: np.ndarray
    tilde_w_st: np.ndarray
    stokes: StokesWave | None = None
    zeta_app: np.ndarray | None = None
    u_app: np.ndarray | None = None
    w_app: np.ndarray | None = None
    extra: dict = field(default_factory=dict, repr=False)


def _field_jets(B: _Jet, BX: _Jet, grid: Grid, t: float, omega: float):
    E = _phase_jet(grid, t, omega, 1)
    Em = _phase_jet(grid, t, omega, -1)
    Bc = B.conj()
    m2 = B * Bc
    h0 = lambda f: hilbert0(grid, f)  # noqa: E731
    mean = lambda f: np.full_like(f, np.mean(f))  # noqa: E731
    z1 = B * E
    z2 = 0.5j * (m2 + m2.map(h0)) + 0.5j * m2.map(mean)
    p = Bc * BX
    z3 = -0.5 * (Bc * m2 * Em) + 0.5 * (p + p.map(h0))
    return z1, z2, z3, m2


def _advect(zeta: _Jet, b: _Jet, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """(D_t zeta, D_t^2 zeta) for D_t = d/dt + b d/dalpha, zeta an offset jet."""
    d = lambda f: deriv(grid, f)  # noqa: E731
    za = zeta.map(d) + 1.0
    # V = dzeta/dt + b zeta_a as a first-order jet
    V0 = zeta.v1 + b.v0 * za.v0
    V1 = zeta.v2 + b.v1 * za.v0 + b.v0 * za.v1
    return V0, V1 + b.v0 * d(V0)


def envelope_bundle(B: NlsState, eps: float, t: float, grid: Grid, omega: float | None = None,
                    stokes: StokesWave | None = None) -> EnvelopeBundle:
    """All multi-scale fields at time t; B must be the envelope at T = eps^2 t.

    omega defaults to the Stokes frequency when a wave is supplied and to
    1 + eps^2/2 otherwise.
    """
    if omega is None:
        omega = stokes.omega if stokes is not None else 1.0 + 0.5 * eps**2
    if abs(B.T - eps**2 * t) > 1e-9 * max(1.0, abs(B.T)):
        raise ValueError(f"envelope time {B.T} does not match eps^2 t = {eps**2 * t}")
    Bj, BXj = _envelope_jet(B, eps, t, omega, grid)
    z1, z2, z3, m2 = _field_jets(Bj, BXj, grid, t, omega)
    tz = eps * z1 + eps**2 * z2 + eps**3 * z3
    b = -(eps**2) * omega * m2
    u, w = _advect(tz, b, grid)

    E = _phase_jet(grid, t, omega, 1)
    Em = _phase_jet(grid, t, omega, -1)
    tz_st = 1j * eps * E + 0.5j * eps**3 * Em + 1j * eps**2
    zero = np.zeros(grid.n)
    b_st = _Jet(zero - eps**2 * omega, zero, zero)
    u_st, w_st = _advect(tz_st, b_st, grid)

    app = {}
    if stokes is not None:
        st = stokes_state(stokes, t, grid)
        app = {
            "stokes": stokes,
            "zeta_app": st.offset + (tz.v0 - tz_st.v0),
            "u_app": st.u + (u - u_st),
            "w_app": dt2_zeta(st) + (w - w_st),
            "extra": {"stokes_state": st},
        }
    return EnvelopeBundle(eps, B, omega, t, grid, z1.v0, z2.v0, z3.v0, b.v0.real,
                          tz.v0, tz_st.v0, u, u_st, w, w_st, **app)


def envelope_fields(B: NlsState, eps: float, t: float, grid: Grid,
                    omega: float | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(z1, z2, z3) sampled on the fast grid."""
    bundle = envelope_bundle(B, eps, t, grid, omega)
    return bundle.z1, bundle.z2, bundle.z3


def tilde_objects(bundle: EnvelopeBundle, stokes: StokesWave):
    """(zeta~, zeta~_ST, zeta_app) as full curves alpha + offset."""
    if bundle.stokes is not stokes:
        bundle = envelope_bundle(bundle.B, bundle.eps, bundle.t, bundle.grid, bundle.omega, stokes)
    a = bundle.grid.nodes
    return a + bundle.tilde_zeta, a + bundle.tilde_zeta_st, a + bundle.zeta_app


def tilde_velocity(bundle: EnvelopeBundle) -> np.ndarray:
    """D~_t zeta~ = d/dt zeta~ + b~ zeta~_alpha."""
    return bundle.tilde_u


# --------------------------------------------------------------------------
# remainder diagnostics


def _require_app(bundle: EnvelopeBundle):
    if bundle.zeta_app is None:
        raise ValueError("bundle was built without a Stokes wave")
    return bundle


def remainder(state: WaterState, bundle: EnvelopeBundle, s: float = DEFAULT_S):
    """(r, D_t r, D_t^2 r, E_s) for r = zeta - zeta_app.

    The approximate velocity is D_t^ST zeta_ST + (D~_t zeta~ - D~_t^ST zeta~_ST)
    and its acceleration is built the same way; D_t^2 zeta of the state comes
    from -i + i A zeta_alpha.
    """
    _require_app(bundle)
    if abs(state.t - bundle.t) > 1e-12 * max(1.0, abs(state.t)):
        raise ValueError("state and bundle are at different times")
    g = state.grid
    r = state.offset - bundle.zeta_app
    dr = state.u - bundle.u_app
    ddr = dt2_zeta(state) - bundle.w_app
    root = hs_norm(g, dr, s + 0.5) + hs_norm(g, deriv(g, r), s) + hs_norm(g, ddr, s)
    return r, dr, ddr, root**2


def cubic_remainder_rho(state: WaterState, stokes_st: WaterState, bundle: EnvelopeBundle) -> np.ndarray:
    """rho = (I - H_zeta)[theta - theta_ST - (theta~ - theta~_ST)]."""
    g = state.grid
    th = theta(state)
    th_st = theta(stokes_st)
    k_t = CurveKernel(g, bundle.tilde_zeta)
    k_ts = CurveKernel(g, bundle.tilde_zeta_st)
    tt = bundle.tilde_zeta - k_t.hilbert(bundle.tilde_zeta)
    tts = bundle.tilde_zeta_st - k_ts.hilbert(bundle.tilde_zeta_st)
    f = th - th_st - (tt - tts)
    return f - state.kernel.hilbert(f)


def packet_holo_check(f: np.ndarray, q1: float, lam: int, eps: float, s: float = DEFAULT_S) -> float:
    """|| (I + sgn(lam) H0) f(eps alpha) e^{i lam alpha} ||_{H^s(qT)}, q = q1 / eps.

    f is sampled on Grid(q1, n).  Slow mode k lands on fast mode k + lam*q with
    coefficient f_k / eps, so the norm is evaluated exactly in Fourier space.
    """
    lam = int(lam)
    if lam == 0:
        raise ValueError("lam must be a nonzero integer")
    slow = Grid(q1, len(f))
    q = q1 / eps
    if abs(q - round(q)) > 1e-9:
        raise IncompatiblePeriod(f"q1 / eps = {q} is not an integer")
    q = int(round(q))
    c = fourier(slow, np.asarray(f, dtype=complex)) * (q / q1)
    j = slow.k + lam * q
    mult = 1.0 - np.sign(lam) * np.sign(j)
    w = (1.0 + np.abs(j) / q) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(mult * c) ** 2) / (2.0 * np.pi * q)))


def packet_holo_bound(f: np.ndarray, q1: float, eps: float, m: float, s: float = DEFAULT_S) -> float:
    """eps^(m - 1/2) ||f||_{H^{s+m}(q1 T)}, the right-hand side of the packet estimate."""
    return eps ** (m - 0.5) * hs_norm(Grid(q1, len(f)), np.asarray(f, dtype=complex), s + m)
