"""Water waves in Wu's modified Lagrangian coordinates on the torus qT.

The evolved pair is (zeta - alpha, u) with u = D_t zeta, D_t = d/dt + b d/dalpha:

    d/dt (zeta - alpha) = u - b zeta_a
    d/dt u              = -i + i A zeta_a - b u_a

with b and A recovered from the curve at each stage:

    (I - H)b = -[u, H] (conj(zeta_a) - 1) / zeta_a
    (I - H)(A - 1) = i[u, H] conj(u_a) / zeta_a + i[D_t^2 zeta, H] (conj(zeta_a) - 1) / zeta_a

Since (conj(zeta_a) - 1)/zeta_a is a holomorphic boundary value, the second
bracket equals -(I - H)(A (conj(zeta_a) - 1)) and the A equation collapses to
the tangent-weighted real equation

    (I - H)(A conj(zeta_a)) = 1 + i[u, H] conj(u_a) / zeta_a,

which needs no outer iteration.  ``compute_A(method="fixed_point")`` keeps the
iteration in D_t^2 zeta as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowupDetected, ChordArcViolation, NoConvergence
from .spectral import (
    CurveKernel,
    Grid,
    deriv,
    dealias,
    hs_norm,
    krasny,
    l2,
)

NORM_LIMIT = 1e6
KRASNY_LEVEL = 1e-13


@dataclass(frozen=True, eq=False)
class WaterState:
    """The pair (zeta - alpha, D_t zeta) at time t on ``grid``.

    ``offset`` and ``u`` are complex node arrays.  b, A and the curve kernel
    are computed on demand and cached on the instance.
    """

    grid: Grid
    t: float
    offset: np.ndarray
    u: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("offset", "u"):
            arr = np.array(getattr(self, name), dtype=np.complex128)
            if arr.shape != (self.grid.n,):
                raise ValueError(f"{name} has wrong length")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def rest(cls, grid: Grid, t: float = 0.0) -> "WaterState":
        z = np.zeros(grid.n, dtype=np.complex128)
        return cls(grid, t, z, z)

    @property
    def zeta(self) -> np.ndarray:
        return self.grid.nodes + self.offset

    @property
    def zeta_a(self) -> np.ndarray:
        return self.kernel.zeta_a

    @property
    def kernel(self) -> CurveKernel:
        ker = self._cache.get("kernel")
        if ker is None:
            ker = CurveKernel(self.grid, self.offset)
            self._cache["kernel"] = ker
        return ker

    def replace(self, t=None, offset=None, u=None) -> "WaterState":
        return WaterState(
            self.grid,
            self.t if t is None else t,
            self.offset if offset is None else offset,
            self.u if u is None else u,
        )


# --------------------------------------------------------------------------
# auxiliary quantities


def _b_rhs(ker: CurveKernel, u: np.ndarray) -> np.ndarray:
    F = (np.conj(ker.zeta_a) - 1.0) / ker.zeta_a
    return -ker.commutator_plain(u, F)


def compute_b(state: WaterState) -> np.ndarray:
    """Real b with (I - H)b = -[D_t zeta, H](conj(zeta_a) - 1)/zeta_a."""
    b = state._cache.get("b")
    if b is None:
        ker = state.kernel
        b = ker.solve_real(_b_rhs(ker, state.u))
        state._cache["b"] = b
    return b


def _a_rhs_direct(ker: CurveKernel, u: np.ndarray, grid: Grid) -> np.ndarray:
    G = np.conj(deriv(grid, u)) / ker.zeta_a
    return 1.0 + 1j * ker.commutator_plain(u, G)


def compute_A(state: WaterState, method: str = "direct", tol: float = 1e-12,
              max_iter: int = 50) -> np.ndarray:
    """Real A from the (I - H)(A - 1) formula.

    ``method="direct"`` solves the equivalent weighted equation
    (I - H)(A conj(zeta_a)) = 1 + i[u, H] conj(u_a)/zeta_a in one real solve.
    ``method="fixed_point"`` iterates D_t^2 zeta = -i + i A zeta_a from A = 1,
    re-solving the unweighted equation until the sup change in A is <= tol.
    """
    if method == "direct":
        A = state._cache.get("A")
        if A is None:
            ker = state.kernel
            A = ker.solve_real(_a_rhs_direct(ker, state.u, state.grid), weighted=True)
            state._cache["A"] = A
        return A
    if method != "fixed_point":
        raise ValueError(f"unknown method {method!r}")
    ker = state.kernel
    grid = state.grid
    u = state.u
    F = (np.conj(ker.zeta_a) - 1.0) / ker.zeta_a
    first = 1j * ker.commutator_plain(u, np.conj(deriv(grid, u)) / ker.zeta_a)
    A = np.ones(grid.n)
    for _ in range(max_iter):
        dt2 = -1j + 1j * A * ker.zeta_a
        rhs = first + 1j * ker.commutator_plain(dt2, F)
        A_new = 1.0 + ker.solve_real(rhs, x0=A - 1.0)
        change = np.max(np.abs(A_new - A))
        A = A_new
        if change <= tol:
            return A
    raise NoConvergence("fixed-point pass for A did not converge")


def dt2_zeta(state: WaterState) -> np.ndarray:
    """D_t^2 zeta = -i + i A zeta_a."""
    return -1j + 1j * compute_A(state) * state.zeta_a


def compute_at_over_a(state: WaterState) -> np.ndarray:
    """(a_t / a) o kappa^{-1} from the weighted real equation

    -i (I - H)(h A conj(zeta_a)) = 2[D_t^2 zeta, H] conj(u_a)/zeta_a
        + 2[u, H] d_a conj(D_t^2 zeta)/zeta_a
        - (1/4 pi q^2 i) int ((u(a)-u(b))/sin((zeta(a)-zeta(b))/2q))^2 conj(u)_b db
    """
    ker = state.kernel
    grid = state.grid
    u = state.u
    A = compute_A(state)
    w = dt2_zeta(state)
    rhs = (
        2.0 * ker.commutator_plain(w, np.conj(deriv(grid, u)) / ker.zeta_a)
        + 2.0 * ker.commutator_plain(u, np.conj(deriv(grid, w)) / ker.zeta_a)
        - ker.square_kernel(u, np.conj(u))
    )
    hA = ker.solve_real(1j * rhs, weighted=True)
    return hA / A


# --------------------------------------------------------------------------
# evolution


def _derivatives(grid: Grid, offset: np.ndarray, u: np.ndarray, cache: dict | None = None):
    ker = CurveKernel(grid, offset)
    ua = deriv(grid, u)
    F = (np.conj(ker.zeta_a) - 1.0) / ker.zeta_a
    G = np.conj(ua) / ker.zeta_a
    HX = ker.hilbert(np.stack([F, u * F, G, u * G], axis=1))
    rhs_b = -(u * HX[:, 0] - HX[:, 1])
    rhs_a = 1.0 + 1j * (u * HX[:, 2] - HX[:, 3])
    guess_b = guess_a = None
    if cache is not None:
        guess_b = cache.get("b")
        guess_a = cache.get("A")
    b = ker.solve_real(rhs_b, x0=guess_b)
    A = ker.solve_real(rhs_a, weighted=True, x0=guess_a)
    if cache is not None:
        cache["b"] = b
        cache["A"] = A
    d_off = dealias(grid, u - b * ker.zeta_a)
    d_u = dealias(grid, -1j + 1j * A * ker.zeta_a - b * ua)
    return d_off, d_u


def time_derivative(state: WaterState) -> tuple[np.ndarray, np.ndarray]:
    """(d/dt (zeta - alpha), d/dt D_t zeta), both dealiased by the 2/3 rule."""
    ker = state.kernel
    grid = state.grid
    b = compute_b(state)
    A = compute_A(state)
    ua = deriv(grid, state.u)
    d_off = dealias(grid, state.u - b * ker.zeta_a)
    d_u = dealias(grid, -1j + 1j * A * ker.zeta_a - b * ua)
    return d_off, d_u


def max_stable_dt(grid: Grid) -> float:
    """CFL bound 0.5 / sqrt(k_max) against the gravity-wave dispersion."""
    return 0.5 / np.sqrt(grid.k_max)


def _filter(grid: Grid, x: np.ndarray) -> np.ndarray:
    return krasny(grid, dealias(grid, x), KRASNY_LEVEL)


def _guard(grid: Grid, t: float, offset: np.ndarray, u: np.ndarray, state=None):
    bad = not (np.all(np.isfinite(offset)) and np.all(np.isfinite(u)))
    if bad or max(np.max(np.abs(offset)), np.max(np.abs(u))) > NORM_LIMIT:
        raise BlowupDetected(f"field norm exceeded {NORM_LIMIT:g} at t={t:.6g}", t=t, state=state)


def step_rk4(state: WaterState, dt: float, _warm: dict | None = None) -> WaterState:
    """One classical RK4 step followed by 2/3 dealiasing and the Krasny filter."""
    grid = state.grid
    if abs(dt) > max_stable_dt(grid) * (1.0 + 1e-12):
        raise ValueError(f"|dt|={abs(dt)} exceeds the CFL bound {max_stable_dt(grid):.4g}")
    warm = {} if _warm is None else _warm
    y0, v0 = state.offset, state.u
    try:
        k1 = _derivatives(grid, y0, v0, warm)
        k2 = _derivatives(grid, y0 + 0.5 * dt * k1[0], v0 + 0.5 * dt * k1[1], warm)
        k3 = _derivatives(grid, y0 + 0.5 * dt * k2[0], v0 + 0.5 * dt * k2[1], warm)
        k4 = _derivatives(grid, y0 + dt * k3[0], v0 + dt * k3[1], warm)
    except ChordArcViolation as exc:
        raise BlowupDetected(f"chord-arc condition lost near t={state.t:.6g}: {exc}",
                             t=state.t, state=state) from exc
    y1 = y0 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    v1 = v0 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    y1 = _filter(grid, y1)
    v1 = _filter(grid, v1)
    _guard(grid, state.t + dt, y1, v1, state)
    return WaterState(grid, state.t + dt, y1, v1)


def evolve(state: WaterState, t_end: float, dt: float, observers=(), every: int = 1):
    """Step from state.t to t_end with fixed dt.

    Each observer is called as ``observer(state, step_index)`` on the initial
    state and then every ``every`` steps.  Returns the final state.  The step
    count is round((t_end - t)/dt); the last time equals t + steps*dt.
    """
    steps = int(round((t_end - state.t) / dt))
    if steps < 0:
        raise ValueError("t_end precedes the state time")
    warm: dict = {}
    for obs in observers:
        obs(state, 0)
    for i in range(1, steps + 1):
        state = step_rk4(state, dt, warm)
        if i % every == 0 or i == steps:
            for obs in observers:
                obs(state, i)
    return state


# --------------------------------------------------------------------------
# diagnostics


def holo_residuals(state: WaterState) -> tuple[float, float]:
    """L2 norms of (I - H)f minus its Cauchy-integral constant, for
    f = conj(zeta) - alpha and f = conj(D_t zeta)."""
    ker = state.kernel
    out = []
    for f in (np.conj(state.offset), np.conj(state.u)):
        r = f - ker.hilbert(f) - ker.cauchy_constant(f)
        out.append(l2(state.grid, r))
    return out[0], out[1]


def theta(state: WaterState) -> np.ndarray:
    """theta = (I - H_zeta)(zeta - alpha), evaluated as (I - H_zeta)(zeta - conj(zeta)).

    The two agree when (I - H)(conj(zeta) - alpha) vanishes.  On the torus
    that quantity is only constant in alpha: its imaginary part follows the
    conformal mean level of the fluid domain and drifts in time, while real b
    cannot absorb it.  The second form keeps (D_t^2 - iA d_a) theta = G1 + G2
    exact along the evolution.
    """
    ker = state.kernel
    f = state.offset - np.conj(state.offset)
    return f - ker.hilbert(f)


def _imcot_kernel(state: WaterState) -> np.ndarray:
    # Im cot((zeta(a) - zeta(b))/2q) = Re P with P = (e_a + e_b)/(e_a - e_b)
    e = state.kernel.e
    den = e[:, None] - e[None, :]
    np.fill_diagonal(den, 1.0)
    P = (e[:, None] + e[None, :]) / den
    K = P.real
    np.fill_diagonal(K, 0.0)
    return K


def cubic_forcing(state: WaterState) -> tuple[np.ndarray, np.ndarray]:
    """(G1, G2) with (D_t^2 - iA d_a) theta = G1 + G2.

    G1 = -2[u, H 1/zeta_a + conj(H) 1/conj(zeta_a)] u_a is summed with the real
    kernel (1/q pi) Im cot((zeta(a) - zeta(b))/2q), whose product with
    u(a) - u(b) is smooth; the diagonal value is 2 q u_a Im(1/zeta_a).
    G2 is the square kernel applied to zeta - conj(zeta).
    """
    grid = state.grid
    ker = state.kernel
    u = state.u
    ua = deriv(grid, u)
    K = _imcot_kernel(state)
    du = u[:, None] - u[None, :]
    M = du * K
    np.fill_diagonal(M, 2.0 * grid.q * ua * np.imag(1.0 / ker.zeta_a))
    G1 = -2.0 * grid.h / (grid.q * np.pi) * (M @ ua)
    G2 = ker.square_kernel(u, state.offset - np.conj(state.offset))
    return G1, G2


def cubic_forcing_hilbert(state: WaterState) -> np.ndarray:
    """G1 evaluated through two applications of H_zeta (second route)."""
    ker = state.kernel
    u = state.u
    ua = deriv(state.grid, u)
    X = ker.hilbert(np.stack([ua / ker.zeta_a, u * ua / ker.zeta_a,
                              np.conj(ua) / ker.zeta_a, np.conj(u * ua) / ker.zeta_a], axis=1))
    op = u * (X[:, 0] + np.conj(X[:, 2])) - (X[:, 1] + np.conj(X[:, 3]))
    return -2.0 * op


def basic_energy(state: WaterState, Theta: np.ndarray, dtTheta: np.ndarray) -> float:
    """E0 = int (1/A)|D_t Theta|^2 + i Theta d_a conj(Theta)."""
    grid = state.grid
    A = compute_A(state)
    dens = np.abs(dtTheta) ** 2 / A + 1j * Theta * np.conj(deriv(grid, Theta))
    return float(np.real(np.sum(dens)) * grid.h)


def energy_derivative_check(state: WaterState, dt: float = 1e-3) -> dict:
    """Compare a finite-difference dE0/dt against the energy identity, Theta = theta.

    The state is stepped with RK4 to t +- j dt (j <= 4); D_t theta comes from
    fourth-order central differences in t plus b theta_a, and G = G1 + G2.
    """
    grid = state.grid
    states = {0: state}
    fwd = state
    bwd = state
    for j in range(1, 5):
        fwd = step_rk4(fwd, dt)
        bwd = step_rk4(bwd, -dt)
        states[j] = fwd
        states[-j] = bwd
    th = {j: theta(s) for j, s in states.items()}

    def d_theta(j):
        dth = (-th[j + 2] + 8 * th[j + 1] - 8 * th[j - 1] + th[j - 2]) / (12 * dt)
        s = states[j]
        return dth + compute_b(s) * deriv(grid, th[j])

    E = {j: basic_energy(states[j], th[j], d_theta(j)) for j in (-2, -1, 1, 2)}
    fd = (-E[2] + 8 * E[1] - 8 * E[-1] + E[-2]) / (12 * dt)
    Dth = d_theta(0)
    G1, G2 = cubic_forcing(state)
    G = G1 + G2
    A = compute_A(state)
    at = compute_at_over_a(state)
    rhs = float(np.sum(2.0 / A * np.real(Dth * np.conj(G)) - at / A * np.abs(Dth) ** 2) * grid.h)
    rel = abs(fd - rhs) / max(abs(rhs), abs(fd), 1e-300)
    return {"fd": fd, "identity": rhs, "relative_error": rel}


def field_norms(state: WaterState, s: float = 4.0) -> dict:
    """Sobolev norms of (zeta_a - 1, u) used in run records."""
    g = state.grid
    return {
        "zeta_a_minus_1_Hs": hs_norm(g, deriv(g, state.offset), s),
        "u_Hs_half": hs_norm(g, state.u, s + 0.5),
    }
