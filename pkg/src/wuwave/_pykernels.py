"""Pure numpy reference implementation of the dense Hilbert kernels.

Same signatures and outputs as the compiled ``_ckernels`` module.  Used when
the extension is not built, or when ``WUWAVE_PURE=1`` is set.
"""

import numpy as np


def hilbert_matrices(e, zp, zpp, p0_im, inv_d0, h, q):
    """Return (R, K, Kw, min_chord_ratio) for the curve sampled as e = exp(i zeta / q).

    R is the smooth remainder of the curve Hilbert kernel after subtracting the
    flat cotangent kernel (trapezoid weights included).  K = Re R is the double
    layer on real data and Kw is the real kernel of the tangent-weighted
    equation.  The last value is the discrete chord-arc ratio.
    """
    n = e.shape[0]
    scale = h / (2.0 * q * np.pi)
    ea = e[:, None]
    eb = e[None, :]
    den = ea - eb
    np.fill_diagonal(den, 1.0)
    P = (ea + eb) / den
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    R = scale * (zp[None, :] * P - 1j * p0_im[idx])
    absz = np.abs(zp)
    t = zp / absz
    Kw = scale * np.real(t[:, None] * absz[None, :] * P)

    w = zpp / zp
    diag = np.arange(n)
    R[diag, diag] = 1j * h / (2.0 * np.pi) * w
    K = np.ascontiguousarray(R.real)
    Kw[diag, diag] = h / (2.0 * np.pi) * w.imag

    mod = np.abs(e)
    ratio = np.abs(den) ** 2 * inv_d0[idx] / (mod[:, None] * mod[None, :])
    ratio[diag, diag] = np.inf
    return R, K, Kw, float(np.sqrt(ratio.min()))


def square_kernel_apply(e, u, diag, fb, h, q):
    """Trapezoid sum of (1/4 pi q^2 i) (du / sin(dzeta/2q))^2 f_beta."""
    n = e.shape[0]
    ea = e[:, None]
    eb = e[None, :]
    de = ea - eb
    np.fill_diagonal(de, 1.0)
    du = u[:, None] - u[None, :]
    kern = -4.0 * du * du * ea * eb / (de * de)
    idx = np.arange(n)
    kern[idx, idx] = diag
    return h / (4.0 * np.pi * q * q * 1j) * (kern @ fb)
