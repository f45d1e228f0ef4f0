# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense kernels for the periodic curve Hilbert transform.

Every kernel entry is evaluated through e = exp(i*zeta/q), which turns the
cotangent into a ratio of differences and avoids transcendental calls in
the inner loop.  The layout and the returned values match
``wuwave._pykernels`` exactly; that module is the reference.
"""

import numpy as np
from libc.math cimport sqrt


def hilbert_matrices(const double complex[::1] e, const double complex[::1] zp,
                     const double complex[::1] zpp, const double[::1] p0_im,
                     const double[::1] inv_d0, double h, double q):
    """Return (R, K, Kw, min_chord_ratio) for the curve sampled as e = exp(i zeta / q)."""
    cdef Py_ssize_t n = e.shape[0]
    cdef Py_ssize_t a, b, m
    cdef double scale = h / (2.0 * q * 3.141592653589793)
    cdef double dscale = h / (2.0 * 3.141592653589793)
    R_arr = np.empty((n, n), dtype=np.complex128)
    K_arr = np.empty((n, n), dtype=np.float64)
    Kw_arr = np.empty((n, n), dtype=np.float64)
    cdef double complex[:, ::1] R = R_arr
    cdef double[:, ::1] K = K_arr
    cdef double[:, ::1] Kw = Kw_arr

    cdef double[::1] er = np.ascontiguousarray(np.real(e))
    cdef double[::1] ei = np.ascontiguousarray(np.imag(e))
    cdef double[::1] zr = np.ascontiguousarray(np.real(zp))
    cdef double[::1] zi = np.ascontiguousarray(np.imag(zp))
    absz_arr = np.abs(zp)
    cdef double[::1] absz = absz_arr
    cdef double[::1] tr = np.ascontiguousarray(np.real(zp) / absz_arr)
    cdef double[::1] ti = np.ascontiguousarray(np.imag(zp) / absz_arr)
    cdef double[::1] inv_mod = 1.0 / np.abs(e)

    cdef double ear, eai, dr, di, nr, ni, den2, inv, pr, pi, rr, ri
    cdef double tar, tai, ratio, min_ratio = 1e300, ma
    cdef double complex w
    for a in range(n):
        ear = er[a]
        eai = ei[a]
        tar = tr[a]
        tai = ti[a]
        ma = inv_mod[a]
        for b in range(n):
            if b == a:
                continue
            m = a - b
            if m < 0:
                m = m + n
            dr = ear - er[b]
            di = eai - ei[b]
            nr = ear + er[b]
            ni = eai + ei[b]
            den2 = dr * dr + di * di
            inv = 1.0 / den2
            # P = (e_a + e_b) / (e_a - e_b)
            pr = (nr * dr + ni * di) * inv
            pi = (ni * dr - nr * di) * inv
            rr = zr[b] * pr - zi[b] * pi
            ri = zr[b] * pi + zi[b] * pr - p0_im[m]
            R[a, b] = scale * rr + 1j * (scale * ri)
            K[a, b] = scale * rr
            Kw[a, b] = scale * absz[b] * (tar * pr - tai * pi)
            ratio = den2 * inv_d0[m] * ma * inv_mod[b]
            if ratio < min_ratio:
                min_ratio = ratio
        w = zpp[a] / zp[a]
        R[a, a] = 1j * dscale * w
        K[a, a] = -dscale * w.imag
        Kw[a, a] = dscale * w.imag
    return R_arr, K_arr, Kw_arr, sqrt(min_ratio)


def square_kernel_apply(const double complex[::1] e, const double complex[::1] u,
                        const double complex[::1] diag, const double complex[::1] fb,
                        double h, double q):
    """Trapezoid sum of (1/4 pi q^2 i) (du / sin(dzeta/2q))^2 f_beta.

    ``diag`` carries the analytic diagonal value of (du/sin)^2.
    """
    cdef Py_ssize_t n = e.shape[0]
    cdef Py_ssize_t a, b
    out_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double complex acc, du, de, ea, kern
    cdef double complex pref = h / (4.0 * 3.141592653589793 * q * q * 1j)
    for a in range(n):
        ea = e[a]
        acc = diag[a] * fb[a]
        for b in range(n):
            if b == a:
                continue
            du = u[a] - u[b]
            de = ea - e[b]
            kern = -4.0 * du * du * ea * e[b] / (de * de)
            acc = acc + kern * fb[b]
        out[a] = pref * acc
    return out_arr
