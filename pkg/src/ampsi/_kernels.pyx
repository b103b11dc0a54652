# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled denoiser kernels; see ``_kernels_py`` for the reference semantics."""
from libc.math cimport exp, log, fabs

cdef double LOG_CLAMP = 745.0


cdef inline double _clamp(double z) nogil:
    if z > LOG_CLAMP:
        return LOG_CLAMP
    if z < -LOG_CLAMP:
        return -LOG_CLAMP
    return z


def bg_eval(const double[::1] a, const double[::1] b, double lam, double eps,
            double sigma, double[::1] out, double[::1] dout):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double s2 = sigma * sigma, l2 = lam * lam
    cdef double D = s2 + l2 + s2 * l2
    cdef double c0 = 0.0, u, z, e, p, q, div = 0.0
    cdef bint dense = eps >= 1.0
    if not dense:
        c0 = log((1.0 - eps) / eps) + 0.5 * log(D / (l2 * s2))
    with nogil:
        for i in range(n):
            u = s2 * a[i] + l2 * b[i]
            if dense:
                p = 1.0
                q = 0.0
            else:
                z = _clamp(c0 - u * u / (2.0 * s2 * l2 * D))
                e = exp(-fabs(z))
                if z > 0:
                    p = e / (1.0 + e)
                    q = 1.0 / (1.0 + e)
                else:
                    p = 1.0 / (1.0 + e)
                    q = e / (1.0 + e)
            out[i] = p * (u / D)
            dout[i] = p * (s2 / D) + p * q * (u * u) / (l2 * D * D)
            div += dout[i]
    return div


def bern_eval(const double[::1] a, const double[::1] b, double lam, double sigma,
              long K, double[::1] out, double[::1] dout):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double l2 = lam * lam, s2 = sigma * sigma
    cdef double c0, z, e, p, q, div = 0.0
    if K == 1:
        for i in range(n):
            out[i] = 1.0
            dout[i] = 0.0
        return 0.0
    c0 = -log(K - 1.0)
    with nogil:
        for i in range(n):
            z = _clamp(c0 + (2.0 * a[i] - 1.0) / (2.0 * l2) + (2.0 * b[i] - 1.0) / (2.0 * s2))
            e = exp(-fabs(z))
            if z > 0:
                p = 1.0 / (1.0 + e)
                q = e / (1.0 + e)
            else:
                p = e / (1.0 + e)
                q = 1.0 / (1.0 + e)
            out[i] = p
            dout[i] = p * q / l2
            div += dout[i]
    return div


def block_eval(const double[::1] a, const double[::1] b, long K, double lam,
               double sigma, double[::1] out):
    cdef Py_ssize_t blk, k, base, n = a.shape[0]
    cdef double il2 = 1.0 / (lam * lam), is2 = 1.0 / (sigma * sigma)
    cdef double zmax, total, g, acc = 0.0
    with nogil:
        for blk in range(n // K):
            base = blk * K
            zmax = a[base] * il2 + b[base] * is2
            for k in range(1, K):
                g = a[base + k] * il2 + b[base + k] * is2
                if g > zmax:
                    zmax = g
            total = 0.0
            for k in range(K):
                g = exp(a[base + k] * il2 + b[base + k] * is2 - zmax)
                out[base + k] = g
                total += g
            for k in range(K):
                g = out[base + k]
                acc += (g / total) * ((total - g) / total)
                out[base + k] = g / total
    return acc * il2
