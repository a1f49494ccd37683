# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled message-update kernels; same contracts as ``_pykernels``."""
import numpy as np
from libc.math cimport exp, fabs, log, log1p

cdef double VARIANCE_FLOOR = 1e-12
cdef double CN_SHORTCUT = -30.0


cdef inline double _clip(double x, double c) nogil:
    if x > c:
        return c
    if x < -c:
        return -c
    return x


cdef inline double _softplus(double x) nogil:
    return (x if x > 0 else 0.0) + log1p(exp(-fabs(x)))


cdef inline double _cn_llr(double lp, double clamp) nogil:
    if lp >= 0.0:
        return clamp
    if lp < CN_SHORTCUT:
        return _clip(lp, clamp)
    return _clip(lp - log1p(-exp(lp)), clamp)


def sn_update(const double[:, ::1] H, const double[:, ::1] Y,
              const double[:, :, ::1] l_vs, double sigma_sq, double clamp):
    cdef Py_ssize_t M = H.shape[0], Ns = H.shape[1], Np = Y.shape[1]
    cdef Py_ssize_t m, i, p
    cdef double h, mt, vt, u, v, floor, x, e, r
    out_arr = np.empty((M, Ns, Np))
    cdef double[:, :, ::1] out = out_arr
    cdef double[::1] U = np.empty(Np), V = np.empty(Np)
    cdef double[:, ::1] mean_t = np.empty((Ns, Np)), var_t = np.empty((Ns, Np))
    floor = sigma_sq if sigma_sq > VARIANCE_FLOOR else VARIANCE_FLOOR
    with nogil:
        for m in range(M):
            for p in range(Np):
                U[p] = 0.0
                V[p] = 0.0
            for i in range(Ns):
                h = H[m, i]
                for p in range(Np):
                    x = l_vs[m, i, p]
                    e = exp(-fabs(x))
                    r = 1.0 / (1.0 + e)
                    mt = h * (r if x >= 0 else e * r)
                    vt = h * h * (e * r * r)
                    mean_t[i, p] = mt
                    var_t[i, p] = vt
                    U[p] += mt
                    V[p] += vt
            for i in range(Ns):
                h = H[m, i]
                for p in range(Np):
                    u = U[p] - mean_t[i, p]
                    v = V[p] - var_t[i, p] + sigma_sq
                    if v < floor:
                        v = floor
                    out[m, i, p] = _clip((2.0 * (Y[m, p] - u) * h - h * h) / (2.0 * v), clamp)
    return out_arr


def cn_update(const double[:, ::1] l_vc, double p_a, double clamp):
    cdef Py_ssize_t Ns = l_vc.shape[0], Np = l_vc.shape[1]
    cdef Py_ssize_t s, p
    cdef double total, rest, log_pa
    out_arr = np.empty((Ns, Np))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] sp = np.empty(Np)
    if p_a <= 0.0:
        out_arr.fill(-clamp)
        return out_arr
    log_pa = log(p_a)
    with nogil:
        for s in range(Ns):
            total = 0.0
            for p in range(Np):
                sp[p] = _softplus(l_vc[s, p])
                total += sp[p]
            for p in range(Np):
                rest = total - sp[p]
                if rest < 0.0:
                    rest = 0.0
                out[s, p] = _cn_llr(log_pa - rest, clamp)
    return out_arr


cdef void _totals(const double[:, :, ::1] l_s, double[:, ::1] total) nogil:
    cdef Py_ssize_t M = l_s.shape[0], Ns = l_s.shape[1], Np = l_s.shape[2]
    cdef Py_ssize_t m, s, p
    for s in range(Ns):
        for p in range(Np):
            total[s, p] = l_s[0, s, p]
    for m in range(1, M):
        for s in range(Ns):
            for p in range(Np):
                total[s, p] += l_s[m, s, p]


def vn_update(const double[:, :, ::1] l_s, const double[:, ::1] l_c, double prior, double clamp):
    cdef Py_ssize_t M = l_s.shape[0], Ns = l_s.shape[1], Np = l_s.shape[2]
    cdef Py_ssize_t m, s, p
    l_vs_arr = np.empty((M, Ns, Np))
    l_vc_arr = np.empty((Ns, Np))
    cdef double[:, :, ::1] l_vs = l_vs_arr
    cdef double[:, ::1] l_vc = l_vc_arr
    cdef double[:, ::1] total = np.empty((Ns, Np))
    with nogil:
        _totals(l_s, total)
        for m in range(M):
            for s in range(Ns):
                for p in range(Np):
                    l_vs[m, s, p] = _clip(((total[s, p] - l_s[m, s, p]) + prior) + l_c[s, p], clamp)
        for s in range(Ns):
            for p in range(Np):
                l_vc[s, p] = _clip(total[s, p] + prior, clamp)
    return l_vs_arr, l_vc_arr


def output_llrs(const double[:, :, ::1] l_s, const double[:, ::1] l_c, double prior):
    cdef Py_ssize_t Ns = l_s.shape[1], Np = l_s.shape[2]
    cdef Py_ssize_t s, p
    out_arr = np.empty((Ns, Np))
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] total = np.empty((Ns, Np))
    with nogil:
        _totals(l_s, total)
        for s in range(Ns):
            for p in range(Np):
                out[s, p] = (total[s, p] + prior) + l_c[s, p]
    return out_arr
