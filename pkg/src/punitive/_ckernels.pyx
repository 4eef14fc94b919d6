# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled slot loops. Mirrors ``_pykernels.py`` operation for operation."""
from cpython cimport array
import array


cdef inline double _best_response(double phi, double q, double alpha, double cm,
                                  double* base) noexcept nogil:
    # writes the pre-noise demand to base; exactly 0 when the market shuts
    cdef double cost = q + cm
    cdef double p
    if phi - alpha * cost <= 0.0:
        base[0] = 0.0
        return phi / alpha
    p = (phi + alpha * cost) / (2.0 * alpha)
    if p < 0.0:
        p = 0.0
    base[0] = phi - alpha * p
    if base[0] < 0.0:
        base[0] = 0.0
    return p


def policy_one_loop(const long long[:] phi_idx, const long long[:] rep_idx,
                    const double[:] support, const double[:] qstar, const double[:, :] h,
                    double alpha, double cs, double cm, double pi, double mean_phi,
                    double[:] Q, double[:] P, double[:] D, double[:] um, double[:] us,
                    double[:] phi_bar, double[:] f, double[:] um_bar,
                    double[:] um_bar_eq21, double[:] us_bar):
    cdef Py_ssize_t T = phi_idx.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double pb = 0.0, umb = 0.0, ume = 0.0, usb = 0.0
    cdef double phi, ft, q, p, d, u_m, u_s, clair
    with nogil:
        for t in range(T):
            i = phi_idx[t]
            j = rep_idx[t]
            phi = support[i]
            pb = pb + (support[j] - pb) / (t + 1)
            ft = mean_phi - pb
            if ft < 0.0:
                ft = 0.0
            q = qstar[j] + pi * ft
            p = _best_response(phi, q, alpha, cm, &d)
            u_m = d * (p - q - cm)
            u_s = d * (q - cs)
            clair = h[i, j] - pi * ft
            if clair < 0.0:
                clair = 0.0
            clair = clair * clair
            umb = umb + (u_m - umb) / (t + 1)
            ume = ume + (clair - ume) / (t + 1)
            usb = usb + (u_s - usb) / (t + 1)
            Q[t] = q
            P[t] = p
            D[t] = d
            um[t] = u_m
            us[t] = u_s
            phi_bar[t] = pb
            f[t] = ft
            um_bar[t] = umb
            um_bar_eq21[t] = ume
            us_bar[t] = usb


def policy_two_loop(const long long[:] phi_idx, const long long[:] rep_idx,
                    const double[:] noise, const double[:] support, const double[:] qstar,
                    const double[:] target, double alpha, double cs, double cm, double pi,
                    double mean_phi, double[:] Q, double[:] P, double[:] D, double[:] um,
                    double[:] us, double[:] phi_bar, double[:] f, double[:] um_bar,
                    double[:] us_bar, double[:, :] d_bar, long long[:] counts):
    cdef Py_ssize_t T = phi_idx.shape[0]
    cdef Py_ssize_t L = support.shape[0]
    cdef Py_ssize_t t, i, j, k
    cdef double pb = 0.0, umb = 0.0, usb = 0.0
    cdef double phi, ft, q, p, base, d, u_m, u_s
    cdef array.array work = array.array("d", [target[k] for k in range(L)])
    cdef double[::1] dbar = work
    with nogil:
        for t in range(T):
            i = phi_idx[t]
            j = rep_idx[t]
            phi = support[i]
            pb = pb + (support[j] - pb) / (t + 1)
            ft = mean_phi - pb
            if ft < 0.0:
                ft = 0.0
            q = qstar[j] + 2.0 * pi * (dbar[j] - target[j])
            p = _best_response(phi, q, alpha, cm, &base)
            if base > 0.0:
                d = base + noise[t]
                if d < 0.0:
                    d = 0.0
            else:
                d = 0.0
            u_m = d * (p - q - cm)
            u_s = d * (q - cs)
            counts[j] += 1
            dbar[j] = dbar[j] + (d - dbar[j]) / counts[j]
            umb = umb + (u_m - umb) / (t + 1)
            usb = usb + (u_s - usb) / (t + 1)
            Q[t] = q
            P[t] = p
            D[t] = d
            um[t] = u_m
            us[t] = u_s
            phi_bar[t] = pb
            f[t] = ft
            um_bar[t] = umb
            us_bar[t] = usb
            for k in range(L):
                d_bar[t, k] = dbar[k]
