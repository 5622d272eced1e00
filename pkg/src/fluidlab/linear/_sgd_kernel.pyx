# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled SGD epoch kernel; see _sgd_py.run_epoch for the reference."""

from libc.math cimport exp


cdef inline double _dloss(int loss_id, double p, double y) nogil:
    cdef double z = p * y
    if loss_id == 0:  # log loss
        if z > 18.0:
            return -y * exp(-z)
        if z < -18.0:
            return -y
        return -y / (exp(z) + 1.0)
    # modified huber
    if z >= 1.0:
        return 0.0
    if z >= -1.0:
        return 2.0 * (z - 1.0) * y
    return -4.0 * y


def run_epoch(double[:, ::1] X, double[::1] y, double[::1] s,
              double[::1] w, double b, double u, double[::1] q,
              Py_ssize_t[::1] order, double alpha, double t0,
              long t, int loss_id, int penalty_id):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t k, i, j
    cdef double p, g, eta, c, shrink, wl, wt

    with nogil:
        for k in range(n):
            i = order[k]
            eta = 1.0 / (alpha * (t0 + t))
            p = b
            for j in range(d):
                p += w[j] * X[i, j]
            g = _dloss(loss_id, p, y[i])
            c = eta * s[i] * g
            if penalty_id == 0:  # L2: shrink then step
                shrink = 1.0 - eta * alpha
                for j in range(d):
                    w[j] = w[j] * shrink - c * X[i, j]
            else:  # L1: step, then truncate at the zero crossing
                u += eta * alpha
                for j in range(d):
                    wl = w[j] - c * X[i, j]
                    wt = wl
                    if wl > 0.0:
                        wt = wl - (u + q[j])
                        if wt < 0.0:
                            wt = 0.0
                    elif wl < 0.0:
                        wt = wl + (u - q[j])
                        if wt > 0.0:
                            wt = 0.0
                    q[j] += wt - wl
                    w[j] = wt
            b -= c
            t += 1
    return b, u, t
