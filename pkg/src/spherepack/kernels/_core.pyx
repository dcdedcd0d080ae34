# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see ``_fallback`` for the contract."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, fmax, isinf

cnp.import_array()


def convolve_merge(values, pmass, qmass, step_values, step_p, step_q, double rtol=1e-12):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] pa = np.ascontiguousarray(pmass, dtype=np.float64)
    cdef const double[::1] qa = np.ascontiguousarray(qmass, dtype=np.float64)
    cdef const double[::1] u = np.ascontiguousarray(step_values, dtype=np.float64)
    cdef const double[::1] pu = np.ascontiguousarray(step_p, dtype=np.float64)
    cdef const double[::1] qu = np.ascontiguousarray(step_q, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t m = u.shape[0]
    cdef Py_ssize_t total = n * m

    out_v_arr = np.empty(total, dtype=np.float64)
    out_a_arr = np.empty(total, dtype=np.float64)
    out_b_arr = np.empty(total, dtype=np.float64)
    cdef double[::1] out_v = out_v_arr
    cdef double[::1] out_a = out_a_arr
    cdef double[::1] out_b = out_b_arr

    ptr_arr = np.zeros(m, dtype=np.intp)
    cdef Py_ssize_t[::1] ptr = ptr_arr
    cdef Py_ssize_t k, best_k, i, count = 0
    cdef double val, best_val, a, b, prev = 0.0
    cdef bint have_best, have_prev = False

    # m-way merge of the sorted shifted copies, lowest k first on ties
    while True:
        have_best = False
        best_k = -1
        best_val = 0.0
        for k in range(m):
            # skip zero-mass atoms so they never reach the output
            while ptr[k] < n and pu[k] * pa[ptr[k]] <= 0.0 and qu[k] * qa[ptr[k]] <= 0.0:
                ptr[k] += 1
            if ptr[k] < n:
                val = v[ptr[k]] + u[k]
                if not have_best or val < best_val:
                    best_val = val
                    best_k = k
                    have_best = True
        if not have_best:
            break
        i = ptr[best_k]
        a = pu[best_k] * pa[i]
        b = qu[best_k] * qa[i]
        ptr[best_k] += 1
        if have_prev and (best_val == prev or
                          (not isinf(prev) and best_val - prev <= rtol * fmax(1.0, fabs(prev)))):
            out_a[count - 1] += a
            out_b[count - 1] += b
        else:
            out_v[count] = best_val
            out_a[count] = a
            out_b[count] = b
            count += 1
        prev = best_val
        have_prev = True
    return out_v_arr[:count].copy(), out_a_arr[:count].copy(), out_b_arr[:count].copy()


def tilted_moments(logp, logq, ts):
    cdef const double[::1] lp = np.ascontiguousarray(logp, dtype=np.float64)
    cdef const double[::1] lq = np.ascontiguousarray(logq, dtype=np.float64)
    ts_arr = np.ascontiguousarray(np.atleast_1d(ts), dtype=np.float64)
    cdef const double[::1] tt = ts_arr
    cdef Py_ssize_t na = lp.shape[0]
    cdef Py_ssize_t nt = tt.shape[0]
    lam_arr = np.empty(nt)
    mean_arr = np.empty(nt)
    var_arr = np.empty(nt)
    third_arr = np.empty(nt)
    cdef double[::1] lam = lam_arr
    cdef double[::1] mean = mean_arr
    cdef double[::1] var = var_arr
    cdef double[::1] third = third_arr
    w_arr = np.empty(na)
    cdef double[::1] w = w_arr
    cdef Py_ssize_t j, i
    cdef double t, mx, lw, s, mu, dev, v2, v3, z
    for j in range(nt):
        t = tt[j]
        mx = -1e308
        for i in range(na):
            lw = lp[i] + t * (lq[i] - lp[i])
            w[i] = lw
            if lw > mx:
                mx = lw
        s = 0.0
        for i in range(na):
            w[i] = exp(w[i] - mx)
            s += w[i]
        mu = 0.0
        for i in range(na):
            w[i] /= s
            mu += w[i] * (lq[i] - lp[i])
        v2 = 0.0
        v3 = 0.0
        for i in range(na):
            dev = (lq[i] - lp[i]) - mu
            v2 += w[i] * dev * dev
            v3 += w[i] * fabs(dev) * dev * dev
        lam[j] = mx + log(s)
        mean[j] = mu
        var[j] = v2
        third[j] = v3
    return lam_arr, mean_arr, var_arr, third_arr
