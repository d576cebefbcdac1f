# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; mirrors pykern.py expression for expression.

Keep the floating-point arithmetic in lockstep with the numpy fallback:
same operand order, same float64 intermediates. The backend-equality
benchmark asserts bit-identical outputs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, fabs, floor

cnp.import_array()


def paint(cnp.int32_t[:, ::1] ids, cnp.float64_t[:, ::1] vals,
          cnp.float64_t[::1] cx, cnp.float64_t[::1] cy,
          cnp.float64_t[::1] radius, cnp.float64_t[::1] pvals):
    cdef Py_ssize_t h = ids.shape[0]
    cdef Py_ssize_t w = ids.shape[1]
    cdef Py_ssize_t n = cx.shape[0]
    cdef Py_ssize_t i, x, y, x0, x1, y0, y1
    cdef double r, cxi, cyi, v, dx, dy
    for i in range(n):
        r = radius[i]
        cxi = cx[i]
        cyi = cy[i]
        v = pvals[i]
        x0 = <Py_ssize_t>ceil(cxi - r)
        x1 = <Py_ssize_t>floor(cxi + r)
        y0 = <Py_ssize_t>ceil(cyi - r)
        y1 = <Py_ssize_t>floor(cyi + r)
        if x0 < 0:
            x0 = 0
        if y0 < 0:
            y0 = 0
        if x1 > w - 1:
            x1 = w - 1
        if y1 > h - 1:
            y1 = h - 1
        for y in range(y0, y1 + 1):
            dy = <double>y - cyi
            for x in range(x0, x1 + 1):
                dx = <double>x - cxi
                if dx * dx + dy * dy < r * r:
                    ids[y, x] = <cnp.int32_t>i
                    vals[y, x] = v


def sweep_pair(cnp.float64_t[:, ::1] v_prev, cnp.float64_t[:, ::1] v_new,
               cnp.float64_t[:, ::1] ref, cnp.int64_t[:, ::1] last_emit,
               long long t_prev_us, long long t_next_us,
               double contrast, long long refractory_us):
    cdef Py_ssize_t h = v_new.shape[0]
    cdef Py_ssize_t w = v_new.shape[1]
    cdef Py_ssize_t x, y, m
    cdef long long total = 0
    cdef double l_new, l_prev, rf, delta, step, denom, lvl, frac
    cdef long long kcount, j, t, last, pol
    cdef long long dt_us = t_next_us - t_prev_us

    for y in range(h):
        for x in range(w):
            if v_new[y, x] != v_prev[y, x]:
                total += <long long>floor(fabs(v_new[y, x] - ref[y, x]) / contrast + 1e-9)

    out_t_arr = np.empty(total, np.int64)
    out_x_arr = np.empty(total, np.int64)
    out_y_arr = np.empty(total, np.int64)
    out_p_arr = np.empty(total, np.int64)
    cdef cnp.int64_t[::1] out_t = out_t_arr
    cdef cnp.int64_t[::1] out_x = out_x_arr
    cdef cnp.int64_t[::1] out_y = out_y_arr
    cdef cnp.int64_t[::1] out_p = out_p_arr

    m = 0
    for y in range(h):
        for x in range(w):
            l_new = v_new[y, x]
            if l_new == v_prev[y, x]:
                continue
            rf = ref[y, x]
            delta = l_new - rf
            kcount = <long long>floor(fabs(delta) / contrast + 1e-9)
            if kcount <= 0:
                continue
            l_prev = v_prev[y, x]
            pol = 1 if delta > 0 else -1
            step = (<double>pol) * contrast
            denom = l_new - l_prev
            last = last_emit[y, x]
            for j in range(1, kcount + 1):
                lvl = rf + step * (<double>j)
                frac = (lvl - l_prev) / denom
                if frac < 0.0:
                    frac = 0.0
                if frac > 1.0:
                    frac = 1.0
                t = t_prev_us + <long long>floor(frac * (<double>dt_us))
                if t < last + 1:
                    t = last + 1
                if last < 0 or t - last >= refractory_us:
                    out_t[m] = t
                    out_x[m] = x
                    out_y[m] = y
                    out_p[m] = pol
                    m += 1
                    last = t
            ref[y, x] = rf + step * (<double>kcount)
            last_emit[y, x] = last

    return out_t_arr[:m], out_x_arr[:m], out_y_arr[:m], out_p_arr[:m]


def dwell_select(cnp.int64_t[::1] ev_t, cnp.int64_t[::1] ev_p, cnp.int64_t[::1] starts,
                 cnp.int64_t[::1] targets, cnp.float64_t[::1] l0_flat,
                 cnp.float64_t[::1] occ_flat, double contrast, double eps,
                 long long quiet_us, long long t_begin_us, long long t_end_us):
    cdef Py_ssize_t n = targets.shape[0]
    levels_arr = np.empty(n, np.float64)
    fallback_arr = np.zeros(n, np.uint8)
    cdef cnp.float64_t[::1] levels = levels_arr
    cdef cnp.uint8_t[::1] fallback = fallback_arr

    cdef Py_ssize_t i, e, off
    cdef long long px, lo, hi, mcount, max_count = 0
    for i in range(n):
        px = targets[i]
        mcount = starts[px + 1] - starts[px]
        if mcount > max_count:
            max_count = mcount
    dwell_arr = np.zeros(2 * max_count + 1, np.int64)
    cdef cnp.int64_t[::1] dwell = dwell_arr

    cdef long long t_prev, kk, best_d, d, k, best_k
    cdef double l0, occ, lvl
    for i in range(n):
        px = targets[i]
        lo = starts[px]
        hi = starts[px + 1]
        mcount = hi - lo
        l0 = l0_flat[px]
        occ = occ_flat[px]
        for off in range(2 * mcount + 1):
            dwell[off] = 0
        t_prev = t_begin_us
        kk = 0
        for e in range(lo, hi):
            dwell[kk + mcount] += ev_t[e] - t_prev
            t_prev = ev_t[e]
            kk += ev_p[e]
        dwell[kk + mcount] += t_end_us - t_prev

        best_d = -1
        best_k = 0
        for off in range(2 * mcount + 1):
            d = dwell[off]
            if d < quiet_us or d <= best_d:
                continue
            k = off - mcount
            lvl = l0 + contrast * (<double>k)
            if fabs(lvl - occ) <= eps:
                continue
            best_d = d
            best_k = k
        if best_d < 0:
            levels[i] = l0 + contrast * (<double>kk)
            fallback[i] = 1
        else:
            levels[i] = l0 + contrast * (<double>best_k)

    return levels_arr, fallback_arr.view(np.bool_)
