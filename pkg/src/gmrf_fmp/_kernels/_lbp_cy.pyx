# cython: language_level=3
"""Cython implementation of the synchronous message sweep.

Line-for-line parallel to _lbp_py.run_sweep; see that module for the
contract.  Both backends iterate edges in the same ascending order with the
same accumulation order, so results are bit-identical.
"""

import numpy as np

cimport numpy as cnp


def run_sweep(
    cnp.int64_t[::1] in_ptr,
    cnp.int64_t[::1] in_edge,
    cnp.int64_t[::1] esrc,
    cnp.int64_t[::1] erev,
    cnp.float64_t[::1] w,
    cnp.float64_t[::1] diag,
    cnp.float64_t[:, ::1] h,
    cnp.float64_t[::1] dj_prev,
    cnp.float64_t[:, ::1] dh_prev,
    cnp.uint8_t[::1] active,
    cnp.float64_t[::1] dj_next,
    cnp.float64_t[:, ::1] dh_next,
    cnp.float64_t[::1] res_h_out,
):
    cdef Py_ssize_t E = esrc.shape[0]
    cdef Py_ssize_t P = h.shape[0]
    cdef Py_ssize_t e, t, t0, t1, i, p
    cdef cnp.int64_t rev, fe
    cdef double a, b, we, nj, nh, d
    cdef double res_j = 0.0

    for p in range(P):
        res_h_out[p] = 0.0

    for e in range(E):
        i = esrc[e]
        rev = erev[e]
        t0 = in_ptr[i]
        t1 = in_ptr[i + 1]
        a = diag[i]
        for t in range(t0, t1):
            fe = in_edge[t]
            if fe == rev:
                continue
            a = a + dj_prev[fe]
        if a <= 0.0:
            return res_j, e
        we = w[e]
        nj = -we * we / a
        d = nj - dj_prev[e]
        if d < 0.0:
            d = -d
        if d > res_j:
            res_j = d
        dj_next[e] = nj
        for p in range(P):
            if active[p] == 0:
                continue
            b = h[p, i]
            for t in range(t0, t1):
                fe = in_edge[t]
                if fe == rev:
                    continue
                b = b + dh_prev[p, fe]
            nh = -we * b / a
            d = nh - dh_prev[p, e]
            if d < 0.0:
                d = -d
            if d > res_h_out[p]:
                res_h_out[p] = d
            dh_next[p, e] = nh

    return res_j, -1
