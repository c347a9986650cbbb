"""Compiled step loop for the two-component walk.

Arithmetic is spelled out on interleaved (re, im) doubles in the same order
numpy uses for complex multiply/add, so both backends agree bit-for-bit when
the compiler does not fuse multiply-adds.
"""

import numpy as np

NAME = "cython"


cdef inline void _mul(double ar, double ai, double br, double bi,
                      double* outr, double* outi) noexcept nogil:
    outr[0] = ar * br - ai * bi
    outi[0] = ar * bi + ai * br


cdef int _run(double[::1] u, double[::1] v, double[::1] un, double[::1] vn,
              const double[::1] c, const double[::1] eu, const double[::1] ev,
              int steps, int record_every,
              double[:, ::1] U_out, double[:, ::1] V_out) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0] // 2
    cdef Py_ssize_t j, k, last = 2 * (n - 1)
    cdef int m, row = 1
    cdef double ar, ai, br, bi, tr, ti
    cdef double[::1] tmp

    for m in range(steps):
        _mul(c[0], c[1], u[0], u[1], &ar, &ai)
        _mul(c[2], c[3], v[0], v[1], &br, &bi)
        if ar + br != 0.0 or ai + bi != 0.0:
            return m
        _mul(c[4], c[5], u[last], u[last + 1], &ar, &ai)
        _mul(c[6], c[7], v[last], v[last + 1], &br, &bi)
        if ar + br != 0.0 or ai + bi != 0.0:
            return m

        for j in range(n - 1):
            # upper component moves left: reads site j+1
            k = 2 * (j + 1)
            _mul(c[0], c[1], u[k], u[k + 1], &ar, &ai)
            _mul(c[2], c[3], v[k], v[k + 1], &br, &bi)
            tr = ar + br
            ti = ai + bi
            _mul(tr, ti, eu[2 * j], eu[2 * j + 1], &un[2 * j], &un[2 * j + 1])
            # lower component moves right: site j+1 reads site j
            k = 2 * j
            _mul(c[4], c[5], u[k], u[k + 1], &ar, &ai)
            _mul(c[6], c[7], v[k], v[k + 1], &br, &bi)
            tr = ar + br
            ti = ai + bi
            _mul(tr, ti, ev[k + 2], ev[k + 3], &vn[k + 2], &vn[k + 3])
        un[last] = 0.0
        un[last + 1] = 0.0
        vn[0] = 0.0
        vn[1] = 0.0

        tmp = u
        u = un
        un = tmp
        tmp = v
        v = vn
        vn = tmp

        if (m + 1) % record_every == 0:
            U_out[row, :] = u
            V_out[row, :] = v
            row += 1
    return -1


def evolve_kernel(u0, v0, coin, eu, ev, int steps, int record_every, U_out, V_out):
    """Advance ``steps`` steps, writing every ``record_every``-th state into the outputs.

    Returns -1 on success, or the step index ``m`` whose state has amplitude that
    would be shifted out of the window by the next step.
    """
    u = np.array(u0, dtype=np.complex128).view(np.float64)
    v = np.array(v0, dtype=np.complex128).view(np.float64)
    un = np.zeros_like(u)
    vn = np.zeros_like(v)
    c = np.ascontiguousarray(coin, dtype=np.complex128).reshape(4).view(np.float64)
    eu_f = np.ascontiguousarray(eu, dtype=np.complex128).view(np.float64)
    ev_f = np.ascontiguousarray(ev, dtype=np.complex128).view(np.float64)
    U_f = U_out.view(np.float64)
    V_f = V_out.view(np.float64)
    U_f[0, :] = u
    V_f[0, :] = v
    cdef int status
    cdef double[::1] u_mv = u, v_mv = v, un_mv = un, vn_mv = vn
    cdef const double[::1] c_mv = c, eu_mv = eu_f, ev_mv = ev_f
    cdef double[:, ::1] U_mv = U_f, V_mv = V_f
    with nogil:
        status = _run(u_mv, v_mv, un_mv, vn_mv, c_mv, eu_mv, ev_mv,
                      steps, record_every, U_mv, V_mv)
    return status
