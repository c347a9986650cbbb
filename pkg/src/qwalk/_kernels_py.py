"""Numpy implementation of the step loop (fallback when the extension is absent).

Complex products are written out on real and imaginary parts: numpy's own
complex multiply may use fused multiply-add depending on the CPU, which would
make results machine-dependent.
"""

import numpy as np

NAME = "numpy"


def _mul(ar, ai, br, bi):
    return ar * br - ai * bi, ar * bi + ai * br


def _combine(c1, c2, ar, ai, br, bi):
    # c1*a + c2*b, grouped as the compiled kernel does
    pr, pi = _mul(c1.real, c1.imag, ar, ai)
    qr, qi = _mul(c2.real, c2.imag, br, bi)
    return pr + qr, pi + qi


def evolve_kernel(u0, v0, coin, eu, ev, steps, record_every, U_out, V_out):
    """Advance ``steps`` steps, writing every ``record_every``-th state into the outputs.

    Returns -1 on success, or the step index ``m`` whose state has amplitude that
    would be shifted out of the window by the next step.
    """
    c11, c12 = complex(coin[0, 0]), complex(coin[0, 1])
    c21, c22 = complex(coin[1, 0]), complex(coin[1, 1])
    ur, ui = np.array(u0.real, dtype=np.float64), np.array(u0.imag, dtype=np.float64)
    vr, vi = np.array(v0.real, dtype=np.float64), np.array(v0.imag, dtype=np.float64)
    eur, eui = eu.real[:-1], eu.imag[:-1]
    evr, evi = ev.real[1:], ev.imag[1:]
    U_out[0] = u0
    V_out[0] = v0
    row = 1
    for m in range(steps):
        lr, li = _combine(c11, c12, ur[0], ui[0], vr[0], vi[0])
        rr, ri = _combine(c21, c22, ur[-1], ui[-1], vr[-1], vi[-1])
        if lr != 0.0 or li != 0.0 or rr != 0.0 or ri != 0.0:
            return m
        unr, uni = np.zeros_like(ur), np.zeros_like(ui)
        vnr, vni = np.zeros_like(vr), np.zeros_like(vi)
        tr, ti = _combine(c11, c12, ur[1:], ui[1:], vr[1:], vi[1:])
        unr[:-1], uni[:-1] = _mul(tr, ti, eur, eui)
        tr, ti = _combine(c21, c22, ur[:-1], ui[:-1], vr[:-1], vi[:-1])
        vnr[1:], vni[1:] = _mul(tr, ti, evr, evi)
        ur, ui, vr, vi = unr, uni, vnr, vni
        if (m + 1) % record_every == 0:
            U_out[row].real = ur
            U_out[row].imag = ui
            V_out[row].real = vr
            V_out[row].imag = vi
            row += 1
    return -1
