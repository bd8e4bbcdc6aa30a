# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled interference-accumulation kernel (hot loop of the simulator)."""

from libc.math cimport pow

import numpy as np

cimport numpy as cnp

cnp.import_array()


def grouped_interference(
    double[::1] vx, double[::1] vy,
    cnp.intp_t[::1] v_group, cnp.intp_t[::1] v_cell, cnp.intp_t[::1] v_self,
    double[::1] sx, double[::1] sy,
    double[::1] amp_own, double[::1] amp_other,
    cnp.intp_t[::1] s_cell,
    cnp.intp_t[::1] starts,
    double eta,
):
    """Per-victim sum of amp * d^(-eta) over same-group transmitters.

    Sources must be sorted by group with CSR offsets in ``starts``
    (length n_groups + 1). For each (victim, source) pair the amplitude is
    ``amp_own`` when the source sits in the victim's cell (``s_cell`` equals
    ``v_cell``) and ``amp_other`` otherwise. ``v_self`` is the index of the
    victim's own transmitter in the sorted source arrays (-1 for none); it is
    skipped.
    """
    cdef Py_ssize_t nv = vx.shape[0]
    out_arr = np.zeros(nv, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t v, i, a, b, self_i
    cdef cnp.intp_t cell
    cdef double x, y, dx, dy, d2, acc, amp
    cdef double neg_half_eta = -0.5 * eta
    cdef bint eta4 = eta == 4.0
    for v in range(nv):
        a = starts[v_group[v]]
        b = starts[v_group[v] + 1]
        x = vx[v]
        y = vy[v]
        cell = v_cell[v]
        self_i = v_self[v]
        acc = 0.0
        if eta4:
            for i in range(a, b):
                if i == self_i:
                    continue
                dx = sx[i] - x
                dy = sy[i] - y
                d2 = dx * dx + dy * dy
                amp = amp_own[i] if s_cell[i] == cell else amp_other[i]
                acc += amp / (d2 * d2)
        else:
            for i in range(a, b):
                if i == self_i:
                    continue
                dx = sx[i] - x
                dy = sy[i] - y
                d2 = dx * dx + dy * dy
                amp = amp_own[i] if s_cell[i] == cell else amp_other[i]
                acc += amp * pow(d2, neg_half_eta)
        out[v] = acc
    return out_arr
