"""Pure-NumPy fallback for the interference-accumulation kernel.

Same contract as the compiled version: sources sorted by group, CSR offsets
in ``starts``, per-pair amplitude switched on cell membership, the victim's
own transmitter excluded. The self term is subtracted after the vectorized
group sum, so results can differ from the compiled kernel by ~1 ulp.
"""

import numpy as np


def grouped_interference(vx, vy, v_group, v_cell, v_self,
                         sx, sy, amp_own, amp_other, s_cell, starts, eta):
    out = np.zeros(vx.shape[0])
    if vx.shape[0] == 0:
        return out
    eta4 = eta == 4.0
    for g in np.unique(v_group):
        a, b = starts[g], starts[g + 1]
        vsel = np.nonzero(v_group == g)[0]
        if b == a:
            continue
        dx = sx[a:b][None, :] - vx[vsel][:, None]
        dy = sy[a:b][None, :] - vy[vsel][:, None]
        d2 = dx * dx + dy * dy
        with np.errstate(divide="ignore"):
            w = 1.0 / (d2 * d2) if eta4 else d2 ** (-0.5 * eta)
        amp = np.where(s_cell[a:b][None, :] == v_cell[vsel][:, None],
                       amp_own[a:b][None, :], amp_other[a:b][None, :])
        out[vsel] = (amp * w).sum(axis=1)
    # subtract the self contribution (always within the victim's own group)
    has_self = v_self >= 0
    if np.any(has_self):
        vsel = np.nonzero(has_self)[0]
        i = v_self[vsel]
        dx = sx[i] - vx[vsel]
        dy = sy[i] - vy[vsel]
        d2 = dx * dx + dy * dy
        with np.errstate(divide="ignore"):
            w = 1.0 / (d2 * d2) if eta4 else d2 ** (-0.5 * eta)
        amp = np.where(s_cell[i] == v_cell[vsel], amp_own[i], amp_other[i])
        out[vsel] -= amp * w
    return out
