"""Compiled right-hand side for the Van der Pol leader.

Mirrors :meth:`synclab.sim.CoupledSystem.evaluate` term by term; the numpy
path stays the reference and the two are cross-checked in the tests.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def vdp_closed_loop_rhs(x, n, H, rho_coef, rho_offset, mu, omega, arms_on, E, K, gamma, alpha, theta, g):
    out = np.empty_like(x)
    ov, ow, ok = 2, 2 + 2 * n, 2 + 5 * n
    oq, oqd, oth = 2 + 6 * n, 2 + 8 * n, 2 + 10 * n
    v1 = x[0]
    v2 = x[1]
    out[0] = omega[0] * v2
    out[1] = -omega[1] * v1 + omega[2] * (1.0 - v1 * v1) * v2
    ncoef = rho_coef.shape[1]
    for i in range(n):
        z0 = 0.0
        z1 = 0.0
        for j in range(n):
            h = H[i, j]
            if h != 0.0:
                z0 += h * (v1 - x[ov + 2 * j])
                z1 += h * (v2 - x[ov + 2 * j + 1])
        nz = np.sqrt(z0 * z0 + z1 * z1)
        acc = rho_coef[i, ncoef - 1]
        for k in range(ncoef - 2, -1, -1):
            acc = acc * nz + rho_coef[i, k]
        rho = acc + rho_offset[i]

        a1 = x[ov + 2 * i]
        a2 = x[ov + 2 * i + 1]
        w0 = x[ow + 3 * i]
        w1 = x[ow + 3 * i + 1]
        w2 = x[ow + 3 * i + 2]
        kap = x[ok + i]
        damp = 1.0 - a1 * a1
        p0 = w0 * a2
        p1 = -w1 * a1 + w2 * damp * a2
        gain = kap * rho
        vd0 = p0 + gain * z0
        vd1 = p1 + gain * z1
        wd0 = mu * a2 * z0
        wd1 = -mu * a1 * z1
        wd2 = mu * damp * a2 * z1
        out[ov + 2 * i] = vd0
        out[ov + 2 * i + 1] = vd1
        out[ow + 3 * i] = wd0
        out[ow + 3 * i + 1] = wd1
        out[ow + 3 * i + 2] = wd2
        out[ok + i] = rho * nz * nz

        if arms_on:
            q1 = x[oq + 2 * i]
            q2 = x[oq + 2 * i + 1]
            qd1 = x[oqd + 2 * i]
            qd2 = x[oqd + 2 * i + 1]
            # phi(v_hat) omega_hat_dot + (d/dt phi) omega_hat
            r0 = a2 * wd0 + vd1 * w0
            r1 = -a1 * wd1 + damp * a2 * wd2 - vd0 * w1 + (-2.0 * a1 * vd0 * a2 + damp * vd1) * w2
            ev0 = E[0, 0] * a1 + E[0, 1] * a2
            ev1 = E[1, 0] * a1 + E[1, 1] * a2
            evd0 = E[0, 0] * vd0 + E[0, 1] * vd1
            evd1 = E[1, 0] * vd0 + E[1, 1] * vd1
            qh_d0 = E[0, 0] * p0 + E[0, 1] * p1 - alpha * (q1 - ev0)
            qh_d1 = E[1, 0] * p0 + E[1, 1] * p1 - alpha * (q2 - ev1)
            qh_dd0 = E[0, 0] * r0 + E[0, 1] * r1 - alpha * (qd1 - evd0)
            qh_dd1 = E[1, 0] * r0 + E[1, 1] * r1 - alpha * (qd2 - evd1)
            s0 = qd1 - qh_d0
            s1 = qd2 - qh_d1

            c2 = np.cos(q2)
            s2 = np.sin(q2)
            gc1 = g * np.cos(q1)
            gc12 = g * np.cos(q1 + q2)
            sa = qh_dd0 + qh_dd1
            y00 = qh_dd0
            y01 = sa
            y02 = c2 * (2.0 * qh_dd0 + qh_dd1) - s2 * (qd2 * qh_d0 + (qd1 + qd2) * qh_d1)
            y03 = gc1
            y04 = gc12
            y11 = sa
            y12 = c2 * qh_dd0 + s2 * qd1 * qh_d0
            y14 = gc12
            th = x[oth + 5 * i: oth + 5 * i + 5]
            tau0 = -(K[0, 0] * s0 + K[0, 1] * s1) + y00 * th[0] + y01 * th[1] + y02 * th[2] + y03 * th[3] + y04 * th[4]
            tau1 = -(K[1, 0] * s0 + K[1, 1] * s1) + y11 * th[1] + y12 * th[2] + y14 * th[4]
            out[oth + 5 * i] = -gamma[0] * (y00 * s0)
            out[oth + 5 * i + 1] = -gamma[1] * (y01 * s0 + y11 * s1)
            out[oth + 5 * i + 2] = -gamma[2] * (y02 * s0 + y12 * s1)
            out[oth + 5 * i + 3] = -gamma[3] * (y03 * s0)
            out[oth + 5 * i + 4] = -gamma[4] * (y04 * s0 + y14 * s1)

            t1 = theta[i, 0]
            t2 = theta[i, 1]
            t3 = theta[i, 2]
            t4 = theta[i, 3]
            t5 = theta[i, 4]
            hs = t3 * s2
            m11 = t1 + t2 + 2.0 * t3 * c2
            m12 = t2 + t3 * c2
            det = m11 * t2 - m12 * m12
            b0 = tau0 + hs * qd2 * qd1 + hs * (qd1 + qd2) * qd2 - t4 * gc1 - t5 * gc12
            b1 = tau1 - hs * qd1 * qd1 - t5 * gc12
            out[oq + 2 * i] = qd1
            out[oq + 2 * i + 1] = qd2
            out[oqd + 2 * i] = (t2 * b0 - m12 * b1) / det
            out[oqd + 2 * i + 1] = (m11 * b1 - m12 * b0) / det
    return out
