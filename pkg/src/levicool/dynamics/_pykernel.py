"""Pure-numpy ensemble stepper, the fallback for the compiled kernel.

Vectorized over trajectories; the step loop runs in Python.  The
arithmetic mirrors ``_kernel.pyx`` expression by expression so both
backends produce the same numbers.
"""

import numpy as np

VEL_NONE, VEL_OMEGA, VEL_FINITE_DIFF = 0, 1, 2
SCHEME_GAUSS4, SCHEME_RK4 = 0, 1
COUPLING_SHARED, COUPLING_INDEPENDENT = 0, 1


def advance(q, v, xprev, esum, status, fail_step, noise, dt,
            omega2, kick, gain, dq, dv, vel_mode, scheme, delta_limit, step0, coupling=COUPLING_SHARED):
    n = q.shape[1]
    S, d = noise.shape[1], noise.shape[2]
    measuring = d > n
    rows = np.flatnonzero(status == 0)
    if rows.size == 0:
        return
    hh = dt * dt
    half = 0.5 * dt
    h6 = dt / 6.0
    dd = half * half
    fed = [i for i in range(n) if gain[i] != 0.0]

    qa = q[rows]
    va = v[rows]
    xp = xprev[rows]
    es = esum[rows]
    nz = noise[rows]
    live = np.ones(rows.size, dtype=bool)
    shared = coupling == COUPLING_SHARED

    for s in range(S):
        delta = np.zeros(rows.size)
        dtrue = np.zeros(rows.size)
        bad = np.zeros(rows.size, dtype=bool)
        dm = {}
        for i in fed:
            qi = qa[:, i]
            vi = va[:, i]
            if shared:
                dtrue = dtrue + gain[i] * qi * vi
            else:
                bad |= np.abs(gain[i] * qi * vi) >= delta_limit
            if measuring:
                qm = qi + nz[:, s, n + i] * dq[i]
                if vel_mode == VEL_OMEGA:
                    vm = vi + nz[:, s, 2 * n + i] * dv[i]
                elif vel_mode == VEL_FINITE_DIFF:
                    vm = (qm - xp[:, i]) / dt
                    xp[:, i] = np.where(live, qm, xp[:, i])
                else:
                    vm = vi
            else:
                qm = qi
                vm = vi
            dm[i] = gain[i] * qm * vm
            delta = delta + dm[i]
        if shared:
            bad |= np.abs(dtrue) >= delta_limit
        bad &= live
        if bad.any():
            status[rows[bad]] = 1
            fail_step[rows[bad]] = step0 + s
            live &= ~bad
            if not live.any():
                break
        for i in range(n):
            qi = qa[:, i]
            vi = va[:, i]
            if shared:
                kk = omega2[i] * (1.0 + delta)
            else:
                kk = omega2[i] * (1.0 + dm.get(i, 0.0))
            if scheme == SCHEME_GAUSS4:
                c = 1.0 - hh * kk / 12.0
                den = c * c + dd * kk
                a = (c * c - dd * kk) / den
                b = 2.0 * c * half / den
                qn = a * qi + b * vi
                vn = a * vi - b * kk * qi
            else:
                k1q = vi
                k1v = -kk * qi
                k2q = vi + half * k1v
                k2v = -kk * (qi + half * k1q)
                k3q = vi + half * k2v
                k3v = -kk * (qi + half * k2q)
                k4q = vi + dt * k3v
                k4v = -kk * (qi + dt * k3q)
                qn = qi + h6 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
                vn = vi + h6 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            vn = vn + nz[:, s, i] * kick[i]
            e = vn * vn + omega2[i] * qn * qn
            if live.all():
                qa[:, i] = qn
                va[:, i] = vn
                es[:, i] = es[:, i] + e
            else:
                qa[:, i] = np.where(live, qn, qi)
                va[:, i] = np.where(live, vn, vi)
                es[:, i] = np.where(live, es[:, i] + e, es[:, i])

    finite = np.isfinite(qa).all(axis=1) & np.isfinite(va).all(axis=1)
    nonfinite = live & ~finite
    status[rows[nonfinite]] = 2
    fail_step[rows[nonfinite]] = step0 + S
    q[rows] = qa
    v[rows] = va
    xprev[rows] = xp
    esum[rows] = es
