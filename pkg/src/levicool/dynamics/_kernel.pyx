# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ensemble stepper.  Must stay operation-for-operation in step with _pykernel.py."""

from libc.math cimport fabs, isfinite

cdef enum:
    VEL_NONE = 0
    VEL_OMEGA = 1
    VEL_FINITE_DIFF = 2
    SCHEME_GAUSS4 = 0
    SCHEME_RK4 = 1
    COUPLING_SHARED = 0
    COUPLING_INDEPENDENT = 1
    MAX_DOF = 16

MAX_DOFS = MAX_DOF


def advance(double[:, ::1] q, double[:, ::1] v, double[:, ::1] xprev,
            double[:, ::1] esum, signed char[::1] status, long long[::1] fail_step,
            const double[:, :, ::1] noise, double dt,
            const double[::1] omega2, const double[::1] kick, const double[::1] gain,
            const double[::1] dq, const double[::1] dv,
            int vel_mode, int scheme, double delta_limit, long long step0, int coupling=COUPLING_SHARED):
    cdef Py_ssize_t K = q.shape[0], n = q.shape[1]
    cdef Py_ssize_t S = noise.shape[1], d = noise.shape[2]
    if n > MAX_DOF:
        raise ValueError("too many degrees of freedom for the compiled kernel")
    cdef bint measuring = d > n
    cdef bint shared = coupling == COUPLING_SHARED
    cdef Py_ssize_t k, s, i
    cdef double hh = dt * dt, half = 0.5 * dt, h6 = dt / 6.0
    cdef double dd = half * half
    cdef double delta, dtrue, qi, vi, qm, vm, kk, c, den, a, b, qn, vn
    cdef double k1q, k1v, k2q, k2v, k3q, k3v, k4q, k4v
    cdef double dm[MAX_DOF]
    cdef bint bad

    with nogil:
        for k in range(K):
            if status[k] != 0:
                continue
            for s in range(S):
                delta = 0.0
                dtrue = 0.0
                bad = False
                for i in range(n):
                    dm[i] = 0.0
                    if gain[i] != 0.0:
                        qi = q[k, i]
                        vi = v[k, i]
                        if shared:
                            dtrue = dtrue + gain[i] * qi * vi
                        elif fabs(gain[i] * qi * vi) >= delta_limit:
                            bad = True
                        if measuring:
                            qm = qi + noise[k, s, n + i] * dq[i]
                            if vel_mode == VEL_OMEGA:
                                vm = vi + noise[k, s, 2 * n + i] * dv[i]
                            elif vel_mode == VEL_FINITE_DIFF:
                                vm = (qm - xprev[k, i]) / dt
                                xprev[k, i] = qm
                            else:
                                vm = vi
                        else:
                            qm = qi
                            vm = vi
                        dm[i] = gain[i] * qm * vm
                        delta = delta + dm[i]
                if shared and fabs(dtrue) >= delta_limit:
                    bad = True
                if bad:
                    status[k] = 1
                    fail_step[k] = step0 + s
                    break
                for i in range(n):
                    qi = q[k, i]
                    vi = v[k, i]
                    if shared:
                        kk = omega2[i] * (1.0 + delta)
                    else:
                        kk = omega2[i] * (1.0 + dm[i])
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
                    vn = vn + noise[k, s, i] * kick[i]
                    q[k, i] = qn
                    v[k, i] = vn
                    esum[k, i] = esum[k, i] + (vn * vn + omega2[i] * qn * qn)
            if status[k] == 0:
                for i in range(n):
                    if not (isfinite(q[k, i]) and isfinite(v[k, i])):
                        status[k] = 2
                        fail_step[k] = step0 + S
                        break
