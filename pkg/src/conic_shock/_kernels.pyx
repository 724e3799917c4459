# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Mirrors ``_fallback.py`` one to one."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs, sqrt, floor, isfinite, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    STATUS_OK = 0
    STATUS_CROSSED = 1
    STATUS_DEGENERATE = 2
    STATUS_STIFF = 3


cdef inline double _rhs(double s, double rho, double uz, double g, double A, double gamma,
                        double* drho, double* duz, double* dg) nogil:
    cdef double c2 = A * gamma * pow(rho, gamma - 1.0)
    cdef double ur = s * uz - g
    cdef double D = (1.0 + s * s) * c2 - g * g
    cdef double k
    if D <= 0.0:
        drho[0] = 0.0
        duz[0] = 0.0
        dg[0] = 0.0
        return D
    k = c2 * ur / D
    drho[0] = -rho * ur * g / (s * D)
    duz[0] = k
    dg[0] = uz + (1.0 + s * s) * k / s
    return D


cdef inline double _step(double base, double s, double h, double* y, double A, double gamma) nogil:
    cdef double k1r, k1u, k1g, k2r, k2u, k2g, k3r, k3u, k3g, k4r, k4u, k4g
    cdef double d1, d2, d3, d4, hh = 0.5 * h, h6 = h / 6.0
    cdef double r2, r3, r4
    d1 = _rhs(base + s, y[0], y[1], y[2], A, gamma, &k1r, &k1u, &k1g)
    if d1 <= 0.0:
        return d1
    r2 = y[0] + hh * k1r
    if r2 <= 0.0:
        return -1.0
    d2 = _rhs(base + (s + hh), r2, y[1] + hh * k1u, y[2] + hh * k1g, A, gamma, &k2r, &k2u, &k2g)
    if d2 <= 0.0:
        return d2
    r3 = y[0] + hh * k2r
    if r3 <= 0.0:
        return -1.0
    d3 = _rhs(base + (s + hh), r3, y[1] + hh * k2u, y[2] + hh * k2g, A, gamma, &k3r, &k3u, &k3g)
    if d3 <= 0.0:
        return d3
    r4 = y[0] + h * k3r
    if r4 <= 0.0:
        return -1.0
    d4 = _rhs(base + (s + h), r4, y[1] + h * k3u, y[2] + h * k3g, A, gamma, &k4r, &k4u, &k4g)
    if d4 <= 0.0:
        return d4
    y[0] = y[0] + h6 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    y[1] = y[1] + h6 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    y[2] = y[2] + h6 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
    return min(min(d1, d2), min(d3, d4))


def conical_rhs(double s, double rho, double uz, double g, double A, double gamma):
    cdef double a, b, c, D
    D = _rhs(s, rho, uz, g, A, gamma, &a, &b, &c)
    return a, b, c, D


def rk4_step(double s, double h, double rho, double uz, double g, double A, double gamma):
    cdef double y[3]
    cdef double d
    y[0] = rho
    y[1] = uz
    y[2] = g
    d = _step(s, 0.0, h, y, A, gamma)
    return y[0], y[1], y[2], d


def rk4_conical(s_nodes, y0, double A, double gamma, bint stop_on_cross=False,
                double dfloor=1e-3, int max_halvings=8, double base=0.0):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sn = np.ascontiguousarray(s_nodes, dtype=np.float64)
    cdef Py_ssize_t n = sn.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, 3))
    cdef double y[3]
    cdef double t[3]
    cdef double a, b, c, D0, floor, s, H, h, dmin, dm, ss
    cdef Py_ssize_t k
    cdef long nsub, j, nmax = 1 << max_halvings
    y[0] = float(y0[0])
    y[1] = float(y0[1])
    y[2] = float(y0[2])
    out[0, 0] = y[0]
    out[0, 1] = y[1]
    out[0, 2] = y[2]
    D0 = _rhs(base + sn[0], y[0], y[1], y[2], A, gamma, &a, &b, &c)
    if D0 <= 0.0:
        return out, 1, STATUS_DEGENERATE
    floor = dfloor * D0
    with nogil:
        for k in range(n - 1):
            s = sn[k]
            H = sn[k + 1] - s
            nsub = 1
            while True:
                h = H / nsub
                if nsub > 1 and fabs(h) <= 4e-16 * (fabs(s) + fabs(H)):
                    with gil:
                        return out, k + 1, STATUS_STIFF
                t[0] = y[0]
                t[1] = y[1]
                t[2] = y[2]
                ss = s
                dmin = INFINITY
                for j in range(nsub):
                    dm = _step(base, ss, h, t, A, gamma)
                    if dm < dmin:
                        dmin = dm
                    if dm <= 0.0:
                        break
                    ss = s + (j + 1) * h
                if dmin >= floor or (dmin > 0.0 and nsub >= nmax):
                    break
                if nsub >= nmax:
                    with gil:
                        return out, k + 1, STATUS_DEGENERATE
                nsub *= 2
            y[0] = t[0]
            y[1] = t[1]
            y[2] = t[2]
            out[k + 1, 0] = y[0]
            out[k + 1, 1] = y[1]
            out[k + 1, 2] = y[2]
            if stop_on_cross and y[2] < 0.0:
                with gil:
                    return out, k + 2, STATUS_CROSSED
    return out, n, STATUS_OK


# ---------------------------------------------------------------- march

cdef enum:
    MARCH_OK = 0
    MARCH_BLOWUP = 1
    MARCH_HYPERBOLICITY = 2
    MARCH_ENTROPY = 3
    MARCH_EXTENSION = 4
    MARCH_NEWTON = 5

cdef enum:
    T_RHO = 0
    T_UR = 1
    T_UZ = 2
    T_C2 = 3
    T_P1 = 4
    T_P2 = 5
    T_P3 = 6
    T_P4 = 7
    T_P5 = 8
    T_DUR = 9
    T_DUZ = 10
    N_TAB = 11

cdef double GT0 = 0.5 - 0.5 * sqrt(0.6)
cdef double GT2 = 0.5 + 0.5 * sqrt(0.6)
cdef double GW0 = 5.0 / 18.0
cdef double GW1 = 8.0 / 18.0


cdef struct Par:
    double b0, delta, s0, gamma, A, q0, rho0, C0, cfl, diss, mu, hx, G0, F0, xmax, dsig, dth
    int nth, ns, linear, ntab, fixed
    double* tab


cdef struct Fields:
    double* W
    double* V
    double* P
    double* PHI
    double* XI
    double* DCHI


cdef inline void _interp(Par* c, double x, double* out) noexcept nogil:
    cdef double u = x / c.hx
    cdef long k = <long>floor(u)
    cdef double t
    cdef int q
    if k < 0:
        k = 0
    if k > c.ntab - 2:
        k = c.ntab - 2
    t = u - k
    for q in range(N_TAB):
        out[q] = c.tab[q * c.ntab + k] * (1.0 - t) + c.tab[q * c.ntab + k + 1] * t


cdef inline double _interp1(Par* c, int col, double x) noexcept nogil:
    cdef double u = x / c.hx
    cdef long k = <long>floor(u)
    cdef double t
    if k < 0:
        k = 0
    if k > c.ntab - 2:
        k = c.ntab - 2
    t = u - k
    return c.tab[col * c.ntab + k] * (1.0 - t) + c.tab[col * c.ntab + k + 1] * t


cdef inline void _fvals(double gamma, double uz, double ur, double c2, double duz, double dur, double s,
                        double w, double v, double pr, double* f) noexcept nogil:
    cdef double gm = 0.5 * (gamma - 1.0), gp = 0.5 * (gamma + 1.0)
    cdef double dl = uz * uz - c2
    cdef double K = (2.0 * uz + w) * w + (2.0 * ur + v) * v + pr * pr
    f[0] = (-2.0 * uz * w - w * w - gm * K) / dl
    f[1] = (-2.0 * uz * v - 2.0 * ur * w - 2.0 * w * v) / dl
    f[2] = (-2.0 * ur * v - v * v - gm * K) / dl
    f[3] = -(pr * pr + gm * K) / dl
    f[4] = -2.0 / dl * (uz * pr + w * pr)
    f[5] = -2.0 / dl * (ur * pr + v * pr)
    f[6] = (
        s * s * duz * (gp * w * w + gm * v * v + gm * pr * pr)
        - s * dur * (gm * w * w + gp * v * v + gm * pr * pr)
        - 2.0 * s * duz * w * v
        - ur * (gm * w * w + gm * v * v + 0.5 * (gamma - 3.0) * pr * pr)
        + v * (pr * pr - gm * K)
    ) / dl


cdef inline double _speeds(Par* c, double* bgc, double s, double w, double v, double pr,
                           double* l1, double* l2, double* f) noexcept nogil:
    """Fill l1 < l2 and f[0..6]; returns the discriminant."""
    cdef double A, B, disc, root
    cdef int q
    if c.linear:
        for q in range(7):
            f[q] = 0.0
        A = 2.0 * bgc[T_P1]
        B = bgc[T_P2]
    else:
        _fvals(c.gamma, bgc[T_UZ], bgc[T_UR], bgc[T_C2], bgc[T_DUZ], bgc[T_DUR], s, w, v, pr, f)
        A = (2.0 * bgc[T_P1] - f[1]) / (1.0 - f[0])
        B = (bgc[T_P2] - f[2]) / (1.0 - f[0])
    disc = 0.25 * A * A - B
    root = sqrt(disc) if disc > 0.0 else 0.0
    l1[0] = 0.5 * A - root
    l2[0] = 0.5 * A + root
    return disc


cdef inline double _dsig(double* F, int i, int j, int ns, int mode, double dsig) noexcept nogil:
    cdef double* row = F + i * ns
    if j == 0:
        return (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * dsig)
    if j == ns - 1:
        return (3.0 * row[j] - 4.0 * row[j - 1] + row[j - 2]) / (2.0 * dsig)
    if mode == 0:
        return (row[j + 1] - row[j]) / dsig
    return (row[j] - row[j - 1]) / dsig


cdef inline double _dsig_c(double* F, int i, int j, int ns, double dsig) noexcept nogil:
    cdef double* row = F + i * ns
    if j == 0:
        return (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * dsig)
    if j == ns - 1:
        return (3.0 * row[j] - 4.0 * row[j - 1] + row[j - 2]) / (2.0 * dsig)
    return (row[j + 1] - row[j - 1]) / (2.0 * dsig)


cdef inline double _dth(double* F, int i, int j, int nth, int ns, double dth) noexcept nogil:
    if nth == 1:
        return 0.0
    return (F[((i + 1) % nth) * ns + j] - F[((i - 1 + nth) % nth) * ns + j]) / (2.0 * dth)


cdef inline double _sig(Par* c, int j) noexcept nogil:
    if j == c.ns - 1:
        return 1.0
    return j * c.dsig


cdef int _mrhs(Par* c, double z, Fields* st, int mode, double* rW, double* rV, double* rP, double* rPHI) noexcept nogil:
    cdef int i, j, ns = c.ns, nth = c.nth, idx
    cdef double L, lth, sig, x, s, r, vg, Lz, ws, vs, ps, wt, vt, pt, w, v, p, pr, one, wphys
    cdef double bgc[N_TAB]
    cdef double f[7]
    cdef int q
    for i in range(nth):
        L = c.delta + st.XI[i]
        lth = _dth(st.XI, i, 0, nth, 1, c.dth) / L
        for j in range(ns):
            idx = i * ns + j
            sig = _sig(c, j)
            x = sig * L
            s = c.b0 + x
            r = z * s
            _interp(c, x, bgc)
            vg = c.b0 + sig * (c.delta + st.DCHI[i])
            Lz = L * z
            ws = _dsig(st.W, i, j, ns, mode, c.dsig)
            vs = _dsig(st.V, i, j, ns, mode, c.dsig)
            ps = _dsig(st.P, i, j, ns, mode, c.dsig)
            wt = _dth(st.W, i, j, nth, ns, c.dth) - sig * lth * ws
            vt = _dth(st.V, i, j, nth, ns, c.dth) - sig * lth * vs
            pt = _dth(st.P, i, j, nth, ns, c.dth) - sig * lth * ps
            w = st.W[idx]
            v = st.V[idx]
            p = st.P[idx]
            pr = p / r
            if c.linear:
                for q in range(7):
                    f[q] = 0.0
            else:
                _fvals(c.gamma, bgc[T_UZ], bgc[T_UR], bgc[T_C2], bgc[T_DUZ], bgc[T_DUR], s, w, v, pr, f)
            one = 1.0 - f[0]
            if not (one > 0.0):
                return MARCH_HYPERBOLICITY
            wphys = (
                -(2.0 * bgc[T_P1] - f[1]) * ws / Lz - (bgc[T_P2] - f[2]) * vs / Lz + (bgc[T_P3] + f[3]) * pt / (r * r)
                - 2.0 * bgc[T_P4] * w / r - 2.0 * bgc[T_P5] * v / r + f[4] * wt / r + f[5] * vt / r + f[6] / r
            ) / one
            rW[idx] = vg * ws / Lz + wphys
            rV[idx] = vg * vs / Lz + ws / Lz
            rP[idx] = vg * ps / Lz + wt
            rPHI[idx] = w + vg * v
    return MARCH_OK


cdef int _rate(Par* c, double z, Fields* st, double* out) noexcept nogil:
    cdef int i, j, ns = c.ns, nth = c.nth, idx
    cdef double L, sig, x, s, r, vg, Lz, l1, l2, disc, rt, th, best = 0.0
    cdef double bgc[N_TAB]
    cdef double f[7]
    for i in range(nth):
        L = c.delta + st.XI[i]
        for j in range(ns):
            idx = i * ns + j
            sig = _sig(c, j)
            x = sig * L
            s = c.b0 + x
            r = z * s
            _interp(c, x, bgc)
            vg = c.b0 + sig * (c.delta + st.DCHI[i])
            disc = _speeds(c, bgc, s, st.W[idx], st.V[idx], st.P[idx] / r, &l1, &l2, f)
            if not (disc > 0.0):
                return MARCH_HYPERBOLICITY
            Lz = L * z
            rt = fabs(l1 - vg)
            if fabs(l2 - vg) > rt:
                rt = fabs(l2 - vg)
            rt = rt / (Lz * c.dsig)
            if nth > 1:
                if fabs(vg) / (Lz * c.dsig) > rt:
                    rt = fabs(vg) / (Lz * c.dsig)
                th = sqrt(fabs(bgc[T_P3] + f[3]) / (1.0 - f[0])) / (r * c.dth)
                if th > rt:
                    rt = th
            if rt > best:
                best = rt
    out[0] = best
    return MARCH_OK


cdef inline void _rh(Par* c, double* bgs, double w, double v, double p, double chi,
                     double* G, double* rho, double* Pr, double* Pz) noexcept nogil:
    cdef double q2, h
    Pr[0] = bgs[T_UR] + v
    Pz[0] = bgs[T_UZ] + w
    q2 = Pr[0] * Pr[0] + Pz[0] * Pz[0] + p * p / (chi * chi)
    h = c.C0 - 0.5 * q2
    rho[0] = pow((c.gamma - 1.0) * h / (c.A * c.gamma), 1.0 / (c.gamma - 1.0))
    G[0] = (rho[0] * (Pr[0] * Pr[0] + Pz[0] * Pz[0] - c.q0 * Pz[0] + p * p / (chi * chi))
            - c.rho0 * c.q0 * Pz[0] + c.rho0 * c.q0 * c.q0)


cdef inline double _phi_shock(Par* c, double z, double xi) noexcept nogil:
    cdef double m = (GW0 * _interp1(c, T_UR, c.delta + xi * GT0) + GW1 * _interp1(c, T_UR, c.delta + xi * 0.5)
                     + GW0 * _interp1(c, T_UR, c.delta + xi * GT2))
    return -z * xi * m


cdef int _close(Par* c, double z, Fields* st, double* phis) noexcept nogil:
    cdef int i, ns = c.ns, nth = c.nth, it, idx, ok
    cdef double bgc[N_TAB]
    cdef double f[7]
    cdef double r0 = z * c.b0, l1, l2, R, wn, vn, pn, xs, ss, chi, R2, chi_th, pd
    cdef double G, rho, Pr, Pz, F, c2, dq2, drho, dG, step, chiz
    # cone
    _interp(c, 0.0, bgc)
    for i in range(nth):
        idx = i * ns
        _speeds(c, bgc, c.b0, st.W[idx], st.V[idx], st.P[idx] / r0, &l1, &l2, f)
        R = st.W[idx] + l2 * st.V[idx]
        wn = R / (1.0 + l2 * c.b0)
        st.W[idx] = wn
        st.V[idx] = c.b0 * wn
    # shock
    for i in range(nth):
        if st.XI[i] > c.xmax - c.delta or st.XI[i] <= -c.delta:
            return MARCH_EXTENSION
    for i in range(nth):
        phis[i] = _phi_shock(c, z, st.XI[i])
    for i in range(nth):
        idx = i * ns + ns - 1
        xs = c.delta + st.XI[i]
        _interp(c, xs, bgc)
        ss = c.b0 + xs
        chi = z * ss
        _speeds(c, bgc, ss, st.W[idx], st.V[idx], st.P[idx] / chi, &l1, &l2, f)
        R2 = st.W[idx] + l1 * st.V[idx]
        chi_th = z * _dth(st.XI, i, 0, nth, 1, c.dth)
        pd = _dth(phis, i, 0, nth, 1, c.dth)
        vn = st.V[idx]
        ok = 0
        for it in range(40):
            wn = R2 - l1 * vn
            pn = pd - vn * chi_th
            _rh(c, bgc, wn, vn, pn, chi, &G, &rho, &Pr, &Pz)
            F = G - c.G0
            c2 = c.A * c.gamma * pow(rho, c.gamma - 1.0)
            dq2 = 2.0 * Pr - 2.0 * l1 * Pz - 2.0 * pn * chi_th / (chi * chi)
            drho = -0.5 * rho / c2 * dq2
            dG = (drho * (Pr * Pr + Pz * Pz - c.q0 * Pz + pn * pn / (chi * chi))
                  + rho * (2.0 * Pr - l1 * (2.0 * Pz - c.q0) - 2.0 * pn * chi_th / (chi * chi))
                  + c.rho0 * c.q0 * l1)
            step = F / dG
            vn = vn - step
            if fabs(step) <= 1e-13 * (fabs(vn) + fabs(bgc[T_UR])) or fabs(F) <= 1e-14 * c.rho0 * c.q0 * c.q0:
                ok = 1
                break
        if not ok:
            return MARCH_NEWTON
        wn = R2 - l1 * vn
        pn = pd - vn * chi_th
        st.W[idx] = wn
        st.V[idx] = vn
        st.P[idx] = pn
        st.PHI[idx] = phis[i]
        if c.fixed:
            st.DCHI[i] = 0.0
            continue
        _rh(c, bgc, wn, vn, pn, chi, &G, &rho, &Pr, &Pz)
        F = (rho * Pr - rho * pn * chi_th / (chi * chi)) / (rho * Pz - c.rho0 * c.q0)
        st.DCHI[i] = F - c.F0
        _speeds(c, bgc, ss, wn, vn, pn / chi, &l1, &l2, f)
        chiz = c.s0 + st.DCHI[i]
        if not (l1 < chiz and chiz < l2):
            return MARCH_ENTROPY
    return MARCH_OK


cdef void _dissipate(Par* c, double* F) noexcept nogil:
    cdef int i, j, ns = c.ns
    cdef double* row
    cdef double a, b, d4
    if c.diss == 0.0 or ns < 5:
        return
    for i in range(c.nth):
        row = F + i * ns
        # update in place with a lag so every stencil sees old values
        a = row[0]
        b = row[1]
        for j in range(2, ns - 2):
            d4 = a - 4.0 * b + 6.0 * row[j] - 4.0 * row[j + 1] + row[j + 2]
            a = b
            b = row[j]
            row[j] = row[j] - c.diss * d4


cdef void _integrands(Par* c, double z, Fields* st, Fields* old, double dz, double* out) noexcept nogil:
    cdef int i, j, ns = c.ns, nth = c.nth, idx
    cdef double L, lth, sig, r, Lz, wsig, g2, wr, vr, h2, wt, vt, vg, wz, rs, gs
    cdef double e0 = 0.0, e1 = 0.0, se = 0.0, hl = 0.0, hr = 0.0
    for i in range(nth):
        L = c.delta + st.XI[i]
        Lz = L * z
        lth = _dth(st.XI, i, 0, nth, 1, c.dth) / L
        for j in range(ns):
            idx = i * ns + j
            sig = _sig(c, j)
            r = z * (c.b0 + sig * L)
            wsig = 0.5 * c.dsig if (j == 0 or j == ns - 1) else c.dsig
            g2 = st.W[idx] * st.W[idx] + st.V[idx] * st.V[idx] + (st.P[idx] / r) * (st.P[idx] / r)
            e0 += g2 * wsig * Lz
            wr = _dsig_c(st.W, i, j, ns, c.dsig) / Lz
            vr = _dsig_c(st.V, i, j, ns, c.dsig) / Lz
            h2 = wr * wr + vr * vr
            if nth > 1:
                wt = _dth(st.W, i, j, nth, ns, c.dth) - sig * lth * wr * Lz
                vt = _dth(st.V, i, j, nth, ns, c.dth) - sig * lth * vr * Lz
                h2 = h2 + (wt / r) * (wt / r) + (vt / r) * (vt / r)
            if old != NULL:
                vg = c.b0 + sig * (c.delta + st.DCHI[i])
                wz = (st.W[idx] - old.W[idx]) / dz - vg * wr
                h2 = h2 + wz * wz
            e1 += h2 * wsig * Lz
        idx = i * ns + ns - 1
        rs = z * (c.b0 + c.delta + st.XI[i])
        gs = st.W[idx] * st.W[idx] + st.V[idx] * st.V[idx] + (st.P[idx] / rs) * (st.P[idx] / rs)
        se += gs
        hl += st.PHI[idx] * st.PHI[idx]
        hr += st.W[idx] * st.W[idx]
    out[0] = pow(z, c.mu) * e0 * c.dth
    out[1] = pow(z, 2.0 + c.mu) * e1 * c.dth
    out[2] = pow(z, c.mu + 1.0) * se * c.dth
    out[3] = pow(z, c.mu - 1.0) * hl * c.dth
    out[4] = pow(z, c.mu + 1.0) * hr * c.dth


cdef inline bint _finite_all(double* a, int n) noexcept nogil:
    cdef int k
    for k in range(n):
        if not isfinite(a[k]):
            return False
    return True


def march_segment(tab, prm, iprm, W, V, P, PHI, XI, DCHI, acc, double z_a, double z_b, int mode):
    """Compiled march kernel; see ``_fallback.march_segment``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] tabc = np.ascontiguousarray(tab, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pp = np.ascontiguousarray(prm, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ip = np.ascontiguousarray(iprm, dtype=np.int64)
    cdef double[:, ::1] Wm = W
    cdef double[:, ::1] Vm = V
    cdef double[:, ::1] Pm = P
    cdef double[:, ::1] PHm = PHI
    cdef double[::1] XIm = XI
    cdef double[::1] DCm = DCHI
    cdef double[::1] accm = acc
    cdef Par c
    cdef Fields st, pr, nw
    cdef int nth, ns, n, k, status = MARCH_OK, i
    cdef long steps = 0, max_steps
    cdef double z = z_a, dz, rate, zn, dphi, zm, sdp
    cdef double e[5]
    cdef double* buf
    cdef double* rW
    cdef double* rV
    cdef double* rP
    cdef double* rPHI
    cdef double* phis
    cdef double* tmp
    c.b0, c.delta, c.s0, c.gamma, c.A = pp[0], pp[1], pp[2], pp[3], pp[4]
    c.q0, c.rho0, c.C0, c.cfl, c.diss = pp[5], pp[6], pp[7], pp[8], pp[9]
    c.mu, c.hx, c.G0, c.F0, c.xmax, c.dsig, c.dth = pp[10], pp[11], pp[12], pp[13], pp[14], pp[15], pp[16]
    nth = <int>ip[0]
    ns = <int>ip[1]
    c.nth, c.ns, c.linear, c.ntab, c.fixed = nth, ns, <int>ip[2], <int>ip[3], <int>ip[4]
    max_steps = ip[5]
    c.tab = &tabc[0, 0]
    n = nth * ns
    buf = <double*>malloc((12 * n + 5 * nth) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    st.W, st.V, st.P, st.PHI = &Wm[0, 0], &Vm[0, 0], &Pm[0, 0], &PHm[0, 0]
    st.XI, st.DCHI = &XIm[0], &DCm[0]
    pr.W, pr.V, pr.P, pr.PHI = buf, buf + n, buf + 2 * n, buf + 3 * n
    nw.W, nw.V, nw.P, nw.PHI = buf + 4 * n, buf + 5 * n, buf + 6 * n, buf + 7 * n
    rW, rV, rP, rPHI = buf + 8 * n, buf + 9 * n, buf + 10 * n, buf + 11 * n
    pr.XI, pr.DCHI = buf + 12 * n, buf + 12 * n + nth
    nw.XI, nw.DCHI = buf + 12 * n + 2 * nth, buf + 12 * n + 3 * nth
    phis = buf + 12 * n + 4 * nth
    try:
        with nogil:
            if accm[6] < 0:
                _integrands(&c, z, &st, NULL, 0.0, e)
                for k in range(5):
                    accm[6 + k] = e[k]
            while z < z_b:
                status = _rate(&c, z, &st, &rate)
                if status != MARCH_OK:
                    break
                dz = c.cfl / rate if rate > 0 else z_b - z
                if z + dz >= z_b * (1.0 - 1e-15):
                    dz = z_b - z
                # predictor
                status = _mrhs(&c, z, &st, mode, rW, rV, rP, rPHI)
                if status != MARCH_OK:
                    break
                for k in range(n):
                    pr.W[k] = st.W[k] + dz * rW[k]
                    pr.V[k] = st.V[k] + dz * rV[k]
                    pr.P[k] = st.P[k] + dz * rP[k]
                    pr.PHI[k] = st.PHI[k] + dz * rPHI[k]
                for i in range(nth):
                    pr.DCHI[i] = st.DCHI[i]
                    if c.fixed:
                        pr.XI[i] = st.XI[i]
                    else:
                        pr.XI[i] = st.XI[i] + dz * (st.DCHI[i] - st.XI[i]) / z
                status = _close(&c, z + dz, &pr, phis)
                if status != MARCH_OK:
                    break
                # corrector
                status = _mrhs(&c, z + dz, &pr, 1 - mode, rW, rV, rP, rPHI)
                if status != MARCH_OK:
                    break
                for k in range(n):
                    nw.W[k] = 0.5 * (st.W[k] + pr.W[k] + dz * rW[k])
                    nw.V[k] = 0.5 * (st.V[k] + pr.V[k] + dz * rV[k])
                    nw.P[k] = 0.5 * (st.P[k] + pr.P[k] + dz * rP[k])
                    nw.PHI[k] = 0.5 * (st.PHI[k] + pr.PHI[k] + dz * rPHI[k])
                for i in range(nth):
                    nw.DCHI[i] = st.DCHI[i]
                    if c.fixed:
                        nw.XI[i] = st.XI[i]
                    else:
                        nw.XI[i] = 0.5 * (st.XI[i] + pr.XI[i] + dz * (pr.DCHI[i] - pr.XI[i]) / (z + dz))
                _dissipate(&c, nw.W)
                _dissipate(&c, nw.V)
                _dissipate(&c, nw.P)
                status = _close(&c, z + dz, &nw, phis)
                if status != MARCH_OK:
                    break
                if not (_finite_all(nw.W, n) and _finite_all(nw.V, n) and _finite_all(nw.XI, nth)):
                    status = MARCH_BLOWUP
                    z = z + dz
                    break
                zn = z_b if dz == z_b - z else z + dz
                _integrands(&c, zn, &nw, &st, dz, e)
                accm[0] += 0.5 * dz * (accm[6] + e[0])
                accm[1] += 0.5 * dz * (accm[7] + e[1])
                accm[2] += 0.5 * dz * (accm[8] + e[2])
                accm[3] += 0.5 * dz * (accm[9] + e[3])
                accm[4] += 0.5 * dz * (accm[10] + e[4])
                sdp = 0.0
                for i in range(nth):
                    dphi = (nw.PHI[i * ns + ns - 1] - st.PHI[i * ns + ns - 1]) / dz
                    sdp += dphi * dphi
                zm = z + 0.5 * dz
                accm[5] += dz * pow(zm, c.mu + 1.0) * sdp * c.dth
                for k in range(5):
                    accm[6 + k] = e[k]
                for k in range(n):
                    st.W[k] = nw.W[k]
                    st.V[k] = nw.V[k]
                    st.P[k] = nw.P[k]
                    st.PHI[k] = nw.PHI[k]
                for i in range(nth):
                    st.XI[i] = nw.XI[i]
                    st.DCHI[i] = nw.DCHI[i]
                z = zn
                mode = 1 - mode
                steps += 1
                if steps > max_steps:
                    status = MARCH_BLOWUP
                    break
    finally:
        free(buf)
    return status, z, steps, mode
