"""Pure-Python kernels, used when the compiled extension is unavailable.

The signatures and status codes mirror ``_kernels.pyx`` exactly so the two can
be swapped at import time (see :mod:`conic_shock.kernels`).

Conical state vector is ``(rho, u_z, g)`` with ``g = s*u_z - u_r``.  Carrying
``g`` instead of ``u_r`` keeps the tangency residual free of cancellation in
the very thin hypersonic shock layer.
"""

from __future__ import annotations

import math

import numpy as np

STATUS_OK = 0
STATUS_CROSSED = 1
STATUS_DEGENERATE = 2
STATUS_STIFF = 3


def conical_rhs(s, rho, uz, g, A, gamma):
    """Right-hand side in (rho, u_z, g) form; also returns the denominator."""
    c2 = A * gamma * rho ** (gamma - 1.0)
    ur = s * uz - g
    D = (1.0 + s * s) * c2 - g * g
    if D <= 0.0:
        return 0.0, 0.0, 0.0, D
    k = c2 * ur / D
    drho = -rho * ur * g / (s * D)
    duz = k
    dg = uz + (1.0 + s * s) * k / s
    return drho, duz, dg, D


def _step(base, x, h, rho, uz, g, A, gamma):
    """RK4 step from slope base + x; stage slopes are formed as base + (x + c h)."""
    k1r, k1u, k1g, d1 = conical_rhs(base + x, rho, uz, g, A, gamma)
    if d1 <= 0.0:
        return rho, uz, g, d1
    hh = 0.5 * h
    r2, u2, g2 = rho + hh * k1r, uz + hh * k1u, g + hh * k1g
    if r2 <= 0.0:
        return rho, uz, g, -1.0
    k2r, k2u, k2g, d2 = conical_rhs(base + (x + hh), r2, u2, g2, A, gamma)
    if d2 <= 0.0:
        return rho, uz, g, d2
    r3, u3, g3 = rho + hh * k2r, uz + hh * k2u, g + hh * k2g
    if r3 <= 0.0:
        return rho, uz, g, -1.0
    k3r, k3u, k3g, d3 = conical_rhs(base + (x + hh), r3, u3, g3, A, gamma)
    if d3 <= 0.0:
        return rho, uz, g, d3
    r4, u4, g4 = rho + h * k3r, uz + h * k3u, g + h * k3g
    if r4 <= 0.0:
        return rho, uz, g, -1.0
    k4r, k4u, k4g, d4 = conical_rhs(base + (x + h), r4, u4, g4, A, gamma)
    if d4 <= 0.0:
        return rho, uz, g, d4
    h6 = h / 6.0
    return (
        rho + h6 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r),
        uz + h6 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        g + h6 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g),
        min(d1, d2, d3, d4),
    )


def rk4_step(s, h, rho, uz, g, A, gamma):
    """One classical RK4 step; returns the new state and the smallest stage denominator."""
    return _step(s, 0.0, h, rho, uz, g, A, gamma)


def rk4_conical(s_nodes, y0, A, gamma, stop_on_cross=False, dfloor=1e-3, max_halvings=8, base=0.0):
    """Integrate the conical system across slopes ``base + s_nodes`` (either direction).

    Passing offsets from a nonzero ``base`` keeps step lengths exact when the
    whole interval is narrower than the float spacing near ``base``.

    Each node interval is one RK4 step, split in halves while any stage
    denominator falls below ``dfloor`` times its starting value.

    Returns ``(out, count, status)``; ``out[:count]`` holds valid rows.
    """
    s_nodes = np.asarray(s_nodes, dtype=float)
    n = s_nodes.shape[0]
    out = np.empty((n, 3))
    rho, uz, g = float(y0[0]), float(y0[1]), float(y0[2])
    out[0, 0], out[0, 1], out[0, 2] = rho, uz, g
    D0 = conical_rhs(base + s_nodes[0], rho, uz, g, A, gamma)[3]
    if D0 <= 0.0:
        return out, 1, STATUS_DEGENERATE
    floor = dfloor * D0
    for k in range(n - 1):
        s = s_nodes[k]
        H = s_nodes[k + 1] - s
        nsub = 1
        while True:
            h = H / nsub
            if nsub > 1 and abs(h) <= 4e-16 * (abs(s) + abs(H)):
                return out, k + 1, STATUS_STIFF
            rr, uu, gg, ss = rho, uz, g, s
            dmin = math.inf
            for j in range(nsub):
                rr, uu, gg, dm = _step(base, ss, h, rr, uu, gg, A, gamma)
                dmin = min(dmin, dm)
                if dm <= 0.0:
                    break
                ss = s + (j + 1) * h
            if dmin >= floor or (dmin > 0.0 and nsub >= (1 << max_halvings)):
                break
            if nsub >= (1 << max_halvings):
                return out, k + 1, STATUS_DEGENERATE
            nsub *= 2
        rho, uz, g = rr, uu, gg
        out[k + 1, 0], out[k + 1, 1], out[k + 1, 2] = rho, uz, g
        if stop_on_cross and g < 0.0:
            return out, k + 2, STATUS_CROSSED
    return out, n, STATUS_OK


# ---------------------------------------------------------------- march
#
# Shock-fitted march of the perturbation problem.  Arrays are (n_theta, n_sigma)
# for the fields W = d_z phi, V = d_r phi, P = d_theta phi and PHI = phi, and
# (n_theta,) for the shock offset XI and DCHI = d_z chi - s0.
#
# prm:  b0, delta, s0, gamma, A, q0, rho0, C0, cfl, diss, mu, hx, G0, F0, x_max, dsig, dth
# iprm: n_theta, n_sigma, linear, n_tab, fixed_shock, max_steps
# acc:  E0, E1, S, HL, HR, HT, then the previous-step integrands e0, e1, s, hl, hr

MARCH_OK = 0
MARCH_BLOWUP = 1
MARCH_HYPERBOLICITY = 2
MARCH_ENTROPY = 3
MARCH_EXTENSION = 4
MARCH_NEWTON = 5

N_ACC = 11
(I_B0, I_DELTA, I_S0, I_GAMMA, I_A, I_Q0, I_RHO0, I_C0, I_CFL, I_DISS, I_MU, I_HX, I_G0, I_F0,
 I_XMAX, I_DSIG, I_DTH) = range(17)
N_PRM = 17
(T_RHO, T_UR, T_UZ, T_C2, T_P1, T_P2, T_P3, T_P4, T_P5, T_DUR, T_DUZ) = range(11)
N_TAB = 11

_GAUSS_T = np.array([0.5 - 0.5 * math.sqrt(0.6), 0.5, 0.5 + 0.5 * math.sqrt(0.6)])
_GAUSS_W = np.array([5.0, 8.0, 5.0]) / 18.0


class MarchFailure(Exception):
    def __init__(self, status, z, detail=""):
        super().__init__(detail)
        self.status = status
        self.z = z
        self.detail = detail


def interp_table(tab, hx, x):
    """Linear interpolation of every table column at offsets x (any shape)."""
    m = tab.shape[1]
    u = np.asarray(x, dtype=float) / hx
    k = np.clip(np.floor(u).astype(np.int64), 0, m - 2)
    t = u - k
    return tab[:, k] * (1.0 - t) + tab[:, k + 1] * t


def closures_f(gamma, uz, ur, c2, duz, dur, s, w, v, pr):
    """f1..f7 of the quasilinear right-hand side; pr = d_theta phi / r."""
    gm, gp = 0.5 * (gamma - 1.0), 0.5 * (gamma + 1.0)
    dl = uz * uz - c2
    K = (2.0 * uz + w) * w + (2.0 * ur + v) * v + pr * pr
    f1 = (-2.0 * uz * w - w * w - gm * K) / dl
    f2 = (-2.0 * uz * v - 2.0 * ur * w - 2.0 * w * v) / dl
    f3 = (-2.0 * ur * v - v * v - gm * K) / dl
    f4 = -(pr * pr + gm * K) / dl
    f5 = -2.0 / dl * (uz * pr + w * pr)
    f6 = -2.0 / dl * (ur * pr + v * pr)
    f7 = (
        s * s * duz * (gp * w * w + gm * v * v + gm * pr * pr)
        - s * dur * (gm * w * w + gp * v * v + gm * pr * pr)
        - 2.0 * s * duz * w * v
        - ur * (gm * w * w + gm * v * v + 0.5 * (gamma - 3.0) * pr * pr)
        + v * (pr * pr - gm * K)
    ) / dl
    return f1, f2, f3, f4, f5, f6, f7


def char_speeds(gamma, bgc, s, w, v, pr, linear):
    """lambda_1 < lambda_2 of the (w, v) system, plus the f-values used."""
    P1, P2 = bgc[T_P1], bgc[T_P2]
    if linear:
        A = 2.0 * P1
        B = P2
        f = None
    else:
        f = closures_f(gamma, bgc[T_UZ], bgc[T_UR], bgc[T_C2], bgc[T_DUZ], bgc[T_DUR], s, w, v, pr)
        A = (2.0 * P1 - f[1]) / (1.0 - f[0])
        B = (P2 - f[2]) / (1.0 - f[0])
    disc = 0.25 * A * A - B
    root = np.sqrt(np.maximum(disc, 0.0))
    return 0.5 * A - root, 0.5 * A + root, disc, f


def _dsig(F, mode, dsig):
    out = np.empty_like(F)
    if mode == 0:
        out[:, :-1] = (F[:, 1:] - F[:, :-1]) / dsig
    else:
        out[:, 1:] = (F[:, 1:] - F[:, :-1]) / dsig
    out[:, 0] = (-3.0 * F[:, 0] + 4.0 * F[:, 1] - F[:, 2]) / (2.0 * dsig)
    out[:, -1] = (3.0 * F[:, -1] - 4.0 * F[:, -2] + F[:, -3]) / (2.0 * dsig)
    return out


def _dsig_c(F, dsig):
    out = np.empty_like(F)
    out[:, 1:-1] = (F[:, 2:] - F[:, :-2]) / (2.0 * dsig)
    out[:, 0] = (-3.0 * F[:, 0] + 4.0 * F[:, 1] - F[:, 2]) / (2.0 * dsig)
    out[:, -1] = (3.0 * F[:, -1] - 4.0 * F[:, -2] + F[:, -3]) / (2.0 * dsig)
    return out


def _dth(F, dth):
    if F.shape[0] == 1:
        return np.zeros_like(F)
    return (np.roll(F, -1, axis=0) - np.roll(F, 1, axis=0)) / (2.0 * dth)


class MarchState:
    """Mutable bundle used by the pure-Python march."""

    def __init__(self, W, V, P, PHI, XI, DCHI):
        self.W, self.V, self.P, self.PHI, self.XI, self.DCHI = W, V, P, PHI, XI, DCHI

    def copy(self):
        return MarchState(*(a.copy() for a in (self.W, self.V, self.P, self.PHI, self.XI, self.DCHI)))


class PyMarch:
    """Reference implementation of one march segment, with optional test hooks.

    hooks: ``source(z, s, sig, th) -> array`` added to the w equation;
    ``cone_in(z, th) / shock_in(z, th)`` incoming Riemann data replacing the
    physical cone and shock conditions; ``fixed_shock`` freezes XI at zero.
    """

    def __init__(self, tab, prm, iprm, hooks=None):
        self.tab = np.asarray(tab, dtype=float)
        self.prm = np.asarray(prm, dtype=float)
        self.iprm = np.asarray(iprm, dtype=np.int64)
        self.hooks = hooks or {}
        p = self.prm
        self.b0, self.delta, self.s0 = p[I_B0], p[I_DELTA], p[I_S0]
        self.gamma, self.A, self.q0, self.rho0, self.C0 = p[I_GAMMA], p[I_A], p[I_Q0], p[I_RHO0], p[I_C0]
        self.cfl, self.diss, self.mu, self.hx = p[I_CFL], p[I_DISS], p[I_MU], p[I_HX]
        self.G0, self.F0, self.xmax, self.dsig, self.dth = p[I_G0], p[I_F0], p[I_XMAX], p[I_DSIG], p[I_DTH]
        self.nth, self.ns = int(self.iprm[0]), int(self.iprm[1])
        self.linear = bool(self.iprm[2])
        self.fixed = bool(self.iprm[4]) or bool(self.hooks.get("fixed_shock", False))
        self.max_steps = int(self.iprm[5])
        self.sig = np.arange(self.ns) * self.dsig
        self.sig[-1] = 1.0
        self.th = np.arange(self.nth) * self.dth
        wts = np.full(self.ns, self.dsig)
        wts[0] = wts[-1] = 0.5 * self.dsig
        self.wsig = wts

    # -- geometry and background
    def _geom(self, z, XI, DCHI):
        L = (self.delta + XI)[:, None]
        x = self.sig[None, :] * L
        s = self.b0 + x
        bgc = interp_table(self.tab, self.hx, x)
        vg = self.b0 + self.sig[None, :] * (self.delta + DCHI[:, None])
        return L, x, s, z * s, bgc, vg

    def rhs(self, z, st, mode):
        L, x, s, r, bgc, vg = self._geom(z, st.XI, st.DCHI)
        Lz = L * z
        ws, vs, ps = (_dsig(F, mode, self.dsig) for F in (st.W, st.V, st.P))
        lth = _dth(st.XI[:, None], self.dth) / L
        wt = _dth(st.W, self.dth) - self.sig * lth * ws
        vt = _dth(st.V, self.dth) - self.sig * lth * vs
        pt = _dth(st.P, self.dth) - self.sig * lth * ps
        W, V, P = st.W, st.V, st.P
        pr = P / r
        P1, P2, P3, P4, P5 = (bgc[k] for k in (T_P1, T_P2, T_P3, T_P4, T_P5))
        if self.linear:
            f1 = f2 = f3 = f4 = f5 = f6 = f7 = 0.0
        else:
            f1, f2, f3, f4, f5, f6, f7 = closures_f(
                self.gamma, bgc[T_UZ], bgc[T_UR], bgc[T_C2], bgc[T_DUZ], bgc[T_DUR], s, W, V, pr
            )
        one = 1.0 - f1
        if not np.all(np.asarray(one) > 0.0):
            raise MarchFailure(MARCH_HYPERBOLICITY, z, "u_z^2 - c^2 lost positivity")
        wphys = (
            -(2.0 * P1 - f2) * ws / Lz - (P2 - f3) * vs / Lz + (P3 + f4) * pt / (r * r)
            - 2.0 * P4 * W / r - 2.0 * P5 * V / r + f5 * wt / r + f6 * vt / r + f7 / r
        ) / one
        src = self.hooks.get("source")
        if src is not None:
            wphys = wphys + src(z, s, self.sig[None, :], self.th[:, None])
        rW = vg * ws / Lz + wphys
        rV = vg * vs / Lz + ws / Lz
        rP = vg * ps / Lz + wt
        rPHI = W + vg * V
        return rW, rV, rP, rPHI

    def rate(self, z, st):
        L, x, s, r, bgc, vg = self._geom(z, st.XI, st.DCHI)
        l1, l2, disc, f = char_speeds(self.gamma, bgc, s, st.W, st.V, st.P / r, self.linear)
        if np.any(~(disc > 0.0)):
            raise MarchFailure(MARCH_HYPERBOLICITY, z, "characteristic discriminant nonpositive")
        Lz = L * z
        rate = np.maximum(np.abs(l1 - vg), np.abs(l2 - vg)) / (Lz * self.dsig)
        if self.nth > 1:
            rate = np.maximum(rate, np.abs(vg) / (Lz * self.dsig))
            f1 = 0.0 if f is None else f[0]
            f4 = 0.0 if f is None else f[3]
            th = np.sqrt(np.abs(bgc[T_P3] + f4) / (1.0 - f1)) / (r * self.dth)
            rate = np.maximum(rate, th)
        return float(np.max(rate))

    # -- boundary closures
    def _rh(self, bgs, w, v, p, chi):
        """Nonlinear jump function and its pieces at the shock."""
        ur, uz = bgs[T_UR], bgs[T_UZ]
        Pr, Pz = ur + v, uz + w
        q2 = Pr * Pr + Pz * Pz + p * p / (chi * chi)
        h = self.C0 - 0.5 * q2
        rho = ((self.gamma - 1.0) * h / (self.A * self.gamma)) ** (1.0 / (self.gamma - 1.0))
        G = rho * (Pr * Pr + Pz * Pz - self.q0 * Pz + p * p / (chi * chi)) - self.rho0 * self.q0 * Pz + self.rho0 * self.q0**2
        return G, rho, Pr, Pz, h

    def phi_shock(self, z, XI):
        """phi on the shock from continuity: -z xi * mean of u_r over [s0, s0 + xi]."""
        xq = self.delta + XI[:, None] * _GAUSS_T[None, :]
        ur = interp_table(self.tab[T_UR : T_UR + 1], self.hx, xq)[0]
        return -z * XI * (ur @ _GAUSS_W)

    def close(self, z, st):
        """Apply cone and shock closures in place; update DCHI and PHI on the shock."""
        b0 = self.b0
        # cone
        x0 = np.zeros(self.nth)
        bgc = interp_table(self.tab, self.hx, x0)
        r0 = z * b0
        w, v, p = st.W[:, 0], st.V[:, 0], st.P[:, 0]
        l1, l2, disc, _ = char_speeds(self.gamma, bgc, b0, w, v, p / r0, self.linear)
        R = w + l2 * v
        cin = self.hooks.get("cone_in")
        if cin is None:
            wn = R / (1.0 + l2 * b0)
            vn = b0 * wn
        else:
            I = cin(z, self.th)
            vn = (R - I) / (l2 - l1)
            wn = R - l2 * vn
        st.W[:, 0], st.V[:, 0] = wn, vn
        # shock
        XI = st.XI
        if np.any(XI > self.xmax - self.delta) or np.any(XI <= -self.delta):
            raise MarchFailure(MARCH_EXTENSION, z, "shock offset left the background table")
        xs = self.delta + XI
        bgs = interp_table(self.tab, self.hx, xs)
        ss = b0 + xs
        chi = z * ss
        w, v, p = st.W[:, -1], st.V[:, -1], st.P[:, -1]
        l1, l2, disc, _ = char_speeds(self.gamma, bgs, ss, w, v, p / chi, self.linear)
        R2 = w + l1 * v
        phis = self.phi_shock(z, XI)
        chi_th = z * _dth(XI[:, None], self.dth)[:, 0]
        pd = _dth(phis[:, None], self.dth)[:, 0]
        sin_ = self.hooks.get("shock_in")
        if sin_ is not None:
            I = sin_(z, self.th)
            vn = (I - R2) / (l2 - l1)
            wn = R2 - l1 * vn
            pn = pd - vn * chi_th
        else:
            vn = v.copy()
            ok = np.zeros(self.nth, dtype=bool)
            for _ in range(40):
                wn = R2 - l1 * vn
                pn = pd - vn * chi_th
                G, rho, Pr, Pz, h = self._rh(bgs, wn, vn, pn, chi)
                F = G - self.G0
                c2 = self.A * self.gamma * rho ** (self.gamma - 1.0)
                dq2 = 2.0 * Pr - 2.0 * l1 * Pz - 2.0 * pn * chi_th / (chi * chi)
                drho = -0.5 * rho / c2 * dq2
                dG = (
                    drho * (Pr * Pr + Pz * Pz - self.q0 * Pz + pn * pn / (chi * chi))
                    + rho * (2.0 * Pr - l1 * (2.0 * Pz - self.q0) - 2.0 * pn * chi_th / (chi * chi))
                    + self.rho0 * self.q0 * l1
                )
                step = np.where(ok, 0.0, F / dG)
                vn = vn - step
                ok = ok | (np.abs(step) <= 1e-13 * (np.abs(vn) + np.abs(bgs[T_UR])))
                ok = ok | (np.abs(F) <= 1e-14 * self.rho0 * self.q0 * self.q0)
                if np.all(ok):
                    break
            else:
                raise MarchFailure(MARCH_NEWTON, z, "shock Newton iteration did not converge")
            wn = R2 - l1 * vn
            pn = pd - vn * chi_th
        st.W[:, -1], st.V[:, -1], st.P[:, -1] = wn, vn, pn
        st.PHI[:, -1] = phis
        if self.fixed:
            st.DCHI[:] = 0.0
            return
        G, rho, Pr, Pz, h = self._rh(bgs, wn, vn, pn, chi)
        F = (rho * Pr - rho * pn * chi_th / (chi * chi)) / (rho * Pz - self.rho0 * self.q0)
        st.DCHI[:] = F - self.F0
        l1, l2, _, _ = char_speeds(self.gamma, bgs, ss, wn, vn, pn / chi, self.linear)
        chiz = self.s0 + st.DCHI
        if np.any(~((l1 < chiz) & (chiz < l2))):
            raise MarchFailure(MARCH_ENTROPY, z, "shock slope left the characteristic window")

    def dissipate(self, st):
        if self.diss == 0.0 or self.ns < 5:
            return
        for F in (st.W, st.V, st.P):
            d4 = F[:, :-4] - 4.0 * F[:, 1:-3] + 6.0 * F[:, 2:-2] - 4.0 * F[:, 3:-1] + F[:, 4:]
            F[:, 2:-2] -= self.diss * d4

    # -- one step
    def step(self, z, dz, st, mode):
        k1 = self.rhs(z, st, mode)
        pr = st.copy()
        pr.W += dz * k1[0]
        pr.V += dz * k1[1]
        pr.P += dz * k1[2]
        pr.PHI += dz * k1[3]
        if not self.fixed:
            pr.XI += dz * (st.DCHI - st.XI) / z
        self.close(z + dz, pr)
        k2 = self.rhs(z + dz, pr, 1 - mode)
        new = st.copy()
        new.W = 0.5 * (st.W + pr.W + dz * k2[0])
        new.V = 0.5 * (st.V + pr.V + dz * k2[1])
        new.P = 0.5 * (st.P + pr.P + dz * k2[2])
        new.PHI = 0.5 * (st.PHI + pr.PHI + dz * k2[3])
        if not self.fixed:
            new.XI = 0.5 * (st.XI + pr.XI + dz * (pr.DCHI - pr.XI) / (z + dz))
        self.dissipate(new)
        self.close(z + dz, new)
        if not (np.all(np.isfinite(new.W)) and np.all(np.isfinite(new.V)) and np.all(np.isfinite(new.XI))):
            raise MarchFailure(MARCH_BLOWUP, z + dz, "non-finite field")
        return new

    # -- diagnostics integrands
    def integrands(self, z, st, old=None, dz=None):
        L, x, s, r, bgc, vg = self._geom(z, st.XI, st.DCHI)
        Lz = L * z
        g2 = st.W**2 + st.V**2 + (st.P / r) ** 2
        e0 = z**self.mu * float(np.sum(g2 * self.wsig[None, :] * Lz)) * self.dth
        wr = _dsig_c(st.W, self.dsig) / Lz
        vr = _dsig_c(st.V, self.dsig) / Lz
        h2 = wr**2 + vr**2
        if self.nth > 1:
            lth = _dth(st.XI[:, None], self.dth) / L
            wt = _dth(st.W, self.dth) - self.sig * lth * wr * Lz
            vt = _dth(st.V, self.dth) - self.sig * lth * vr * Lz
            h2 = h2 + (wt / r) ** 2 + (vt / r) ** 2
        if old is not None:
            wz = (st.W - old.W) / dz - vg * wr
            h2 = h2 + wz**2
        e1 = z ** (2.0 + self.mu) * float(np.sum(h2 * self.wsig[None, :] * Lz)) * self.dth
        rs = z * (self.b0 + self.delta + st.XI)
        gs = st.W[:, -1] ** 2 + st.V[:, -1] ** 2 + (st.P[:, -1] / rs) ** 2
        se = z ** (self.mu + 1.0) * float(np.sum(gs)) * self.dth
        hl = z ** (self.mu - 1.0) * float(np.sum(st.PHI[:, -1] ** 2)) * self.dth
        hr = z ** (self.mu + 1.0) * float(np.sum(st.W[:, -1] ** 2)) * self.dth
        return e0, e1, se, hl, hr

    def segment(self, z_a, z_b, st, acc, mode):
        """March from z_a to exactly z_b; returns (state, z, steps, mode)."""
        z = z_a
        steps = 0
        if acc[6] < 0:  # first call: seed the previous-step integrands
            acc[6:11] = self.integrands(z, st)
        while z < z_b:
            rate = self.rate(z, st)
            dz = self.cfl / rate if rate > 0 else z_b - z
            if z + dz >= z_b * (1.0 - 1e-15):
                dz = z_b - z
            new = self.step(z, dz, st, mode)
            zn = z_b if dz == z_b - z else z + dz
            e0, e1, se, hl, hr = self.integrands(zn, new, st, dz)
            acc[0] += 0.5 * dz * (acc[6] + e0)
            acc[1] += 0.5 * dz * (acc[7] + e1)
            acc[2] += 0.5 * dz * (acc[8] + se)
            acc[3] += 0.5 * dz * (acc[9] + hl)
            acc[4] += 0.5 * dz * (acc[10] + hr)
            dphi = (new.PHI[:, -1] - st.PHI[:, -1]) / dz
            zm = z + 0.5 * dz
            acc[5] += dz * zm ** (self.mu + 1.0) * float(np.sum(dphi**2)) * self.dth
            acc[6:11] = (e0, e1, se, hl, hr)
            st = new
            z = zn
            mode = 1 - mode
            steps += 1
            if steps > self.max_steps:
                raise MarchFailure(MARCH_BLOWUP, z, "step budget exhausted")
        return st, z, steps, mode


def march_segment(tab, prm, iprm, W, V, P, PHI, XI, DCHI, acc, z_a, z_b, mode):
    """Pure-Python march kernel; arrays are updated in place.

    Returns (status, z, steps, mode).
    """
    m = PyMarch(tab, prm, iprm)
    st = MarchState(W.copy(), V.copy(), P.copy(), PHI.copy(), XI.copy(), DCHI.copy())
    try:
        st, z, steps, mode = m.segment(z_a, z_b, st, acc, mode)
        status = MARCH_OK
    except MarchFailure as exc:
        return exc.status, exc.z, 0, mode
    W[...], V[...], P[...], PHI[...], XI[...], DCHI[...] = st.W, st.V, st.P, st.PHI, st.XI, st.DCHI
    return status, z, steps, mode
