"""Self-similar conical flow behind an attached conic shock.

The flow between the cone r = b0 z and the shock r = s0 z depends on s = r/z
only.  It is found by shooting from the shock, where the Rankine-Hugoniot
relations give the state explicitly, inward to the cone, where the flow must
be tangent to the surface.

Internally the integrator carries ``g = s*u_z - u_r`` in place of ``u_r``.  In
the hypersonic regime the layer is extremely thin (s0 - b0 is about b0/alpha)
and ``g`` is the quantity that has to vanish on the cone, so tracking it
directly removes the cancellation in ``u_r - b0*u_z``.  For the same reason the
unknown of the shooting problem is the offset ``delta = s0 - b0`` rather than
``s0`` itself.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

from . import kernels
from .errors import (
    BranchSelectionError,
    DomainError,
    InputError,
    NoCompressiveRootError,
    ShockDetachedError,
    SonicDegeneracyError,
    StiffnessError,
    StrongBranchRejectedError,
)
from .gas import Freestream, GasModel, enthalpy, sound_speed_sq

S_MAX = math.tan(0.99 * math.pi / 2)
DEFAULT_NODES = 2000
CLUSTER = 3.0


@dataclass(frozen=True)
class ConicalState:
    s: float
    rho: float
    u_r: float
    u_z: float

    def c2(self, gas: GasModel) -> float:
        return sound_speed_sq(gas, self.rho)

    def denominator(self, gas: GasModel) -> float:
        g = self.s * self.u_z - self.u_r
        return (1.0 + self.s**2) * self.c2(gas) - g * g

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.s, self.rho, self.u_r, self.u_z)


@dataclass(frozen=True)
class ShockFitResult:
    s0: float
    alpha: float
    post: ConicalState
    lambda1: float
    lambda2: float
    entropy_ok: bool


def characteristic_slopes(gas: GasModel, rho, u_r, u_z):
    """lambda_{1,2} = (u_r u_z -/+ c sqrt(q^2 - c^2)) / (u_z^2 - c^2)."""
    c2 = sound_speed_sq(gas, rho)
    u_r = np.asarray(u_r, dtype=float)
    u_z = np.asarray(u_z, dtype=float)
    root = np.sqrt(c2 * (u_r**2 + u_z**2 - c2))
    den = u_z**2 - c2
    lam1 = (u_r * u_z - root) / den
    lam2 = (u_r * u_z + root) / den
    if lam1.ndim == 0:
        return float(lam1), float(lam2)
    return lam1, lam2


def ode_rhs(state: ConicalState, gas: GasModel) -> tuple[float, float, float]:
    """Right-hand side (rho', u_r', u_z') of the conical system."""
    s, rho, ur, uz = state.s, state.rho, state.u_r, state.u_z
    if not s > 0:
        raise DomainError("similarity coordinate s must be positive")
    c2 = sound_speed_sq(gas, rho)
    g = s * uz - ur
    D = (1.0 + s * s) * c2 - g * g
    if not D > 0:
        raise SonicDegeneracyError(f"denominator {D:.3e} <= 0 at s={s}")
    return (-rho * ur * g / (s * D), -c2 * ur / (s * D), c2 * ur / D)


def mach_slope(fs: Freestream) -> float:
    return fs.mach_slope


def b_star(gamma: float) -> float:
    """Root of 1 - (gamma-1) b^2 (1+b^2)/2 = 0 (supersonic-in-z threshold)."""
    return math.sqrt(0.5 * (math.sqrt((gamma + 7.0) / (gamma - 1.0)) - 1.0))


# ---------------------------------------------------------------- shock jump


def _alpha_rhs(s0: float, gas: GasModel, fs: Freestream) -> float:
    g = gas.gamma
    return (g - 1.0) * s0**2 * fs.q0**2 / (2.0 * gas.A * g * (1.0 + s0**2) * fs.rho0 ** (g - 1.0))


def _log_lhs(x: float, gamma: float) -> float:
    """log of alpha^2 (alpha^(gamma-1) - 1)/(alpha^2 - 1) at alpha = exp(x)."""
    if x == 0.0:
        return math.log(0.5 * (gamma - 1.0))
    return 2.0 * x + math.log(math.expm1((gamma - 1.0) * x) / math.expm1(2.0 * x))


def solve_alpha(s0: float, gas: GasModel, fs: Freestream) -> float:
    """Density ratio alpha = rho+/rho0 > 1 across a shock of slope s0.

    Solved for log(alpha) with expm1 so that weak shocks (alpha near 1) keep
    full relative precision.
    """
    R = _alpha_rhs(s0, gas, fs)
    floor = 0.5 * (gas.gamma - 1.0)
    if not R > floor:
        raise NoCompressiveRootError(
            f"s0={s0} does not exceed the upstream Mach slope {fs.mach_slope}; no compressive shock"
        )
    target = math.log(R)
    x_hi = math.log1p(R) / (gas.gamma - 1.0) + 1.0
    f = lambda x: _log_lhs(x, gas.gamma) - target  # noqa: E731
    while f(x_hi) < 0:
        x_hi *= 2.0
    x = brentq(f, 0.0, x_hi, xtol=1e-300, rtol=8.9e-16, maxiter=400)
    if x == 0.0:
        raise NoCompressiveRootError("shock strength underflows to zero")
    return math.exp(x)


def _post_shock(s0: float, gas: GasModel, fs: Freestream):
    alpha = solve_alpha(s0, gas, fs)
    q0 = fs.q0
    uz = q0 * (1.0 + s0**2 / alpha) / (1.0 + s0**2)
    ur = s0 * q0 * (1.0 - 1.0 / alpha) / (1.0 + s0**2)
    g = s0 * q0 / alpha  # exact value of s0*uz - ur
    return alpha, alpha * fs.rho0, ur, uz, g


def post_shock_state(s0: float, gas: GasModel, fs: Freestream) -> ConicalState:
    """Downstream state at s0- from the jump relations."""
    _, rho, ur, uz, _ = _post_shock(s0, gas, fs)
    return ConicalState(s0, rho, ur, uz)


def jump_residuals(s0: float, post: ConicalState, fs: Freestream) -> tuple[float, float]:
    """([rho u_r] - s0 [rho u_z], [u_z] + s0 [u_r]), scaled by rho0*q0 and q0."""
    m = (post.rho * post.u_r - s0 * (post.rho * post.u_z - fs.rho0 * fs.q0)) / (fs.rho0 * fs.q0)
    t = ((post.u_z - fs.q0) + s0 * post.u_r) / fs.q0
    return m, t


# ------------------------------------------------------------ integration


def cluster_nodes(n: int, beta: float = CLUSTER) -> np.ndarray:
    """Nodes on [0, 1] with geometric refinement toward 0."""
    k = np.arange(n) / (n - 1)
    tau = np.expm1(beta * k) / math.expm1(beta)
    tau[0], tau[-1] = 0.0, 1.0
    return tau


def _integrate(s_nodes, y0, gas: GasModel, stop_on_cross=False, base: float = 0.0):
    out, count, status = kernels.rk4_conical(
        s_nodes, y0, gas.A, gas.gamma, stop_on_cross=stop_on_cross, base=base
    )
    return out, int(count), int(status)


def _raise_status(status: int, s: float):
    if status == kernels.STATUS_DEGENERATE:
        raise SonicDegeneracyError(f"denominator of the conical system vanished near s={s:.12g}")
    if status == kernels.STATUS_STIFF:
        raise StiffnessError(f"step size underflow near s={s:.12g}")


def integrate_inward(
    start: ConicalState, s_end: float, gas: GasModel, n_nodes: int = DEFAULT_NODES
) -> list[ConicalState]:
    """Integrate the conical system from ``start.s`` down to ``s_end``.

    Nodes are refined geometrically toward ``s_end``; each interval is one RK4
    step, halved adaptively when the denominator drops below 1e-3 of its
    starting value.
    """
    if not start.s > s_end > 0:
        raise InputError("need start.s > s_end > 0")
    tau = cluster_nodes(n_nodes)[::-1]
    width = start.s - s_end
    s_nodes = s_end + width * tau
    s_nodes[0] = start.s
    y0 = (start.rho, start.u_z, start.s * start.u_z - start.u_r)
    out, count, status = _integrate(s_nodes, y0, gas)
    if status != kernels.STATUS_OK:
        _raise_status(status, s_nodes[count - 1])
    ur = s_nodes * out[:, 1] - out[:, 2]
    return [ConicalState(float(s), float(r), float(u), float(w)) for s, r, u, w in zip(s_nodes, out[:, 0], ur, out[:, 1])]


def _inward_from_shock(delta: float, b0: float, gas: GasModel, fs: Freestream, tau_desc, stop=False):
    s0 = b0 + delta
    _, rho, _, uz, g = _post_shock(s0, gas, fs)
    x = delta * tau_desc
    return b0 + x, _integrate(x, (rho, uz, g), gas, stop_on_cross=stop, base=b0)


def tangency_residual(
    s0: float, b0: float, gas: GasModel, fs: Freestream, n_nodes: int = DEFAULT_NODES
) -> float:
    """u_r(b0) - b0 u_z(b0) for the flow behind a shock of slope s0."""
    if not s0 > b0 > 0:
        raise InputError("need s0 > b0 > 0")
    tau = cluster_nodes(n_nodes)[::-1]
    s_nodes, (out, count, status) = _inward_from_shock(s0 - b0, b0, gas, fs, tau)
    if status != kernels.STATUS_OK:
        _raise_status(status, s_nodes[count - 1])
    return float(-out[-1, 2])


# ------------------------------------------------------------ cone angle


def _refine_crossing(s_k: float, h_full: float, y_k, gas: GasModel):
    def g_after(h):
        return kernels.rk4_step(s_k, h, y_k[0], y_k[1], y_k[2], gas.A, gas.gamma)[2]

    h = brentq(g_after, 0.0, h_full, xtol=1e-300, rtol=8.9e-16)
    rho, uz, g, _ = kernels.rk4_step(s_k, h, y_k[0], y_k[1], y_k[2], gas.A, gas.gamma)
    return s_k + h, rho, uz, g


def cone_angle(s0: float, gas: GasModel, fs: Freestream, n_nodes: int = DEFAULT_NODES) -> ConicalState:
    """Cone slope reached by integrating inward from a shock of slope s0.

    Returns the state on the cone, i.e. where s u_z - u_r first vanishes.
    """
    _, rho, _, uz, g = _post_shock(s0, gas, fs)
    t = np.concatenate(([0.0], np.geomspace(1e-12 * s0, s0 * (1.0 - 1e-9), n_nodes - 1)))
    s_nodes = s0 - t
    out, count, status = _integrate(-t, (rho, uz, g), gas, stop_on_cross=True, base=s0)
    if status == kernels.STATUS_CROSSED:
        k = count - 2
        sc, rc, uc, gc = _refine_crossing(s_nodes[k], s_nodes[k + 1] - s_nodes[k], out[k], gas)
        return ConicalState(sc, rc, sc * uc - gc, uc)
    if status == kernels.STATUS_OK:
        raise ShockDetachedError(f"no cone crossing behind shock slope {s0}")
    _raise_status(status, s_nodes[count - 1])
    raise AssertionError("unreachable")


def _slope_grid(fs: Freestream, n: int) -> np.ndarray:
    lo = math.atan(fs.mach_slope * (1.0 + 1e-9))
    hi = math.atan(S_MAX)
    return lo + (hi - lo) * np.arange(1, n + 1) / n


def _safe_cone(s0, gas, fs) -> float:
    try:
        return cone_angle(s0, gas, fs).s
    except (SonicDegeneracyError, StiffnessError, ShockDetachedError):
        return math.nan


def apple_curve(gas: GasModel, fs: Freestream, n: int = 64) -> list[tuple[float, float, float, float]]:
    """Sampled cone-surface states over the admissible shock slopes.

    Returns ``(s0, cone_angle, u_z_cone, u_r_cone)`` tuples with s0 spread
    uniformly in shock angle above the Mach angle, up to 0.99*pi/2 inclusive.
    Strong shocks whose inward continuation degenerates before reaching a cone
    (possible at low Mach number) are left out.
    """
    if n < 2:
        raise InputError("apple_curve needs n >= 2")
    rows = []
    for t in _slope_grid(fs, n):
        s0 = math.tan(t)
        try:
            st = cone_angle(s0, gas, fs)
        except (SonicDegeneracyError, StiffnessError, ShockDetachedError):
            continue
        rows.append((s0, st.s, st.u_z, st.u_r))
    return rows


def critical_angle(gas: GasModel, fs: Freestream, n_scan: int = 48, xatol: float = 1e-10) -> float:
    """Largest cone slope reached over the admissible shock slopes.

    This is the detachment value b*: cones with a larger slope admit no
    attached shock with s0 <= tan(0.99*pi/2).  The maximum is located on a scan
    and refined with bounded Brent (golden section with parabolic steps).
    """
    th = _slope_grid(fs, n_scan)
    vals = np.array([_safe_cone(math.tan(t), gas, fs) for t in th])
    if np.all(np.isnan(vals)):
        raise ShockDetachedError("no shock slope produces a cone")
    i = int(np.nanargmax(vals))
    best = float(vals[i])
    a = th[max(i - 1, 0)]
    b = th[min(i + 1, n_scan - 1)]
    res = minimize_scalar(
        lambda t: -np.nan_to_num(_safe_cone(math.tan(t), gas, fs), nan=0.0),
        bounds=(a, b),
        method="bounded",
        options={"xatol": xatol},
    )
    return float(max(-res.fun, best))


# ------------------------------------------------------------- shooting


@dataclass
class BackgroundSolution:
    """Tabulated conical flow on [b0, s0 + tau_ext] and its shock data.

    ``x`` holds the exact offsets s - b0, which stay well resolved even when
    the layer width is far below the spacing of floating-point numbers near b0.
    """

    gas: GasModel
    fs: Freestream
    b0: float
    fit: ShockFitResult
    x: np.ndarray
    rho: np.ndarray
    u_z: np.ndarray
    g: np.ndarray
    i_shock: int
    tau0: float
    tau_ext: float
    tangency: float
    bernoulli_drift: float
    nodes: int = DEFAULT_NODES
    meta: dict = field(default_factory=dict)

    @property
    def s0(self) -> float:
        return self.fit.s0

    @property
    def delta(self) -> float:
        return float(self.x[self.i_shock])

    @property
    def s(self) -> np.ndarray:
        return self.b0 + self.x

    @property
    def u_r(self) -> np.ndarray:
        return self.s * self.u_z - self.g

    @property
    def c2(self) -> np.ndarray:
        return sound_speed_sq(self.gas, self.rho)

    @property
    def table(self) -> list[ConicalState]:
        return [ConicalState(*t) for t in zip(self.s, self.rho, self.u_r, self.u_z)]

    def derivatives(self):
        """Exact (rho', u_r', u_z') at every node from the ODE."""
        return _table_derivs(self.s, self.rho, self.u_z, self.g, self.gas)

    @cached_property
    def _splines(self):
        s = self.s
        d_rho, d_ur, d_uz = self.derivatives()
        d_g = self.u_z - (1.0 + s * s) * d_ur
        x = self.x
        return {
            "rho": CubicHermiteSpline(x, self.rho, d_rho),
            "u_z": CubicHermiteSpline(x, self.u_z, d_uz),
            "g": CubicHermiteSpline(x, self.g, d_g),
        }

    @cached_property
    def _pchip(self):
        return {k: PchipInterpolator(self.x, v) for k, v in (("rho", self.rho), ("u_z", self.u_z), ("u_r", self.u_r))}

    def evaluate(self, s=None, x=None, method: str = "hermite"):
        """Interpolated (rho, u_r, u_z) at slopes s, or at offsets x = s - b0."""
        if x is None:
            x = np.asarray(s, dtype=float) - self.b0
            s = np.asarray(s, dtype=float)
        else:
            x = np.asarray(x, dtype=float)
            s = self.b0 + x
        if method == "pchip":
            sp = self._pchip
            return sp["rho"](x), sp["u_r"](x), sp["u_z"](x)
        sp = self._splines
        uz = sp["u_z"](x)
        return sp["rho"](x), s * uz - sp["g"](x), uz

    def lambdas(self):
        return characteristic_slopes(self.gas, self.rho, self.u_r, self.u_z)

    def to_dict(self) -> dict:
        post = self.fit.post
        return {
            "gas": self.gas.to_dict(),
            "freestream": self.fs.to_dict(),
            "b0": self.b0,
            "s0": self.s0,
            "delta": self.delta,
            "alpha": self.fit.alpha,
            "post_shock": {"rho": post.rho, "u_r": post.u_r, "u_z": post.u_z},
            "lambda1": self.fit.lambda1,
            "lambda2": self.fit.lambda2,
            "entropy_ok": self.fit.entropy_ok,
            "tau0": self.tau0,
            "tau_ext": self.tau_ext,
            "tangency_residual": self.tangency,
            "bernoulli_drift": self.bernoulli_drift,
            "i_shock": self.i_shock,
            "nodes": {
                "x": self.x.tolist(),
                "s": self.s.tolist(),
                "rho": self.rho.tolist(),
                "u_r": self.u_r.tolist(),
                "u_z": self.u_z.tolist(),
                "g": self.g.tolist(),
            },
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "BackgroundSolution":
        gas = GasModel(**d["gas"])
        fs = Freestream(gas, d["freestream"]["q0"], d["freestream"]["rho0"])
        p = d["post_shock"]
        fit = ShockFitResult(
            d["s0"], d["alpha"], ConicalState(d["s0"], p["rho"], p["u_r"], p["u_z"]),
            d["lambda1"], d["lambda2"], d["entropy_ok"],
        )
        n = d["nodes"]
        return cls(
            gas, fs, d["b0"], fit, np.array(n["x"]), np.array(n["rho"]), np.array(n["u_z"]),
            np.array(n["g"]), d["i_shock"], d["tau0"], d["tau_ext"], d["tangency_residual"],
            d["bernoulli_drift"], nodes=d["i_shock"] + 1,
        )

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "rho", "u_r", "u_z", "c", "mach_z"])
        c = np.sqrt(self.c2)
        for row in zip(self.s, self.rho, self.u_r, self.u_z, c, self.u_z / c):
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _table_derivs(s, rho, uz, g, gas: GasModel):
    c2 = sound_speed_sq(gas, rho)
    ur = s * uz - g
    D = (1.0 + s * s) * c2 - g * g
    if np.any(D <= 0):
        raise SonicDegeneracyError("denominator nonpositive on table")
    return -rho * ur * g / (s * D), -c2 * ur / (s * D), c2 * ur / D


def bernoulli_drift(gas: GasModel, fs: Freestream, rho, u_r, u_z) -> float:
    b = 0.5 * (np.asarray(u_r) ** 2 + np.asarray(u_z) ** 2) + enthalpy(gas, rho)
    return float(np.max(np.abs(b - fs.C0)))


def _sign(delta, b0, gas, fs, tau_scan) -> int:
    """+1 if the flow behind slope b0+delta meets its cone above b0, else -1."""
    s_nodes, (out, count, status) = _inward_from_shock(delta, b0, gas, fs, tau_scan, stop=True)
    if status == kernels.STATUS_CROSSED:
        return 1
    if status == kernels.STATUS_OK:
        return -1 if out[-1, 2] >= 0 else 1
    _raise_status(status, s_nodes[count - 1])
    return 0


def _find_bracket(b0, gas, fs, d_lo, d_hi, tau_scan):
    if b0 > fs.mach_slope:
        guess = b0 / solve_alpha(b0, gas, fs)
    else:
        guess = 2.0 * d_lo
    d = min(max(guess, d_lo), 0.5 * d_hi)
    sg = _sign(d, b0, gas, fs, tau_scan)
    if sg > 0:
        while True:
            lo = max(d / 4.0, d_lo)
            if _sign(lo, b0, gas, fs, tau_scan) < 0:
                return lo, d
            if lo == d_lo:
                raise BranchSelectionError("tangency residual positive at the weakest admissible shock")
            d = lo
    while d < d_hi:
        hi = min(2.0 * d, d_hi)
        if _sign(hi, b0, gas, fs, tau_scan) > 0:
            return d, hi
        d = hi
    # Narrow attachment window (cone close to detachment): fine scan in angle.
    th = np.linspace(math.atan(b0 + d_lo), math.atan(b0 + d_hi), 801)
    prev = d_lo
    for t in th[1:]:
        dd = math.tan(t) - b0
        if dd <= prev:
            continue
        if _sign(dd, b0, gas, fs, tau_scan) > 0:
            return prev, dd
        prev = dd
    raise ShockDetachedError(f"no attached shock for cone slope b0={b0}")


def _extend(b0, delta, state, gas, tau_ext, n_ext):
    """Integrate the post-shock state outward across [s0, s0 + tau_ext]."""
    offs = tau_ext * np.arange(1, n_ext + 1) / n_ext
    x_nodes = np.concatenate(([delta], delta + offs))
    out, count, status = _integrate(x_nodes, state, gas, base=b0)
    if status != kernels.STATUS_OK:
        _raise_status(status, b0 + x_nodes[count - 1])
    return offs, out[1:]


def shoot_attached_shock(
    b0: float,
    gas: GasModel,
    fs: Freestream,
    n_nodes: int = DEFAULT_NODES,
    tau_ext: float | None = None,
    n_ext: int | None = None,
) -> BackgroundSolution:
    """Weak-branch attached shock for a cone of slope b0.

    The shooting unknown is delta = s0 - b0.  A sign scan on where the inward
    integration meets its cone brackets the first (weakest) root; Brent's
    method then drives the tangency residual to zero.  ``tau_ext`` sets how far
    past s0 the table is continued (default: the admissible width
    tau0 = q0^(-4/(gamma-1)) delta, which may round away entirely).
    """
    if not b0 > 0:
        raise InputError(f"cone slope must be positive, got {b0}")
    if not math.isfinite(b0) or b0 >= S_MAX:
        raise ShockDetachedError(f"cone slope {b0} beyond admissible range")
    tau_full = cluster_nodes(n_nodes)[::-1].copy()
    tau_scan = cluster_nodes(max(64, n_nodes // 8))[::-1].copy()
    s_low = fs.mach_slope * (1.0 + 1e-9)
    d_lo = max(s_low - b0, 1e-100 * b0)
    d_hi = S_MAX - b0
    if d_hi <= d_lo:
        raise ShockDetachedError(f"no admissible shock slope above b0={b0}")
    lo, hi = _find_bracket(b0, gas, fs, d_lo, d_hi, tau_scan)

    def resid(d):
        s_nodes, (out, count, status) = _inward_from_shock(d, b0, gas, fs, tau_full)
        if status == kernels.STATUS_OK:
            return -out[-1, 2]
        return (b0 + d) * fs.q0  # past the cone with a degenerate continuation

    delta = brentq(resid, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=500)
    s0 = b0 + delta
    alpha, rho_p, ur_p, uz_p, g_p = _post_shock(s0, gas, fs)
    s_nodes, (out, count, status) = _inward_from_shock(delta, b0, gas, fs, tau_full)
    if status != kernels.STATUS_OK:
        _raise_status(status, s_nodes[count - 1])
    x_in = (delta * tau_full)[::-1]
    rows = out[::-1]

    tau0 = fs.q0 ** (-4.0 / (gas.gamma - 1.0)) * delta
    ext = tau0 if tau_ext is None else float(tau_ext)
    if ext < 0:
        raise InputError("tau_ext must be nonnegative")
    if n_ext is None:
        n_ext = max(8, n_nodes // 10)
    # skip an extension too short to be resolved as distinct offsets past delta
    if ext > 4.0 * n_ext * np.spacing(delta):
        offs, rows_ext = _extend(b0, delta, (rho_p, uz_p, g_p), gas, ext, n_ext)
        x = np.concatenate((x_in, delta + offs))
        rows = np.concatenate((rows, rows_ext))
    else:
        x = x_in
    rho, uz, g = rows[:, 0].copy(), rows[:, 1].copy(), rows[:, 2].copy()
    s = b0 + x
    ur = s * uz - g

    c2_all = sound_speed_sq(gas, rho)
    if np.any(uz**2 - c2_all <= 0):
        raise StrongBranchRejectedError("flow behind the shock is not supersonic in z")
    lam1, lam2 = characteristic_slopes(gas, rho_p, ur_p, uz_p)
    ok = bool(lam1 < s0 < lam2 and s0 > fs.mach_slope and alpha > 1)
    if not ok:
        raise BranchSelectionError(f"entropy conditions fail at s0={s0}: lambda=({lam1}, {lam2})")
    post = ConicalState(s0, rho_p, ur_p, uz_p)
    fit = ShockFitResult(s0, alpha, post, lam1, lam2, ok)
    return BackgroundSolution(
        gas=gas,
        fs=fs,
        b0=b0,
        fit=fit,
        x=x,
        rho=rho,
        u_z=uz,
        g=g,
        i_shock=n_nodes - 1,
        tau0=tau0,
        tau_ext=ext if x.shape[0] > n_nodes else 0.0,
        tangency=float(-g[0]),
        bernoulli_drift=bernoulli_drift(gas, fs, rho, ur, uz),
        nodes=n_nodes,
    )


def extend_background(bg: BackgroundSolution, tau_ext: float, n_ext: int = 400) -> BackgroundSolution:
    """Copy of ``bg`` continued past the shock out to s0 + tau_ext."""
    n = bg.i_shock + 1
    post = bg.fit.post
    offs, rows = _extend(bg.b0, bg.delta, (post.rho, post.u_z, bg.g[bg.i_shock]), bg.gas, tau_ext, n_ext)
    x = np.concatenate((bg.x[:n], bg.delta + offs))
    rho = np.concatenate((bg.rho[:n], rows[:, 0]))
    uz = np.concatenate((bg.u_z[:n], rows[:, 1]))
    g = np.concatenate((bg.g[:n], rows[:, 2]))
    s = bg.b0 + x
    return BackgroundSolution(
        gas=bg.gas, fs=bg.fs, b0=bg.b0, fit=bg.fit, x=x, rho=rho, u_z=uz, g=g,
        i_shock=bg.i_shock, tau0=bg.tau0, tau_ext=float(tau_ext), tangency=bg.tangency,
        bernoulli_drift=bernoulli_drift(bg.gas, bg.fs, rho, s * uz - g, uz), nodes=bg.nodes,
    )


def potential_eval(bg: BackgroundSolution, z: float, r: float, method: str = "hermite"):
    """Background potential z*(u_z + s u_r) and its gradient (d/dz, d/dr)."""
    if not z > 0:
        raise DomainError("z must be positive")
    s = r / z
    x = s - bg.b0
    top = float(bg.x[-1])
    slack = 4e-16 * max(1.0, abs(s))
    if x < -slack or x > top + slack:
        raise DomainError(f"point (z={z}, r={r}) outside the conical annulus")
    x = min(max(x, 0.0), top)
    rho, ur, uz = bg.evaluate(x=x, method=method)
    ur, uz = float(ur), float(uz)
    return z * (uz + s * ur), (uz, ur)
