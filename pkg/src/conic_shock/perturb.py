"""Shock-fitted march of the nonlinear perturbation problem.

The unknowns are the perturbation potential phi and its gradient
(w, v, p) = (d_z phi, d_r phi, d_theta phi) on the moving layer between the
cone r = b0 z and the shock r = chi(z, theta).  The layer is mapped to
sigma = (r - b0 z)/(chi - b0 z) in [0, 1]; the shock offset is
xi = chi/z - s0.

Interior nodes use MacCormack predictor-corrector differences (stencil
direction alternating between steps), boundary nodes second-order one-sided
differences, plus a fixed fourth-difference dissipation.  At the cone the
outgoing Riemann invariant is kept and the slip condition d_r phi = b0 d_z phi
imposed.  At the shock the outgoing invariant is kept and the full nonlinear
jump relation is solved by Newton's method; the shock slope then follows from
the mass-flux jump and phi on the shock from continuity of the potential.

Background residuals at xi = 0 are subtracted from both shock relations, so an
unperturbed start stays exactly unperturbed.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _fallback, kernels
from .background import BackgroundSolution, extend_background
from .errors import (
    BlowupError,
    CFLViolation,
    DegeneracyError,
    EntropyError,
    ExtensionExceededError,
    InputError,
)
from .stability import DEFAULT_MU, coefficients_from_state

DEFAULT_DISSIPATION = 0.02
STATIONS_PER_DECADE = 40
DUMP_MAGIC = b"CSFIELD1"


@dataclass
class MarchConfig:
    epsilon: float = 1e-4
    T0: float = 1.0
    z_start: float = 1.0
    z_end: float = 100.0
    n_sigma: int = 64
    n_theta: int = 1
    cfl: float = 0.8
    mu: float = DEFAULT_MU
    support_l: float = 0.4
    seed: int = 0
    xi_amp: float = 0.0
    dissipation: float = DEFAULT_DISSIPATION
    tau_ext_factor: float = 1.0
    table_nodes: int = 2049
    stations_per_decade: int = STATIONS_PER_DECADE
    linear: bool = False
    max_steps: int = 50_000_000

    def __post_init__(self) -> None:
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise InputError("epsilon must be a finite nonnegative number")
        if not self.z_start > 0 or not self.z_end > self.z_start:
            raise InputError("need 0 < z_start < z_end")
        if self.n_sigma < 16:
            raise InputError("n_sigma must be at least 16")
        if not (self.n_theta == 1 or (self.n_theta >= 8 and self.n_theta % 2 == 0)):
            raise InputError("n_theta must be 1 (axisymmetric) or an even number >= 8")
        if not 0 < self.cfl <= 0.9:
            raise InputError("cfl must lie in (0, 0.9]")
        if not self.mu < -1:
            raise InputError("mu must be < -1")
        if not 0 < self.support_l < 1:
            raise InputError("support_l must lie in (0, 1)")
        if not 0 <= self.dissipation < 0.0625:
            raise InputError("dissipation must lie in [0, 1/16)")
        if not self.tau_ext_factor > 0:
            raise InputError("tau_ext_factor must be positive")
        if self.table_nodes < 64:
            raise InputError("table_nodes must be at least 64")

    def smallness_bound(self, b0: float, q0: float, gamma: float) -> float:
        """min(b0^-2 (b0 q0)^-2, b0^-2 (b0 q0)^(-2/(gamma-1))): epsilon should sit well below it."""
        m = b0 * q0
        return min(m**-2.0, m ** (-2.0 / (gamma - 1.0))) / b0**2

    @classmethod
    def from_dict(cls, d: dict) -> "MarchConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown march options: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


# ------------------------------------------------------------------ context


class MarchContext:
    """Background table and scalar parameters shared by every step."""

    def __init__(self, bg: BackgroundSolution, cfg: MarchConfig):
        self.cfg = cfg
        self.gas, self.fs = bg.gas, bg.fs
        self.b0, self.s0, self.delta = bg.b0, bg.s0, bg.delta
        tau_ext = cfg.tau_ext_factor * self.delta
        if bg.tau_ext < tau_ext:
            bg = extend_background(bg, tau_ext, n_ext=max(64, bg.nodes // 4))
        self.bg = bg
        self.tau_ext = tau_ext
        n_in = cfg.table_nodes - 1
        hx = self.delta / n_in
        n_out = int(math.ceil(tau_ext / hx))
        x = hx * np.arange(n_in + n_out + 1)
        x[n_in] = self.delta
        x = np.minimum(x, float(bg.x[-1]))
        rho, ur, uz = bg.evaluate(x=x)
        s = self.b0 + x
        c = coefficients_from_state(self.gas.gamma, self.gas.A, s, rho, ur, uz)
        tab = np.empty((_fallback.N_TAB, x.size))
        tab[_fallback.T_RHO] = rho
        tab[_fallback.T_UR] = ur
        tab[_fallback.T_UZ] = uz
        tab[_fallback.T_C2] = c["c2"]
        for k, name in zip(range(_fallback.T_P1, _fallback.T_P5 + 1), ("P1", "P2", "P3", "P4", "P5")):
            tab[k] = c[name]
        tab[_fallback.T_DUR] = c["d_ur"]
        tab[_fallback.T_DUZ] = c["d_uz"]
        self.tab = np.ascontiguousarray(tab)
        self.hx = hx
        self.x_max = float(x[-1])

        ns, nth = cfg.n_sigma, cfg.n_theta
        prm = np.zeros(_fallback.N_PRM)
        prm[_fallback.I_B0] = self.b0
        prm[_fallback.I_DELTA] = self.delta
        prm[_fallback.I_S0] = self.s0
        prm[_fallback.I_GAMMA] = self.gas.gamma
        prm[_fallback.I_A] = self.gas.A
        prm[_fallback.I_Q0] = self.fs.q0
        prm[_fallback.I_RHO0] = self.fs.rho0
        prm[_fallback.I_C0] = self.fs.C0
        prm[_fallback.I_CFL] = cfg.cfl
        prm[_fallback.I_DISS] = cfg.dissipation
        prm[_fallback.I_MU] = cfg.mu
        prm[_fallback.I_HX] = hx
        prm[_fallback.I_XMAX] = self.x_max
        prm[_fallback.I_DSIG] = 1.0 / (ns - 1)
        prm[_fallback.I_DTH] = 2.0 * math.pi / nth
        self.prm = prm
        self.iprm = np.array([nth, ns, int(cfg.linear), x.size, 0, cfg.max_steps], dtype=np.int64)
        # background values of the two shock relations at xi = 0, evaluated
        # through the same code path the march uses
        ref = _fallback.PyMarch(self.tab, prm, self.iprm)
        bgs = _fallback.interp_table(self.tab, hx, np.array([self.delta]))
        zero = np.zeros(1)
        G, rho, Pr, Pz, _ = ref._rh(bgs, zero, zero, zero, np.array([self.s0]))
        prm[_fallback.I_G0] = G[0]
        prm[_fallback.I_F0] = (rho * Pr / (rho * Pz - self.fs.rho0 * self.fs.q0))[0]

    def py(self, hooks=None) -> _fallback.PyMarch:
        return _fallback.PyMarch(self.tab, self.prm, self.iprm, hooks)

    @property
    def sigma(self) -> np.ndarray:
        s = np.arange(self.cfg.n_sigma) * self.prm[_fallback.I_DSIG]
        s[-1] = 1.0
        return s

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.cfg.n_theta) * self.prm[_fallback.I_DTH]


@dataclass
class PerturbationField:
    """Perturbation on the shock-fitted grid at a single station z."""

    z: float
    sigma: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    w: np.ndarray
    v: np.ndarray
    p: np.ndarray
    xi: np.ndarray
    dchi: np.ndarray
    b0: float
    s0: float

    @property
    def chi(self) -> np.ndarray:
        """Shock radius chi(z, theta)."""
        return (self.s0 + self.xi) * self.z

    @property
    def r(self) -> np.ndarray:
        L = (self.s0 - self.b0) + self.xi
        return self.z * (self.b0 + self.sigma[None, :] * L[:, None])

    def grad_norm(self) -> np.ndarray:
        return np.sqrt(self.w**2 + self.v**2 + (self.p / self.r) ** 2)

    def sup_grad(self) -> float:
        return float(np.max(self.grad_norm()))

    def sup_xi(self) -> float:
        return float(np.max(np.abs(self.xi)))

    def copy(self) -> "PerturbationField":
        return PerturbationField(
            self.z, self.sigma.copy(), self.theta.copy(), self.phi.copy(), self.w.copy(), self.v.copy(),
            self.p.copy(), self.xi.copy(), self.dchi.copy(), self.b0, self.s0,
        )

    def to_bytes(self) -> bytes:
        """Station dump: magic, int64 (n_theta, n_sigma), float64 (z, b0, s0), then
        row-major float64 sigma, theta, phi, w, v, p, xi, dchi."""
        nth, ns = self.w.shape
        head = DUMP_MAGIC + np.array([nth, ns], dtype="<i8").tobytes()
        head += np.array([self.z, self.b0, self.s0], dtype="<f8").tobytes()
        body = b"".join(
            np.ascontiguousarray(a, dtype="<f8").tobytes()
            for a in (self.sigma, self.theta, self.phi, self.w, self.v, self.p, self.xi, self.dchi)
        )
        return head + body

    def write(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "PerturbationField":
        if data[:8] != DUMP_MAGIC:
            raise InputError("not a station dump")
        nth, ns = (int(k) for k in np.frombuffer(data, "<i8", 2, 8))
        z, b0, s0 = (float(k) for k in np.frombuffer(data, "<f8", 3, 24))
        flat = np.frombuffer(data, "<f8", offset=48).copy()
        sizes = [ns, nth] + [nth * ns] * 4 + [nth, nth]
        if flat.size != sum(sizes):
            raise InputError("truncated station dump")
        parts = np.split(flat, np.cumsum(sizes)[:-1])
        sig, th, phi, w, v, p, xi, dchi = parts
        shp = (nth, ns)
        return cls(z, sig, th, phi.reshape(shp), w.reshape(shp), v.reshape(shp), p.reshape(shp), xi, dchi, b0, s0)

    @classmethod
    def read(cls, path) -> "PerturbationField":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def _state(self) -> _fallback.MarchState:
        return _fallback.MarchState(self.w, self.v, self.p, self.phi, self.xi, self.dchi)

    def _assign(self, st: _fallback.MarchState, z: float) -> None:
        self.w, self.v, self.p, self.phi, self.xi, self.dchi = st.W, st.V, st.P, st.PHI, st.XI, st.DCHI
        self.z = z


# ------------------------------------------------------------- initial data


def bump(t):
    """C-infinity bump on (-1, 1), equal to 1 at t = 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


def bump_prime(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti**2)) * (-2.0 * ti / (1.0 - ti**2) ** 2)
    return out


def init_data(ctx: MarchContext) -> PerturbationField:
    """Smooth compactly supported start at z_start.

    phi = eps * l * B(sigma) Theta(theta) / max|B'| and d_z phi = eps * B Theta,
    with l the layer width, so that max|grad phi| lies within [eps, sqrt(2) eps].
    B is a bump on sigma in [1/2 - support_l/2, 1/2 + support_l/2]; Theta is a
    periodic bump centred on a grid angle chosen by ``seed`` (constant when
    axisymmetric).
    """
    cfg = ctx.cfg
    sig, th = ctx.sigma, ctx.theta
    half = 0.5 * cfg.support_l
    t = (sig - 0.5) / half
    B = bump(t)
    dB = bump_prime(t) / half
    tt = np.linspace(-1, 1, 20001)
    dmax = float(np.max(np.abs(bump_prime(tt)))) / half
    if cfg.n_theta == 1:
        Th = np.ones(1)
        dTh = np.zeros(1)
    else:
        rng = np.random.default_rng(cfg.seed)
        th_c = th[int(rng.integers(cfg.n_theta))]
        Th = np.exp(2.0 * (np.cos(th - th_c) - 1.0))
        dTh = -2.0 * np.sin(th - th_c) * Th
    z = cfg.z_start
    ell = ctx.delta * z
    eps = cfg.epsilon
    phi = eps * ell / dmax * Th[:, None] * B[None, :]
    w = eps * Th[:, None] * B[None, :]
    v = eps / dmax * Th[:, None] * dB[None, :]
    p = eps * ell / dmax * dTh[:, None] * B[None, :]
    nth = cfg.n_theta
    xi = np.full(nth, cfg.xi_amp * eps)
    if nth > 1 and cfg.xi_amp != 0.0:
        xi = cfg.xi_amp * eps * Th
    field_ = PerturbationField(
        z, sig, th, phi, w, v, p, xi, np.zeros(nth), ctx.b0, ctx.s0,
    )
    st = field_._state()
    _close(ctx, z, st)
    field_._assign(st, z)
    return field_


# ------------------------------------------------------------ single steps


def _raise(status: int, z: float, detail: str = ""):
    msg = detail or f"march failed at z={z:.6g}"
    if status == _fallback.MARCH_BLOWUP:
        raise BlowupError(msg, z)
    if status == _fallback.MARCH_HYPERBOLICITY:
        raise DegeneracyError(f"{msg} (hyperbolicity lost)")
    if status == _fallback.MARCH_ENTROPY:
        raise EntropyError(msg)
    if status == _fallback.MARCH_EXTENSION:
        raise ExtensionExceededError(f"{msg}: |xi| passed the extended background (tau_ext)")
    if status == _fallback.MARCH_NEWTON:
        raise EntropyError(f"{msg}: jump relation has no nearby root")
    raise BlowupError(msg, z)


def _close(ctx, z, st, hooks=None):
    try:
        ctx.py(hooks).close(z, st)
    except _fallback.MarchFailure as exc:
        _raise(exc.status, exc.z, exc.detail)


def cone_closure(ctx: MarchContext, field_: PerturbationField, hooks=None) -> PerturbationField:
    """Boundary values on the cone and shock after a raw interior update.

    Cone: keeps w + lambda2 v and imposes v = b0 w.  The shock closure runs
    alongside since the two share one pass; see :func:`shock_closure`.
    """
    out = field_.copy()
    st = out._state()
    _close(ctx, out.z, st, hooks)
    out._assign(st, out.z)
    return out


def shock_closure(ctx: MarchContext, field_: PerturbationField, hooks=None) -> dict:
    """Apply the boundary closures and report the two shock-slope routes.

    Returns the closed field plus ``dchi_mass`` (slope from the mass-flux jump)
    and ``dchi_tangent`` (slope from continuity of phi along the shock,
    (q0 - Phi_z)/Phi_r); their difference is the consistency residual.
    """
    out = cone_closure(ctx, field_, hooks)
    bgs = _fallback.interp_table(ctx.tab, ctx.hx, ctx.delta + out.xi)
    ur, uz = bgs[_fallback.T_UR], bgs[_fallback.T_UZ]
    Pr = ur + out.v[:, -1]
    Pz = uz + out.w[:, -1]
    bg0 = _fallback.interp_table(ctx.tab, ctx.hx, np.array([ctx.delta]))
    t0 = (ctx.fs.q0 - bg0[_fallback.T_UZ][0]) / bg0[_fallback.T_UR][0]
    tangent = (ctx.fs.q0 - Pz) / Pr - t0
    return {"field": out, "dchi_mass": out.dchi.copy(), "dchi_tangent": tangent,
            "residual": float(np.max(np.abs(out.dchi - tangent)))}


def cfl_limit(ctx: MarchContext, field_: PerturbationField, cfl: float | None = None) -> float:
    """Largest admissible step at the current state."""
    m = ctx.py()
    try:
        rate = m.rate(field_.z, field_._state())
    except _fallback.MarchFailure as exc:
        _raise(exc.status, exc.z, exc.detail)
    c = ctx.cfg.cfl if cfl is None else cfl
    return c / rate if rate > 0 else math.inf


def interior_step(ctx: MarchContext, field_: PerturbationField, dz: float, mode: int = 0, hooks=None):
    """One predictor-corrector step of size dz, closures included.

    Raises :class:`CFLViolation` if dz exceeds the CFL limit at cfl = 0.9 and
    :class:`BlowupError` on non-finite values.
    """
    if not dz > 0:
        raise InputError("dz must be positive")
    lim = cfl_limit(ctx, field_, 0.9)
    if dz > lim:
        raise CFLViolation(f"dz={dz:.3g} exceeds the CFL limit {lim:.3g}")
    m = ctx.py(hooks)
    try:
        st = m.step(field_.z, dz, field_._state(), mode)
    except _fallback.MarchFailure as exc:
        _raise(exc.status, exc.z, exc.detail)
    out = field_.copy()
    out._assign(st, field_.z + dz)
    return out


# ------------------------------------------------------------------ march


@dataclass
class EnergyReport:
    z: np.ndarray
    sup_grad: np.ndarray
    sup_xi: np.ndarray
    E0: np.ndarray
    E1: np.ndarray
    shock_energy: np.ndarray
    trace_phi: np.ndarray
    trace_w: np.ndarray
    trace_dphi: np.ndarray
    steps: np.ndarray
    epsilon: float
    mu: float
    b0: float
    m0: float = float("nan")
    m0_r2: float = float("nan")
    runtime: float = 0.0
    backend: str = ""
    final: PerturbationField | None = None
    config: dict = field(default_factory=dict)

    def at(self, name: str, z: float) -> float:
        """Value of a recorded series at the station nearest z."""
        k = int(np.argmin(np.abs(np.log(self.z / z))))
        return float(getattr(self, name)[k])

    def weighted_sup(self, m: float = 0.3) -> float:
        """max over stations of z^m sup|grad phi|."""
        return float(np.max(self.z**m * self.sup_grad))

    def decay_fit(self, z_lo: float | None = None, z_hi: float | None = None) -> tuple[float, float]:
        """(m0, r^2) from log sup|grad phi| against log z on [z_lo, z_hi]."""
        z_hi = float(self.z[-1]) if z_hi is None else z_hi
        z_lo = z_hi / 10.0 if z_lo is None else z_lo
        sel = (self.z >= z_lo * (1 - 1e-12)) & (self.z <= z_hi * (1 + 1e-12)) & (self.sup_grad > 0)
        if sel.sum() < 3:
            return float("nan"), float("nan")
        x, y = np.log(self.z[sel]), np.log(self.sup_grad[sel])
        slope, icpt = np.polyfit(x, y, 1)
        resid = y - (slope * x + icpt)
        ss = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
        return float(-slope), r2

    def rows(self) -> list[list]:
        names = ("z", "sup_grad", "sup_xi", "E0", "E1", "shock_energy", "trace_phi", "trace_w", "trace_dphi", "steps")
        return [[name for name in names]] + [
            [float(getattr(self, n)[k]) if n != "steps" else int(self.steps[k]) for n in names]
            for k in range(self.z.size)
        ]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        rows = self.rows()
        wr.writerow(rows[0])
        for row in rows[1:]:
            wr.writerow([repr(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon, "mu": self.mu, "b0": self.b0, "m0": self.m0, "m0_r2": self.m0_r2,
            "runtime": self.runtime, "backend": self.backend, "config": self.config,
            "stations": {k: getattr(self, k).tolist() for k in (
                "z", "sup_grad", "sup_xi", "E0", "E1", "shock_energy", "trace_phi", "trace_w", "trace_dphi", "steps")},
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def stations(z_start: float, z_end: float, per_decade: int = STATIONS_PER_DECADE) -> np.ndarray:
    """Log-spaced record points on (z_start, z_end], anchored at powers of ten."""
    k0 = math.floor(per_decade * math.log10(z_start)) + 1
    k1 = math.ceil(per_decade * math.log10(z_end))
    zs = 10.0 ** (np.arange(k0, k1 + 1) / per_decade)
    zs = zs[(zs > z_start * (1 + 1e-12)) & (zs < z_end * (1 - 1e-12))]
    return np.concatenate((zs, [z_end]))


def run_march(bg: BackgroundSolution, cfg: MarchConfig, hooks=None, dump_dir=None, backend: str | None = None,
              ctx: MarchContext | None = None) -> EnergyReport:
    """March from z_start to z_end and record diagnostics at log-spaced stations.

    ``hooks`` (test sources and boundary data) force the pure-Python path.
    ``dump_dir`` writes the field at every station as ``station_XXXX.bin``
    (layout in :meth:`PerturbationField.to_bytes`).
    """
    bound = cfg.smallness_bound(bg.b0, bg.fs.q0, bg.gas.gamma)
    if cfg.epsilon > 0.1 * bound:
        warnings.warn(
            f"epsilon={cfg.epsilon:g} is not small against the threshold {bound:.3g}; running anyway",
            RuntimeWarning,
            stacklevel=2,
        )
    ctx = MarchContext(bg, cfg) if ctx is None else ctx
    t0 = time.perf_counter()
    f = init_data(ctx)
    W, V, P, PHI = (np.ascontiguousarray(a) for a in (f.w, f.v, f.p, f.phi))
    XI, DCHI = np.ascontiguousarray(f.xi), np.ascontiguousarray(f.dchi)
    acc = np.zeros(_fallback.N_ACC)
    acc[6] = -1.0
    use_py = hooks is not None or backend == "python" or (backend is None and kernels.BACKEND == "python")
    py = ctx.py(hooks) if use_py else None
    st = _fallback.MarchState(W, V, P, PHI, XI, DCHI)
    zs = stations(cfg.z_start, cfg.z_end, cfg.stations_per_decade)
    rec = np.zeros((zs.size + 1, 10))
    z = cfg.z_start
    mode = 0
    total = 0

    def record(k, z, st):
        fld = PerturbationField(z, ctx.sigma, ctx.theta, st.PHI, st.W, st.V, st.P, st.XI, st.DCHI, ctx.b0, ctx.s0)
        rec[k] = (z, fld.sup_grad(), fld.sup_xi(), acc[0], acc[1], acc[2], acc[3], acc[4], acc[5], total)
        if dump_dir is not None:
            fld.write(f"{dump_dir}/station_{k:04d}.bin")

    record(0, z, st)
    for k, zb in enumerate(zs, start=1):
        if use_py:
            try:
                if acc[6] < 0:
                    acc[6:11] = py.integrands(z, st)
                st, z, n, mode = py.segment(z, zb, st, acc, mode)
            except _fallback.MarchFailure as exc:
                _raise(exc.status, exc.z, exc.detail)
        else:
            status, z, n, mode = kernels.march_segment(
                ctx.tab, ctx.prm, ctx.iprm, st.W, st.V, st.P, st.PHI, st.XI, st.DCHI, acc, z, zb, mode
            )
            if status != _fallback.MARCH_OK:
                _raise(status, z)
        total += n
        record(k, z, st)
    final = PerturbationField(z, ctx.sigma, ctx.theta, st.PHI, st.W, st.V, st.P, st.XI, st.DCHI, ctx.b0, ctx.s0)
    rep = EnergyReport(
        z=rec[:, 0], sup_grad=rec[:, 1], sup_xi=rec[:, 2], E0=rec[:, 3], E1=rec[:, 4], shock_energy=rec[:, 5],
        trace_phi=rec[:, 6], trace_w=rec[:, 7], trace_dphi=rec[:, 8], steps=rec[:, 9].astype(np.int64),
        epsilon=cfg.epsilon, mu=cfg.mu, b0=ctx.b0, runtime=time.perf_counter() - t0,
        backend="python" if use_py else kernels.BACKEND, final=final, config=cfg.to_dict(),
    )
    if cfg.epsilon > 0:
        rep.m0, rep.m0_r2 = rep.decay_fit()
    return rep


def energy_diagnostics(rep: EnergyReport, z_mid: float | None = None, tol: float = 0.1) -> dict:
    """Saturation and trace checks on a finished march.

    ``z_mid`` (default z_end/2) is compared with z_end: bounded weighted
    energies should grow by at most ``tol`` over the last doubling.  The
    trace ratio compares int z^(mu-1) phi^2 on the shock with
    (1+b0^2)^2/mu^2 int z^(mu+1) (d_z phi)^2, and the always-valid form with
    4/mu^2 int z^(mu+1) (d phi/dz along the shock)^2.
    """
    z_end = float(rep.z[-1])
    z_mid = z_end / 2.0 if z_mid is None else z_mid
    out = {}
    for name in ("E0", "E1", "shock_energy"):
        a, b = rep.at(name, z_mid), float(getattr(rep, name)[-1])
        ratio = b / a if a > 0 else (1.0 if b == 0 else math.inf)
        out[name + "_ratio"] = ratio
        out[name + "_ok"] = bool(1.0 - 1e-12 <= ratio <= 1.0 + tol) or (a == 0 and b == 0)
    mu2 = rep.mu**2
    hl, hr, ht = float(rep.trace_phi[-1]), float(rep.trace_w[-1]), float(rep.trace_dphi[-1])
    rhs = (1.0 + rep.b0**2) ** 2 / mu2 * hr
    out["trace_ratio"] = hl / rhs if rhs > 0 else (0.0 if hl == 0 else math.inf)
    rhs_t = 4.0 / mu2 * ht
    out["trace_ratio_total"] = hl / rhs_t if rhs_t > 0 else (0.0 if hl == 0 else math.inf)
    out["trace_ok"] = bool(out["trace_ratio_total"] <= 1.0 + 1e-9)
    xi = rep.sup_xi
    sel = rep.z >= 10.0
    if sel.sum() >= 2 and xi[sel].max() > 0:
        seq = xi[sel]
        out["xi_ripple"] = float(np.max(seq[1:] / np.maximum.accumulate(seq)[:-1]) - 1.0)
        out["xi_decreasing"] = bool(out["xi_ripple"] <= 0.05)
    out["m0"], out["m0_r2"] = rep.m0, rep.m0_r2
    out["weighted_sup"] = rep.weighted_sup()
    out["weighted_sup_ok"] = bool(out["weighted_sup"] <= 10.0 * rep.epsilon) if rep.epsilon > 0 else True
    checks = [out["E0_ok"], out["E1_ok"], out["shock_energy_ok"], out["trace_ok"], out["weighted_sup_ok"]]
    if "xi_decreasing" in out:
        checks.append(out["xi_decreasing"])
    if rep.epsilon > 0 and math.isfinite(rep.m0):
        checks.append(rep.m0 >= 0.3 and rep.m0_r2 >= 0.9)
    out["verdict"] = bool(all(checks))
    return out
