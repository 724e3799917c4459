"""Coefficients of the linearized problem and the multiplier energy checks.

The interior coefficients P1..P5 and the shock coefficients B1..B3 are
evaluated nodewise on a background table.  :func:`multiplier_eval` assembles
the multiplier functions K1..K4, the shock-surface forms and the absorption
constants, and returns a verdict.  :func:`hardy_check` is a standalone
quadrature test of the one-dimensional weighted inequality behind the shock
trace estimate.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .background import BackgroundSolution
from .errors import DegeneracyError, DivisionSafetyError, InputError, InvalidWeightError

DEFAULT_MU = -1.5
BUDGET_FACTOR = 3.0


# ------------------------------------------------------- interior coefficients


def coefficients_from_state(gamma: float, A: float, s, rho, u_r, u_z) -> dict:
    """P1..P5 and P1'..P3' from background values at slopes ``s``.

    Derivatives of the state come from the conical ODE, so P1'..P3' are
    exact chain-rule derivatives of the quotients.
    """
    s = np.asarray(s, dtype=float)
    rho = np.asarray(rho, dtype=float)
    ur = np.asarray(u_r, dtype=float)
    uz = np.asarray(u_z, dtype=float)
    c2 = A * gamma * rho ** (gamma - 1.0)
    g = s * uz - ur
    D = (1.0 + s * s) * c2 - g * g
    delta = uz * uz - c2
    if np.any(delta <= 0) or np.any(D <= 0):
        raise DegeneracyError("u_z^2 - c^2 or the conical denominator is nonpositive")
    d_rho = -rho * ur * g / (s * D)
    d_ur = -c2 * ur / (s * D)
    d_uz = c2 * ur / D
    d_c2 = (gamma - 1.0) * c2 * d_rho / rho
    d_delta = 2.0 * uz * d_uz - d_c2
    gm, gp = 0.5 * (gamma - 1.0), 0.5 * (gamma + 1.0)

    P1 = uz * ur / delta
    P2 = (ur * ur - c2) / delta
    P3 = c2 / delta
    P4 = (-gp * s * s * uz * d_uz + gm * s * uz * d_ur + s * ur * d_uz + gm * uz * ur) / delta
    P5 = (-gm * s * s * ur * d_uz + gp * s * ur * d_ur + s * uz * d_uz + gm * ur * ur - 0.5 * c2) / delta
    dP1 = (d_uz * ur + uz * d_ur) / delta - P1 * d_delta / delta
    dP2 = (2.0 * ur * d_ur - d_c2) / delta - P2 * d_delta / delta
    dP3 = d_c2 / delta - P3 * d_delta / delta
    return {
        "P1": P1, "P2": P2, "P3": P3, "P4": P4, "P5": P5,
        "dP1": dP1, "dP2": dP2, "dP3": dP3,
        "d_rho": d_rho, "d_ur": d_ur, "d_uz": d_uz, "c2": c2,
    }


@dataclass
class LinearCoefficients:
    s: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    P4: np.ndarray
    P5: np.ndarray
    dP1: np.ndarray
    dP2: np.ndarray
    dP3: np.ndarray

    def at(self, name: str, s):
        """Linear interpolation of a tabulated coefficient."""
        return np.interp(s, self.s, getattr(self, name))

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("P1", "P2", "P3", "P4", "P5", "dP1", "dP2", "dP3")}


def linear_coefficients(bg: BackgroundSolution) -> LinearCoefficients:
    c = coefficients_from_state(bg.gas.gamma, bg.gas.A, bg.s, bg.rho, bg.u_r, bg.u_z)
    return LinearCoefficients(bg.s, *(c[k] for k in ("P1", "P2", "P3", "P4", "P5", "dP1", "dP2", "dP3")))


# ------------------------------------------------------------ shock coefficients


@dataclass(frozen=True)
class ShockCoefficients:
    B1: float
    B2: float
    B3: float
    mu1: float
    mu2: float

    def to_dict(self) -> dict:
        return {"B1": self.B1, "B2": self.B2, "B3": self.B3, "mu1": self.mu1, "mu2": self.mu2}


def _shock_b(gas, fs, rho, ur, uz, d_rho, d_ur, d_uz):
    q0, rho0 = fs.q0, fs.rho0
    c2 = gas.A * gas.gamma * rho ** (gas.gamma - 1.0)
    m = ur * ur + uz * (uz - q0)
    B1 = -rho / c2 * m * ur + 2.0 * rho * ur
    B2 = -rho / c2 * m * uz + 2.0 * rho * (uz - q0) + (rho - rho0) * q0
    B3 = rho * (2.0 * ur * d_ur + 2.0 * (uz - q0) * d_uz + q0 * d_uz) + d_rho * m - rho0 * q0 * d_uz
    return B1, B2, B3


def shock_coefficients(bg: BackgroundSolution) -> ShockCoefficients:
    """B1..B3 of the linearized shock condition and mu1 = B2/B1, mu2 = B3/B1."""
    i = bg.i_shock
    gas, fs = bg.gas, bg.fs
    post = bg.fit.post
    c = coefficients_from_state(gas.gamma, gas.A, bg.s0, post.rho, post.u_r, post.u_z)
    B1, B2, B3 = _shock_b(gas, fs, post.rho, post.u_r, post.u_z, c["d_rho"], c["d_ur"], c["d_uz"])
    del i
    scale = post.rho * fs.q0 * (1.0 + abs(post.u_r) / fs.q0)
    if not abs(B1) > 1e-12 * scale:
        raise DivisionSafetyError(f"B1={B1:.3e} too small against scale {scale:.3e}")
    return ShockCoefficients(float(B1), float(B2), float(B3), float(B2 / B1), float(B3 / B1))


# -------------------------------------------------------------- multiplier


def multiplier_b(x, b0: float, b_tilde: float = 1.0):
    """b(s) = s^2 (1 + b_tilde (s - b0)/b0) and b'(s), with x = s - b0."""
    x = np.asarray(x, dtype=float)
    s = b0 + x
    f = 1.0 + b_tilde * x / b0
    return s * s * f, 2.0 * s * f + s * s * b_tilde / b0


def k_functions(s, c: dict, b, db, mu: float, a: float = 1.0) -> tuple:
    """K1..K4 of the multiplier identity for constant a."""
    P1, P2, P3, P4, P5 = c["P1"], c["P2"], c["P3"], c["P4"], c["P5"]
    dP1, dP2, dP3 = c["dP1"], c["dP2"], c["dP3"]
    K1 = 0.5 * db + (-0.5 * mu * s - P1 - s * dP1 + 2.0 * P4) * a
    K2 = s * db + (-P2 + 2.0 * P5 - s * dP2) * a + (-(mu + 1.0) + 2.0 * P4 / s) * b
    K3 = (
        (s * P1 - 0.5 * P2) * db
        + (0.5 * mu * s * P2 - 0.5 * s * s * dP2) * a
        + (-(mu + 1.0) * P1 + s * dP1 - 0.5 * dP2 + 2.0 * P5 / s) * b
    )
    K4 = -0.5 * P3 * db + (-0.5 * mu * s * P3 + 0.5 * s * s * dP3) * a + (P3 / s - 0.5 * dP3) * b
    return K1, K2, K3, K4


def n_form_coefficients(s, a, b, P1, P2, P3) -> dict:
    """Coefficients of N1, N2 (times r^2) in the monomials X^2, XY, Y^2, W^2.

    X = d_z, Y = d_r, W = d_theta / r applied to the perturbation potential.
    """
    return {
        "N1": {"XX": 0.5 * s * a, "XY": b, "YY": b * P1 - 0.5 * s * a * P2, "WW": 0.5 * s * a * P3},
        "N2": {"XX": s * a * P1 - 0.5 * b, "XY": s * a * P2, "YY": 0.5 * b * P2, "WW": 0.5 * b * P3},
    }


def cone_cancellation(b0: float, a: float, b: float, P1: float, P2: float, P3: float) -> dict:
    """b0 N1 - N2 on the cone with Y = b0 X, as coefficients of X^2 and W^2."""
    n = n_form_coefficients(b0, a, b, P1, P2, P3)

    def restrict(form):
        return form["XX"] + b0 * form["XY"] + b0 * b0 * form["YY"], form["WW"]

    x1, w1 = restrict(n["N1"])
    x2, w2 = restrict(n["N2"])
    return {"XX": b0 * x1 - x2, "WW": b0 * w1 - w2}


def lambda_min(s, a, b, P1, P2):
    """Smallest eigenvalue of the N1 form in (d_z, d_r)."""
    p = 0.5 * s * a
    r = b * P1 - 0.5 * s * a * P2
    return 0.5 * (p + r - np.sqrt((p - r) ** 2 + b * b))


@dataclass
class MultiplierReport:
    mu: float
    b_tilde: float
    s: np.ndarray
    a: np.ndarray
    b: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    K3: np.ndarray
    K4: np.ndarray
    discriminant: np.ndarray
    lambda_min: np.ndarray
    lambda_window_ok: bool
    cone_cancellation_residual: float
    beta0: float
    beta1: float
    beta2: float
    beta3: float
    cross: float
    Q1: float
    Q2: float
    Q0: float
    C3: float
    C6: float
    identity_residual: float
    identity_budget: float
    refined_ok: bool
    shock: ShockCoefficients
    checks: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        scal = {
            k: getattr(self, k)
            for k in (
                "mu", "b_tilde", "lambda_window_ok", "cone_cancellation_residual", "beta0", "beta1",
                "beta2", "beta3", "cross", "Q1", "Q2", "Q0", "C3", "C6", "identity_residual",
                "identity_budget", "refined_ok",
            )
        }
        scal = {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in scal.items()}
        scal["verdict"] = bool(self.verdict)
        scal["checks"] = {k: bool(v) for k, v in self.checks.items()}
        scal["shock"] = self.shock.to_dict()
        scal["min_K1"] = float(self.K1.min())
        scal["min_K4"] = float(self.K4.min())
        scal["max_discriminant"] = float(self.discriminant.max())
        scal["min_lambda_min"] = float(self.lambda_min.min())
        scal["nodes"] = {
            k: getattr(self, k).tolist() for k in ("s", "K1", "K2", "K3", "K4", "discriminant", "lambda_min")
        }
        return scal

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "K1", "K2", "K3", "K4", "discriminant", "lambda_min"])
        for row in zip(self.s, self.K1, self.K2, self.K3, self.K4, self.discriminant, self.lambda_min):
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _node_checks(bg, x, mu, b_tilde):
    """Evaluate K's, window and lambda_min at offsets x (interpolated state)."""
    gas = bg.gas
    rho, ur, uz = bg.evaluate(x=x)
    s = bg.b0 + np.asarray(x, dtype=float)
    c = coefficients_from_state(gas.gamma, gas.A, s, rho, ur, uz)
    b, db = multiplier_b(x, bg.b0, b_tilde)
    K = k_functions(s, c, b, db, mu)
    from .background import characteristic_slopes

    l1, l2 = characteristic_slopes(gas, rho, ur, uz)
    ratio = b / s
    ok = bool(
        np.all(K[0] > 0) and np.all(K[3] > 0) and np.all(K[1] ** 2 - 4 * K[0] * K[2] < 0)
        and np.all((l1 < ratio) & (ratio < l2))
    )
    return ok


def remainder_scale(b0: float, q0: float, gamma: float) -> float:
    w = b0 * q0
    return max(w**-2.0, w ** (-2.0 / (gamma - 1.0)))


def multiplier_eval(bg: BackgroundSolution, mu: float = DEFAULT_MU, b_tilde: float = 1.0) -> MultiplierReport:
    """Multiplier conditions, shock-surface forms and absorption constants."""
    if not mu < -1.0:
        raise InvalidWeightError(f"weight exponent mu={mu} must be < -1")
    gas, fs, b0 = bg.gas, bg.fs, bg.b0
    n = bg.i_shock + 1
    x = bg.x[:n]
    s = bg.s[:n]
    c = coefficients_from_state(gas.gamma, gas.A, s, bg.rho[:n], bg.u_r[:n], bg.u_z[:n])
    a = np.ones_like(s)
    b, db = multiplier_b(x, b0, b_tilde)
    K1, K2, K3, K4 = k_functions(s, c, b, db, mu)
    disc = K2 * K2 - 4.0 * K1 * K3
    l1, l2 = bg.lambdas()
    ratio = b / (s * a)
    window = bool(np.all((l1[:n] < ratio) & (ratio < l2[:n])))
    lmin = lambda_min(s, a, b, c["P1"], c["P2"])

    cc = cone_cancellation(b0, 1.0, float(b[0]), c["P1"][0], c["P2"][0], c["P3"][0])
    cone_res = max(abs(cc["XX"]), abs(cc["WW"]))

    sh = shock_coefficients(bg)
    s0 = bg.s0
    P1, P2, P3 = c["P1"][-1], c["P2"][-1], c["P3"][-1]
    bs = float(b[-1])
    beta0 = s0 * P1 - 0.5 * s0 * s0 - 0.5 * bs
    beta1 = s0 * P2 - s0 * bs
    beta2 = 0.5 * P2 * bs - s0 * P1 * bs + 0.5 * s0 * s0 * P2
    beta3 = 0.5 * P3 * (bs - s0 * s0)
    m1 = sh.mu1
    Q1 = beta0 - m1 * beta1 + beta2 * m1 * m1
    Q2 = -beta2
    cross = beta1 - 2.0 * m1 * beta2
    # split the cross term with Young's inequality
    C3 = Q1 - 0.5 * abs(cross)
    C6 = Q2 + 0.5 * abs(cross)
    ur0 = bg.fit.post.u_r
    kappa_b = (sh.mu2 / ur0) ** 2
    kappa_h = 4.0 * (1.0 - m1 * s0) ** 2 / mu**2
    Q0 = C3 - C6 * kappa_b * kappa_h

    ident = abs(C6 * (1.0 + b0**2) ** 2 - 4.0 * b0**2 * C3)
    budget = BUDGET_FACTOR * ((1.0 + b0**2) ** 2 + 4.0) * remainder_scale(b0, fs.q0, gas.gamma)

    # 4x refinement of the first and last eight intervals
    k = min(8, n - 1)
    fine = []
    for lo, hi in ((0, k), (n - 1 - k, n - 1)):
        seg = x[lo : hi + 1]
        sub = np.concatenate([np.linspace(seg[j], seg[j + 1], 5)[:-1] for j in range(len(seg) - 1)] + [seg[-1:]])
        fine.append(sub)
    refined_ok = _node_checks(bg, np.concatenate(fine), mu, b_tilde)

    checks = {
        "K1_positive": bool(np.all(K1 > 0)),
        "K4_positive": bool(np.all(K4 > 0)),
        "discriminant_negative": bool(np.all(disc < 0)),
        "lambda_window": window,
        "Q0_positive": bool(Q0 > 0),
        "refined_spot_check": refined_ok,
    }
    return MultiplierReport(
        mu=mu, b_tilde=b_tilde, s=s, a=a, b=b, K1=K1, K2=K2, K3=K3, K4=K4, discriminant=disc,
        lambda_min=lmin, lambda_window_ok=window, cone_cancellation_residual=float(cone_res),
        beta0=float(beta0), beta1=float(beta1), beta2=float(beta2), beta3=float(beta3),
        cross=float(cross), Q1=float(Q1), Q2=float(Q2), Q0=float(Q0), C3=float(C3), C6=float(C6),
        identity_residual=float(ident), identity_budget=float(budget), refined_ok=refined_ok,
        shock=sh, checks=checks,
    )


def leading_constants(b0: float, gamma: float, mu: float = DEFAULT_MU) -> dict:
    """Closed-form leading orders of Q1 (= C3), Q2 (= C6), Q0 and the K discriminant."""
    E = 1.0 - 0.5 * (gamma - 1.0) * b0**2 * (1.0 + b0**2)
    C3 = (gamma - 1.0) * b0**2 * (1.0 + b0**2) ** 3 / (8.0 * E)
    C6 = (gamma - 1.0) * b0**4 * (1.0 + b0**2) / (2.0 * E)
    return {
        "C3": C3,
        "C6": C6,
        "Q0": C3 * (1.0 - 1.0 / mu**2),
        "discriminant": -0.5 * (gamma - 1.0) * (mu - 1.0) * (mu - 3.0) * b0**4,
    }


# ------------------------------------------------------------------- Hardy


def _as_pair(sample):
    if isinstance(sample, tuple):
        return sample
    f = sample

    def df(z, h=1e-6):
        return (f(z + h) - f(z - h)) / (2 * h)

    return f, df


def hardy_terms(sample, mu: float, T: float, limit: int = 400) -> tuple[float, float, float]:
    """(LHS, derivative term 4/mu^2 * int, boundary phi(1)^2) for one sample."""
    f, df = _as_pair(sample)
    lhs = quad(lambda z: z ** (mu - 1.0) * f(z) ** 2, 1.0, T, limit=limit, epsabs=0.0, epsrel=1e-12)[0]
    dint = quad(lambda z: z ** (mu + 1.0) * df(z) ** 2, 1.0, T, limit=limit, epsabs=0.0, epsrel=1e-12)[0]
    bnd = float(f(1.0)) ** 2
    vals = (lhs, 4.0 / mu**2 * dint, bnd)
    if not all(math.isfinite(v) for v in vals):
        raise InputError("non-finite quadrature in Hardy check")
    return vals


def hardy_ratio(sample, mu: float, T: float, boundary_factor: float = 1.0) -> float:
    lhs, d, bnd = hardy_terms(sample, mu, T)
    rhs = d + boundary_factor * bnd / abs(mu)
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else math.inf
    return lhs / rhs


def hardy_check(samples, mu: float = DEFAULT_MU, T: float = 100.0, boundary_factor: float = 1.0) -> float:
    """Worst LHS/RHS of int z^(mu-1) phi^2 <= 4/mu^2 int z^(mu+1) phi'^2 + c phi(1)^2/|mu|.

    ``boundary_factor`` is c: 1 for the skeleton as usually quoted, 2 for the
    form that survives absorbing half of the left side (always valid).
    Samples are callables or (phi, dphi) pairs.
    """
    if not mu < -1.0:
        raise InvalidWeightError(f"weight exponent mu={mu} must be < -1")
    if not T > 1.0:
        raise InputError("T must exceed 1")
    return max(hardy_ratio(smp, mu, T, boundary_factor) for smp in samples)


def trig_samples(n: int, T: float = 100.0, degree: int = 5, seed: int = 0) -> list:
    """Random trigonometric polynomials in t = 2 pi (z-1)/(T-1), N(0,1) coefficients."""
    rng = np.random.default_rng(seed)
    out = []
    w = 2.0 * math.pi / (T - 1.0)
    k = np.arange(1, degree + 1)
    for _ in range(n):
        a0 = rng.standard_normal()
        ca = rng.standard_normal(degree)
        sa = rng.standard_normal(degree)

        def f(z, a0=a0, ca=ca, sa=sa):
            t = w * (z - 1.0)
            return a0 + float(np.dot(ca, np.cos(k * t)) + np.dot(sa, np.sin(k * t)))

        def df(z, ca=ca, sa=sa):
            t = w * (z - 1.0)
            return w * float(np.dot(k * sa, np.cos(k * t)) - np.dot(k * ca, np.sin(k * t)))

        out.append((f, df))
    return out


def power_sample(p: float):
    """phi = z^p as a (phi, dphi) pair."""
    return (lambda z: z**p, lambda z: p * z ** (p - 1.0))
