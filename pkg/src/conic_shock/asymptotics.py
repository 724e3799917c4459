"""Hypersonic closed forms and a harness that fits their remainder rates.

Every leading-order expression is paired with the ODE (or coefficient) value it
approximates; :func:`fit_remainder_rate` sweeps q0 and fits the slope of
log(relative error) against log(b0 q0).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .background import BackgroundSolution, b_star, shoot_attached_shock
from .errors import InputError, SupersonicInZViolation, SweepError
from .gas import Freestream, GasModel


@dataclass(frozen=True)
class AsymptoticBackground:
    s0: float
    u_r: float
    u_z: float
    rho: float
    q2_minus_c2: float
    uz2_minus_c2: float
    denominator: float
    ur_prime: float
    uz_prime: float
    lam1_minus_s: float
    lam2_minus_s: float
    rho_prime_bound: float
    g_bound: float
    alpha: float

    def to_dict(self) -> dict:
        return asdict(self)


def _e(b0: float, gamma: float) -> float:
    return 1.0 - 0.5 * (gamma - 1.0) * b0**2 * (1.0 + b0**2)


def _kappa(b0: float, gas: GasModel) -> float:
    g = gas.gamma
    return ((g - 1.0) / (2.0 * gas.A * g * (1.0 + b0**2))) ** (1.0 / (g - 1.0))


def _check(b0: float, gas: GasModel) -> None:
    if not b0 > 0:
        raise InputError("b0 must be positive")
    if b0 >= b_star(gas.gamma):
        raise SupersonicInZViolation(f"b0={b0} >= b_*={b_star(gas.gamma):.6f}")


def background_asymptotics(b0: float, gas: GasModel, fs: Freestream) -> AsymptoticBackground:
    """Leading-order hypersonic background at cone slope b0.

    The denominator (1+s^2)c^2 - (s u_z - u_r)^2 is returned as
    (gamma-1)(b0 q0)^2/2, which is what Bernoulli's law and the density formula
    give; :func:`denominator_printed` carries an extra 1/gamma and is off by
    exactly that factor.
    """
    _check(b0, gas)
    g, q0 = gas.gamma, fs.q0
    w = b0 * q0
    one = 1.0 + b0**2
    derivs = derivative_asymptotics(b0, gas, fs)
    return AsymptoticBackground(
        s0=b0,
        u_r=w / one,
        u_z=q0 / one,
        rho=_kappa(b0, gas) * w ** (2.0 / (g - 1.0)),
        q2_minus_c2=q0**2 * (2.0 - (g - 1.0) * b0**2) / (2.0 * one),
        uz2_minus_c2=q0**2 * _e(b0, g) / one**2,
        denominator=0.5 * (g - 1.0) * w**2,
        ur_prime=derivs["ur_prime"],
        uz_prime=derivs["uz_prime"],
        lam1_minus_s=derivs["lam1_minus_s"],
        lam2_minus_s=derivs["lam2_minus_s"],
        rho_prime_bound=1.0 / b0,
        g_bound=w ** ((g - 3.0) / (g - 1.0)),
        alpha=_kappa(b0, gas) * w ** (2.0 / (g - 1.0)) / fs.rho0,
    )


def denominator_printed(b0: float, gas: GasModel, fs: Freestream) -> float:
    """The variant (gamma-1)/(2 gamma) (b0 q0)^2 with the extra 1/gamma factor."""
    return (gas.gamma - 1.0) / (2.0 * gas.gamma) * (b0 * fs.q0) ** 2


def derivative_asymptotics(b0: float, gas: GasModel, fs: Freestream) -> dict:
    """u_r', u_z', lambda_{1,2} - s and the |rho'| scale at leading order."""
    _check(b0, gas)
    g, q0 = gas.gamma, fs.q0
    one = 1.0 + b0**2
    sq = math.sqrt(g - 1.0)
    root = math.sqrt(2.0 - (g - 1.0) * b0**2)
    den = 2.0 - (g - 1.0) * b0**2 * one
    return {
        "ur_prime": -q0 / one**2,
        "uz_prime": b0 * q0 / one**2,
        "lam1_minus_s": sq * one * b0 * (sq * b0**2 - root) / den,
        "lam2_minus_s": sq * one * b0 * (sq * b0**2 + root) / den,
        "rho_prime_bound": 1.0 / b0,
    }


def coefficient_asymptotics(b0: float, gas: GasModel, fs: Freestream) -> dict:
    """Leading orders of P1..P5, P1'..P3', B1..B3, mu1, mu2 (hypersonic limit)."""
    _check(b0, gas)
    g, q0 = gas.gamma, fs.q0
    E = _e(b0, g)
    one = 1.0 + b0**2
    w = b0 * q0
    k = _kappa(b0, gas)
    return {
        "P1": b0 / E,
        "P2": b0**2 * (0.5 * (3.0 - g) - 0.5 * (g - 1.0) * b0**2) / E,
        "P3": 0.5 * (g - 1.0) * b0**2 * one / E,
        "P4": 0.0,
        "P5": -0.25 * (g - 1.0) * b0**2 * one / E,
        "dP1": (-1.0 + 0.5 * (g - 3.0) * b0**2 - 0.5 * (g - 1.0) * b0**6) / (one * E**2),
        "dP2": (-2.0 * b0 + 2.0 * (g - 2.0) * b0**3 + 2.0 * (g - 1.0) * b0**5) / (one * E**2),
        "dP3": -(g - 1.0) * b0**3 / E**2,
        "B1": 2.0 / one * k * w ** ((g + 1.0) / (g - 1.0)),
        "B2": (1.0 - b0**2) / (b0 * one) * k * w ** ((g + 1.0) / (g - 1.0)),
        "B3": -1.0 / (b0 * one**2) * k * w ** (2.0 * g / (g - 1.0)),
        "mu1": (1.0 - b0**2) / (2.0 * b0),
        "mu2": -q0 / (2.0 * one),
    }


# ------------------------------------------------------------ remainders


@dataclass(frozen=True)
class Quantity:
    """An ODE-side profile, its closed form, and the remainder structure.

    ``pre2`` and ``pre_g`` are the prefactors of the (b0 q0)^-2 and
    (b0 q0)^(-2/(gamma-1)) terms in the stated remainder (0 when absent).
    ``absolute`` marks a quantity whose leading order is zero.
    """

    name: str
    ode: Callable
    asym: Callable
    pre2: Callable = lambda b0: 1.0
    pre_g: Callable = lambda b0: 1.0
    absolute: bool = False


def _bg_slice(bg: BackgroundSolution):
    n = bg.i_shock + 1
    s = bg.s[:n]
    rho, uz, g = bg.rho[:n], bg.u_z[:n], bg.g[:n]
    ur = s * uz - g
    c2 = bg.gas.A * bg.gas.gamma * rho ** (bg.gas.gamma - 1.0)
    return s, rho, ur, uz, g, c2


def _profile(name: str, bg: BackgroundSolution) -> np.ndarray:
    s, rho, ur, uz, g, c2 = _bg_slice(bg)
    if name == "s0":
        return np.array([bg.s0])
    if name == "u_r":
        return ur
    if name == "u_z":
        return uz
    if name == "rho":
        return rho
    if name == "q2_minus_c2":
        return ur**2 + uz**2 - c2
    if name == "uz2_minus_c2":
        return uz**2 - c2
    if name == "denominator":
        return (1.0 + s * s) * c2 - g * g
    n = bg.i_shock + 1
    if name in ("ur_prime", "uz_prime"):
        _, d_ur, d_uz = bg.derivatives()
        return (d_ur if name == "ur_prime" else d_uz)[:n]
    if name in ("lam1_minus_s", "lam2_minus_s"):
        l1, l2 = bg.lambdas()
        return (l1 if name == "lam1_minus_s" else l2)[:n] - s
    raise KeyError(name)


def _coef_profile(name: str, bg: BackgroundSolution) -> np.ndarray:
    from .stability import linear_coefficients, shock_coefficients

    if name in ("B1", "B2", "B3", "mu1", "mu2"):
        return np.array([getattr(shock_coefficients(bg), name)])
    lc = linear_coefficients(bg)
    return getattr(lc, name)[: bg.i_shock + 1]


_BG_NAMES = (
    "s0", "u_r", "u_z", "rho", "q2_minus_c2", "uz2_minus_c2", "denominator",
    "ur_prime", "uz_prime", "lam1_minus_s", "lam2_minus_s",
)
_ONLY_G = ("s0", "u_r", "u_z")


def _registry() -> dict[str, Quantity]:
    reg: dict[str, Quantity] = {}
    for name in _BG_NAMES:
        reg[name] = Quantity(
            name,
            ode=(lambda bg, n=name: _profile(n, bg)),
            asym=(lambda b0, gas, fs, n=name: getattr(background_asymptotics(b0, gas, fs), n)),
            pre2=(lambda b0: 0.0) if name in _ONLY_G else (lambda b0: 1.0),
        )
    for name in ("P1", "P2", "P3", "P4", "P5", "dP1", "dP2", "dP3", "B1", "B2", "B3", "mu1", "mu2"):
        pre_g = lambda b0: 1.0  # noqa: E731
        pre2 = lambda b0: 1.0  # noqa: E731
        if name == "dP3":
            pre_g = lambda b0: 1.0 / b0**2  # noqa: E731
        if name in ("B3", "mu2"):
            pre2 = pre_g = lambda b0: 1.0 / b0  # noqa: E731
        reg[name] = Quantity(
            name,
            ode=(lambda bg, n=name: _coef_profile(n, bg)),
            asym=(lambda b0, gas, fs, n=name: coefficient_asymptotics(b0, gas, fs)[n]),
            pre2=pre2,
            pre_g=pre_g,
            absolute=(name == "P4"),
        )
    return reg


QUANTITIES = _registry()


def dominant_remainder(name: str, b0: float, q0: float, gamma: float) -> float:
    """Magnitude of the larger remainder term attached to ``name``."""
    q = QUANTITIES[name]
    w = b0 * q0
    return max(q.pre2(b0) * w**-2.0, q.pre_g(b0) * w ** (-2.0 / (gamma - 1.0)))


def expected_exponent(gamma: float) -> float:
    """-min(2, 2/(gamma-1)): the combined-remainder rule used for acceptance."""
    return -min(2.0, 2.0 / (gamma - 1.0))


def stated_exponent(name: str, gamma: float) -> float:
    """Decay exponent of the remainder actually stated for ``name``.

    s0, u_r and u_z carry only the (b0 q0)^(-2/(gamma-1)) term.
    """
    q = QUANTITIES[name]
    terms = []
    if q.pre2(1.0) != 0.0:
        terms.append(-2.0)
    if q.pre_g(1.0) != 0.0:
        terms.append(-2.0 / (gamma - 1.0))
    return max(terms)


def relative_error(name: str, bg: BackgroundSolution) -> tuple[float, float, float]:
    """(worst relative error over [b0, s0], ODE value there, closed form)."""
    q = QUANTITIES[name]
    asym = q.asym(bg.b0, bg.gas, bg.fs)
    if name == "s0":
        return bg.delta / bg.b0, bg.s0, asym
    prof = np.atleast_1d(q.ode(bg))
    if q.absolute:
        i = int(np.argmax(np.abs(prof)))
        return float(abs(prof[i])), float(prof[i]), asym
    err = np.abs(prof / asym - 1.0)
    i = int(np.argmax(err))
    return float(err[i]), float(prof[i]), asym


@dataclass
class RateFit:
    quantity: str
    exponent_fitted: float
    exponent_expected: float
    r_squared: float
    b0: float = math.nan
    gamma: float = math.nan
    q0: list = field(default_factory=list)
    b0q0: list = field(default_factory=list)
    rel_error: list = field(default_factory=list)
    ode_value: list = field(default_factory=list)
    asym_value: list = field(default_factory=list)
    constant: float = math.nan

    @property
    def passed(self) -> bool:
        tol = 0.25 * abs(self.exponent_expected)
        return bool(abs(self.exponent_fitted - self.exponent_expected) <= tol and self.r_squared >= 0.95)

    def summary(self) -> dict:
        return {
            "quantity": self.quantity,
            "b0": self.b0,
            "gamma": self.gamma,
            "exponent_fitted": self.exponent_fitted,
            "exponent_expected": self.exponent_expected,
            "r_squared": self.r_squared,
            "empirical_constant": self.constant,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=1)

    def rows(self) -> list[tuple]:
        return [
            (self.quantity, q, w, o, a, e)
            for q, w, o, a, e in zip(self.q0, self.b0q0, self.ode_value, self.asym_value, self.rel_error)
        ]


def log_fit(x, y) -> tuple[float, float, float]:
    """Least-squares slope, intercept and r^2 of log y against log x."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    slope, icpt = np.polyfit(lx, ly, 1)
    pred = slope * lx + icpt
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), r2


def fit_remainder_rate(
    quantity: str,
    b0: float,
    gas: GasModel,
    q0_list,
    rho0: float = 1.0,
    expected: float | None = None,
    n_nodes: int = 2000,
) -> RateFit:
    """Fit the decay exponent of the relative error of ``quantity`` over a q0 sweep."""
    if quantity not in QUANTITIES:
        raise InputError(f"unknown quantity {quantity!r}")
    q0s = [float(q) for q in q0_list]
    if len(q0s) < 4:
        raise InputError("need at least four q0 values")
    if any(b > a for a, b in zip(q0s[1:], q0s[:-1])):
        raise InputError("q0_list must be sorted")
    if q0s[-1] / q0s[0] < 10.0 * (1 - 1e-12):
        raise InputError("q0_list must span at least one decade")
    errs, odes, asyms = [], [], []
    for q0 in q0s:
        try:
            fs = Freestream(gas, q0, rho0)
            bg = shoot_attached_shock(b0, gas, fs, n_nodes=n_nodes)
            e, o, a = relative_error(quantity, bg)
        except SweepError:
            raise
        except Exception as exc:  # identify the failing speed
            raise SweepError(f"{quantity}: solve failed at q0={q0}: {exc}", q0) from exc
        errs.append(e)
        odes.append(o)
        asyms.append(a)
    w = [b0 * q for q in q0s]
    slope, icpt, r2 = log_fit(w, errs)
    exp_ = expected_exponent(gas.gamma) if expected is None else expected
    const = float(np.max(np.asarray(errs) / np.asarray(w) ** exp_))
    return RateFit(
        quantity, slope, exp_, r2, b0=b0, gamma=gas.gamma, q0=q0s, b0q0=w,
        rel_error=errs, ode_value=odes, asym_value=asyms, constant=const,
    )


def synthetic_fit(b0q0, errors, expected: float, quantity: str = "synthetic") -> RateFit:
    slope, _, r2 = log_fit(b0q0, errors)
    return RateFit(quantity, slope, expected, r2, b0q0=list(b0q0), rel_error=list(errors))


def report_csv(fits, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "q0", "b0q0", "ode_value", "asym_value", "rel_error"])
    for f in fits:
        for row in f.rows():
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def report_json(fits, path=None) -> str:
    text = json.dumps([f.summary() for f in fits], indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def g_bound_constant(bg: BackgroundSolution) -> float:
    """Empirical constant K in 0 <= s u_z - u_r <= K (b0 q0)^((gamma-3)/(gamma-1))."""
    gm = bg.gas.gamma
    n = bg.i_shock + 1
    return float(np.max(bg.g[:n]) / (bg.b0 * bg.fs.q0) ** ((gm - 3.0) / (gm - 1.0)))


def rho_prime_constant(bg: BackgroundSolution) -> float:
    """Empirical K in |rho'| <= K / b0."""
    d_rho, _, _ = bg.derivatives()
    return float(np.max(np.abs(d_rho[: bg.i_shock + 1])) * bg.b0)
