"""Nonlinearities f, primitives F, optional slowly-varying weights, and the
asymptotic hypothesis classifier.

Limits at 0 and infinity are estimated on geometric sample grids; verdicts are
three-valued (holds / fails / inconclusive) because numerical sampling cannot
prove a limit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import InvalidParameterError

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(24)


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ExponentSet:
    """Sobolev-type exponents attached to a pair (p, N).

    Fields requiring p < N are None otherwise.
    """

    p: float
    N: int
    p_star: Optional[float]        # Np/(N-p), critical Sobolev exponent
    p_lower: Optional[float]       # (N-1)p/(N-p), Serrin exponent
    p_star_conj: Optional[float]   # conjugate of p_star
    p_conj: float                  # p/(p-1)


def critical_exponents(p: float, N: int) -> ExponentSet:
    if not p > 1:
        raise InvalidParameterError(f"need p > 1, got {p}")
    if not N >= 2:
        raise InvalidParameterError(f"need N >= 2, got {N}")
    p_conj = p / (p - 1.0)
    if p < N:
        p_star = N * p / (N - p)
        p_lower = (N - 1) * p / (N - p)
        p_star_conj = p_star / (p_star - 1.0)
    else:
        p_star = p_lower = p_star_conj = None
    return ExponentSet(p, N, p_star, p_lower, p_star_conj, p_conj)


def _panel_primitive(f: Callable[[np.ndarray], np.ndarray]) -> Callable[[float], float]:
    """Primitive F(t) = int_0^t f by Gauss-Legendre on geometric panels.

    Accurate for smooth f over huge ranges (t up to ~2^60), where a single
    adaptive quadrature call would waste effort or fail.
    """

    def F(t: float) -> float:
        if t <= 0:
            return 0.0
        edges = [0.0]
        x = min(1.0, t)
        edges.append(x)
        while x < t:
            x = min(2.0 * x, t)
            edges.append(x)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            total += half * float(np.dot(_GAUSS_W, f(mid + half * _GAUSS_X)))
        return total

    return F


@dataclass(frozen=True)
class Nonlinearity:
    """A nonlinearity f on [0, inf), its primitive F and an optional positive
    nonincreasing weight used by the refined subcriticality hypotheses."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    F: Callable[[float], float]
    weight: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def __call__(self, s):
        return self.f(np.asarray(s, dtype=float))


# ---------------------------------------------------------------------------
# built-in library

def power(q: float) -> Nonlinearity:
    """f(s) = s^q."""
    return Nonlinearity(
        name=f"power:q={q}",
        f=lambda s: np.power(np.maximum(s, 0.0), q),
        F=lambda t: max(t, 0.0) ** (q + 1) / (q + 1),
        params={"kind": "power", "q": q},
    )


def perturbed_power(q: float) -> Nonlinearity:
    """f(s) = s^q (2 + sin s): growth trapped between s^q and 3 s^q."""
    f = lambda s: np.power(np.maximum(s, 0.0), q) * (2.0 + np.sin(s))
    return Nonlinearity(
        name=f"perturbed-power:q={q}",
        f=f,
        F=_panel_primitive(f),
        params={"kind": "perturbed-power", "q": q},
    )


def log_critical(alpha: float, p: float, N: int) -> Nonlinearity:
    """Critical power damped by a logarithm: f(s) = s^(p*-1) / ln(e+s)^alpha,
    with the natural weight 1/ln(e+s)."""
    exps = critical_exponents(p, N)
    if exps.p_star is None:
        raise InvalidParameterError("log-critical nonlinearity needs p < N")
    q = exps.p_star - 1.0
    f = lambda s: np.power(np.maximum(s, 0.0), q) / np.log(np.e + np.maximum(s, 0.0)) ** alpha
    return Nonlinearity(
        name=f"log-critical:alpha={alpha}",
        f=f,
        F=_panel_primitive(f),
        weight=lambda s: 1.0 / np.log(np.e + np.maximum(s, 0.0)),
        params={"kind": "log-critical", "alpha": alpha, "p": p, "N": N},
    )


def power_plus_linear(q: float, c: float, p: float) -> Nonlinearity:
    """f(s) = s^q + c s^(p-1): linear-at-zero variant of the power family."""
    f = lambda s: np.power(np.maximum(s, 0.0), q) + c * np.power(np.maximum(s, 0.0), p - 1.0)
    return Nonlinearity(
        name=f"power-plus-linear:q={q},c={c}",
        f=f,
        F=lambda t: max(t, 0.0) ** (q + 1) / (q + 1) + c * max(t, 0.0) ** p / p,
        params={"kind": "power-plus-linear", "q": q, "c": c, "p": p},
    )


def constant(c: float = 1.0) -> Nonlinearity:
    return Nonlinearity(
        name=f"constant:c={c}",
        f=lambda s: np.full_like(np.asarray(s, dtype=float), c),
        F=lambda t: c * t,
        params={"kind": "constant", "c": c},
    )


def from_spec(spec: str, p: float = 2.0, N: int = 2) -> Nonlinearity:
    """Parse a CLI/config selector like ``power:q=3`` or ``log-critical:alpha=3``."""
    kind, _, rest = spec.partition(":")
    kw = {}
    if rest:
        for item in rest.split(","):
            k, _, v = item.partition("=")
            kw[k.strip()] = float(v)
    if kind == "power":
        return power(kw.get("q", 3.0))
    if kind == "perturbed-power":
        return perturbed_power(kw.get("q", 2.0))
    if kind == "log-critical":
        return log_critical(kw.get("alpha", 3.0), kw.get("p", p), int(kw.get("N", N)))
    if kind == "power-plus-linear":
        return power_plus_linear(kw.get("q", 3.0), kw.get("c", 1.0), kw.get("p", p))
    if kind == "constant":
        return constant(kw.get("c", 1.0))
    raise InvalidParameterError(f"unknown nonlinearity spec {spec!r}")


# ---------------------------------------------------------------------------
# grids

def _tail_grid(s0: float = 1.0, s_max: float = 2.0 ** 60) -> np.ndarray:
    k_max = int(round(math.log2(s_max / s0)))
    return s0 * 2.0 ** np.arange(0, k_max + 1)


def _tail_half(values: np.ndarray) -> np.ndarray:
    return values[values.size // 2:]


# ---------------------------------------------------------------------------
# hypothesis report and checks

@dataclass
class HypothesisReport:
    h0: Verdict = Verdict.INCONCLUSIVE
    h1: Verdict = Verdict.INCONCLUSIVE
    h2: Verdict = Verdict.INCONCLUSIVE
    h3: Verdict = Verdict.INCONCLUSIVE
    h4: Verdict = Verdict.INCONCLUSIVE
    h3p: Verdict = Verdict.INCONCLUSIVE
    h4p: Verdict = Verdict.INCONCLUSIVE
    h3pp: Verdict = Verdict.INCONCLUSIVE
    h4pp: Verdict = Verdict.INCONCLUSIVE
    h5: Verdict = Verdict.INCONCLUSIVE
    tau: Optional[float] = None
    C1: Optional[float] = None
    C2: Optional[float] = None
    C3: Optional[float] = None
    C4: Optional[float] = None
    C5: Optional[float] = None
    Lambda: Optional[float] = None
    theta: Optional[float] = None
    witnesses: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            if isinstance(v, Verdict):
                out[k] = str(v)
            else:
                out[k] = v
        return out


def check_H1(fn: Nonlinearity, p: float) -> Verdict:
    """Gate: f(0) >= 0, and f > 0 on (0, inf) when p > 2.  Local Lipschitz
    continuity can only be refuted numerically, via difference quotients."""
    f0 = float(fn(0.0))
    if f0 < 0:
        return Verdict.FAILS
    s = np.concatenate([np.geomspace(1e-6, 100.0, 200)])
    vals = fn(s)
    if p > 2 and np.any(vals <= 0):
        return Verdict.FAILS
    # difference quotients on [0, 10]: unbounded growth as ds -> 0 refutes
    ss = np.linspace(0.0, 10.0, 64)
    q1 = np.abs(fn(ss + 1e-4) - fn(ss)) / 1e-4
    q2 = np.abs(fn(ss + 1e-8) - fn(ss)) / 1e-8
    if np.max(q2) > 1e4 * (np.max(q1) + 1.0):
        return Verdict.INCONCLUSIVE
    return Verdict.HOLDS


def estimate_Lambda(fn: Nonlinearity, p: float, s_max: float = 1e6) -> float:
    """Smallest padded Lambda with f(s)/s^(p-1) >= -Lambda on a geometric grid.

    Raises if the H1 gate fails; returns an estimate padded by 10%.
    """
    if check_H1(fn, p) is Verdict.FAILS:
        raise InvalidParameterError("nonlinearity fails the basic sign gate (f(0) >= 0)")
    s = np.geomspace(1e-6, s_max, 600)
    ratio = fn(s) / s ** (p - 1.0)
    lo = float(np.min(ratio))
    if lo >= 0:
        return 0.0
    # unbounded-below detection: still decreasing at both grid ends
    if ratio[-1] == lo and ratio[-1] < ratio[-2] < ratio[-3]:
        raise InvalidParameterError("f(s)/s^(p-1) appears unbounded below on the grid")
    return -lo * 1.1


def check_H0(fn: Nonlinearity, p: float, lambda1: float, margin: float = 1e-6) -> Verdict:
    """limsup_{s->0+} f(s)/s^(p-1) < lambda1 (strict)."""
    if not lambda1 > 0:
        raise InvalidParameterError("need lambda1 > 0")
    s = np.geomspace(1e-8, 1e-2, 240)
    ratio = fn(s) / s ** (p - 1.0)
    # the decade closest to 0 carries the verdict
    tail = ratio[s <= 1e-7]
    pos = np.abs(tail) + 1e-300
    if np.max(pos) / np.min(pos) > 10.0 and np.any(tail > 0) and np.any(tail < 0):
        return Verdict.INCONCLUSIVE
    if float(np.max(tail)) < lambda1 * (1.0 - margin):
        return Verdict.HOLDS
    return Verdict.FAILS


def check_H2(fn: Nonlinearity, p: float) -> tuple[Verdict, Optional[float], Optional[float]]:
    """Superhomogeneous growth: liminf f(s)/s^(p-1+tau) > C1 > 0 for some tau.

    Searches tau over {1, 1/2, ..., 2^-10}; reports the largest that holds and
    the tail minimum as C1.
    """
    s = _tail_grid()
    fv = fn(s)
    floor = 1e-10
    for k in range(0, 11):
        tau = 2.0 ** (-k)
        ratio = fv / s ** (p - 1.0 + tau)
        tail = _tail_half(ratio)
        c1 = float(np.min(tail))
        if c1 > floor:
            return Verdict.HOLDS, tau, c1
    return Verdict.FAILS, None, None


def _tail_liminf_ratio(numer: np.ndarray, denom: np.ndarray) -> tuple[Verdict, Optional[float]]:
    """liminf of numer/denom along the tail half of the grid; INCONCLUSIVE when
    the denominator loses its sign."""
    tn = _tail_half(numer)
    td = _tail_half(denom)
    if np.any(td <= 0):
        return Verdict.INCONCLUSIVE, None
    ratio = tn / td
    return Verdict.HOLDS, float(np.min(ratio))


def check_H3(fn: Nonlinearity, p: float) -> tuple[Verdict, Optional[float]]:
    """liminf F(s)/(s f(s)) > C2 > 0."""
    s = _tail_grid()
    fv = fn(s)
    Fv = np.array([fn.F(t) for t in s])
    verdict, c = _tail_liminf_ratio(Fv, s * fv)
    if verdict is Verdict.INCONCLUSIVE:
        return verdict, None
    if c is not None and c > 1e-6:
        return Verdict.HOLDS, c
    return Verdict.FAILS, c


def check_H3p(fn: Nonlinearity, p: float, N: int) -> tuple[Verdict, Optional[float]]:
    """liminf (p* F(s) - s f(s)) / (s f(s)) > C3 > 0."""
    exps = critical_exponents(p, N)
    if exps.p_star is None:
        raise InvalidParameterError("refined subcriticality needs p < N")
    s = _tail_grid()
    fv = fn(s)
    Fv = np.array([fn.F(t) for t in s])
    verdict, c = _tail_liminf_ratio(exps.p_star * Fv - s * fv, s * fv)
    if verdict is Verdict.INCONCLUSIVE:
        return verdict, None
    if c is not None and c > 1e-6:
        return Verdict.HOLDS, c
    return Verdict.FAILS, c


def check_H3pp(fn: Nonlinearity, p: float, N: int,
               weight: Optional[Callable] = None) -> tuple[Verdict, Optional[float]]:
    """liminf (p* F(s) - s f(s)) / (H(s) s f(s)) > 0 for a nonincreasing
    positive weight H."""
    exps = critical_exponents(p, N)
    if exps.p_star is None:
        raise InvalidParameterError("refined subcriticality needs p < N")
    H = weight if weight is not None else fn.weight
    if H is None:
        H = lambda s: np.ones_like(np.asarray(s, dtype=float))
    s = _tail_grid()
    fv = fn(s)
    Hv = H(s)
    if np.any(Hv <= 0) or np.any(np.diff(Hv) > 1e-12 * np.abs(Hv[:-1])):
        return Verdict.INCONCLUSIVE, None
    Fv = np.array([fn.F(t) for t in s])
    verdict, c = _tail_liminf_ratio(exps.p_star * Fv - s * fv, Hv * s * fv)
    if verdict is Verdict.INCONCLUSIVE:
        return verdict, None
    if c is not None and c > 1e-6:
        return Verdict.HOLDS, c
    return Verdict.FAILS, c


def _vanishing_tail(s: np.ndarray, ratio: np.ndarray) -> Verdict:
    """HOLDS when the tail of a nonnegative ratio decays toward 0.

    Powers die quickly and are caught directly.  Slowly varying decay
    (logarithmic corrections) is resolved by extrapolating the tail linearly
    in 1/ln(s) and reading off the limit.
    """
    tail_s = _tail_half(s)
    tail = _tail_half(np.abs(ratio))
    first = float(tail[0])
    last = float(tail[-1])
    if last < max(1e-6, 1e-3 * first):
        return Verdict.HOLDS
    if last >= first * 0.999:
        return Verdict.FAILS
    if np.any(np.diff(tail) > 1e-12 * tail[:-1]):
        return Verdict.INCONCLUSIVE
    x = 1.0 / np.log(np.e + tail_s)
    intercept = float(np.polyfit(x, tail, 1)[1])
    rel = intercept / first
    if rel < 0.2:
        return Verdict.HOLDS
    if rel > 0.5:
        return Verdict.FAILS
    return Verdict.INCONCLUSIVE


def check_H4(fn: Nonlinearity, p: float) -> tuple[Verdict, Optional[float]]:
    """Polynomial bound: limsup |f(s)|/s^theta finite for some theta > 0.

    theta is fitted from the tail log-log slope and then padded, so the test
    reduces to a vanishing-tail check of |f|/s^theta.
    """
    s = _tail_grid()
    fv = np.abs(fn(s)) + 1e-300
    tail_s = _tail_half(s)
    tail_f = _tail_half(fv)
    slope = np.polyfit(np.log(tail_s), np.log(tail_f), 1)[0]
    if not np.isfinite(slope):
        return Verdict.FAILS, None
    theta = max(slope, 0.0) + 1.0
    verdict = _vanishing_tail(s, fv / s ** theta)
    if verdict is Verdict.HOLDS:
        return Verdict.HOLDS, theta
    return verdict, theta


def check_H4p(fn: Nonlinearity, p: float, N: int) -> Verdict:
    """lim f(s)/s^(p*-1) = 0."""
    exps = critical_exponents(p, N)
    if exps.p_star is None:
        raise InvalidParameterError("refined subcriticality needs p < N")
    s = _tail_grid()
    return _vanishing_tail(s, fn(s) / s ** (exps.p_star - 1.0))


def check_H4pp(fn: Nonlinearity, p: float, N: int,
               weight: Optional[Callable] = None) -> Verdict:
    """lim f(s) / (s^(p*-1) H(s)^(p/(N-p))) = 0."""
    exps = critical_exponents(p, N)
    if exps.p_star is None:
        raise InvalidParameterError("refined subcriticality needs p < N")
    H = weight if weight is not None else fn.weight
    if H is None:
        H = lambda s: np.ones_like(np.asarray(s, dtype=float))
    s = _tail_grid()
    ratio = fn(s) / (s ** (exps.p_star - 1.0) * H(s) ** (p / (N - p)))
    return _vanishing_tail(s, ratio)


def check_H5(fn: Nonlinearity, n_dense: int = 64) -> tuple[Verdict, Optional[float], Optional[float]]:
    """Oscillation control at infinity:
    liminf min_{[s/2, s]} f / f(s) >= C4 > 0 and limsup max_{[0, s]} f / f(s) <= C5.

    Interval extrema are taken by dense sampling (>= n_dense points per
    interval)."""
    s = _tail_half(_tail_grid())
    c4s, c5s = [], []
    for sv in s:
        fv = float(fn(sv))
        if fv <= 0:
            return Verdict.INCONCLUSIVE, None, None
        half = np.linspace(sv / 2.0, sv, n_dense)
        lower = np.concatenate([np.linspace(0.0, sv / 2.0, n_dense), half])
        c4s.append(float(np.min(fn(half))) / fv)
        c5s.append(float(np.max(fn(lower))) / fv)
    c4 = float(np.min(c4s))
    c5 = float(np.max(c5s))
    if c4 > 0 and np.isfinite(c5):
        return Verdict.HOLDS, c4, c5
    return Verdict.FAILS, c4, c5


def classify(fn: Nonlinearity, p: float, N: int,
             lambda1: Optional[float] = None) -> HypothesisReport:
    """Run every hypothesis check and collect verdicts and constants."""
    rep = HypothesisReport()
    rep.grid = {"s_max": 2.0 ** 60, "n_samples": 61, "tail_fraction": 0.5}
    rep.h1 = check_H1(fn, p)
    if rep.h1 is Verdict.FAILS:
        return rep
    try:
        rep.Lambda = estimate_Lambda(fn, p)
    except InvalidParameterError:
        rep.Lambda = None
    if lambda1 is not None:
        rep.h0 = check_H0(fn, p, lambda1)
    rep.h2, rep.tau, rep.C1 = check_H2(fn, p)
    rep.h3, rep.C2 = check_H3(fn, p)
    rep.h4, rep.theta = check_H4(fn, p)
    if p < N:
        rep.h3p, rep.C3 = check_H3p(fn, p, N)
        rep.h4p = check_H4p(fn, p, N)
        rep.h3pp, c3pp = check_H3pp(fn, p, N)
        rep.witnesses["h3pp_liminf"] = c3pp
        rep.h4pp = check_H4pp(fn, p, N)
    rep.h5, rep.C4, rep.C5 = check_H5(fn)
    return rep
