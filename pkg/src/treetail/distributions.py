"""Scalar distribution primitives.

Every law here exposes the same small surface: inverse-CDF sampling from a
single uniform per draw (so runs are reproducible and quantile-coupled across
scenarios), an exact complementary CDF, and analytic power moments
``E[X^beta]``.

Moments follow a three-way convention:

* a finite float when a closed form (or rigorously bounded summation) exists,
* ``math.inf`` as an explicit infinite marker when ``beta`` reaches the tail
  index of a regularly varying law (never a floating overflow),
* ``None`` when no closed form is available (e.g. fractional moments of a
  shifted law).

Regular variation is modeled with constant slowly varying part only: a law
either has ``tail_index() is None`` (all power moments finite) or satisfies
``P(X > x) ~ tail_scale() * x**(-tail_index())``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, DomainError

__all__ = [
    "Distribution",
    "Constant",
    "Uniform",
    "Exponential",
    "Pareto",
    "ZetaTail",
    "LogNormal",
    "Shifted",
    "dist_from_json",
]

# Exact summation horizon for ZetaTail moments; the remainder past it is
# closed with an Euler-Maclaurin tail whose error is far below 1e-12.
_ZETA_HEAD_TERMS = 1 << 16


def _maybe_scalar(out: np.ndarray, scalar: bool):
    return float(out) if scalar else out


def _prepare(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


class Distribution:
    """Common behavior for all scalar laws."""

    kind: str = "base"

    # -- sampling -----------------------------------------------------------
    def quantile(self, u):
        """Generalized inverse CDF, vectorized over ``u`` in [0, 1)."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.quantile(rng.random()))

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.quantile(rng.random(int(size))), dtype=float)

    # -- analytics ----------------------------------------------------------
    def ccdf(self, x):
        """P(X > x), exact, vectorized over ``x``."""
        raise NotImplementedError

    def moment(self, beta: float):
        """E[X^beta]; float, ``math.inf`` marker, or None (no closed form)."""
        raise NotImplementedError

    def mean(self):
        return self.moment(1.0)

    def moment_is_finite(self, beta: float) -> bool:
        """Whether E[|X|^beta] < infinity, decided analytically (beta > 0)."""
        idx = self.tail_index()
        return idx is None or beta < idx

    # -- structure ----------------------------------------------------------
    def support_min(self) -> float:
        raise NotImplementedError

    def tail_index(self):
        """Regular-variation index of P(X > x), or None for lighter tails."""
        return None

    def tail_scale(self):
        """c with P(X > x) ~ c * x**(-tail_index()), or None."""
        return None

    def is_integer_valued(self) -> bool:
        return False

    # -- serialization ------------------------------------------------------
    def params(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params()}

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({inner})"


@dataclass(frozen=True, repr=False)
class Constant(Distribution):
    value: float
    kind = "constant"

    def quantile(self, u):
        u, scalar = _prepare(u)
        return _maybe_scalar(np.full_like(u, self.value), scalar)

    def ccdf(self, x):
        x, scalar = _prepare(x)
        return _maybe_scalar((x < self.value).astype(float), scalar)

    def moment(self, beta):
        c = self.value
        if beta == 0:
            return 1.0
        if c > 0:
            return float(c) ** beta
        if c == 0:
            return 0.0 if beta > 0 else math.inf
        if float(beta).is_integer():
            return c ** int(beta)
        return None

    def mean(self):
        return float(self.value)

    def support_min(self):
        return float(self.value)

    def is_integer_valued(self):
        return float(self.value).is_integer()

    def params(self):
        return {"value": self.value}


@dataclass(frozen=True, repr=False)
class Uniform(Distribution):
    low: float
    high: float
    kind = "uniform"

    def __post_init__(self):
        if not self.low < self.high:
            raise DomainError("uniform law needs low < high")

    def quantile(self, u):
        u, scalar = _prepare(u)
        return _maybe_scalar(self.low + (self.high - self.low) * u, scalar)

    def ccdf(self, x):
        x, scalar = _prepare(x)
        frac = (self.high - x) / (self.high - self.low)
        return _maybe_scalar(np.clip(frac, 0.0, 1.0), scalar)

    def moment(self, beta):
        a, b = self.low, self.high
        if beta == 1:
            return (a + b) / 2.0
        if a < 0:
            if float(beta).is_integer() and beta > 0:
                k = int(beta)
                return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))
            return None
        if a == 0 and beta <= -1:
            return math.inf
        if beta == -1:
            return math.log(b / a) / (b - a)
        return (b ** (beta + 1) - a ** (beta + 1)) / ((beta + 1) * (b - a))

    def mean(self):
        return (self.low + self.high) / 2.0

    def support_min(self):
        return float(self.low)

    def params(self):
        return {"low": self.low, "high": self.high}


@dataclass(frozen=True, repr=False)
class Exponential(Distribution):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("exponential rate must be positive")

    def quantile(self, u):
        u, scalar = _prepare(u)
        return _maybe_scalar(-np.log1p(-u) / self.rate, scalar)

    def ccdf(self, x):
        x, scalar = _prepare(x)
        return _maybe_scalar(np.where(x < 0, 1.0, np.exp(-self.rate * np.maximum(x, 0.0))), scalar)

    def moment(self, beta):
        if beta <= -1:
            return math.inf
        return math.gamma(beta + 1.0) * self.rate ** (-beta)

    def mean(self):
        return 1.0 / self.rate

    def support_min(self):
        return 0.0

    def params(self):
        return {"rate": self.rate}


@dataclass(frozen=True, repr=False)
class Pareto(Distribution):
    """P(X > x) = (x / x_min)**(-alpha) for x >= x_min."""

    alpha: float
    x_min: float
    kind = "pareto"

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("pareto tail index must be positive")
        if not self.x_min > 0:
            raise DomainError("pareto scale must be positive")

    def quantile(self, u):
        u, scalar = _prepare(u)
        return _maybe_scalar(self.x_min * (1.0 - u) ** (-1.0 / self.alpha), scalar)

    def ccdf(self, x):
        x, scalar = _prepare(x)
        out = np.where(x < self.x_min, 1.0, (np.maximum(x, self.x_min) / self.x_min) ** (-self.alpha))
        return _maybe_scalar(out, scalar)

    def moment(self, beta):
        if beta >= self.alpha:
            return math.inf
        return self.alpha * self.x_min ** beta / (self.alpha - beta)

    def mean(self):
        if self.alpha <= 1:
            return math.inf
        return self.alpha * self.x_min / (self.alpha - 1.0)

    def support_min(self):
        return float(self.x_min)

    def tail_index(self):
        return float(self.alpha)

    def tail_scale(self):
        return float(self.x_min ** self.alpha)

    def params(self):
        return {"alpha": self.alpha, "x_min": self.x_min}


def _zeta_tail_em(alpha: float, beta: float, start: int) -> float:
    """Euler-Maclaurin closure of sum_{k>=start} k^beta (k^-alpha - (k+1)^-alpha)."""

    def psi(t):
        return t ** beta * (t ** -alpha - (1.0 + t) ** -(alpha))

    def psi_prime(t):
        core = t ** -alpha - (1.0 + t) ** -alpha
        return beta * t ** (beta - 1.0) * core + t ** beta * (
            -alpha * t ** (-alpha - 1.0) + alpha * (1.0 + t) ** (-alpha - 1.0)
        )

    integral, _ = integrate.quad(psi, start, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return integral + psi(start) / 2.0 - psi_prime(start) / 12.0


@dataclass(frozen=True, repr=False)
class ZetaTail(Distribution):
    """Discrete power law on {1, 2, ...} with P(X > k) = (1 + k)**(-alpha).

    Note P(X > 0) = 1, so the law never takes the value 0; its probability
    mass is p(k) = k**(-alpha) - (k+1)**(-alpha) for k >= 1.
    """

    alpha: float
    kind = "zeta_tail"

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("zeta tail index must be positive")

    def quantile(self, u):
        # Smallest k with (1+k)^-alpha <= 1-u; the max() guards the u == 0.0
        # float artifact (the law itself puts no mass at 0).
        u, scalar = _prepare(u)
        t = (1.0 - u) ** (-1.0 / self.alpha)
        k = np.maximum(np.ceil(t - 1.0), 1.0)
        return _maybe_scalar(k, scalar)

    def ccdf(self, x):
        x, scalar = _prepare(x)
        out = np.where(x < 0, 1.0, (1.0 + np.floor(np.maximum(x, 0.0))) ** (-self.alpha))
        return _maybe_scalar(out, scalar)

    def moment(self, beta):
        if beta == 0:
            return 1.0
        if beta >= self.alpha:
            return math.inf
        a = self.alpha
        k = np.arange(1, _ZETA_HEAD_TERMS, dtype=float)
        head = math.fsum(k ** beta * (k ** -a - (k + 1.0) ** -a))
        return head + _zeta_tail_em(a, beta, _ZETA_HEAD_TERMS)

    def support_min(self):
        return 1.0

    def is_integer_valued(self):
        return True

    def tail_index(self):
        return float(self.alpha)

    def tail_scale(self):
        # (1 + floor(x))^-alpha ~ x^-alpha with constant 1.
        return 1.0

    def params(self):
        return {"alpha": self.alpha}


@dataclass(frozen=True, repr=False)
class LogNormal(Distribution):
    mu: float
    sigma: float
    kind = "lognormal"

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("lognormal sigma must be positive")

    def quantile(self, u):
        u, scalar = _prepare(u)
        u = np.clip(u, 1e-300, None)
        return _maybe_scalar(np.exp(self.mu + self.sigma * special.ndtri(u)), scalar)

    def ccdf(self, x):
        x, scalar = _prepare(x)
        out = np.where(x <= 0, 1.0, special.ndtr((self.mu - np.log(np.maximum(x, 1e-300))) / self.sigma))
        return _maybe_scalar(out, scalar)

    def moment(self, beta):
        return math.exp(self.mu * beta + 0.5 * self.sigma ** 2 * beta ** 2)

    def support_min(self):
        return 0.0

    def params(self):
        return {"mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True, repr=False)
class Shifted(Distribution):
    """Law of X + offset for an inner law of X.

    This is the one escape hatch for mass below zero (negative offsets),
    which some additive-input laws need.  Fractional moments of a shifted
    law have no closed form in general and report None.
    """

    inner: Distribution
    offset: float
    kind = "shifted"

    def quantile(self, u):
        return self.inner.quantile(u) + self.offset

    def ccdf(self, x):
        x, scalar = _prepare(x)
        return _maybe_scalar(np.asarray(self.inner.ccdf(x - self.offset), dtype=float), scalar)

    def moment(self, beta):
        if beta == 1:
            return self.mean()
        if self.offset == 0:
            return self.inner.moment(beta)
        if float(beta).is_integer() and beta > 1:
            k = int(beta)
            inner_moments = [1.0] + [self.inner.moment(j) for j in range(1, k + 1)]
            if any(m is None for m in inner_moments):
                return None
            if any(math.isinf(m) for m in inner_moments):
                return math.inf if self.offset >= 0 and self.support_min() >= 0 else None
            return math.fsum(
                math.comb(k, j) * self.offset ** (k - j) * inner_moments[j] for j in range(k + 1)
            )
        return None

    def mean(self):
        m = self.inner.mean()
        if m is None:
            return None
        return m + self.offset if not math.isinf(m) else m

    def moment_is_finite(self, beta):
        return self.inner.moment_is_finite(beta)

    def support_min(self):
        return self.inner.support_min() + self.offset

    def is_integer_valued(self):
        return self.inner.is_integer_valued() and float(self.offset).is_integer()

    def tail_index(self):
        return self.inner.tail_index()

    def tail_scale(self):
        # A shift does not change the leading power-law constant.
        return self.inner.tail_scale()

    def params(self):
        return {"inner": self.inner.to_json(), "offset": self.offset}


_KINDS = {
    "constant": (Constant, {"value"}),
    "uniform": (Uniform, {"low", "high"}),
    "exponential": (Exponential, {"rate"}),
    "pareto": (Pareto, {"alpha", "x_min"}),
    "zeta_tail": (ZetaTail, {"alpha"}),
    "lognormal": (LogNormal, {"mu", "sigma"}),
    "shifted": (Shifted, {"inner", "offset"}),
}


def dist_from_json(doc: dict) -> Distribution:
    """Parse a {"kind": ..., "params": {...}} document, rejecting unknown fields."""
    if not isinstance(doc, dict):
        raise ConfigError(f"distribution document must be an object, got {type(doc).__name__}")
    extra = set(doc) - {"kind", "params"}
    if extra:
        raise ConfigError(f"unknown distribution fields: {sorted(extra)}")
    kind = doc.get("kind")
    if kind not in _KINDS:
        raise ConfigError(f"unknown distribution kind: {kind!r}")
    cls, expected = _KINDS[kind]
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("distribution params must be an object")
    if set(params) != expected:
        raise ConfigError(
            f"distribution kind {kind!r} needs params {sorted(expected)}, got {sorted(params)}"
        )
    if kind == "shifted":
        inner = dist_from_json(params["inner"])
        try:
            return Shifted(inner=inner, offset=float(params["offset"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad shifted params: {exc}") from exc
    try:
        return cls(**{key: float(params[key]) for key in expected})
    except DomainError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {kind} params: {exc}") from exc
