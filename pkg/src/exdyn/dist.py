"""Exact probability mass functions for splitting laws and stationary measures.

Everything on the verification path is a :class:`fractions.Fraction`; float
masses appear only for parameters that make the normalization irrational
(non-integer shape of the discrete-Gamma law) and are flagged ``exact=False``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .errors import CapacityError, ParameterError
from .exact import Scalar, rising

_FLOAT_SLACK = 1e-9


def _as_exact(x: Scalar) -> Fraction | float:
    return x if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class Pmf:
    """Finite probability mass function with an optional truncation tail.

    Masses sum exactly to ``1 - tail``; ``tail`` is nonzero only for
    truncated laws and carries the exact (or float) missing mass.
    """

    support: tuple[int, ...]
    mass: tuple[Fraction | float, ...]
    tail: Fraction | float = Fraction(0)

    def __post_init__(self):
        if len(self.support) != len(self.mass):
            raise ParameterError("support and mass must have equal length")
        if any(m < 0 for m in self.mass):
            raise ParameterError("negative probability mass")
        total = sum(self.mass, self.tail * 0) + self.tail
        if self.exact:
            if total != 1:
                raise ParameterError(f"masses sum to {total}, expected 1")
        elif abs(total - 1.0) > _FLOAT_SLACK:
            raise ParameterError(f"masses sum to {total}, expected 1")

    @property
    def exact(self) -> bool:
        return not any(isinstance(m, float) for m in self.mass) and not isinstance(
            self.tail, float
        )

    def prob(self, k: int) -> Fraction | float:
        try:
            return self.mass[self.support.index(k)]
        except ValueError:
            return Fraction(0)

    def mean(self) -> Fraction | float:
        return sum(k * m for k, m in zip(self.support, self.mass))

    def items(self):
        return zip(self.support, self.mass)


def beta_binomial_pmf(n: int, s: Scalar, t: Scalar) -> Pmf:
    """Beta-binomial law of the top part of a wealth-n split.

    pmf(k) = C(n,k) (s)^(k) (t)^(n-k) / (s+t)^(n), via rising factorials so
    rational parameters stay exact.  s = t = 1 is the uniform split.
    """
    if n < 0:
        raise ParameterError("n must be nonnegative")
    if s <= 0 or t <= 0:
        raise ParameterError("beta-binomial parameters must be positive")
    s, t = _as_exact(s), _as_exact(t)
    denom = rising(s + t, n)
    mass = tuple(comb(n, k) * rising(s, k) * rising(t, n - k) / denom for k in range(n + 1))
    return Pmf(tuple(range(n + 1)), mass)


def hypergeometric_pmf(n: int, gamma: int, delta: int) -> Pmf:
    """Hypergeometric law: n coins into two pockets of capacities gamma, delta."""
    if gamma < 0 or delta < 0:
        raise ParameterError("capacities must be nonnegative")
    if not 0 <= n <= gamma + delta:
        raise CapacityError(f"n={n} exceeds total capacity {gamma + delta}")
    total = comb(gamma + delta, n)
    top = min(n, gamma)
    mass = tuple(Fraction(comb(gamma, m) * comb(delta, n - m), total) for m in range(top + 1))
    return Pmf(tuple(range(top + 1)), mass)


def binomial_pmf(n: int, p: Scalar) -> Pmf:
    if n < 0:
        raise ParameterError("n must be nonnegative")
    if not 0 <= p <= 1:
        raise ParameterError("p must lie in [0, 1]")
    p = _as_exact(p)
    q = 1 - p
    mass = tuple(comb(n, k) * p**k * q ** (n - k) for k in range(n + 1))
    return Pmf(tuple(range(n + 1)), mass)


def discrete_gamma_pmf(beta: Scalar, lam: Scalar, nmax: int) -> Pmf:
    """Truncated discrete-Gamma law with exact tail mass.

    Unnormalized weights lam^n (beta)^(n) / n!; the normalization (1-lam)^beta
    is exact for integer beta, otherwise the whole law falls back to floats.
    """
    if not 0 < lam < 1:
        raise ParameterError("lam must lie in (0, 1)")
    if beta <= 0:
        raise ParameterError("beta must be positive")
    if nmax < 0:
        raise ParameterError("nmax must be nonnegative")
    beta_exact = _as_exact(beta)
    integral = isinstance(beta_exact, Fraction) and beta_exact.denominator == 1
    if integral and not isinstance(lam, float):
        lam = Fraction(lam)
        norm = (1 - lam) ** int(beta_exact)
        mass = tuple(
            norm * lam**n * rising(beta_exact, n) / factorial(n) for n in range(nmax + 1)
        )
        tail = 1 - sum(mass)
        return Pmf(tuple(range(nmax + 1)), mass, tail)
    lam_f, beta_f = float(lam), float(beta)
    norm = (1.0 - lam_f) ** beta_f
    mass = tuple(
        norm * lam_f**n * _float_rising(beta_f, n) / factorial(n) for n in range(nmax + 1)
    )
    tail = 1.0 - sum(mass)
    return Pmf(tuple(range(nmax + 1)), mass, tail)


def _float_rising(x: float, m: int) -> float:
    out = 1.0
    for i in range(m):
        out *= x + i
    return out


def sample(pmf: Pmf, rng: np.random.Generator) -> int:
    """One draw from ``pmf``; deterministic given the generator state."""
    u = rng.random()
    acc = 0.0
    for k, m in zip(pmf.support, pmf.mass):
        acc += float(m)
        if u < acc:
            return k
    return pmf.support[-1]


def sample_many(pmf: Pmf, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized draws; same law as repeated :func:`sample` but faster."""
    probs = np.array([float(m) for m in pmf.mass])
    probs /= probs.sum()
    return rng.choice(np.array(pmf.support), size=size, p=probs)
