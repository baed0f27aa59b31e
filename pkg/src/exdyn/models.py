"""Model families: split laws, transition operators, generators, dualities.

Four families share the split / exchange / merge update; they differ in the
law of the top part of a wealth-n split:

* IEM(s1,t1;s2,t2) - beta-binomial splits (uniform when s=t=1);
* RIEM(g1,d1;g2,d2) - hypergeometric splits into capped pockets;
* RW - symmetric binomial splits, Bin(n, 1/2);
* PIEM(q1,q2) - tilted binomial splits, Bin(n, 1/(1+q)).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import numpy as np

from . import algebra, dist, exact, statespace
from .algebra import SymmetryDescriptor
from .dist import Pmf
from .errors import CapacityError, ModelError, MultiplicityError, ParameterError
from .exact import Scalar, falling, format_scalar, rising
from .statespace import (
    Measure,
    SectorOperator,
    Space,
    exchange_operator,
    lift_operator,
    mu_inverse_operator,
    product_measure,
)


def _scalar(x) -> Fraction | float:
    return x if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class ImmediateExchange:
    """Beta-binomial splitting with per-agent shape pairs (s_i, t_i)."""

    s1: Scalar
    t1: Scalar
    s2: Scalar
    t2: Scalar

    def __post_init__(self):
        for name in ("s1", "t1", "s2", "t2"):
            value = _scalar(getattr(self, name))
            if value <= 0:
                raise ParameterError(f"{name} must be positive")
            object.__setattr__(self, name, value)

    family = "IEM"


@dataclass(frozen=True)
class RestrictedExchange:
    """Hypergeometric splitting into pockets of capacities (g_i, d_i)."""

    g1: int
    d1: int
    g2: int
    d2: int

    def __post_init__(self):
        for name in ("g1", "d1", "g2", "d2"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ParameterError(f"{name} must be a positive integer")
            object.__setattr__(self, name, int(value))

    family = "RIEM"


@dataclass(frozen=True)
class RandomWalkExchange:
    """Symmetric Bin(n, 1/2) splitting."""

    family = "RW"


@dataclass(frozen=True)
class PoissonExchange:
    """Bin(n, 1/(1+q_i)) splitting from asymmetric-walker thermalization."""

    q1: Scalar
    q2: Scalar

    def __post_init__(self):
        for name in ("q1", "q2"):
            value = _scalar(getattr(self, name))
            if value <= 0:
                raise ParameterError(f"{name} must be positive")
            object.__setattr__(self, name, value)

    family = "PIEM"


ModelSpec = ImmediateExchange | RestrictedExchange | RandomWalkExchange | PoissonExchange


def spec_label(spec: ModelSpec) -> str:
    if isinstance(spec, ImmediateExchange):
        p = [format_scalar(x) for x in (spec.s1, spec.t1, spec.s2, spec.t2)]
        return f"IEM({p[0]},{p[1]};{p[2]},{p[3]})"
    if isinstance(spec, RestrictedExchange):
        return f"RIEM({spec.g1},{spec.d1};{spec.g2},{spec.d2})"
    if isinstance(spec, RandomWalkExchange):
        return "RW"
    return f"PIEM({format_scalar(spec.q1)},{format_scalar(spec.q2)})"


def is_exchange_symmetric(spec: ModelSpec) -> bool:
    """Whether the two agents play identical roles (needed on graphs)."""
    if isinstance(spec, ImmediateExchange):
        return spec.s1 == spec.s2 and spec.t1 == spec.t2
    if isinstance(spec, RestrictedExchange):
        return spec.g1 == spec.g2 and spec.d1 == spec.d2
    if isinstance(spec, PoissonExchange):
        return spec.q1 == spec.q2
    return True


def duality_hypothesis_violation(spec: ModelSpec) -> str | None:
    """Why the self-duality theorem's hypothesis fails, if it does."""
    if isinstance(spec, ImmediateExchange) and spec.s1 != spec.s2:
        return f"first split parameters differ: {spec.s1} vs {spec.s2}"
    if isinstance(spec, RestrictedExchange) and spec.g1 != spec.g2:
        return f"top capacities differ: {spec.g1} vs {spec.g2}"
    return None


def pocket_caps(spec: ModelSpec) -> tuple[int, int, int, int] | None:
    if isinstance(spec, RestrictedExchange):
        return (spec.g1, spec.d1, spec.g2, spec.d2)
    return None


def pair_caps(spec: ModelSpec) -> tuple[int, int] | None:
    if isinstance(spec, RestrictedExchange):
        return (spec.g1 + spec.d1, spec.g2 + spec.d2)
    return None


def pocket_space(spec: ModelSpec) -> Space:
    return Space(4, pocket_caps(spec))


def pair_space(spec: ModelSpec) -> Space:
    return Space(2, pair_caps(spec))


@functools.lru_cache(maxsize=None)
def split_pmf(spec: ModelSpec, agent: int, n: int) -> Pmf:
    """Law of the top part when agent ``agent`` (0 or 1) splits wealth n."""
    if isinstance(spec, ImmediateExchange):
        s = (spec.s1, spec.s2)[agent]
        t = (spec.t1, spec.t2)[agent]
        return dist.beta_binomial_pmf(n, s, t)
    if isinstance(spec, RestrictedExchange):
        g = (spec.g1, spec.g2)[agent]
        d = (spec.d1, spec.d2)[agent]
        return dist.hypergeometric_pmf(n, g, d)
    if isinstance(spec, RandomWalkExchange):
        return dist.binomial_pmf(n, Fraction(1, 2))
    q = (spec.q1, spec.q2)[agent]
    return dist.binomial_pmf(n, 1 / (1 + q))


def pocket_site_weights(spec: ModelSpec):
    """Unnormalized per-pocket stationary weights (geometric tilt dropped)."""
    if isinstance(spec, ImmediateExchange):
        params = (spec.s1, spec.t1, spec.s2, spec.t2)
        return tuple(
            (lambda x, b=b: rising(b, x) / factorial(x)) for b in params
        )
    if isinstance(spec, RestrictedExchange):
        caps = (spec.g1, spec.d1, spec.g2, spec.d2)
        return tuple((lambda x, c=c: Fraction(comb(c, x))) for c in caps)
    if isinstance(spec, RandomWalkExchange):
        return tuple(lambda x: Fraction(1, factorial(x)) for _ in range(4))
    coefs = (Fraction(1), spec.q1, Fraction(1), spec.q2)
    return tuple((lambda x, c=c: c**x / factorial(x)) for c in coefs)


def pair_site_weights(spec: ModelSpec):
    """Unnormalized per-agent stationary weights of the merged wealths."""
    if isinstance(spec, ImmediateExchange):
        params = (spec.s1 + spec.t1, spec.s2 + spec.t2)
        return tuple((lambda n, b=b: rising(b, n) / factorial(n)) for b in params)
    if isinstance(spec, RestrictedExchange):
        caps = (spec.g1 + spec.d1, spec.g2 + spec.d2)
        return tuple((lambda n, c=c: Fraction(comb(c, n))) for c in caps)
    if isinstance(spec, RandomWalkExchange):
        return tuple(lambda n: Fraction(1, factorial(n)) for _ in range(2))
    coefs = (1 + spec.q1, 1 + spec.q2)
    return tuple((lambda n, c=c: c**n / factorial(n)) for c in coefs)


@functools.lru_cache(maxsize=None)
def pocket_measure(spec: ModelSpec, nmax: int) -> Measure:
    return product_measure(pocket_space(spec), pocket_site_weights(spec), nmax)


@functools.lru_cache(maxsize=None)
def stationary_pair_measure(spec: ModelSpec, nmax: int) -> Measure:
    return product_measure(pair_space(spec), pair_site_weights(spec), nmax)


@functools.lru_cache(maxsize=None)
def redistribution_operator(spec: ModelSpec, nmax: int) -> SectorOperator:
    """Replace each agent's pockets by a fresh split of that agent's total."""
    space = pocket_space(spec)
    blocks = {}
    for total in range(nmax + 1):
        sec = space.sector(total)
        merged = statespace.merged_space(space).sector(total)
        rows = {}
        for n1, n2 in merged.states:
            row = np.zeros(sec.dim, dtype=object)
            p1 = split_pmf(spec, 0, n1)
            p2 = split_pmf(spec, 1, n2)
            for k1, w1 in p1.items():
                if w1 == 0:
                    continue
                for k2, w2 in p2.items():
                    if w2 == 0:
                        continue
                    row[sec.index[(k1, n1 - k1, k2, n2 - k2)]] += w1 * w2
            rows[(n1, n2)] = row
        mat = exact.zeros(sec.dim, sec.dim)
        for i, s in enumerate(sec.states):
            mat[i, :] = rows[statespace.addition_map(s)]
        blocks[total] = mat
    return SectorOperator(space, space, 0, blocks)


def _direct_transition_blocks(spec: ModelSpec, nmax: int) -> dict[int, np.ndarray]:
    space = pair_space(spec)
    blocks = {}
    for total in range(nmax + 1):
        sec = space.sector(total)
        mat = exact.zeros(sec.dim, sec.dim)
        for i, (n1, n2) in enumerate(sec.states):
            p1 = split_pmf(spec, 0, n1)
            p2 = split_pmf(spec, 1, n2)
            for k1, w1 in p1.items():
                if w1 == 0:
                    continue
                for k2, w2 in p2.items():
                    if w2 == 0:
                        continue
                    target = (k2 + n1 - k1, k1 + n2 - k2)
                    j = sec.index.get(target)
                    if j is None:
                        raise CapacityError(
                            f"update leaves the capped state space: "
                            f"{(n1, n2)} -> {target}"
                        )
                    mat[i, j] += w1 * w2
        blocks[total] = mat
    return blocks


@functools.lru_cache(maxsize=None)
def transition_operator(spec: ModelSpec, nmax: int, method: str = "auto") -> SectorOperator:
    """One-step transition operator on agent wealths (block per mass sector).

    ``method='composed'`` builds lift -> redistribute -> exchange -> average
    by exact operator composition; ``'direct'`` enumerates splits.  The two
    agree wherever both are defined.  Capacity-asymmetric RIEM specs only
    admit the direct route, and only on sectors whose total fits both agents'
    pockets.
    """
    caps = pair_caps(spec)
    asym = isinstance(spec, RestrictedExchange) and spec.g1 != spec.g2
    if asym:
        safe = min(caps)
        if nmax > safe:
            raise CapacityError(
                f"asymmetric top capacities: totals above {safe} leave the state space"
            )
        if method == "composed":
            raise CapacityError("exchange is not total when top capacities differ")
        method = "direct"
    if method == "auto":
        method = "composed"
    if method == "direct":
        return SectorOperator(pair_space(spec), pair_space(spec), 0, _direct_transition_blocks(spec, nmax))
    if method != "composed":
        raise ModelError(f"unknown construction method {method!r}")
    space = pocket_space(spec)
    lift = lift_operator(space, nmax)
    inv = mu_inverse_operator(pocket_measure(spec, nmax))
    exch = exchange_operator(space, nmax)
    redist = redistribution_operator(spec, nmax)
    return inv @ (redist @ (exch @ lift))


def generator(spec: ModelSpec, nmax: int, method: str = "auto") -> SectorOperator:
    """Continuous-time generator: transition operator minus the identity."""
    pi = transition_operator(spec, nmax, method)
    ident = statespace.identity_operator(pair_space(spec), nmax)
    return pi - ident


# ---------------------------------------------------------------------------
# underlying two-site conservative dynamics


def two_site_generator(space: Space, nmax: int, rate_down, rate_up) -> SectorOperator:
    """Conservative generator with jumps (n,m) -> (n-1,m+1) and (n+1,m-1)."""
    blocks = {}
    for total in range(nmax + 1):
        sec = space.sector(total)
        mat = exact.zeros(sec.dim, sec.dim)
        for i, (n, m) in enumerate(sec.states):
            rd = rate_down(n, m)
            ru = rate_up(n, m)
            if rd != 0:
                mat[i, sec.index[(n - 1, m + 1)]] += rd
            if ru != 0:
                mat[i, sec.index[(n + 1, m - 1)]] += ru
            mat[i, i] -= rd + ru
        blocks[total] = mat
    return SectorOperator(space, space, 0, blocks)


def sip_generator(s: Scalar, t: Scalar, nmax: int) -> SectorOperator:
    """Inclusion-process generator: rates n(t+m) down, m(s+n) up."""
    if s <= 0 or t <= 0:
        raise ParameterError("s and t must be positive")
    s, t = _scalar(s), _scalar(t)
    space = Space(2)
    return two_site_generator(space, nmax, lambda n, m: n * (t + m), lambda n, m: m * (s + n))


def sip_generator_abstract(s: Scalar, t: Scalar, nmax: int) -> SectorOperator:
    """The same generator assembled from ladder operators.

    K1(+,s) K2(-,t) + K1(-,s) K2(+,t) - 2 K1(0,s) K2(0,t) + (s t / 2) Id.
    Defined up to sector nmax-1 (the top sector needs blocks beyond range).
    """
    s, t = _scalar(s), _scalar(t)
    space = Space(2)
    kp1 = algebra.k_operator("+", s, 0, space, nmax)
    km1 = algebra.k_operator("-", s, 0, space, nmax)
    k01 = algebra.k_operator("0", s, 0, space, nmax)
    kp2 = algebra.k_operator("+", t, 1, space, nmax)
    km2 = algebra.k_operator("-", t, 1, space, nmax)
    k02 = algebra.k_operator("0", t, 1, space, nmax)
    ident = statespace.identity_operator(space, nmax)
    return (kp1 @ km2) + (km1 @ kp2) - 2 * (k01 @ k02) + (s * t / 2) * ident


def sip_generator_verbatim_components(s: Scalar, t: Scalar, nmax: int):
    """Components of the sign-slipped variant whose down-jump reads f(n-1, m-1).

    That jump drops two units of mass, so the expression is not a
    single-sector operator: it splits into a within-sector piece and a piece
    reading two sectors down (shift +2).  The conservative generator instead
    lands the jump at (n-1, m+1); see :func:`sip_generator`.
    """
    s, t = _scalar(s), _scalar(t)
    space = Space(2)
    diag_blocks = {}
    for total in range(nmax + 1):
        sec = space.sector(total)
        diag = exact.zeros(sec.dim, sec.dim)
        for j, (n, m) in enumerate(sec.states):
            rd = n * (t + m)
            ru = m * (s + n)
            diag[j, j] -= rd + ru
            if ru != 0:
                diag[j, sec.index[(n + 1, m - 1)]] += ru
        diag_blocks[total] = diag
    down_blocks = {}
    for total in range(max(0, nmax - 1)):
        upper = space.sector(total + 2)
        lower = space.sector(total)
        down = exact.zeros(upper.dim, lower.dim)
        for i, (n, m) in enumerate(upper.states):
            rd = n * (t + m)
            if rd != 0 and n >= 1 and m >= 1:
                down[i, lower.index[(n - 1, m - 1)]] += rd
        down_blocks[total] = down
    return (
        SectorOperator(space, space, 0, diag_blocks),
        SectorOperator(space, space, 2, down_blocks),
    )


def rw_generator(q: Scalar, nmax: int) -> SectorOperator:
    """Independent-walker generator: rate q n down, rate m up, conservative."""
    if q <= 0:
        raise ParameterError("q must be positive")
    q = _scalar(q)
    space = Space(2)
    return two_site_generator(space, nmax, lambda n, m: q * n, lambda n, m: m)


def rw_generator_factorized(q: Scalar, nmax: int, verbatim: bool = False) -> SectorOperator:
    """Ladder form of the walker generator: -(q a1 - a2)(a1+ - a2+).

    ``verbatim=True`` builds -(a1 - a2)(a1+ - q a2+) instead, which matches
    the conservative rate matrix only at q = 1 (its diagonal attaches the
    rates to the wrong sites otherwise).
    """
    q = _scalar(q)
    space = Space(2)
    a1 = algebra.ladder_operator("annihilate", 0, space, nmax)
    a2 = algebra.ladder_operator("annihilate", 1, space, nmax)
    c1 = algebra.ladder_operator("create", 0, space, nmax)
    c2 = algebra.ladder_operator("create", 1, space, nmax)
    if verbatim:
        return -1 * ((a1 - a2) @ (c1 - q * c2))
    return -1 * ((q * a1 - a2) @ (c1 - c2))


def sep_generator(gamma: int, delta: int, nmax: int) -> SectorOperator:
    """Exclusion-process generator on sites capped at (gamma, delta)."""
    if gamma < 1 or delta < 1:
        raise ParameterError("capacities must be positive integers")
    space = Space(2, (gamma, delta))
    return two_site_generator(
        space, nmax, lambda n, m: n * (delta - m), lambda n, m: m * (gamma - n)
    )


def thermalize(gen: SectorOperator, total: int) -> Pmf:
    """Unique stationary law of a conservative two-site generator on one sector."""
    if gen.domain.nvars != 2 or gen.shift != 0:
        raise ModelError("thermalization needs a mass-conserving two-site generator")
    block = gen.blocks[total]
    kernel = exact.nullspace(block.T)
    if len(kernel) != 1:
        raise MultiplicityError(
            f"sector {total} has {len(kernel)} stationary distributions"
        )
    vec = kernel[0]
    norm = sum(vec)
    if norm == 0:
        raise MultiplicityError(f"degenerate stationary solve on sector {total}")
    vec = vec / norm
    states = gen.domain.sector(total).states
    return Pmf(tuple(s[0] for s in states), tuple(Fraction(x) for x in vec))


# ---------------------------------------------------------------------------
# duality functions and symmetries


@dataclass(frozen=True)
class DualityFunction:
    """Product kernel D(k; n) = prod_i d_i(k_i, n_i) with per-variable factors."""

    factors: tuple
    family: str
    warning: str | None = None

    def __call__(self, k, n) -> Scalar:
        out = 1
        for d, ki, ni in zip(self.factors, k, n):
            out = out * d(ki, ni)
        return out

    def block(self, sector_k, sector_n) -> np.ndarray:
        mat = exact.zeros(sector_k.dim, sector_n.dim)
        for i, k in enumerate(sector_k.states):
            for j, n in enumerate(sector_n.states):
                mat[i, j] = self(k, n)
        return mat


def _iem_factor(r):
    def d(k, n):
        if k > n:
            return Fraction(0)
        return falling(n, k) / rising(r, k)

    return d


def _riem_factor(r):
    def d(k, n):
        if k > n or n > r:
            return Fraction(0)
        return Fraction(comb(n, k), comb(r, k))

    return d


def _rw_factor():
    def d(k, n):
        return Fraction(falling(n, k))

    return d


def _piem_factor(q):
    def d(k, n):
        if k > n:
            return Fraction(0) if not isinstance(q, float) else 0.0
        return falling(n, k) / (1 + q) ** k

    return d


def _piem_factor_verbatim(q):
    import math

    def d(k, n):
        if k > n:
            return 0.0
        return falling(n, k) * math.exp(1 + float(q)) / float((1 + q) ** n)

    return d


def duality_function(spec: ModelSpec, verbatim: bool = False) -> DualityFunction:
    """The family's factorized self-duality kernel.

    When the relevant symmetry hypothesis fails (first split parameters or
    top capacities differing between agents) the kernel is still returned but
    carries a warning; the self-duality identity then fails with a witness.

    For the Poissonian family the factor is n!/(n-k)! (1+q)^{-k}, the form
    produced by acting with the weighted creation symmetry on the cheap
    duality.  The alternative (1+q)^{-n} e^{1+q} normalization (via
    ``verbatim=True``, floats) satisfies the identity only when q1 = q2,
    since only then does the difference reduce to a factor of the conserved
    totals.
    """
    warning = duality_hypothesis_violation(spec)
    if isinstance(spec, ImmediateExchange):
        factors = (_iem_factor(spec.s1 + spec.t1), _iem_factor(spec.s2 + spec.t2))
        return DualityFunction(factors, spec.family, warning)
    if isinstance(spec, RestrictedExchange):
        factors = (_riem_factor(spec.g1 + spec.d1), _riem_factor(spec.g2 + spec.d2))
        return DualityFunction(factors, spec.family, warning)
    if isinstance(spec, RandomWalkExchange):
        return DualityFunction((_rw_factor(), _rw_factor()), spec.family, warning)
    make = _piem_factor_verbatim if verbatim else _piem_factor
    return DualityFunction((make(spec.q1), make(spec.q2)), spec.family, warning)


def pocket_symmetry_descriptors(spec: ModelSpec) -> tuple[SymmetryDescriptor, ...]:
    """Descriptors of the four-pocket operators commuting with redistribution.

    For the Poissonian family the creation coefficients carry the pocket
    tilts (1, q1; 1, q2); the unweighted sum commutes only when q1 = q2.
    """
    sites = (0, 1, 2, 3)
    if isinstance(spec, ImmediateExchange):
        params = (spec.s1, spec.t1, spec.s2, spec.t2)
        return tuple(SymmetryDescriptor("su11", a, params, sites) for a in "+-0")
    if isinstance(spec, RestrictedExchange):
        params = (spec.g1, spec.d1, spec.g2, spec.d2)
        return tuple(SymmetryDescriptor("su2", a, params, sites) for a in "+-0")
    if isinstance(spec, RandomWalkExchange):
        ones = (Fraction(1),) * 4
        return (
            SymmetryDescriptor("heisenberg", "+", ones, sites),
            SymmetryDescriptor("heisenberg", "-", ones, sites),
        )
    create = (Fraction(1), spec.q1, Fraction(1), spec.q2)
    return (
        SymmetryDescriptor("heisenberg", "+", create, sites),
        SymmetryDescriptor("heisenberg", "-", (Fraction(1),) * 4, sites),
    )


def pair_symmetries(spec: ModelSpec, nmax: int):
    """Lumped symmetries on agent wealths, as (descriptor, operator) pairs."""
    out = []
    for desc in pocket_symmetry_descriptors(spec):
        merged = algebra.merge_descriptor(desc)
        op = algebra.build_symmetry(merged, pair_space(spec), nmax)
        out.append((merged, op))
    return out
