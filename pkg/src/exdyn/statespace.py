"""Mass sectors, structural maps (exchange, addition, lumping), and measures.

Total mass is conserved by every model here, so all state spaces are unions
of finite sectors of fixed total.  Functions on a sector are dense vectors in
the sector's canonical (lexicographic) order; operators between sectors are
matrices acting on such vectors.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import exact
from .errors import (
    CapacityError,
    ConditioningError,
    LumpabilityError,
    ShapeError,
)
from .exact import Scalar

PairState = tuple[int, int]
PocketState = tuple[int, int, int, int]
State = tuple[int, ...]


@dataclass(frozen=True)
class Space:
    """A product of ``nvars`` nonnegative-integer coordinates, optionally capped."""

    nvars: int
    caps: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.caps is not None and len(self.caps) != self.nvars:
            raise ShapeError("one capacity per variable required")

    @property
    def kind(self) -> str:
        return {1: "single", 2: "pair", 4: "pocket"}.get(self.nvars, f"{self.nvars}-var")

    def contains(self, state: State) -> bool:
        if len(state) != self.nvars or any(x < 0 for x in state):
            return False
        if self.caps is not None and any(x > c for x, c in zip(state, self.caps)):
            return False
        return True

    def sector(self, total: int) -> "Sector":
        return _sector(self, total)


class Sector:
    """All states of a space with fixed coordinate sum, canonically ordered."""

    __slots__ = ("space", "total", "states", "index")

    def __init__(self, space: Space, total: int):
        self.space = space
        self.total = total
        if total < 0:
            states: list[State] = []
        else:
            states = list(_compositions(total, space.nvars, space.caps))
        self.states = tuple(states)
        self.index = {s: i for i, s in enumerate(self.states)}

    @property
    def dim(self) -> int:
        return len(self.states)

    def __repr__(self):
        return f"Sector({self.space.kind}, total={self.total}, dim={self.dim})"


@functools.lru_cache(maxsize=None)
def _sector(space: Space, total: int) -> Sector:
    return Sector(space, total)


def _compositions(total: int, nvars: int, caps: tuple[int, ...] | None):
    if nvars == 1:
        if caps is None or total <= caps[0]:
            yield (total,)
        return
    cap0 = total if caps is None else min(total, caps[0])
    for first in range(cap0 + 1):
        rest_caps = None if caps is None else caps[1:]
        for rest in _compositions(total - first, nvars - 1, rest_caps):
            yield (first,) + rest


def exchange_map(state: PocketState, caps: tuple[int, ...] | None = None) -> PocketState:
    """Swap the two top pockets: (a, b; c, d) -> (c, b; a, d)."""
    swapped = (state[2], state[1], state[0], state[3])
    if caps is not None and (swapped[0] > caps[0] or swapped[2] > caps[2]):
        raise CapacityError(f"exchange of {state} violates capacities {caps}")
    return swapped


def addition_map(state: PocketState) -> PairState:
    """Merge each agent's pockets: (a, b; c, d) -> (a+b, c+d)."""
    return (state[0] + state[1], state[2] + state[3])


def fiber(pair: PairState, caps: tuple[int, ...] | None = None):
    """All pocket states mapping to ``pair`` under the addition map."""
    n1, n2 = pair
    for a in range(n1 + 1):
        for c in range(n2 + 1):
            s = (a, n1 - a, c, n2 - c)
            if caps is None or all(x <= cap for x, cap in zip(s, caps)):
                yield s


def merged_space(space: Space) -> Space:
    """The image space of the merge map (pocket -> pair, or pair -> single)."""
    if space.nvars % 2:
        raise ShapeError("can only merge spaces with an even number of variables")
    half = space.nvars // 2
    caps = None
    if space.caps is not None:
        caps = tuple(space.caps[2 * i] + space.caps[2 * i + 1] for i in range(half))
    return Space(half, caps)


def merge_state(state: State) -> State:
    return tuple(state[i] + state[i + 1] for i in range(0, len(state), 2))


def lift_function(f: Callable[[PairState], Scalar]) -> Callable[[PocketState], Scalar]:
    """Compose a two-agent function with the addition map."""
    return lambda s: f(addition_map(s))


# ---------------------------------------------------------------------------
# measures


@dataclass
class Measure:
    """Per-sector probability weights over a space, normalized within sectors."""

    space: Space
    nmax: int
    blocks: dict[int, np.ndarray] = field(repr=False)

    def weight(self, state: State) -> Scalar:
        sec = self.space.sector(sum(state))
        return self.blocks[sum(state)][sec.index[state]]

    def vector(self, total: int) -> np.ndarray:
        return self.blocks[total]


def product_measure(space: Space, site_weights, nmax: int) -> Measure:
    """Sector-conditioned product measure with per-site weight functions.

    Any common geometric tilt of the site weights cancels in the sector
    normalization, so weights can be given up to such factors.
    """
    if len(site_weights) != space.nvars:
        raise ShapeError("one weight function per variable required")
    blocks = {}
    for total in range(nmax + 1):
        sec = space.sector(total)
        raw = np.array(
            [_prod(w(x) for w, x in zip(site_weights, s)) for s in sec.states],
            dtype=object,
        )
        if sec.dim:
            z = sum(raw)
            if z == 0:
                raise ConditioningError(f"sector {total} has zero total mass")
            raw = np.array([v / z for v in raw], dtype=object)
        blocks[total] = raw
    return Measure(space, nmax, blocks)


def _prod(values):
    out = 1
    for v in values:
        out = out * v
    return out


def push_forward(mu: Measure) -> Measure:
    """Image measure under the merge map (addition map for pockets)."""
    target = merged_space(mu.space)
    blocks = {}
    for total, vec in mu.blocks.items():
        src = mu.space.sector(total)
        dst = target.sector(total)
        out = np.zeros(dst.dim, dtype=object)
        for i, s in enumerate(src.states):
            out[dst.index[merge_state(s)]] += vec[i]
        blocks[total] = out
    return Measure(target, mu.nmax, blocks)


def mu_canonical_inverse(mu: Measure, g: Callable[[PocketState], Scalar]):
    """Conditional expectation of ``g`` given the fibers of the addition map."""
    if mu.space.nvars != 4:
        raise ShapeError("mu must live on pocket states")
    tilde = push_forward(mu)

    def inverse(pair: PairState) -> Scalar:
        total = sum(pair)
        denom = tilde.weight(pair)
        if denom == 0:
            raise ConditioningError(f"zero-mass fiber over {pair}")
        acc = 0
        for s in fiber(pair, mu.space.caps):
            acc += g(s) * mu.weight(s)
        return acc / denom

    return inverse


# ---------------------------------------------------------------------------
# sector operators


class SectorOperator:
    """A family of exact matrices indexed by source sector.

    ``blocks[N]`` maps functions on the domain sector ``N`` to functions on
    the codomain sector ``N + shift``; its shape is (dim out, dim in).
    Operators act on functions: (O f)(x) = sum_y O[x, y] f(y).
    """

    __slots__ = ("domain", "codomain", "shift", "blocks")

    def __init__(self, domain: Space, codomain: Space, shift: int, blocks: dict[int, np.ndarray]):
        self.domain = domain
        self.codomain = codomain
        self.shift = shift
        self.blocks = blocks
        for total, mat in blocks.items():
            want = (codomain.sector(total + shift).dim, domain.sector(total).dim)
            if mat.shape != want:
                raise ShapeError(f"block {total} has shape {mat.shape}, expected {want}")

    @property
    def sectors(self) -> tuple[int, ...]:
        return tuple(sorted(self.blocks))

    def block(self, total: int) -> np.ndarray | None:
        """Stored block, a canonical empty block for negative sectors, else None."""
        if total in self.blocks:
            return self.blocks[total]
        if total < 0:
            return exact.zeros(self.codomain.sector(total + self.shift).dim, 0)
        return None

    def __matmul__(self, other: "SectorOperator") -> "SectorOperator":
        if self.domain != other.codomain:
            raise ShapeError("operator domains do not compose")
        blocks = {}
        for total in other.sectors:
            mine = self.block(total + other.shift)
            if mine is None:
                continue
            blocks[total] = exact.mat_mul(mine, other.blocks[total])
        if not blocks:
            raise ShapeError("no common sector range in composition")
        return SectorOperator(other.domain, self.codomain, self.shift + other.shift, blocks)

    def _zip(self, other: "SectorOperator"):
        if (self.domain, self.codomain, self.shift) != (
            other.domain,
            other.codomain,
            other.shift,
        ):
            raise ShapeError("operators live on different spaces or shifts")
        common = sorted(set(self.blocks) & set(other.blocks))
        if not common:
            raise ShapeError("no common sector range")
        return common

    def __add__(self, other: "SectorOperator") -> "SectorOperator":
        common = self._zip(other)
        return SectorOperator(
            self.domain,
            self.codomain,
            self.shift,
            {n: self.blocks[n] + other.blocks[n] for n in common},
        )

    def __sub__(self, other: "SectorOperator") -> "SectorOperator":
        common = self._zip(other)
        return SectorOperator(
            self.domain,
            self.codomain,
            self.shift,
            {n: self.blocks[n] - other.blocks[n] for n in common},
        )

    def __neg__(self) -> "SectorOperator":
        return self * -1

    def __mul__(self, scalar: Scalar) -> "SectorOperator":
        return SectorOperator(
            self.domain,
            self.codomain,
            self.shift,
            {n: b * scalar for n, b in self.blocks.items()},
        )

    __rmul__ = __mul__

    def restricted(self, sectors) -> "SectorOperator":
        keep = {n: self.blocks[n] for n in sectors if n in self.blocks}
        return SectorOperator(self.domain, self.codomain, self.shift, keep)

    def difference_witness(self, other: "SectorOperator", tol: float | None = None):
        """First differing entry as (sector, row state, col state, lhs, rhs), else None."""
        common = self._zip(other)
        for n in common:
            diff = exact.first_difference(self.blocks[n], other.blocks[n], tol)
            if diff is not None:
                i, j, x, y = diff
                row = self.codomain.sector(n + self.shift).states[i]
                col = self.domain.sector(n).states[j]
                return n, row, col, x, y
        return None

    def equals(self, other: "SectorOperator", tol: float | None = None) -> bool:
        return self.difference_witness(other, tol) is None

    def is_zero(self, tol: float | None = None) -> bool:
        for n, mat in self.blocks.items():
            diff = exact.first_difference(mat, exact.zeros(*mat.shape), tol)
            if diff is not None:
                return False
        return True

    def __repr__(self):
        lo, hi = (min(self.blocks), max(self.blocks)) if self.blocks else (None, None)
        return (
            f"SectorOperator({self.domain.kind}->{self.codomain.kind}, "
            f"shift={self.shift}, sectors=[{lo}..{hi}])"
        )


def identity_operator(space: Space, nmax: int) -> SectorOperator:
    return SectorOperator(
        space, space, 0, {n: exact.identity(space.sector(n).dim) for n in range(nmax + 1)}
    )


def state_map_operator(
    domain: Space, codomain: Space, mapping: Callable[[State], State], nmax: int
) -> SectorOperator:
    """Operator (O f)(x) = f(mapping(x)) for a mass-preserving state map."""
    blocks = {}
    for total in range(nmax + 1):
        dom = domain.sector(total)
        cod = codomain.sector(total)
        mat = exact.zeros(cod.dim, dom.dim)
        for i, s in enumerate(cod.states):
            target = mapping(s)
            if target not in dom.index:
                raise CapacityError(f"state map leaves the sector at {s} -> {target}")
            mat[i, dom.index[target]] = 1
        blocks[total] = mat
    return SectorOperator(domain, codomain, 0, blocks)


def exchange_operator(space: Space, nmax: int) -> SectorOperator:
    """The top-pocket swap as an operator on pocket functions."""
    if space.nvars != 4:
        raise ShapeError("exchange acts on pocket states")
    caps = space.caps
    if caps is not None and caps[0] != caps[2]:
        raise CapacityError(
            f"exchange is not total when top capacities differ: {caps[0]} vs {caps[2]}"
        )
    return state_map_operator(space, space, lambda s: exchange_map(s, caps), nmax)


def permutation_operator(space: Space, perm: tuple[int, ...], nmax: int) -> SectorOperator:
    """(O f)(x) = f(x permuted); valid only if capacities are permutation-consistent."""
    if space.caps is not None:
        permuted_caps = tuple(space.caps[p] for p in perm)
        if permuted_caps != space.caps:
            raise CapacityError("permutation does not preserve capacities")
    return state_map_operator(
        space, space, lambda s: tuple(s[p] for p in perm), nmax
    )


def lift_operator(space: Space, nmax: int) -> SectorOperator:
    """Lift functions through the merge map: pair -> pocket (or single -> pair)."""
    dom = merged_space(space)
    return state_map_operator(dom, space, merge_state, nmax)


def mu_inverse_operator(mu: Measure) -> SectorOperator:
    """The measure-weighted generalized inverse of the lift: rows average fibers."""
    space = mu.space
    target = merged_space(space)
    tilde = push_forward(mu)
    blocks = {}
    for total in range(mu.nmax + 1):
        src = space.sector(total)
        dst = target.sector(total)
        mat = exact.zeros(dst.dim, src.dim)
        tvec = tilde.blocks[total]
        mvec = mu.blocks[total]
        for j, s in enumerate(src.states):
            p = merge_state(s)
            i = dst.index[p]
            if tvec[i] == 0:
                if mvec[j] != 0:
                    raise ConditioningError(f"zero-mass fiber over {p}")
                continue
            mat[i, j] = mvec[j] / tvec[i]
        for i, p in enumerate(dst.states):
            if tvec[i] == 0:
                raise ConditioningError(f"zero-mass fiber over {p}")
        blocks[total] = mat
    return SectorOperator(space, target, 0, blocks)


# ---------------------------------------------------------------------------
# lumping


@dataclass
class LumpCertificate:
    """Outcome of a fiber-constancy check for one operator."""

    lumpable: bool
    sectors: tuple[int, ...]
    witness: dict | None = None


def lump_operator(
    op: SectorOperator, mu: Measure | None = None
) -> tuple[SectorOperator, LumpCertificate]:
    """Push an operator down through the merge map.

    Checks that ``op`` maps lifted functions to lifted functions (rows of
    op . lift constant on fibers); returns the lumped operator and a
    certificate.  Raises :class:`LumpabilityError` with the certificate (and a
    witness naming the fiber and basis function) when the check fails.
    """
    if op.domain != op.codomain:
        raise ShapeError("only endomorphisms can be lumped")
    space = op.domain
    target = merged_space(space)
    nmax = max(op.blocks)
    lift = lift_operator(space, nmax)
    lifted = op @ lift
    blocks = {}
    for total in sorted(lifted.blocks):
        out_sec = space.sector(total + op.shift)
        dst_out = target.sector(total + op.shift)
        dst_in = target.sector(total)
        mat = lifted.blocks[total]
        lumped = exact.zeros(dst_out.dim, dst_in.dim)
        seen = [False] * dst_out.dim
        for i, s in enumerate(out_sec.states):
            p = dst_out.index[merge_state(s)]
            if not seen[p]:
                lumped[p, :] = mat[i, :]
                seen[p] = True
                continue
            diff = exact.first_difference(np.atleast_2d(lumped[p, :]), np.atleast_2d(mat[i, :]))
            if diff is not None:
                _, j, x, y = diff
                cert = LumpCertificate(
                    False,
                    tuple(sorted(lifted.blocks)),
                    witness={
                        "sector": total,
                        "fiber": dst_out.states[p],
                        "states": (
                            _first_state_in_fiber(out_sec, dst_out.states[p]),
                            s,
                        ),
                        "basis_function": dst_in.states[j],
                        "values": (x, y),
                    },
                )
                raise LumpabilityError(
                    f"rows not constant on the fiber over {dst_out.states[p]}", cert
                )
        blocks[total] = lumped
    cert = LumpCertificate(True, tuple(sorted(blocks)))
    lumped_op = SectorOperator(target, target, op.shift, blocks)
    if mu is not None:
        tinv = mu_inverse_operator(mu)
        via_mu = (tinv @ op) @ lift_operator(space, nmax)
        witness = lumped_op.difference_witness(via_mu)
        if witness is not None:
            raise LumpabilityError(f"lumped operator disagrees with measure route: {witness}", cert)
    return lumped_op, cert


def _first_state_in_fiber(sector: Sector, pair: State) -> State:
    for s in sector.states:
        if merge_state(s) == pair:
            return s
    raise KeyError(pair)
