"""Ladder-operator representations and their sector-block realizations.

Three families act on one site of a multi-variable space:

* raising/lowering/diagonal triples with a positive real parameter (the
  inclusion-process family), satisfying [K+, K-] = 2 K0, [K+-, K0] = +-K+-;
* capped spin triples with a positive integer parameter (the exclusion
  family), satisfying [J+, J-] = 2 J0, [J0, J+-] = +-J+-;
* plain creation/annihilation pairs with [a^dag, a] = 1.

Operators act on functions, so a raising operator (which reads f at n+1)
shifts state sectors by -1 and a lowering operator by +1.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import exact
from .errors import CapacityError, DescriptorError, ParameterError, ShapeError
from .exact import Scalar
from .statespace import SectorOperator, Space, merged_space


def _single_site(
    space: Space,
    site: int,
    nmax: int,
    shift: int,
    coeff: Callable[[int], Scalar],
) -> SectorOperator:
    """Build (O f)(x) = coeff(x_site) * f(x -+ e_site) blockwise.

    ``shift = -1`` reads the site one step up (raising), ``+1`` one step down
    (lowering), ``0`` multiplies in place.
    """
    if not 0 <= site < space.nvars:
        raise ShapeError(f"site {site} outside space with {space.nvars} variables")
    blocks = {}
    for total in range(nmax + 1):
        dom = space.sector(total)
        cod = space.sector(total + shift)
        mat = exact.zeros(cod.dim, dom.dim)
        for i, x in enumerate(cod.states):
            c = coeff(x[site])
            if c == 0:
                continue
            read = list(x)
            read[site] -= shift  # shift -1 reads x+e, shift +1 reads x-e
            read_t = tuple(read)
            j = dom.index.get(read_t)
            if j is not None:
                mat[i, j] = c
        blocks[total] = mat
    return SectorOperator(space, space, shift, blocks)


def k_operator(alpha: str, kappa: Scalar, site: int, space: Space, nmax: int) -> SectorOperator:
    """One-site generator of the positive-discrete-series ladder triple."""
    if kappa <= 0:
        raise ParameterError("kappa must be positive")
    kappa = kappa if isinstance(kappa, float) else Fraction(kappa)
    if alpha == "+":
        return _single_site(space, site, nmax, -1, lambda n: kappa + n)
    if alpha == "-":
        return _single_site(space, site, nmax, +1, lambda n: n)
    if alpha == "0":
        return _single_site(space, site, nmax, 0, lambda n: kappa / 2 + n)
    raise DescriptorError(f"unknown alpha {alpha!r}")


def j_operator(
    alpha: str,
    gamma: int,
    site: int,
    space: Space,
    nmax: int,
    verbatim: bool = False,
) -> SectorOperator:
    """One-site spin operator on a site capped at ``gamma``.

    The raising action reads forward, J+ f(n) = (gamma - n) f(n+1); only this
    version closes the spin algebra.  ``verbatim=True`` builds the
    backward-reading variant (gamma - n) f(n-1), an easy sign slip that the
    relation checker is expected to catch; it shifts sectors the wrong way
    and cannot satisfy the bracket relations.
    """
    if gamma < 1 or int(gamma) != gamma:
        raise ParameterError("gamma must be a positive integer")
    if space.caps is None or space.caps[site] != gamma:
        raise CapacityError(
            f"site {site} must be capped at {gamma}, space caps are {space.caps}"
        )
    gamma = int(gamma)
    if alpha == "+":
        if verbatim:
            return _single_site(space, site, nmax, +1, lambda n: gamma - n)
        return _single_site(space, site, nmax, -1, lambda n: gamma - n)
    if alpha == "-":
        return _single_site(space, site, nmax, +1, lambda n: n)
    if alpha == "0":
        return _single_site(space, site, nmax, 0, lambda n: Fraction(gamma, 2) - n)
    raise DescriptorError(f"unknown alpha {alpha!r}")


def ladder_operator(kind: str, site: int, space: Space, nmax: int) -> SectorOperator:
    """Creation (a^dag f(n) = f(n+1)) or annihilation (a f(n) = n f(n-1))."""
    if kind in ("create", "+"):
        return _single_site(space, site, nmax, -1, lambda n: 1)
    if kind in ("annihilate", "-"):
        return _single_site(space, site, nmax, +1, lambda n: n)
    raise DescriptorError(f"unknown ladder kind {kind!r}")


def site_sum(operators) -> SectorOperator:
    """Exact sum of single-site operators on a common space."""
    operators = list(operators)
    if not operators:
        raise ShapeError("empty site sum")
    out = operators[0]
    for op in operators[1:]:
        out = out + op
    return out


@dataclass(frozen=True)
class SymmetryDescriptor:
    """A sum of same-flavor single-site operators with per-site parameters.

    ``algebra`` is one of ``su11`` (parameters kappa > 0), ``su2`` (integer
    caps), ``heisenberg`` (scalar coefficients on a^dag / a).  ``alpha`` is
    '+', '-' or '0' ('0' is invalid for heisenberg).
    """

    algebra: str
    alpha: str
    params: tuple[Scalar, ...]
    sites: tuple[int, ...]

    def __post_init__(self):
        if self.algebra not in ("su11", "su2", "heisenberg"):
            raise DescriptorError(f"unknown algebra {self.algebra!r}")
        if len(self.params) != len(self.sites):
            raise DescriptorError("one parameter per site required")
        if self.algebra == "heisenberg" and self.alpha == "0":
            raise DescriptorError("heisenberg has no diagonal member")
        if self.algebra == "su2" and any(int(p) != p or p < 1 for p in self.params):
            raise DescriptorError("su2 parameters must be positive integers")
        if self.algebra == "su11" and any(p <= 0 for p in self.params):
            raise DescriptorError("su11 parameters must be positive")


def build_symmetry(desc: SymmetryDescriptor, space: Space, nmax: int) -> SectorOperator:
    """Realize a descriptor as a sector operator on ``space``."""
    singles = []
    for param, site in zip(desc.params, desc.sites):
        if desc.algebra == "su11":
            singles.append(k_operator(desc.alpha, param, site, space, nmax))
        elif desc.algebra == "su2":
            singles.append(j_operator(desc.alpha, int(param), site, space, nmax))
        else:
            kind = "create" if desc.alpha == "+" else "annihilate"
            singles.append(param * ladder_operator(kind, site, space, nmax))
    return site_sum(singles)


def merge_descriptor(desc: SymmetryDescriptor) -> SymmetryDescriptor:
    """Parameters of the symmetry after lumping adjacent site pairs.

    Ladder parameters add; creation coefficients add; annihilation
    coefficients must agree within each merged pair and are kept.
    """
    if len(desc.sites) % 2:
        raise DescriptorError("lumping merges sites pairwise")
    if tuple(desc.sites) != tuple(range(len(desc.sites))):
        raise DescriptorError("lumping expects contiguous sites starting at 0")
    pairs = [(desc.params[i], desc.params[i + 1]) for i in range(0, len(desc.params), 2)]
    if desc.algebra in ("su11", "su2"):
        params = tuple(a + b for a, b in pairs)
    elif desc.alpha == "+":
        params = tuple(a + b for a, b in pairs)
    else:
        for a, b in pairs:
            if a != b:
                raise DescriptorError(
                    "annihilation coefficients must match within a merged pair"
                )
        params = tuple(a for a, _ in pairs)
    return SymmetryDescriptor(desc.algebra, desc.alpha, params, tuple(range(len(pairs))))


def lumped_symmetry(desc: SymmetryDescriptor, space: Space, nmax: int) -> SectorOperator:
    """The descriptor's action on the merged space, with summed parameters."""
    return build_symmetry(merge_descriptor(desc), merged_space(space), nmax)


@dataclass
class CommutatorResult:
    """AB - BA where both orders are defined, plus the excluded top sectors."""

    operator: SectorOperator
    sectors: tuple[int, ...]
    excluded: tuple[int, ...]


def commutator(a: SectorOperator, b: SectorOperator) -> CommutatorResult:
    ab = a @ b
    ba = b @ a
    requested = sorted(set(a.sectors) | set(b.sectors))
    common = sorted(set(ab.blocks) & set(ba.blocks))
    if not common:
        raise ShapeError("no sector where both orders are defined")
    op = ab.restricted(common) - ba.restricted(common)
    excluded = tuple(n for n in requested if n not in common)
    return CommutatorResult(op, tuple(common), excluded)
