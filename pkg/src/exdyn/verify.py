"""Certificate-producing checks for the models' algebraic identities.

Every check returns a :class:`CheckReport`: a pass is an exact identity over
the stated sector range (or a toleranced one on the float path); a fail
always carries a concrete witness that can be re-evaluated independently.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import algebra, exact, models, statespace
from .algebra import SymmetryDescriptor
from .errors import ConditioningError, LumpabilityError, ShapeError
from .exact import Scalar, format_scalar
from .models import DualityFunction, ModelSpec, spec_label
from .statespace import Measure, SectorOperator, Space

FLOAT_TOL = 1e-12


@dataclass
class CheckReport:
    """Outcome of one identity check over a sector range."""

    name: str
    model: str
    sectors: tuple[int, ...]
    verdict: str  # 'pass' | 'fail' | 'partial'
    arithmetic: str  # 'exact' | 'float(tol)'
    witness: dict | None = None
    excluded: tuple[int, ...] = ()
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict == "fail" and self.witness is None:
            raise ValueError("fail verdicts must carry a witness")
        if self.verdict not in ("pass", "fail", "partial"):
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "model": self.model,
            "sectors": list(self.sectors),
            "verdict": self.verdict,
            "arithmetic": self.arithmetic,
            "witness": _encode(self.witness),
            "excluded": list(self.excluded),
            "details": _encode(self.details),
        }


def _encode(obj):
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else format_scalar(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def reports_to_json(reports) -> str:
    payload = [r.to_dict() for r in reports]
    return json.dumps(payload, indent=2, sort_keys=True)


def _operator_arithmetic(*ops) -> str:
    for op in ops:
        for block in op.blocks.values():
            if exact.is_float_array(block):
                return f"float({FLOAT_TOL})"
    return "exact"


def _tol_for(arith: str) -> float | None:
    return None if arith == "exact" else FLOAT_TOL


# ---------------------------------------------------------------------------
# the checks


def check_self_duality(
    pi: SectorOperator, dual: DualityFunction, nmax: int, name: str = "self-duality"
) -> CheckReport:
    """Verify sum_m Pi(n->m) D(k,m) = sum_l Pi(k->l) D(l,n) for all k, n.

    Both sides stay within their own mass sectors, so the check runs blockwise
    over all pairs of sectors up to ``nmax``.
    """
    arith = _operator_arithmetic(pi)
    if any(isinstance(d(0, 1), float) for d in dual.factors):
        arith = f"float({FLOAT_TOL})"
    tol = _tol_for(arith)
    space = pi.domain
    sectors = tuple(n for n in sorted(pi.blocks) if n <= nmax)
    witness = None
    for total_k in sectors:
        sec_k = space.sector(total_k)
        if sec_k.dim == 0:
            continue
        for total_n in sectors:
            sec_n = space.sector(total_n)
            if sec_n.dim == 0:
                continue
            dkn = dual.block(sec_k, sec_n)
            lhs = exact.mat_mul(dkn, pi.blocks[total_n].T)
            rhs = exact.mat_mul(pi.blocks[total_k], dkn)
            diff = exact.first_difference(lhs, rhs, tol)
            if diff is not None:
                i, j, x, y = diff
                witness = {
                    "dual_state": sec_k.states[i],
                    "state": sec_n.states[j],
                    "lhs": x,
                    "rhs": y,
                }
                break
        if witness:
            break
    details = {}
    if dual.warning:
        details["hypothesis_warning"] = dual.warning
    return CheckReport(
        name=name,
        model=dual.family,
        sectors=sectors,
        verdict="pass" if witness is None else "fail",
        arithmetic=arith,
        witness=witness,
        details=details,
    )


def check_detailed_balance(
    op: SectorOperator, mu: Measure, name: str = "detailed-balance"
) -> CheckReport:
    """Verify mu(x) op(x->y) = mu(y) op(y->x) on every sector."""
    arith = _operator_arithmetic(op)
    tol = _tol_for(arith)
    sectors = tuple(n for n in sorted(op.blocks) if n <= mu.nmax)
    witness = None
    for total in sectors:
        sec = op.domain.sector(total)
        w = mu.vector(total)
        if any(x == 0 for x in w):
            raise ConditioningError(f"measure vanishes on sector {total}")
        block = op.blocks[total]
        flows = np.empty(block.shape, dtype=object)
        for (i, j), v in np.ndenumerate(block):
            flows[i, j] = w[i] * v
        diff = exact.first_difference(flows, flows.T, tol)
        if diff is not None:
            i, j, x, y = diff
            witness = {
                "state": sec.states[i],
                "other": sec.states[j],
                "lhs": x,
                "rhs": y,
                "sector": total,
            }
            break
    return CheckReport(
        name=name,
        model="",
        sectors=sectors,
        verdict="pass" if witness is None else "fail",
        arithmetic=arith,
        witness=witness,
    )


def check_symmetry(
    op: SectorOperator, sym: SectorOperator, name: str = "symmetry-commutation"
) -> CheckReport:
    """Verify sym . op = op . sym as sector-shifted block identities."""
    arith = _operator_arithmetic(op, sym)
    tol = _tol_for(arith)
    left = sym @ op
    right = op @ sym
    requested = sorted(op.blocks)
    common = sorted(set(left.blocks) & set(right.blocks))
    if not common:
        raise ShapeError("no sector where both orders are defined")
    excluded = tuple(n for n in requested if n not in common)
    witness = None
    diff = left.restricted(common).difference_witness(right.restricted(common), tol)
    if diff is not None:
        total, row, col, x, y = diff
        witness = {"sector": total, "row_state": row, "col_state": col, "lhs": x, "rhs": y}
    verdict = "fail" if witness else ("partial" if excluded else "pass")
    return CheckReport(
        name=name,
        model="",
        sectors=tuple(common),
        verdict=verdict,
        arithmetic=arith,
        witness=witness,
        excluded=excluded,
    )


def check_projection_identity(
    proj: SectorOperator, mu: Measure, name: str = "projection-identity"
) -> CheckReport:
    """Verify that redistribution equals lift-after-average: P = T T^{-1}."""
    arith = _operator_arithmetic(proj)
    tol = _tol_for(arith)
    nmax = max(proj.blocks)
    lift = statespace.lift_operator(proj.domain, min(nmax, mu.nmax))
    inv = statespace.mu_inverse_operator(mu)
    composed = lift @ inv
    diff = proj.difference_witness(composed, tol)
    witness = None
    if diff is not None:
        total, row, col, x, y = diff
        witness = {"sector": total, "row_state": row, "col_state": col, "lhs": x, "rhs": y}
    return CheckReport(
        name=name,
        model="",
        sectors=tuple(sorted(set(proj.blocks) & set(composed.blocks))),
        verdict="pass" if witness is None else "fail",
        arithmetic=arith,
        witness=witness,
    )


def check_exchange_commutation(
    sym: SectorOperator, spec: ModelSpec, name: str = "exchange-commutation"
) -> CheckReport:
    """Verify that a pocket symmetry commutes with the top-pocket swap."""
    nmax = max(sym.blocks)
    exch = statespace.exchange_operator(models.pocket_space(spec), nmax)
    report = check_symmetry(exch, sym, name=name)
    report.model = spec_label(spec)
    return report


def check_lumpability(
    op: SectorOperator, spec: ModelSpec, name: str = "lumpability"
) -> CheckReport:
    """Certify that an operator preserves functions of the merged wealths."""
    try:
        _, cert = statespace.lump_operator(op)
    except LumpabilityError as err:
        cert = err.certificate
        return CheckReport(
            name=name,
            model=spec_label(spec),
            sectors=cert.sectors if cert else (),
            verdict="fail",
            arithmetic=_operator_arithmetic(op),
            witness=cert.witness if cert else {"error": str(err)},
        )
    return CheckReport(
        name=name,
        model=spec_label(spec),
        sectors=cert.sectors,
        verdict="pass",
        arithmetic=_operator_arithmetic(op),
    )


_BRACKETS = {
    "su11": (
        ("[+,-]=2*0", "+", "-", (("0", 2),)),
        ("[+,0]=+", "+", "0", (("+", 1),)),
        ("[-,0]=-(-)", "-", "0", (("-", -1),)),
    ),
    "su2": (
        ("[+,-]=2*0", "+", "-", (("0", 2),)),
        ("[0,+]=+", "0", "+", (("+", 1),)),
        ("[0,-]=-(-)", "0", "-", (("-", -1),)),
    ),
}


def check_commutation_relations(
    kind: str,
    params: tuple[Scalar, ...],
    nmax: int,
    nvars: int = 1,
    verbatim: bool = False,
) -> CheckReport:
    """Verify the bracket table of one ladder family on an ``nvars``-site space.

    ``params`` gives one parameter per site; multi-site operators are site
    sums, whose brackets close onto the summed diagonal member.  The verified
    range excludes the top sector, where one composition order would need
    blocks beyond the construction.
    """
    if kind == "heisenberg":
        space = Space(nvars)
        create = algebra.site_sum(
            algebra.ladder_operator("create", i, space, nmax) for i in range(nvars)
        )
        annihilate = algebra.site_sum(
            algebra.ladder_operator("annihilate", i, space, nmax) for i in range(nvars)
        )
        result = algebra.commutator(create, annihilate)
        ident = statespace.identity_operator(space, nmax).restricted(result.sectors)
        expected = nvars * ident
        diff = result.operator.difference_witness(expected)
        relations = {"[a+,a]=n_sites*1": diff is None}
        witness = _bracket_witness(diff, "[a+,a]=n_sites*1")
        excluded = result.excluded
    elif kind in _BRACKETS:
        if kind == "su2":
            space = Space(nvars, tuple(int(p) for p in params))
            build = lambda a, i: algebra.j_operator(
                a, int(params[i]), i, space, nmax, verbatim=verbatim
            )
        else:
            space = Space(nvars)
            build = lambda a, i: algebra.k_operator(a, params[i], i, space, nmax)
        ops = {
            a: algebra.site_sum(build(a, i) for i in range(nvars)) for a in "+-0"
        }
        relations = {}
        witness = None
        excluded = ()
        for label, a, b, combo in _BRACKETS[kind]:
            result = algebra.commutator(ops[a], ops[b])
            try:
                expected = None
                for sym, coef in combo:
                    piece = coef * ops[sym].restricted(result.sectors)
                    expected = piece if expected is None else expected + piece
                common = sorted(set(result.operator.blocks) & set(expected.blocks))
                diff = result.operator.restricted(common).difference_witness(
                    expected.restricted(common)
                )
            except ShapeError as err:
                # a misread raising action changes the sector shift, so the
                # bracket cannot even be compared against the diagonal member
                relations[label] = False
                if witness is None:
                    witness = {"relation": label, "error": str(err)}
                continue
            relations[label] = diff is None
            excluded = tuple(sorted(set(excluded) | set(result.excluded)))
            if diff is not None and witness is None:
                witness = _bracket_witness(diff, label)
    else:
        raise ValueError(f"unknown algebra {kind!r}")
    verdict = "fail" if witness else ("partial" if excluded else "pass")
    return CheckReport(
        name=f"{kind}-commutation-relations",
        model="",
        sectors=tuple(range(nmax + 1)),
        verdict=verdict,
        arithmetic="exact",
        witness=witness,
        excluded=excluded,
        details={"params": params, "sites": nvars, "relations": relations,
                 **({"verbatim": True} if verbatim else {})},
    )


def _bracket_witness(diff, label):
    if diff is None:
        return None
    total, row, col, x, y = diff
    return {
        "relation": label,
        "sector": total,
        "row_state": row,
        "col_state": col,
        "lhs": x,
        "rhs": y,
    }


def check_lumped_addition(desc: SymmetryDescriptor, nmax: int) -> CheckReport:
    """Verify that the descriptor applied to lifted functions lifts its merge.

    A sum of single-site operators acting on a function of the pairwise sums
    must equal the lift of the merged-parameter operator (parameters add for
    ladder triples, creation coefficients add, annihilation needs matching
    coefficients).
    """
    nsites = len(desc.sites)
    space = Space(nsites)
    if desc.algebra == "su2":
        space = Space(nsites, tuple(int(p) for p in desc.params))
    full = algebra.build_symmetry(desc, space, nmax)
    merged = algebra.merge_descriptor(desc)
    half = algebra.build_symmetry(merged, statespace.merged_space(space), nmax)
    lift = statespace.lift_operator(space, nmax)
    left = full @ lift
    right = lift @ half
    common = sorted(set(left.blocks) & set(right.blocks))
    diff = left.restricted(common).difference_witness(right.restricted(common))
    witness = None
    if diff is not None:
        total, row, col, x, y = diff
        witness = {"sector": total, "row_state": row, "col_state": col, "lhs": x, "rhs": y}
    excluded = tuple(n for n in sorted(full.blocks) if n not in common)
    verdict = "fail" if witness else ("partial" if excluded else "pass")
    return CheckReport(
        name="lumped-symmetry-addition",
        model="",
        sectors=tuple(common),
        verdict=verdict,
        arithmetic="exact",
        witness=witness,
        excluded=excluded,
        details={"algebra": desc.algebra, "alpha": desc.alpha, "params": desc.params,
                 "merged_params": merged.params},
    )


# ---------------------------------------------------------------------------
# constructive duality


def cheap_duality(spec: ModelSpec) -> DualityFunction:
    """Diagonal duality from the reversible weights: d(k,n) = [k=n]/w(n)."""
    weights = models.pair_site_weights(spec)
    factors = tuple(
        (lambda k, n, w=w: 1 / w(n) if k == n else Fraction(0)) for w in weights
    )
    return DualityFunction(factors, spec_label(spec) + "-cheap")


def _raise_coefficient(spec: ModelSpec, variable: int):
    """Per-step coefficient c(j) of the raising symmetry acting on functions."""
    if isinstance(spec, models.ImmediateExchange):
        kappa = (spec.s1 + spec.t1, spec.s2 + spec.t2)[variable]
        return lambda j: kappa + j
    if isinstance(spec, models.RestrictedExchange):
        r = (spec.g1 + spec.d1, spec.g2 + spec.d2)[variable]
        return lambda j: r - j
    if isinstance(spec, models.RandomWalkExchange):
        return lambda j: Fraction(1)
    coef = (1 + spec.q1, 1 + spec.q2)[variable]
    return lambda j: coef


def constructive_duality_check(spec: ModelSpec, kmax: int) -> CheckReport:
    """Rebuild the closed-form duality by exponentiating the raising symmetry.

    Acting with exp(raise) on the cheap duality gives, entrywise,
    d(k,n) = (prod_{j=k}^{n-1} c(j)) / ((n-k)! w(n)); the series terminates
    because each application lowers the dual variable.  The result must equal
    the closed-form factor up to one constant per variable.
    """
    weights = models.pair_site_weights(spec)
    closed = models.duality_function(spec)
    caps = models.pair_caps(spec)
    witness = None
    ratios = []
    for var in range(2):
        coeff = _raise_coefficient(spec, var)
        w = weights[var]
        ratio = None
        limit = kmax if caps is None else min(kmax, caps[var])
        for n in range(limit + 1):
            for k in range(limit + 1):
                if k > n:
                    built = Fraction(0)
                else:
                    prod = 1
                    for j in range(k, n):
                        prod = prod * coeff(j)
                    built = prod / (exact.rising(Fraction(1), n - k) * w(n))
                target = closed.factors[var](k, n)
                if (built == 0) != (target == 0):
                    witness = {
                        "variable": var, "k": k, "n": n,
                        "constructed": built, "closed_form": target,
                    }
                    break
                if built == 0:
                    continue
                if ratio is None:
                    ratio = built / target
                elif built != ratio * target:
                    witness = {
                        "variable": var, "k": k, "n": n,
                        "constructed": built, "closed_form": target,
                        "expected_ratio": ratio,
                    }
                    break
            if witness:
                break
        if witness:
            break
        ratios.append(ratio)
    return CheckReport(
        name="constructive-duality",
        model=spec_label(spec),
        sectors=tuple(range(kmax + 1)),
        verdict="pass" if witness is None else "fail",
        arithmetic="exact",
        witness=witness,
        details={} if witness else {"per_variable_ratio": tuple(ratios)},
    )


# ---------------------------------------------------------------------------
# suites


def verify_reversibility(spec: ModelSpec, nmax: int) -> list[CheckReport]:
    """Projection identity plus detailed balance of the transition operator."""
    label = spec_label(spec)
    reports = []

    proj = models.redistribution_operator(spec, nmax)
    r = check_projection_identity(proj, models.pocket_measure(spec, nmax))
    r.model = label
    reports.append(r)

    pi = models.transition_operator(spec, nmax)
    r = check_detailed_balance(pi, models.stationary_pair_measure(spec, nmax))
    r.model = label
    reports.append(r)
    return reports


def verify_chain(spec: ModelSpec, nmax: int) -> list[CheckReport]:
    """Projection identity -> reversibility -> cheap duality -> closed-form duality."""
    label = spec_label(spec)
    reports = verify_reversibility(spec, nmax)

    pi = models.transition_operator(spec, nmax)
    r = check_self_duality(pi, cheap_duality(spec), nmax, name="cheap-self-duality")
    r.model = label
    reports.append(r)

    r = check_self_duality(pi, models.duality_function(spec), nmax)
    r.model = label
    reports.append(r)
    return reports


def verify_algebra(spec: ModelSpec, nmax: int) -> list[CheckReport]:
    """Bracket relations, symmetry lumping, exchange commutation, lumpability."""
    label = spec_label(spec)
    reports = []
    descriptors = models.pocket_symmetry_descriptors(spec)

    kind = descriptors[0].algebra
    for desc in descriptors:
        if desc.alpha != "+":
            continue
        reports.append(
            check_commutation_relations(kind, desc.params[:1], nmax, nvars=1)
        )
        reports.append(
            check_commutation_relations(kind, desc.params[:2], nmax, nvars=2)
        )

    for desc in descriptors:
        reports.append(check_lumped_addition(
            SymmetryDescriptor(desc.algebra, desc.alpha, desc.params[:2], (0, 1)), nmax
        ))

    pocket = models.pocket_space(spec)
    redist = models.redistribution_operator(spec, nmax)
    exch = statespace.exchange_operator(pocket, nmax)
    redist_exch = redist @ exch
    for desc in descriptors:
        sym = algebra.build_symmetry(desc, pocket, nmax)
        r = check_exchange_commutation(sym, spec,
                                       name=f"exchange-commutation({desc.alpha})")
        reports.append(r)
        r = check_symmetry(redist_exch, sym,
                           name=f"split-exchange-commutation({desc.alpha})")
        r.model = label
        reports.append(r)

    r = check_lumpability(redist_exch, spec, name="split-exchange-lumpability")
    reports.append(r)
    for r in reports:
        if not r.model:
            r.model = label
    return reports


def verify_symmetries(spec: ModelSpec, nmax: int) -> list[CheckReport]:
    """Commutation of the transition operator with its lumped symmetries."""
    label = spec_label(spec)
    pi = models.transition_operator(spec, nmax)
    reports = []
    for desc, op in models.pair_symmetries(spec, nmax):
        r = check_symmetry(pi, op, name=f"transition-symmetry({desc.algebra},{desc.alpha})")
        r.model = label
        r.details["params"] = desc.params
        reports.append(r)
    return reports


def verify_duality(spec: ModelSpec, nmax: int, kmax: int | None = None) -> list[CheckReport]:
    reports = verify_chain(spec, nmax)
    reports.append(constructive_duality_check(spec, kmax if kmax is not None else nmax))
    reports.extend(verify_symmetries(spec, nmax))
    return reports


def verify_all(spec: ModelSpec, nmax: int) -> list[CheckReport]:
    reports = verify_algebra(spec, min(nmax, 8))
    reports.extend(verify_duality(spec, nmax))
    return reports
