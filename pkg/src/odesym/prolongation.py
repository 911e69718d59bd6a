"""Tanaka prolongations, annihilators, symmetry dimension bounds and rigidity."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import GVector, GradedAlgebra, H, Y, glm, vel, basis_key
from .cochains import Cochain, act
from .linalg import EchelonSpan, nullspace
from .lowest_weight import check_compat, closed_form_lwv

__all__ = [
    "ProlongationResult", "tanaka_prolongation", "annihilator_of", "a_phi",
    "submax_bound", "max_symmetry_dim", "is_prolongation_rigid",
    "s_perp_generators", "ComplementReport", "verify_complement",
]


@dataclass
class ProlongationResult:
    a_minus: list
    a_zero: list
    a_one: list

    @property
    def total_dim(self):
        return len(self.a_minus) + len(self.a_zero) + len(self.a_one)


def _gv_coords(v: GVector):
    return dict(v.terms)


def _span_of(vectors):
    span = EchelonSpan(keyfunc=basis_key)
    for v in vectors:
        span.add(_gv_coords(v))
    return span


def _canonical_basis(span):
    return [GVector(row) for row in span.basis()]


def tanaka_prolongation(alg: GradedAlgebra, a0) -> ProlongationResult:
    """pr(g_-, a0) = g_- + a0 + a1 with a1 = {x in g_1 : [x, g_{-1}] in a0}."""
    for v in a0:
        for idx in v.terms:
            if idx != H and idx[0] != "e":
                raise ValueError("a0 must be contained in g_0")
    span0 = _span_of(a0)
    gm1 = [b for b in alg.negative_basis if alg.degree_of_basis(b) == -1]
    layers = {}
    for b in alg.basis:
        d = alg.degree_of_basis(b)
        if d >= 1:
            layers.setdefault(d, []).append(b)
    # General prolongation step a_{k+1} = {x in g_{k+1} : [x, g_{-1}] in a_k};
    # the grading of g tops out at degree 1, so this loop runs once.
    prev = span0
    a_one = []
    degree = 1
    while degree in layers:
        layer = layers[degree]
        rows = {}
        for col, b in enumerate(layer):
            for c in gm1:
                img = GVector()
                img.terms = alg.bracket_raw({b: Fraction(1)}, {c: Fraction(1)})
                res = prev.residual(_gv_coords(img))
                for idx, coeff in res.items():
                    rows.setdefault((c, idx), [Fraction(0)] * len(layer))[col] = coeff
        mat = [rows[k] for k in sorted(rows, key=repr)]
        if mat:
            kernel = nullspace(mat, len(layer))
        else:
            kernel = [[Fraction(1 if i == j else 0) for j in range(len(layer))]
                      for i in range(len(layer))]
        kept = [GVector({layer[i]: c for i, c in enumerate(vec) if c != 0}) for vec in kernel]
        kept = [v for v in kept if not v.is_zero()]
        if degree == 1:
            a_one = kept
        if not kept:
            break
        prev = _span_of(kept)
        degree += 1
    return ProlongationResult(
        a_minus=[GVector.basis(b) for b in alg.negative_basis],
        a_zero=_canonical_basis(span0),
        a_one=a_one,
    )


def annihilator_of(alg: GradedAlgebra, phi: Cochain):
    """Exact kernel of the g_0 action on a cochain, as canonical GVector basis."""
    if phi.is_zero():
        raise ValueError("annihilator of the zero cochain is all of g_0")
    g0 = alg.g0_basis
    rows = {}
    for col, b in enumerate(g0):
        res = act(GVector.basis(b), phi)
        for key, c in res.coordinates().items():
            rows.setdefault(key, [Fraction(0)] * len(g0))[col] = c
    mat = [rows[k] for k in sorted(rows, key=repr)]
    kernel = nullspace(mat, len(g0)) if mat else [
        [Fraction(1 if i == j else 0) for j in range(len(g0))] for i in range(len(g0))]
    vectors = []
    for vec in kernel:
        terms = {g0[i]: c for i, c in enumerate(vec) if c != 0}
        vectors.append(GVector(terms))
    return _canonical_basis(_span_of(vectors))


def a_phi(alg: GradedAlgebra, phi: Cochain) -> ProlongationResult:
    """Tanaka prolongation of the annihilator of a nonzero cochain."""
    return tanaka_prolongation(alg, annihilator_of(alg, phi))


def max_symmetry_dim(n, m):
    """Symmetry dimension of the trivial equation: m^2 + (n+1)m + 3."""
    return m * m + (n + 1) * m + 3


def submax_bound(alg: GradedAlgebra, module_id) -> int:
    """dim a^phi for the module's lowest weight vector, cross-checked in closed form."""
    check_compat(module_id, alg.n)
    n, m = alg.n, alg.m
    fm = max_symmetry_dim(n, m)
    closed = {
        "B4": fm - m,
        "A2tr": fm - m - 1,
        "A2tf": fm - 2 * m + 1 + (1 if n == 2 else 0),
    }[module_id]
    constructive = a_phi(alg, closed_form_lwv(alg, module_id).cochain).total_dim
    if constructive != closed:
        raise AssertionError(
            "closed-form bound %d disagrees with prolongation dimension %d for %s"
            % (closed, constructive, module_id))
    return closed


def is_prolongation_rigid(alg: GradedAlgebra, module_id) -> bool:
    """True iff the degree-one prolongation of the annihilator vanishes."""
    check_compat(module_id, alg.n)
    res = a_phi(alg, closed_form_lwv(alg, module_id).cochain)
    rigid = len(res.a_one) == 0
    if rigid != (alg.n != 2):
        raise AssertionError("rigidity verdict disagrees with the order criterion")
    return rigid


def s_perp_generators(alg: GradedAlgebra, module_id):
    """The ad_T-invariant complement of a^phi inside g."""
    check_compat(module_id, alg.n)
    n, m = alg.n, alg.m
    gens = [alg.z1()]
    gens += [GVector.basis(glm(1, b)) for b in range(2, m + 1)]
    if module_id == "A2tf":
        gens += [GVector.basis(glm(d, m)) for d in range(2, m)]
    if module_id in ("A2tr", "A2tf") and n >= 3:
        gens.append(GVector.basis(Y))
    return gens


@dataclass
class ComplementReport:
    module_id: str
    dim_a: int
    dim_sperp: int
    dim_g: int
    direct_sum: bool
    ad_t_invariant: bool

    @property
    def passed(self):
        return self.direct_sum and self.ad_t_invariant


def verify_complement(alg: GradedAlgebra, module_id) -> ComplementReport:
    """Check g = a^phi (+) s_perp and [T, s_perp] inside s_perp for T = Z1 - Z2."""
    res = a_phi(alg, closed_form_lwv(alg, module_id).cochain)
    sperp = s_perp_generators(alg, module_id)
    union = _span_of(res.a_minus + res.a_zero + res.a_one + sperp)
    sspan = _span_of(sperp)
    direct = (union.dim == alg.dim
              and sspan.dim == len(sperp)
              and res.total_dim + sspan.dim == alg.dim)
    t = alg.z1() - alg.z2()
    ad_ok = True
    for v in sperp:
        img = alg.bracket(t, v)
        if not img.is_zero() and not sspan.contains(_gv_coords(img)):
            ad_ok = False
            break
    return ComplementReport(module_id, res.total_dim, sspan.dim, alg.dim, direct, ad_ok)
