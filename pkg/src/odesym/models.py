"""Filtered sub-deformations: the algebraic models of the submaximal branches.

A model is a filtered subspace f inside g(n, m) together with a horizontal
curvature 2-cochain kappa; the deformed bracket is [x, y]_f = [x, y] -
kappa(pi x, pi y) with pi the projection onto the negative part.  The
trace-branch family carries parameters (zeta, mu1, mu2, mu3) which are solved
exactly from four Jacobi triples and must match their closed forms.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import sympy

from .algebra import GVector, GradedAlgebra, X, H, Y, glm, vel, basis_key, scalar_to_str
from .cochains import (
    Cochain, act, codifferential, differential, strong_regularity_holds,
    x_insertion_is_zero,
)
from .linalg import EchelonSpan
from .lowest_weight import b4_cochain, check_compat, closed_form_lwv
from .prolongation import annihilator_of, a_phi

__all__ = [
    "ZETA", "MU1", "MU2", "MU3", "ParamSolution", "closed_form_params",
    "FilteredSubspace", "DeformedAlgebra", "build_model", "flat_model",
    "kappa4_cochain", "deformed_bracket", "jacobi_residual",
    "solve_model_params", "ModelSolveError", "ModelReport", "verify_model",
]

ZETA, MU1, MU2, MU3 = sympy.symbols("zeta mu1 mu2 mu3")


class ModelSolveError(RuntimeError):
    """Raised when the Jacobi equations are inconsistent or not uniquely solvable."""


@dataclass
class ParamSolution:
    zeta: Fraction
    mu1: Fraction
    mu2: Fraction
    mu3: Fraction

    def as_dict(self):
        return {"zeta": self.zeta, "mu1": self.mu1, "mu2": self.mu2, "mu3": self.mu3}

    def to_json(self):
        return {k: scalar_to_str(v) for k, v in self.as_dict().items()}


def closed_form_params(n, m) -> ParamSolution:
    d = m * n * (n + 1) + 6
    zeta = Fraction((2 * n - n * n - 3) * m + 3 * n - 9, d)
    mu1 = Fraction(6 * (n - 1) * (n - 2) * (m + 1), d)
    mu2 = Fraction(-6 * (n - 1) * (m + 1) * (m * (n ** 3 + n * n - 6 * n + 6) + 6), d * d)
    mu3 = Fraction(1 - n)
    return ParamSolution(zeta, mu1, mu2, mu3)


class FilteredSubspace:
    """Basis of f tagged by filtration degree, echelonized for membership tests."""

    def __init__(self, alg: GradedAlgebra, module_id, branch, vectors):
        self.alg = alg
        self.module_id = module_id
        self.branch = branch
        self.vectors = list(vectors)  # (GVector, filtration degree)
        self.span = EchelonSpan(keyfunc=basis_key)
        for v, _d in self.vectors:
            self.span.add(dict(v.terms))

    @property
    def dim(self):
        return self.span.dim

    def contains(self, x: GVector):
        return self.span.contains(dict(x.terms))

    def f_geq(self, degree):
        return [v for v, d in self.vectors if d >= degree]

    @property
    def f0(self):
        return self.f_geq(0)


class DeformedAlgebra:
    """A filtered subspace together with its horizontal curvature cochain."""

    def __init__(self, f: FilteredSubspace, kappa: Cochain, params=None):
        self.f = f
        self.alg = f.alg
        self.kappa = kappa
        self.params = dict(params or {})
        # curvature evaluated on sorted negative basis pairs, raw dict values
        self._ktab = {T: dict(v.terms) for T, v in kappa.entries.items()}

    def kappa_raw(self, d1, d2):
        """kappa on raw dicts, projecting both arguments onto the negative part."""
        alg = self.alg
        out = {}
        for b1, c1 in d1.items():
            if alg.degree_of_basis(b1) >= 0:
                continue
            for b2, c2 in d2.items():
                if alg.degree_of_basis(b2) >= 0:
                    continue
                if b1 == b2:
                    continue
                if basis_key(b1) < basis_key(b2):
                    entry, sgn = self._ktab.get((b1, b2)), 1
                else:
                    entry, sgn = self._ktab.get((b2, b1)), -1
                if not entry:
                    continue
                c12 = c1 * c2
                if hasattr(c12, "expand"):
                    c12 = c12.expand()
                if c12 == 0:
                    continue
                for idx, c in entry.items():
                    cur = out.get(idx)
                    new = sgn * c12 * c if cur is None else cur + sgn * c12 * c
                    if hasattr(new, "expand"):
                        new = new.expand()
                    if new == 0:
                        out.pop(idx, None)
                    else:
                        out[idx] = new
        return out

    def bracket_raw(self, d1, d2):
        out = self.alg.bracket_raw(d1, d2)
        for idx, c in self.kappa_raw(d1, d2).items():
            cur = out.get(idx)
            new = -c if cur is None else cur - c
            if hasattr(new, "expand"):
                new = new.expand()
            if new == 0:
                out.pop(idx, None)
            else:
                out[idx] = new
        return out

    def subs(self, mapping):
        f = FilteredSubspace(self.f.alg, self.f.module_id, self.f.branch,
                             [(v.subs(mapping), d) for v, d in self.f.vectors])
        params = {}
        for k, v in self.params.items():
            if hasattr(v, "subs"):
                v = v.subs(mapping)
                if getattr(v, "is_Rational", False):
                    v = Fraction(int(v.p), int(v.q))
            params[k] = v
        return DeformedAlgebra(f, self.kappa.subs(mapping), params)


def deformed_bracket(model: DeformedAlgebra, x: GVector, y: GVector) -> GVector:
    """[x, y]_f with exact membership validation of both arguments."""
    for v in (x, y):
        if not model.f.contains(v):
            raise ValueError("argument does not lie in the filtered subspace")
    out = GVector()
    out.terms = model.bracket_raw(x.terms, y.terms)
    return out


def jacobi_residual(model: DeformedAlgebra, x: GVector, y: GVector, z: GVector) -> GVector:
    """[x,[y,z]_f]_f - [[x,y]_f,z]_f - [y,[x,z]_f]_f."""
    br = model.bracket_raw
    acc = dict(br(x.terms, br(y.terms, z.terms)))

    def sub(d):
        for idx, c in d.items():
            cur = acc.get(idx)
            new = -c if cur is None else cur - c
            if hasattr(new, "expand"):
                new = new.expand()
            if new == 0:
                acc.pop(idx, None)
            else:
                acc[idx] = new

    sub(br(br(x.terms, y.terms), z.terms))
    sub(br(y.terms, br(x.terms, z.terms)))
    out = GVector()
    out.terms = acc
    return out


def kappa4_cochain(alg: GradedAlgebra, mu1, mu2, mu3) -> Cochain:
    """The bigrade-(2,2) curvature correction of the trace branch."""
    out = Cochain.monomial(alg, (vel(3, 1), vel(0, 1)), X, mu1)
    out = out + Cochain.monomial(alg, (vel(2, 1), vel(1, 1)), X, mu2)
    half = -(Fraction(1, 2) * mu1 + Fraction(1, 2) * mu2)
    out = out + Cochain.monomial(alg, (vel(2, 1), vel(0, 1)), H, half)
    out = out + Cochain.monomial(alg, (vel(1, 1), vel(0, 1)), Y, half)
    for a in range(1, alg.m + 1):
        out = out + Cochain.monomial(alg, (vel(2, 1), vel(0, a)), glm(a, 1), mu3)
        out = out + Cochain.monomial(alg, (vel(2, a), vel(0, 1)), glm(a, 1), -1 * mu3)
        if a != 1:
            out = out + Cochain.monomial(alg, (vel(1, a), vel(1, 1)), glm(a, 1), mu3)
    return out


def _graded_vectors(alg, result):
    vecs = []
    for v in result.a_minus + result.a_zero + result.a_one:
        vecs.append((v, alg.filtration_degree(v)))
    return vecs


def build_model(alg: GradedAlgebra, module_id, branch="plus",
                zeta=None, mus=None) -> DeformedAlgebra:
    """Construct the branch model; zeta/mus override the closed forms (A2tr only)."""
    check_compat(module_id, alg.n)
    n, m = alg.n, alg.m
    if module_id == "B4":
        if branch not in ("plus", "minus"):
            raise ValueError("B4 branch must be 'plus' or 'minus'")
        phi = b4_cochain(alg)
        res = a_phi(alg, phi)
        f = FilteredSubspace(alg, "B4", branch, _graded_vectors(alg, res))
        kappa = phi if branch == "plus" else phi.scale(-1)
        return DeformedAlgebra(f, kappa, {})
    if branch != "plus":
        raise ValueError("only the trace-type branches of third order are signed")
    if module_id == "A2tf":
        phi = closed_form_lwv(alg, "A2tf").cochain
        res = a_phi(alg, phi)
        f = FilteredSubspace(alg, "A2tf", None, _graded_vectors(alg, res))
        return DeformedAlgebra(f, phi, {})
    # A2tr
    sol = closed_form_params(n, m)
    z = sol.zeta if zeta is None else zeta
    if mus is None:
        m1, m2, m3 = sol.mu1, sol.mu2, sol.mu3
    else:
        m1, m2, m3 = mus
    phi = closed_form_lwv(alg, "A2tr").cochain
    fann = annihilator_of(alg, phi)
    vecs = []
    for i in range(n, 1, -1):
        for a in range(1, m + 1):
            vecs.append((GVector.basis(vel(i, a)), -i - 1))
    vecs.append((GVector.basis(vel(1, 1)) + alg.z1().scale((n - 2) * z), -2))
    for b in range(2, m + 1):
        vecs.append((GVector.basis(vel(1, b)), -2))
    vecs.append((GVector.basis(vel(0, 1)) + GVector.basis(Y, z), -1))
    for b in range(2, m + 1):
        vecs.append((GVector.basis(vel(0, b)), -1))
    vecs.append((GVector.basis(X), -1))
    for v in fann:
        vecs.append((v, 0))
    f = FilteredSubspace(alg, "A2tr", None, vecs)
    kappa = phi + kappa4_cochain(alg, m1, m2, m3)
    return DeformedAlgebra(f, kappa, {"zeta": z, "mu1": m1, "mu2": m2, "mu3": m3})


def flat_model(alg: GradedAlgebra) -> DeformedAlgebra:
    """kappa = 0 on all of g: the structure of the trivial equation itself."""
    vecs = [(GVector.basis(b), alg.degree_of_basis(b)) for b in alg.basis]
    f = FilteredSubspace(alg, None, None, vecs)
    return DeformedAlgebra(f, Cochain.zero(alg, 2), {})


# -- parameter solving --------------------------------------------------------------


def _hat(model, i):
    """The f basis vector whose leading part is E_{i,1} (i = 0 or 1)."""
    for v, d in model.f.vectors:
        if d == -i - 1 and v.coeff(vel(i, 1)) != 0:
            return v
    raise LookupError("missing hatted generator")


def _solve_linear(equations, sym):
    """Common root of affine-linear sympy equations in sym; errors if inconsistent."""
    root = None
    for eq in equations:
        eq = sympy.expand(eq)
        if eq == 0:
            continue
        poly = sympy.Poly(eq, sym)
        if poly.degree() > 1:
            raise ModelSolveError("equation is not linear in %s: %s" % (sym, eq))
        if poly.degree() == 0:
            raise ModelSolveError("inconsistent equation: %s = 0" % eq)
        a = poly.coeff_monomial(sym)
        b = poly.coeff_monomial(1)
        if a.free_symbols or b.free_symbols:
            raise ModelSolveError("equation mixes unsolved parameters: %s" % eq)
        r = sympy.Rational(-b, a)
        if root is None:
            root = r
        elif root != r:
            raise ModelSolveError("inconsistent Jacobi equations for %s" % sym)
    if root is None:
        raise ModelSolveError("no equation constrains %s" % sym)
    return Fraction(int(root.p), int(root.q))


def solve_model_params(alg: GradedAlgebra) -> ParamSolution:
    """Solve (zeta, mu1, mu2, mu3) from the four designated Jacobi triples.

    The triples are processed in an order that keeps every solve linear in a
    single unknown; the result is asserted against the closed forms.
    """
    if alg.n < 3:
        raise ValueError("the parametrized family needs n >= 3")
    model = build_model(alg, "A2tr", zeta=ZETA, mus=(MU1, MU2, MU3))
    triples = [
        (ZETA, lambda md: (_hat(md, 1), GVector.basis(vel(0, 2)), GVector.basis(vel(3, 1)))),
        (MU1, lambda md: (_hat(md, 0), GVector.basis(vel(1, 2)), GVector.basis(vel(3, 1)))),
        (MU2, lambda md: (_hat(md, 1), GVector.basis(vel(2, 2)), GVector.basis(vel(2, 1)))),
        (MU3, lambda md: (_hat(md, 0), GVector.basis(vel(2, 2)), GVector.basis(vel(3, 1)))),
    ]
    solved = {}
    for sym, get_args in triples:
        x, y, z = get_args(model)
        res = jacobi_residual(model, x, y, z)
        equations = [sympy.sympify(c) for _idx, c in res.items()]
        val = _solve_linear(equations, sym)
        solved[sym] = sympy.Rational(val.numerator, val.denominator)
        model = model.subs({sym: solved[sym]})
    out = ParamSolution(*(Fraction(int(solved[s].p), int(solved[s].q))
                          for s in (ZETA, MU1, MU2, MU3)))
    expected = closed_form_params(alg.n, alg.m)
    if out != expected:
        raise ModelSolveError("solved parameters disagree with the closed forms")
    return out


# -- verification --------------------------------------------------------------------


@dataclass
class ModelReport:
    module_id: str | None
    n: int
    m: int
    checks: dict
    failures: list

    @property
    def passed(self):
        return all(self.checks.values())

    def to_json(self):
        return {
            "module": self.module_id,
            "n": self.n,
            "m": self.m,
            "checks": dict(self.checks),
            "failures": list(self.failures),
        }


def verify_model(model: DeformedAlgebra, jacobi_limit=None) -> ModelReport:
    """Run the full model verification: grading, annihilation, normality, strong
    regularity, bracket closure, Jacobi on all basis triples, curvature
    equivariance and the leading-part identification."""
    alg = model.alg
    f = model.f
    checks = {}
    failures = []

    # associated graded has full negative part
    neg_span = EchelonSpan(keyfunc=basis_key)
    for v, d in f.vectors:
        if d < 0:
            lead = alg.leading_part(v)
            if alg.filtration_degree(lead) != d:
                failures.append("filtration tag mismatch on %r" % v)
            neg_span.add(dict(lead.terms))
    checks["graded_negative_part"] = (
        neg_span.dim == len(alg.negative_basis)
        and all(neg_span.contains({b: Fraction(1)}) for b in alg.negative_basis))

    # f^0 inserts trivially into kappa
    ok = True
    for z in f.f0:
        for b in alg.negative_basis:
            if model.kappa_raw(z.terms, {b: Fraction(1)}):
                ok = False
                failures.append("kappa(f0, .) != 0")
                break
        if not ok:
            break
    checks["f0_inserts_trivially"] = ok

    kappa = model.kappa
    if kappa.is_zero():
        checks["normal"] = True
        checks["strongly_regular"] = True
        checks["x_annihilates_kappa"] = True
    else:
        checks["normal"] = codifferential(kappa).is_zero()
        checks["strongly_regular"] = strong_regularity_holds(kappa)
        checks["x_annihilates_kappa"] = act(GVector.basis(X), kappa).is_zero()

    # closure and Jacobi over basis triples
    basis = [v for v, _d in f.vectors]
    nb = len(basis)
    pair = {}
    closure_ok = True
    for i in range(nb):
        for j in range(i + 1, nb):
            w = model.bracket_raw(basis[i].terms, basis[j].terms)
            pair[(i, j)] = w
            gv = GVector()
            gv.terms = dict(w)
            if not f.contains(gv):
                closure_ok = False
    checks["bracket_closure"] = closure_ok
    if not closure_ok:
        failures.append("deformed bracket leaves the subspace")

    jac_ok = True
    count = 0
    for i in range(nb):
        di = basis[i].terms
        for j in range(i + 1, nb):
            for k in range(j + 1, nb):
                # Jac(x,y,z) with x=basis[i], y=basis[j], z=basis[k]
                acc = dict(model.bracket_raw(di, pair[(j, k)]))
                for idx, c in model.bracket_raw(pair[(i, j)], basis[k].terms).items():
                    cur = acc.get(idx)
                    new = -c if cur is None else cur - c
                    if new == 0:
                        acc.pop(idx, None)
                    else:
                        acc[idx] = new
                for idx, c in model.bracket_raw(basis[j].terms, pair[(i, k)]).items():
                    cur = acc.get(idx)
                    new = -c if cur is None else cur - c
                    if new == 0:
                        acc.pop(idx, None)
                    else:
                        acc[idx] = new
                if acc:
                    jac_ok = False
                    failures.append(
                        "Jacobi fails on basis triple (%d,%d,%d)" % (i, j, k))
                count += 1
                if not jac_ok and jacobi_limit == "first":
                    break
            if not jac_ok and jacobi_limit == "first":
                break
        if not jac_ok and jacobi_limit == "first":
            break
    checks["jacobi"] = jac_ok

    # f^0 annihilates kappa in the module sense
    ok = True
    f0 = f.f0
    for z in f0:
        for i in range(nb):
            for j in range(i + 1, nb):
                kxy = GVector()
                kxy.terms = model.kappa_raw(basis[i].terms, basis[j].terms)
                lhs = GVector()
                lhs.terms = model.bracket_raw(z.terms, kxy.terms)
                zx = GVector()
                zx.terms = model.bracket_raw(z.terms, basis[i].terms)
                zy = GVector()
                zy.terms = model.bracket_raw(z.terms, basis[j].terms)
                rhs = GVector()
                rhs.terms = model.kappa_raw(zx.terms, basis[j].terms)
                rhs2 = GVector()
                rhs2.terms = model.kappa_raw(basis[i].terms, zy.terms)
                if not (lhs - rhs - rhs2).is_zero():
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            break
    checks["f0_annihilates_kappa"] = ok
    if not ok:
        failures.append("f0 does not annihilate kappa")

    # lowest degree component of kappa is the lowest weight vector
    if f.module_id is not None and not kappa.is_zero():
        comps = kappa.degree_components()
        low = comps[min(comps)]
        expected = closed_form_lwv(alg, f.module_id).cochain
        if f.module_id == "B4" and f.branch == "minus":
            expected = expected.scale(-1)
        checks["leading_part_is_lwv"] = (low == expected)
    elif kappa.is_zero():
        checks["leading_part_is_lwv"] = True
    return ModelReport(f.module_id, alg.n, alg.m, checks, failures)
