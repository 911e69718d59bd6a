"""Exact structure constants for the graded symmetry algebra of trivial vector ODEs.

The algebra g(n, m) = (sl2 x gl_m) |x (S^n R^2 (x) R^m) is realized on the basis
X, H, Y, e_a^b, E_{i,a} with rational structure constants.  Everything here is
exact: coefficients are `fractions.Fraction` (or, in the symbolic deformation
machinery, polynomial expressions that support the same arithmetic protocol).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

__all__ = [
    "X", "H", "Y", "glm", "vel",
    "basis_key", "basis_label", "basis_from_label",
    "GVector", "GradedAlgebra", "algebra",
    "StructureReport", "ZeroVectorError", "NonNilpotentError",
    "scalar_to_str", "scalar_from_str",
]

# Basis indices are plain tuples: ("X",), ("H",), ("Y",), ("e", a, b), ("E", i, a).
X = ("X",)
H = ("H",)
Y = ("Y",)


def glm(a, b):
    """Matrix unit e_a^b of gl_m (maps w_c to delta_c^b w_a)."""
    return ("e", a, b)


def vel(i, a):
    """Basis element E_{i,a} = E_i (x) w_a of the abelian part."""
    return ("E", i, a)


_TAG_RANK = {"X": 0, "H": 1, "Y": 2, "e": 3, "E": 4}


def basis_key(idx):
    """Canonical sort key: X, H, Y, then e_a^b in (a,b) lex, then E_{i,a} in (i,a) lex."""
    return (_TAG_RANK[idx[0]],) + tuple(idx[1:])


def basis_label(idx):
    if idx[0] == "e":
        return "e_%d_%d" % (idx[1], idx[2])
    if idx[0] == "E":
        return "E_%d_%d" % (idx[1], idx[2])
    return idx[0]


def basis_from_label(label):
    if label in ("X", "H", "Y"):
        return (label,)
    tag, i, j = label.split("_")
    if tag == "e":
        return glm(int(i), int(j))
    if tag == "E":
        return vel(int(i), int(j))
    raise ValueError("unknown basis label %r" % label)


def scalar_to_str(c):
    """Serialize an exact rational as 'p/q' (or 'p' when q == 1)."""
    f = Fraction(c)
    return str(f.numerator) if f.denominator == 1 else "%d/%d" % (f.numerator, f.denominator)


def scalar_from_str(s):
    return Fraction(s)


class ZeroVectorError(ValueError):
    """Raised when an operation (filtration degree, leading part) needs a nonzero vector."""


class NonNilpotentError(ValueError):
    """Raised when exp(ad_z) does not terminate within dim g iterations."""


def _clean(c):
    # Symbolic coefficients (sympy expressions) are expanded so that the
    # zero test below is decisive; exact rationals pass through untouched.
    if hasattr(c, "expand"):
        c = c.expand()
    return c


def _addinto(data, idx, c):
    cur = data.get(idx)
    if cur is None:
        if not (c == 0):
            data[idx] = c
        return
    cur = _clean(cur + c)
    if cur == 0:
        del data[idx]
    else:
        data[idx] = cur


class GVector:
    """Sparse exact linear combination of basis elements of g(n, m).

    Coefficients are Fractions in the numeric pipeline; the deformation solver
    feeds polynomial coefficients through the same code path.  No zero
    coefficients are ever stored.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        data = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for idx, c in items:
                c = _clean(_coerce(c))
                if not (c == 0):
                    _addinto(data, idx, c)
        self.terms = data

    @staticmethod
    def basis(idx, c=1):
        c = _coerce(c)
        if c == 0:
            return GVector()
        return GVector({idx: c})

    @staticmethod
    def zero():
        return GVector()

    def is_zero(self):
        return not self.terms

    def coeff(self, idx):
        return self.terms.get(idx, Fraction(0))

    def items(self):
        return sorted(self.terms.items(), key=lambda kv: basis_key(kv[0]))

    def support(self):
        return sorted(self.terms, key=basis_key)

    def __add__(self, other):
        data = dict(self.terms)
        for idx, c in other.terms.items():
            _addinto(data, idx, c)
        out = GVector()
        out.terms = data
        return out

    def __sub__(self, other):
        data = dict(self.terms)
        for idx, c in other.terms.items():
            _addinto(data, idx, -c)
        out = GVector()
        out.terms = data
        return out

    def __neg__(self):
        out = GVector()
        out.terms = {idx: -c for idx, c in self.terms.items()}
        return out

    def scale(self, c):
        c = _clean(_coerce(c))
        if c == 0:
            return GVector()
        data = {}
        for idx, v in self.terms.items():
            _addinto(data, idx, c * v)
        out = GVector()
        out.terms = data
        return out

    __mul__ = scale
    __rmul__ = scale

    def subs(self, mapping):
        """Substitute into symbolic coefficients (no-op for pure rationals)."""
        data = []
        for idx, c in self.terms.items():
            if hasattr(c, "subs"):
                c = c.subs(mapping)
            data.append((idx, c))
        return GVector(data)

    def __eq__(self, other):
        if not isinstance(other, GVector):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("GVector is not hashable")

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for idx, c in self.items():
            parts.append("%s*%s" % (c, basis_label(idx)))
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self):
        return {basis_label(idx): scalar_to_str(c) for idx, c in self.items()}

    @staticmethod
    def from_json(obj):
        return GVector({basis_from_label(k): scalar_from_str(v) for k, v in obj.items()})


def _coerce(c):
    if isinstance(c, int):
        return Fraction(c)
    return c


@dataclass
class StructureReport:
    n: int
    m: int
    dim: int
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations


class GradedAlgebra:
    """g(n, m) with precomputed bracket table, bi-grading, filtration and metric."""

    def __init__(self, n, m):
        if n < 2 or m < 2:
            raise ValueError("require n >= 2 and m >= 2")
        self.n = n
        self.m = m
        self.basis = (
            [X, H, Y]
            + [glm(a, b) for a in range(1, m + 1) for b in range(1, m + 1)]
            + [vel(i, a) for i in range(n + 1) for a in range(1, m + 1)]
        )
        self.dim = len(self.basis)
        self.negative_basis = [X] + [vel(i, a) for i in range(n + 1) for a in range(1, m + 1)]
        self.negative_set = frozenset(self.negative_basis)
        self.p_basis = [H, Y] + [glm(a, b) for a in range(1, m + 1) for b in range(1, m + 1)]
        self.g0_basis = [H] + [glm(a, b) for a in range(1, m + 1) for b in range(1, m + 1)]
        self._build_table()
        self._build_grading()
        self._build_metric()

    # -- structure constants ------------------------------------------------

    def _build_table(self):
        n, m = self.n, self.m
        table = {}

        def put(b1, b2, combo):
            combo = [(idx, Fraction(c)) for idx, c in combo if c != 0]
            if combo:
                table[(b1, b2)] = tuple(combo)
                table[(b2, b1)] = tuple((idx, -c) for idx, c in combo)

        put(H, X, [(X, 2)])
        put(H, Y, [(Y, -2)])
        put(X, Y, [(H, 1)])
        for a in range(1, m + 1):
            for b in range(1, m + 1):
                for c in range(1, m + 1):
                    for d in range(1, m + 1):
                        if (a, b) >= (c, d):
                            continue
                        combo = {}
                        if c == b:
                            _addinto(combo, glm(a, d), Fraction(1))
                        if a == d:
                            _addinto(combo, glm(c, b), Fraction(-1))
                        put(glm(a, b), glm(c, d), list(combo.items()))
        for i in range(n + 1):
            for a in range(1, m + 1):
                E = vel(i, a)
                if i < n:
                    put(X, E, [(vel(i + 1, a), 1)])
                put(H, E, [(E, 2 * i - n)])
                if i > 0:
                    put(Y, E, [(vel(i - 1, a), i * (n + 1 - i))])
                for b in range(1, m + 1):
                    for c in range(1, m + 1):
                        if c == a:
                            put(glm(b, c), E, [(vel(i, b), 1)])
        self._table = table
        # Pairs of negative-part elements whose bracket hits a given basis
        # element; used when building differentials sparsely.
        sources = {}
        for i in range(n):
            for a in range(1, m + 1):
                sources[vel(i + 1, a)] = ((X, vel(i, a)),)
        self._neg_sources = sources

    def bracket_basis(self, b1, b2):
        """[b1, b2] for single basis elements, as a tuple of (index, Fraction)."""
        return self._table.get((b1, b2), ())

    def bracket_raw(self, d1, d2):
        """Bracket of raw coefficient dicts; returns a raw dict."""
        out = {}
        table = self._table
        for i1, c1 in d1.items():
            for i2, c2 in d2.items():
                combo = table.get((i1, i2))
                if combo is None:
                    continue
                c12 = _clean(c1 * c2)
                if c12 == 0:
                    continue
                for idx, c in combo:
                    _addinto(out, idx, c12 * c)
        return out

    def bracket(self, x: GVector, y: GVector) -> GVector:
        self.validate(x)
        self.validate(y)
        out = GVector()
        out.terms = self.bracket_raw(x.terms, y.terms)
        return out

    def validate(self, x: GVector):
        for idx in x.terms:
            if idx[0] == "e":
                if not (1 <= idx[1] <= self.m and 1 <= idx[2] <= self.m):
                    raise IndexError("gl_m index out of range: %s" % (idx,))
            elif idx[0] == "E":
                if not (0 <= idx[1] <= self.n and 1 <= idx[2] <= self.m):
                    raise IndexError("E index out of range for (n,m)=(%d,%d): %s" % (self.n, self.m, idx))
            elif idx not in (X, H, Y):
                raise IndexError("unknown basis index %s" % (idx,))

    # -- grading -------------------------------------------------------------

    def _build_grading(self):
        bg = {X: (-1, 0), H: (0, 0), Y: (1, 0)}
        for a in range(1, self.m + 1):
            for b in range(1, self.m + 1):
                bg[glm(a, b)] = (0, 0)
        for i in range(self.n + 1):
            for a in range(1, self.m + 1):
                bg[vel(i, a)] = (-i, -1)
        self._bigrade = bg
        self._by_bigrade = {}
        for idx, g in bg.items():
            self._by_bigrade.setdefault(g, []).append(idx)
        for v in self._by_bigrade.values():
            v.sort(key=basis_key)

    def bigrade_of_basis(self, idx):
        return self._bigrade[idx]

    def degree_of_basis(self, idx):
        s, t = self._bigrade[idx]
        return s + t

    def basis_with_bigrade(self, s, t):
        return self._by_bigrade.get((s, t), [])

    def bigrade_decompose(self, x: GVector):
        """Split x into joint eigencomponents of ad_Z1 and ad_Z2."""
        self.validate(x)
        out = {}
        for idx, c in x.terms.items():
            out.setdefault(self._bigrade[idx], {})[idx] = c
        res = {}
        for g in sorted(out):
            v = GVector()
            v.terms = out[g]
            res[g] = v
        return res

    def filtration_degree(self, x: GVector):
        """Largest i with x in g^i; undefined (raises) for the zero vector."""
        self.validate(x)
        if x.is_zero():
            raise ZeroVectorError("filtration degree of the zero vector is undefined")
        return min(self.degree_of_basis(idx) for idx in x.terms)

    def leading_part(self, x: GVector) -> GVector:
        """gr_k(x) where k = filtration_degree(x)."""
        k = self.filtration_degree(x)
        out = GVector()
        out.terms = {idx: c for idx, c in x.terms.items() if self.degree_of_basis(idx) == k}
        return out

    def project_negative(self, x: GVector) -> GVector:
        """Component of x in g_- (grading degrees < 0)."""
        out = GVector()
        out.terms = {idx: c for idx, c in x.terms.items() if self.degree_of_basis(idx) < 0}
        return out

    # -- distinguished elements ----------------------------------------------

    def z1(self) -> GVector:
        half = Fraction(-1, 2)
        terms = {H: half}
        for a in range(1, self.m + 1):
            terms[glm(a, a)] = half * self.n
        return GVector(terms)

    def z2(self) -> GVector:
        return GVector({glm(a, a): Fraction(-1) for a in range(1, self.m + 1)})

    def grading_element(self) -> GVector:
        return self.z1() + self.z2()

    def identity_glm(self) -> GVector:
        return GVector({glm(a, a): Fraction(1) for a in range(1, self.m + 1)})

    # -- inner product ---------------------------------------------------------

    def _build_metric(self):
        n = self.n
        norms = {X: Fraction(1), Y: Fraction(1), H: Fraction(2)}
        for a in range(1, self.m + 1):
            for b in range(1, self.m + 1):
                norms[glm(a, b)] = Fraction(1)
        for i in range(n + 1):
            for a in range(1, self.m + 1):
                norms[vel(i, a)] = Fraction(factorial(i), factorial(n - i))
        self._norms = norms

    def norm_sq(self, idx):
        return self._norms[idx]

    def inner_product(self, x: GVector, y: GVector):
        self.validate(x)
        self.validate(y)
        total = Fraction(0)
        a, b = x.terms, y.terms
        if len(b) < len(a):
            a, b = b, a
        for idx, c in a.items():
            d = b.get(idx)
            if d is not None:
                total = total + c * d * self._norms[idx]
        return total

    def transpose_q(self, x: GVector) -> GVector:
        """Transpose on sl2 x gl_m (X <-> Y, H -> H, e_a^b -> e_b^a)."""
        out = {}
        for idx, c in x.terms.items():
            if idx == X:
                out[Y] = c
            elif idx == Y:
                out[X] = c
            elif idx == H:
                out[H] = c
            elif idx[0] == "e":
                out[glm(idx[2], idx[1])] = c
            else:
                raise ValueError("transpose is defined on sl2 x gl_m only")
        return GVector(out)

    # -- exponentials ----------------------------------------------------------

    def exp_ad(self, z: GVector, x: GVector) -> GVector:
        """exp(ad_z) x as a finite sum; z must act nilpotently on g."""
        self.validate(z)
        self.validate(x)
        acc = dict(x.terms)
        term = x.terms
        k = 0
        while term:
            k += 1
            if k > self.dim + 1:
                raise NonNilpotentError("ad_z is not nilpotent on g")
            term = self.bracket_raw(z.terms, term)
            term = {idx: _clean(c * Fraction(1, k)) for idx, c in term.items()}
            term = {idx: c for idx, c in term.items() if not (c == 0)}
            for idx, c in term.items():
                _addinto(acc, idx, c)
        out = GVector()
        out.terms = acc
        return out

    # -- structure checks -------------------------------------------------------

    def check_structure(self) -> StructureReport:
        """Verify the Jacobi identity, bi-grade compatibility and Z-degrees."""
        report = StructureReport(self.n, self.m, self.dim)
        expected_dim = self.m ** 2 + (self.n + 1) * self.m + 3
        if self.dim != expected_dim:
            report.violations.append(
                "dim mismatch: basis has %d elements, formula gives %d" % (self.dim, expected_dim))
        table = self._table
        bg = self._bigrade
        basis = self.basis
        # bi-grade compatibility and antisymmetry on pairs
        for p, b1 in enumerate(basis):
            if table.get((b1, b1)):
                report.violations.append("[%s,%s] != 0" % (basis_label(b1), basis_label(b1)))
            s1, t1 = bg[b1]
            for b2 in basis[p + 1:]:
                s2, t2 = bg[b2]
                for idx, _c in table.get((b1, b2), ()):
                    if bg[idx] != (s1 + s2, t1 + t2):
                        report.violations.append(
                            "bigrade violation in [%s,%s]" % (basis_label(b1), basis_label(b2)))
                        break
        # Z acts on g_k with eigenvalue k
        zvec = self.grading_element()
        for b in basis:
            got = self.bracket_raw(zvec.terms, {b: Fraction(1)})
            want = {b: Fraction(self.degree_of_basis(b))}
            want = {k: v for k, v in want.items() if v != 0}
            if got != want:
                report.violations.append("Z-degree violation at %s" % basis_label(b))
        # Jacobi on all basis triples
        for i, bi in enumerate(basis):
            di = {bi: Fraction(1)}
            for j in range(i + 1, self.dim):
                bj = basis[j]
                dj = {bj: Fraction(1)}
                for k in range(j + 1, self.dim):
                    bk = basis[k]
                    dk = {bk: Fraction(1)}
                    acc = {}
                    for idx, c in self.bracket_raw(di, self.bracket_raw(dj, dk)).items():
                        _addinto(acc, idx, c)
                    for idx, c in self.bracket_raw(dj, self.bracket_raw(dk, di)).items():
                        _addinto(acc, idx, c)
                    for idx, c in self.bracket_raw(dk, self.bracket_raw(di, dj)).items():
                        _addinto(acc, idx, c)
                    if acc:
                        report.violations.append(
                            "Jacobi fails on (%s,%s,%s)"
                            % (basis_label(bi), basis_label(bj), basis_label(bk)))
        return report


@lru_cache(maxsize=None)
def algebra(n, m) -> GradedAlgebra:
    """Cached constructor for g(n, m)."""
    return GradedAlgebra(n, m)
