"""Cochains on the negative part, differentials, codifferential and Laplacian.

A k-cochain lives in Lambda^k g_-^* (x) g.  Entries are stored only on strictly
increasing argument tuples (canonical basis order, X first); evaluation on
other orderings applies the permutation sign, so alternation holds by
construction.  The wedge convention is (alpha ^ beta)(u, v) = alpha(u) beta(v)
- alpha(v) beta(u).
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from .algebra import (
    GVector, GradedAlgebra, X, basis_key, basis_label, basis_from_label,
    scalar_to_str, scalar_from_str, vel,
)
from .linalg import EchelonSpan

__all__ = [
    "Cochain", "sorted_with_sign", "monokey", "monomials",
    "differential", "partial_v", "act", "exp_act", "codifferential", "laplacian",
    "x_insertion_is_zero", "strong_regularity_holds",
    "theta_coordinates", "delta_image_coordinates", "dm_condition_holds",
    "cochain_inner", "contract_x", "wedge_x", "random_cochain",
]


def sorted_with_sign(args):
    """Sort a tuple of basis indices; returns (sorted_tuple, sign) or (None, 0) on repeats."""
    keyed = [(basis_key(a), a) for a in args]
    arr = list(keyed)
    sign = 1
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j - 1][0] > arr[j][0]:
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(arr)):
        if arr[i - 1][0] == arr[i][0]:
            return None, 0
    return tuple(a for _k, a in arr), sign


def monokey(mono):
    """Deterministic order key for a monomial (args_tuple, value_index)."""
    args, val = mono
    return (tuple(basis_key(a) for a in args), basis_key(val))


class Cochain:
    """Alternating k-form on g_- with values in g, exact coefficients."""

    __slots__ = ("alg", "degree", "entries")

    def __init__(self, alg: GradedAlgebra, degree: int, entries=None):
        if degree < 0:
            raise ValueError("cochain degree must be >= 0")
        self.alg = alg
        self.degree = degree
        data = {}
        if entries:
            items = entries.items() if isinstance(entries, dict) else entries
            for T, v in items:
                if len(T) != degree:
                    raise ValueError("argument tuple %s has wrong length" % (T,))
                Ts, sign = sorted_with_sign(T)
                if Ts is None:
                    continue
                v = v if sign == 1 else -v
                if Ts in data:
                    v = data[Ts] + v
                if v.is_zero():
                    data.pop(Ts, None)
                else:
                    data[Ts] = v
        self.entries = data

    # -- constructors ----------------------------------------------------------

    @staticmethod
    def zero(alg, degree):
        return Cochain(alg, degree)

    @staticmethod
    def monomial(alg, args, value, coeff=1):
        """c * xi^{args[0]} ^ ... (x) value, with `value` a basis index or GVector."""
        if not isinstance(value, GVector):
            value = GVector.basis(value)
        return Cochain(alg, len(args), [(tuple(args), value.scale(coeff))])

    @staticmethod
    def from_coordinates(alg, degree, coords):
        entries = {}
        for (T, val), c in coords.items():
            v = entries.get(T, GVector.zero()) + GVector.basis(val, c)
            entries[T] = v
        return Cochain(alg, degree, entries)

    # -- basic structure -------------------------------------------------------

    def is_zero(self):
        return not self.entries

    def items(self):
        return sorted(self.entries.items(), key=lambda kv: tuple(basis_key(b) for b in kv[0]))

    def coordinates(self):
        out = {}
        for T, v in self.entries.items():
            for idx, c in v.terms.items():
                out[(T, idx)] = c
        return out

    def coeff(self, args, value_idx):
        """Signed coefficient of the monomial xi^{args} (x) value_idx."""
        Ts, sign = sorted_with_sign(tuple(args))
        if Ts is None:
            return Fraction(0)
        v = self.entries.get(Ts)
        if v is None:
            return Fraction(0)
        return sign * v.coeff(value_idx)

    def __add__(self, other):
        self._check_compat(other)
        data = dict(self.entries)
        for T, v in other.entries.items():
            w = data.get(T, GVector.zero()) + v
            if w.is_zero():
                data.pop(T, None)
            else:
                data[T] = w
        out = Cochain(self.alg, self.degree)
        out.entries = data
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        out = Cochain(self.alg, self.degree)
        data = {}
        for T, v in self.entries.items():
            w = v.scale(c)
            if not w.is_zero():
                data[T] = w
        out.entries = data
        return out

    __mul__ = scale
    __rmul__ = scale

    def subs(self, mapping):
        out = Cochain(self.alg, self.degree)
        data = {}
        for T, v in self.entries.items():
            w = v.subs(mapping)
            if not w.is_zero():
                data[T] = w
        out.entries = data
        return out

    def __eq__(self, other):
        if not isinstance(other, Cochain):
            return NotImplemented
        return self.degree == other.degree and (self - other).is_zero()

    def __hash__(self):
        raise TypeError("Cochain is not hashable")

    def _check_compat(self, other):
        if self.alg is not other.alg or self.degree != other.degree:
            raise ValueError("cochain mismatch (algebra or degree)")

    # -- evaluation --------------------------------------------------------------

    def evaluate_basis(self, T):
        """Value on an already sorted, duplicate-free tuple of basis indices."""
        return self.entries.get(T, GVector.zero())

    def evaluate(self, args):
        Ts, sign = sorted_with_sign(tuple(args))
        if Ts is None:
            return GVector.zero()
        v = self.entries.get(Ts)
        if v is None:
            return GVector.zero()
        return v if sign == 1 else -v

    def evaluate_gv(self, args):
        """Multilinear evaluation on GVector arguments."""
        out = GVector.zero()
        self._eval_rec(list(args), 0, Fraction(1), [], out)
        return out

    def _eval_rec(self, args, pos, coeff, fixed, out):
        if pos == len(args):
            v = self.evaluate(tuple(fixed))
            if not v.is_zero():
                tmp = v.scale(coeff)
                for idx, c in tmp.terms.items():
                    cur = out.terms.get(idx)
                    new = c if cur is None else cur + c
                    if hasattr(new, "expand"):
                        new = new.expand()
                    if new == 0:
                        out.terms.pop(idx, None)
                    else:
                        out.terms[idx] = new
            return
        a = args[pos]
        if isinstance(a, GVector):
            for idx, c in a.terms.items():
                self._eval_rec(args, pos + 1, coeff * c, fixed + [idx], out)
        else:
            self._eval_rec(args, pos + 1, coeff, fixed + [a], out)

    # -- gradings ------------------------------------------------------------------

    def monomial_bigrade(self, T, val):
        alg = self.alg
        s, t = alg.bigrade_of_basis(val)
        for b in T:
            bs, bt = alg.bigrade_of_basis(b)
            s -= bs
            t -= bt
        return (s, t)

    def bigrade_components(self):
        buckets = {}
        for (T, val), c in self.coordinates().items():
            buckets.setdefault(self.monomial_bigrade(T, val), {})[(T, val)] = c
        return {g: Cochain.from_coordinates(self.alg, self.degree, coords)
                for g, coords in sorted(buckets.items())}

    def degree_components(self):
        buckets = {}
        for (T, val), c in self.coordinates().items():
            s, t = self.monomial_bigrade(T, val)
            buckets.setdefault(s + t, {})[(T, val)] = c
        return {d: Cochain.from_coordinates(self.alg, self.degree, coords)
                for d, coords in sorted(buckets.items())}

    # -- io ---------------------------------------------------------------------------

    def to_json(self):
        return {
            "degree": self.degree,
            "entries": [
                {"args": [basis_label(b) for b in T], "value": v.to_json()}
                for T, v in self.items()
            ],
        }

    @staticmethod
    def from_json(alg, obj):
        entries = []
        for e in obj["entries"]:
            T = tuple(basis_from_label(s) for s in e["args"])
            entries.append((T, GVector.from_json(e["value"])))
        return Cochain(alg, obj["degree"], entries)

    def pretty(self):
        if self.is_zero():
            return "0"
        parts = []
        for T, v in self.items():
            head = " ^ ".join(_dual_label(b) for b in T) if T else "1"
            for idx, c in v.items():
                parts.append("%s * %s (x) %s" % (c, head, basis_label(idx)))
        return "  +  ".join(parts)

    def __repr__(self):
        return "Cochain(k=%d, %s)" % (self.degree, self.pretty())


def _dual_label(b):
    if b == X:
        return "X*"
    return "E^%d_%d" % (b[1], b[2])


# -- monomial enumeration -------------------------------------------------------------


def monomials(alg, degree, args="neg", values="g", bigrade=None):
    """Sorted (args_tuple, value_index) monomials of Lambda^k g_-^* (x) g.

    args: "neg" for all of g_-, "V" for E-duals only.
    values: "g", "q" (sl2 x gl_m part) or "V".
    """
    if args == "neg":
        arg_basis = alg.negative_basis
    elif args == "V":
        arg_basis = [b for b in alg.negative_basis if b != X]
    else:
        raise ValueError(args)
    if values == "g":
        val_basis = alg.basis
    elif values == "q":
        val_basis = [b for b in alg.basis if b[0] != "E"]
    elif values == "V":
        val_basis = [b for b in alg.basis if b[0] == "E"]
    else:
        raise ValueError(values)
    out = []
    for T in combinations(arg_basis, degree):
        if bigrade is not None:
            s = t = 0
            for b in T:
                bs, bt = alg.bigrade_of_basis(b)
                s -= bs
                t -= bt
        for val in val_basis:
            if bigrade is not None:
                vs, vt = alg.bigrade_of_basis(val)
                if (s + vs, t + vt) != bigrade:
                    continue
            out.append((T, val))
    out.sort(key=monokey)
    return out


# -- differentials ---------------------------------------------------------------------


def differential(phi: Cochain) -> Cochain:
    """Chevalley-Eilenberg differential of the g_- module g."""
    alg = phi.alg
    k = phi.degree
    cands = set()
    for T in phi.entries:
        Tset = set(T)
        for b in alg.negative_basis:
            if b not in Tset:
                Ts, _ = sorted_with_sign(T + (b,))
                cands.add(Ts)
        for p, t in enumerate(T):
            for (b1, b2) in alg._neg_sources.get(t, ()):
                rest = T[:p] + T[p + 1:]
                if b1 in rest or b2 in rest:
                    continue
                Ts, _ = sorted_with_sign(rest + (b1, b2))
                if Ts is not None:
                    cands.add(Ts)
    out = {}
    for T in sorted(cands, key=lambda T: tuple(basis_key(b) for b in T)):
        val = GVector.zero()
        for i, x in enumerate(T):
            sub = T[:i] + T[i + 1:]
            v = phi.evaluate_basis(sub)
            if not v.is_zero():
                term = GVector()
                term.terms = alg.bracket_raw({x: Fraction(1)}, v.terms)
                val = val + term if i % 2 == 0 else val - term
        for i in range(len(T)):
            for j in range(i + 1, len(T)):
                br = alg.bracket_basis(T[i], T[j])
                if not br:
                    continue
                rest = T[:i] + T[i + 1:j] + T[j + 1:]
                sgn = 1 if (i + j) % 2 == 0 else -1
                for (z, c) in br:
                    v = phi.evaluate((z,) + rest)
                    if not v.is_zero():
                        val = val + v.scale(sgn * c)
        if not val.is_zero():
            out[T] = val
    res = Cochain(alg, k + 1)
    res.entries = out
    return res


def partial_v(phi: Cochain) -> Cochain:
    """Differential of the abelian subalgebra spanned by the E_{i,a}, acting on g.

    Defined on cochains with E-only arguments (no X* component).
    """
    alg = phi.alg
    if not x_insertion_is_zero(phi):
        raise ValueError("partial_v needs a cochain with zero X-insertion")
    k = phi.degree
    ebasis = [b for b in alg.negative_basis if b != X]
    cands = set()
    for T in phi.entries:
        Tset = set(T)
        for b in ebasis:
            if b not in Tset:
                Ts, _ = sorted_with_sign(T + (b,))
                cands.add(Ts)
    out = {}
    for T in sorted(cands, key=lambda T: tuple(basis_key(b) for b in T)):
        val = GVector.zero()
        for i, x in enumerate(T):
            sub = T[:i] + T[i + 1:]
            v = phi.evaluate_basis(sub)
            if not v.is_zero():
                term = GVector()
                term.terms = alg.bracket_raw({x: Fraction(1)}, v.terms)
                val = val + term if i % 2 == 0 else val - term
        if not val.is_zero():
            out[T] = val
    res = Cochain(alg, k + 1)
    res.entries = out
    return res


def _act_shift(alg, z: GVector):
    """Validate the actor and return its bigrade shift."""
    comps = alg.bigrade_decompose(z)
    if len(comps) != 1:
        raise ValueError("actor must be bigrade-homogeneous")
    (bg, _v), = comps.items()
    if bg == (0, 0):
        return bg
    if bg == (-1, 0) and set(z.terms) == {X}:
        return bg
    raise ValueError("actor must lie in g_0 or span{X}")


def act(z: GVector, phi: Cochain) -> Cochain:
    """Natural tensor action: (z.phi)(v1..vk) = [z, phi(v..)] - sum_i phi(.., [z, vi], ..)."""
    alg = phi.alg
    if z.is_zero():
        return Cochain.zero(alg, phi.degree)
    zs, zt = _act_shift(alg, z)
    cands = set(phi.entries)
    for T in phi.entries:
        for p, t in enumerate(T):
            ts, tt = alg.bigrade_of_basis(t)
            for b in alg.basis_with_bigrade(ts - zs, tt - zt):
                if b not in alg.negative_set:
                    continue
                rest = T[:p] + T[p + 1:]
                if b in rest:
                    continue
                Ts, _ = sorted_with_sign(rest + (b,))
                cands.add(Ts)
    out = {}
    for T in sorted(cands, key=lambda T: tuple(basis_key(b) for b in T)):
        v = phi.evaluate_basis(T)
        val = GVector.zero()
        if not v.is_zero():
            t0 = GVector()
            t0.terms = alg.bracket_raw(z.terms, v.terms)
            val = val + t0
        for i, t in enumerate(T):
            zb = GVector()
            zb.terms = alg.bracket_raw(z.terms, {t: Fraction(1)})
            if zb.is_zero():
                continue
            val = val - phi.evaluate_gv(T[:i] + (zb,) + T[i + 1:])
        if not val.is_zero():
            out[T] = val
    res = Cochain(alg, phi.degree)
    res.entries = out
    return res


def exp_act(z: GVector, phi: Cochain, max_iter=None) -> Cochain:
    """exp of the action operator for nilpotently acting z (e.g. off-diagonal gl_m)."""
    alg = phi.alg
    bound = max_iter if max_iter is not None else (alg.dim + 1) ** 2
    acc = phi
    term = phi
    k = 0
    while not term.is_zero():
        k += 1
        if k > bound:
            raise ValueError("actor does not act nilpotently")
        term = act(z, term).scale(Fraction(1, k))
        acc = acc + term
    return acc


def x_insertion_is_zero(phi: Cochain) -> bool:
    """True iff inserting X into any slot gives zero (all stored tuples avoid X)."""
    return all(X not in T for T in phi.entries)


def strong_regularity_holds(phi: Cochain) -> bool:
    """Filtration condition: values land in g^{i+j+1} and g^{min(i,j)-1} per entry."""
    if phi.degree != 2:
        raise ValueError("strong regularity is a condition on 2-cochains")
    alg = phi.alg
    for (b1, b2), v in phi.entries.items():
        d1 = alg.degree_of_basis(b1)
        d2 = alg.degree_of_basis(b2)
        need = max(d1 + d2 + 1, min(d1, d2) - 1)
        if alg.filtration_degree(v) < need:
            return False
    return True


# -- codifferential and Laplacian ---------------------------------------------------------


def _weight(alg, T):
    w = Fraction(1)
    for b in T:
        w /= alg.norm_sq(b)
    return w


def codifferential(phi: Cochain) -> Cochain:
    """Adjoint of the full differential on Lambda^* g^* (x) g w.r.t. the induced metric.

    Because g_- is a subalgebra, pairing against a cochain that annihilates the
    non-negative part only ever probes monomials with arguments inside g_-, so
    the result is again a cochain on g_-.
    """
    alg = phi.alg
    k = phi.degree
    if k < 1:
        raise ValueError("codifferential needs degree >= 1")
    accum = {}

    def add(S, w, c):
        key = (S, w)
        cur = accum.get(key)
        new = c if cur is None else cur + c
        if hasattr(new, "expand"):
            new = new.expand()
        if new == 0:
            accum.pop(key, None)
        else:
            accum[key] = new

    for T, v in phi.entries.items():
        wT = _weight(alg, T)
        for i, t in enumerate(T):
            S = T[:i] + T[i + 1:]
            sgn = 1 if i % 2 == 0 else -1
            for w in alg.basis:
                combo = alg.bracket_basis(t, w)
                if not combo:
                    continue
                ip = 0
                for idx, c in combo:
                    cv = v.terms.get(idx)
                    if cv is not None:
                        ip = ip + cv * c * alg.norm_sq(idx)
                if not (ip == 0):
                    add(S, w, sgn * ip * wT)
        for i in range(k):
            for j in range(i + 1, k):
                br = alg.bracket_basis(T[i], T[j])
                if not br:
                    continue
                rest = T[:i] + T[i + 1:j] + T[j + 1:]
                sgn = 1 if (i + j) % 2 == 0 else -1
                for (z, c) in br:
                    if z in rest:
                        continue
                    S, s2 = sorted_with_sign((z,) + rest)
                    for w, vw in v.terms.items():
                        add(S, w, sgn * s2 * c * vw * alg.norm_sq(w) * wT)
    out = {}
    for (S, w), c in accum.items():
        coeff = c / alg.norm_sq(w)
        for b in S:
            coeff = coeff * alg.norm_sq(b)
        if coeff == 0:
            continue
        cur = out.get(S, GVector.zero()) + GVector.basis(w, coeff)
        if cur.is_zero():
            out.pop(S, None)
        else:
            out[S] = cur
    res = Cochain(alg, k - 1)
    res.entries = out
    return res


def laplacian(phi: Cochain) -> Cochain:
    if phi.degree < 1:
        raise ValueError("laplacian needs degree >= 1")
    return differential(codifferential(phi)) + codifferential(differential(phi))


def cochain_inner(phi: Cochain, psi: Cochain):
    """Induced inner product on Lambda^k g_-^* (x) g (diagonal on monomials)."""
    phi._check_compat(psi)
    alg = phi.alg
    total = Fraction(0)
    a, b = phi.entries, psi.entries
    if len(b) < len(a):
        a, b = b, a
    for T, v in a.items():
        w = b.get(T)
        if w is not None:
            total = total + alg.inner_product(v, w) * _weight(alg, T)
    return total


def contract_x(phi: Cochain) -> Cochain:
    """Insertion of X into the first slot."""
    alg = phi.alg
    out = {}
    for T, v in phi.entries.items():
        if T and T[0] == X:
            out[T[1:]] = v
    res = Cochain(alg, phi.degree - 1)
    res.entries = out
    return res


def wedge_x(phi: Cochain) -> Cochain:
    """X* ^ phi for an X-free cochain (X is first in the canonical order)."""
    alg = phi.alg
    if not x_insertion_is_zero(phi):
        raise ValueError("wedge_x needs an X-free cochain")
    out = {(X,) + T: v for T, v in phi.entries.items()}
    res = Cochain(alg, phi.degree + 1)
    res.entries = out
    return res


# -- Doubrov-Medvedev membership machinery ---------------------------------------------------


def _check_v_valued(phi: Cochain):
    if not x_insertion_is_zero(phi):
        raise ValueError("cochain must have zero X-insertion")
    for _T, v in phi.entries.items():
        for idx in v.terms:
            if idx[0] != "E":
                raise ValueError("cochain must be valued in the abelian part")


def theta_coordinates(phi: Cochain):
    """Restriction to Lambda^2 F with values mod F, as coordinates ((pair), c) -> coeff.

    F is spanned by E_{i,a} with i <= n-1; the quotient coordinate c indexes
    the E_{n,c} component.
    """
    alg = phi.alg
    n = alg.n
    out = {}
    for (b1, b2), v in phi.entries.items():
        if b1[0] != "E" or b2[0] != "E" or b1[1] > n - 1 or b2[1] > n - 1:
            continue
        for idx, c in v.terms.items():
            if idx[0] == "E" and idx[1] == n:
                out[((b1, b2), idx[2])] = c
    return out


def delta_image_coordinates(alg):
    """Coordinate vectors of delta(E^{i,a} (x) X) for 0 <= i <= n-1, 1 <= a <= m."""
    n, m = alg.n, alg.m
    vecs = []
    for i in range(n):
        for a in range(1, m + 1):
            coords = {}
            for c in range(1, m + 1):
                # (delta B)(E_{i,a}, E_{n-1,c}) = [X, E_{n-1,c}] = E_{n,c} mod F
                p, q = vel(i, a), vel(n - 1, c)
                if p == q:
                    continue
                pair, sign = sorted_with_sign((p, q))
                coords[(pair, c)] = coords.get((pair, c), Fraction(0)) + sign
            coords = {k: v for k, v in coords.items() if v != 0}
            if coords:
                vecs.append(((i, a), coords))
    return vecs


def dm_condition_holds(phi: Cochain) -> bool:
    """Membership theta(phi) in img(delta); the order condition n >= 3 is enforced."""
    alg = phi.alg
    if alg.n < 3:
        raise ValueError("the membership condition is not defined for n = 2")
    if phi.degree != 2:
        raise ValueError("expected a 2-cochain")
    _check_v_valued(phi)
    span = EchelonSpan()
    for _ia, coords in delta_image_coordinates(alg):
        span.add(coords)
    return span.contains(theta_coordinates(phi))


def random_cochain(alg, degree, rng, entries=6, values="g"):
    """Seeded sparse random cochain for adjointness/property testing."""
    if values == "g":
        val_basis = alg.basis
    else:
        val_basis = [b for b in alg.basis if b[0] == "E"]
    neg = alg.negative_basis
    data = []
    for _ in range(entries):
        T = tuple(rng.sample(neg, degree))
        val = val_basis[rng.randrange(len(val_basis))]
        c = Fraction(rng.randint(-9, 9), rng.randint(1, 7))
        if c == 0:
            c = Fraction(1)
        data.append((T, GVector.basis(val, c)))
    return Cochain(alg, degree, data)
