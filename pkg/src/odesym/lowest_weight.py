"""Lowest weight vectors of the three irreducible trace/trace-free curvature modules.

The three module ids are "B4" (third-order only), "A2tr" (order >= 4) and
"A2tf" (any order).  For each, the distinguished 2-cochain is computed two
ways: by an exact linear solve (`solve_lwv`) imposing weight, annihilation,
closedness, filtration and membership conditions, and directly from closed
formulas (`closed_form_lwv`).  Both are normalized identically so they must
agree on the nose.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import GVector, GradedAlgebra, X, H, Y, glm, vel, basis_key, scalar_to_str
from .cochains import (
    Cochain, act, codifferential, contract_x, delta_image_coordinates, differential,
    dm_condition_holds, laplacian, monokey, monomials, partial_v,
    strong_regularity_holds, theta_coordinates, wedge_x, x_insertion_is_zero,
    cochain_inner,
)
from .linalg import EchelonSpan

__all__ = [
    "MODULE_IDS", "check_compat", "annihilator_basis", "alpha_over_beta",
    "phi_monomial", "closed_form_table", "cochain_from_table",
    "LWVSolution", "closed_form_lwv", "solve_lwv", "SolveError",
    "HarmonicReport", "verify_harmonic", "module_span_from_lwv",
    "psi_cochain", "d_psi_closed_form", "coclosedness_functional",
    "one_cochain_lemma_space", "b4_cochain",
]

MODULE_IDS = ("B4", "A2tr", "A2tf")


class SolveError(RuntimeError):
    """The constrained solution space failed to be 1-dimensional."""


def check_compat(module_id, n):
    if module_id not in MODULE_IDS:
        raise ValueError("unknown module id %r" % (module_id,))
    if module_id == "B4" and n != 2:
        raise ValueError("B4 requires n = 2")
    if module_id == "A2tr" and n < 3:
        raise ValueError("A2tr requires n >= 3")


def annihilator_basis(alg: GradedAlgebra, module_id) -> list:
    """Generators of the g_0 annihilator of the lowest weight vector."""
    check_compat(module_id, alg.n)
    m = alg.m
    z1, z2 = alg.z1(), alg.z2()
    gens = [z1 - z2]
    if module_id in ("B4", "A2tr"):
        # block lower triangular with diagonal blocks 1, m-1
        for a in range(2, m + 1):
            gens.append(GVector.basis(glm(a, 1)))
        for a in range(2, m + 1):
            for c in range(2, m + 1):
                if a != c:
                    gens.append(GVector.basis(glm(a, c)))
        for b in range(1, m):
            v = GVector.basis(glm(b, b)) - GVector.basis(glm(b + 1, b + 1))
            if b == 1:
                v = v + z2
            gens.append(v)
    else:
        # block lower triangular with diagonal blocks 1, m-2, 1
        for a in range(2, m):
            gens.append(GVector.basis(glm(a, 1)))
        gens.append(GVector.basis(glm(m, 1)))
        for c in range(2, m):
            gens.append(GVector.basis(glm(m, c)))
        for a in range(2, m):
            for c in range(2, m):
                if a != c:
                    gens.append(GVector.basis(glm(a, c)))
        for b in range(1, m):
            v = GVector.basis(glm(b, b)) - GVector.basis(glm(b + 1, b + 1))
            coef = 2 * (1 if b == 1 else 0) + (1 if b == m - 1 else 0)
            if coef:
                v = v + z2.scale(coef)
            gens.append(v)
    return gens


def alpha_over_beta(n, m) -> Fraction:
    """The trace-branch coefficient ratio alpha/beta."""
    return Fraction(-6 * (n - 1) * (m + 1), m * n * (n + 1) + 6)


def phi_monomial(alg: GradedAlgebra, module_id, i, j) -> Cochain:
    """The Phi^{i,j} building block of the A2-type modules (zero if out of range)."""
    n, m = alg.n, alg.m
    k = i + j - 1
    out = Cochain.zero(alg, 2)
    if not (0 <= i <= n and 0 <= j <= n and 0 <= k <= n):
        return out
    if module_id == "A2tr":
        for a in range(1, m + 1):
            if (i, 1) == (j, a):
                continue
            out = out + Cochain.monomial(alg, (vel(i, 1), vel(j, a)), vel(k, a))
    elif module_id == "A2tf":
        if i != j:
            out = out + Cochain.monomial(alg, (vel(i, 1), vel(j, 1)), vel(k, m))
    else:
        raise ValueError("phi_monomial applies to the A2 modules")
    return out


def closed_form_table(alg: GradedAlgebra, module_id):
    """The printed coefficient solution (c_{i,j}) with beta = 1."""
    check_compat(module_id, alg.n)
    n = alg.n
    beta = Fraction(1)
    c = {}
    if module_id == "A2tr":
        alpha = alpha_over_beta(n, alg.m) * beta
        for i in range(3, n + 1):
            c[(i, 0)] = (n - i + 1) * beta
        c[(2, 0)] = alpha + (n - 1) * beta
        c[(1, 0)] = Fraction(n, 2) * alpha + (n - 1) * beta
        c[(0, 1)] = -c[(1, 0)]
        for i in range(2, n + 1):
            c[(0, i)] = (i - n - 1) * (beta + Fraction(i, 2) * alpha)
        for i in range(1, n + 1):
            c[(1, i)] = (Fraction(n, 2) - i) * alpha + ((1 if i == 1 else 0) - 1) * beta
        for i in range(2, n + 1):
            c[(i, 1)] = beta + (alpha if i == 2 else 0)
        for i in range(2, n + 1):
            c[(2, i)] = (0 if i == n else 1) * alpha
    elif module_id == "A2tf":
        c[(1, 0)] = (n - 1) * beta
        for i in range(2, n + 1):
            c[(i, 0)] = (n - i + 1) * beta
        for i in range(2, n + 1):
            c[(i, 1)] = beta
        for (i, j) in list(c):
            c[(j, i)] = -c[(i, j)]
    else:
        raise ValueError("no coefficient table for B4")
    return {k: v for k, v in c.items() if v != 0}


def cochain_from_table(alg, module_id, table) -> Cochain:
    out = Cochain.zero(alg, 2)
    for (i, j), cij in sorted(table.items()):
        if cij:
            out = out + phi_monomial(alg, module_id, i, j).scale(cij)
    return out


def b4_cochain(alg: GradedAlgebra) -> Cochain:
    """The third-order lowest weight vector, leading coefficient normalized to 1."""
    check_compat("B4", alg.n)
    m = alg.m
    half = Fraction(1, 2)
    out = Cochain.monomial(alg, (vel(2, 1), vel(1, 1)), X)
    out = out + Cochain.monomial(alg, (vel(2, 1), vel(0, 1)), H, -half)
    out = out + Cochain.monomial(alg, (vel(1, 1), vel(0, 1)), Y, -half)
    for a in range(1, m + 1):
        out = out + Cochain.monomial(alg, (vel(2, 1), vel(0, a)), glm(a, 1))
        if a != 1:
            out = out + Cochain.monomial(alg, (vel(1, 1), vel(1, a)), glm(a, 1), -1)
        out = out + Cochain.monomial(alg, (vel(0, 1), vel(2, a)), glm(a, 1))
    return out


@dataclass
class LWVSolution:
    module_id: str
    alg: GradedAlgebra
    cochain: Cochain
    coefficient_table: dict | None
    normalization: str

    def to_json(self):
        obj = {
            "module": self.module_id,
            "n": self.alg.n,
            "m": self.alg.m,
            "normalization": self.normalization,
            "cochain": self.cochain.to_json(),
            "pretty": self.cochain.pretty(),
        }
        if self.coefficient_table is not None:
            obj["coefficient_table"] = {
                "%d,%d" % ij: scalar_to_str(c) for ij, c in sorted(self.coefficient_table.items())
            }
            if self.module_id == "A2tr":
                obj["alpha_over_beta"] = scalar_to_str(alpha_over_beta(self.alg.n, self.alg.m))
        return obj


def closed_form_lwv(alg, module_id) -> LWVSolution:
    check_compat(module_id, alg.n)
    if module_id == "B4":
        return LWVSolution("B4", alg, b4_cochain(alg), None,
                           "coefficient of E^2_1^E^1_1 (x) X set to 1")
    table = closed_form_table(alg, module_id)
    return LWVSolution(module_id, alg, cochain_from_table(alg, module_id, table), table,
                       "beta = c_{n,1} = 1")


# -- the solver ----------------------------------------------------------------------


def _is_diagonal(v: GVector) -> bool:
    for idx in v.terms:
        if idx == H:
            continue
        if idx[0] == "e" and idx[1] == idx[2]:
            continue
        return False
    return True


def _sr_pass(alg, T, val) -> bool:
    d1 = alg.degree_of_basis(T[0])
    d2 = alg.degree_of_basis(T[1])
    need = max(d1 + d2 + 1, min(d1, d2) - 1)
    return alg.degree_of_basis(val) >= need


def solve_lwv(alg: GradedAlgebra, module_id) -> LWVSolution:
    """Assemble the defining linear system and return its 1-dimensional solution.

    Conditions: bigrade, annihilation by lowering operators and by the
    annihilator generators, X-annihilation, V-closedness (B4), per-monomial
    strong regularity, the order >= 4 membership condition in the A2 cases,
    and for A2tr one pairing row from the coclosedness functional.
    """
    check_compat(module_id, alg.n)
    n, m = alg.n, alg.m
    if module_id == "B4":
        cands = monomials(alg, 2, args="V", values="q", bigrade=(2, 2))
    else:
        cands = monomials(alg, 2, args="V", values="V", bigrade=(1, 1))
    cands = [mono for mono in cands if _sr_pass(alg, *mono)]

    gens = annihilator_basis(alg, module_id)
    lowering = [GVector.basis(glm(a, c)) for a in range(2, m + 1) for c in range(1, a)]
    diag = [g for g in gens if _is_diagonal(g)]
    offdiag = [g for g in gens if not _is_diagonal(g)]

    # Diagonal annihilators act on monomials as exact eigenvectors: filter.
    kept = []
    for (T, val) in cands:
        mono = Cochain.monomial(alg, T, val)
        ok = True
        for g in diag:
            res = act(g, mono)
            if res.is_zero():
                continue
            coords = res.coordinates()
            if set(coords) != {(T, val)}:
                raise SolveError("diagonal generator is not acting diagonally")
            ok = False
            break
        if ok:
            kept.append((T, val))
    cands = kept
    ncand = len(cands)
    if ncand == 0:
        raise SolveError("empty candidate space")

    operators = [("low%d" % i, g) for i, g in enumerate(lowering)]
    operators += [("ann%d" % i, g) for i, g in enumerate(offdiag)]
    operators += [("X", GVector.basis(X))]

    rows = {}

    def put(tag, outkey, col, coeff):
        rows.setdefault((tag, outkey), {})[col] = coeff

    mono_cochains = [Cochain.monomial(alg, T, val) for (T, val) in cands]
    for tag, g in operators:
        for col, mono in enumerate(mono_cochains):
            res = act(g, mono)
            for key, c in res.coordinates().items():
                put(tag, key, col, c)
    if module_id == "B4":
        for col, mono in enumerate(mono_cochains):
            res = partial_v(mono)
            for key, c in res.coordinates().items():
                put("dV", key, col, c)
    if module_id == "A2tr":
        dpsi = d_psi_closed_form(alg)
        for col, mono in enumerate(mono_cochains):
            c = cochain_inner(dpsi, mono)
            if c:
                put("pairing", 0, col, c)

    nslack = 0
    if module_id != "B4" and n >= 3:
        deltas = delta_image_coordinates(alg)
        nslack = len(deltas)
        for col, mono in enumerate(mono_cochains):
            for key, c in theta_coordinates(mono).items():
                put("dm", key, col, c)
        for l, (_ia, coords) in enumerate(deltas):
            for key, c in coords.items():
                put("dm", key, ncand + l, -c)

    ncols = ncand + nslack
    ech = EchelonSpan()
    for key in sorted(rows, key=repr):
        ech.add(rows[key])
    pivots = set(ech.rows)
    kernel = []
    for fc in range(ncols):
        if fc in pivots:
            continue
        vec = {fc: Fraction(1)}
        for p, row in ech.rows.items():
            c = row.get(fc)
            if c:
                vec[p] = -c
        kernel.append(vec)

    # Project away the slack coordinates and re-echelonize.
    proj = EchelonSpan()
    for vec in kernel:
        proj.add({k: v for k, v in vec.items() if k < ncand})
    if proj.dim != 1:
        raise SolveError(
            "solution space for %s at (n,m)=(%d,%d) has dimension %d, expected 1"
            % (module_id, n, m, proj.dim))
    sol = proj.basis()[0]
    coords = {}
    for col, c in sol.items():
        T, val = cands[col]
        coords[(T, val)] = c
    phi = Cochain.from_coordinates(alg, 2, coords)

    # scale normalization
    if module_id == "B4":
        lead = phi.coeff((vel(2, 1), vel(1, 1)), X)
        norm_note = "coefficient of E^2_1^E^1_1 (x) X set to 1"
        table = None
    elif module_id == "A2tr":
        lead = phi.coeff((vel(n, 1), vel(1, 2)), vel(n, 2))
        norm_note = "beta = c_{n,1} = 1"
    else:
        lead = phi.coeff((vel(n, 1), vel(1, 1)), vel(n, m)) / 2
        norm_note = "beta = c_{n,1} = 1"
    if lead == 0:
        raise SolveError("normalizing coefficient vanished")
    phi = phi.scale(Fraction(1) / lead)

    if module_id == "B4":
        pass
    else:
        table = _extract_table(alg, module_id, phi)
        if cochain_from_table(alg, module_id, table) != phi:
            raise SolveError("coefficient table does not reconstruct the cochain")

    out = LWVSolution(module_id, alg, phi, table, norm_note)
    report = verify_harmonic(out)
    if not report.passed:
        raise SolveError("solved vector failed verification: %s" % report.as_dict())
    return out


def _extract_table(alg, module_id, phi: Cochain):
    n, m = alg.n, alg.m
    table = {}
    for i in range(n + 1):
        for j in range(n + 1):
            k = i + j - 1
            if not (0 <= k <= n):
                continue
            if module_id == "A2tr":
                c = phi.coeff((vel(i, 1), vel(j, 2)), vel(k, 2))
            else:
                if i == j:
                    continue
                c = phi.coeff((vel(i, 1), vel(j, 1)), vel(k, m)) / 2
            if c:
                table[(i, j)] = c
    return table


@dataclass
class HarmonicReport:
    d_zero: bool
    dstar_zero: bool
    laplacian_zero: bool
    strongly_regular: bool
    x_insertion_zero: bool
    dm_holds: bool | None

    @property
    def passed(self):
        checks = [self.d_zero, self.dstar_zero, self.laplacian_zero,
                  self.strongly_regular, self.x_insertion_zero]
        if self.dm_holds is not None:
            checks.append(self.dm_holds)
        return all(checks)

    def as_dict(self):
        d = {
            "d_zero": self.d_zero,
            "dstar_zero": self.dstar_zero,
            "laplacian_zero": self.laplacian_zero,
            "strongly_regular": self.strongly_regular,
            "x_insertion_zero": self.x_insertion_zero,
        }
        if self.dm_holds is not None:
            d["dm_holds"] = self.dm_holds
        return d


def verify_harmonic(sol: LWVSolution) -> HarmonicReport:
    phi = sol.cochain
    alg = sol.alg
    dm = None
    if sol.module_id in ("A2tr", "A2tf") and alg.n >= 3:
        dm = dm_condition_holds(phi)
    return HarmonicReport(
        d_zero=differential(phi).is_zero(),
        dstar_zero=codifferential(phi).is_zero(),
        laplacian_zero=laplacian(phi).is_zero(),
        strongly_regular=strong_regularity_holds(phi),
        x_insertion_zero=x_insertion_is_zero(phi),
        dm_holds=dm,
    )


def module_span_from_lwv(alg, sol: LWVSolution):
    """Closure of the lowest weight vector under the raising operators of sl_m.

    Returns (basis cochains, dimension).
    """
    m = alg.m
    raising = [GVector.basis(glm(a, c)) for a in range(1, m + 1) for c in range(a + 1, m + 1)]
    span = EchelonSpan()
    span.add(sol.cochain.coordinates())
    frontier = [sol.cochain]
    while frontier:
        nxt = []
        for phi in frontier:
            for g in raising:
                psi = act(g, phi)
                if not psi.is_zero() and span.add(psi.coordinates()):
                    nxt.append(psi)
        frontier = nxt
    basis = [Cochain.from_coordinates(alg, 2, row) for row in span.basis()]
    return basis, span.dim


# -- the 1-cochain used for the coclosedness functional ------------------------------


def psi_cochain(alg) -> Cochain:
    """-2 E^{2,1} (x) X + E^{1,1} (x) H + E^{0,1} (x) Y."""
    out = Cochain.monomial(alg, (vel(2, 1),), X, -2)
    out = out + Cochain.monomial(alg, (vel(1, 1),), H)
    out = out + Cochain.monomial(alg, (vel(0, 1),), Y)
    return out


def d_psi_closed_form(alg) -> Cochain:
    """-2 sum Phi^{2,k} + sum (2k-n) Phi^{1,k} + sum k(n+1-k) Phi^{0,k}."""
    n = alg.n
    out = Cochain.zero(alg, 2)
    for k in range(n):
        out = out + phi_monomial(alg, "A2tr", 2, k).scale(-2)
    for k in range(n + 1):
        out = out + phi_monomial(alg, "A2tr", 1, k).scale(2 * k - n)
    for k in range(1, n + 1):
        out = out + phi_monomial(alg, "A2tr", 0, k).scale(k * (n + 1 - k))
    return out


def coclosedness_functional(alg, table) -> Fraction:
    """The exact linear functional on coefficient tables that coclosedness forces to 0."""
    n, m = alg.n, alg.m
    if n < 3:
        raise ValueError("the functional is defined for n >= 3")

    def c(i, j):
        return table.get((i, j), Fraction(0))

    total = Fraction(0)
    for k in range(n):
        total += Fraction((n - k) * (k + 1), n * (n - 1)) * (c(k, 2) - m * c(2, k))
    for k in range(n + 1):
        total += Fraction(2 * k - n, n) * (m * c(1, k) - c(k, 1))
    for k in range(1, n + 1):
        total += m * c(0, k) - c(k, 0)
    return total


def one_cochain_lemma_space(alg):
    """Bigrade-(1,1) 1-cochains killed by X and by the A2tr annihilator."""
    check_compat("A2tr", alg.n)
    cands = monomials(alg, 1, args="neg", values="g", bigrade=(1, 1))
    gens = annihilator_basis(alg, "A2tr")
    diag = [g for g in gens if _is_diagonal(g)]
    offdiag = [g for g in gens if not _is_diagonal(g)]
    kept = []
    for (T, val) in cands:
        mono = Cochain.monomial(alg, T, val)
        if all(act(g, mono).is_zero() for g in diag):
            kept.append((T, val))
    cands = kept
    rows = {}
    mono_cochains = [Cochain.monomial(alg, T, val) for (T, val) in cands]
    for gi, g in enumerate([GVector.basis(X)] + offdiag):
        for col, mono in enumerate(mono_cochains):
            for key, c in act(g, mono).coordinates().items():
                rows.setdefault((gi, key), {})[col] = c
    ech = EchelonSpan()
    for key in sorted(rows, key=repr):
        ech.add(rows[key])
    pivots = set(ech.rows)
    out = []
    for fc in range(len(cands)):
        if fc in pivots:
            continue
        vec = {fc: Fraction(1)}
        for p, row in ech.rows.items():
            cc = row.get(fc)
            if cc:
                vec[p] = -cc
        coords = {}
        for col, c in vec.items():
            T, val = cands[col]
            coords[(T, val)] = c
        out.append(Cochain.from_coordinates(alg, 1, coords))
    return out
