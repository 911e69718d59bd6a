"""Exact linear algebra over the rationals.

Dense routines (RREF, nullspace, rank) work on lists of Fraction rows and are
used for the small solve steps.  The sparse echelon classes work on coefficient
dicts keyed by arbitrary orderable coordinates and keep rows as primitive
integer vectors, i.e. fraction-free elimination with content reduction, which
keeps entries small and the outcome deterministic.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd

__all__ = [
    "rref", "nullspace", "rank_dense", "solve_coordinates",
    "EchelonSpan", "SparseRank", "primitive_int",
]


def rref(rows, ncols):
    """Reduced row echelon form with leftmost-pivot selection.

    Returns (reduced_rows, pivot_cols).  Input rows are lists of Fractions and
    are not modified.
    """
    mat = [list(map(Fraction, r)) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        pr = None
        for i in range(r, len(mat)):
            if mat[i][c] != 0:
                pr = i
                break
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        pv = mat[r][c]
        mat[r] = [v / pv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return mat[:r], pivots


def rank_dense(rows, ncols):
    return len(rref(rows, ncols)[0])


def nullspace(rows, ncols):
    """Canonical nullspace basis (one vector per free column, free entry = 1)."""
    red, pivots = rref(rows, ncols)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][fc]
        basis.append(v)
    return basis


def solve_coordinates(basis_rows, target, ncols):
    """Express target as a combination of basis_rows; None if not in the span."""
    if all(t == 0 for t in target):
        return [Fraction(0)] * len(basis_rows)
    aug = [list(r) + [Fraction(0)] for r in basis_rows]
    # Solve basis^T c = target by row-reducing [basis^T | target].
    cols = len(basis_rows)
    mat = []
    for j in range(ncols):
        mat.append([basis_rows[i][j] for i in range(cols)] + [Fraction(target[j])])
    red, pivots = rref(mat, cols + 1)
    if cols in pivots:
        return None
    sol = [Fraction(0)] * cols
    for r, pc in enumerate(pivots):
        sol[pc] = red[r][cols]
    del aug
    return sol


def primitive_int(row):
    """Scale a dict of Fractions to a primitive integer dict with positive lead.

    The lead is the entry at the smallest key in iteration-independent sorted
    order; callers pass dicts whose keys are tuples with total order.
    """
    if not row:
        return {}
    den = 1
    for v in row.values():
        den = den * (v.denominator // gcd(den, v.denominator))
    ints = {k: int(v * den) for k, v in row.items()}
    g = 0
    for v in ints.values():
        g = gcd(g, v)
    if g > 1:
        ints = {k: v // g for k, v in ints.items()}
    lead = min(ints)
    if ints[lead] < 0:
        ints = {k: -v for k, v in ints.items()}
    return ints


class SparseRank:
    """Rank accumulator over sparse integer rows keyed by orderable coordinates."""

    def __init__(self):
        self.pivots = {}  # pivot key -> primitive integer row (dict)

    def add(self, row):
        """Reduce a coefficient dict against current pivots; returns True if rank grew."""
        row = {k: Fraction(v) for k, v in row.items() if v != 0}
        if not row:
            return False
        row = primitive_int(row)
        while row:
            lead = min(row)
            piv = self.pivots.get(lead)
            if piv is None:
                self.pivots[lead] = row
                return True
            a = row[lead]
            b = piv[lead]
            g = gcd(a, b)
            fa, fb = b // g, a // g
            new = {}
            for k, v in row.items():
                new[k] = v * fa
            for k, v in piv.items():
                nv = new.get(k, 0) - fb * v
                if nv:
                    new[k] = nv
                elif k in new:
                    del new[k]
            row = new
            if row:
                g = 0
                for v in row.values():
                    g = gcd(g, v)
                if g > 1:
                    row = {k: v // g for k, v in row.items()}
        return False

    @property
    def rank(self):
        return len(self.pivots)


def _entry(v):
    # ints become Fractions; exact symbolic coefficients pass through expanded
    if isinstance(v, int):
        return Fraction(v)
    if hasattr(v, "expand"):
        return v.expand()
    return v


class EchelonSpan:
    """Reduced-echelon span of coefficient dicts over orderable coordinate keys.

    Rows are kept in reduced form: each pivot coefficient is 1 and no row has a
    nonzero entry at another row's pivot, so the basis is the canonical one for
    the given coordinate order.  `keyfunc` fixes the pivot order.
    """

    def __init__(self, keyfunc=None):
        self.keyfunc = keyfunc if keyfunc is not None else (lambda k: k)
        self.rows = {}  # pivot key -> dict (Fraction entries, pivot entry 1)

    def _reduce(self, row):
        # Pivot rows carry no entries at other pivots, so a single pass over
        # the pivot keys present in the row fully reduces it.
        row = {k: _entry(v) for k, v in row.items() if not (_entry(v) == 0)}
        if not row:
            return row
        hits = sorted((k for k in row if k in self.rows), key=self.keyfunc)
        for k in hits:
            c = row.get(k)
            if c is None or c == 0:
                continue
            for kk, vv in self.rows[k].items():
                nv = _entry(row.get(kk, Fraction(0)) - c * vv)
                if nv == 0:
                    row.pop(kk, None)
                else:
                    row[kk] = nv
        return row

    def add(self, row):
        """Insert a vector; returns True if it enlarged the span."""
        row = self._reduce(row)
        if not row:
            return False
        lead = min(row, key=self.keyfunc)
        c = row[lead]
        row = {k: _entry(v / c) for k, v in row.items()}
        for piv_key, piv_row in self.rows.items():
            f = piv_row.get(lead)
            if f is not None and not (f == 0):
                for k, v in row.items():
                    nv = _entry(piv_row.get(k, Fraction(0)) - f * v)
                    if nv == 0:
                        piv_row.pop(k, None)
                    else:
                        piv_row[k] = nv
        self.rows[lead] = row
        return True

    def contains(self, row):
        return not self._reduce(dict(row))

    def residual(self, row):
        """The reduction of row modulo the span (empty dict iff contained)."""
        return self._reduce(dict(row))

    @property
    def dim(self):
        return len(self.rows)

    def basis(self):
        return [dict(self.rows[k]) for k in sorted(self.rows)]
