"""Fraction-free Gauss-Jordan elimination for sparse rational systems.

Rows are scaled to integers, eliminated with integer cross-multiplication
and divided by their content (gcd) after each step, so no fractions appear
until the final back-substitution.  Columns are pivoted left to right, so
the pivot columns are the lexicographically first independent set and the
returned solution (free variables set to zero) is deterministic.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping, Sequence


class Inconsistent(ValueError):
    """The linear system has no solution."""


def _integer_row(row: Mapping[int, Fraction], rhs: Fraction) -> tuple[dict[int, int], int]:
    dens = [c.denominator for c in row.values()] + [rhs.denominator]
    lcm = math.lcm(*dens)
    return {k: int(c * lcm) for k, c in row.items() if c}, int(rhs * lcm)


def _normalize(row: dict[int, int], rhs: int) -> tuple[dict[int, int], int]:
    g = 0
    for c in row.values():
        g = math.gcd(g, c)
        if g == 1:
            return row, rhs
    g = math.gcd(g, rhs)
    if g > 1:
        row = {k: c // g for k, c in row.items()}
        rhs //= g
    return row, rhs


def solve(rows: Sequence[Mapping[int, Fraction]], rhs: Sequence[Fraction], ncols: int) -> list[Fraction]:
    """Solve ``A x = b`` with sparse rows ``{column: coefficient}``.

    Returns the basic solution with free variables at zero.  Raises
    :class:`Inconsistent` if no solution exists.
    """
    work: list[tuple[dict[int, int], int]] = []
    for row, b in zip(rows, rhs):
        r, b = _integer_row(row, Fraction(b))
        if r or b:
            work.append(_normalize(r, b))

    by_col: dict[int, set[int]] = {}
    for idx, (r, _) in enumerate(work):
        for c in r:
            by_col.setdefault(c, set()).add(idx)

    pivots: dict[int, int] = {}  # column -> row index
    used: set[int] = set()
    for col in range(ncols):
        candidates = [i for i in by_col.get(col, ()) if i not in used]
        if not candidates:
            continue
        p = min(candidates, key=lambda i: (len(work[i][0]), i))
        used.add(p)
        pivots[col] = p
        prow, prhs = work[p]
        pval = prow[col]
        for i in sorted(by_col[col]):
            if i == p:
                continue
            r, b = work[i]
            a = r[col]
            g = math.gcd(pval, a)
            mp, ma = pval // g, a // g
            new = {k: c * mp for k, c in r.items()}
            for k, c in prow.items():
                v = new.get(k, 0) - ma * c
                if v:
                    new[k] = v
                else:
                    new.pop(k, None)
            for k in r:
                if k not in new:
                    by_col[k].discard(i)
            for k in new:
                if k not in r:
                    by_col.setdefault(k, set()).add(i)
            work[i] = _normalize(new, b * mp - ma * prhs)
        by_col[col] = {p}

    for i, (r, b) in enumerate(work):
        if not r and b:
            raise Inconsistent("no solution")

    x = [Fraction(0)] * ncols
    for col, p in pivots.items():
        r, b = work[p]
        # after full elimination a pivot row holds its pivot and free columns only
        x[col] = Fraction(b, r[col])
    return x
