"""Exact rational two-phase simplex on a sparse tableau.

Solves ``max c.x  s.t.  A_le x <= b_le,  A_eq x = b_eq,  x >= 0`` with
``fractions.Fraction`` arithmetic throughout. Rows are dicts ``{column: coef}``.

Entering columns follow Dantzig's largest-reduced-cost rule; after a streak
of degenerate pivots the solver switches to Bland's rule for the rest of the
phase, which rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

ZERO = Fraction(0)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
PIVOT_LIMIT = "pivot-limit"


@dataclass
class LPResult:
    status: str
    x: list = field(default_factory=list)
    objective: Fraction | None = None
    pivots: int = 0
    basis: dict = field(default_factory=dict)  # column -> row, original columns only
    reduced_costs: dict = field(default_factory=dict)  # nonzero reduced costs of original columns
    # every nonbasic column (slacks included) has a strictly negative reduced cost,
    # which certifies that the optimum is unique
    strictly_unique: bool = False

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, rows: list[dict], rhs: list[Fraction], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.col_rows: dict[int, set] = {}
        for i, row in enumerate(rows):
            for k in row:
                self.col_rows.setdefault(k, set()).add(i)
        self.cost: dict[int, Fraction] = {}
        self.z = ZERO
        self.pivots = 0

    def set_objective(self, c: Mapping[int, Fraction]) -> None:
        """Reduced costs d = c - c_B B^-1 A for the current basis."""
        cost = {k: Fraction(v) for k, v in c.items() if v}
        z = ZERO
        for i, b in enumerate(self.basis):
            cb = c.get(b, ZERO)
            if not cb:
                continue
            z += cb * self.rhs[i]
            for k, v in self.rows[i].items():
                nv = cost.get(k, ZERO) - cb * v
                if nv:
                    cost[k] = nv
                else:
                    cost.pop(k, None)
        self.cost = cost
        self.z = z

    def pivot(self, r: int, e: int) -> None:
        rows, col_rows = self.rows, self.col_rows
        prow = rows[r]
        piv = prow[e]
        if piv != 1:
            prow = {k: v / piv for k, v in prow.items()}
            rows[r] = prow
            self.rhs[r] /= piv
        rr = self.rhs[r]
        for i in list(col_rows.get(e, ())):
            if i == r:
                continue
            row = rows[i]
            f = row[e]
            for k, v in prow.items():
                nv = row.get(k, ZERO) - f * v
                if nv:
                    if k not in row:
                        col_rows.setdefault(k, set()).add(i)
                    row[k] = nv
                elif k in row:
                    del row[k]
                    col_rows[k].discard(i)
            if rr:
                self.rhs[i] -= f * rr
        f = self.cost.get(e)
        if f:
            cost = self.cost
            for k, v in prow.items():
                nv = cost.get(k, ZERO) - f * v
                if nv:
                    cost[k] = nv
                else:
                    cost.pop(k, None)
            self.z += f * rr
        self.basis[r] = e
        self.pivots += 1

    def run(self, allowed, degenerate_limit: int, max_pivots: int | None) -> str:
        bland = False
        streak = 0
        while True:
            if max_pivots is not None and self.pivots >= max_pivots:
                return PIVOT_LIMIT
            candidates = [(k, d) for k, d in self.cost.items() if d > 0 and allowed(k)]
            if not candidates:
                return OPTIMAL
            if bland:
                e = min(k for k, _ in candidates)
            else:
                e = max(candidates, key=lambda kd: (kd[1], -kd[0]))[0]
            best = None
            for i in self.col_rows.get(e, ()):
                a = self.rows[i][e]
                if a > 0:
                    key = (self.rhs[i] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return UNBOUNDED
            if best[0][0] == 0:
                streak += 1
                if streak >= degenerate_limit:
                    bland = True
            else:
                streak = 0
            self.pivot(best[1], e)

    def drop_row(self, i: int) -> None:
        last = len(self.rows) - 1
        for k in self.rows[i]:
            self.col_rows[k].discard(i)
        if i != last:
            for k in self.rows[last]:
                s = self.col_rows[k]
                s.discard(last)
                s.add(i)
            self.rows[i] = self.rows[last]
            self.rhs[i] = self.rhs[last]
            self.basis[i] = self.basis[last]
        self.rows.pop()
        self.rhs.pop()
        self.basis.pop()


def maximize(
    c: Sequence,
    le_rows: Sequence[Mapping[int, Fraction]] = (),
    le_rhs: Sequence = (),
    eq_rows: Sequence[Mapping[int, Fraction]] = (),
    eq_rhs: Sequence = (),
    degenerate_limit: int = 50,
    max_pivots: int | None = None,
) -> LPResult:
    nv = len(c)
    rows: list[dict] = []
    rhs: list[Fraction] = []
    basis: list[int] = []
    artificials: list[int] = []
    col = nv
    for row, b in zip(le_rows, le_rhs):
        row = {k: Fraction(v) for k, v in row.items() if v}
        b = Fraction(b)
        if b >= 0:
            row[col] = Fraction(1)
            basis.append(col)
            col += 1
        else:
            row = {k: -v for k, v in row.items()}
            b = -b
            row[col] = Fraction(-1)
            row[col + 1] = Fraction(1)
            basis.append(col + 1)
            artificials.append(col + 1)
            col += 2
        rows.append(row)
        rhs.append(b)
    for row, b in zip(eq_rows, eq_rhs):
        row = {k: Fraction(v) for k, v in row.items() if v}
        b = Fraction(b)
        if b < 0:
            row = {k: -v for k, v in row.items()}
            b = -b
        row[col] = Fraction(1)
        basis.append(col)
        artificials.append(col)
        col += 1
        rows.append(row)
        rhs.append(b)

    t = _Tableau(rows, rhs, basis)
    art = set(artificials)

    if art:
        t.set_objective({a: Fraction(-1) for a in art})
        status = t.run(lambda k: True, degenerate_limit, max_pivots)
        if status == PIVOT_LIMIT:
            return LPResult(PIVOT_LIMIT, pivots=t.pivots)
        if t.z < 0:
            return LPResult(INFEASIBLE, pivots=t.pivots)
        # drive zero-level artificials out of the basis; drop redundant rows
        i = 0
        while i < len(t.rows):
            if t.basis[i] in art:
                e = next((k for k in sorted(t.rows[i]) if k not in art), None)
                if e is None:
                    t.drop_row(i)
                    continue
                t.pivot(i, e)
            i += 1
        for a in art:
            for i in t.col_rows.pop(a, ()):
                t.rows[i].pop(a, None)

    t.set_objective({j: Fraction(v) for j, v in enumerate(c) if v})
    status = t.run(lambda k: k not in art, degenerate_limit, max_pivots)
    if status != OPTIMAL:
        return LPResult(status, pivots=t.pivots)
    x = [ZERO] * nv
    where = {}
    for i, b in enumerate(t.basis):
        if b < nv:
            x[b] = t.rhs[i]
            where[b] = i
    reduced = {k: d for k, d in t.cost.items() if k < nv}
    in_basis = set(t.basis)
    strict = all(t.cost.get(k, ZERO) < 0 for k in range(col) if k not in in_basis and k not in art)
    return LPResult(OPTIMAL, x, t.z, t.pivots, where, reduced, strict)
