"""Solver-agnostic conic program: linear objective, labeled linear rows,
second-order cones, and box bounds.

Variables are created through :class:`ProblemBuilder` keyed by structured
tuples such as ``("fp", "1-2", 0, 0)`` (kind, element, phase, time step).
Emission order is the builder call order, which the upstream assembly keeps
deterministic, so identical scenarios produce bit-identical problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VarKey = tuple
RowLabel = tuple

INF = math.inf


@dataclass(frozen=True)
class AffExpr:
    """Sparse affine expression sum_i coeffs[i] * x[i] + const."""

    coeffs: tuple[tuple[int, float], ...]
    const: float = 0.0


@dataclass(frozen=True)
class Row:
    """One linear row: sum_i coeffs[i] * x[i] (= | <=) rhs."""

    coeffs: tuple[tuple[int, float], ...]
    rhs: float
    label: RowLabel | None = None


@dataclass(frozen=True)
class Cone:
    """Second-order cone membership ||entries[1:]||_2 <= entries[0]."""

    entries: tuple[AffExpr, ...]
    label: RowLabel | None = None


@dataclass
class ConicProblem:
    var_keys: list[VarKey]
    lb: np.ndarray
    ub: np.ndarray
    objective: dict[int, float]
    obj_const: float
    equalities: list[Row]
    inequalities: list[Row]
    cones: list[Cone]
    key_index: dict[VarKey, int]
    eq_label_index: dict[RowLabel, int]

    @property
    def n_vars(self) -> int:
        return len(self.var_keys)

    def index(self, key: VarKey) -> int:
        return self.key_index[key]

    def var_name(self, idx: int) -> str:
        kind, *rest = self.var_keys[idx]
        return f"{kind}[{','.join(str(r) for r in rest)}]"

    def dump(self) -> str:
        """Documented sparse text format for external-solver cross-checks.

        Sections: VARS (name lb ub), MIN (idx coeff), EQ / INEQ (rows as
        ``idx*coeff ... | rhs``), SOC (one affine entry per line, first entry
        is the cone's upper bound).
        """
        out = [f"# conic problem: {self.n_vars} vars, {len(self.equalities)} eq, "
               f"{len(self.inequalities)} ineq, {len(self.cones)} soc"]
        out.append("VARS")
        for i in range(self.n_vars):
            out.append(f"{i} {self.var_name(i)} {self.lb[i]:.17g} {self.ub[i]:.17g}")
        out.append("MIN")
        for i in sorted(self.objective):
            out.append(f"{i} {self.objective[i]:.17g}")
        if self.obj_const:
            out.append(f"const {self.obj_const:.17g}")

        def fmt_terms(coeffs):
            return " ".join(f"{i}*{c:.17g}" for i, c in coeffs)

        out.append("EQ")
        for row in self.equalities:
            tag = "" if row.label is None else f"  # {row.label}"
            out.append(f"{fmt_terms(row.coeffs)} | {row.rhs:.17g}{tag}")
        out.append("INEQ")
        for row in self.inequalities:
            out.append(f"{fmt_terms(row.coeffs)} | {row.rhs:.17g}")
        out.append("SOC")
        for cone in self.cones:
            for k, e in enumerate(cone.entries):
                head = "t" if k == 0 else "x"
                out.append(f"{head} {fmt_terms(e.coeffs)} + {e.const:.17g}")
            out.append("end")
        return "\n".join(out) + "\n"


class ProblemBuilder:
    """Accumulates variables, rows, cones and costs, then freezes a problem."""

    def __init__(self):
        self._keys: list[VarKey] = []
        self._index: dict[VarKey, int] = {}
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._cost: dict[int, float] = {}
        self._obj_const = 0.0
        self._eq: list[Row] = []
        self._ineq: list[Row] = []
        self._cones: list[Cone] = []

    # -- variables ---------------------------------------------------------

    def variable(self, key: VarKey, lb: float = -INF, ub: float = INF) -> int:
        """Create a variable (or return the existing index for this key)."""
        if key in self._index:
            return self._index[key]
        idx = len(self._keys)
        self._index[key] = idx
        self._keys.append(key)
        self._lb.append(lb)
        self._ub.append(ub)
        return idx

    def index(self, key: VarKey) -> int:
        if key not in self._index:
            raise KeyError(f"constraint references undeclared variable {key}")
        return self._index[key]

    def set_bounds(self, key: VarKey, lb: float, ub: float) -> None:
        idx = self.index(key)
        self._lb[idx] = lb
        self._ub[idx] = ub

    def fix(self, key: VarKey, value: float) -> None:
        self.set_bounds(key, value, value)

    # -- objective / rows / cones -------------------------------------------

    def add_cost(self, key: VarKey, coeff: float) -> None:
        idx = self.index(key)
        self._cost[idx] = self._cost.get(idx, 0.0) + coeff

    def add_const_cost(self, value: float) -> None:
        self._obj_const += value

    def _terms(self, terms: dict[VarKey, float]) -> tuple[tuple[int, float], ...]:
        acc: dict[int, float] = {}
        for key, coeff in terms.items():
            if coeff == 0.0:
                continue
            idx = self.index(key)
            acc[idx] = acc.get(idx, 0.0) + coeff
        return tuple(sorted(acc.items()))

    def add_eq(self, terms: dict[VarKey, float], rhs: float, label: RowLabel | None = None):
        self._eq.append(Row(self._terms(terms), rhs, label))

    def add_ineq(self, terms: dict[VarKey, float], rhs: float, label: RowLabel | None = None):
        self._ineq.append(Row(self._terms(terms), rhs, label))

    def affine(self, terms: dict[VarKey, float], const: float = 0.0) -> AffExpr:
        return AffExpr(self._terms(terms), const)

    def add_soc(self, entries: list[AffExpr], label: RowLabel | None = None):
        """||entries[1:]|| <= entries[0]."""
        if len(entries) < 2:
            raise ValueError("a second-order cone needs at least two entries")
        self._cones.append(Cone(tuple(entries), label))

    # -- freeze -------------------------------------------------------------

    def build(self) -> ConicProblem:
        eq_labels: dict[RowLabel, int] = {}
        for i, row in enumerate(self._eq):
            if row.label is not None:
                if row.label in eq_labels:
                    raise ValueError(f"duplicate equality label {row.label}")
                eq_labels[row.label] = i
        lb = np.array(self._lb, dtype=float)
        ub = np.array(self._ub, dtype=float)
        if (lb > ub).any():
            bad = int(np.argmax(lb > ub))
            raise ValueError(f"variable {self._keys[bad]} has lb > ub")
        return ConicProblem(
            var_keys=list(self._keys),
            lb=lb,
            ub=ub,
            objective=dict(self._cost),
            obj_const=self._obj_const,
            equalities=list(self._eq),
            inequalities=list(self._ineq),
            cones=list(self._cones),
            key_index=dict(self._index),
            eq_label_index=eq_labels,
        )
