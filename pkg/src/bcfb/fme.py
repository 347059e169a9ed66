"""Fourier-Motzkin elimination for small named linear inequality systems.

Systems are lists of rows ``sum_i a_i x_i <= b`` in double precision.  Rows
are normalized to max-abs coefficient 1 and compared with tolerance 1e-9;
the systems handled here are tiny (a handful of rates), so numerical FM
blow-up is not a concern.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import linprog

COEF_TOL = 1e-9


class LinSysError(ValueError):
    """Malformed linear system."""


@dataclass(frozen=True)
class LinSys:
    """Inequality system A x <= b over named variables.

    Rows with an all-zero coefficient vector are legal; they record constant
    conditions (0 <= b) produced by elimination and carry feasibility
    information.
    """

    var_names: tuple[str, ...]
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        names = tuple(self.var_names)
        a = np.asarray(self.a, dtype=np.float64)
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))
        if a.ndim == 1:
            a = a.reshape(1, -1) if a.size else a.reshape(0, len(names))
        if len(names) != len(set(names)):
            raise LinSysError("variable names must be unique")
        if a.shape != (b.shape[0], len(names)):
            raise LinSysError(f"coefficient shape {a.shape} does not match {len(names)} vars")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise LinSysError("coefficients and bounds must be finite")
        object.__setattr__(self, "var_names", names)
        object.__setattr__(self, "a", np.ascontiguousarray(a))
        object.__setattr__(self, "b", np.ascontiguousarray(b))

    @property
    def num_rows(self) -> int:
        return self.a.shape[0]

    def normalized(self) -> "LinSys":
        """Scale each row so its max-abs coefficient is 1 (constants as-is)."""
        a = self.a.copy()
        b = self.b.copy()
        for i in range(a.shape[0]):
            m = np.max(np.abs(a[i]))
            if m > 0.0:
                a[i] /= m
                b[i] /= m
        return LinSys(self.var_names, a, b)

    def satisfies(self, point: Mapping[str, float] | np.ndarray, tol: float = COEF_TOL) -> bool:
        x = self._vector(point)
        return bool(np.all(self.a @ x <= self.b + tol))

    def violation(self, point) -> float:
        """Largest constraint violation at a point (<= 0 means satisfied)."""
        x = self._vector(point)
        if self.num_rows == 0:
            return -np.inf
        return float(np.max(self.a @ x - self.b))

    def _vector(self, point) -> np.ndarray:
        if isinstance(point, Mapping):
            return np.array([point[n] for n in self.var_names], dtype=np.float64)
        x = np.asarray(point, dtype=np.float64)
        if x.shape != (len(self.var_names),):
            raise LinSysError("point length does not match variables")
        return x

    def pretty(self) -> str:
        """Human-readable rows, one inequality per line."""
        lines = []
        for i in range(self.num_rows):
            terms = []
            for name, coef in zip(self.var_names, self.a[i]):
                if abs(coef) <= COEF_TOL:
                    continue
                if coef == 1.0:
                    terms.append(f"+ {name}")
                elif coef == -1.0:
                    terms.append(f"- {name}")
                else:
                    sign = "+" if coef >= 0 else "-"
                    terms.append(f"{sign} {abs(coef):g}*{name}")
            lhs = " ".join(terms).lstrip("+ ") if terms else "0"
            lines.append(f"  {lhs} <= {self.b[i]:.6g}")
        return "\n".join(lines)


def _dedupe(a: np.ndarray, b: np.ndarray, tol: float = COEF_TOL):
    keep: list[int] = []
    for i in range(a.shape[0]):
        dup = False
        for j in keep:
            if abs(b[i] - b[j]) <= tol and np.all(np.abs(a[i] - a[j]) <= tol):
                dup = True
                break
        if not dup:
            keep.append(i)
    return a[keep], b[keep]


def eliminate(sys: LinSys, var: str) -> LinSys:
    """Project the system onto the remaining variables.

    Every row with a positive coefficient on ``var`` is paired with every
    negative-coefficient row; zero-coefficient rows pass through.  The result
    is the exact projection of the solution set.
    """
    if var not in sys.var_names:
        raise LinSysError(f"unknown variable {var!r}")
    sysn = sys.normalized()
    j = sysn.var_names.index(var)
    col = sysn.a[:, j]
    pos = np.where(col > COEF_TOL)[0]
    neg = np.where(col < -COEF_TOL)[0]
    zero = np.where(np.abs(col) <= COEF_TOL)[0]
    keep_vars = tuple(n for n in sysn.var_names if n != var)
    cols = [k for k in range(len(sysn.var_names)) if k != j]
    rows_a = [sysn.a[i][cols] for i in zero]
    rows_b = [sysn.b[i] for i in zero]
    for ip in pos:
        for ineg in neg:
            cp, cn = col[ip], -col[ineg]
            new_a = cn * sysn.a[ip][cols] + cp * sysn.a[ineg][cols]
            new_b = cn * sysn.b[ip] + cp * sysn.b[ineg]
            rows_a.append(new_a)
            rows_b.append(new_b)
    if rows_a:
        a = np.vstack(rows_a)
        b = np.asarray(rows_b, dtype=np.float64)
    else:
        a = np.zeros((0, len(keep_vars)))
        b = np.zeros(0)
    out = LinSys(keep_vars, a, b).normalized()
    a2, b2 = _dedupe(out.a, out.b)
    return LinSys(keep_vars, a2, b2)


def is_feasible(sys: LinSys, tol: float = 1e-9) -> bool:
    """Exact feasibility via constant-row screening plus an LP phase-1."""
    zero_rows = np.all(np.abs(sys.a) <= COEF_TOL, axis=1)
    if np.any(sys.b[zero_rows] < -tol):
        return False
    rows = ~zero_rows
    if not np.any(rows):
        return True
    res = linprog(
        c=np.zeros(len(sys.var_names)),
        A_ub=sys.a[rows],
        b_ub=sys.b[rows] + tol,
        bounds=[(None, None)] * len(sys.var_names),
        method="highs",
    )
    return bool(res.status == 0)


def remove_redundant(sys: LinSys, tol: float = 1e-9) -> LinSys:
    """Drop rows implied by the remaining ones; the solution set is unchanged.

    A row is redundant when maximizing its left side subject to the other
    rows stays below its bound; unbounded or infeasible subproblems keep the
    row (conservative, still set-preserving).  Duplicates collapse first and
    rows are re-tested against the shrinking system, so mutually redundant
    duplicates are not both removed.  Trivially true constant rows are
    dropped; an infeasible constant row short-circuits to a single-row
    infeasible system.
    """
    sysn = sys.normalized()
    a, b = _dedupe(sysn.a, sysn.b)
    const = np.all(np.abs(a) <= COEF_TOL, axis=1)
    bad = const & (b < -tol)
    if np.any(bad):
        i = int(np.where(bad)[0][0])
        return LinSys(sysn.var_names, a[i : i + 1], b[i : i + 1])
    a, b = a[~const], b[~const]
    nvars = len(sysn.var_names)
    i = 0
    while i < a.shape[0]:
        others = [k for k in range(a.shape[0]) if k != i]
        if not others:
            break
        res = linprog(
            c=-a[i],
            A_ub=a[others],
            b_ub=b[others],
            bounds=[(None, None)] * nvars,
            method="highs",
        )
        if res.status == 0 and -res.fun <= b[i] + tol:
            a = np.delete(a, i, axis=0)
            b = np.delete(b, i, axis=0)
        else:
            i += 1
    return LinSys(sysn.var_names, a, b)


# ---------------------------------------------------------------------------
# Scheme constraint system for the sliding-window feedback code.

SCHEME_VARS = ("r1", "r2", "rt")


def scheme_constraints(values: Mapping[str, float], rfb: float) -> LinSys:
    """Raw design constraints of the feedback scheme at given MI values.

    Variables: message rates r1, r2 and the per-block bin rate rt.  With
    vanishing decoding slack the system is
        r1 <= I(U;Y1)
        rt >= I(Yt;Y1|U,Y2)
        r1 + rt <= I(U;Y2)
        r2 <= I(X;Yt,Y2|U)
        rt <= rfb
    """
    for key in ("i_u_y1", "i_u_y2", "i_x_yty2_u", "i_yt_y1_uy2"):
        if key not in values:
            raise LinSysError(f"missing MI value {key!r}")
        if values[key] < 0:
            raise LinSysError(f"MI value {key!r} must be nonnegative")
    a = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, 0.0, -1.0],
            [1.0, 0.0, 1.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    b = np.array(
        [
            values["i_u_y1"],
            -values["i_yt_y1_uy2"],
            values["i_u_y2"],
            values["i_x_yty2_u"],
            float(rfb),
        ]
    )
    return LinSys(SCHEME_VARS, a, b)


def derive_rate_constraints(values: Mapping[str, float], rfb: float) -> LinSys:
    """Eliminate the bin rate from the scheme constraints.

    The projection reproduces the two-rate region rows
        r1 <= I(U;Y1)
        r1 <= I(U;Y2) - I(Yt;Y1|U,Y2)
        r2 <= I(X;Yt,Y2|U)
    plus the constant feasibility row I(Yt;Y1|U,Y2) <= rfb.  Exact duplicates
    are collapsed but dominated rows are kept, so the output matches those
    rows one for one.
    """
    return eliminate(scheme_constraints(values, rfb), "rt")


def expected_rate_rows(values: Mapping[str, float], rfb: float) -> LinSys:
    """The target rows of :func:`derive_rate_constraints`, written directly."""
    a = np.array(
        [
            [1.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.0, 0.0],
        ]
    )
    b = np.array(
        [
            values["i_u_y1"],
            values["i_u_y2"] - values["i_yt_y1_uy2"],
            values["i_x_yty2_u"],
            float(rfb) - values["i_yt_y1_uy2"],
        ]
    )
    sysn = LinSys(("r1", "r2"), a, b).normalized()
    a2, b2 = _dedupe(sysn.a, sysn.b)
    return LinSys(("r1", "r2"), a2, b2)


def same_rows(lhs: LinSys, rhs: LinSys, tol: float = 1e-9) -> bool:
    """Row-set equality up to ordering (rows already normalized)."""
    if lhs.var_names != rhs.var_names:
        return False
    la, lb = lhs.normalized().a, lhs.normalized().b
    ra, rb = rhs.normalized().a, rhs.normalized().b
    if la.shape != ra.shape:
        return False
    used = np.zeros(ra.shape[0], dtype=bool)
    for i in range(la.shape[0]):
        hit = False
        for j in range(ra.shape[0]):
            if used[j]:
                continue
            if abs(lb[i] - rb[j]) <= tol and np.all(np.abs(la[i] - ra[j]) <= tol):
                used[j] = True
                hit = True
                break
        if not hit:
            return False
    return True
