"""Achievable rate regions for broadcast channels with rate-limited feedback.

Regions are represented as finite clouds of achievable corner points; the
Pareto frontier plus chord interpolation (time sharing between adjacent
frontier points) stands in for the exact convex region.  Evaluators:

* ``no_feedback_region`` / ``enhanced_region`` -- superposition-coding region
  of the plain channel and of the channel with receiver 1's output revealed
  to receiver 2.
* ``sliding_window_region`` -- compress-and-relay feedback scheme with
  sliding-window decoding at receiver 2.
* ``sliding_window_region_capped`` -- same scheme with the compression rate
  capped by the auxiliary-rate surplus of receiver 2, which absorbs one of
  the rate constraints.
* ``backward_decoding_region`` -- the backward-decoding variant (larger).
* ``bsbc_family_region`` -- closed form for binary-symmetric pairs under the
  symmetric XOR parameterization.
* ``improve_boundary_point`` -- time-sharing mixture that strictly improves a
  no-feedback boundary point whenever receiver 2 is strictly less noisy and
  the point sits strictly inside the enhanced region.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .channels import Dmbc, enhance
from .prob import (
    FinitePmf,
    JointPmf,
    Kernel,
    binary_entropy,
    compose,
    cond_mutual_info,
    entropy,
)

FEAS_TOL = 1e-12


class RegionError(ValueError):
    """Bad region-evaluation inputs (empty grids, parameter ordering, ...)."""


@dataclass(frozen=True)
class RatePoint:
    r1: float
    r2: float

    def __post_init__(self):
        if self.r1 < 0.0 or self.r2 < 0.0:
            raise RegionError(f"rate point ({self.r1}, {self.r2}) has a negative coordinate")


class RateRegion:
    """Finite set of achievable (r1, r2) points with a cached Pareto frontier."""

    def __init__(self, points, payloads: Optional[list] = None):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if np.any(pts < -1e-12):
            raise RegionError("rate points must be nonnegative")
        self.points = np.clip(pts, 0.0, None)
        if payloads is not None and len(payloads) != len(self.points):
            raise RegionError("payloads must align with points")
        self.payloads = payloads
        self._frontier_idx: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    def _frontier_indices(self) -> np.ndarray:
        if self._frontier_idx is None:
            if self.is_empty:
                raise RegionError("empty region has no frontier")
            pts = self.points
            order = np.lexsort((-pts[:, 1], -pts[:, 0]))  # r1 desc, then r2 desc
            keep = []
            best = -np.inf
            for i in order:
                if pts[i, 1] > best:
                    keep.append(i)
                    best = pts[i, 1]
            self._frontier_idx = np.asarray(keep[::-1], dtype=np.int64)
        return self._frontier_idx

    def frontier(self) -> np.ndarray:
        """Pareto-maximal points, r1 ascending, r2 strictly descending."""
        return self.points[self._frontier_indices()]

    def frontier_payloads(self) -> list:
        if self.payloads is None:
            raise RegionError("region carries no payloads")
        return [self.payloads[i] for i in self._frontier_indices()]


def frontier(region: RateRegion) -> list[RatePoint]:
    """Pareto frontier as rate points (sorted by r1 ascending)."""
    return [RatePoint(float(a), float(b)) for a, b in region.frontier()]


def includes(outer: RateRegion, inner: RateRegion, tol: float = 2e-3) -> bool:
    """Every inner frontier point is dominated by the outer frontier.

    The outer frontier is interpolated linearly between adjacent points
    (time sharing), extended flat to the left of its first point.
    """
    if outer.is_empty or inner.is_empty:
        raise RegionError("includes() requires nonempty regions")
    fo = outer.frontier()
    x, y = fo[:, 0], fo[:, 1]
    for a, b in inner.frontier():
        if a > x[-1] + tol:
            return False
        cap = float(np.interp(min(a, x[-1]), x, y))
        if b > cap + tol:
            return False
    return True


# ---------------------------------------------------------------------------
# Auxiliary coding structures.


@dataclass(frozen=True)
class AuxCoding:
    """Time-sharing / cloud-center / compression structure.

    Dense conditional tables: ``q_pmf (nq,)``, ``u_given_q (nq, nu)``,
    ``x_given_uq (nq, nu, nx)``, ``yt_given_uy1q (nq, nu, ny1, nyt)``.  The
    compression variable depends only on (u, y1, q) by construction, which
    enforces its conditional independence from (x, y2).
    """

    q_pmf: np.ndarray
    u_given_q: np.ndarray
    x_given_uq: np.ndarray
    yt_given_uy1q: np.ndarray

    def __post_init__(self):
        qp = np.asarray(self.q_pmf, dtype=np.float64)
        uq = np.asarray(self.u_given_q, dtype=np.float64)
        xuq = np.asarray(self.x_given_uq, dtype=np.float64)
        ytk = np.asarray(self.yt_given_uy1q, dtype=np.float64)
        nq = qp.shape[0]
        if uq.shape[0] != nq or xuq.shape[:2] != uq.shape or ytk.shape[:2] != uq.shape:
            raise RegionError("auxiliary table shapes are inconsistent")
        for name, arr, axis in (
            ("q_pmf", qp, None),
            ("u_given_q", uq, -1),
            ("x_given_uq", xuq, -1),
            ("yt_given_uy1q", ytk, -1),
        ):
            if np.any(arr < -1e-12) or not np.all(np.isfinite(arr)):
                raise RegionError(f"{name} has negative or non-finite entries")
            sums = arr.sum() if axis is None else arr.sum(axis=axis)
            if np.any(np.abs(sums - 1.0) > 1e-9):
                raise RegionError(f"{name} rows must sum to 1")
        for arr_name in ("q_pmf", "u_given_q", "x_given_uq", "yt_given_uy1q"):
            arr = np.ascontiguousarray(
                np.clip(np.asarray(getattr(self, arr_name), dtype=np.float64), 0.0, None)
            )
            arr.setflags(write=False)
            object.__setattr__(self, arr_name, arr)

    @property
    def nq(self) -> int:
        return self.q_pmf.shape[0]

    @property
    def nu(self) -> int:
        return self.u_given_q.shape[1]

    @property
    def nx(self) -> int:
        return self.x_given_uq.shape[2]

    @property
    def nyt(self) -> int:
        return self.yt_given_uy1q.shape[3]

    @classmethod
    def from_ux(cls, p_u: np.ndarray, p_x_given_u: np.ndarray, nyt: int = 1) -> "AuxCoding":
        """Single-phase structure with a constant compression variable."""
        p_u = np.asarray(p_u, dtype=np.float64)
        p_x_given_u = np.asarray(p_x_given_u, dtype=np.float64)
        nu, nx = p_x_given_u.shape
        ytk = np.zeros((1, nu, 1, nyt))
        ytk[..., 0] = 1.0
        # ny1 unknown here; callers needing a specific ny1 use with_channel_y1.
        return cls(np.ones(1), p_u[None, :], p_x_given_u[None, :, :], ytk)

    def with_channel_y1(self, ny1: int) -> "AuxCoding":
        """Broadcast the compression kernel across receiver 1's alphabet."""
        if self.yt_given_uy1q.shape[2] == ny1:
            return self
        if self.yt_given_uy1q.shape[2] != 1:
            raise RegionError("compression kernel does not match the channel")
        ytk = np.repeat(self.yt_given_uy1q, ny1, axis=2)
        return AuxCoding(self.q_pmf, self.u_given_q, self.x_given_uq, ytk)

    @classmethod
    def xor_family(cls, alpha: float, beta: float) -> "AuxCoding":
        """Symmetric binary family: X = U xor Bern(alpha), compression equal
        to U xor Y1 xor Bern(beta), with uniform binary U."""
        for v in (alpha, beta):
            if not 0.0 <= v <= 1.0:
                raise RegionError(f"family parameter {v} outside [0, 1]")
        uq = np.full((1, 2), 0.5)
        xuq = np.zeros((1, 2, 2))
        for u in (0, 1):
            for x in (0, 1):
                xuq[0, u, x] = alpha if x != u else 1 - alpha
        ytk = np.zeros((1, 2, 2, 2))
        for u in (0, 1):
            for y1 in (0, 1):
                for yt in (0, 1):
                    ytk[0, u, y1, yt] = beta if yt != (u ^ y1) else 1 - beta
        return cls(np.ones(1), uq, xuq, ytk)

    def joint(self, ch: Dmbc) -> JointPmf:
        """Full joint law over (q, u, x, y1, y2, yt) via chained composition."""
        aux = self.with_channel_y1(ch.ny1)
        q_labels = tuple(range(aux.nq))
        u_labels = tuple(range(aux.nu))
        yt_labels = tuple(range(aux.nyt))
        j = JointPmf.from_pmf("q", FinitePmf(q_labels, aux.q_pmf))
        j = compose(j, Kernel.from_rows([("q", q_labels)], [("u", u_labels)], aux.u_given_q))
        j = compose(
            j,
            Kernel.from_rows(
                [("q", q_labels), ("u", u_labels)],
                [("x", ch.x_alphabet)],
                aux.x_given_uq,
            ),
        )
        j = compose(
            j,
            Kernel.from_rows(
                [("x", ch.x_alphabet)],
                [("y1", ch.y1_alphabet), ("y2", ch.y2_alphabet)],
                ch.law,
            ),
        )
        j = compose(
            j,
            Kernel.from_rows(
                [("q", q_labels), ("u", u_labels), ("y1", ch.y1_alphabet)],
                [("yt", yt_labels)],
                aux.yt_given_uy1q,
            ),
        )
        return j


# MI column indices returned by the batch kernel.
I_U_Y1_Q = 0
I_U_Y2_Q = 1
I_X_YTY2_UQ = 2
I_YT_Y1_UY2Q = 3
I_X_Y2_Q = 4
I_X_YT_UY2Q = 5
I_XY2_YT_UQ = 6


def mi_terms(ch: Dmbc, aux: AuxCoding) -> np.ndarray:
    """Reference single-structure route through the probability core."""
    j = aux.joint(ch)
    return np.array(
        [
            cond_mutual_info(j, ("u",), ("y1",), ("q",)),
            cond_mutual_info(j, ("u",), ("y2",), ("q",)),
            cond_mutual_info(j, ("x",), ("yt", "y2"), ("u", "q")),
            cond_mutual_info(j, ("yt",), ("y1",), ("u", "y2", "q")),
            cond_mutual_info(j, ("x",), ("y2",), ("q",)),
            cond_mutual_info(j, ("x",), ("yt",), ("u", "y2", "q")),
            cond_mutual_info(j, ("x", "y2"), ("yt",), ("u", "q")),
        ]
    )


def mi_terms_batch(ch: Dmbc, structures: Sequence[AuxCoding]) -> np.ndarray:
    """Batched MI terms via the compiled kernel.

    Structures are grouped by table shape and each group goes through the
    kernel in one call; the output rows follow the input order.
    """
    if not structures:
        raise RegionError("empty structure batch")
    structures = [a.with_channel_y1(ch.ny1) for a in structures]
    out = np.empty((len(structures), _kernels.N_MI_TERMS))
    groups: dict[tuple, list[int]] = {}
    for i, a in enumerate(structures):
        groups.setdefault((a.nq, a.nu, a.nx, a.nyt), []).append(i)
    for idx in groups.values():
        qp = np.stack([structures[i].q_pmf for i in idx])
        uq = np.stack([structures[i].u_given_q for i in idx])
        xuq = np.stack([structures[i].x_given_uq for i in idx])
        ytk = np.stack([structures[i].yt_given_uy1q for i in idx])
        out[idx] = _kernels.aux_mi_terms(qp, uq, xuq, ch.law, ytk)
    return out


# ---------------------------------------------------------------------------
# Structure sampling.


def sample_aux(
    ch: Dmbc,
    count: int,
    seed: int = 0,
    nq: int = 1,
    nu: Optional[int] = None,
    nyt: Optional[int] = None,
    dirichlet: float = 1.0,
) -> list[AuxCoding]:
    """Seeded random structures at the default cardinality caps."""
    if count <= 0:
        raise RegionError("sample count must be positive")
    nu = nu or min(ch.nx, ch.ny1, ch.ny2) + 1
    nyt = nyt or ch.ny1 + 1
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        qp = rng.dirichlet(np.full(nq, dirichlet)) if nq > 1 else np.ones(1)
        uq = rng.dirichlet(np.full(nu, dirichlet), size=nq)
        xuq = rng.dirichlet(np.full(ch.nx, dirichlet), size=(nq, nu))
        if nyt == 1:
            ytk = np.ones((nq, nu, ch.ny1, 1))
        else:
            ytk = rng.dirichlet(np.full(nyt, dirichlet), size=(nq, nu, ch.ny1))
        out.append(AuxCoding(qp, uq, xuq, ytk))
    return out


def sample_ux(ch: Dmbc, count: int, seed: int = 0, nu: Optional[int] = None) -> list[AuxCoding]:
    """Random single-phase structures with constant compression variable."""
    return sample_aux(ch, count, seed=seed, nq=1, nu=nu, nyt=1)


def xor_alpha_sweep(alphas: Iterable[float]) -> list[AuxCoding]:
    """Symmetric binary structures along the standard boundary family."""
    return [AuxCoding.xor_family(a, 0.5) for a in alphas]


# ---------------------------------------------------------------------------
# Region evaluators.


def _as_region(points: list, payloads: list) -> RateRegion:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return RateRegion(pts, payloads)


def no_feedback_region(ch: Dmbc, structures: Sequence[AuxCoding]) -> RateRegion:
    """Superposition-coding region: points (I(U;Y1|Q), I(X;Y2|U,Q))."""
    structures = [
        AuxCoding(a.q_pmf, a.u_given_q, a.x_given_uq, np.ones((a.nq, a.nu, ch.ny1, 1)))
        for a in structures
    ]
    cols = mi_terms_batch(ch, structures)
    points = np.stack([cols[:, I_U_Y1_Q], cols[:, I_X_YTY2_UQ]], axis=1)
    region = RateRegion(np.vstack([points, [[0.0, 0.0]]]), list(structures) + [None])
    return region


def enhanced_region(ch: Dmbc, structures: Sequence[AuxCoding]) -> RateRegion:
    """No-feedback region of the channel with Y1 revealed to receiver 2."""
    return no_feedback_region(enhance(ch), structures)


def sliding_window_region(ch: Dmbc, rfb: float, structures: Sequence[AuxCoding]) -> RateRegion:
    """Feedback inner bound achieved with sliding-window decoding.

    A structure is feasible when its compression-resolution rate
    I(Yt;Y1|U,Y2,Q) fits under the feedback rate; it contributes the corner
    ( min(I(U;Y1|Q), I(U;Y2|Q) - I(Yt;Y1|U,Y2,Q)), I(X;Yt,Y2|U,Q) ).
    """
    if rfb < 0:
        raise RegionError("feedback rate must be nonnegative")
    cols = mi_terms_batch(ch, structures)
    feas = cols[:, I_YT_Y1_UY2Q] <= rfb + FEAS_TOL
    r1 = np.minimum(cols[:, I_U_Y1_Q], cols[:, I_U_Y2_Q] - cols[:, I_YT_Y1_UY2Q])
    r2 = cols[:, I_X_YTY2_UQ]
    keep = feas & (r1 >= -FEAS_TOL)  # keep boundary points lost to fp noise
    points = np.stack([np.clip(r1[keep], 0.0, None), r2[keep]], axis=1)
    payloads = [a for a, k in zip(structures, keep) if k]
    return _as_region(
        np.vstack([points, [[0.0, 0.0]]]) if len(points) else np.array([[0.0, 0.0]]),
        payloads + [None],
    )


def sliding_window_region_capped(
    ch: Dmbc, rfb: float, structures: Sequence[AuxCoding]
) -> RateRegion:
    """Variant with the compression rate capped by the receiver-2 surplus.

    Feasibility I(Yt;Y1|U,Y2,Q) <= min(rfb, I(U;Y2|Q) - I(U;Y1|Q)) makes the
    cross-rate constraint on r1 redundant, leaving the corner
    (I(U;Y1|Q), I(X;Yt,Y2|U,Q)).
    """
    if rfb < 0:
        raise RegionError("feedback rate must be nonnegative")
    cols = mi_terms_batch(ch, structures)
    cap = np.minimum(rfb, cols[:, I_U_Y2_Q] - cols[:, I_U_Y1_Q])
    keep = cols[:, I_YT_Y1_UY2Q] <= cap + FEAS_TOL
    points = np.stack([cols[keep, I_U_Y1_Q], cols[keep, I_X_YTY2_UQ]], axis=1)
    payloads = [a for a, k in zip(structures, keep) if k]
    return _as_region(
        np.vstack([points, [[0.0, 0.0]]]) if len(points) else np.array([[0.0, 0.0]]),
        payloads + [None],
    )


def backward_decoding_region(
    ch: Dmbc, rfb: float, structures: Sequence[AuxCoding]
) -> RateRegion:
    """Feedback inner bound achieved with backward decoding at receiver 2.

    Per feasible structure the rate polytope has the caps
        r1 <= min(I(U;Y1|Q), I(X;Y2|Q) + I(X;Yt|U,Y2,Q) - I(Yt;Y1|U,Y2,Q))
        r2 <= I(X;Yt,Y2|U,Q)
        r1 + r2 <= I(X;Y2|Q) + I(X,Y2;Yt|U,Q) + I(X;Yt|U,Y2,Q)
                   - I(Yt;Y1|U,Y2,Q)
    and feasibility I(Yt;Y1|U,Y2,Q) - I(X;Yt|U,Y2,Q) <= rfb.  Both Pareto
    corners of each polytope are emitted.
    """
    if rfb < 0:
        raise RegionError("feedback rate must be nonnegative")
    cols = mi_terms_batch(ch, structures)
    feas = cols[:, I_YT_Y1_UY2Q] - cols[:, I_X_YT_UY2Q] <= rfb + FEAS_TOL
    a = np.minimum(
        cols[:, I_U_Y1_Q],
        cols[:, I_X_Y2_Q] + cols[:, I_X_YT_UY2Q] - cols[:, I_YT_Y1_UY2Q],
    )
    c = cols[:, I_X_YTY2_UQ]
    d = (
        cols[:, I_X_Y2_Q]
        + cols[:, I_XY2_YT_UQ]
        + cols[:, I_X_YT_UY2Q]
        - cols[:, I_YT_Y1_UY2Q]
    )
    points: list = []
    payloads: list = []
    for i in range(len(structures)):
        if not feas[i] or a[i] < 0.0 or c[i] < 0.0 or d[i] < 0.0:
            continue
        ai, ci, di = float(a[i]), float(c[i]), float(d[i])
        r1a = min(ai, di)
        corner_a = (r1a, min(ci, di - r1a))
        r2b = min(ci, di)
        corner_b = (min(ai, di - r2b), r2b)
        for cr in {corner_a, corner_b}:
            points.append(cr)
            payloads.append(structures[i])
    points.append((0.0, 0.0))
    payloads.append(None)
    return _as_region(points, payloads)


def bsbc_family_nofb_frontier(p1: float, p2: float, alphas: Iterable[float]) -> RateRegion:
    """Closed-form no-feedback boundary family for a binary-symmetric pair."""
    _check_bsbc_params(p1, p2)
    alphas = np.asarray(list(alphas), dtype=np.float64)
    if np.any((alphas < 0) | (alphas > 0.5)):
        raise RegionError("alpha must lie in [0, 1/2]")
    r1 = 1.0 - _h2v(_starv(alphas, p1))
    r2 = _h2v(_starv(alphas, p2)) - binary_entropy(p2)
    return RateRegion(
        np.stack([r1, np.clip(r2, 0.0, None)], axis=1),
        [("alpha", float(a)) for a in alphas],
    )


def bsbc_family_region(
    p1: float,
    p2: float,
    rfb: float,
    alphas: Optional[Iterable[float]] = None,
    betas: Optional[Iterable[float]] = None,
) -> RateRegion:
    """Closed-form feedback region for binary-symmetric pairs.

    Evaluates the symmetric XOR family on an (alpha, beta) grid over
    [0, 1/2]^2: alpha is the cloud-to-input flip rate, beta the compression
    noise.  Points violating the feedback-rate budget or with a negative rate
    cap are skipped.
    """
    _check_bsbc_params(p1, p2)
    if rfb < 0:
        raise RegionError("feedback rate must be nonnegative")
    al = np.linspace(0.0, 0.5, 161) if alphas is None else np.asarray(list(alphas))
    be = np.linspace(0.0, 0.5, 161) if betas is None else np.asarray(list(betas))
    if np.any((al < 0) | (al > 0.5)) or np.any((be < 0) | (be > 0.5)):
        raise RegionError("alpha and beta must lie in [0, 1/2]")
    A, B = np.meshgrid(al, be, indexing="ij")
    pb = _starv(np.full_like(B, p1), B)
    q1 = pb * p2 * A + (1 - pb) * (1 - p2) * (1 - A)
    q2 = pb * (1 - p2) * A + (1 - pb) * p2 * (1 - A)
    q3 = pb * (1 - p2) * (1 - A) + (1 - pb) * p2 * A
    q4 = pb * p2 * (1 - A) + (1 - pb) * (1 - p2) * A
    h4 = -(_xlg(q1) + _xlg(q2) + _xlg(q3) + _xlg(q4))
    r1 = np.minimum(1.0 - _h2v(_starv(A, p1)), 1.0 + _h2v(B) - h4)
    r2 = h4 - binary_entropy(p2) - _h2v(pb)
    fb_need = h4 - _h2v(_starv(A, p2)) - _h2v(B)
    keep = (fb_need <= rfb + FEAS_TOL) & (r1 >= 0.0) & (r2 >= 0.0)
    pts = np.stack([r1[keep], r2[keep]], axis=1)
    pars = [(float(a), float(b)) for a, b in zip(A[keep], B[keep])]
    if len(pts) == 0:
        pts = np.array([[0.0, 0.0]])
        pars = [None]
    return RateRegion(pts, pars)


def _check_bsbc_params(p1: float, p2: float) -> None:
    if not 0.0 < p2 < p1 < 0.5:
        raise RegionError(f"need 0 < p2 < p1 < 1/2, got p1={p1}, p2={p2}")


def _h2v(p):
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    m = (p > 0) & (p < 1)
    pm = p[m]
    out[m] = -pm * np.log2(pm) - (1 - pm) * np.log2(1 - pm)
    return out


def _starv(a, b):
    return (1 - a) * b + a * (1 - b)


def _xlg(v):
    out = np.zeros_like(v)
    m = v > 0
    out[m] = v[m] * np.log2(v[m])
    return out


# ---------------------------------------------------------------------------
# Strict-improvement mixture construction.


@dataclass(frozen=True)
class UxStructure:
    """A (P_U, P_X|U) structure for the plain superposition layer."""

    p_u: np.ndarray
    p_x_given_u: np.ndarray

    def __post_init__(self):
        pu = np.asarray(self.p_u, dtype=np.float64)
        pxu = np.asarray(self.p_x_given_u, dtype=np.float64)
        if pxu.shape[0] != pu.shape[0]:
            raise RegionError("P_X|U rows must match |U|")
        object.__setattr__(self, "p_u", pu)
        object.__setattr__(self, "p_x_given_u", pxu)

    @classmethod
    def xor(cls, alpha: float) -> "UxStructure":
        return cls(
            np.array([0.5, 0.5]),
            np.array([[1 - alpha, alpha], [alpha, 1 - alpha]]),
        )


@dataclass(frozen=True)
class ImprovementResult:
    """Outcome of the time-sharing improvement construction."""

    base: RatePoint
    improved: RatePoint
    gamma: float
    h2: float
    i1: float
    i2: float
    feasible: bool
    aux: Optional[AuxCoding]
    rfb: float
    feasibility_slack: float  # min(rfb, surplus) - gamma*h2, should be >= 0


def ux_rates(ch: Dmbc, ux: UxStructure, enhanced: bool = False):
    """(r1, r2, surplus, H(Y1|Y2,U)) for a superposition structure.

    ``enhanced`` computes r2 against the pair (Y1, Y2) instead of Y2 alone;
    r1 and the surplus I(U;Y2)-I(U;Y1) always refer to the plain outputs.
    """
    aux = AuxCoding.from_ux(ux.p_u, ux.p_x_given_u).with_channel_y1(ch.ny1)
    j = aux.joint(ch)
    r1 = cond_mutual_info(j, ("u",), ("y1",))
    if enhanced:
        r2 = cond_mutual_info(j, ("x",), ("y1", "y2"), ("u",))
    else:
        r2 = cond_mutual_info(j, ("x",), ("y2",), ("u",))
    surplus = cond_mutual_info(j, ("u",), ("y2",)) - r1
    h_cond = entropy(j, ("y1", "y2", "u")) - entropy(j, ("y2", "u"))
    return float(r1), float(r2), float(surplus), float(h_cond)


def find_dominating_enhanced(
    ch: Dmbc,
    base_r1: float,
    base_r2: float,
    candidates: Sequence[UxStructure],
) -> Optional[UxStructure]:
    """Candidate whose enhanced rates strictly dominate (max-min margin)."""
    best = None
    best_margin = 0.0
    for ux in candidates:
        r1, r2, _, _ = ux_rates(ch, ux, enhanced=True)
        margin = min(r1 - base_r1, r2 - base_r2)
        if margin > best_margin:
            best_margin = margin
            best = ux
    return best


def improve_boundary_point(
    ch: Dmbc,
    base_ux: UxStructure,
    enh_ux: UxStructure,
    rfb: float,
) -> ImprovementResult:
    """Time-share a no-feedback point with an enhanced-channel point.

    Phase 2 (weight gamma) runs the enhanced structure and compresses
    receiver 1's output fully (compression variable = Y1); phase 1 carries
    the base structure with a constant compression variable.  gamma is the
    largest deterministic weight fitting both the feedback budget
    gamma * H(Y1|Y2,U) <= rfb and the surplus condition
    gamma * H(Y1|Y2,U) <= gamma * I2 + (1 - gamma) * I1.
    """
    if rfb <= 0:
        raise RegionError("improvement construction needs a positive feedback rate")
    r1b, r2b, i1, _ = ux_rates(ch, base_ux, enhanced=False)
    r1e, r2e, i2, h2 = ux_rates(ch, enh_ux, enhanced=True)
    if i1 <= 0 or i2 <= 0:
        raise RegionError(
            "channel not strictly less-noisy at these structures "
            f"(surpluses {i1:.3e}, {i2:.3e})"
        )
    if not (r1e > r1b and r2e > r2b):
        raise RegionError("enhanced structure does not dominate the base point")
    if h2 <= 0:
        raise RegionError("receiver 1 output is determined by (Y2, U); nothing to feed back")
    terms = [rfb / h2]
    denom = h2 - i2 + i1
    terms.append(i1 / denom if denom > 0 else 1.0)
    gamma = min(terms) * (1.0 - 1e-6)
    gamma = min(max(gamma, 1e-12), 1.0 - 1e-12)

    mixture = _mixture_aux(ch, base_ux, enh_ux, gamma)
    cols = mi_terms(ch, mixture)
    improved = RatePoint(float(cols[I_U_Y1_Q]), float(cols[I_X_YTY2_UQ]))
    expected = RatePoint((1 - gamma) * r1b + gamma * r1e, (1 - gamma) * r2b + gamma * r2e)
    surplus = cols[I_U_Y2_Q] - cols[I_U_Y1_Q]
    slack = float(min(rfb, surplus) - cols[I_YT_Y1_UY2Q])
    ok = (
        slack >= -FEAS_TOL
        and abs(cols[I_YT_Y1_UY2Q] - gamma * h2) <= 1e-9
        and abs(improved.r1 - expected.r1) <= 1e-9
        and abs(improved.r2 - expected.r2) <= 1e-9
        and improved.r1 > r1b
        and improved.r2 > r2b
    )
    return ImprovementResult(
        base=RatePoint(r1b, r2b),
        improved=improved,
        gamma=float(gamma),
        h2=h2,
        i1=i1,
        i2=i2,
        feasible=bool(ok),
        aux=mixture,
        rfb=float(rfb),
        feasibility_slack=slack,
    )


def _mixture_aux(ch: Dmbc, base_ux: UxStructure, enh_ux: UxStructure, gamma: float) -> AuxCoding:
    """Two-phase structure: constant compression in phase 1, full copy of Y1
    in phase 2 (symbol index 0 doubles as the constant)."""
    nu = max(base_ux.p_u.shape[0], enh_ux.p_u.shape[0])
    nx = ch.nx
    ny1 = ch.ny1
    qp = np.array([1.0 - gamma, gamma])
    uq = np.zeros((2, nu))
    xuq = np.full((2, nu, nx), 1.0 / nx)
    for qi, ux in enumerate((base_ux, enh_ux)):
        k = ux.p_u.shape[0]
        uq[qi, :k] = ux.p_u
        xuq[qi, :k, :] = ux.p_x_given_u
    ytk = np.zeros((2, nu, ny1, ny1))
    ytk[0, :, :, 0] = 1.0  # constant compression symbol
    for iy1 in range(ny1):
        ytk[1, :, iy1, iy1] = 1.0  # verbatim copy of y1
    return AuxCoding(qp, uq, xuq, ytk)
