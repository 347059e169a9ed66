"""Two-receiver discrete memoryless broadcast channels and ordering checks.

A channel is a stochastic map from one input to a pair of outputs.  This
module builds the standard binary-symmetric and binary-erasure pairs, the
"enhanced" channel in which receiver 2 additionally observes receiver 1's
output, and two verifiers: an exact physical-degradedness test and a
search-based less-noisy falsifier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .prob import AxisError, Kernel, MASS_TOL, PmfError

ERASED = "e"


class ChannelSpecError(ValueError):
    """Malformed channel description."""


@dataclass(frozen=True)
class Dmbc:
    """Broadcast channel law P(y1, y2 | x) over finite alphabets."""

    x_alphabet: tuple
    y1_alphabet: tuple
    y2_alphabet: tuple
    law: np.ndarray  # shape (|X|, |Y1|, |Y2|)

    def __post_init__(self):
        xa = tuple(self.x_alphabet)
        y1a = tuple(self.y1_alphabet)
        y2a = tuple(self.y2_alphabet)
        law = np.clip(np.asarray(self.law, dtype=np.float64), 0.0, None)
        if law.shape != (len(xa), len(y1a), len(y2a)):
            raise AxisError(f"law shape {law.shape} does not match alphabets")
        raw = np.asarray(self.law, dtype=np.float64)
        if np.any(raw < -MASS_TOL) or not np.all(np.isfinite(raw)):
            raise PmfError("channel law entries must be nonnegative and finite")
        sums = raw.reshape(len(xa), -1).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > MASS_TOL):
            raise PmfError("each channel row must sum to 1 within 1e-12")
        law = np.ascontiguousarray(law)
        law.setflags(write=False)
        object.__setattr__(self, "x_alphabet", xa)
        object.__setattr__(self, "y1_alphabet", y1a)
        object.__setattr__(self, "y2_alphabet", y2a)
        object.__setattr__(self, "law", law)

    @property
    def nx(self) -> int:
        return len(self.x_alphabet)

    @property
    def ny1(self) -> int:
        return len(self.y1_alphabet)

    @property
    def ny2(self) -> int:
        return len(self.y2_alphabet)

    def law_kernel(self) -> Kernel:
        return Kernel.from_rows(
            [("x", self.x_alphabet)],
            [("y1", self.y1_alphabet), ("y2", self.y2_alphabet)],
            self.law,
        )

    def y1_marginal(self) -> np.ndarray:
        """P(y1 | x) as an (|X|, |Y1|) matrix."""
        return self.law.sum(axis=2)

    def y2_marginal(self) -> np.ndarray:
        return self.law.sum(axis=1)


def make_bsbc(p1: float, p2: float) -> Dmbc:
    """Binary-symmetric pair: Y_i = X xor Bern(p_i), independent flips."""
    for p in (p1, p2):
        if not 0.0 <= p <= 1.0:
            raise ChannelSpecError(f"crossover probability {p} outside [0, 1]")
    law = np.zeros((2, 2, 2))
    for x in (0, 1):
        for z1 in (0, 1):
            for z2 in (0, 1):
                pr = (p1 if z1 else 1 - p1) * (p2 if z2 else 1 - p2)
                law[x, x ^ z1, x ^ z2] += pr
    return Dmbc((0, 1), (0, 1), (0, 1), law)


def make_bebc(d1: float, d2: float) -> Dmbc:
    """Binary-erasure pair: output i equals x or is erased w.p. d_i."""
    for d in (d1, d2):
        if not 0.0 <= d <= 1.0:
            raise ChannelSpecError(f"erasure probability {d} outside [0, 1]")
    outs = (0, 1, ERASED)
    law = np.zeros((2, 3, 3))
    for x in (0, 1):
        for e1 in (0, 1):
            for e2 in (0, 1):
                pr = (d1 if e1 else 1 - d1) * (d2 if e2 else 1 - d2)
                i1 = 2 if e1 else x
                i2 = 2 if e2 else x
                law[x, i1, i2] += pr
    return Dmbc((0, 1), outs, outs, law)


def enhance(ch: Dmbc) -> Dmbc:
    """Reveal receiver 1's output to receiver 2.

    Receiver 2's alphabet becomes Y1 x Y2; the result is physically degraded
    by construction.
    """
    ny1, ny2 = ch.ny1, ch.ny2
    law = np.zeros((ch.nx, ny1, ny1 * ny2))
    for iy1 in range(ny1):
        law[:, iy1, iy1 * ny2 : (iy1 + 1) * ny2] = ch.law[:, iy1, :]
    pairs = tuple((a, b) for a in ch.y1_alphabet for b in ch.y2_alphabet)
    return Dmbc(ch.x_alphabet, ch.y1_alphabet, pairs, law)


def cascade_channel(x_to_y2: np.ndarray, y2_to_y1: np.ndarray) -> Dmbc:
    """Physically degraded channel built as X -> Y2 -> Y1."""
    k1 = np.asarray(x_to_y2, dtype=np.float64)
    k2 = np.asarray(y2_to_y1, dtype=np.float64)
    nx, ny2 = k1.shape
    ny1 = k2.shape[1]
    law = np.einsum("xj,jk->xkj", k1, k2)
    return Dmbc(tuple(range(nx)), tuple(range(ny1)), tuple(range(ny2)), law)


def is_physically_degraded(ch: Dmbc, tol: float = 1e-9) -> bool:
    """True iff some kernel K(y1|y2) factorizes the law as P(y2|x) K(y1|y2).

    Equivalent to P(y1 | y2, x) not depending on x wherever P(y2|x) > 0.
    """
    py2 = ch.y2_marginal()  # (nx, ny2)
    for iy2 in range(ch.ny2):
        ref = None
        for ix in range(ch.nx):
            mass = py2[ix, iy2]
            if mass <= 1e-12:
                continue
            row = ch.law[ix, :, iy2] / mass
            if ref is None:
                ref = row
            elif np.max(np.abs(row - ref)) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# Less-noisy ordering.


@dataclass(frozen=True)
class LessNoisyWitness:
    """An auxiliary-input distribution with I(U;Y1) exceeding I(U;Y2)."""

    p_u: np.ndarray
    p_x_given_u: np.ndarray
    i_u_y1: float
    i_u_y2: float


@dataclass(frozen=True)
class OrderingReport:
    """Outcome of the less-noisy search.

    ``violated`` is sound (a concrete witness is attached); ``holds`` is
    heuristic and resolution-limited.  ``undecided-at-resolution`` means the
    ordering held at every sample but some sample with I(U;Y1) > 1e-6 showed
    no strict margin, so the strict version cannot be asserted.
    """

    verdict: str
    witness: Optional[LessNoisyWitness]
    max_deficit: float
    min_strict_margin: float
    samples_checked: int

    def __post_init__(self):
        if self.verdict == "violated":
            w = self.witness
            if w is None or not w.i_u_y1 > w.i_u_y2 + 1e-9:
                raise ValueError("violated verdict requires a strict witness")


def _simplex_grid(dim: int, resolution: int) -> np.ndarray:
    """All pmfs over ``dim`` cells with coordinates k/resolution."""
    if dim == 1:
        return np.ones((1, 1))
    points = []

    def rec(prefix, remaining, cells_left):
        if cells_left == 1:
            points.append(prefix + [remaining])
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, cells_left - 1)

    rec([], resolution, dim)
    return np.asarray(points, dtype=np.float64) / resolution


def _mi_pair_batch(ch: Dmbc, p_u: np.ndarray, p_x_given_u: np.ndarray) -> np.ndarray:
    """(I(U;Y1), I(U;Y2)) per row, via the shared MI kernel with trivial q/yt."""
    nb, nu = p_u.shape
    qp = np.ones((nb, 1))
    uq = p_u[:, None, :]
    xuq = p_x_given_u[:, None, :, :]
    ytk = np.ones((nb, 1, nu, ch.ny1, 1))
    cols = _kernels.aux_mi_terms(qp, uq, xuq, ch.law, ytk)
    return cols[:, :2]


def _candidate_structures(ch: Dmbc, grid_resolution: int, samples: int, seed: int):
    """Batches of (P_U, P_X|U) candidates at the usual cardinality bound."""
    nx = ch.nx
    nu_max = min(nx, ch.ny1, ch.ny2) + 1
    rng = np.random.default_rng(seed)
    batches = []

    # U = X couplings: catches every violation expressible without a genuine
    # auxiliary, e.g. swapped binary-symmetric pairs.
    px = _simplex_grid(nx, grid_resolution)
    pu = np.zeros((px.shape[0], nu_max))
    pu[:, :nx] = px
    pxu = np.zeros((px.shape[0], nu_max, nx))
    pxu[:, :, :] = 1.0 / nx
    for j in range(nx):
        pxu[:, j, :] = 0.0
        pxu[:, j, j] = 1.0
    batches.append((pu, pxu))

    # Binary-U grid over rows drawn from the simplex grid.
    rows = _simplex_grid(nx, grid_resolution)
    weights = _simplex_grid(2, grid_resolution)
    combos = weights.shape[0] * rows.shape[0] ** 2
    cap = 20000
    pairs = []
    if combos <= cap:
        for w in range(weights.shape[0]):
            for i in range(rows.shape[0]):
                for j in range(rows.shape[0]):
                    pairs.append((weights[w], rows[i], rows[j]))
    else:
        for _ in range(cap):
            w = weights[rng.integers(weights.shape[0])]
            i = rows[rng.integers(rows.shape[0])]
            j = rows[rng.integers(rows.shape[0])]
            pairs.append((w, i, j))
    pu = np.zeros((len(pairs), nu_max))
    pxu = np.full((len(pairs), nu_max, nx), 1.0 / nx)
    for k, (w, r0, r1) in enumerate(pairs):
        pu[k, 0], pu[k, 1] = w[0], w[1]
        pxu[k, 0] = r0
        pxu[k, 1] = r1
    batches.append((pu, pxu))

    # Random refinement at the full cardinality bound.
    if samples > 0:
        pu = rng.dirichlet(np.ones(nu_max), size=samples)
        pxu = rng.dirichlet(np.ones(nx), size=(samples, nu_max))
        batches.append((pu, pxu))
    return batches


def check_less_noisy(
    ch: Dmbc,
    grid_resolution: int = 20,
    samples: int = 2000,
    seed: int = 0,
) -> OrderingReport:
    """Search for an auxiliary input with I(U;Y1) > I(U;Y2).

    The search covers a simplex grid plus seeded random samples with the
    auxiliary cardinality capped at min(|X|, |Y1|, |Y2|) + 1.  A ``violated``
    verdict carries a witness and is sound; ``holds`` is heuristic.
    """
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be at least 2")
    best_deficit = -np.inf
    best = None
    min_margin = np.inf
    checked = 0
    for pu, pxu in _candidate_structures(ch, grid_resolution, samples, seed):
        cols = _mi_pair_batch(ch, pu, pxu)
        i1, i2 = cols[:, 0], cols[:, 1]
        checked += cols.shape[0]
        deficit = i1 - i2
        k = int(np.argmax(deficit))
        if deficit[k] > best_deficit:
            best_deficit = float(deficit[k])
            best = LessNoisyWitness(pu[k].copy(), pxu[k].copy(), float(i1[k]), float(i2[k]))
        active = i1 > 1e-6
        if np.any(active):
            m = float(np.min(i2[active] - i1[active]))
            min_margin = min(min_margin, m)
    if best_deficit > 1e-9:
        return OrderingReport("violated", best, best_deficit, -best_deficit, checked)
    verdict = "holds" if min_margin > 1e-9 else "undecided-at-resolution"
    return OrderingReport(verdict, None, best_deficit, float(min_margin), checked)


def bsbc_analytic_ordering(p1: float, p2: float) -> str:
    """Parameter comparison for binary-symmetric pairs.

    Effective noise is min(p, 1-p); receiver 2 is strictly less noisy iff its
    effective noise is strictly smaller.
    """
    e1, e2 = min(p1, 1.0 - p1), min(p2, 1.0 - p2)
    if e2 < e1:
        return "strictly-less-noisy"
    if e2 == e1:
        return "equivalent"
    return "violated"


def bebc_analytic_ordering(d1: float, d2: float) -> str:
    """Parameter comparison for binary-erasure pairs."""
    if d2 < d1:
        return "strictly-less-noisy"
    if d2 == d1:
        return "equivalent"
    return "violated"


# ---------------------------------------------------------------------------
# JSON channel specs.


def channel_from_spec(spec: dict) -> Dmbc:
    """Build a channel from its JSON description.

    ``{"type": "bsbc", "p1": .., "p2": ..}``, ``{"type": "bebc", ...}``, or
    ``{"type": "matrix", "x": [...], "y1": [...], "y2": [...], "rows": ...}``
    with rows indexed x-major and (y1, y2) columns ordered y2-fastest.
    """
    try:
        kind = spec["type"]
    except (TypeError, KeyError):
        raise ChannelSpecError("channel spec must be an object with a 'type' field")
    if kind == "bsbc":
        return make_bsbc(float(spec["p1"]), float(spec["p2"]))
    if kind == "bebc":
        return make_bebc(float(spec["d1"]), float(spec["d2"]))
    if kind == "matrix":
        try:
            xa = tuple(spec["x"])
            y1a = tuple(spec["y1"])
            y2a = tuple(spec["y2"])
            rows = np.asarray(spec["rows"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ChannelSpecError(f"bad matrix channel spec: {exc}") from exc
        if rows.shape != (len(xa), len(y1a) * len(y2a)):
            raise ChannelSpecError(
                f"rows shape {rows.shape} != ({len(xa)}, {len(y1a) * len(y2a)})"
            )
        law = rows.reshape(len(xa), len(y1a), len(y2a))
        return Dmbc(xa, y1a, y2a, law)
    raise ChannelSpecError(f"unknown channel type {kind!r}")


def channel_to_spec(ch: Dmbc) -> dict:
    """Matrix-form JSON description (inverse of the matrix branch above)."""
    return {
        "type": "matrix",
        "x": list(ch.x_alphabet),
        "y1": list(ch.y1_alphabet),
        "y2": list(ch.y2_alphabet),
        "rows": ch.law.reshape(ch.nx, -1).tolist(),
    }


def load_channel(path: str) -> Dmbc:
    with open(path, "r", encoding="utf-8") as fh:
        return channel_from_spec(json.load(fh))
