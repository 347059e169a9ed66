"""Exact finite-alphabet probability: pmfs, joints, kernels, entropy, MI.

Everything is dense float64 over named axes.  Logarithms are base 2 and
``0 log 0 = 0``; zero-mass conditioning events are skipped.  All containers
are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

MASS_TOL = 1e-12
_MI_CLAMP = 1e-9


class PmfError(ValueError):
    """A probability table violates nonnegativity or normalization."""


class AxisError(ValueError):
    """Axis names or alphabets do not line up."""


class InformationConsistencyError(ArithmeticError):
    """An information quantity came out negative beyond numerical noise."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64, order="C")
    if out is arr:
        out = arr.copy()
    out.setflags(write=False)
    return out


def _check_pmf_vector(probs: np.ndarray, what: str) -> None:
    if np.any(probs < -MASS_TOL) or not np.all(np.isfinite(probs)):
        raise PmfError(f"{what}: entries must be nonnegative and finite")
    total = float(probs.sum())
    if abs(total - 1.0) > MASS_TOL:
        raise PmfError(f"{what}: mass {total!r} is not 1 within {MASS_TOL}")


@dataclass(frozen=True)
class FinitePmf:
    """Probability vector over an ordered alphabet of hashable labels."""

    labels: tuple
    probs: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        probs = np.clip(np.asarray(self.probs, dtype=np.float64), 0.0, None)
        if len(labels) != len(set(labels)):
            raise AxisError("alphabet labels must be unique")
        if probs.ndim != 1 or probs.shape[0] != len(labels):
            raise PmfError("probs length must equal alphabet size")
        _check_pmf_vector(np.asarray(self.probs, dtype=np.float64), "FinitePmf")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", _freeze(probs))

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, label) -> float:
        return float(self.probs[self.labels.index(label)])

    @classmethod
    def uniform(cls, labels: Sequence) -> "FinitePmf":
        k = len(tuple(labels))
        return cls(tuple(labels), np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, labels: Sequence, label) -> "FinitePmf":
        labels = tuple(labels)
        probs = np.zeros(len(labels))
        probs[labels.index(label)] = 1.0
        return cls(labels, probs)

    @classmethod
    def bernoulli(cls, p: float, labels: Sequence = (0, 1)) -> "FinitePmf":
        if not 0.0 <= p <= 1.0:
            raise PmfError(f"bernoulli parameter {p} outside [0, 1]")
        return cls(tuple(labels), np.array([1.0 - p, p]))


@dataclass(frozen=True)
class JointPmf:
    """Dense joint distribution over named finite axes."""

    names: tuple[str, ...]
    alphabets: tuple[tuple, ...]
    table: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        alphabets = tuple(tuple(a) for a in self.alphabets)
        table = np.clip(np.asarray(self.table, dtype=np.float64), 0.0, None)
        if len(names) != len(set(names)):
            raise AxisError("axis names must be unique")
        if len(names) != len(alphabets) or table.shape != tuple(len(a) for a in alphabets):
            raise AxisError("table shape must match the axis alphabets")
        _check_pmf_vector(np.asarray(self.table, dtype=np.float64).ravel(), "JointPmf")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "alphabets", alphabets)
        object.__setattr__(self, "table", _freeze(table))

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise AxisError(f"unknown axis {name!r}; have {self.names}") from None

    def alphabet(self, name: str) -> tuple:
        return self.alphabets[self.axis(name)]

    @classmethod
    def from_pmf(cls, name: str, pmf: FinitePmf) -> "JointPmf":
        return cls((name,), (pmf.labels,), pmf.probs)

    def pmf(self, name: str) -> FinitePmf:
        marg = marginalize(self, (name,))
        return FinitePmf(marg.alphabets[0], marg.table)


@dataclass(frozen=True)
class Kernel:
    """Conditional distribution P(to-axes | from-axes) as a dense table.

    ``table`` has shape ``from-sizes + to-sizes``; every row (slice over the
    to-axes for a fixed input tuple) sums to 1.
    """

    from_names: tuple[str, ...]
    from_alphabets: tuple[tuple, ...]
    to_names: tuple[str, ...]
    to_alphabets: tuple[tuple, ...]
    table: np.ndarray

    def __post_init__(self):
        from_names = tuple(self.from_names)
        to_names = tuple(self.to_names)
        from_alpha = tuple(tuple(a) for a in self.from_alphabets)
        to_alpha = tuple(tuple(a) for a in self.to_alphabets)
        table = np.clip(np.asarray(self.table, dtype=np.float64), 0.0, None)
        if len(set(from_names + to_names)) != len(from_names) + len(to_names):
            raise AxisError("kernel axis names must be unique")
        shape = tuple(len(a) for a in from_alpha) + tuple(len(a) for a in to_alpha)
        if table.shape != shape:
            raise AxisError(f"kernel table shape {table.shape} != expected {shape}")
        raw = np.asarray(self.table, dtype=np.float64)
        if np.any(raw < -MASS_TOL) or not np.all(np.isfinite(raw)):
            raise PmfError("kernel entries must be nonnegative and finite")
        n_from = len(from_names)
        rows = raw.reshape(int(np.prod(table.shape[:n_from], dtype=np.int64)), -1)
        bad = np.abs(rows.sum(axis=1) - 1.0) > MASS_TOL
        if np.any(bad):
            raise PmfError(f"{int(bad.sum())} kernel row(s) do not sum to 1 within {MASS_TOL}")
        object.__setattr__(self, "from_names", from_names)
        object.__setattr__(self, "from_alphabets", from_alpha)
        object.__setattr__(self, "to_names", to_names)
        object.__setattr__(self, "to_alphabets", to_alpha)
        object.__setattr__(self, "table", _freeze(table))

    @classmethod
    def from_rows(
        cls,
        from_axes: Sequence[tuple[str, Sequence]],
        to_axes: Sequence[tuple[str, Sequence]],
        table: np.ndarray,
    ) -> "Kernel":
        return cls(
            tuple(n for n, _ in from_axes),
            tuple(tuple(a) for _, a in from_axes),
            tuple(n for n, _ in to_axes),
            tuple(tuple(a) for _, a in to_axes),
            table,
        )

    @classmethod
    def deterministic(
        cls,
        from_axes: Sequence[tuple[str, Sequence]],
        to_axes: Sequence[tuple[str, Sequence]],
        fn: Callable,
    ) -> "Kernel":
        """Kernel putting mass 1 on ``fn(*input labels) -> output labels``."""
        from_alpha = [tuple(a) for _, a in from_axes]
        to_alpha = [tuple(a) for _, a in to_axes]
        shape_in = tuple(len(a) for a in from_alpha)
        shape_out = tuple(len(a) for a in to_alpha)
        table = np.zeros(shape_in + shape_out)
        for idx in np.ndindex(*shape_in) if shape_in else ((),):
            out = fn(*(a[i] for a, i in zip(from_alpha, idx)))
            if len(to_alpha) == 1:
                out = (out,)
            oidx = tuple(a.index(o) for a, o in zip(to_alpha, out))
            table[idx + oidx] = 1.0
        return cls.from_rows(from_axes, to_axes, table)

    @classmethod
    def constant(cls, from_axes, to_name: str, to_labels: Sequence, label) -> "Kernel":
        return cls.deterministic(from_axes, [(to_name, to_labels)], lambda *_: label)


def compose(prior: JointPmf, kernel: Kernel) -> JointPmf:
    """Extend ``prior`` by the kernel's output axes (chain factorization)."""
    for name, alpha in zip(kernel.from_names, kernel.from_alphabets):
        if name not in prior.names:
            raise AxisError(f"kernel input axis {name!r} missing from prior {prior.names}")
        if prior.alphabet(name) != alpha:
            raise AxisError(f"alphabet mismatch on shared axis {name!r}")
    for name in kernel.to_names:
        if name in prior.names:
            raise AxisError(f"kernel output axis {name!r} already present in prior")
    nd = prior.table.ndim
    p_idx = list(range(nd))
    k_idx = [prior.axis(n) for n in kernel.from_names]
    k_idx += [nd + i for i in range(len(kernel.to_names))]
    out_idx = p_idx + [nd + i for i in range(len(kernel.to_names))]
    table = np.einsum(prior.table, p_idx, kernel.table, k_idx, out_idx)
    return JointPmf(
        prior.names + kernel.to_names,
        prior.alphabets + kernel.to_alphabets,
        table,
    )


def marginalize(joint: JointPmf, keep: Iterable[str]) -> JointPmf:
    """Sum out every axis not in ``keep`` (order of kept axes is preserved)."""
    keep = set(keep)
    unknown = keep - set(joint.names)
    if unknown:
        raise AxisError(f"unknown axes {sorted(unknown)}; have {joint.names}")
    drop = tuple(i for i, n in enumerate(joint.names) if n not in keep)
    table = joint.table.sum(axis=drop) if drop else joint.table
    names = tuple(n for n in joint.names if n in keep)
    alphabets = tuple(a for n, a in zip(joint.names, joint.alphabets) if n in keep)
    return JointPmf(names, alphabets, table)


def _entropy_of_table(table: np.ndarray) -> float:
    flat = table.ravel()
    pos = flat[flat > 0.0]
    if pos.size == 0:
        return 0.0
    return float(-(pos * np.log2(pos)).sum())


def entropy(joint: JointPmf, axes: Iterable[str]) -> float:
    """Shannon entropy (bits) of the marginal on ``axes``."""
    axes = tuple(axes)
    if not axes:
        return 0.0
    return _entropy_of_table(marginalize(joint, axes).table)


def cond_mutual_info(
    joint: JointPmf,
    a: Iterable[str],
    b: Iterable[str],
    c: Iterable[str] = (),
) -> float:
    """I(A;B|C) in bits; ``c`` may be empty.

    Tiny negatives (within 1e-9) from floating-point cancellation are clamped
    to 0; anything more negative raises.
    """
    a, b, c = set(a), set(b), set(c)
    if a & b or a & c or b & c:
        raise AxisError("axis sets a, b, c must be pairwise disjoint")
    value = (
        entropy(joint, a | c)
        + entropy(joint, b | c)
        - entropy(joint, a | b | c)
        - entropy(joint, c)
    )
    if value < 0.0:
        if value >= -_MI_CLAMP:
            return 0.0
        raise InformationConsistencyError(f"I(A;B|C) = {value} < -{_MI_CLAMP}")
    return value


def star(a: float, b: float) -> float:
    """Binary convolution (1-a)b + a(1-b) of two probabilities."""
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ValueError(f"star arguments must lie in [0, 1], got {a}, {b}")
    return (1.0 - a) * b + a * (1.0 - b)


def binary_entropy(p: float) -> float:
    """H(p) in bits for a Bernoulli parameter."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary_entropy argument {p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))
