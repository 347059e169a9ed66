"""Desk-scale Monte Carlo simulation of the block-Markov feedback scheme.

One trial draws fresh random codebooks, runs B+1 blocks of length n over the
channel, and decodes with robust-typicality searches:

* superposition codebooks: cloud sequences indexed by (message-1, previous
  bin index), satellite input sequences per message-2, and a compression
  codebook per cloud sequence, binned down to the feedback rate;
* receiver 1 decodes its message from its own output, covers that output
  with a compression codeword, and feeds back only the codeword's bin index
  in the last channel use of each block;
* receiver 2 decodes each block's (message-1, bin) pair from its own output,
  then finishes the previous block: picks the compression codeword inside
  the decoded bin and finally its own message (sliding-window timing).

Codebooks are generated lazily and deterministically from per-(trial, block,
codebook, cloud-index) seeds, so encoder and decoders see identical books
without materializing the full cross product.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .backend import worker_count
from .channels import Dmbc
from .prob import cond_mutual_info, marginalize
from .regions import AuxCoding, mi_terms

_WILSON_Z = 1.959963984540054

# A codebook request above this many bits of sequences is hopeless at desk
# scale regardless of the memory cap.
_BITS_HARD_LIMIT = 62


class SchemeError(ValueError):
    """Bad simulation parameters."""


class SchemeInfeasibleError(SchemeError):
    """The auxiliary structure admits no valid rate assignment."""


class CodebookSizeError(SchemeError):
    """Requested codebooks exceed the memory cap; carries a sizing report."""

    def __init__(self, report: dict):
        self.report = report
        lines = ", ".join(f"{k}={v}" for k, v in report.items())
        super().__init__(f"codebook sizing exceeds the cap: {lines}")


@dataclass(frozen=True)
class SchemeParams:
    """Block length, block count, rates (bits/use), and knobs of one run."""

    n: int
    blocks: int  # number of message-carrying blocks; one dummy block follows
    r1: float
    r2: float
    r_tilde: float  # feedback bin rate
    r_hat: float  # compression codebook rate
    rfb: float  # feedback budget the bin rate must respect
    epsilon: float = 0.35
    seed: int = 0
    memory_cap: int = 1 << 26  # codebook symbols held at once

    def __post_init__(self):
        if self.n < 1 or self.blocks < 1:
            raise SchemeError("n and blocks must be positive")
        for name in ("r1", "r2", "r_tilde", "r_hat", "rfb"):
            if getattr(self, name) < 0:
                raise SchemeError(f"{name} must be nonnegative")
        if self.r_hat < self.r_tilde:
            raise SchemeError("r_hat must be at least r_tilde")
        if self.r_tilde > self.rfb + 1e-12:
            raise SchemeError("bin rate r_tilde exceeds the feedback budget rfb")
        if not 0 < self.epsilon:
            raise SchemeError("epsilon must be positive")


def _set_bits(n: int, rate: float) -> float:
    return n * rate


def _set_size(n: int, rate: float) -> Optional[int]:
    """floor(2^(n*rate)), or None when it cannot fit an int64."""
    bits = _set_bits(n, rate)
    if bits > _BITS_HARD_LIMIT:
        return None
    return max(1, int(math.floor(2.0**bits + 1e-9)))


@dataclass(frozen=True)
class TrialResult:
    """Per-block correctness and bookkeeping of a single simulated trial."""

    m1_ok: np.ndarray
    m2_ok: np.ndarray
    failures: dict
    feedback_signals: int
    bin_count: int
    feedback_bits_used: int  # ceil of total feedback alphabet log-size
    feedback_log2_alphabet: float

    @property
    def all_ok(self) -> bool:
        return bool(self.m1_ok.all() and self.m2_ok.all())


_FAILURE_KEYS = (
    "rx1_message_none",
    "rx1_message_multi",
    "rx1_cover_none",
    "rx1_cover_multi",
    "rx2_pair_none",
    "rx2_pair_multi",
    "rx2_bin_none",
    "rx2_bin_multi",
    "rx2_message_none",
    "rx2_message_multi",
)


class _SchemeContext:
    """Everything derived once from (channel, structure, params)."""

    def __init__(self, ch: Dmbc, aux: AuxCoding, p: SchemeParams):
        if aux.nq != 1:
            raise SchemeError("the simulator runs single-phase structures only")
        aux = aux.with_channel_y1(ch.ny1)
        self.ch = ch
        self.aux = aux
        self.p = p
        j = aux.joint(ch)
        self.nu, self.nx = aux.nu, ch.nx
        self.ny1, self.ny2, self.nyt = ch.ny1, ch.ny2, aux.nyt

        # Generation distributions.
        pu = marginalize(j, ("u",)).table
        puq = np.where(pu > 0, pu, 1.0)
        pxu = marginalize(j, ("u", "x")).table / puq[:, None]
        pytu = marginalize(j, ("u", "yt")).table / puq[:, None]
        uniform_x = np.full(self.nx, 1.0 / self.nx)
        uniform_yt = np.full(self.nyt, 1.0 / self.nyt)
        pxu[pu <= 0] = uniform_x
        pytu[pu <= 0] = uniform_yt
        self.p_u = pu
        self.cum_u = np.cumsum(pu)
        self.cum_x_u = np.cumsum(pxu, axis=1)
        self.cum_yt_u = np.cumsum(pytu, axis=1)
        law_flat = ch.law.reshape(self.nx, -1)
        self.cum_ch = np.cumsum(law_flat, axis=1)

        # Typicality targets, laid out as (scanned symbol, context index).
        def target(scan: str, ctx: tuple[str, ...]) -> np.ndarray:
            axes = (scan,) + ctx
            marg = marginalize(j, axes)
            order = [marg.names.index(n) for n in axes]
            table = np.transpose(marg.table, order)
            return np.ascontiguousarray(table.reshape(table.shape[0], -1))

        self.t_rx1_msg = target("u", ("y1",))
        self.t_rx1_cov = target("yt", ("u", "y1"))
        self.t_rx2_pair = target("u", ("y2",))
        self.t_rx2_bin = target("yt", ("u", "y2"))
        self.t_rx2_msg = target("x", ("u", "yt", "y2"))

        # Message/bin set sizes.
        sizes = {
            "messages_1": _set_size(p.n, p.r1),
            "messages_2": _set_size(p.n, p.r2),
            "bins": _set_size(p.n, p.r_tilde),
            "compression_words": _set_size(p.n, p.r_hat),
        }
        report = {
            k: (v if v is not None else f"2^{_set_bits(p.n, r):.1f}")
            for (k, v), r in zip(sizes.items(), (p.r1, p.r2, p.r_tilde, p.r_hat))
        }
        if any(v is None for v in sizes.values()):
            report["cap_symbols"] = p.memory_cap
            raise CodebookSizeError(report)
        self.m1_size = sizes["messages_1"]
        self.m2_size = sizes["messages_2"]
        self.bins = sizes["bins"]
        self.mhat_size = sizes["compression_words"]
        biggest = max(
            self.m1_size * self.bins,  # cloud codebook entries per block
            self.m2_size,
            self.mhat_size,
        )
        if biggest * p.n > p.memory_cap:
            report["cloud_entries"] = self.m1_size * self.bins
            report["symbols_needed"] = biggest * p.n
            report["cap_symbols"] = p.memory_cap
            raise CodebookSizeError(report)
        self.bin_width = self.mhat_size // self.bins

    def bin_of(self, m: int) -> int:
        return min(m // self.bin_width, self.bins - 1)

    def bin_range(self, l: int) -> tuple[int, int]:
        lo = l * self.bin_width
        hi = self.mhat_size if l == self.bins - 1 else (l + 1) * self.bin_width
        return lo, hi


def _rng(seed_items: tuple) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed_items))


def _sample_iid(rng, cum: np.ndarray, count: int, n: int) -> np.ndarray:
    r = rng.random((count, n))
    idx = np.searchsorted(cum, r, side="right")
    return np.minimum(idx, cum.shape[0] - 1).astype(np.int8)


def _sample_given(rng, cum_rows: np.ndarray, cond_seq: np.ndarray, count: int) -> np.ndarray:
    """count sequences drawn position-wise from rows selected by cond_seq.

    Positions sharing a conditioning symbol are sampled together (one
    searchsorted per distinct symbol); binary output rows reduce to a single
    threshold comparison.
    """
    n = cond_seq.shape[0]
    r = rng.random((count, n))
    kmax = cum_rows.shape[1] - 1
    if kmax == 1:  # binary rows: one threshold per position
        return (r >= cum_rows[cond_seq.astype(np.int64), 0][None, :]).astype(np.int8)
    out = np.empty((count, n), dtype=np.int8)
    for sym in np.unique(cond_seq):
        cols = cond_seq == sym
        idx = np.searchsorted(cum_rows[int(sym)], r[:, cols].ravel(), side="right")
        out[:, cols] = np.minimum(idx, kmax).reshape(count, -1).astype(np.int8)
    return out


class _Codebooks:
    """Lazy deterministic codebooks for one trial.

    Every codebook chunk is regenerated from a seed keyed by (trial, block,
    kind, cloud index), so the encoder and both decoders observe the same
    random code without sharing state.
    """

    _U, _X, _YT = 0, 1, 2

    def __init__(self, ctx: _SchemeContext, trial: int):
        self.ctx = ctx
        self.trial = trial
        self._u_cache: dict[int, np.ndarray] = {}
        self._x_cache: dict[tuple, np.ndarray] = {}
        self._yt_cache: dict[tuple, np.ndarray] = {}

    def _seed(self, kind: int, block: int, pair: int) -> tuple:
        return (self.ctx.p.seed, self.trial, kind, block, pair)

    def u(self, block: int) -> np.ndarray:
        """(m1_size * bins, n) cloud codebook; entry index = m1 * bins + l."""
        cb = self._u_cache.get(block)
        if cb is None:
            ctx = self.ctx
            rng = _rng(self._seed(self._U, block, 0))
            cb = _sample_iid(rng, ctx.cum_u, ctx.m1_size * ctx.bins, ctx.p.n)
            if len(self._u_cache) >= 2:  # sliding window touches two blocks
                oldest = min(self._u_cache)
                del self._u_cache[oldest]
            self._u_cache[block] = cb
        return cb

    def x(self, block: int, m1: int, l: int) -> np.ndarray:
        key = (block, m1, l)
        cb = self._x_cache.get(key)
        if cb is None:
            ctx = self.ctx
            u_seq = self.u(block)[m1 * ctx.bins + l]
            rng = _rng(self._seed(self._X, block, m1 * ctx.bins + l))
            cb = _sample_given(rng, ctx.cum_x_u, u_seq, ctx.m2_size)
            if len(self._x_cache) > 8:
                self._x_cache.clear()
            self._x_cache[key] = cb
        return cb

    def yt(self, block: int, m1: int, l: int) -> np.ndarray:
        key = (block, m1, l)
        cb = self._yt_cache.get(key)
        if cb is None:
            ctx = self.ctx
            u_seq = self.u(block)[m1 * ctx.bins + l]
            rng = _rng(self._seed(self._YT, block, m1 * ctx.bins + l))
            cb = _sample_given(rng, ctx.cum_yt_u, u_seq, ctx.mhat_size)
            if len(self._yt_cache) > 8:
                self._yt_cache.clear()
            self._yt_cache[key] = cb
        return cb


def _rx1_process_block(ctx, books, block, l_known, y1, fails):
    """Receiver 1: decode its message, cover y1, return (m1_hat, next bin).

    Uses only receiver 1's own output and its self-generated bin indices.
    """
    u_cb = books.u(block)
    cand_rows = u_cb[np.arange(ctx.m1_size) * ctx.bins + l_known]
    count, first = _kernels.typical_matches(cand_rows, y1, ctx.t_rx1_msg, ctx.p.epsilon)
    if count == 0:
        fails["rx1_message_none"] += 1
        m1_hat = 0
    else:
        if count > 1:
            fails["rx1_message_multi"] += 1
        m1_hat = int(first)
    u_seq = u_cb[m1_hat * ctx.bins + l_known].astype(np.int64)
    yt_cb = books.yt(block, m1_hat, l_known)
    ctx_seq = u_seq * ctx.ny1 + y1
    count, first = _kernels.typical_matches(yt_cb, ctx_seq, ctx.t_rx1_cov, ctx.p.epsilon)
    if count == 0:
        fails["rx1_cover_none"] += 1
        l_next = 0
    else:
        if count > 1:
            fails["rx1_cover_multi"] += 1
        l_next = ctx.bin_of(int(first))
    return m1_hat, l_next


def _rx2_pair_search(ctx, books, block, y2, fails):
    """Receiver 2: decode this block's (message-1, previous bin) pair."""
    u_cb = books.u(block)
    count, first = _kernels.typical_matches(u_cb, y2, ctx.t_rx2_pair, ctx.p.epsilon)
    if count == 0:
        fails["rx2_pair_none"] += 1
        pair = 0
    else:
        if count > 1:
            fails["rx2_pair_multi"] += 1
        pair = int(first)
    return pair // ctx.bins, pair % ctx.bins


def _rx2_finish_block(ctx, books, block, m1_hat, l_prev_hat, l_bin_hat, y2, fails):
    """Receiver 2: resolve the compression word in the decoded bin, then m2."""
    u_seq = books.u(block)[m1_hat * ctx.bins + l_prev_hat].astype(np.int64)
    yt_cb = books.yt(block, m1_hat, l_prev_hat)
    lo, hi = ctx.bin_range(l_bin_hat)
    ctx_seq = u_seq * ctx.ny2 + y2
    count, first = _kernels.typical_matches(yt_cb[lo:hi], ctx_seq, ctx.t_rx2_bin, ctx.p.epsilon)
    if count == 0:
        fails["rx2_bin_none"] += 1
        m_hat = lo
    else:
        if count > 1:
            fails["rx2_bin_multi"] += 1
        m_hat = lo + int(first)
    yt_seq = yt_cb[m_hat].astype(np.int64)
    x_cb = books.x(block, m1_hat, l_prev_hat)
    ctx_seq = (u_seq * ctx.nyt + yt_seq) * ctx.ny2 + y2
    count, first = _kernels.typical_matches(x_cb, ctx_seq, ctx.t_rx2_msg, ctx.p.epsilon)
    if count == 0:
        fails["rx2_message_none"] += 1
        return 0
    if count > 1:
        fails["rx2_message_multi"] += 1
    return int(first)


def run_trial(ch: Dmbc, aux: AuxCoding, p: SchemeParams, trial_index: int = 0) -> TrialResult:
    """Simulate one full transmission (B message blocks plus a dummy block)."""
    ctx = _SchemeContext(ch, aux, p)
    return _run_trial_ctx(ctx, trial_index)


def _run_trial_ctx(ctx: _SchemeContext, trial: int) -> TrialResult:
    p = ctx.p
    B = p.blocks
    books = _Codebooks(ctx, trial)
    rng_msg = _rng((p.seed, trial, 100))
    rng_ch = _rng((p.seed, trial, 101))
    true_m1 = rng_msg.integers(0, ctx.m1_size, size=B + 1)
    true_m2 = rng_msg.integers(0, ctx.m2_size, size=B + 1)
    true_m1[B] = 0  # final block carries known dummies
    true_m2[B] = 0

    fails = dict.fromkeys(_FAILURE_KEYS, 0)
    m1_hat = np.zeros(B, dtype=np.int64)
    m2_hat = np.zeros(B, dtype=np.int64)
    pair_hats = np.zeros((B + 1, 2), dtype=np.int64)
    y2_blocks = np.zeros((B + 1, p.n), dtype=np.int64)

    l_prev = 0  # initial bin index is the fixed convention value
    for b in range(B + 1):
        x_seq = books.x(b, int(true_m1[b]), l_prev)[true_m2[b]].astype(np.int64)
        cum = ctx.cum_ch[x_seq]  # (n, ny1*ny2)
        r = rng_ch.random((p.n, 1))
        flat = (r >= cum).sum(axis=1)
        flat = np.minimum(flat, ctx.ny1 * ctx.ny2 - 1)
        y1 = (flat // ctx.ny2).astype(np.int64)
        y2 = (flat % ctx.ny2).astype(np.int64)
        y2_blocks[b] = y2

        if b < B:
            m1_dec, l_next = _rx1_process_block(ctx, books, b, l_prev, y1, fails)
            m1_hat[b] = m1_dec
        else:
            l_next = l_prev  # no feedback after the dummy block

        pair_hats[b] = _rx2_pair_search(ctx, books, b, y2, fails)
        if b >= 1:
            pm1, pl = int(pair_hats[b - 1, 0]), int(pair_hats[b - 1, 1])
            m2_dec = _rx2_finish_block(
                ctx, books, b - 1, pm1, pl, int(pair_hats[b, 1]), y2_blocks[b - 1], fails
            )
            if b - 1 < B:
                m2_hat[b - 1] = m2_dec
        l_prev = l_next

    log2_bins = math.log2(ctx.bins) if ctx.bins > 1 else 0.0
    total_log2 = B * log2_bins
    return TrialResult(
        m1_ok=m1_hat == true_m1[:B],
        m2_ok=m2_hat == true_m2[:B],
        failures=fails,
        feedback_signals=B if ctx.bins > 1 else 0,
        bin_count=ctx.bins,
        feedback_bits_used=int(math.ceil(total_log2 - 1e-12)),
        feedback_log2_alphabet=total_log2,
    )


@dataclass(frozen=True)
class ErrorEstimate:
    """Monte Carlo error estimate with a Wilson 95% interval."""

    p_err: float
    ci95: float  # half-width
    ci_low: float
    ci_high: float
    trials: int
    failures: dict
    feedback_law_ok: bool
    params: SchemeParams

    def to_dict(self) -> dict:
        return {
            "p_err": self.p_err,
            "ci95": self.ci95,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "trials": self.trials,
            "failures": dict(self.failures),
            "feedback_law_ok": self.feedback_law_ok,
            "params": {
                "n": self.params.n,
                "blocks": self.params.blocks,
                "r1": self.params.r1,
                "r2": self.params.r2,
                "r_tilde": self.params.r_tilde,
                "r_hat": self.params.r_hat,
                "rfb": self.params.rfb,
                "epsilon": self.params.epsilon,
                "seed": self.params.seed,
            },
        }


def _wilson(errors: int, trials: int) -> tuple[float, float, float]:
    z2 = _WILSON_Z**2
    phat = errors / trials
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = (_WILSON_Z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials**2))) / denom
    return center - half, center + half, half


def _one_trial(args) -> TrialResult:
    ch, aux, p, t = args
    return run_trial(ch, aux, p, t)


def estimate_error(ch: Dmbc, aux: AuxCoding, p: SchemeParams, trials: int) -> ErrorEstimate:
    """Fraction of trials with any block error; deterministic given the seed."""
    if trials < 1:
        raise SchemeError("trials must be at least 1")
    workers = worker_count()
    results: list[TrialResult] = []
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_one_trial, ((ch, aux, p, t) for t in range(trials))))
    else:
        ctx = _SchemeContext(ch, aux, p)
        results = [_run_trial_ctx(ctx, t) for t in range(trials)]
    errors = sum(0 if r.all_ok else 1 for r in results)
    fails = dict.fromkeys(_FAILURE_KEYS, 0)
    for r in results:
        for k, v in r.failures.items():
            fails[k] += v
    n_total = (p.blocks + 1) * p.n
    law_ok = all(r.feedback_log2_alphabet <= n_total * p.rfb + 1.0 + 1e-9 for r in results)
    low, high, half = _wilson(errors, trials)
    return ErrorEstimate(
        p_err=errors / trials,
        ci95=half,
        ci_low=max(0.0, low),
        ci_high=min(1.0, high),
        trials=trials,
        failures=fails,
        feedback_law_ok=law_ok,
        params=p,
    )


def rates_from_aux(
    ch: Dmbc,
    aux: AuxCoding,
    rfb: float,
    margin: float,
    n: int,
    blocks: int = 4,
    epsilon: float = 0.35,
    seed: int = 0,
    memory_cap: int = 1 << 26,
    bin_slack: float = 0.05,
    cover_slack: float = 0.08,
) -> SchemeParams:
    """Derive interior scheme rates from a structure's MI values.

    The bin rate is set just above the compression-resolution requirement
    I(Yt;Y1|U,Y2) (clamped to the feedback budget), the compression codebook
    rate just above the covering requirement I(Yt;Y1|U), and the message
    rates to ``margin`` times their residual caps.  ``bin_slack`` and
    ``cover_slack`` (bits/use) are the finite-length headroom above the two
    asymptotic thresholds.  Raises when the structure's constraint polytope
    admits no valid assignment.
    """
    if not 0.0 < margin < 1.0:
        raise SchemeError("margin must lie strictly between 0 and 1")
    if rfb < 0:
        raise SchemeError("rfb must be nonnegative")
    cols = mi_terms(ch, aux)
    i_u_y1 = float(cols[0])
    i_u_y2 = float(cols[1])
    i_x_yty2_u = float(cols[2])
    i_yt_y1_uy2 = float(cols[3])
    j = aux.with_channel_y1(ch.ny1).joint(ch)
    i_yt_y1_u = cond_mutual_info(j, ("yt",), ("y1",), ("u",))
    if i_yt_y1_uy2 > rfb + 1e-12:
        raise SchemeInfeasibleError(
            f"compression resolution I(Yt;Y1|U,Y2)={i_yt_y1_uy2:.4f} exceeds rfb={rfb}"
        )
    r_tilde = min(i_yt_y1_uy2 + bin_slack, rfb)
    r1_cap = min(i_u_y1, i_u_y2 - r_tilde)
    if i_yt_y1_uy2 > 0 and r1_cap < 0:
        raise SchemeInfeasibleError(
            "no interior rate point: bin rate lower bound "
            f"I(Yt;Y1|U,Y2)={i_yt_y1_uy2:.4f} leaves no room under "
            f"I(U;Y2)={i_u_y2:.4f} (cap {r1_cap:.4f} < 0)"
        )
    r_hat = max(i_yt_y1_u + cover_slack, r_tilde)
    if i_yt_y1_uy2 == 0.0:
        r_tilde = 0.0
        r_hat = 0.0
    return SchemeParams(
        n=n,
        blocks=blocks,
        r1=margin * max(r1_cap, 0.0),
        r2=margin * i_x_yty2_u,
        r_tilde=r_tilde,
        r_hat=r_hat,
        rfb=rfb,
        epsilon=epsilon,
        seed=seed,
        memory_cap=memory_cap,
    )
