"""Numeric kernels with numba and pure-numpy twins.

Two operations dominate runtime:

* ``aux_mi_terms`` -- for a batch of auxiliary coding structures, build the
  joint law over (q, u, x, y1, y2, yt) and return the seven conditional
  mutual-information terms that every rate-region evaluator consumes.
* ``typical_matches`` -- scan a codebook against a fixed context sequence and
  count the codewords whose joint empirical type passes the robust
  (letter-frequency) typicality test.

Both have a numba ``@njit`` implementation and a vectorised numpy fallback;
``bcfb.backend.USE_NUMBA`` picks one at import time.  The suffixed functions
(``*_nb`` / ``*_np``) stay importable so the benchmark and the tests can
compare the two paths directly.
"""

from __future__ import annotations

import numpy as np

from .backend import USE_NUMBA

# Axis order used throughout: q=0, u=1, x=2, y1=3, y2=4, yt=5.
# Subsets of axes whose marginal entropies feed the MI terms below.
_SUBSETS = (
    (0,),  # 0: Q
    (0, 1),  # 1: Q,U
    (0, 3),  # 2: Q,Y1
    (0, 4),  # 3: Q,Y2
    (0, 1, 3),  # 4: Q,U,Y1
    (0, 1, 4),  # 5: Q,U,Y2
    (0, 2),  # 6: Q,X
    (0, 1, 2),  # 7: Q,U,X
    (0, 2, 4),  # 8: Q,X,Y2
    (0, 1, 5),  # 9: Q,U,Yt
    (0, 1, 4, 5),  # 10: Q,U,Y2,Yt
    (0, 1, 3, 4),  # 11: Q,U,Y1,Y2
    (0, 1, 2, 4),  # 12: Q,U,X,Y2
    (0, 1, 3, 4, 5),  # 13: Q,U,Y1,Y2,Yt
    (0, 1, 2, 4, 5),  # 14: Q,U,X,Y2,Yt
)

# Each MI column is H[a] + H[b] - H[c] - H[d] over subset entropies:
#   0: I(U;Y1|Q)        1: I(U;Y2|Q)       2: I(X;Yt,Y2|U,Q)
#   3: I(Yt;Y1|U,Y2,Q)  4: I(X;Y2|Q)       5: I(X;Yt|U,Y2,Q)
#   6: I(X,Y2;Yt|U,Q)
_COMBOS = np.array(
    [
        (1, 2, 4, 0),
        (1, 3, 5, 0),
        (7, 10, 14, 1),
        (10, 11, 13, 5),
        (6, 3, 8, 0),
        (12, 10, 14, 5),
        (12, 9, 14, 1),
    ],
    dtype=np.int64,
)

N_MI_TERMS = 7
_NEG_CLAMP = 1e-9


def _mask_layout(dims):
    """Per-subset strides and marginal sizes for a 6-dim joint of ``dims``."""
    nmask = len(_SUBSETS)
    strides = np.zeros((nmask, 6), dtype=np.int64)
    sizes = np.zeros(nmask, dtype=np.int64)
    for k, subset in enumerate(_SUBSETS):
        size = 1
        for ax in reversed(subset):
            strides[k, ax] = size
            size *= dims[ax]
        sizes[k] = size
    return strides, sizes


def _aux_mi_terms_core(qp, uq, xuq, law, ytk, mstr, msz, combos, out):
    nbatch, nq = qp.shape
    nu = uq.shape[2]
    nx = xuq.shape[3]
    ny1 = law.shape[1]
    ny2 = law.shape[2]
    nyt = ytk.shape[4]
    nmask = msz.shape[0]
    maxsz = 0
    for k in range(nmask):
        if msz[k] > maxsz:
            maxsz = msz[k]
    scratch = np.empty(maxsz, dtype=np.float64)
    ent = np.empty(nmask, dtype=np.float64)
    inv_log2 = 1.0 / np.log(2.0)
    for b in range(nbatch):
        for k in range(nmask):
            sz = msz[k]
            for i in range(sz):
                scratch[i] = 0.0
            s0 = mstr[k, 0]
            s1 = mstr[k, 1]
            s2 = mstr[k, 2]
            s3 = mstr[k, 3]
            s4 = mstr[k, 4]
            s5 = mstr[k, 5]
            for iq in range(nq):
                pq = qp[b, iq]
                if pq <= 0.0:
                    continue
                mq = iq * s0
                for iu in range(nu):
                    pu = pq * uq[b, iq, iu]
                    if pu <= 0.0:
                        continue
                    mu = mq + iu * s1
                    for ix in range(nx):
                        px = pu * xuq[b, iq, iu, ix]
                        if px <= 0.0:
                            continue
                        mx = mu + ix * s2
                        for iy1 in range(ny1):
                            my1 = mx + iy1 * s3
                            for iy2 in range(ny2):
                                pch = px * law[ix, iy1, iy2]
                                if pch <= 0.0:
                                    continue
                                my2 = my1 + iy2 * s4
                                for iyt in range(nyt):
                                    p = pch * ytk[b, iq, iu, iy1, iyt]
                                    if p > 0.0:
                                        scratch[my2 + iyt * s5] += p
            h = 0.0
            for i in range(sz):
                v = scratch[i]
                if v > 0.0:
                    h -= v * np.log(v)
            ent[k] = h * inv_log2
        for j in range(combos.shape[0]):
            v = ent[combos[j, 0]] + ent[combos[j, 1]] - ent[combos[j, 2]] - ent[combos[j, 3]]
            if -_NEG_CLAMP < v < 0.0:
                v = 0.0
            out[b, j] = v
    return out


if USE_NUMBA:
    from numba import njit

    _aux_mi_terms_core_nb = njit(cache=True, fastmath=False)(_aux_mi_terms_core)
else:  # pragma: no cover - exercised via BCFB_NO_NUMBA runs
    _aux_mi_terms_core_nb = None


def _batch_entropy_bits(flat):
    """Entropy in bits per row of a (B, S) nonnegative array."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(flat > 0.0, flat * np.log2(np.where(flat > 0.0, flat, 1.0)), 0.0)
    return -terms.sum(axis=1)


def aux_mi_terms_np(qp, uq, xuq, law, ytk):
    """Pure-numpy twin of :func:`aux_mi_terms` (batched broadcasting)."""
    nbatch = qp.shape[0]
    joint = (
        qp[:, :, None, None, None, None, None]
        * uq[:, :, :, None, None, None, None]
        * xuq[:, :, :, :, None, None, None]
        * law[None, None, None, :, :, :, None]
        * ytk[:, :, :, None, :, None, :]
    )
    ents = np.empty((nbatch, len(_SUBSETS)), dtype=np.float64)
    for k, subset in enumerate(_SUBSETS):
        drop = tuple(1 + ax for ax in range(6) if ax not in subset)
        marg = joint.sum(axis=drop) if drop else joint
        ents[:, k] = _batch_entropy_bits(marg.reshape(nbatch, -1))
    out = np.empty((nbatch, N_MI_TERMS), dtype=np.float64)
    for j in range(_COMBOS.shape[0]):
        a, b, c, d = _COMBOS[j]
        out[:, j] = ents[:, a] + ents[:, b] - ents[:, c] - ents[:, d]
    np.copyto(out, 0.0, where=(out < 0.0) & (out > -_NEG_CLAMP))
    return out


def aux_mi_terms_nb(qp, uq, xuq, law, ytk):
    """Numba twin of :func:`aux_mi_terms`."""
    if _aux_mi_terms_core_nb is None:
        raise RuntimeError("numba backend unavailable")
    dims = (
        qp.shape[1],
        uq.shape[2],
        xuq.shape[3],
        law.shape[1],
        law.shape[2],
        ytk.shape[4],
    )
    mstr, msz = _mask_layout(dims)
    out = np.empty((qp.shape[0], N_MI_TERMS), dtype=np.float64)
    return _aux_mi_terms_core_nb(
        np.ascontiguousarray(qp, dtype=np.float64),
        np.ascontiguousarray(uq, dtype=np.float64),
        np.ascontiguousarray(xuq, dtype=np.float64),
        np.ascontiguousarray(law, dtype=np.float64),
        np.ascontiguousarray(ytk, dtype=np.float64),
        mstr,
        msz,
        _COMBOS,
        out,
    )


def aux_mi_terms(qp, uq, xuq, law, ytk):
    """Seven MI terms per structure for a batch of auxiliary codings.

    Parameters are dense float64 arrays: ``qp (B,nq)``, ``uq (B,nq,nu)``,
    ``xuq (B,nq,nu,nx)``, ``law (nx,ny1,ny2)``, ``ytk (B,nq,nu,ny1,nyt)``.
    Returns a (B, 7) array; column order is documented at ``_COMBOS``.
    """
    if USE_NUMBA:
        return aux_mi_terms_nb(qp, uq, xuq, law, ytk)
    return aux_mi_terms_np(qp, uq, xuq, law, ytk)


# ---------------------------------------------------------------------------
# Robust typicality codebook scan.


def _typical_matches_core(cb, ctx, target, n_inv, eps):
    nseq = cb.shape[0]
    n = cb.shape[1]
    ncells = target.shape[0]
    nctx = target.shape[1]
    counts = np.empty(ncells * nctx, dtype=np.int64)
    flat = target.reshape(ncells * nctx)
    count = 0
    first = -1
    for m in range(nseq):
        for i in range(ncells * nctx):
            counts[i] = 0
        for t in range(n):
            counts[int(cb[m, t]) * nctx + int(ctx[t])] += 1
        ok = True
        for i in range(ncells * nctx):
            p = flat[i]
            if abs(counts[i] * n_inv - p) > eps * p + 1e-12:
                ok = False
                break
        if ok:
            count += 1
            if first < 0:
                first = m
    return count, first


if USE_NUMBA:
    _typical_matches_core_nb = njit(cache=True)(_typical_matches_core)
else:  # pragma: no cover
    _typical_matches_core_nb = None


def typical_matches_np(cb, ctx, target, eps):
    """Pure-numpy twin of :func:`typical_matches`."""
    nseq, n = cb.shape
    ncells, nctx = target.shape
    cells = ncells * nctx
    flat = cb.astype(np.int64) * nctx + ctx[None, :].astype(np.int64)
    offsets = np.arange(nseq, dtype=np.int64)[:, None] * cells
    counts = np.bincount((flat + offsets).ravel(), minlength=nseq * cells)
    counts = counts.reshape(nseq, cells)
    p = target.reshape(-1)[None, :]
    ok = (np.abs(counts / n - p) <= eps * p + 1e-12).all(axis=1)
    count = int(ok.sum())
    first = int(np.argmax(ok)) if count else -1
    return count, first


def typical_matches_nb(cb, ctx, target, eps):
    """Numba twin of :func:`typical_matches`."""
    if _typical_matches_core_nb is None:
        raise RuntimeError("numba backend unavailable")
    return _typical_matches_core_nb(
        np.ascontiguousarray(cb),
        np.ascontiguousarray(ctx, dtype=np.int64),
        np.ascontiguousarray(target, dtype=np.float64),
        1.0 / cb.shape[1],
        float(eps),
    )


def typical_matches(cb, ctx, target, eps):
    """Count codewords jointly typical with a context sequence.

    ``cb`` is an (M, n) integer codebook, ``ctx`` an (n,) integer context
    index sequence, ``target`` the (codebook-symbol, context-index) joint pmf
    the empirical type is tested against.  A codeword passes when every cell
    satisfies |count/n - p| <= eps*p (so zero-probability cells must be
    empty).  Returns ``(count, first_index)`` with ``first_index = -1`` when
    nothing matches.
    """
    if cb.shape[0] == 0:
        return 0, -1
    if USE_NUMBA:
        return typical_matches_nb(cb, ctx, target, eps)
    return typical_matches_np(cb, ctx, target, eps)
