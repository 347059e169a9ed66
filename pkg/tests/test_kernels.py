"""Backend parity: the numba kernels and the numpy fallbacks must agree."""

import numpy as np
import pytest

from bcfb import _kernels
from bcfb.backend import USE_NUMBA
from bcfb.channels import make_bebc, make_bsbc
from bcfb.regions import sample_aux

needs_numba = pytest.mark.skipif(not USE_NUMBA, reason="numba backend disabled")


def packed_batch(ch, count, seed, nq=1):
    structures = sample_aux(ch, count, seed=seed, nq=nq)
    qp = np.stack([a.q_pmf for a in structures])
    uq = np.stack([a.u_given_q for a in structures])
    xuq = np.stack([a.x_given_uq for a in structures])
    ytk = np.stack([a.yt_given_uy1q for a in structures])
    return qp, uq, xuq, ytk


class TestMiTermsParity:
    @needs_numba
    @pytest.mark.parametrize("ch,nq", [(make_bsbc(0.2, 0.1), 1), (make_bsbc(0.3, 0.05), 2), (make_bebc(0.3, 0.1), 1)])
    def test_backends_agree(self, ch, nq):
        qp, uq, xuq, ytk = packed_batch(ch, 40, seed=0, nq=nq)
        a = _kernels.aux_mi_terms_nb(qp, uq, xuq, ch.law, ytk)
        b = _kernels.aux_mi_terms_np(qp, uq, xuq, ch.law, ytk)
        assert np.allclose(a, b, atol=1e-12)

    def test_nonnegative_outputs(self):
        ch = make_bsbc(0.2, 0.1)
        qp, uq, xuq, ytk = packed_batch(ch, 60, seed=1)
        out = _kernels.aux_mi_terms(qp, uq, xuq, ch.law, ytk)
        assert np.all(out >= 0.0)


class TestTypicalMatchesParity:
    @staticmethod
    def random_case(rng, m=64, n=40, nc=3, nctx=4):
        cb = rng.integers(0, nc, size=(m, n)).astype(np.int8)
        ctx = rng.integers(0, nctx, size=n).astype(np.int64)
        p = rng.dirichlet(np.ones(nc * nctx)).reshape(nc, nctx)
        return cb, ctx, p

    @needs_numba
    def test_backends_agree(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            cb, ctx, p = self.random_case(rng)
            eps = float(rng.uniform(0.1, 2.0))
            assert _kernels.typical_matches_nb(cb, ctx, p, eps) == _kernels.typical_matches_np(
                cb, ctx, p, eps
            )

    def test_exact_match_required_on_zero_cells(self):
        # target forbids symbol 1 in context 0; any codeword using it there fails
        cb = np.array([[0, 0, 1, 0], [0, 0, 0, 0]], dtype=np.int8)
        ctx = np.zeros(4, dtype=np.int64)
        p = np.array([[1.0], [0.0]])
        count, first = _kernels.typical_matches(cb, ctx, p, eps=10.0)
        assert (count, first) == (1, 1)

    def test_empty_codebook(self):
        cb = np.zeros((0, 4), dtype=np.int8)
        ctx = np.zeros(4, dtype=np.int64)
        p = np.array([[1.0], [0.0]])
        assert _kernels.typical_matches(cb, ctx, p, eps=0.5) == (0, -1)

    def test_first_index_is_lexicographic_minimum(self):
        cb = np.array([[1, 1], [0, 0], [0, 0]], dtype=np.int8)
        ctx = np.zeros(2, dtype=np.int64)
        p = np.array([[1.0], [0.0]])
        count, first = _kernels.typical_matches(cb, ctx, p, eps=0.1)
        assert (count, first) == (2, 1)
