import numpy as np
import pytest

from bcfb.channels import cascade_channel, enhance, make_bebc, make_bsbc
from bcfb.prob import binary_entropy, star
from bcfb.regions import (
    AuxCoding,
    I_U_Y1_Q,
    I_U_Y2_Q,
    I_X_YTY2_UQ,
    I_YT_Y1_UY2Q,
    RatePoint,
    RateRegion,
    RegionError,
    UxStructure,
    backward_decoding_region,
    bsbc_family_nofb_frontier,
    bsbc_family_region,
    enhanced_region,
    find_dominating_enhanced,
    frontier,
    improve_boundary_point,
    includes,
    mi_terms,
    mi_terms_batch,
    no_feedback_region,
    sample_aux,
    sample_ux,
    sliding_window_region,
    sliding_window_region_capped,
    ux_rates,
)

CH = make_bsbc(0.2, 0.1)


class TestFrontier:
    def test_dominated_point_dropped(self):
        r = RateRegion([(1.0, 1.0), (0.5, 0.5)])
        assert frontier(r) == [RatePoint(1.0, 1.0)]

    def test_incomparable_points_kept(self):
        r = RateRegion([(1.0, 0.0), (0.0, 1.0)])
        assert len(frontier(r)) == 2

    def test_singleton(self):
        r = RateRegion([(0.3, 0.4)])
        assert frontier(r) == [RatePoint(0.3, 0.4)]

    def test_sorted_and_strictly_decreasing(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(0, 1, size=(200, 2))
        f = RateRegion(pts).frontier()
        assert np.all(np.diff(f[:, 0]) > 0)
        assert np.all(np.diff(f[:, 1]) < 0)

    def test_every_point_dominated_by_frontier(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(0, 1, size=(300, 2))
        region = RateRegion(pts)
        f = region.frontier()
        for p in pts:
            assert np.any((f[:, 0] >= p[0] - 1e-12) & (f[:, 1] >= p[1] - 1e-12))

    def test_empty_region_frontier_raises(self):
        with pytest.raises(RegionError):
            RateRegion(np.zeros((0, 2))).frontier()


class TestIncludes:
    def test_reflexive(self):
        r = RateRegion([(0.2, 0.5), (0.4, 0.1)])
        assert includes(r, r, 0.0)

    def test_enhancement_adds_information(self):
        structures = sample_ux(CH, 60, seed=5)
        nofb = no_feedback_region(CH, structures)
        enh = enhanced_region(CH, structures)
        assert includes(enh, nofb, 1e-9)

    def test_chord_interpolation(self):
        outer = RateRegion([(0.0, 1.0), (1.0, 0.0)])
        inner = RateRegion([(0.5, 0.49)])
        assert includes(outer, inner, 1e-9)
        assert not includes(outer, RateRegion([(0.5, 0.52)]), 1e-9)


class TestAuxCoding:
    def test_row_normalization_enforced(self):
        with pytest.raises(RegionError):
            AuxCoding(np.ones(1), np.array([[0.6, 0.6]]), np.full((1, 2, 2), 0.5), np.ones((1, 2, 2, 1)))

    def test_joint_is_valid(self):
        aux = AuxCoding.xor_family(0.15, 0.05)
        j = aux.joint(CH)
        assert float(j.table.sum()) == pytest.approx(1.0, abs=1e-12)

    def test_kernel_matches_reference_route(self):
        rng = np.random.default_rng(2)
        structures = sample_aux(CH, 30, seed=3) + sample_aux(CH, 10, seed=4, nq=2)
        batch = mi_terms_batch(CH, structures)
        for i in rng.choice(len(structures), size=10, replace=False):
            ref = mi_terms(CH, structures[i])
            assert np.allclose(batch[i], ref, atol=1e-11)


class TestNoFeedbackRegion:
    def test_family_endpoints(self):
        fam = bsbc_family_nofb_frontier(0.2, 0.1, np.linspace(0, 0.5, 401))
        f = fam.frontier()
        # alpha=0 gives the private-message endpoint, alpha=1/2 the public one
        assert f[-1, 0] == pytest.approx(1 - binary_entropy(0.2), abs=1e-12)
        assert f[0, 1] == pytest.approx(1 - binary_entropy(0.1), abs=2e-3)

    def test_origin_always_present(self):
        region = no_feedback_region(CH, sample_ux(CH, 5, seed=0))
        assert np.any(np.all(region.points == 0.0, axis=1))

    def test_enhanced_endpoint_value(self):
        # With uniform input, receiver 2 seeing both outputs gets
        # 1 + H(p1*p2) - H(p1) - H(p2) bits about X.
        expect = (
            1.0
            + binary_entropy(star(0.2, 0.1))
            - binary_entropy(0.2)
            - binary_entropy(0.1)
        )
        aux = AuxCoding.from_ux(np.array([1.0]), np.array([[0.5, 0.5]]))
        region = enhanced_region(CH, [aux])
        assert region.points[0, 1] == pytest.approx(expect, abs=1e-12)

    def test_degraded_cascade_enhancement_is_vacuous(self):
        rng = np.random.default_rng(6)
        k1 = rng.dirichlet(np.ones(2), size=2)
        k2 = rng.dirichlet(np.ones(2), size=2)
        ch = cascade_channel(k1, k2)
        structures = sample_ux(ch, 150, seed=7)
        nofb = no_feedback_region(ch, structures)
        enh = enhanced_region(ch, structures)
        assert includes(nofb, enh, 2e-3)
        assert includes(enh, nofb, 1e-9)


class TestFeedbackRegions:
    def test_zero_feedback_collapses_to_no_feedback(self):
        structures = sample_aux(CH, 80, seed=8, nyt=1)
        sw = sliding_window_region(CH, 0.0, structures)
        nofb = no_feedback_region(CH, structures)
        assert includes(sw, nofb, 1e-9) and includes(nofb, sw, 1e-9)

    def test_constant_compression_matches_no_feedback_pointwise(self):
        structures = sample_aux(CH, 60, seed=9, nyt=1) + sample_aux(CH, 40, seed=10, nq=2, nyt=1)
        cols = mi_terms_batch(CH, structures)
        sw = sliding_window_region(CH, 5.0, structures)
        bd = backward_decoding_region(CH, 5.0, structures)
        expect = np.stack([cols[:, I_U_Y1_Q], cols[:, I_X_YTY2_UQ]], axis=1)
        got = np.sort(sw.points[:-1], axis=0)
        assert np.allclose(got, np.sort(expect, axis=0), atol=1e-9)
        bd_unique = np.unique(np.round(bd.points[:-1], 11), axis=0)
        ex_unique = np.unique(np.round(expect, 11), axis=0)
        assert np.allclose(bd_unique, ex_unique, atol=1e-9)

    def test_sliding_window_point_feasible_for_backward_decoding(self):
        structures = sample_aux(CH, 200, seed=11)
        cols = mi_terms_batch(CH, structures)
        r1 = np.minimum(cols[:, I_U_Y1_Q], cols[:, I_U_Y2_Q] - cols[:, I_YT_Y1_UY2Q])
        ok = r1 >= 0
        a_cap = np.minimum(
            cols[:, I_U_Y1_Q], cols[:, 4] + cols[:, 5] - cols[:, I_YT_Y1_UY2Q]
        )
        d_cap = cols[:, 4] + cols[:, 6] + cols[:, 5] - cols[:, I_YT_Y1_UY2Q]
        r2 = cols[:, I_X_YTY2_UQ]
        assert np.all(r1[ok] <= a_cap[ok] + 1e-9)
        assert np.all(r1[ok] + r2[ok] <= d_cap[ok] + 1e-9)

    def test_monotone_in_feedback_rate(self):
        structures = sample_aux(CH, 150, seed=12) + sample_aux(CH, 30, seed=13, nyt=1)
        rfbs = [0.0, 0.1, 0.5, 2.0]
        regions = [sliding_window_region(CH, r, structures) for r in rfbs]
        for lo, hi in zip(regions, regions[1:]):
            assert includes(hi, lo, 1e-9)

    def test_sandwich_under_enhanced_region(self):
        structures = sample_aux(CH, 150, seed=14)
        sw = sliding_window_region(CH, 0.85, structures)
        enh_structures = sample_ux(CH, 400, seed=15) + [
            AuxCoding.xor_family(a, 0.5) for a in np.linspace(0, 0.5, 101)
        ]
        enh = enhanced_region(CH, enh_structures)
        assert includes(enh, sw, 2e-3)

    def test_capped_variant_is_subset(self):
        structures = sample_aux(CH, 150, seed=16)
        capped = sliding_window_region_capped(CH, 0.85, structures)
        sw = sliding_window_region(CH, 0.85, structures)
        assert includes(sw, capped, 1e-9)

    def test_searched_region_strictly_beats_no_feedback(self):
        # at a generous budget, some searched structure strictly dominates
        # the no-feedback frontier at an interior point
        alphas = np.linspace(0.0, 0.5, 81)
        betas = np.linspace(0.0, 0.5, 81)
        pool = [AuxCoding.xor_family(a, b) for a in alphas for b in betas]
        sw = sliding_window_region(CH, 0.85, pool)
        nofb = bsbc_family_nofb_frontier(0.2, 0.1, alphas)
        fn = nofb.frontier()
        fs = sw.frontier()
        cap = np.interp(fn[:, 0], fs[:, 0], fs[:, 1])
        interior = (fn[:, 0] > 0.01) & (fn[:, 1] > 0.01)
        assert includes(sw, nofb, 1e-9)
        assert np.max((cap - fn[:, 1])[interior]) > 5e-3


class TestClosedFormFamily:
    def test_parameter_ordering_enforced(self):
        with pytest.raises(RegionError):
            bsbc_family_region(0.1, 0.2, 0.85)

    def test_closed_form_matches_structure_route(self):
        # the scalar formulas and the tensor-entropy route agree
        rng = np.random.default_rng(17)
        alphas = rng.uniform(0, 0.5, 12)
        betas = rng.uniform(0, 0.5, 12)
        region = bsbc_family_region(0.2, 0.1, rfb=10.0, alphas=alphas, betas=betas)
        for (r1, r2), (a, b) in zip(region.points, region.payloads):
            cols = mi_terms(CH, AuxCoding.xor_family(a, b))
            want_r1 = min(cols[I_U_Y1_Q], cols[I_U_Y2_Q] - cols[I_YT_Y1_UY2Q])
            if want_r1 < 0:
                continue
            assert r1 == pytest.approx(want_r1, abs=1e-6)
            assert r2 == pytest.approx(cols[I_X_YTY2_UQ], abs=1e-6)

    def test_pure_noise_compression_reduces_to_no_feedback(self):
        # beta = 1/2 makes the compression useless and the feedback budget 0
        alphas = np.linspace(0.0, 0.5, 41)
        region = bsbc_family_region(0.2, 0.1, rfb=0.0, alphas=alphas, betas=[0.5])
        fam = bsbc_family_nofb_frontier(0.2, 0.1, alphas)
        assert includes(region, fam, 1e-9) and includes(fam, region, 1e-9)

    def test_mass_conservation_of_mixture_cells(self):
        rng = np.random.default_rng(18)
        for _ in range(20):
            a, b = rng.uniform(0, 0.5, 2)
            pb = star(0.2, b)
            cells = [
                pb * 0.1 * a + (1 - pb) * 0.9 * (1 - a),
                pb * 0.9 * a + (1 - pb) * 0.1 * (1 - a),
                pb * 0.9 * (1 - a) + (1 - pb) * 0.1 * a,
                pb * 0.1 * (1 - a) + (1 - pb) * 0.9 * a,
            ]
            assert sum(cells) == pytest.approx(1.0, abs=1e-12)

    def test_fig_style_dominance(self):
        alphas = np.linspace(0, 0.5, 161)
        betas = np.linspace(0, 0.5, 161)
        fb = bsbc_family_region(0.2, 0.1, 0.85, alphas, betas)
        nofb = bsbc_family_nofb_frontier(0.2, 0.1, alphas)
        assert includes(fb, nofb, 1e-9)


class TestImprovement:
    def test_bsbc_construction(self):
        base = UxStructure.xor(0.15)
        r1b, r2b, *_ = ux_rates(CH, base)
        cands = [UxStructure.xor(a) for a in np.linspace(0.005, 0.149, 40)]
        enh = find_dominating_enhanced(CH, r1b, r2b, cands)
        assert enh is not None
        res = improve_boundary_point(CH, base, enh, rfb=0.05)
        assert res.feasible
        assert res.improved.r1 > res.base.r1 + 1e-6
        assert res.improved.r2 > res.base.r2 + 1e-6
        assert res.gamma <= 0.05 / res.h2
        assert res.feasibility_slack >= -1e-12

    def test_mixture_compression_rate_identity(self):
        base = UxStructure.xor(0.2)
        r1b, r2b, *_ = ux_rates(CH, base)
        cands = [UxStructure.xor(a) for a in np.linspace(0.01, 0.19, 30)]
        enh = find_dominating_enhanced(CH, r1b, r2b, cands)
        res = improve_boundary_point(CH, base, enh, rfb=0.1)
        cols = mi_terms(CH, res.aux)
        assert cols[I_YT_Y1_UY2Q] == pytest.approx(res.gamma * res.h2, abs=1e-9)

    def test_not_strictly_less_noisy_rejected(self):
        sym = make_bsbc(0.2, 0.2)
        base = UxStructure.xor(0.15)
        with pytest.raises(RegionError):
            improve_boundary_point(sym, base, UxStructure.xor(0.1), rfb=0.1)

    def test_non_dominating_enhanced_rejected(self):
        base = UxStructure.xor(0.15)
        with pytest.raises(RegionError):
            improve_boundary_point(CH, base, UxStructure.xor(0.25), rfb=0.1)

    def test_bebc_construction(self):
        ch = make_bebc(0.3, 0.1)
        base = UxStructure.xor(0.25)
        r1b, r2b, *_ = ux_rates(ch, base)
        cands = [UxStructure.xor(a) for a in np.linspace(0.01, 0.24, 30)]
        enh = find_dominating_enhanced(ch, r1b, r2b, cands)
        res = improve_boundary_point(ch, base, enh, rfb=0.05)
        assert res.feasible
