import numpy as np
import pytest

from fdrsplit.mixture import MixtureFit, fit_uniform_beta, tail_adjust
from fdrsplit.power import combine_rejections
from fdrsplit.resampler import (
    RunConfig,
    _fit_and_adjust,
    detection_frequencies,
    run_pipeline,
    split_subjects,
)
from fdrsplit.screening import ScreenMode, ScreenTool, screen_split
from fdrsplit.simgen import SimSpec, generate
from fdrsplit.stats import Dataset, t_lta_batch


def _dataset(nc, nt, n_features=60, seed=0, kind="continuous"):
    rng = np.random.default_rng(seed)
    mat = rng.normal(6.0, 2.0, size=(n_features, nc + nt))
    if kind == "counts":
        mat = rng.poisson(50.0, size=(n_features, nc + nt)).astype(np.float64)
    return Dataset(
        matrix=mat,
        group=np.array(["control"] * nc + ["treatment"] * nt),
        feature_ids=np.array([f"g{i}" for i in range(n_features)]),
        kind=kind,
    )


class TestSplitSubjects:
    def test_even_groups_split_in_half(self):
        ds = _dataset(52, 50)
        plan = split_subjects(ds, seed=7, split_index=3)
        mod = np.asarray(plan.modeling_subjects)
        scr = np.asarray(plan.screening_subjects)
        assert np.sum(ds.control_mask[mod]) == 26
        assert np.sum(ds.treatment_mask[mod]) == 25
        assert np.sum(ds.control_mask[scr]) == 26
        assert np.sum(ds.treatment_mask[scr]) == 25
        assert plan.split_index == 3 and plan.seed == 7

    def test_partition_is_disjoint_and_complete(self):
        ds = _dataset(11, 9)
        plan = split_subjects(ds, seed=1)
        both = set(plan.modeling_subjects) | set(plan.screening_subjects)
        assert both == set(range(20))
        assert not set(plan.modeling_subjects) & set(plan.screening_subjects)

    def test_odd_groups_give_modeling_the_extra_subject(self):
        ds = _dataset(11, 9)
        plan = split_subjects(ds, seed=1)
        mod = np.asarray(plan.modeling_subjects)
        assert np.sum(ds.control_mask[mod]) == 6
        assert np.sum(ds.treatment_mask[mod]) == 5

    def test_deterministic_in_seed(self):
        ds = _dataset(10, 10)
        assert split_subjects(ds, seed=5) == split_subjects(ds, seed=5)
        assert split_subjects(ds, seed=5) != split_subjects(ds, seed=6)

    def test_small_group_rejected(self):
        ds = _dataset(4, 3)
        with pytest.raises(ValueError, match="four subjects"):
            split_subjects(ds, seed=0)


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.n_splits == 100 and cfg.q == 0.1 and cfg.q_star == 0.05
        assert cfg.tool is ScreenTool.TAIL_FDR
        assert cfg.mode is ScreenMode.LTA_TWO_SIDED

    @pytest.mark.parametrize("kwargs", [
        {"n_splits": 0},
        {"q": 0.0},
        {"q": 1.0},
        {"q_star": -0.1},
        {"stat": "wilcoxon"},
        {"min_freq": -1},
        {"seed": -3},
        {"tool": "tailfdr"},
        {"mode": "lta-two"},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            RunConfig(**kwargs)


@pytest.fixture(scope="module")
def table3_run():
    ds, truth = generate(SimSpec(design="table3_continuous", n_features=250, seed=3))
    cfg = RunConfig(n_splits=8, q=0.1, seed=17)
    return ds, truth, cfg, run_pipeline(ds, cfg, threads=1)


class TestRunPipeline:
    def test_counts_and_shapes(self, table3_run):
        ds, _, cfg, rr = table3_run
        assert rr.n_splits == 8 == len(rr.per_split) == rr.freq_table.n_splits
        assert len(rr.freq_table.rows) == ds.n_features
        assert rr.config == cfg

    def test_signals_detected_most_often(self, table3_run):
        _, truth, _, rr = table3_run
        top10 = {r.feature_id for r in rr.freq_table.rows[:10]}
        signal_ids = {f"f{i + 1:04d}" for i in range(250) if truth[i]}
        assert top10 <= signal_ids

    def test_rows_sorted_by_freq_then_id(self, table3_run):
        _, _, _, rr = table3_run
        keys = [(-r.freq, r.feature_id) for r in rr.freq_table.rows]
        assert keys == sorted(keys)

    def test_rfreq_is_exact_ratio(self, table3_run):
        _, _, _, rr = table3_run
        for r in rr.freq_table.rows:
            assert r.rfreq == r.freq / 8
            assert 0 <= r.freq <= 8

    def test_median_stat_only_for_detected(self, table3_run):
        _, _, _, rr = table3_run
        for r in rr.freq_table.rows:
            assert (r.median_stat is None) == (r.freq == 0)
            if r.freq > 0:
                assert 0.0 <= r.median_stat < 0.1

    def test_x_summaries_cover_all_splits(self, table3_run):
        # every split yields an x here, so the summaries are over all 8
        _, _, _, rr = table3_run
        for r in rr.freq_table.rows:
            assert 0.0 <= r.median_x <= 1.0
            assert 0.0 <= r.mean_x <= 1.0
            assert r.sd_x >= 0.0

    def test_split_seeds_all_differ(self, table3_run):
        _, _, _, rr = table3_run
        seeds = [rec.plan.seed for rec in rr.per_split]
        assert len(set(seeds)) == len(seeds)
        assert [rec.plan.split_index for rec in rr.per_split] == list(range(8))

    def test_split_reproducible_from_its_record(self, table3_run):
        # one split recomputed by hand must agree exactly with the record
        ds, _, cfg, rr = table3_run
        rec = rr.per_split[3]
        plan = split_subjects(ds, rec.plan.seed, 3)
        assert plan == rec.plan
        x_mod, ok = t_lta_batch(ds, plan.modeling_subjects)
        adj = tail_adjust(fit_uniform_beta(x_mod[ok]))
        assert adj == rec.adjusted
        det = screen_split(rec.screening_x, adj, cfg.q, cfg.tool, cfg.mode)
        assert det == rec.detections

    def test_concurrent_counts_match_brute_force(self, table3_run):
        _, _, _, rr = table3_run
        expected = {}
        for rec in rr.per_split:
            ids = sorted(rec.detections.detected_ids)
            for i, a in enumerate(ids):
                for b in ids[i + 1:]:
                    expected[(a, b)] = expected.get((a, b), 0) + 1
        assert rr.concurrent == expected
        for (a, b), n in rr.concurrent.items():
            assert a < b
            assert 1 <= n <= 8

    def test_combined_region_matches_boundaries(self, table3_run):
        _, _, _, rr = table3_run
        regions = [rec.detections.boundaries for rec in rr.per_split]
        assert rr.combined_region == combine_rejections(regions)

    def test_whole_fit_uses_all_subjects(self, table3_run):
        ds, _, _, rr = table3_run
        x, ok = t_lta_batch(ds, None)
        assert rr.whole_fit == tail_adjust(fit_uniform_beta(x[ok]))
        assert rr.whole_failure is None

    def test_bitwise_deterministic(self, table3_run):
        ds, _, cfg, rr = table3_run
        assert run_pipeline(ds, cfg, threads=1) == rr

    def test_thread_count_does_not_change_result(self, table3_run):
        ds, _, cfg, rr = table3_run
        assert run_pipeline(ds, cfg, threads=4) == rr

    def test_nb_stat_requires_counts(self):
        ds = _dataset(6, 6)
        with pytest.raises(ValueError, match="counts"):
            run_pipeline(ds, RunConfig(n_splits=1, stat="nb_lr"), threads=1)

    def test_nb_stat_runs_on_counts(self):
        ds, _ = generate(SimSpec(
            design="nb_counts", n_control=10, n_treatment=10,
            n_features=120, signal_count=10, seed=2,
        ))
        cfg = RunConfig(n_splits=2, stat="nb_lr", mode=ScreenMode.PVALUE_LEFT, seed=4)
        rr = run_pipeline(ds, cfg, threads=1)
        assert rr.n_splits == 2
        assert all(rec.screening_x for rec in rr.per_split)

    def test_master_seed_changes_plans(self):
        ds = _dataset(10, 10, n_features=80, seed=5)
        a = run_pipeline(ds, RunConfig(n_splits=2, seed=0), threads=1)
        b = run_pipeline(ds, RunConfig(n_splits=2, seed=1), threads=1)
        assert a.per_split[0].plan != b.per_split[0].plan


class TestFailureHandling:
    def test_fit_exception_marks_split_and_keeps_slot(self, monkeypatch, table3_run):
        ds, _, _, _ = table3_run
        calls = {"n": 0}
        real = fit_uniform_beta

        def flaky(values, **kw):
            calls["n"] += 1
            if calls["n"] == 1:
                raise ValueError("boom")
            return real(values, **kw)

        monkeypatch.setattr("fdrsplit.resampler.fit_uniform_beta", flaky)
        rr = run_pipeline(ds, RunConfig(n_splits=3, seed=17), threads=1)
        assert rr.n_splits == 3 and len(rr.per_split) == 3
        first = rr.per_split[0]
        assert first.failure == "fit failed: boom"
        assert first.detections is None and first.fit is None
        assert first.screening_x  # x values survive a fit failure
        for rec in rr.per_split[1:]:
            assert rec.failure is None

    def test_all_failed_gives_empty_region_and_zero_freq(self, monkeypatch):
        ds = _dataset(10, 10, n_features=80, seed=6)

        def boom(values, **kw):
            raise ValueError("no fit today")

        monkeypatch.setattr("fdrsplit.resampler.fit_uniform_beta", boom)
        rr = run_pipeline(ds, RunConfig(n_splits=2, seed=9), threads=1)
        assert all(r.freq == 0 and r.rfreq == 0.0 for r in rr.freq_table.rows)
        assert all(r.median_x is not None for r in rr.freq_table.rows)
        assert rr.combined_region.intervals == ()
        assert rr.concurrent == {}
        assert rr.whole_fit is None
        assert rr.whole_failure.startswith("fit failed")

    def test_nonconvergence_reason(self):
        fit = MixtureFit(0.9, 0.1, 2.0, 5.0, loglik=0.0, iterations=7, converged=False)
        got_fit, adjusted, failure = _fit_and_adjust_stub(fit)
        assert got_fit is fit and adjusted is None
        assert failure == "fit failed: EM did not converge"

    def test_flat_beta_reason(self):
        fit = MixtureFit(0.9, 0.1, 1.0, 1.0, loglik=0.0, iterations=7, converged=True)
        got_fit, adjusted, failure = _fit_and_adjust_stub(fit)
        assert adjusted is not None and adjusted.p1_hat == 0.0
        assert failure == "fit degenerate: no density excess above 1"


def _fit_and_adjust_stub(fit):
    """Run _fit_and_adjust with the EM replaced by a canned fit."""
    import fdrsplit.resampler as mod
    real = mod.fit_uniform_beta
    mod.fit_uniform_beta = lambda values, **kw: fit
    try:
        return _fit_and_adjust(np.full(60, 0.5))
    finally:
        mod.fit_uniform_beta = real


class TestDetectionFrequencies:
    def test_filters_by_min_freq(self, table3_run):
        _, _, _, rr = table3_run
        full = detection_frequencies(rr, 0)
        assert len(full.rows) == len(rr.freq_table.rows)
        some = detection_frequencies(rr, 5)
        assert all(r.freq >= 5 for r in some.rows)
        assert len(some.rows) < len(full.rows)
        assert some.n_splits == 8

    def test_negative_min_freq_rejected(self, table3_run):
        _, _, _, rr = table3_run
        with pytest.raises(ValueError):
            detection_frequencies(rr, -1)
