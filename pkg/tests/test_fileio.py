import numpy as np
import pytest

from fdrsplit.fileio import (
    InputError,
    load_dataset,
    load_run_json,
    read_run_json,
    read_truth_csv,
    run_to_json,
    write_data_csv,
    write_discoveries_csv,
    write_freq_csv,
    write_groups_csv,
    write_power_csv,
    write_run_json,
    write_truth_csv,
)
from fdrsplit.power import FrequencyThreshold, power_curves
from fdrsplit.resampler import RunConfig, run_pipeline
from fdrsplit.simgen import SimSpec, generate
from fdrsplit.stats import Dataset


def _toy_dataset():
    rng = np.random.default_rng(0)
    return Dataset(
        matrix=rng.normal(6.0, 2.0, size=(8, 10)),
        group=np.array(["control"] * 5 + ["treatment"] * 5),
        feature_ids=np.array([f"f{i}" for i in range(8)]),
        kind="continuous",
    )


class TestDatasetCsv:
    def test_round_trip_is_exact(self, tmp_path):
        ds = _toy_dataset()
        data, groups = tmp_path / "data.csv", tmp_path / "groups.csv"
        write_data_csv(data, ds)
        write_groups_csv(groups, ds)
        back = load_dataset(data, groups)
        assert np.array_equal(back.matrix, ds.matrix)
        assert list(back.group) == list(ds.group)
        assert list(back.feature_ids) == list(ds.feature_ids)

    def test_rewrite_is_byte_identical(self, tmp_path):
        ds = _toy_dataset()
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_data_csv(a, ds)
        write_data_csv(b, ds)
        assert a.read_bytes() == b.read_bytes()

    def test_groups_in_any_order(self, tmp_path):
        ds = _toy_dataset()
        data = tmp_path / "data.csv"
        write_data_csv(data, ds)
        groups = tmp_path / "groups.csv"
        ids = [f"s{i + 1:04d}" for i in range(10)]
        lines = ["subject_id,group"] + [
            f"{sid},{lab}" for sid, lab in reversed(list(zip(ids, ds.group)))
        ]
        groups.write_text("\n".join(lines) + "\n")
        back = load_dataset(data, groups)
        assert list(back.group) == list(ds.group)

    def test_counts_kind_flows_through(self, tmp_path):
        rng = np.random.default_rng(1)
        ds = Dataset(
            matrix=rng.poisson(9.0, size=(6, 8)).astype(np.float64),
            group=np.array(["control"] * 4 + ["treatment"] * 4),
            feature_ids=np.array([f"g{i}" for i in range(6)]),
            kind="counts",
        )
        data, groups = tmp_path / "d.csv", tmp_path / "g.csv"
        write_data_csv(data, ds)
        write_groups_csv(groups, ds)
        assert load_dataset(data, groups, kind="counts").kind == "counts"

    def test_non_numeric_cell_diagnosed(self, tmp_path):
        data = tmp_path / "data.csv"
        data.write_text("feature_id,s1,s2,s3,s4\nf1,1.0,oops,3.0,4.0\n")
        groups = tmp_path / "groups.csv"
        groups.write_text("subject_id,group\ns1,control\ns2,control\ns3,treatment\ns4,treatment\n")
        with pytest.raises(InputError, match=r"row 2 column 3.*oops"):
            load_dataset(data, groups)

    def test_ragged_row_diagnosed(self, tmp_path):
        data = tmp_path / "data.csv"
        data.write_text("feature_id,s1,s2\nf1,1.0\n")
        groups = tmp_path / "groups.csv"
        groups.write_text("subject_id,group\ns1,control\ns2,treatment\n")
        with pytest.raises(InputError, match="row 2: expected 3 columns"):
            load_dataset(data, groups)

    def test_missing_group_diagnosed(self, tmp_path):
        ds = _toy_dataset()
        data = tmp_path / "data.csv"
        write_data_csv(data, ds)
        groups = tmp_path / "groups.csv"
        groups.write_text("subject_id,group\ns0001,control\n")
        with pytest.raises(InputError, match="no group for subject"):
            load_dataset(data, groups)

    def test_bad_id_rejected_on_write(self, tmp_path):
        ds = _toy_dataset()
        with pytest.raises(InputError, match="characters outside"):
            write_data_csv(tmp_path / "x.csv", ds, subject_ids=["s 1"] + [f"s{i}" for i in range(9)])

    def test_empty_file_diagnosed(self, tmp_path):
        (tmp_path / "data.csv").write_text("")
        with pytest.raises(InputError, match="empty file"):
            load_dataset(tmp_path / "data.csv", tmp_path / "missing.csv")


class TestTruthCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "truth.csv"
        write_truth_csv(path, ["a", "b", "c"], [True, False, True])
        assert read_truth_csv(path) == {"a": True, "b": False, "c": True}
        assert path.read_text().splitlines()[0] == "feature_id,is_signal"


@pytest.fixture(scope="module")
def small_run():
    ds, _ = generate(SimSpec(design="table3_continuous", n_features=200, seed=5))
    return run_pipeline(ds, RunConfig(n_splits=5, seed=8), threads=1)


class TestRunJson:
    def test_round_trip_equals_original(self, small_run):
        assert load_run_json(run_to_json(small_run)) == small_run

    def test_serialization_is_stable(self, small_run):
        assert run_to_json(small_run) == run_to_json(small_run)

    def test_file_round_trip(self, small_run, tmp_path):
        path = tmp_path / "run.json"
        write_run_json(path, small_run)
        assert read_run_json(path) == small_run

    def test_loaded_run_supports_power_curves(self, small_run, tmp_path):
        path = tmp_path / "run.json"
        write_run_json(path, small_run)
        back = read_run_json(path)
        assert power_curves(back, [0.05, 0.2]) == power_curves(small_run, [0.05, 0.2])

    def test_failed_split_round_trips(self, small_run, monkeypatch):
        import fdrsplit.resampler as rmod
        calls = {"n": 0}
        real = rmod.fit_uniform_beta

        def flaky(values, **kw):
            calls["n"] += 1
            if calls["n"] == 1:
                raise ValueError("boom")
            return real(values, **kw)

        ds, _ = generate(SimSpec(design="table3_continuous", n_features=200, seed=5))
        monkeypatch.setattr(rmod, "fit_uniform_beta", flaky)
        rr = run_pipeline(ds, RunConfig(n_splits=2, seed=8), threads=1)
        back = load_run_json(run_to_json(rr))
        assert back == rr
        assert back.per_split[0].failure == "fit failed: boom"

    def test_schema_version_checked(self, small_run):
        text = run_to_json(small_run).replace('"schema_version": 1', '"schema_version": 99')
        with pytest.raises(InputError, match="schema_version"):
            load_run_json(text)

    def test_missing_field_diagnosed(self):
        with pytest.raises(InputError, match="missing or malformed"):
            load_run_json('{"schema_version": 1}')

    def test_not_json_diagnosed(self):
        with pytest.raises(InputError, match="not JSON"):
            load_run_json("]{")


class TestTableCsv:
    def test_freq_csv_columns(self, small_run, tmp_path):
        path = tmp_path / "freq.csv"
        write_freq_csv(path, small_run.freq_table)
        lines = path.read_text().splitlines()
        assert lines[0] == "id,freq,rfreq,med_stat,med_x,mean_x,sd_x"
        assert len(lines) == 1 + len(small_run.freq_table.rows)
        # never-detected features leave med_stat empty
        assert any(line.split(",")[3] == "" for line in lines[1:])

    def test_freq_csv_with_bh_column(self, small_run, tmp_path):
        path = tmp_path / "freq.csv"
        fdr = {r.feature_id: 0.5 for r in small_run.freq_table.rows[:3]}
        write_freq_csv(path, small_run.freq_table, fdr_bh=fdr)
        lines = path.read_text().splitlines()
        assert lines[0].endswith(",fdr_bh")
        assert lines[1].endswith(",0.5")

    def test_discoveries_csv_echoes_threshold(self, small_run, tmp_path):
        path = tmp_path / "disc.csv"
        th = FrequencyThreshold(threshold_rfreq=0.012, threshold_count=1.2, attainable=True)
        rows = small_run.freq_table.rows[:2]
        write_discoveries_csv(path, rows, th)
        lines = path.read_text().splitlines()
        assert lines[0] == "id,freq,rfreq,threshold_count,threshold_rfreq"
        assert lines[1].endswith(",1.2,0.012")

    def test_empty_discoveries_is_header_only(self, tmp_path):
        path = tmp_path / "disc.csv"
        th = FrequencyThreshold(1.5, 7.5, False)
        write_discoveries_csv(path, [], th)
        assert path.read_text() == "id,freq,rfreq,threshold_count,threshold_rfreq\n"

    def test_power_csv_layout(self, small_run, tmp_path):
        pts = power_curves(small_run, [0.05, 0.1], q_stars=(0.05, 0.1))
        path = tmp_path / "power.csv"
        write_power_csv(path, pts, q_stars=(0.05, 0.1))
        lines = path.read_text().splitlines()
        assert lines[0] == ("q,x_lo,x_hi,power,type_i,type_ii,precision,fdr_o,"
                            "accuracy,crit_rfreq@0.05,crit_rfreq@0.1,source")
        assert len(lines) == 5
        assert lines[1].endswith(",combined")
        assert lines[2].endswith(",whole")
        # whole rows leave the crit columns empty
        assert ",,," in lines[2] or lines[2].split(",")[-3:-1] == ["", ""]

    def test_float_cells_round_trip(self, small_run, tmp_path):
        path = tmp_path / "freq.csv"
        write_freq_csv(path, small_run.freq_table)
        lines = path.read_text().splitlines()[1:]
        by_id = {r.feature_id: r for r in small_run.freq_table.rows}
        for line in lines[:20]:
            parts = line.split(",")
            row = by_id[parts[0]]
            if parts[3]:
                assert float(parts[3]) == row.median_stat
            assert float(parts[2]) == row.rfreq
