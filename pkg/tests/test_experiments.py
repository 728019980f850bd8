import math
from dataclasses import replace

import pytest

from lchpc.channel import PathComponent, channel_from_paths
from lchpc.errors import ConfigError
from lchpc.experiments import (
    SimConfig, run_rate_sweep, run_success_sweep, success_decision, time_cost_hierarchical,
    time_cost_sequential, time_cost_sparse, timeslot_table, write_csv,
)
from lchpc.search import _make_result

FIG4 = SimConfig(n_a=32, m_a=32, m=2, k=2, n_r=4, m_r=4, n_s=3, i_ly=2)


def found(pairs_angles, n=32, k=2):
    """BeamSearchResult whose grid indices sit at the given (aod, aoa) cosines."""
    def index(c):
        return int(round(((c + 1) * k * n + 1) / 2))
    pairs = [(index(aoa), index(aod)) for aod, aoa in pairs_angles]
    return _make_result(pairs, [1.0] * len(pairs), n, n, k, 0)


class TestTimeCosts:
    def test_hierarchical_fig4(self):
        assert time_cost_hierarchical(FIG4) == 24

    def test_hierarchical_zero_streams(self):
        assert time_cost_hierarchical(replace(FIG4, n_s=0)) == 0

    @pytest.mark.parametrize("n_s", [1, 2, 3])
    def test_hierarchical_linear(self, n_s):
        assert time_cost_hierarchical(replace(FIG4, n_s=2 * n_s)) == \
            2 * time_cost_hierarchical(replace(FIG4, n_s=n_s))

    def test_hierarchical_single_chain(self):
        # one measurement per slot: (10 - 4)*2 + 16 + 4 per path
        cfg = replace(FIG4, n_r=1, m_r=1, n_s=1)
        assert time_cost_hierarchical(cfg) == 32

    def test_sequential(self):
        assert time_cost_sequential(FIG4) == 256
        assert time_cost_sequential(SimConfig(n_a=1, m_a=1, n_r=1, m_r=1, k=1)) == 1
        assert time_cost_sequential(replace(FIG4, k=4)) == 4 * 256

    def test_sequential_rounds_up(self):
        assert time_cost_sequential(replace(FIG4, n_a=2, m_a=2, k=1, n_r=3, m_r=1)) == 2

    def test_sparse(self):
        assert time_cost_sparse(FIG4) == pytest.approx(36 * math.log2(64 / 3))
        assert time_cost_sparse(FIG4) == pytest.approx(158.9, abs=0.1)
        assert time_cost_sparse(replace(FIG4, n_s=1)) == pytest.approx(2 * math.log2(64))

    def test_table(self):
        rows = timeslot_table(FIG4, (8, 32))
        assert [r["n_a"] for r in rows] == [8, 32]
        assert rows[1]["t_hs"] == 24 and rows[1]["t_ss"] == 256


class TestSuccessDecision:
    def setup_method(self):
        self.truth = channel_from_paths(
            [PathComponent.from_cosines(1.0, -0.5 + 1 / 64, 0.25 + 1 / 64),
             PathComponent.from_cosines(0.5, 0.5 + 1 / 64, -0.75 + 1 / 64)], 32, 32)

    def test_exact(self):
        res = found([(-0.5 + 1 / 64, 0.25 + 1 / 64), (0.5 + 1 / 64, -0.75 + 1 / 64)])
        assert success_decision(res, self.truth, 2)

    def test_aod_error_too_large(self):
        res = found([(-0.5 + 1 / 64 + 1.5 / 32 + 1 / 64, 0.25 + 1 / 64)])
        assert not success_decision(res, self.truth, 1)

    def test_double_claim(self):
        # one path midway between two grid points; both neighbours are within tolerance
        truth = channel_from_paths([PathComponent.from_cosines(1.0, -0.5 + 2 / 64, 0.25 + 1 / 64)],
                                   32, 32)
        res = found([(-0.5 + 1 / 64, 0.25 + 1 / 64), (-0.5 + 3 / 64, 0.25 + 1 / 64)])
        assert not success_decision(res, truth, 2)
        assert success_decision(found([(-0.5 + 3 / 64, 0.25 + 1 / 64)]), truth, 1)

    def test_too_few_found(self):
        res = found([(-0.5 + 1 / 64, 0.25 + 1 / 64)])
        assert not success_decision(res, self.truth, 2)

    def test_wraps_around(self):
        truth = channel_from_paths([PathComponent.from_cosines(1.0, -1.0, 0.0)], 32, 32)
        # grid point 64 sits at 1 - 1/64, i.e. 1/64 from -1 modulo 2
        res = _make_result([(32, 64)], [1.0], 32, 32, 2, 0)
        assert success_decision(res, truth, 1)


class TestConfig:
    def test_defaults_valid(self):
        cfg = SimConfig().validate()
        assert (cfg.n_a, cfg.m_a, cfg.m, cfg.k, cfg.i_ly, cfg.l, cfg.n_r, cfg.m_r, cfg.trials) == \
            (32, 32, 2, 2, 2, 4, 3, 3, 1000)

    def test_all_violations_listed(self):
        with pytest.raises(ConfigError) as err:
            SimConfig(n_s=5, n_a=24, i_ly=9).validate()
        text = " ".join(err.value.violations)
        assert "n_s=5" in text and "n_a=24" in text and "l=4" in text


SMALL = SimConfig(n_a=16, m_a=16, n_s=2, l=3, snr_db_grid=(10.0, 30.0), trials=24, master_seed=3)


class TestSweeps:
    def test_success_reproducible(self):
        assert run_success_sweep(SMALL) == run_success_sweep(SMALL)

    def test_seed_matters(self):
        a = run_rate_sweep(SMALL)
        b = run_rate_sweep(replace(SMALL, master_seed=4))
        assert a != b

    def test_parallel_matches_serial(self):
        serial = run_success_sweep(SMALL, k_values=[1, 2])
        parallel = run_success_sweep(SMALL, k_values=[1, 2], threads=2)
        assert serial == parallel

    def test_rate_rows(self):
        rows, recs = run_rate_sweep(SMALL, n_s_values=[1, 2], return_records=True)
        assert len(rows) == 4
        for row in rows:
            assert row["rate_lc_hpc_mean"] <= row["rate_bound_mean"] + 1e-9
            assert row["trials"] == 24
        for batch in recs.values():
            assert [r.trial_index for r in batch] == list(range(24))
            assert all(r.rate_lc_hpc >= 0 and r.n_found <= 2 for r in batch)

    def test_shared_channels_across_variants(self):
        _, recs = run_rate_sweep(SMALL, k_values=[1, 2], return_records=True)
        bounds1 = [r.rate_bound for r in recs[(30.0, 2, 1, 2)]]
        bounds2 = [r.rate_bound for r in recs[(30.0, 2, 2, 2)]]
        assert bounds1 == bounds2

    def test_success_ci(self):
        for row in run_success_sweep(SMALL):
            p, n = row["success_rate"], row["trials"]
            assert row["ci95_half_width"] == pytest.approx(1.96 * math.sqrt(p * (1 - p) / n),
                                                           rel=1e-3)

    def test_csv_roundtrip(self, tmp_path):
        rows = [{"a": 1, "b": 0.1}, {"a": 2, "b": 1 / 3}]
        path = write_csv(tmp_path / "x" / "t.csv", rows, ("a", "b"))
        text = open(path, encoding="utf-8").read()
        assert text == "a,b\n1,0.1\n2,0.3333333333333333\n"
        assert float(text.splitlines()[2].split(",")[1]) == 1 / 3
