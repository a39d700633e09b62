import math

import numpy as np
import pytest

from pnlink.errors import ContractError
from pnlink.freqplan import FrequencyPlan
from pnlink.montecarlo import (
    DESK_SNR_GRID,
    ExperimentConfig,
    _transmit,
    compare_architectures,
    desk_config,
    received_frames,
    resolve_workers,
    run_experiment,
    table1_config,
    write_metrics_csv,
)
from pnlink.psd import PhaseNoisePsd

HOM140 = FrequencyPlan.homodyne(140e9)
HET140 = FrequencyPlan.heterodyne(140e9, 70e9)


def tiny(plan=HOM140, **kw):
    base = dict(snr_grid_db=(5.0, 15.0, 25.0), n_symbols_per_run=8, n_mc_runs=3)
    base.update(kw)
    return ExperimentConfig(plan=plan, **base)


class TestPresets:
    def test_table1(self):
        c = table1_config(HOM140)
        assert c.snr_grid_db == tuple(float(s) for s in range(31))
        assert (c.n_symbols_per_run, c.n_mc_runs) == (1000, 200)
        n = c.numerology
        assert (n.n_subcarriers, n.cp_len, n.delta_f_hz, n.qam_order) == (256, 16, 240e3, 64)
        assert n.pilot_fraction == 0.25

    def test_desk(self):
        c = desk_config(HET140)
        assert (c.n_symbols_per_run, c.n_mc_runs) == (100, 20)
        assert c.snr_grid_db == DESK_SNR_GRID
        assert np.all(np.diff(c.snr_grid_db) == 4.0) and 25.0 in c.snr_grid_db

    @pytest.mark.parametrize(
        "kw", [dict(snr_grid_db=()), dict(n_mc_runs=0), dict(pn_mode="bogus"), dict(snr_grid_db=(math.nan,))]
    )
    def test_invalid(self, kw):
        with pytest.raises(ContractError):
            tiny(**kw)


class TestRunExperiment:
    def test_unimpaired_chain(self):
        s = run_experiment(tiny(pn_enabled=False, snr_grid_db=(math.inf,)), workers=1)
        assert s.ber_mean[0] == 0.0
        assert s.evm_rms_percent[0] < 1e-6

    def test_vanishing_pn(self):
        cfg = tiny(ref_psd=PhaseNoisePsd(1e-30, 15e9), snr_grid_db=(math.inf,))
        s = run_experiment(cfg, workers=1)
        assert s.ber_mean[0] == 0.0 and s.evm_rms_percent[0] < 1e-6

    def test_deterministic(self):
        a = run_experiment(tiny(), workers=1)
        b = run_experiment(tiny(), workers=1)
        assert a.same_values(b)

    def test_worker_count_does_not_matter(self):
        cfg = tiny(plan=HET140)
        assert run_experiment(cfg, workers=1).same_values(run_experiment(cfg, workers=3))

    def test_seed_changes_result(self):
        a = run_experiment(tiny(), workers=1)
        b = run_experiment(tiny(master_seed=7), workers=1)
        assert not np.array_equal(a.cell_evm_percent, b.cell_evm_percent)

    def test_shapes_and_bounds(self):
        cfg = tiny()
        s = run_experiment(cfg, workers=1)
        assert s.snr_db.shape == s.ber_mean.shape == s.evm_rms_percent.shape == s.ber_ci_halfwidth.shape == (3,)
        assert s.cell_ber.shape == (3, 3)
        assert np.all((0 <= s.ber_mean) & (s.ber_mean <= 1)) and np.all(s.evm_rms_percent >= 0)
        assert np.all(s.bits == cfg.n_mc_runs * cfg.n_symbols_per_run * cfg.numerology.bits_per_symbol)
        assert s.metadata["rng_algorithm"].startswith("numpy.random.Philox")
        assert s.metadata["pn_mode"] == "continuous"

    def test_ci_bound(self):
        s = run_experiment(tiny(), workers=1)
        p = s.ber_mean
        assert np.all(s.ber_ci_halfwidth <= 1.96 * np.sqrt(p * (1 - p) / s.bits) * (1 + 1e-12))

    def test_ber_monotone_in_snr(self):
        cfg = desk_config(HOM140, snr_grid_db=tuple(range(0, 31, 3)), n_mc_runs=5, n_symbols_per_run=40)
        for s in compare_architectures(cfg, [HOM140, HET140], [False, True], workers=1):
            slack = s.ber_ci_halfwidth[1:] + s.ber_ci_halfwidth[:-1]
            assert np.all(np.diff(s.ber_mean) <= slack), s.label

    def test_per_symbol_mode(self):
        s = run_experiment(tiny(pn_mode="per_symbol"), workers=1)
        assert s.metadata["pn_mode"] == "per_symbol"
        assert np.all(np.isfinite(s.ber_mean))

    def test_phase_continuous_across_symbols(self):
        _, _, _, _, phi = _transmit(tiny(), 0)
        # continuous mode: one realization sliced per symbol, so the jump at a
        # symbol boundary is no larger than a typical in-symbol step
        jumps = np.abs(phi[1:, 0] - phi[:-1, -1])
        steps = np.abs(np.diff(phi, axis=1))
        assert np.max(jumps) < 10 * np.max(steps)


class TestCompare:
    def test_degenerate_equals_run_experiment(self):
        cfg = tiny()
        (only,) = compare_architectures(cfg, [cfg.plan], [cfg.cpe_correction], workers=1)
        assert only.same_values(run_experiment(cfg, workers=1))

    def test_table_order(self):
        table = compare_architectures(tiny(), [HOM140, HET140], [False, True], workers=1)
        assert [(s.label, s.cpe_correction) for s in table] == [
            ("homodyne@140GHz", False),
            ("homodyne@140GHz", True),
            ("heterodyne@70+70GHz", False),
            ("heterodyne@70+70GHz", True),
        ]

    def test_paired_seeds(self):
        a = _transmit(tiny(plan=HOM140), 1)
        b = _transmit(tiny(plan=HET140), 1)
        assert np.array_equal(a[0], b[0])  # identical data bits
        assert not np.array_equal(a[4], b[4])  # different phase processes

    def test_empty(self):
        with pytest.raises(ContractError):
            compare_architectures(tiny(), [], [True])
        with pytest.raises(ContractError):
            compare_architectures(tiny(), [HOM140], [])

    def test_cpe_helps_at_70ghz(self):
        plans = [FrequencyPlan.homodyne(70e9), FrequencyPlan.heterodyne(70e9, 35e9)]
        cfg = desk_config(plans[0], snr_grid_db=(15.0, 20.0, 25.0, 30.0), n_mc_runs=10)
        t = compare_architectures(cfg, plans, [False, True], workers=1)
        for off, on in ((t[0], t[1]), (t[2], t[3])):
            assert np.mean(on.cell_evm_percent <= off.cell_evm_percent) >= 0.9

    def test_csv(self, tmp_path):
        table = compare_architectures(tiny(), [HOM140], [False, True], workers=1)
        p = tmp_path / "m.csv"
        write_metrics_csv(p, table)
        lines = p.read_text().splitlines()
        assert lines[0] == "plan,cpe,snr_db,ber,ber_ci,evm_pct,runs,bits"
        assert len(lines) == 1 + 2 * 3
        assert lines[1].startswith("homodyne@140GHz,off,5.0,")
        assert lines[-1].split(",")[-2:] == ["3", str(3 * 8 * 1152)]


def test_received_frames_match_pipeline():
    cfg = tiny(cpe_correction=False)
    y, phi = received_frames(cfg, mc_run=0, snr_index=-1)
    assert y.shape == (8, 256) and phi.shape == (8, 272)


def test_resolve_workers(monkeypatch):
    monkeypatch.setenv("PNLINK_WORKERS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2
    monkeypatch.delenv("PNLINK_WORKERS")
    assert resolve_workers() >= 1
