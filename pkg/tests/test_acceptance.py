"""Exit criteria for the build, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary under "acceptance criteria".
"""

import math
import time

import numpy as np
import pytest

from pnlink.cli import main
from pnlink.freqplan import FrequencyPlan, plan_variance, sweep_if, variance_reduction_gamma
from pnlink.montecarlo import ExperimentConfig, compare_architectures, desk_config, run_experiment
from pnlink.ofdm import OfdmNumerology, decompose_cpe_ici
from pnlink.psd import (
    PhaseNoisePsd,
    ZeroPoleStage,
    default_reference_psd,
    integrate_variance,
    psd_eval,
    scale_to_carrier,
)
from pnlink.qam import qam_ber_awgn
from pnlink.rng import SeedSpec
from pnlink.synth import synthesize

PSD = default_reference_psd()
NUM = OfdmNumerology()


def test_01_gamma_reduction(criterion):
    t0 = time.perf_counter()
    g = variance_reduction_gamma(30e9, 70e9)
    dt = time.perf_counter() - t0
    reduction = 100 * (1 - g)
    ok = g == (30 / 70) ** 2 and f"{reduction:.2g}" == "82" and dt < 1e-3
    criterion(1, "gamma(30 GHz, 70 GHz)", ok, f"gamma={g:.6f} reduction={reduction:.2f}% ({dt * 1e6:.0f} us)")
    assert ok


def test_02_if_sweep_u_shape(criterion):
    t0 = time.perf_counter()
    details, ok = [], True
    for f_rf in (70e9, 140e9):
        res = sweep_if(f_rf, PSD, NUM, 101, "analytic_approx")
        step = res.grid[1] - res.grid[0]
        convex = bool(np.all(np.diff(res.variance, 2) > 0))
        near = abs(res.argmin_if_hz - f_rf / 2) <= step
        ok &= convex and near
        details.append(f"{f_rf / 1e9:g}GHz: argmin={res.argmin_if_hz / 1e9:.3f}GHz convex={convex}")
    dt = time.perf_counter() - t0
    ok &= dt < 1.0
    criterion(2, "IF sweep U-shape", ok, "; ".join(details) + f" ({dt:.3f} s)")
    assert ok


def test_03_symmetric_split_halving(criterion):
    ok = True
    t0 = time.perf_counter()
    ratios = []
    for f in (70e9, 140e9):
        hom = plan_variance(FrequencyPlan.homodyne(f), PSD, NUM, "analytic_approx")
        het = plan_variance(FrequencyPlan.heterodyne(f, f / 2), PSD, NUM, "analytic_approx")
        ratios.append(het / hom)
    dt = time.perf_counter() - t0
    ok = all(r == pytest.approx(0.5, rel=1e-15) for r in ratios) and dt < 2e-3
    criterion(3, "symmetric split halves homodyne variance", ok, f"ratios={ratios} ({dt * 1e3:.3f} ms)")
    assert ok


def test_04_variance_quadrature(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    s0 = 1e-9
    for B in np.logspace(3, 9, 13):
        flat = integrate_variance(PhaseNoisePsd(s0, 15e9), B).value
        worst = max(worst, abs(flat / (s0 * B / 2) - 1))
        for fp in (1e2, 1e4, 1e6, 1e8):
            pole = PhaseNoisePsd(s0, 15e9, (ZeroPoleStage(1e200, fp),))
            exact = s0 * fp * math.atan(B / 2 / fp)
            worst = max(worst, abs(integrate_variance(pole, B).value / exact - 1))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt < 1.0
    criterion(4, "variance quadrature vs closed forms", ok, f"max rel err={worst:.2e} ({dt:.3f} s)")
    assert ok


def test_05_synthesis_spectral_fidelity(criterion):
    t0 = time.perf_counter()
    fs, n, n_real = NUM.sample_rate_hz, 4096, 200
    psd = scale_to_carrier(PSD, 140e9)
    pxx = np.zeros(n // 2 + 1)
    for i in range(n_real):
        x = synthesize(psd, n, fs, SeedSpec(5, i)).samples
        pxx += np.abs(np.fft.rfft(x)) ** 2 * 2.0 / (fs * n)
    pxx /= n_real
    f = np.fft.rfftfreq(n, 1 / fs)
    band = (f >= 4 * fs / n) & (f <= fs / 4)
    err = 10 * np.log10(pxx[band] / psd_eval(psd, f[band]))
    dt = time.perf_counter() - t0
    ok = bool(np.all(np.abs(err) <= 1.5)) and dt < 30
    criterion(5, "ensemble periodogram within +-1.5 dB", ok, f"max |err|={np.max(np.abs(err)):.3f} dB ({dt:.1f} s)")
    assert ok


def test_06_awgn_baseline(criterion):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        plan=FrequencyPlan.homodyne(70e9),
        snr_grid_db=tuple(range(0, 23, 2)),
        n_symbols_per_run=440,
        n_mc_runs=20,
        pn_enabled=False,
        cpe_correction=False,
    )
    s = run_experiment(cfg)
    expected = qam_ber_awgn(64, s.snr_db)
    use = expected >= 1e-3
    rel = np.abs(s.ber_mean[use] / expected[use] - 1)
    dt = time.perf_counter() - t0
    ok = bool(np.all(rel <= 0.10)) and int(s.bits.min()) >= 10**7 and use.sum() >= 5 and dt < 120
    criterion(
        6, "64-QAM AWGN BER vs exact Gray expression", ok,
        f"{use.sum()} SNR points, max rel dev={rel.max():.3%}, bits/point={int(s.bits.min())} ({dt:.1f} s)",
    )
    assert ok


def _le(a, b, slack=0.0):
    return bool(a <= b + slack)


def test_07_architecture_ordering_140ghz(criterion):
    t0 = time.perf_counter()
    hom, het = FrequencyPlan.homodyne(140e9), FrequencyPlan.heterodyne(140e9, 70e9)
    cfg = desk_config(hom)
    hom_off, hom_on, het_off, het_on = compare_architectures(cfg, [hom, het], [False, True])
    i = int(np.flatnonzero(hom_off.snr_db == 25.0)[0])
    chain = [het_on, het_off, hom_on, hom_off]
    ber_ok = all(
        _le(a.ber_mean[i], b.ber_mean[i], a.ber_ci_halfwidth[i] + b.ber_ci_halfwidth[i])
        for a, b in zip(chain, chain[1:])
    )
    evm_ok = all(_le(a.evm_rms_percent[i], b.evm_rms_percent[i]) for a, b in zip(chain, chain[1:]))
    hi = hom_off.snr_db >= 10
    point_ok = all(
        np.all(h.ber_mean[hi] <= o.ber_mean[hi] + h.ber_ci_halfwidth[hi] + o.ber_ci_halfwidth[hi])
        and np.all(h.evm_rms_percent[hi] <= o.evm_rms_percent[hi])
        for h, o in ((het_off, hom_off), (het_on, hom_on))
    )
    dt = time.perf_counter() - t0
    ok = ber_ok and evm_ok and point_ok and dt < 600
    bers = " <= ".join(f"{s.ber_mean[i]:.3e}" for s in chain)
    criterion(7, "het+CPE <= het <= hom+CPE <= hom at 140 GHz, 25 dB", ok, f"BER {bers} ({dt:.1f} s)")
    assert ok


def test_08_cpe_efficacy_70ghz(criterion):
    t0 = time.perf_counter()
    plans = [FrequencyPlan.homodyne(70e9), FrequencyPlan.heterodyne(70e9, 35e9)]
    cfg = desk_config(plans[0])
    t = compare_architectures(cfg, plans, [False, True])
    m = t[0].snr_db >= 15
    fracs = []
    for off, on in ((t[0], t[1]), (t[2], t[3])):
        fracs.append(float(np.mean(on.cell_evm_percent[:, m] <= off.cell_evm_percent[:, m])))
    dt = time.perf_counter() - t0
    ok = all(f >= 0.9 for f in fracs) and dt < 300
    criterion(8, "CPE-on EVM <= CPE-off at >= 15 dB, 70 GHz", ok, f"paired-cell fractions hom={fracs[0]:.2f} het={fracs[1]:.2f} ({dt:.1f} s)")
    assert ok


def test_09_cpe_ici_diagnostic(criterion):
    t0 = time.perf_counter()
    const_ok = True
    for c in (0.0, 0.4, -1.3, math.pi):
        d = decompose_cpe_ici(np.full(256, c), 256)
        const_ok &= d.ici_power == 0.0 and abs(abs(d.cpe) - 1.0) <= 2.3e-16
    fs = NUM.sample_rate_hz
    shape = PhaseNoisePsd(1.0, 15e9, (ZeroPoleStage(2e6, 2e5),))
    unit = integrate_variance(shape, fs).value
    means = []
    for level in (0.01, 0.04, 0.16):
        psd = PhaseNoisePsd(level / unit, 15e9, shape.stages)
        means.append(
            np.mean([decompose_cpe_ici(synthesize(psd, 256, fs, SeedSpec(9, s)), 256).ici_power for s in range(200)])
        )
    dt = time.perf_counter() - t0
    ok = const_ok and means[0] < means[1] < means[2] and dt < 30
    criterion(9, "CPE/ICI diagnostic", ok, f"constant exact={const_ok}, mean ICI={['%.4f' % x for x in means]} ({dt:.1f} s)")
    assert ok


def test_10_reproducibility(criterion, tmp_path):
    from pathlib import Path

    config = Path(__file__).resolve().parents[1] / "configs" / "compare_140ghz_desk.toml"
    blobs = []
    for w in (1, 2, 3):
        out = tmp_path / f"w{w}"
        assert main(["compare", str(config), "-o", str(out), "--workers", str(w)]) == 0
        blobs.append((out / "metrics.csv").read_bytes())
    # a second single-worker run as well
    assert main(["compare", str(config), "-o", str(tmp_path / "again"), "--workers", "1"]) == 0
    blobs.append((tmp_path / "again" / "metrics.csv").read_bytes())
    ok = all(b == blobs[0] for b in blobs)
    criterion(10, "byte-identical CSVs across reruns and worker counts", ok, f"{len(blobs)} runs, {len(blobs[0])} bytes")
    assert ok
