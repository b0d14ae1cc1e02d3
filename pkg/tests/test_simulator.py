import numpy as np
import pytest
from scipy import stats

from axisfdr import special
from axisfdr.errors import DomainError
from axisfdr.simulator import (
    SimulationSpec,
    box_region,
    chisq_null_map,
    estimate_power,
    fdr_control_experiment,
    simulate_null_statistics,
    simulate_statistics,
    simulate_volume_pair,
    smoothing_sweep,
    sweep_statistic,
)
from axisfdr.spatial import GridGeometry


def test_null_statistic_follows_f_at_high_kappa():
    T = simulate_null_statistics(200.0, 6, 6, 20000, seed=1)
    assert stats.kstest(T, lambda t: special.f_cdf(2, 20, t)).pvalue > 1e-3


def test_null_quantile_small_run():
    T = simulate_null_statistics(10.0, 6, 6, 50000, seed=2)
    # small-sample version of the 10^6 replicate check (wider tolerance)
    assert abs(np.quantile(T, 0.999) - 9.4) < 1.0


def test_simulation_is_deterministic_and_thread_independent(monkeypatch):
    a, _ = simulate_statistics(5.0, 6, 6, 40000, seed=3, delta_deg=20)
    monkeypatch.setenv("AXISFDR_THREADS", "1")
    b, _ = simulate_statistics(5.0, 6, 6, 40000, seed=3, delta_deg=20)
    assert np.array_equal(a, b)
    c, _ = simulate_statistics(5.0, 6, 6, 40000, seed=4, delta_deg=20)
    assert not np.array_equal(a, c)


def test_power_increases_with_separation_and_concentration():
    p = [estimate_power(d, 10.0, 6, 6, 0.001, 20000, seed=5).estimate for d in (0, 20, 46.1, 90)]
    assert p == sorted(p)
    assert p[0] < 0.005
    assert estimate_power(46.1, 5.0, 6, 6, 0.001, 20000, 5).estimate < p[2]


def test_power_standard_error():
    r = estimate_power(46.1, 10.0, 6, 6, 0.001, 10000, seed=6)
    assert r.standard_error == pytest.approx(np.sqrt(r.estimate * (1 - r.estimate) / 10000))


def test_simulator_rejects_bad_arguments():
    with pytest.raises(DomainError):
        simulate_statistics(5.0, 1, 6, 10, 0)
    with pytest.raises(DomainError):
        estimate_power(10, 5.0, 6, 6, 1.5, 10, 0)
    with pytest.raises(DomainError):
        SimulationSpec(GridGeometry((4, 4, 4)), delta_deg=120)


def test_box_region():
    sig = box_region((8, 8, 8), (2, 3, 4), 4)
    assert sig.sum() == 64 and sig[2, 3, 4] and sig[5, 6, 7] and not sig[6, 6, 7]
    with pytest.raises(DomainError):
        box_region((8, 8, 8), (6, 0, 0), 4)


def test_volume_pair_group_means():
    geom = GridGeometry((6, 6, 6))
    sig = box_region(geom.dims, (1, 1, 1), 2)
    spec = SimulationSpec(geom, n1=6, n2=6, kappa=1e4, signal=sig, delta_deg=90, seed=7)
    pair = simulate_volume_pair(spec)
    assert pair.truth.size == 8 and pair.mask.size == geom.size
    m1 = np.mean([abs(v.axes[..., 2]) for v in pair.group1], axis=0)
    m2 = np.mean([abs(v.axes[..., 2]) for v in pair.group2], axis=0)
    assert np.all(m1 > 0.95)
    assert np.all(m2[sig] < 0.05) and np.all(m2[~sig] > 0.95)


def test_volume_pair_deterministic():
    geom = GridGeometry((4, 4, 4))
    spec = SimulationSpec(geom, kappa=20, seed=8)
    a, b = simulate_volume_pair(spec), simulate_volume_pair(spec)
    assert all(np.array_equal(x.axes, y.axes) for x, y in zip(a.group1 + a.group2, b.group1 + b.group2))


def test_fdr_control_small():
    geom = GridGeometry((10, 10, 10))
    spec = SimulationSpec(geom, kappa=50, seed=9)
    r = fdr_control_experiment(spec, 0.2, 30)
    assert r.estimate <= 0.2 + 3 * max(r.standard_error, 0.2 / np.sqrt(30))


def test_sweep_rows_and_scale_nu_product():
    smap = chisq_null_map(GridGeometry((24, 24, 24)), seed=10)
    rows = sweep_statistic(smap, [1, 3], [0.05], bin_width=0.02)
    assert [r["b"] for r in rows] == [1, 3]
    assert rows[1]["N"] == 22**3
    for r in rows:
        assert "error" not in r
        assert r["a_hat"] * r["nu_hat"] == pytest.approx(2.0, rel=0.05)


def test_sweep_records_failures_and_continues():
    smap = chisq_null_map(GridGeometry((6, 6, 6)), seed=11)
    rows = sweep_statistic(smap, [1, 7], [0.05])
    assert "error" in rows[1] and rows[0]["b"] == 1


def test_smoothing_sweep_rejects_even_sizes():
    with pytest.raises(DomainError):
        smoothing_sweep(SimulationSpec(GridGeometry((4, 4, 4))), [1, 2], [0.05])
