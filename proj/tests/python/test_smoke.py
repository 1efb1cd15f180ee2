import math
from pathlib import Path

import numpy as np
import pytest

import dbhdist


def test_density_and_quantile_round_trip():
    assert dbhdist.cdf(dbhdist.quantile(0.3, 15.0, 0.6), 15.0, 0.6) == pytest.approx(0.3, abs=1e-12)
    # sigma = 1 is the exponential distribution with mean mu.
    assert dbhdist.pdf(2.0, 4.0, 1.0) == pytest.approx(math.exp(-0.5) / 4.0, rel=1e-12)
    assert dbhdist.quantile_residual(dbhdist.quantile(0.975, 20.0, 0.4), 20.0, 0.4) == pytest.approx(
        1.959964, abs=1e-6
    )


def test_invalid_parameters_raise():
    with pytest.raises(ValueError):
        dbhdist.pdf(1.0, -1.0, 0.5)
    with pytest.raises(dbhdist.DomainError):
        dbhdist.cdf(1.0, 10.0, 0.0)


def test_sampling_is_seeded_and_matches_moments():
    a = np.array(dbhdist.sample(12.0, 0.5, 20000, seed=3))
    b = np.array(dbhdist.sample(12.0, 0.5, 20000, seed=3))
    assert np.array_equal(a, b)
    assert a.mean() == pytest.approx(12.0, rel=0.02)
    assert a.std() / a.mean() == pytest.approx(0.5, rel=0.03)


def test_size_classes_sum_to_one():
    p = dbhdist.size_class_probs(18.0, 0.7, "20,45")
    assert len(p) == 3
    assert sum(p) == pytest.approx(1.0, abs=1e-12)


def test_schedule_arithmetic():
    assert dbhdist.retained_draws(7, 5000, 2000, 10) == 2100
    with pytest.raises(ValueError):
        dbhdist.retained_draws(1, 100, 200, 1)


def test_waic_and_dic_on_constant_loglik():
    ll = np.full((10, 4), -2.0)
    w = dbhdist.compute_waic(ll)
    assert w["p2"] == pytest.approx(0.0)
    assert w["waic1"] == pytest.approx(16.0)
    d = dbhdist.compute_dic(ll, 16.0)
    assert d["edf"] == pytest.approx(0.0)


def test_fit_recovers_linear_effect():
    rng = np.random.default_rng(5)
    plots = []
    for i in range(60):
        mvh = rng.uniform(5, 30)
        mu = math.exp(2.0 + 0.04 * mvh)
        plots.append({"id": f"P{i}", "x": rng.uniform(0, 1000), "y": rng.uniform(0, 1000), "MVH": mvh,
                      "dbh": list(dbhdist.sample(mu, 0.5, 40, seed=i + 1))})
    out = dbhdist.fit(plots, "p(MVH)", "1", chains=2, iterations=600, burn_in=200, thin=2, seed=9)
    labels = out["coefficient_labels"]
    slope = out["coefficients"][:, labels.index("mu.p(MVH).1")].mean()
    assert slope == pytest.approx(0.04, abs=0.01)
    assert out["coefficients"].shape == (400, 3)
    assert all(math.isfinite(out["criteria"][k]) for k in ("dic", "waic1", "waic2"))
    assert len(out["fitted"]) == 60


def test_run_pipeline(tmp_path):
    sim = dbhdist.run_command("simulate", {"seed": 4, "width": 400, "height": 400, "cellsize": 2,
                                           "plots": 20, "trees_per_plot": 30, "stands": 4},
                              base_dir=tmp_path, output="sim")
    assert (tmp_path / "sim" / "trees.csv").exists()
    assert "manifest.txt" in {Path(f).name for f in sim["files"]}
    fit = dbhdist.run_command("fit", {"trees": "sim/trees.csv", "plots": "sim/plots.csv",
                                      "dtm": "sim/dtm.asc", "dsm": "sim/dsm.asc", "dbh_threshold": 0,
                                      "mu": "p(MVH)", "chains": 2, "iterations": 300, "burn_in": 100,
                                      "thin": 2, "output": "fit"}, base_dir=tmp_path)
    assert (tmp_path / "fit" / "draws.csv").exists()
    pred = dbhdist.run_command("predict", {"fit": "fit", "dtm": "sim/dtm.asc", "dsm": "sim/dsm.asc",
                                           "stands": "sim/stands.csv", "output": "pred"}, base_dir=tmp_path)
    assert (tmp_path / "pred" / "stands.csv").exists()
    with pytest.raises(ValueError):
        dbhdist.run_command("simulate", {"no_such_key": 1}, base_dir=tmp_path, output="x")


def test_settings_listing():
    keys = [k for k, _, _ in dbhdist.settings("fit")]
    assert "burn_in" in keys and "mu" in keys
