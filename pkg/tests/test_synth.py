import json

import numpy as np
import pandas as pd
import pytest
from pandas import testing as tm

from fundshift import breaks, marketdata, perf, regress, stylebox, synth, validation
from fundshift.stylebox import IntensityClass

VOLS = {"mkt_rf": 0.01, "smb": 0.006, "hml": 0.005}


def _fund(fund_id, *regimes, benchmark_id="BENCH"):
    return synth.FundSpec(fund_id, tuple(synth.RegimeSpec(**r) for r in regimes), benchmark_id)


def _sample(fund, bench, factors):
    return marketdata.align(marketdata.compute_returns(fund), marketdata.compute_returns(bench), factors)


def test_gen_factors_deterministic():
    """
    GIVEN the same length, seed and vols
    WHEN synth.gen_factors is called twice
    THEN the panels are identical
    """
    first = synth.gen_factors(250, 42, VOLS, 0.0001)
    second = synth.gen_factors(250, 42, VOLS, 0.0001)
    tm.assert_frame_equal(first.frame, second.frame)
    assert list(first.frame.columns) == ["mkt_rf", "smb", "hml", "rf"]
    assert first.dates[0] == pd.Timestamp(synth.START_DATE)


def test_gen_factors_tiny_vol():
    """
    GIVEN a factor vol of 1e-12
    WHEN synth.gen_factors is called
    THEN that factor is practically zero
    """
    panel = synth.gen_factors(100, 1, {**VOLS, "smb": 1e-12}, 0.0)
    assert np.abs(panel.frame["smb"]).max() < 1e-10


def test_gen_factors_law_of_large_numbers():
    """
    GIVEN 100000 days of smb with vol 0.006
    WHEN the sample standard deviation is taken
    THEN it is within 1% of 0.006
    """
    panel = synth.gen_factors(100_000, 7, VOLS, 0.0)
    assert panel.frame["smb"].std() == pytest.approx(0.006, rel=0.01)


def test_gen_factors_momentum():
    """
    GIVEN vols with a mom entry
    WHEN synth.gen_factors is called
    THEN the panel carries a momentum column
    """
    panel = synth.gen_factors(50, 3, {**VOLS, "mom": 0.007}, 0.0)
    assert panel.has_mom
    assert list(panel.frame.columns) == ["mkt_rf", "smb", "hml", "mom", "rf"]


@pytest.mark.parametrize("T,vols", [(0, VOLS), (10, {**VOLS, "hml": 0.0})])
def test_gen_factors_invalid(T, vols):
    """
    GIVEN an empty panel or a zero vol
    WHEN synth.gen_factors is called
    THEN it will raise ValueError
    """
    with pytest.raises(ValueError):
        synth.gen_factors(T, 1, vols, 0.0)


def test_gen_fund_risk_free_only():
    """
    GIVEN a single regime with zero loadings, alpha and noise
    WHEN synth.gen_fund is called
    THEN the NAV compounds at the risk-free rate from 100
    """
    factors = synth.gen_factors(300, 5, VOLS, 0.0002)
    nav, truth = synth.gen_fund(_fund("RF", {"length": 300}), factors, 9)
    assert nav.navs.iloc[0] == 100.0
    assert nav.navs.iloc[-1] == pytest.approx(100 * 1.0002**300, rel=1e-12)
    assert len(nav) == 301
    assert truth.break_indices == ()


def test_gen_fund_round_trip():
    """
    GIVEN a noiseless two-regime fund
    WHEN its NAVs are turned back into returns
    THEN the planted returns are recovered to 1e-12
    """
    factors = synth.gen_factors(400, 5, VOLS, 0.0001)
    spec = _fund(
        "RT",
        {"length": 200, "alpha": 0.0001, "beta_mkt": 1.1, "beta_smb": 0.4},
        {"length": 200, "beta_mkt": 0.8, "beta_hml": -0.3},
    )
    nav, _ = synth.gen_fund(spec, factors, 1)
    returns = marketdata.compute_returns(nav).returns.to_numpy()
    f = factors.frame
    expected = np.concatenate(
        [
            f["rf"][:200] + 0.0001 + 1.1 * f["mkt_rf"][:200] + 0.4 * f["smb"][:200],
            f["rf"][200:] + 0.8 * f["mkt_rf"][200:] - 0.3 * f["hml"][200:],
        ]
    )
    np.testing.assert_allclose(returns, expected, rtol=0, atol=1e-12)


def test_gen_fund_planted_rotation():
    """
    GIVEN two regimes with smb +0.8 then -0.8
    WHEN synth.gen_fund is called
    THEN the truth holds one break at the regime end graded Rotation
    """
    factors = synth.gen_factors(1000, 5, VOLS, 0.0001)
    spec = _fund(
        "ROT",
        {"length": 500, "beta_mkt": 1.0, "beta_smb": 0.8, "beta_hml": 0.3},
        {"length": 500, "beta_mkt": 1.0, "beta_smb": -0.8, "beta_hml": 0.3},
    )
    _, truth = synth.gen_fund(spec, factors, 2)
    assert truth.break_indices == (499,)
    assert truth.intensities == (IntensityClass.ROTATION,)
    assert [box.label for box in truth.styles] == ["Small Value", "Large Value"]


def test_gen_fund_deterministic():
    """
    GIVEN the same spec and seed
    WHEN synth.gen_fund is called twice
    THEN the NAV series are identical
    """
    factors = synth.gen_factors(300, 5, VOLS, 0.0001)
    spec = _fund("D", {"length": 300, "beta_mkt": 1.0, "noise_sigma": 0.01})
    first, _ = synth.gen_fund(spec, factors, 17)
    second, _ = synth.gen_fund(spec, factors, 17)
    tm.assert_series_equal(first.navs, second.navs)


def test_gen_fund_longer_than_panel():
    """
    GIVEN a fund spec longer than the factor panel
    WHEN synth.gen_fund is called
    THEN it will raise InvalidSimulationSpec
    """
    factors = synth.gen_factors(100, 5, VOLS, 0.0)
    with pytest.raises(validation.InvalidSimulationSpec):
        synth.gen_fund(_fund("LONG", {"length": 150}), factors, 1)


def test_gen_fund_seed_isolation():
    """
    GIVEN two funds generated with different seeds over one panel
    WHEN their residuals are correlated
    THEN the correlation is below 0.05
    """
    factors = synth.gen_factors(10_000, 5, VOLS, 0.0)
    spec = _fund("N", {"length": 10_000, "noise_sigma": 0.01})
    first, _ = synth.gen_fund(spec, factors, 100)
    second, _ = synth.gen_fund(spec, factors, 101)
    a = marketdata.compute_returns(first).returns
    b = marketdata.compute_returns(second).returns
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05


def test_gen_benchmark_self_cancellation():
    """
    GIVEN a benchmark with the loadings of the fund's first regime
    WHEN the AGT model is fitted on that regime
    THEN every coefficient is zero
    """
    factors = synth.gen_factors(600, 5, VOLS, 0.0001)
    loadings = {"beta_mkt": 0.95, "beta_smb": 0.3, "beta_hml": -0.2}
    spec = _fund("SELF", {"length": 300, **loadings}, {"length": 300, "beta_mkt": 1.0})
    fund, _ = synth.gen_fund(spec, factors, 3)
    bench = synth.gen_benchmark(synth.RegimeSpec(length=1, **loadings), factors, "BENCH")
    fit = regress.fit_agt(_sample(fund, bench, factors), (0, 299))
    assert fit.coef.tolist() == pytest.approx([0.0] * 4, abs=1e-12)


def test_gen_benchmark_risk_free():
    """
    GIVEN zero benchmark loadings
    WHEN synth.gen_benchmark is called
    THEN the benchmark compounds at the risk-free rate
    """
    factors = synth.gen_factors(250, 5, VOLS, 0.0001)
    bench = synth.gen_benchmark(synth.RegimeSpec(length=1), factors, "CASH")
    assert bench.fund_id == "CASH"
    assert bench.navs.iloc[-1] == pytest.approx(100 * 1.0001**250, rel=1e-12)


def test_regime_spec_invalid():
    """
    GIVEN a zero length or negative noise
    WHEN a RegimeSpec is built
    THEN it will raise InvalidSimulationSpec
    """
    with pytest.raises(validation.InvalidSimulationSpec):
        synth.RegimeSpec(length=0)
    with pytest.raises(validation.InvalidSimulationSpec):
        synth.RegimeSpec(length=10, noise_sigma=-0.1)


def test_simulate(simulation_spec_path):
    """
    GIVEN the shipped three fund simulation spec
    WHEN synth.simulate is called
    THEN every fund, benchmark and truth is produced on one calendar
    """
    spec = synth.load_simulation_spec(simulation_spec_path)
    simulation = synth.simulate(spec)
    assert sorted(simulation.funds) == ["DRIFT", "ROTATE", "STEADY"]
    assert sorted(simulation.benchmarks) == ["NIFTY_100_TRI", "NIFTY_SMALLCAP_250_TRI"]
    assert simulation.benchmark_map.benchmark_of("DRIFT") == "NIFTY_SMALLCAP_250_TRI"
    assert len(simulation.factors) == 1000
    assert simulation.factors.has_mom
    assert simulation.truths["ROTATE"].intensities == (IntensityClass.ROTATION,)
    assert simulation.truths["DRIFT"].intensities == (IntensityClass.DRIFT,)
    assert simulation.truths["STEADY"].break_indices == ()
    for nav in simulation.funds.values():
        assert list(nav.dates[1:]) == list(simulation.factors.dates)


def test_simulate_seed_override(simulation_spec_path):
    """
    GIVEN a simulation spec
    WHEN synth.simulate is called with and without a seed override
    THEN the override changes the draws and repeating it does not
    """
    spec = synth.load_simulation_spec(simulation_spec_path)
    base = synth.simulate(spec)
    other = synth.simulate(spec, seed=1)
    again = synth.simulate(spec, seed=1)
    assert not base.factors.frame.equals(other.factors.frame)
    tm.assert_frame_equal(other.factors.frame, again.factors.frame)
    tm.assert_series_equal(other.funds["ROTATE"].navs, again.funds["ROTATE"].navs)


def test_load_simulation_spec_invalid_json(tmp_path):
    """
    GIVEN a file that is not JSON
    WHEN synth.load_simulation_spec is called
    THEN it will raise InvalidSimulationSpec
    """
    path = tmp_path / "spec.json"
    path.write_text("{not json")
    with pytest.raises(validation.InvalidSimulationSpec):
        synth.load_simulation_spec(path)


def test_truth_record(simulation_definition):
    """
    GIVEN a parsed simulation spec
    WHEN a truth is serialised
    THEN styles and intensities are plain labels
    """
    simulation = synth.simulate(synth.parse_simulation_spec(simulation_definition))
    record = simulation.truths["ROTATE"].to_record()
    assert json.loads(json.dumps(record)) == {
        "fund_id": "ROTATE",
        "break_indices": [499],
        "styles": ["Small Value", "Large Value"],
        "intensities": ["Rotation"],
    }


def test_noiseless_drift_reproduces_truth():
    """
    GIVEN 30 seeds of a noiseless fund whose SMB loading drifts from 0.8 to 0 with no HML loading
    WHEN breaks, regime styles and the shift intensity are computed
    THEN every seed reproduces the planted break, styles and intensity
    """
    spec = _fund(
        "DRIFT",
        {"length": 400, "beta_mkt": 1.0, "beta_smb": 0.8},
        {"length": 400, "beta_mkt": 1.0},
    )
    bench_loadings = synth.RegimeSpec(length=1, beta_mkt=1.0)
    for seed in range(30):
        factors = synth.gen_factors(800, seed, VOLS, 0.0001)
        fund, truth = synth.gen_fund(spec, factors, seed)
        sample = _sample(fund, synth.gen_benchmark(bench_loadings, factors, "BENCH"), factors)
        bs = breaks.select_break_count(sample)
        styles = stylebox.regime_styles(sample, bs)
        assert bs.break_indices == truth.break_indices
        assert tuple(s.box for s in styles) == truth.styles
        assert (perf.shift_intensity(styles[0], styles[1]),) == truth.intensities
