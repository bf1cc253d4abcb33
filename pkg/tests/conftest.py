import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from fundshift import cli
from fundshift.config import AnalysisConfig
from fundshift.marketdata import AlignedSample

TEST_FILES = Path(__file__).parent / "test_files"

VOLS = {"mkt_rf": 0.01, "smb": 0.006, "hml": 0.005, "mom": 0.007}


@pytest.fixture()
def test_files():
    return TEST_FILES


@pytest.fixture()
def nav_sample():
    return TEST_FILES / "nav_sample.csv"


@pytest.fixture()
def invalid_nav():
    return TEST_FILES / "nav_invalid.csv"


@pytest.fixture()
def duplicate_nav():
    return TEST_FILES / "nav_duplicate.csv"


@pytest.fixture()
def negative_nav():
    return TEST_FILES / "nav_negative.csv"


@pytest.fixture()
def factors_sample():
    return TEST_FILES / "factors_sample.csv"


@pytest.fixture()
def factors_no_mom():
    return TEST_FILES / "factors_no_mom.csv"


@pytest.fixture()
def bench_map():
    return TEST_FILES / "bench_map.csv"


@pytest.fixture()
def transitions_fixture():
    return TEST_FILES / "transitions.csv"


@pytest.fixture()
def simulation_spec_path():
    return TEST_FILES / "simulation_spec.json"


@pytest.fixture()
def simulation_definition(simulation_spec_path):
    with open(simulation_spec_path) as f:
        return json.load(f)


def build_sample(
    seed: int = 0,
    n: int = 750,
    regimes=None,
    bench=None,
    noise: float = 0.0,
    rf: float = 0.0001,
    mom: bool = False,
    fund_id: str = "TEST",
) -> AlignedSample:
    """
    Aligned sample whose fund follows ``regimes``, a list of
    ``(length, {"const": a, "mkt_rf": b, ...})`` pairs, on Gaussian factors.
    The benchmark is ``rf`` plus the ``bench`` loadings without noise.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    names = ["mkt_rf", "smb", "hml", "mom"] if mom else ["mkt_rf", "smb", "hml"]
    factors = rng.standard_normal((n, len(names))) * np.array([VOLS[name] for name in names])
    frame = pd.DataFrame(factors, columns=names, index=pd.bdate_range("2006-01-03", periods=n, name="date"))
    frame["rf"] = rf
    if regimes is None:
        regimes = [(n, {"mkt_rf": 1.0})]
    pieces = []
    start = 0
    for length, loadings in regimes:
        window = frame.iloc[start : start + length]
        r = window["rf"].to_numpy() + loadings.get("const", 0.0)
        for name in names:
            r = r + loadings.get(name, 0.0) * window[name].to_numpy()
        pieces.append(r)
        start += length
    frame.insert(0, "r_fund", np.concatenate(pieces) + rng.standard_normal(n) * noise)
    r_bench = frame["rf"].to_numpy().copy()
    for name, beta in (bench or {"mkt_rf": 1.0}).items():
        r_bench = r_bench + beta * frame[name].to_numpy()
    frame.insert(1, "r_bench", r_bench)
    return AlignedSample(fund_id, "BENCH", frame)


@pytest.fixture()
def make_sample():
    return build_sample


@pytest.fixture()
def planted_sample():
    return build_sample(
        seed=11,
        n=1000,
        regimes=[
            (500, {"mkt_rf": 1.0, "smb": 0.6, "hml": 0.4}),
            (500, {"mkt_rf": 1.0, "smb": -0.6, "hml": -0.4}),
        ],
        noise=0.004,
    )


def fixture_report(histogram=None):
    """
    Minimal report carrying only the aggregates the table renderers read.
    """
    histogram = histogram or {"0": 0, "1": 0, "2": 0, "3": 0, "4": 0, "5": 0}
    return {
        "tool": "fundshift",
        "version": "0.1.0",
        "config": {},
        "funds": [],
        "skipped": [],
        "aggregates": {
            "break_histogram": histogram,
            "transitions": {
                "labels": [
                    "Large Value",
                    "Large Blend",
                    "Large Growth",
                    "Mid Value",
                    "Mid Blend",
                    "Mid Growth",
                    "Small Value",
                    "Small Blend",
                    "Small Growth",
                ],
                "counts": [[0] * 9 for _ in range(9)],
                "grand_total": 0,
            },
            "performance": [],
            "deciles": None,
            "intensity": {"classes": {}, "grades": {}},
            "style_pairs": [],
        },
    }


@pytest.fixture()
def table1_report(tmp_path):
    report = fixture_report({"0": 41, "1": 34, "2": 31, "3": 32, "4": 34, "5": 29})
    path = tmp_path / "table1.json"
    path.write_text(json.dumps(report))
    return path


@pytest.fixture()
def empty_report(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text(json.dumps(fixture_report()))
    return path


@pytest.fixture()
def make_report():
    return fixture_report


@pytest.fixture(scope="session")
def simulated_dir(tmp_path_factory):
    """
    Directory written by ``fundshift simulate`` for the shipped spec.
    """
    out = tmp_path_factory.mktemp("simulated")
    assert cli.cmd_simulate(str(TEST_FILES / "simulation_spec.json"), str(out)) == 0
    return out


def analysis_config(directory, out, **kwargs):
    return AnalysisConfig(
        nav_dir=str(directory / "nav"),
        factors_path=str(directory / "factors.csv"),
        bench_map_path=str(directory / "bench_map.csv"),
        bench_nav_dir=str(directory / "bench"),
        out_path=str(out),
        **kwargs,
    )


@pytest.fixture(scope="session")
def simulated_report(simulated_dir, tmp_path_factory):
    """
    Path of the report produced by ``fundshift analyze`` on ``simulated_dir``.
    """
    out = tmp_path_factory.mktemp("analysed") / "report.json"
    assert cli.cmd_analyze(analysis_config(simulated_dir, out)) == 0
    return out


@pytest.fixture()
def make_config():
    return analysis_config
