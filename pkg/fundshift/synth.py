"""
Synthetic factor panels and multi-regime funds with planted loadings.

All randomness comes from numpy's ``PCG64`` bit generator. A simulation
spec seeds one ``SeedSequence``; the factor panel and each fund draw from
their own spawned child stream, so output is reproducible per seed on any
platform numpy supports.
"""
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from fundshift import validation
from fundshift.log import logger
from fundshift.marketdata import FACTORS, MOMENTUM, RISK_FREE, BenchmarkMap, FactorPanel, NavSeries, cumulative_nav
from fundshift.stylebox import (
    FactorState,
    IntensityClass,
    StyleBox,
    classify_factor_shift,
    classify_size,
    classify_value,
    fund_shift_intensity,
)

START_DATE = "2006-01-02"
INITIAL_NAV = 100.0

Seed = typing.Union[int, np.random.SeedSequence]


@dataclass(frozen=True)
class RegimeSpec:
    length: int
    alpha: float = 0.0
    beta_mkt: float = 0.0
    beta_smb: float = 0.0
    beta_hml: float = 0.0
    beta_mom: float = 0.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.length < 1:
            raise validation.InvalidSimulationSpec("regime length must be at least 1")
        if self.noise_sigma < 0:
            raise validation.InvalidSimulationSpec("noise_sigma must not be negative")

    @property
    def loadings(self) -> typing.Dict[str, float]:
        return {"mkt_rf": self.beta_mkt, "smb": self.beta_smb, "hml": self.beta_hml, MOMENTUM: self.beta_mom}

    @property
    def style(self) -> StyleBox:
        """
        Style box of the planted loadings, any non-zero loading taken as
        significant.
        """
        return StyleBox(classify_size(_planted_state(self.beta_smb)), classify_value(_planted_state(self.beta_hml)))


@dataclass(frozen=True)
class FundSpec:
    fund_id: str
    regimes: typing.Tuple[RegimeSpec, ...]
    benchmark_id: str

    def __post_init__(self):
        if not self.regimes:
            raise validation.InvalidSimulationSpec(f"{self.fund_id} has no regimes")

    @property
    def length(self) -> int:
        return sum(r.length for r in self.regimes)


@dataclass(frozen=True)
class PlantedTruth:
    fund_id: str
    break_indices: typing.Tuple[int, ...]
    styles: typing.Tuple[StyleBox, ...]
    intensities: typing.Tuple[IntensityClass, ...]

    def to_record(self) -> typing.Dict[str, typing.Any]:
        return {
            "fund_id": self.fund_id,
            "break_indices": list(self.break_indices),
            "styles": [box.label for box in self.styles],
            "intensities": [i.value for i in self.intensities],
        }


@dataclass(frozen=True)
class SimulationSpec:
    seed: int
    rf_daily: float
    factor_vols: typing.Dict[str, float]
    benchmarks: typing.Dict[str, RegimeSpec]
    funds: typing.Tuple[FundSpec, ...]
    start_date: str = START_DATE
    n_obs: typing.Optional[int] = None

    @property
    def length(self) -> int:
        return self.n_obs if self.n_obs is not None else max(fund.length for fund in self.funds)


@dataclass
class Simulation:
    factors: FactorPanel
    funds: typing.Dict[str, NavSeries] = field(default_factory=dict)
    benchmarks: typing.Dict[str, NavSeries] = field(default_factory=dict)
    benchmark_map: BenchmarkMap = field(default_factory=BenchmarkMap)
    truths: typing.Dict[str, PlantedTruth] = field(default_factory=dict)


def _planted_state(beta: float) -> FactorState:
    return FactorState(beta, significant=beta != 0)


def _regime(definition: typing.Dict[str, typing.Any], length: typing.Optional[int] = None) -> RegimeSpec:
    return RegimeSpec(
        length=int(definition["length"]) if length is None else length,
        alpha=float(definition.get("alpha", 0.0)),
        beta_mkt=float(definition.get("beta_mkt", 0.0)),
        beta_smb=float(definition.get("beta_smb", 0.0)),
        beta_hml=float(definition.get("beta_hml", 0.0)),
        beta_mom=float(definition.get("beta_mom", 0.0)),
        noise_sigma=float(definition.get("noise_sigma", 0.0)),
    )


def parse_simulation_spec(definition: typing.Dict[str, typing.Any]) -> SimulationSpec:
    validation.validate_simulation_spec(definition)
    funds = tuple(
        FundSpec(
            fund_id=str(fund["fund_id"]),
            regimes=tuple(_regime(r) for r in fund["regimes"]),
            benchmark_id=str(fund["benchmark_id"]),
        )
        for fund in definition["funds"]
    )
    return SimulationSpec(
        seed=int(definition["seed"]),
        rf_daily=float(definition["rf_daily"]),
        factor_vols={key: float(vol) for key, vol in definition["factor_vols"].items()},
        benchmarks={key: _regime(loadings, length=1) for key, loadings in definition["benchmarks"].items()},
        funds=funds,
        start_date=str(definition.get("start_date", START_DATE)),
        n_obs=definition.get("n_obs"),
    )


def load_simulation_spec(path: typing.Union[str, Path]) -> SimulationSpec:
    logger.info(f"Loading simulation spec from {path}")
    with open(path, encoding="utf-8") as f:
        try:
            definition = json.load(f)
        except json.JSONDecodeError as e:
            raise validation.InvalidSimulationSpec(f"simulation spec is not valid JSON: {e}")
    if not isinstance(definition, dict):
        raise validation.InvalidSimulationSpec("simulation spec must be a JSON object")
    return parse_simulation_spec(definition)


def _generator(seed: Seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_factors(
    T: int,
    seed: Seed,
    vols: typing.Dict[str, float],
    rf_daily: float,
    start_date: str = START_DATE,
) -> FactorPanel:
    """
    iid zero-mean Gaussian factors on business days from ``start_date``.

    ``vols`` needs ``mkt_rf``, ``smb`` and ``hml``; a ``mom`` entry adds a
    momentum column. The risk-free rate is constant.
    """
    if T < 1:
        raise ValueError("panel length must be at least 1")
    names = [*FACTORS, MOMENTUM] if MOMENTUM in vols else list(FACTORS)
    scale = np.array([vols[name] for name in names], dtype=float)
    if not (scale > 0).all():
        raise ValueError("factor vols must be positive")
    draws = _generator(seed).standard_normal((T, len(names))) * scale
    index = pd.bdate_range(start=start_date, periods=T, name="date")
    frame = pd.DataFrame(draws, index=index, columns=names)
    frame[RISK_FREE] = float(rf_daily)
    return FactorPanel(frame)


def _truth(spec: FundSpec) -> PlantedTruth:
    ends = np.cumsum([r.length for r in spec.regimes]) - 1
    intensities = []
    for before, after in zip(spec.regimes, spec.regimes[1:]):
        smb = classify_factor_shift(_planted_state(before.beta_smb), _planted_state(after.beta_smb))
        hml = classify_factor_shift(_planted_state(before.beta_hml), _planted_state(after.beta_hml))
        intensities.append(fund_shift_intensity(smb, hml))
    return PlantedTruth(
        fund_id=spec.fund_id,
        break_indices=tuple(int(e) for e in ends[:-1]),
        styles=tuple(r.style for r in spec.regimes),
        intensities=tuple(intensities),
    )


def _regime_returns(regime: RegimeSpec, factors: pd.DataFrame) -> np.ndarray:
    returns = factors[RISK_FREE].to_numpy() + regime.alpha
    for name, beta in regime.loadings.items():
        if beta != 0:
            if name not in factors.columns:
                raise validation.InvalidSimulationSpec(f"loading on {name} without a {name} factor")
            returns = returns + beta * factors[name].to_numpy()
    return returns


def gen_fund(spec: FundSpec, factors: FactorPanel, seed: Seed) -> typing.Tuple[NavSeries, PlantedTruth]:
    """
    NAVs of a fund whose returns follow each regime's loadings in turn,
    ``r = rf + alpha + beta . factors + noise``, starting at 100.
    """
    if spec.length > len(factors):
        raise validation.InvalidSimulationSpec(
            f"{spec.fund_id} spans {spec.length} observations, the factor panel has {len(factors)}"
        )
    rng = _generator(seed)
    pieces = []
    start = 0
    for regime in spec.regimes:
        window = factors.frame.iloc[start : start + regime.length]
        noise = rng.standard_normal(regime.length) * regime.noise_sigma
        pieces.append(_regime_returns(regime, window) + noise)
        start += regime.length
    returns = pd.Series(np.concatenate(pieces), index=factors.dates[: spec.length])
    return cumulative_nav(returns, spec.fund_id, INITIAL_NAV), _truth(spec)


def gen_benchmark(loadings: RegimeSpec, factors: FactorPanel, benchmark_id: str) -> NavSeries:
    """
    Noise-free single-regime NAVs over the whole panel.
    """
    regime = RegimeSpec(
        length=len(factors),
        alpha=loadings.alpha,
        beta_mkt=loadings.beta_mkt,
        beta_smb=loadings.beta_smb,
        beta_hml=loadings.beta_hml,
        beta_mom=loadings.beta_mom,
    )
    returns = pd.Series(_regime_returns(regime, factors.frame), index=factors.dates)
    return cumulative_nav(returns, benchmark_id, INITIAL_NAV)


def simulate(spec: SimulationSpec, seed: typing.Optional[int] = None) -> Simulation:
    root = np.random.SeedSequence(spec.seed if seed is None else seed)
    factor_seed, *fund_seeds = root.spawn(len(spec.funds) + 1)
    factors = gen_factors(spec.length, factor_seed, spec.factor_vols, spec.rf_daily, spec.start_date)
    simulation = Simulation(factors=factors)
    for benchmark_id, loadings in sorted(spec.benchmarks.items()):
        simulation.benchmarks[benchmark_id] = gen_benchmark(loadings, factors, benchmark_id)
    for fund, fund_seed in zip(spec.funds, fund_seeds):
        nav, truth = gen_fund(fund, factors, fund_seed)
        simulation.funds[fund.fund_id] = nav
        simulation.truths[fund.fund_id] = truth
    simulation.benchmark_map = BenchmarkMap({fund.fund_id: fund.benchmark_id for fund in spec.funds})
    logger.info(f"Simulated {len(spec.funds)} funds over {spec.length} days")
    return simulation
