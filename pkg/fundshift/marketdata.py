"""
Market data ingestion: NAV, benchmark and factor CSV files, daily simple
returns and the date-aligned sample every regression runs on.
"""
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from fundshift import validation
from fundshift.log import logger

MIN_OBS = 60
FACTORS = ["mkt_rf", "smb", "hml"]
MOMENTUM = "mom"
RISK_FREE = "rf"

NAV_DATATYPES = {"date": "string", "nav": float}

FACTOR_DATATYPES = {
    "date": "string",
    "mkt_rf": float,
    "smb": float,
    "hml": float,
    "mom": float,
    "rf": float,
}

BENCHMARK_MAP_DATATYPES = {"fund_id": "string", "benchmark_id": "string"}

Source = typing.Union[str, Path, typing.TextIO]


class InsufficientOverlap(Exception):
    def __init__(self, message):
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class NavSeries:
    """
    Daily net asset values of one fund or benchmark, indexed by date.
    """

    fund_id: str
    navs: pd.Series

    def __post_init__(self):
        validation.validate_length(self.navs, 2, f"NAV series {self.fund_id}")
        validation.validate_positive(self.navs, f"NAV of {self.fund_id}")
        _check_index(self.navs.index, self.fund_id)

    @property
    def dates(self) -> pd.DatetimeIndex:
        return self.navs.index

    def __len__(self) -> int:
        return len(self.navs)


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    series_id: str
    returns: pd.Series

    def __post_init__(self):
        _check_index(self.returns.index, self.series_id)
        if (self.returns <= -1).any():
            raise validation.InvalidSeries(f"return of {self.series_id} at or below -100%")

    @property
    def dates(self) -> pd.DatetimeIndex:
        return self.returns.index

    def __len__(self) -> int:
        return len(self.returns)


@dataclass(frozen=True, eq=False)
class FactorPanel:
    """
    Daily factor returns with columns ``mkt_rf, smb, hml[, mom], rf``.
    """

    frame: pd.DataFrame

    def __post_init__(self):
        _check_index(self.frame.index, "factor panel")

    @property
    def has_mom(self) -> bool:
        return MOMENTUM in self.frame.columns

    @property
    def dates(self) -> pd.DatetimeIndex:
        return self.frame.index

    def __len__(self) -> int:
        return len(self.frame)


@dataclass(frozen=True)
class BenchmarkMap:
    entries: typing.Dict[str, str] = field(default_factory=dict)

    def benchmark_of(self, fund_id: str) -> typing.Optional[str]:
        return self.entries.get(fund_id)


@dataclass(frozen=True, eq=False)
class AlignedSample:
    """
    Fund, benchmark and factor returns restricted to their common dates.

    Columns are ``r_fund, r_bench, mkt_rf, smb, hml[, mom], rf``; rows are
    addressed by integer position, which is what break indices refer to.
    """

    fund_id: str
    benchmark_id: str
    frame: pd.DataFrame

    @property
    def n(self) -> int:
        return len(self.frame)

    @property
    def dates(self) -> pd.DatetimeIndex:
        return self.frame.index

    @property
    def has_mom(self) -> bool:
        return MOMENTUM in self.frame.columns

    def window(self, start: int = 0, end: typing.Optional[int] = None) -> pd.DataFrame:
        """
        Rows ``start`` to ``end`` inclusive.
        """
        end = self.n - 1 if end is None else end
        if not 0 <= start <= end < self.n:
            raise IndexError(f"window ({start}, {end}) outside sample of {self.n} observations")
        return self.frame.iloc[start : end + 1]

    def components(self) -> typing.Tuple[ReturnSeries, ReturnSeries, FactorPanel]:
        factor_columns = [col for col in self.frame.columns if col not in ("r_fund", "r_bench")]
        return (
            ReturnSeries(self.fund_id, self.frame["r_fund"].rename(None)),
            ReturnSeries(self.benchmark_id, self.frame["r_bench"].rename(None)),
            FactorPanel(self.frame[factor_columns]),
        )


def _check_index(index: pd.Index, name: str) -> None:
    if index.has_duplicates:
        raise validation.InvalidSeries(f"duplicate date in {name}")
    if not index.is_monotonic_increasing:
        raise validation.InvalidSeries(f"dates of {name} are not in increasing order")


def _read_csv(source: Source) -> pd.DataFrame:
    return pd.read_csv(source, dtype={"date": "string"}, float_precision="round_trip")


def _series_id(source: Source, explicit: typing.Optional[str]) -> str:
    if explicit:
        return explicit
    name = source if isinstance(source, (str, Path)) else getattr(source, "name", None)
    if not name:
        raise ValueError("series id must be given when reading from an anonymous stream")
    return Path(name).stem


def parse_nav_csv(source: Source, fund_id: typing.Optional[str] = None) -> NavSeries:
    """
    Read a ``date,nav`` CSV.

    The series id is ``fund_id`` when given, otherwise the file stem.

    :returns: validated NAV series
    :rtype: NavSeries
    """
    series_id = _series_id(source, fund_id)
    logger.debug(f"Loading NAV data for {series_id}")
    df = _read_csv(source)
    validation.validate_columns(df, NAV_DATATYPES.keys())
    validation.validate_datatypes(df, NAV_DATATYPES)
    index = validation.validate_dates(df["date"])
    navs = pd.Series(df["nav"].astype(float).to_numpy(), index=index, name="nav")
    return NavSeries(series_id, navs)


def compute_returns(nav: NavSeries) -> ReturnSeries:
    """
    Daily simple returns ``nav[t] / nav[t-1] - 1``, dated at the later date.
    """
    returns = nav.navs.pct_change().iloc[1:].rename("returns")
    return ReturnSeries(nav.fund_id, returns)


def cumulative_nav(
    returns: pd.Series,
    series_id: str,
    initial: float = 100.0,
    start_date: typing.Optional[pd.Timestamp] = None,
) -> NavSeries:
    """
    Compound daily returns into NAVs starting at ``initial``.

    The starting NAV is dated ``start_date``, by default one business day
    before the first return.
    """
    if start_date is None:
        start_date = returns.index[0] - pd.offsets.BDay(1)
    growth = np.cumprod(1.0 + returns.to_numpy(dtype=float))
    values = np.concatenate([[initial], initial * growth])
    index = pd.DatetimeIndex([start_date]).append(returns.index)
    index.name = "date"
    return NavSeries(series_id, pd.Series(values, index=index, name="nav"))


def parse_factor_csv(source: Source) -> FactorPanel:
    """
    Read a ``date,mkt_rf,smb,hml[,mom],rf`` CSV of daily decimal returns.
    """
    logger.debug(f"Loading factor data from {source}")
    df = _read_csv(source)
    validation.validate_columns(df, ["date", *FACTORS, RISK_FREE], optional=[MOMENTUM])
    validation.validate_datatypes(df, FACTOR_DATATYPES)
    index = validation.validate_dates(df["date"])
    columns = [*FACTORS, MOMENTUM, RISK_FREE] if MOMENTUM in df.columns else [*FACTORS, RISK_FREE]
    frame = df[columns].astype(float)
    frame.index = index
    if frame.isna().any().any():
        raise validation.InvalidDataFrame("Invalid DataFrame due to empty factor cell")
    if MOMENTUM not in frame.columns:
        logger.info("factor file has no mom column, Carhart fits disabled")
    return FactorPanel(frame)


def parse_benchmark_map(source: Source) -> BenchmarkMap:
    df = pd.read_csv(source, dtype="string", keep_default_na=False)
    validation.validate_columns(df, BENCHMARK_MAP_DATATYPES.keys())
    entries = [(str(f).strip(), str(b).strip()) for f, b in zip(df["fund_id"], df["benchmark_id"])]
    validation.validate_benchmark_map(entries)
    return BenchmarkMap(dict(entries))


def align(
    fund: ReturnSeries,
    bench: ReturnSeries,
    factors: FactorPanel,
    min_obs: int = MIN_OBS,
) -> AlignedSample:
    """
    Restrict fund, benchmark and factors to the intersection of their dates.

    No observation is filled in; a date missing from any input is dropped.
    """
    frame = pd.concat(
        [fund.returns.rename("r_fund"), bench.returns.rename("r_bench"), factors.frame],
        axis=1,
        join="inner",
    ).sort_index()
    frame.index.name = "date"
    if len(frame) < min_obs:
        raise InsufficientOverlap(
            f"{fund.series_id} shares {len(frame)} dates with {bench.series_id} and the factors, "
            f"at least {min_obs} needed"
        )
    return AlignedSample(fund.series_id, bench.series_id, frame)


def nav_files(directory: typing.Union[str, Path]) -> typing.Dict[str, Path]:
    """
    One CSV per series, keyed by file stem, sorted by id.
    """
    paths = sorted(Path(directory).glob("*.csv"))
    return {path.stem: path for path in paths}


def write_nav_csv(nav: NavSeries, path: typing.Union[str, Path]) -> None:
    frame = nav.navs.rename("nav").to_frame()
    frame.to_csv(path, index_label="date", date_format=validation.ISO_DATE)


def write_factor_csv(panel: FactorPanel, path: typing.Union[str, Path]) -> None:
    panel.frame.to_csv(path, index_label="date", date_format=validation.ISO_DATE)


def write_benchmark_map(benchmarks: BenchmarkMap, path: typing.Union[str, Path]) -> None:
    frame = pd.DataFrame(sorted(benchmarks.entries.items()), columns=["fund_id", "benchmark_id"])
    frame.to_csv(path, index=False)
