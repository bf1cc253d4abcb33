import typing

import numpy as np
import pandas as pd

ISO_DATE = "%Y-%m-%d"

REGIME_KEYS = ("length",)
FACTOR_VOL_KEYS = ("mkt_rf", "smb", "hml")


class InvalidDataFrame(Exception):
    def __init__(self, message):
        super().__init__(message)


class InvalidSeries(Exception):
    def __init__(self, message):
        super().__init__(message)


class InvalidBenchmarkMap(Exception):
    def __init__(self, message):
        super().__init__(message)


class InvalidSimulationSpec(Exception):
    def __init__(self, message):
        super().__init__(message)


class InvalidConfig(Exception):
    def __init__(self, message):
        super().__init__(message)


def validate_columns(
    df: pd.DataFrame,
    columns: typing.Iterable[str],
    optional: typing.Iterable[str] = (),
) -> bool:
    """
    Every required column must be present; nothing outside required and
    optional is allowed.
    """
    required = list(columns)
    allowed = set(required) | set(optional)
    missing = [col for col in required if col not in df.columns]
    if missing:
        raise InvalidDataFrame(f"Invalid DataFrame due to missing columns: {missing}")
    unknown = [col for col in df.columns if col not in allowed]
    if unknown:
        raise InvalidDataFrame(f"Invalid DataFrame due to column error: {unknown}")
    return True


def validate_datatypes(df: pd.DataFrame, column_types: typing.Dict[str, typing.Any]) -> bool:
    present = {col: kind for col, kind in column_types.items() if col in df.columns}
    try:
        df.astype(present)
        return True
    except (ValueError, TypeError) as e:
        raise InvalidDataFrame(f"Invalid DataFrame due to datatype error: {e}")


def validate_dates(dates: pd.Series) -> pd.DatetimeIndex:
    """
    Parse ISO-8601 dates and require them strictly increasing.

    :returns: the parsed dates as an index named ``date``
    :rtype: pd.DatetimeIndex
    """
    try:
        parsed = pd.to_datetime(dates.astype("string"), format=ISO_DATE)
    except (ValueError, TypeError) as e:
        raise InvalidDataFrame(f"Invalid DataFrame due to malformed date: {e}")
    index = pd.DatetimeIndex(parsed, name="date")
    if index.hasnans:
        raise InvalidDataFrame("Invalid DataFrame due to missing date")
    duplicated = index[index.duplicated()]
    if len(duplicated) > 0:
        raise InvalidSeries(f"duplicate date {duplicated[0].strftime(ISO_DATE)}")
    if not index.is_monotonic_increasing:
        raise InvalidSeries("dates are not in increasing order")
    return index


def validate_positive(values: pd.Series, name: str) -> bool:
    bad = values[~(values > 0)]
    if len(bad) > 0:
        raise InvalidSeries(f"{name} must be positive, found {bad.iloc[0]} at {bad.index[0]}")
    return True


def validate_length(values: typing.Sized, minimum: int, name: str) -> bool:
    if len(values) < minimum:
        raise InvalidSeries(f"{name} needs at least {minimum} rows, found {len(values)}")
    return True


def validate_benchmark_map(entries: typing.List[typing.Tuple[str, str]]) -> bool:
    seen = set()
    for fund_id, benchmark_id in entries:
        if not fund_id or not benchmark_id:
            raise InvalidBenchmarkMap(f"empty identifier in pair ({fund_id!r}, {benchmark_id!r})")
        if fund_id in seen:
            raise InvalidBenchmarkMap(f"fund {fund_id} mapped more than once")
        seen.add(fund_id)
    return True


def validate_simulation_spec(definition: typing.Dict[str, typing.Any]) -> bool:
    for key in ("seed", "rf_daily", "factor_vols", "benchmarks", "funds"):
        if key not in definition:
            raise InvalidSimulationSpec(f"{key} missing from simulation spec")
    vols = definition["factor_vols"]
    for key in FACTOR_VOL_KEYS:
        if key not in vols:
            raise InvalidSimulationSpec(f"factor vol {key} missing from simulation spec")
    for key, vol in vols.items():
        if not vol > 0:
            raise InvalidSimulationSpec(f"factor vol {key} must be positive")
    funds = definition["funds"]
    if not funds:
        raise InvalidSimulationSpec("simulation spec lists no funds")
    fund_ids = set()
    for fund in funds:
        fund_id = fund.get("fund_id")
        if not fund_id:
            raise InvalidSimulationSpec("fund_id missing from fund definition")
        if fund_id in fund_ids:
            raise InvalidSimulationSpec(f"fund {fund_id} defined more than once")
        fund_ids.add(fund_id)
        if fund.get("benchmark_id") not in definition["benchmarks"]:
            raise InvalidSimulationSpec(f"benchmark of {fund_id} not defined")
        if "regimes" not in fund or not fund["regimes"]:
            raise InvalidSimulationSpec(f"regimes missing from {fund_id}")
        for regime in fund["regimes"]:
            for key in REGIME_KEYS:
                if key not in regime:
                    raise InvalidSimulationSpec(f"{key} missing from a regime of {fund_id}")
            if int(regime["length"]) < 1:
                raise InvalidSimulationSpec(f"regime length of {fund_id} must be at least 1")
            if regime.get("noise_sigma", 0.0) < 0:
                raise InvalidSimulationSpec(f"noise_sigma of {fund_id} must not be negative")
    lengths = [sum(int(r["length"]) for r in fund["regimes"]) for fund in funds]
    n_obs = definition.get("n_obs")
    if n_obs is not None and np.max(lengths) > n_obs:
        raise InvalidSimulationSpec(f"a fund spans {np.max(lengths)} observations, n_obs is {n_obs}")
    if "mom" not in vols:
        loadings = [*definition["benchmarks"].values(), *(r for fund in funds for r in fund["regimes"])]
        if any(loading.get("beta_mom", 0.0) != 0 for loading in loadings):
            raise InvalidSimulationSpec("a beta_mom loading needs a mom entry in factor_vols")
    return True
