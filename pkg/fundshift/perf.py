import math
import typing
from dataclasses import asdict, dataclass, fields

import numpy as np
import pandas as pd

from fundshift.breaks import BreakSet
from fundshift.log import logger
from fundshift.marketdata import MIN_OBS, AlignedSample
from fundshift.regress import RegressionFit, fit_agt, fit_ff3
from fundshift.stylebox import (
    IntensityClass,
    RegimeStyle,
    classify_factor_shift,
    fund_shift_intensity,
)

ANNUALIZATION = 252

METRIC_FIELDS = [
    "excess_return_pa",
    "stdev_pa",
    "sharpe_pa",
    "ff3_alpha_pa",
    "agt_alpha_pa",
]

GROUP_COLUMNS = ["group", "funds", "breaks", *METRIC_FIELDS]

ALL_WITH_BREAKS = "All funds with breaks"


class InsufficientFunds(Exception):
    def __init__(self, message):
        super().__init__(message)


@dataclass(frozen=True)
class FundMetrics:
    """
    Annualised performance of one fund over one window. Ratios that are
    undefined (zero volatility, zero market beta) are NaN.
    """

    fund_id: str
    excess_return_pa: float
    stdev_pa: float
    sharpe_pa: float
    treynor_pa: float
    ff3_alpha_pa: float
    agt_alpha_pa: float
    n_breaks: int = 0

    def to_record(self) -> typing.Dict[str, typing.Any]:
        return {key: _json_float(value) for key, value in asdict(self).items()}

    @classmethod
    def from_record(cls, record: typing.Dict[str, typing.Any]) -> "FundMetrics":
        values = {}
        for f in fields(cls):
            value = record[f.name]
            if f.name == "fund_id" or f.name == "n_breaks":
                values[f.name] = value
            else:
                values[f.name] = float("nan") if value is None else float(value)
        return cls(**values)


@dataclass(frozen=True)
class ShiftComparison:
    fund_id: str
    break_index: int
    break_date: str
    intensity: IntensityClass
    style_from: str
    style_to: str
    pre: typing.Optional[FundMetrics]
    post: typing.Optional[FundMetrics]
    warning: typing.Optional[str] = None

    @property
    def delta(self) -> typing.Dict[str, float]:
        if self.pre is None or self.post is None:
            return {}
        return {name: getattr(self.post, name) - getattr(self.pre, name) for name in [*METRIC_FIELDS, "treynor_pa"]}


@dataclass(frozen=True)
class DecileReport:
    size: int
    top: typing.List[str]
    bottom: typing.List[str]
    top_intensity: typing.Dict[str, int]
    bottom_intensity: typing.Dict[str, int]
    top_destinations: typing.Dict[str, int]
    bottom_destinations: typing.Dict[str, int]

    def to_record(self) -> typing.Dict[str, typing.Any]:
        return asdict(self)


def _json_float(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def calculate_excess_returns(frame: pd.DataFrame) -> pd.Series:
    return frame["r_fund"] - frame["rf"]


def calculate_annual_excess_return(excess: pd.Series, annualization: int = ANNUALIZATION) -> float:
    return float(excess.mean()) * annualization * 100


def calculate_annual_std(excess: pd.Series, annualization: int = ANNUALIZATION) -> float:
    return float(excess.std(ddof=1)) * math.sqrt(annualization) * 100


def calculate_sharpe(excess: pd.Series, annualization: int = ANNUALIZATION) -> float:
    """
    Mean over standard deviation of daily excess returns, annualised.

    NaN when the excess returns do not vary.
    """
    std = float(excess.std(ddof=1))
    if not std > 0:
        logger.warning("zero volatility of excess returns, Sharpe ratio undefined")
        return float("nan")
    return float(excess.mean()) / std * math.sqrt(annualization)


def calculate_treynor(excess: pd.Series, market_beta: float, annualization: int = ANNUALIZATION) -> float:
    if market_beta == 0:
        logger.warning("zero market beta, Treynor ratio undefined")
        return float("nan")
    return calculate_annual_excess_return(excess, annualization) / market_beta


def annualize_alpha(fit: RegressionFit, annualization: int = ANNUALIZATION) -> float:
    return fit.alpha * annualization * 100


def annualized_metrics(
    sample: AlignedSample,
    window: typing.Tuple[int, int],
    ff3_fit: RegressionFit,
    agt_fit: RegressionFit,
    annualization: int = ANNUALIZATION,
    n_breaks: int = 0,
) -> FundMetrics:
    start, end = window
    if end - start + 1 < 2:
        raise ValueError(f"window ({start}, {end}) needs at least two observations")
    if ff3_fit.window != window or agt_fit.window != window:
        raise ValueError("fits must be estimated on the metric window")
    excess = calculate_excess_returns(sample.window(start, end))
    return FundMetrics(
        fund_id=sample.fund_id,
        excess_return_pa=calculate_annual_excess_return(excess, annualization),
        stdev_pa=calculate_annual_std(excess, annualization),
        sharpe_pa=calculate_sharpe(excess, annualization),
        treynor_pa=calculate_treynor(excess, float(ff3_fit.coef["mkt_rf"]), annualization),
        ff3_alpha_pa=annualize_alpha(ff3_fit, annualization),
        agt_alpha_pa=annualize_alpha(agt_fit, annualization),
        n_breaks=n_breaks,
    )


def _group_label(n_breaks: int) -> str:
    if n_breaks == 0:
        return "No breaks"
    return "1 break" if n_breaks == 1 else f"{n_breaks} breaks"


def _group_row(label: str, group: pd.DataFrame) -> typing.Dict[str, typing.Any]:
    row = {"group": label, "funds": int(len(group)), "breaks": int(group["n_breaks"].sum())}
    for name in METRIC_FIELDS:
        row[name] = float(group[name].mean())
    return row


def group_by_break_count(metrics: typing.Sequence[FundMetrics]) -> pd.DataFrame:
    """
    Equal-weighted metric means per break count, plus one row for all funds
    with at least one break. Columns follow ``GROUP_COLUMNS``.
    """
    if not metrics:
        return pd.DataFrame(columns=GROUP_COLUMNS)
    frame = pd.DataFrame([asdict(m) for m in metrics])
    rows = [_group_row(_group_label(int(n)), group) for n, group in frame.groupby("n_breaks", sort=True)]
    with_breaks = frame[frame["n_breaks"] >= 1]
    if len(with_breaks) > 0:
        rows.append(_group_row(ALL_WITH_BREAKS, with_breaks))
    return pd.DataFrame(rows, columns=GROUP_COLUMNS)


def _window_metrics(
    sample: AlignedSample,
    window: typing.Tuple[int, int],
    annualization: int,
    level: float,
) -> FundMetrics:
    ff3 = fit_ff3(sample, window, level=level)
    agt = fit_agt(sample, window, level=level)
    return annualized_metrics(sample, window, ff3, agt, annualization)


def shift_intensity(before: RegimeStyle, after: RegimeStyle, tol: float = 1e-6) -> IntensityClass:
    smb = classify_factor_shift(before.state("smb"), after.state("smb"), tol)
    hml = classify_factor_shift(before.state("hml"), after.state("hml"), tol)
    return fund_shift_intensity(smb, hml)


def pre_post_compare(
    sample: AlignedSample,
    bs: BreakSet,
    styles: typing.Sequence[RegimeStyle],
    break_index: int,
    annualization: int = ANNUALIZATION,
    min_obs: int = MIN_OBS,
    level: float = 0.05,
    tol: float = 1e-6,
) -> ShiftComparison:
    """
    Metrics of the regimes either side of break ``break_index`` (its
    position among the fund's breaks). A regime shorter than ``min_obs``
    yields a comparison without metrics and with a warning.
    """
    if not 0 <= break_index < bs.chosen_m:
        raise IndexError(f"break {break_index} outside {bs.chosen_m} breaks of {bs.fund_id}")
    before, after = styles[break_index], styles[break_index + 1]
    b = bs.break_indices[break_index]
    comparison = dict(
        fund_id=bs.fund_id,
        break_index=b,
        break_date=sample.dates[b].strftime("%Y-%m-%d"),
        intensity=shift_intensity(before, after, tol),
        style_from=before.box.label,
        style_to=after.box.label,
    )
    short = [w for w in (before.window, after.window) if w[1] - w[0] + 1 < min_obs]
    if short:
        warning = f"regime {short[0]} shorter than {min_obs} observations"
        logger.warning(f"{bs.fund_id}: comparison around break {b} omitted, {warning}")
        return ShiftComparison(pre=None, post=None, warning=warning, **comparison)
    pre = _window_metrics(sample, before.window, annualization, level)
    post = _window_metrics(sample, after.window, annualization, level)
    return ShiftComparison(pre=pre, post=post, **comparison)


def decile_analysis(
    metrics: typing.Sequence[FundMetrics],
    shifts: typing.Dict[str, typing.Sequence[typing.Tuple[str, str]]],
) -> DecileReport:
    """
    Top and bottom ``ceil(N/10)`` funds by excess return, ties broken by
    fund id, with the intensity classes and destination styles of their
    shifts. ``shifts`` maps fund id to ``(intensity, style_to)`` pairs.
    """
    if len(metrics) < 10:
        raise InsufficientFunds(f"decile analysis needs at least 10 funds, got {len(metrics)}")
    size = math.ceil(len(metrics) / 10)

    def excess(m: FundMetrics) -> float:
        return m.excess_return_pa if math.isfinite(m.excess_return_pa) else -math.inf

    ranked = sorted(metrics, key=lambda m: (-excess(m), m.fund_id))
    top = [m.fund_id for m in ranked[:size]]
    bottom_ranked = sorted(metrics, key=lambda m: (excess(m), m.fund_id))
    bottom = [m.fund_id for m in bottom_ranked[:size]]

    def histogram(fund_ids: typing.List[str], position: int) -> typing.Dict[str, int]:
        counts: typing.Dict[str, int] = {}
        for fund_id in fund_ids:
            for shift in shifts.get(fund_id, ()):
                counts[shift[position]] = counts.get(shift[position], 0) + 1
        return dict(sorted(counts.items()))

    return DecileReport(
        size=size,
        top=top,
        bottom=bottom,
        top_intensity=histogram(top, 0),
        bottom_intensity=histogram(bottom, 0),
        top_destinations=histogram(top, 1),
        bottom_destinations=histogram(bottom, 1),
    )


def summarize_style_pairs(shifts: typing.Sequence[typing.Dict[str, typing.Any]]) -> pd.DataFrame:
    """
    Mean pre/post change of excess return, Sharpe ratio and FF3 alpha per
    (style before, style after) pair, over comparisons that carry metrics.
    """
    columns = ["style_from", "style_to", "shifts", "excess_return_pa", "sharpe_pa", "ff3_alpha_pa"]
    rows = [
        {
            "style_from": s["style_from"],
            "style_to": s["style_to"],
            "excess_return_pa": s["delta"]["excess_return_pa"],
            "sharpe_pa": np.nan if s["delta"]["sharpe_pa"] is None else s["delta"]["sharpe_pa"],
            "ff3_alpha_pa": s["delta"]["ff3_alpha_pa"],
        }
        for s in shifts
        if s.get("delta")
    ]
    if not rows:
        return pd.DataFrame(columns=columns)
    frame = pd.DataFrame(rows)
    grouped = frame.groupby(["style_from", "style_to"], sort=True)
    summary = grouped[["excess_return_pa", "sharpe_pa", "ff3_alpha_pa"]].mean()
    summary.insert(0, "shifts", grouped.size())
    return summary.reset_index()[columns]
