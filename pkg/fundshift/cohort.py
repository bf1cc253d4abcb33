import json
import os
import tempfile
import typing
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from fundshift import __version__, breaks, marketdata, perf, regress, stylebox, validation
from fundshift.config import AnalysisConfig
from fundshift.log import logger

ANALYSIS_ERRORS = (
    OSError,
    validation.InvalidDataFrame,
    validation.InvalidSeries,
    marketdata.InsufficientOverlap,
    regress.InsufficientObservations,
    regress.RankDeficientDesign,
    breaks.InfeasiblePartition,
    np.linalg.LinAlgError,
    pd.errors.ParserError,
    pd.errors.EmptyDataError,
)

Record = typing.Dict[str, typing.Any]


def _date(value: pd.Timestamp) -> str:
    return value.strftime(validation.ISO_DATE)


def _native(value):
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def _frame_records(frame: pd.DataFrame) -> typing.List[Record]:
    return [{key: _native(value) for key, value in row.items()} for row in frame.to_dict(orient="records")]


def _metrics_record(metrics: typing.Optional[perf.FundMetrics]) -> typing.Optional[Record]:
    return None if metrics is None else metrics.to_record()


def analyse_fund(
    fund_id: str,
    nav_path: Path,
    benchmark_id: str,
    bench_path: Path,
    factors: marketdata.FactorPanel,
    config: AnalysisConfig,
    table_jobs: int = 1,
) -> Record:
    """
    Run the whole pipeline for one fund: returns, alignment, break
    detection, regime styles, shift intensities and performance.

    :param table_jobs: workers for the rows of the segment SSR table

    :returns: JSON-ready record of the fund
    :rtype: dict
    """
    fund = marketdata.compute_returns(marketdata.parse_nav_csv(nav_path, fund_id))
    bench = marketdata.compute_returns(marketdata.parse_nav_csv(bench_path, benchmark_id))
    sample = marketdata.align(fund, bench, factors, config.min_obs)
    logger.info(f"{fund_id}: aligned {sample.n} observations against {benchmark_id}")

    bs = breaks.select_break_count(sample, config.max_breaks, config.trim, config.model, table_jobs)
    bs = breaks.filter_short_regimes(bs, config.min_regime_obs)
    styles = stylebox.regime_styles(sample, bs, config.sig_level, config.cov_type)

    shifts = []
    for position in range(bs.chosen_m):
        before, after = styles[position], styles[position + 1]
        comparison = perf.pre_post_compare(
            sample,
            bs,
            styles,
            position,
            annualization=config.annualization,
            min_obs=config.min_obs,
            level=config.sig_level,
            tol=config.shift_tol,
        )
        factor_shifts = {}
        for factor in ("smb", "hml"):
            old, new = before.state(factor), after.state(factor)
            factor_shifts[factor] = {
                "before": old.to_record(),
                "after": new.to_record(),
                "intensity": stylebox.classify_factor_shift(old, new, config.shift_tol).value,
            }
        shifts.append(
            {
                "break_index": comparison.break_index,
                "break_date": comparison.break_date,
                "intensity": comparison.intensity.value,
                "grade": comparison.intensity.grade,
                "style_from": comparison.style_from,
                "style_to": comparison.style_to,
                "factors": factor_shifts,
                "pre": _metrics_record(comparison.pre),
                "post": _metrics_record(comparison.post),
                "delta": {key: _native(value) for key, value in comparison.delta.items()},
                "warning": comparison.warning,
            }
        )
    bs = replace(bs, is_style_break=tuple(s["intensity"] != stylebox.IntensityClass.UNCHANGED.value for s in shifts))

    full = (0, sample.n - 1)
    ff3 = regress.fit_ff3(sample, full, level=config.sig_level, cov_type=config.cov_type)
    agt = regress.fit_agt(sample, full, level=config.sig_level, cov_type=config.cov_type)
    metrics = perf.annualized_metrics(sample, full, ff3, agt, config.annualization, n_breaks=bs.chosen_m)

    use_carhart = config.carhart and sample.has_mom
    if config.carhart and not sample.has_mom:
        logger.warning(f"{fund_id}: no momentum factor, Carhart fits skipped")
    regimes = []
    for regime in styles:
        start, end = regime.window
        entry = {
            "start": start,
            "end": end,
            "start_date": _date(sample.dates[start]),
            "end_date": _date(sample.dates[end]),
            "style": regime.box.label,
            "ff3": regime.fit.to_record(),
        }
        if use_carhart:
            carhart = regress.fit_carhart(sample, regime.window, level=config.sig_level, cov_type=config.cov_type)
            entry["carhart"] = carhart.to_record()
        regimes.append(entry)

    return {
        "fund_id": fund_id,
        "benchmark_id": benchmark_id,
        "n_obs": sample.n,
        "start_date": _date(sample.dates[0]),
        "end_date": _date(sample.dates[-1]),
        "breaks": {
            "model": bs.model.value,
            "chosen_m": bs.chosen_m,
            "h": bs.h,
            "break_indices": list(bs.break_indices),
            "break_dates": [_date(sample.dates[b]) for b in bs.break_indices],
            "criterion": {str(m): value for m, value in bs.criterion_values.items()},
            "total_ssr": bs.partition.total_ssr,
            "removed_breaks": list(bs.removed_breaks),
            "is_style_break": list(bs.is_style_break),
        },
        "regimes": regimes,
        "shifts": shifts,
        "metrics": metrics.to_record(),
        "full_sample": {"ff3": ff3.to_record(), "agt": agt.to_record()},
    }


def _analyse_or_skip(*args) -> typing.Tuple[typing.Optional[Record], typing.Optional[Record]]:
    fund_id = args[0]
    try:
        return analyse_fund(*args), None
    except ANALYSIS_ERRORS as e:
        logger.warning(f"{fund_id}: skipped, {e}")
        return None, {"fund_id": fund_id, "reason": str(e)}


def aggregate(records: typing.Sequence[Record], max_breaks: int) -> Record:
    """
    Cohort-level tables built only from per-fund records, so a stored
    report can be checked by recomputing them.
    """
    histogram = {str(m): 0 for m in range(max_breaks + 1)}
    for record in records:
        key = str(record["breaks"]["chosen_m"])
        histogram[key] = histogram.get(key, 0) + 1

    transitions = stylebox.accumulate_transitions(
        [stylebox.StyleBox.from_label(regime["style"]) for regime in record["regimes"]] for record in records
    )
    metrics = [perf.FundMetrics.from_record(record["metrics"]) for record in records]
    all_shifts = [shift for record in records for shift in record["shifts"]]

    intensity = {cls.value: 0 for cls in stylebox.IntensityClass}
    grades: typing.Dict[str, int] = {}
    for shift in all_shifts:
        intensity[shift["intensity"]] += 1
        grades[shift["grade"]] = grades.get(shift["grade"], 0) + 1

    deciles = None
    if len(records) >= 10:
        shift_pairs = {
            record["fund_id"]: [(s["intensity"], s["style_to"]) for s in record["shifts"]] for record in records
        }
        deciles = perf.decile_analysis(metrics, shift_pairs).to_record()

    return {
        "break_histogram": histogram,
        "transitions": {
            "labels": stylebox.STYLE_LABELS,
            "counts": transitions.counts.to_numpy().tolist(),
            "grand_total": transitions.grand_total,
        },
        "performance": _frame_records(perf.group_by_break_count(metrics)),
        "deciles": deciles,
        "intensity": {"classes": intensity, "grades": dict(sorted(grades.items()))},
        "style_pairs": _frame_records(perf.summarize_style_pairs(all_shifts)),
    }


class Cohort:
    """
    A set of funds, each mapped to a benchmark, analysed against one factor
    panel.

    Inputs are loaded with the ``get_*`` methods, then ``analyse`` runs the
    pipeline for every fund and ``build_report`` assembles the report.
    Funds that cannot be analysed are listed as skipped with a reason.
    """

    def __init__(self, config: AnalysisConfig):
        config.validate()
        logger.info("validated analysis config")
        self.config = config
        self.factors: typing.Optional[marketdata.FactorPanel] = None
        self.benchmark_map = marketdata.BenchmarkMap()
        self.navs: typing.Dict[str, Path] = {}
        self.benchmark_navs: typing.Dict[str, Path] = {}
        self.records: typing.List[Record] = []
        self.skipped: typing.List[Record] = []

    def get_factors(self, factors_csv: typing.Union[str, Path]) -> marketdata.FactorPanel:
        logger.info(f"Loading factors from {factors_csv}")
        self.factors = marketdata.parse_factor_csv(factors_csv)
        return self.factors

    def get_benchmark_map(self, map_csv: typing.Union[str, Path]) -> marketdata.BenchmarkMap:
        logger.info(f"Loading benchmark map from {map_csv}")
        self.benchmark_map = marketdata.parse_benchmark_map(map_csv)
        return self.benchmark_map

    def get_navs(self, nav_dir: typing.Union[str, Path]) -> typing.Dict[str, Path]:
        logger.info(f"Listing fund NAV files in {nav_dir}")
        self.navs = marketdata.nav_files(nav_dir)
        return self.navs

    def get_benchmark_navs(self, bench_dir: typing.Union[str, Path]) -> typing.Dict[str, Path]:
        logger.info(f"Listing benchmark NAV files in {bench_dir}")
        self.benchmark_navs = marketdata.nav_files(bench_dir)
        return self.benchmark_navs

    def analyse(self) -> typing.List[Record]:
        if self.factors is None:
            raise RuntimeError("please run `.get_factors()` before analysing")
        tasks = []
        skipped = []
        for fund_id, nav_path in sorted(self.navs.items()):
            benchmark_id = self.benchmark_map.benchmark_of(fund_id)
            if benchmark_id is None:
                skipped.append({"fund_id": fund_id, "reason": "no benchmark"})
                continue
            if benchmark_id not in self.benchmark_navs:
                skipped.append({"fund_id": fund_id, "reason": f"no NAV file for benchmark {benchmark_id}"})
                continue
            tasks.append((fund_id, nav_path, benchmark_id, self.benchmark_navs[benchmark_id]))
        for entry in skipped:
            logger.warning(f"{entry['fund_id']}: skipped, {entry['reason']}")

        if self.config.jobs == 1 or len(tasks) <= 1:
            # a lone fund spends its workers on the SSR table instead
            results = [_analyse_or_skip(*task, self.factors, self.config, self.config.jobs) for task in tasks]
        else:
            results = Parallel(n_jobs=self.config.jobs)(
                delayed(_analyse_or_skip)(*task, self.factors, self.config) for task in tasks
            )
        self.records = [record for record, _ in results if record is not None]
        skipped.extend(reason for _, reason in results if reason is not None)
        self.skipped = sorted(skipped, key=lambda entry: entry["fund_id"])
        logger.info(f"Analysed {len(self.records)} funds, skipped {len(self.skipped)}")
        return self.records

    def build_report(self) -> Record:
        return {
            "tool": "fundshift",
            "version": __version__,
            "config": self.config.to_record(),
            "funds": self.records,
            "skipped": self.skipped,
            "aggregates": aggregate(self.records, self.config.max_breaks),
        }


def dumps_report(report: Record) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report: Record, path: typing.Union[str, Path]) -> None:
    """
    Write the report through a temporary file renamed into place.
    """
    target = Path(path)
    text = dumps_report(report)
    handle, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.info(f"Report written to {target}")


def load_report(path: typing.Union[str, Path]) -> Record:
    with open(path, encoding="utf-8") as f:
        return json.load(f)
