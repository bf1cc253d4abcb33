"""
OLS with inference and the three factor models fitted on aligned samples.

Regressor order is fixed: ``const, mkt_rf, smb, hml`` and, for Carhart,
``mom`` last. The response is the fund's excess return over the risk-free
rate (FF3, Carhart) or its return in excess of its benchmark (AGT).
"""
import math
import typing
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
import statsmodels.api as sm
from scipy import stats

from fundshift.marketdata import FACTORS, MOMENTUM, AlignedSample

CONSTANT = "const"
SIGNIFICANCE_LEVEL = 0.05
MAX_CONDITION = 1e12
# SSR below this share of the response's sum of squares counts as an exact fit
EXACT_FIT = 1e-12
# on an exact fit, a coefficient contributing less than this share of the response norm is roundoff
ROUNDOFF = 1e-8

Window = typing.Tuple[int, int]


class InsufficientObservations(Exception):
    def __init__(self, message):
        super().__init__(message)


class RankDeficientDesign(Exception):
    def __init__(self, message):
        super().__init__(message)


class MissingFactor(Exception):
    def __init__(self, message):
        super().__init__(message)


class Model(Enum):
    FF3 = "ff3"
    CARHART = "carhart"
    AGT = "agt"


class CovType(Enum):
    NONROBUST = "nonrobust"
    HAC = "HAC"


@dataclass(frozen=True)
class DesignSpec:
    model: Model
    include_mom: bool

    @classmethod
    def for_model(cls, model: Model) -> "DesignSpec":
        return cls(model, include_mom=model is Model.CARHART)

    @property
    def factors(self) -> typing.List[str]:
        return [*FACTORS, MOMENTUM] if self.include_mom else list(FACTORS)

    @property
    def regressors(self) -> typing.List[str]:
        return [CONSTANT, *self.factors]

    @property
    def k(self) -> int:
        return len(self.regressors)


@dataclass(frozen=True, eq=False)
class OlsResult:
    coef: pd.Series
    se: pd.Series
    tstat: pd.Series
    pvalue: pd.Series
    ssr: float
    n: int
    k: int
    dof: int
    resid: np.ndarray


@dataclass(frozen=True, eq=False)
class RegressionFit:
    """
    One factor model fitted on one window of an aligned sample.

    ``coef`` holds the daily alpha under ``const`` and the loadings under
    the factor names; ``significant`` flags two-sided Student-t tests at
    ``level``.
    """

    spec: DesignSpec
    window: Window
    coef: pd.Series
    se: pd.Series
    tstat: pd.Series
    pvalue: pd.Series
    significant: pd.Series
    ssr: float
    n: int
    k: int
    dof: int
    level: float
    cov_type: CovType

    @property
    def alpha(self) -> float:
        return float(self.coef[CONSTANT])

    def to_record(self) -> typing.Dict[str, typing.Any]:
        return {
            "model": self.spec.model.value,
            "coef": {name: float(v) for name, v in self.coef.items()},
            "se": {name: float(v) for name, v in self.se.items()},
            "tstat": {name: _finite_or_none(v) for name, v in self.tstat.items()},
            "significant": {name: bool(v) for name, v in self.significant.items()},
            "ssr": float(self.ssr),
            "n": self.n,
        }


def _finite_or_none(value: float) -> typing.Optional[float]:
    return float(value) if np.isfinite(value) else None


def newey_west_lags(n: int) -> int:
    return int(math.floor(4 * (n / 100) ** (2 / 9)))


def critical_value(dof: int, level: float = SIGNIFICANCE_LEVEL) -> float:
    return float(stats.t.ppf(1 - level / 2, dof))


def ols(
    design: typing.Union[pd.DataFrame, np.ndarray],
    response: typing.Union[pd.Series, np.ndarray],
    cov_type: CovType = CovType.NONROBUST,
    max_condition: float = MAX_CONDITION,
) -> OlsResult:
    """
    Least squares through a QR decomposition of the design.

    The Gram matrix is inverted only for the standard errors. On an exact
    fit, coefficients at roundoff level are set to zero. A coefficient
    whose standard error is exactly zero gets an infinite t-statistic, or
    zero when the coefficient itself is zero.

    :returns: coefficients with standard errors, t-statistics and p-values
    :rtype: OlsResult
    """
    names = list(design.columns) if isinstance(design, pd.DataFrame) else None
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    n, k = X.shape
    if n <= k:
        raise InsufficientObservations(f"{n} observations for {k} regressors")
    condition = np.linalg.cond(X.T @ X)
    if not np.isfinite(condition) or condition > max_condition:
        raise RankDeficientDesign(f"design is rank deficient (Gram condition number {condition:.3g})")

    model = sm.OLS(y, X)
    if cov_type is CovType.HAC:
        fit = model.fit(method="qr", cov_type="HAC", cov_kwds={"maxlags": newey_west_lags(n)}, use_t=True)
    else:
        fit = model.fit(method="qr")

    dof = int(n - k)
    coef = np.asarray(fit.params, dtype=float)
    if float(fit.ssr) <= EXACT_FIT * float(y @ y):
        contribution = np.abs(coef) * np.linalg.norm(X, axis=0)
        coef = np.where(contribution <= ROUNDOFF * np.linalg.norm(y), 0.0, coef)
    se = np.sqrt(np.clip(np.diag(np.asarray(fit.cov_params(), dtype=float)), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(se > 0, coef / se, np.where(coef == 0, 0.0, np.sign(coef) * np.inf))
    pvalue = 2 * stats.t.sf(np.abs(tstat), dof)
    index = names if names is not None else list(range(k))
    return OlsResult(
        coef=pd.Series(coef, index=index),
        se=pd.Series(se, index=index),
        tstat=pd.Series(tstat, index=index),
        pvalue=pd.Series(pvalue, index=index),
        ssr=float(fit.ssr),
        n=int(n),
        k=int(k),
        dof=dof,
        resid=np.asarray(fit.resid, dtype=float),
    )


def significance(fit: OlsResult, level: float = SIGNIFICANCE_LEVEL) -> pd.Series:
    """
    Two-sided Student-t test of every coefficient against zero.
    """
    if not 0 < level < 1:
        raise ValueError(f"significance level {level} outside (0, 1)")
    return fit.tstat.abs() > critical_value(fit.dof, level)


def response_and_design(frame: pd.DataFrame, spec: DesignSpec) -> typing.Tuple[pd.Series, pd.DataFrame]:
    if spec.include_mom and MOMENTUM not in frame.columns:
        raise MissingFactor(f"{spec.model.value} needs a {MOMENTUM} factor column")
    if spec.model is Model.AGT:
        response = frame["r_fund"] - frame["r_bench"]
    else:
        response = frame["r_fund"] - frame["rf"]
    design = sm.add_constant(frame[spec.factors], prepend=True, has_constant="add")
    return response, design


def fit_model(
    sample: AlignedSample,
    window: typing.Optional[Window] = None,
    model: Model = Model.FF3,
    level: float = SIGNIFICANCE_LEVEL,
    cov_type: CovType = CovType.NONROBUST,
    max_condition: float = MAX_CONDITION,
) -> RegressionFit:
    spec = DesignSpec.for_model(model)
    start, end = window if window is not None else (0, sample.n - 1)
    if end - start + 1 < spec.k + 1:
        raise InsufficientObservations(
            f"window ({start}, {end}) of {sample.fund_id} is shorter than {spec.k + 1} observations"
        )
    response, design = response_and_design(sample.window(start, end), spec)
    result = ols(design, response, cov_type=cov_type, max_condition=max_condition)
    return RegressionFit(
        spec=spec,
        window=(start, end),
        coef=result.coef,
        se=result.se,
        tstat=result.tstat,
        pvalue=result.pvalue,
        significant=significance(result, level),
        ssr=result.ssr,
        n=result.n,
        k=result.k,
        dof=result.dof,
        level=level,
        cov_type=cov_type,
    )


def fit_ff3(sample: AlignedSample, window: typing.Optional[Window] = None, **kwargs) -> RegressionFit:
    return fit_model(sample, window, Model.FF3, **kwargs)


def fit_agt(sample: AlignedSample, window: typing.Optional[Window] = None, **kwargs) -> RegressionFit:
    """
    Benchmark-adjusted fit: the fund's return in excess of its benchmark on
    the FF3 factors, so style exposure the benchmark already carries nets out.
    """
    return fit_model(sample, window, Model.AGT, **kwargs)


def fit_carhart(sample: AlignedSample, window: typing.Optional[Window] = None, **kwargs) -> RegressionFit:
    if not sample.has_mom:
        raise MissingFactor(f"sample of {sample.fund_id} has no {MOMENTUM} column")
    return fit_model(sample, window, Model.CARHART, **kwargs)
