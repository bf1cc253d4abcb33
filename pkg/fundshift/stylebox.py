"""
Style boxes from per-regime FF3 loadings and the intensity of each shift.

Size follows the SMB loading and value orientation the HML loading: a
significantly positive loading puts the fund on the small or value side, a
significantly negative one on the large or growth side, an insignificant
one in the middle.
"""
import typing
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from fundshift.breaks import BreakSet
from fundshift.marketdata import AlignedSample
from fundshift.regress import CovType, RegressionFit, fit_ff3

SHIFT_TOL = 1e-6


class SizeClass(Enum):
    LARGE = "Large"
    MID = "Mid"
    SMALL = "Small"


class ValueClass(Enum):
    VALUE = "Value"
    BLEND = "Blend"
    GROWTH = "Growth"


class IntensityClass(Enum):
    ROTATION = "Rotation"
    DRIFT = "Drift"
    STRENGTHEN = "Strengthen"
    WEAKEN = "Weaken"
    UNCHANGED = "Unchanged"

    @property
    def severity(self) -> int:
        return SEVERITY[self]

    @property
    def grade(self) -> str:
        return GRADES[self]


SEVERITY = {
    IntensityClass.ROTATION: 3,
    IntensityClass.DRIFT: 2,
    IntensityClass.STRENGTHEN: 1,
    IntensityClass.WEAKEN: 1,
    IntensityClass.UNCHANGED: 0,
}

GRADES = {
    IntensityClass.ROTATION: "Extreme",
    IntensityClass.DRIFT: "Moderate",
    IntensityClass.STRENGTHEN: "Weak",
    IntensityClass.WEAKEN: "Weak",
    IntensityClass.UNCHANGED: "None",
}


@dataclass(frozen=True)
class StyleBox:
    size: SizeClass
    value: ValueClass

    @property
    def label(self) -> str:
        return f"{self.size.value} {self.value.value}"

    @classmethod
    def ordered(cls) -> typing.List["StyleBox"]:
        return [cls(size, value) for size in SizeClass for value in ValueClass]

    @classmethod
    def from_label(cls, label: str) -> "StyleBox":
        size, value = label.split(" ")
        return cls(SizeClass(size), ValueClass(value))

    def __str__(self) -> str:
        return self.label


STYLE_LABELS = [box.label for box in StyleBox.ordered()]


@dataclass(frozen=True)
class FactorState:
    beta: float
    significant: bool

    @property
    def sign(self) -> int:
        return int(np.sign(self.beta))

    def to_record(self) -> typing.Dict[str, typing.Any]:
        return {"beta": float(self.beta), "significant": bool(self.significant)}


@dataclass(frozen=True, eq=False)
class RegimeStyle:
    window: typing.Tuple[int, int]
    fit: RegressionFit
    box: StyleBox

    def state(self, factor: str) -> FactorState:
        return factor_state(self.fit, factor)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """
    Style counts before (rows) and after (columns) each break.
    """

    counts: pd.DataFrame

    @property
    def grand_total(self) -> int:
        return int(self.counts.to_numpy().sum())

    def to_frame(self) -> pd.DataFrame:
        frame = self.counts.copy()
        frame["Total"] = frame.sum(axis=1)
        frame.loc["Total"] = frame.sum(axis=0)
        frame.index.name = "t\\t+1"
        return frame


def classify_size(state: FactorState) -> SizeClass:
    if state.significant and state.beta > 0:
        return SizeClass.SMALL
    if state.significant and state.beta < 0:
        return SizeClass.LARGE
    return SizeClass.MID


def classify_value(state: FactorState) -> ValueClass:
    if state.significant and state.beta > 0:
        return ValueClass.VALUE
    if state.significant and state.beta < 0:
        return ValueClass.GROWTH
    return ValueClass.BLEND


def factor_state(fit: RegressionFit, factor: str) -> FactorState:
    return FactorState(float(fit.coef[factor]), bool(fit.significant[factor]))


def style_of(fit: RegressionFit) -> StyleBox:
    return StyleBox(classify_size(factor_state(fit, "smb")), classify_value(factor_state(fit, "hml")))


def classify_factor_shift(before: FactorState, after: FactorState, tol: float = SHIFT_TOL) -> IntensityClass:
    """
    Grade the change of one loading across a break.

    Rotation needs both loadings significant with opposite non-zero signs;
    a change of significance status is drift; otherwise the change in
    absolute loading beyond ``tol`` decides strengthening or weakening.
    """
    if before.significant and after.significant and before.sign * after.sign < 0:
        return IntensityClass.ROTATION
    if before.significant != after.significant:
        return IntensityClass.DRIFT
    change = abs(after.beta) - abs(before.beta)
    if change > tol:
        return IntensityClass.STRENGTHEN
    if change < -tol:
        return IntensityClass.WEAKEN
    return IntensityClass.UNCHANGED


def fund_shift_intensity(smb_shift: IntensityClass, hml_shift: IntensityClass) -> IntensityClass:
    """
    The more severe of the two; on equal severity the SMB class is kept.
    """
    return hml_shift if hml_shift.severity > smb_shift.severity else smb_shift


def regime_styles(
    sample: AlignedSample,
    bs: BreakSet,
    level: float = 0.05,
    cov_type: CovType = CovType.NONROBUST,
) -> typing.List[RegimeStyle]:
    """
    One FF3 fit and style box per regime, in chronological order.
    """
    styles = []
    for window in bs.regime_windows:
        fit = fit_ff3(sample, window, level=level, cov_type=cov_type)
        styles.append(RegimeStyle(window, fit, style_of(fit)))
    return styles


def accumulate_transitions(all_regime_styles: typing.Iterable[typing.Sequence[StyleBox]]) -> TransitionMatrix:
    counts = pd.DataFrame(0, index=STYLE_LABELS, columns=STYLE_LABELS, dtype=int)
    for styles in all_regime_styles:
        for before, after in zip(styles, styles[1:]):
            counts.loc[before.label, after.label] += 1
    return TransitionMatrix(counts)
