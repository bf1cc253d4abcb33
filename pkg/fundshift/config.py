import typing
from dataclasses import asdict, dataclass

from fundshift import validation
from fundshift.breaks import MAX_BREAKS, TRIM
from fundshift.marketdata import MIN_OBS
from fundshift.perf import ANNUALIZATION
from fundshift.regress import MAX_CONDITION, SIGNIFICANCE_LEVEL, CovType, Model
from fundshift.stylebox import SHIFT_TOL

# daily-data stand-in for a 24 month minimum regime
TWO_YEARS_OBS = 500


@dataclass(frozen=True)
class AnalysisConfig:
    """
    Every knob of one analysis run. ``min_regime_obs`` of 500 approximates
    dropping breaks that border regimes shorter than 24 months of daily data.
    """

    nav_dir: str = ""
    factors_path: str = ""
    bench_map_path: str = ""
    bench_nav_dir: str = ""
    out_path: str = ""
    sig_level: float = SIGNIFICANCE_LEVEL
    trim: float = TRIM
    max_breaks: int = MAX_BREAKS
    min_regime_obs: int = 0
    annualization: int = ANNUALIZATION
    hac: bool = False
    carhart: bool = False
    break_model: str = Model.AGT.value
    min_obs: int = MIN_OBS
    shift_tol: float = SHIFT_TOL
    max_condition: float = MAX_CONDITION
    jobs: int = 1

    def validate(self) -> bool:
        if not 0 < self.sig_level < 1:
            raise validation.InvalidConfig(f"sig_level {self.sig_level} outside (0, 1)")
        if not 0 < self.trim < 0.5:
            raise validation.InvalidConfig(f"trim {self.trim} outside (0, 0.5)")
        if self.max_breaks < 0:
            raise validation.InvalidConfig("max_breaks must not be negative")
        if self.min_regime_obs < 0:
            raise validation.InvalidConfig("min_regime_obs must not be negative")
        if self.annualization < 1:
            raise validation.InvalidConfig("annualization must be positive")
        if self.break_model not in (Model.AGT.value, Model.FF3.value):
            raise validation.InvalidConfig(f"break model {self.break_model} is not agt or ff3")
        if self.min_obs < 2:
            raise validation.InvalidConfig("min_obs must be at least 2")
        if self.jobs == 0:
            raise validation.InvalidConfig("jobs must not be 0")
        return True

    @property
    def cov_type(self) -> CovType:
        return CovType.HAC if self.hac else CovType.NONROBUST

    @property
    def model(self) -> Model:
        return Model(self.break_model)

    def to_record(self) -> typing.Dict[str, typing.Any]:
        record = asdict(self)
        del record["out_path"]
        return record
