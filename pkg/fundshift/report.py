import typing

import numpy as np
import pandas as pd

from fundshift.perf import GROUP_COLUMNS
from fundshift.stylebox import GRADES, IntensityClass, TransitionMatrix

TABLES = ("breaks", "transitions", "performance", "deciles", "intensity", "shifts")
FORMATS = ("csv", "md")

Report = typing.Dict[str, typing.Any]


class UnknownTable(Exception):
    def __init__(self, message):
        super().__init__(message)


def breaks_table(report: Report) -> pd.DataFrame:
    """
    Funds and total breaks per break count, for funds with at least one
    break, closed by a Total row.
    """
    histogram = report["aggregates"]["break_histogram"]
    rows = [
        {"breaks": int(m), "funds": count, "total_breaks": int(m) * count}
        for m, count in sorted(histogram.items(), key=lambda item: int(item[0]))
        if int(m) >= 1
    ]
    frame = pd.DataFrame(rows, columns=["breaks", "funds", "total_breaks"])
    total = {"breaks": "Total", "funds": int(frame["funds"].sum()), "total_breaks": int(frame["total_breaks"].sum())}
    return pd.concat([frame.astype(object), pd.DataFrame([total])], ignore_index=True)


def transitions_table(report: Report) -> pd.DataFrame:
    transitions = report["aggregates"]["transitions"]
    labels = transitions["labels"]
    counts = pd.DataFrame(transitions["counts"], index=labels, columns=labels, dtype=int)
    return TransitionMatrix(counts).to_frame().reset_index()


def performance_table(report: Report) -> pd.DataFrame:
    return pd.DataFrame(report["aggregates"]["performance"], columns=GROUP_COLUMNS)


def deciles_table(report: Report) -> pd.DataFrame:
    deciles = report["aggregates"]["deciles"]
    columns = ["decile", "funds", *(cls.value for cls in IntensityClass), "destinations"]
    if deciles is None:
        return pd.DataFrame(columns=columns)
    rows = []
    for name in ("top", "bottom"):
        row = {"decile": name, "funds": ";".join(deciles[name])}
        for cls in IntensityClass:
            row[cls.value] = deciles[f"{name}_intensity"].get(cls.value, 0)
        row["destinations"] = ";".join(f"{style}:{n}" for style, n in deciles[f"{name}_destinations"].items())
        rows.append(row)
    return pd.DataFrame(rows, columns=columns)


def intensity_table(report: Report) -> pd.DataFrame:
    classes = report["aggregates"]["intensity"]["classes"]
    rows = [{"intensity": cls.value, "grade": GRADES[cls], "shifts": classes.get(cls.value, 0)} for cls in IntensityClass]
    rows.append({"intensity": "Total", "grade": "", "shifts": sum(classes.values())})
    return pd.DataFrame(rows)


def shifts_table(report: Report) -> pd.DataFrame:
    columns = ["style_from", "style_to", "shifts", "excess_return_pa", "sharpe_pa", "ff3_alpha_pa"]
    return pd.DataFrame(report["aggregates"]["style_pairs"], columns=columns)


BUILDERS = {
    "breaks": breaks_table,
    "transitions": transitions_table,
    "performance": performance_table,
    "deciles": deciles_table,
    "intensity": intensity_table,
    "shifts": shifts_table,
}


def build_table(report: Report, table: str) -> pd.DataFrame:
    if table not in BUILDERS:
        raise UnknownTable(f"unknown table {table!r}, expected one of {', '.join(TABLES)}")
    return BUILDERS[table](report)


def _cell(value) -> str:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ""
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def to_markdown(frame: pd.DataFrame) -> str:
    header = "| " + " | ".join(str(col) for col in frame.columns) + " |"
    rule = "|" + "|".join("---" for _ in frame.columns) + "|"
    body = ["| " + " | ".join(_cell(v) for v in row) + " |" for row in frame.itertuples(index=False)]
    return "\n".join([header, rule, *body]) + "\n"


def render(frame: pd.DataFrame, fmt: str) -> str:
    if fmt == "csv":
        return frame.to_csv(index=False)
    if fmt == "md":
        return to_markdown(frame)
    raise ValueError(f"unknown format {fmt!r}")
