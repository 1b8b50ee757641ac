from pathlib import Path

import numpy as np
import pandas as pd

from trimode.models import SystemParams, TimeSeries

COLUMNS = ["t", "n1", "n2", "n3", "engine"]
FLOAT_FORMAT = "%.17g"


def to_frame(series: list[TimeSeries]) -> pd.DataFrame:
    frames = [
        pd.DataFrame({"t": s.times, "n1": s.n1, "n2": s.n2, "n3": s.n3, "engine": s.engine})
        for s in series
    ]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=COLUMNS)
    return frame.sort_values(["engine", "t"], kind="stable").reset_index(drop=True)


def write_csv(series: list[TimeSeries], path: Path) -> Path:
    """Write `t,n1,n2,n3,engine` rows, sorted by engine then t, with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    to_frame(series).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_csv(path: Path, params: SystemParams) -> list[TimeSeries]:
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = set(COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"{path} is missing columns: {sorted(missing)}")
    series = []
    for engine, group in frame.groupby("engine", sort=True):
        series.append(
            TimeSeries(
                times=group["t"].to_numpy(dtype=np.float64),
                n1=group["n1"].to_numpy(dtype=np.float64),
                n2=group["n2"].to_numpy(dtype=np.float64),
                n3=group["n3"].to_numpy(dtype=np.float64),
                params=params,
                engine=engine,
            )
        )
    return series


GNUPLOT_TEMPLATE = """set datafile separator ","
set key autotitle columnhead
set xlabel "t"
set ylabel "mean photon number"
set title "{title}"
plot {plots}
"""


def write_gnuplot_script(csv_path: Path, engines: list[str], path: Path | None = None, title: str = "") -> Path:
    """gnuplot script plotting n1..n3 of each engine from the emitted CSV."""
    csv_path = Path(csv_path)
    path = Path(path) if path is not None else csv_path.with_suffix(".gp")
    plots = []
    for engine in engines:
        for column, mode in ((2, 1), (3, 2), (4, 3)):
            selector = f'(strcol(5) eq "{engine}" ? ${column} : NaN)'
            plots.append(f"'{csv_path.name}' using 1:{selector} with lines title \"{engine} n{mode}\"")
    path.write_text(GNUPLOT_TEMPLATE.format(title=title or csv_path.stem, plots=", \\\n     ".join(plots)))
    return path
