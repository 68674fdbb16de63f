"""CSV ingestion and writing of numeric tables."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError
from .linalg_core import centre

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class DataSet:
    """Response and covariates as read (``raw_*``) and centred."""

    names: Tuple[str, ...]
    response: str
    raw_y: np.ndarray
    raw_x: np.ndarray
    y: np.ndarray
    x: np.ndarray
    y_mean: float
    x_means: np.ndarray
    constant: Tuple[int, ...]
    source: str = ""

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def indices_of(self, names: Iterable[str]) -> Tuple[int, ...]:
        """Column positions of covariates given by name."""
        lookup = {name: j for j, name in enumerate(self.names)}
        result = []
        for name in names:
            if name not in lookup:
                raise ConfigError(f"Unknown covariate '{name}'")
            result.append(lookup[name])
        return tuple(result)

    def names_of(self, indices: Iterable[int]) -> List[str]:
        return [self.names[j] for j in indices]

    def to_record(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "response": self.response,
            "n": self.n,
            "p": self.p,
            "constant_columns": self.names_of(self.constant),
        }


def _read_strings(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise DataError(f"{path}: malformed row: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path}: file is empty") from e


def _parse_numeric(frame: pd.DataFrame, path: Path) -> np.ndarray:
    """Convert every cell to float, naming the first offending cell on failure.

    Rows are reported as file line numbers (the header is line 1).
    """
    values = np.empty(frame.shape, dtype=float)
    for j, name in enumerate(frame.columns):
        column = frame[name]
        missing = column.isna()
        if missing.any():
            row = int(np.flatnonzero(missing.to_numpy())[0])
            raise DataError(f"{path}: line {row + 2} is short: no value for column '{name}'")
        text = column.str.strip()
        parsed = pd.to_numeric(text, errors="coerce").to_numpy(dtype=float)
        bad = ~np.isfinite(parsed)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DataError(
                f"{path}: line {row + 2}, column '{name}': cannot read '{column.iloc[row]}' as a number"
            )
        # correctly rounded conversion, so written doubles read back bit-equal
        values[:, j] = text.to_numpy(dtype=float)
    return values


def read_table(path, columns: Optional[Sequence[str]] = None) -> Tuple[Tuple[str, ...], np.ndarray]:
    """Read a rectangular numeric CSV with a header row; optionally select ``columns``."""
    path = Path(path)
    frame = _read_strings(path)
    if frame.shape[0] == 0 or frame.shape[1] == 0:
        raise DataError(f"{path}: no data rows")
    names = tuple(str(c) for c in frame.columns)
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate column names")
    if columns is not None:
        absent = [c for c in columns if c not in names]
        if absent:
            raise DataError(f"{path}: missing columns {absent}")
        frame = frame[list(columns)]
        names = tuple(columns)
    return names, _parse_numeric(frame, path)


def ingest(path, response: Optional[str] = None) -> DataSet:
    """Load a data set; the response defaults to the first column.

    Constant covariates are flagged in ``constant``: they are kept in the data
    and in reports but never arranged for reduction.
    """
    names, values = read_table(path)
    response = names[0] if response is None else response
    if response not in names:
        raise ConfigError(f"Response column '{response}' not found in {path}")
    if len(names) < 2:
        raise DataError(f"{path}: need at least one covariate besides the response")

    position = names.index(response)
    raw_y = values[:, position].copy()
    raw_x = np.delete(values, position, axis=1)
    covariates = tuple(name for name in names if name != response)
    if raw_x.shape[0] < 2:
        raise DataError(f"{path}: need at least 2 observations, got {raw_x.shape[0]}")

    y_view = centre(raw_y.reshape(-1, 1))
    x_view = centre(raw_x)
    constant = tuple(int(j) for j in np.flatnonzero(np.ptp(raw_x, axis=0) == 0.0))
    if constant:
        logger.warning(
            "Constant covariates excluded from reduction: %s", [covariates[j] for j in constant]
        )
    logger.info("Read %d observations of %d covariates from %s", raw_x.shape[0], raw_x.shape[1], path)
    return DataSet(
        names=covariates,
        response=response,
        raw_y=raw_y,
        raw_x=raw_x,
        y=y_view.values[:, 0].copy(),
        x=x_view.values,
        y_mean=float(y_view.means[0]),
        x_means=x_view.means,
        constant=constant,
        source=str(path),
    )


def write_csv(path, y, x, names: Sequence[str], response: str = "y") -> None:
    """Write response and covariates so that ``ingest`` reads back the same doubles."""
    x = np.asarray(x, dtype=float)
    if x.shape[1] != len(names):
        raise ConfigError(f"{len(names)} names for {x.shape[1]} columns")
    frame = pd.DataFrame(x, columns=list(names))
    frame.insert(0, response, np.asarray(y, dtype=float))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_rows(path, rows: Sequence[Dict[str, Any]]) -> None:
    """Per-replicate table as CSV, columns in first-row order."""
    frame = pd.DataFrame(list(rows))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
