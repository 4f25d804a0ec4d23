"""Deterministic CSV output.

Reals are written with 17 significant digits in scientific notation, so every field
parses back to the exact double that produced it. Missing values are empty fields.
"""
import csv
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import OutputError

# Configure logging
logger = logging.getLogger(__name__)


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return str(value)


def write_csv(header: Sequence[str], rows: Iterable[Sequence], path) -> Path:
    """
    Write a header row and data rows.

    Args:
        header: Column names
        rows: Rows with one value per column
        path: Destination file; missing parent directories are created

    Returns:
        The written path

    Raises:
        OutputError: on a ragged row or any I/O failure
    """
    path = Path(path)
    width = len(header)
    rows = list(rows)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise OutputError(f"row {i} has {len(row)} fields, header has {width}", path=str(path),
                              operation="io.write_csv")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
    except OSError as e:
        logger.error(f"Cannot write {path}: {str(e)}")
        raise OutputError(f"cannot write {path}: {e.strerror or str(e)}", path=str(path), operation="io.write_csv")
    logger.debug(f"Wrote {path}")
    return path


def read_csv(path) -> Tuple[List[str], List[List[str]]]:
    """Header and raw string rows of a CSV file."""
    path = Path(path)
    try:
        with path.open("r", newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, [])
            return header, [row for row in reader]
    except OSError as e:
        raise OutputError(f"cannot read {path}: {e.strerror or str(e)}", path=str(path), operation="io.read_csv")


def write_matrix_csv(A: np.ndarray, path) -> Path:
    """Matrix with header c0..c{k-1}, one CSV row per matrix row."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    header = [f"c{j}" for j in range(A.shape[1])]
    return write_csv(header, A.tolist(), path)


def read_matrix_csv(path) -> np.ndarray:
    header, rows = read_csv(path)
    if not rows:
        return np.zeros((0, len(header)))
    try:
        return np.array([[float(v) for v in row] for row in rows])
    except ValueError as e:
        raise OutputError(f"non-numeric entry in {path}: {str(e)}", path=str(path), operation="io.read_matrix_csv")


def export_tables(tables: Dict[str, np.ndarray], directory, prefix: str = "") -> List[Path]:
    """Write each named matrix to ``<directory>/<prefix><name>.csv``."""
    directory = Path(directory)
    return [write_matrix_csv(A, directory / f"{prefix}{name}.csv") for name, A in tables.items()]


def import_tables(directory, names: Sequence[str], prefix: str = "") -> Dict[str, np.ndarray]:
    directory = Path(directory)
    return {name: read_matrix_csv(directory / f"{prefix}{name}.csv") for name in names}


def trajectory_table(times: np.ndarray, states: np.ndarray, outputs: np.ndarray,
                     header: Optional[List[str]] = None) -> Tuple[List[str], List[list]]:
    """Rows t, x_0..x_{N-1}, y_0..y_{m-1} per grid point."""
    N, m = states.shape[0], outputs.shape[0]
    if header is None:
        header = ["t"] + [f"x_{i}" for i in range(N)] + [f"y_{j}" for j in range(m)]
    body = np.column_stack([times, states.T, outputs.T]).tolist()
    return header, body
