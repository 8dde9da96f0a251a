"""Dataset ingestion and result serialization.

Results are long-format CSV rows ``run_id,method,seed,round,r_t,R_t,accepted,batch_size``.
The ``run_id`` encodes the full grid cell as
``<method>|alpha=<a>|cut=<p>|seed=<s>`` so summaries can recover the
exploration scale and cutoff without extra columns.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .exceptions import ParseError, SchemaMismatch

__all__ = [
    "DatasetSchema",
    "IngestReport",
    "load_schema",
    "ingest_csv",
    "ResultRow",
    "RESULT_HEADER",
    "SUMMARY_HEADER",
    "make_run_id",
    "parse_run_id",
    "write_results",
    "read_results",
    "SummaryRow",
    "summarize",
    "write_summary",
]

logger = logging.getLogger(__name__)

RESULT_HEADER = ["run_id", "method", "seed", "round", "r_t", "R_t", "accepted", "batch_size"]
SUMMARY_HEADER = ["method", "cutoff", "alpha", "mean_RT", "stderr", "n_seeds"]


@dataclass
class DatasetSchema:
    """Column roles for a CSV dataset.

    ``numeric`` and ``categorical`` list feature columns; when both are
    empty every non-label column is used, typed by pandas inference.
    ``positive`` turns the label into a 0/1 indicator; otherwise the label
    must be numeric. ``row_norm`` is the covariate bound ``B`` the rows are
    rescaled to. Categorical columns get one indicator per level; with an
    intercept those indicators sum to the intercept column, so set
    ``drop_first`` to omit each column's first level and keep the design
    full rank.
    """

    label: str
    positive: object = None
    numeric: list = field(default_factory=list)
    categorical: list = field(default_factory=list)
    row_norm: float = 1.0
    intercept: bool = True
    drop_first: bool = False


@dataclass
class IngestReport:
    rows_read: int
    rows_dropped: int
    columns: list
    dropped_constant: list
    means: dict
    stds: dict
    scale: float


def load_schema(source) -> DatasetSchema:
    """Schema from a mapping or a YAML/JSON file with the dataclass fields as keys."""
    if not isinstance(source, dict):
        with open(source) as fh:
            source = yaml.safe_load(fh) or {}
    known = {f for f in DatasetSchema.__dataclass_fields__}
    unknown = set(source) - known
    if unknown:
        raise ValueError(f"unknown schema keys: {sorted(unknown)}")
    if "label" not in source:
        raise ValueError("schema needs a 'label' column")
    return DatasetSchema(**source)


def _to_numeric(df, col):
    try:
        return pd.to_numeric(df[col], errors="raise").astype(float)
    except (ValueError, TypeError):
        bad = pd.to_numeric(df[col], errors="coerce").isna()
        pos = int(np.flatnonzero(bad.to_numpy())[0])
        # +2: one header line, 1-based rows
        line = int(df.index[pos]) + 2
        raise ParseError(f"row {line}, column {col!r}: cannot parse {df[col].iloc[pos]!r} as a number") from None


def ingest_csv(path, schema: DatasetSchema):
    """Read a CSV into a design matrix and label vector.

    Rows with missing values are dropped. Categorical columns are one-hot
    encoded (one column per sorted level, minus the first with
    ``drop_first``), numeric columns are
    standardized to zero mean and unit variance, constant columns are
    dropped with a warning, an intercept column is appended and finally all
    rows are scaled by one common factor so the largest row norm equals
    ``schema.row_norm``.

    Returns
    -------
    X : ndarray of shape (n, d)
    y : ndarray of shape (n,)
    report : IngestReport
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, skipinitialspace=True, dtype=str, keep_default_na=True)
    except pd.errors.ParserError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    columns = [schema.label, *schema.numeric, *schema.categorical]
    for col in columns:
        if col not in df.columns:
            raise SchemaMismatch(f"column {col!r} not found in {path.name}")
    rows_read = len(df)
    # blank cells and the UCI "?" marker count as missing
    df = df.replace(r"^\s*\??\s*$", np.nan, regex=True)
    numeric, categorical = list(schema.numeric), list(schema.categorical)
    if not numeric and not categorical:
        for col in df.columns:
            if col == schema.label:
                continue
            present = df[col].dropna()
            if pd.to_numeric(present, errors="coerce").notna().all():
                numeric.append(col)
            else:
                categorical.append(col)
    df = df[[schema.label, *numeric, *categorical]].dropna()
    dropped = rows_read - len(df)
    if dropped:
        logger.info("dropped %d rows with missing values from %s", dropped, path.name)

    if schema.positive is not None:
        y = (df[schema.label].astype(str).str.strip() == str(schema.positive)).to_numpy(dtype=float)
    else:
        y = _to_numeric(df, schema.label).to_numpy()

    blocks, names, means, stds, constant = [], [], {}, {}, []
    for col in numeric:
        v = _to_numeric(df, col).to_numpy()
        mu, sd = float(v.mean()), float(v.std())
        if sd == 0.0:
            constant.append(col)
            continue
        means[col], stds[col] = mu, sd
        blocks.append(((v - mu) / sd)[:, None])
        names.append(col)
    for col in categorical:
        vals = df[col].astype(str).str.strip()
        levels = sorted(vals.unique())
        if len(levels) < 2:
            constant.append(col)
            continue
        if schema.drop_first:
            levels = levels[1:]
        blocks.append(np.stack([(vals == lv).to_numpy(dtype=float) for lv in levels], axis=1))
        names.extend(f"{col}={lv}" for lv in levels)
    if constant:
        warnings.warn(f"dropping constant columns {constant}", stacklevel=2)
    n = len(df)
    if schema.intercept:
        blocks.append(np.ones((n, 1)))
        names.append("intercept")
    X = np.hstack(blocks) if blocks else np.empty((n, 0))
    top = float(np.linalg.norm(X, axis=1).max()) if n else 0.0
    scale = schema.row_norm / top if top > 0 else 1.0
    X = X * scale
    report = IngestReport(rows_read, dropped, names, constant, means, stds, scale)
    return X, y, report


@dataclass
class ResultRow:
    run_id: str
    method: str
    seed: int
    round: int
    r_t: float
    R_t: float
    accepted: int
    batch_size: int


def make_run_id(method: str, alpha, cutoff_pct, seed) -> str:
    a = "" if alpha is None else f"{alpha:g}"
    c = "" if cutoff_pct is None else f"{cutoff_pct:g}"
    return f"{method}|alpha={a}|cut={c}|seed={seed}"


def parse_run_id(run_id: str) -> dict:
    """Inverse of :func:`make_run_id`; missing alpha/cutoff come back as ``None``."""
    parts = run_id.split("|")
    out = {"method": parts[0], "alpha": None, "cutoff": None, "seed": None}
    for part in parts[1:]:
        key, _, val = part.partition("=")
        if key == "alpha":
            out["alpha"] = float(val) if val else None
        elif key == "cut":
            out["cutoff"] = float(val) if val else None
        elif key == "seed":
            out["seed"] = int(val)
    return out


def _g6(x: float) -> str:
    return f"{x:.6g}"


def write_results(rows, path) -> None:
    """Write result rows sorted by ``(run_id, round)`` with 6 significant digits."""
    rows = sorted(rows, key=lambda r: (r.run_id, r.round))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for r in rows:
            w.writerow([r.run_id, r.method, r.seed, r.round, _g6(r.r_t), _g6(r.R_t), r.accepted, r.batch_size])


def read_results(path) -> list:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULT_HEADER:
            raise ParseError(f"{path}: expected header {','.join(RESULT_HEADER)}, got {header}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(RESULT_HEADER):
                raise ParseError(f"{path}: line {lineno} has {len(rec)} fields, expected {len(RESULT_HEADER)}")
            try:
                out.append(ResultRow(rec[0], rec[1], int(rec[2]), int(rec[3]), float(rec[4]), float(rec[5]),
                                     int(rec[6]), int(rec[7])))
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
    return out


@dataclass
class SummaryRow:
    method: str
    cutoff: float | None
    alpha: float | None
    mean_RT: float
    stderr: float
    n_seeds: int


def final_losses(rows) -> dict:
    """Final cumulative loss of every run, keyed by run id."""
    last = {}
    for r in rows:
        if r.run_id not in last or r.round > last[r.run_id].round:
            last[r.run_id] = r
    return {k: v.R_t for k, v in last.items()}


def summarize_cells(rows) -> list:
    """Mean and standard error of final ``R_T`` for every (method, cutoff, alpha)."""
    groups = {}
    for run_id, RT in final_losses(rows).items():
        info = parse_run_id(run_id)
        groups.setdefault((info["method"], info["cutoff"], info["alpha"]), []).append(RT)
    out = []
    for (method, cut, alpha), vals in groups.items():
        v = np.asarray(vals)
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        out.append(SummaryRow(method, cut, alpha, float(v.mean()), se, int(v.size)))
    return out


def _sort_key(value):
    return (value is not None, -math.inf if value is None else value)


def summarize(rows) -> list:
    """Best alpha per (method, cutoff) by smallest mean final loss.

    The standard error uses the sample standard deviation and is 0 for a
    single seed. Ties go to the smaller alpha.
    """
    best = {}
    for cell in sorted(summarize_cells(rows), key=lambda s: (s.method, _sort_key(s.cutoff), _sort_key(s.alpha))):
        key = (cell.method, cell.cutoff)
        if key not in best or cell.mean_RT < best[key].mean_RT:
            best[key] = cell
    return [best[k] for k in sorted(best, key=lambda k: (k[0], _sort_key(k[1])))]


def write_summary(summary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for s in summary:
            w.writerow([
                s.method,
                "" if s.cutoff is None else f"{s.cutoff:g}",
                "" if s.alpha is None else f"{s.alpha:g}",
                _g6(s.mean_RT),
                _g6(s.stderr),
                s.n_seeds,
            ])
