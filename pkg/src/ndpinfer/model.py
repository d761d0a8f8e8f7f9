"""Model configuration, observation data model, and ingestion formats.

The data model is deliberately small:

* :class:`ModelConfig` -- the hyperparameters (kappa, eps, base vector p
  over L states, optional numeric values attached to the states).
* :class:`ObservationArray` -- a jagged array of categorical observations,
  reduced at construction to per-row count vectors.  All inference paths
  depend on the data only through these counts, so raw label sequences are
  retained merely as optional provenance.

Ingestion formats (documented in the README, all UTF-8, ``.`` decimal
separator, no locale-dependent parsing):

* observations CSV -- header ``row_id,label``, one observation per line;
* rows JSON -- ``{"rows": [[...], ...]}``;
* counts CSV -- header ``row_id,count_0,...,count_{L-1}``.

Rows with zero observations are legal: their marginal likelihood is one
and their simulated row distribution is drawn from the conditional prior.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .dirichlet import check_simplex
from .errors import ValidationError


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of the nested model on a finite state space.

    ``kappa`` is the column (row-clustering) concentration, ``eps`` the row
    concentration, and ``base`` the strictly positive base probability
    vector p of length L.  ``state_values`` optionally attaches a strictly
    increasing numeric value to each state label; it defaults to the labels
    ``0..L-1`` themselves and feeds the mean-score functionals.
    """

    kappa: float
    eps: float
    base: tuple[float, ...]
    state_values: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise ValidationError(f"kappa must be a positive real, got {self.kappa!r}")
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ValidationError(f"eps must be a positive real, got {self.eps!r}")
        base = check_simplex(self.base, strict_positive=True)
        object.__setattr__(self, "base", tuple(float(b) for b in base))
        if self.state_values is not None:
            sv = np.asarray(self.state_values, dtype=float)
            if sv.size != base.size:
                raise ValidationError(
                    f"state_values has length {sv.size}, expected {base.size}"
                )
            if np.any(np.diff(sv) <= 0):
                raise ValidationError("state_values must be strictly increasing")
            object.__setattr__(self, "state_values", tuple(float(v) for v in sv))

    @property
    def L(self) -> int:
        return len(self.base)

    @property
    def base_array(self) -> np.ndarray:
        return np.asarray(self.base, dtype=float)

    @property
    def values_array(self) -> np.ndarray:
        """Numeric state values as an array; defaults to 0..L-1."""
        if self.state_values is None:
            return np.arange(self.L, dtype=float)
        return np.asarray(self.state_values, dtype=float)

    def to_dict(self) -> dict:
        d = {"kappa": self.kappa, "eps": self.eps, "base": list(self.base)}
        if self.state_values is not None:
            d["state_values"] = list(self.state_values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        from .gamer import GamerParams, discretize

        try:
            if "gamer" in d:
                g = d["gamer"]
                base = discretize(GamerParams(g["r"], g["c"], g["alpha"]), int(g["L"]))
            else:
                base = d["base"]
            return cls(
                kappa=float(d["kappa"]),
                eps=float(d["eps"]),
                base=tuple(np.asarray(base, dtype=float)),
                state_values=tuple(d["state_values"]) if "state_values" in d else None,
            )
        except KeyError as exc:
            raise ValidationError(f"config is missing key {exc}") from None


@dataclass(frozen=True)
class ObservationArray:
    """M rows of categorical observations, reduced to count vectors.

    ``counts`` is an (M, L) nonnegative integer array; ``rows`` optionally
    keeps the raw label sequences (order inside a row carries no
    information and is discarded by every computation).
    """

    counts: np.ndarray
    rows: tuple[tuple[int, ...], ...] | None = None
    row_ids: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2:
            raise ValidationError(f"counts must be a 2-d array, got shape {c.shape}")
        if c.shape[1] < 2:
            raise ValidationError("counts must have at least 2 state columns")
        if not np.issubdtype(c.dtype, np.integer):
            ci = c.astype(np.int64)
            if np.any(ci != c):
                raise ValidationError("counts must be integers")
            c = ci
        if np.any(c < 0):
            raise ValidationError("counts must be nonnegative")
        c = np.ascontiguousarray(c, dtype=np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        if self.rows is not None:
            if len(self.rows) != c.shape[0]:
                raise ValidationError("rows and counts disagree on the number of rows")
            for m, row in enumerate(self.rows):
                tally = np.bincount(np.asarray(row, dtype=np.int64), minlength=c.shape[1])
                if not np.array_equal(tally, c[m]):
                    raise ValidationError(f"counts[{m}] does not tally rows[{m}]")
        if self.row_ids is not None and len(self.row_ids) != c.shape[0]:
            raise ValidationError("row_ids and counts disagree on the number of rows")

    @property
    def M(self) -> int:
        return int(self.counts.shape[0])

    @property
    def L(self) -> int:
        return int(self.counts.shape[1])

    @property
    def row_lengths(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @classmethod
    def empty(cls, L: int) -> "ObservationArray":
        """An array with zero rows (prior-only inference)."""
        return cls(counts=np.zeros((0, L), dtype=np.int64))


def validate_and_count(raw_rows, L: int) -> ObservationArray:
    """Validate raw label sequences and derive the count matrix.

    Every label must lie in [0, L); violations are reported with their row
    and position.  An array with no rows is rejected here (use
    :meth:`ObservationArray.empty` deliberately if prior-only inference is
    wanted).  A row may be empty.
    """
    if L < 2:
        raise ValidationError(f"L must be at least 2, got {L}")
    rows = [tuple(int(x) for x in row) for row in raw_rows]
    if len(rows) == 0:
        raise ValidationError("observation array has no rows")
    counts = np.zeros((len(rows), L), dtype=np.int64)
    for m, row in enumerate(rows):
        for n, label in enumerate(row):
            if not (0 <= label < L):
                raise ValidationError(
                    f"label {label} at row {m + 1}, position {n + 1} is outside [0, {L})"
                )
            counts[m, label] += 1
    return ObservationArray(counts=counts, rows=tuple(rows))


def bin_continuous(values, edges) -> ObservationArray:
    """Map real-valued observations to cells of a breakpoint partition.

    ``edges`` are strictly increasing breakpoints defining
    L = len(edges) + 1 half-open cells (-inf, e_0), [e_0, e_1), ...,
    [e_{L-2}, +inf); a value equal to a breakpoint goes to the cell on its
    right.  Empty rows are permitted.
    """
    e = np.asarray(edges, dtype=float)
    if e.ndim != 1 or e.size < 1:
        raise ValidationError("edges must be a 1-d sequence of breakpoints")
    if np.any(np.diff(e) <= 0):
        raise ValidationError("edges must be strictly increasing")
    L = e.size + 1
    rows = []
    for row in values:
        labels = np.searchsorted(e, np.asarray(row, dtype=float), side="right")
        rows.append(tuple(int(x) for x in labels))
    if len(rows) == 0:
        raise ValidationError("observation array has no rows")
    counts = np.zeros((len(rows), L), dtype=np.int64)
    for m, row in enumerate(rows):
        for label in row:
            counts[m, label] += 1
    return ObservationArray(counts=counts, rows=tuple(rows))


# ---------------------------------------------------------------------------
# Ingestion formats
# ---------------------------------------------------------------------------


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    with open(source, "r", encoding="utf-8", newline="") as fh:
        return fh.read()


def load_observations_csv(source, L: int) -> ObservationArray:
    """Observations CSV: header ``row_id,label``, one observation per line.

    Rows appear in order of first occurrence of their ``row_id``.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["row_id", "label"]:
        raise ValidationError("observations CSV must start with header 'row_id,label'")
    order: list[str] = []
    by_id: dict[str, list[int]] = {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != 2:
            raise ValidationError(f"line {lineno}: expected 2 fields, got {len(rec)}")
        rid, label = rec[0].strip(), rec[1].strip()
        if rid not in by_id:
            by_id[rid] = []
            order.append(rid)
        try:
            by_id[rid].append(int(label))
        except ValueError:
            raise ValidationError(f"line {lineno}: label {label!r} is not an integer") from None
    arr = validate_and_count([by_id[r] for r in order], L)
    return ObservationArray(counts=arr.counts, rows=arr.rows, row_ids=tuple(order))


def load_observations_json(source, L: int) -> ObservationArray:
    """Rows JSON: ``{"rows": [[...], ...]}`` with integer labels."""
    text = _read_text(source)
    obj = json.loads(text)
    if not isinstance(obj, dict) or "rows" not in obj:
        raise ValidationError("rows JSON must be an object with a 'rows' key")
    return validate_and_count(obj["rows"], L)


def load_counts_csv(source, L: int | None = None) -> ObservationArray:
    """Counts CSV: header ``row_id,count_0,...,count_{L-1}``."""
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or header[0].strip() != "row_id":
        raise ValidationError("counts CSV must start with header 'row_id,count_0,...'")
    ncols = len(header) - 1
    expected = ["count_%d" % l for l in range(ncols)]
    if [h.strip() for h in header[1:]] != expected:
        raise ValidationError("counts CSV header columns must be count_0..count_{L-1}")
    if L is not None and ncols != L:
        raise ValidationError(f"counts CSV has {ncols} state columns, expected {L}")
    ids, rows = [], []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != ncols + 1:
            raise ValidationError(f"line {lineno}: expected {ncols + 1} fields, got {len(rec)}")
        ids.append(rec[0].strip())
        try:
            rows.append([int(x) for x in rec[1:]])
        except ValueError:
            raise ValidationError(f"line {lineno}: counts must be integers") from None
    if not rows:
        raise ValidationError("counts CSV has no data rows")
    return ObservationArray(counts=np.asarray(rows, dtype=np.int64), row_ids=tuple(ids))


def dump_counts_csv(data: ObservationArray) -> str:
    """Render an ObservationArray in the counts-CSV format."""
    lines = ["row_id," + ",".join("count_%d" % l for l in range(data.L))]
    ids = data.row_ids or tuple(str(m + 1) for m in range(data.M))
    for m in range(data.M):
        lines.append(ids[m] + "," + ",".join(str(int(c)) for c in data.counts[m]))
    return "\n".join(lines) + "\n"
