"""
Patient-level data model for survchart.

Handles CSV ingestion/validation of survival datasets, CSV serialization
and per-unit Poisson arrival rate estimation.
"""
import csv
import io
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Optional

import numpy as np

from .exceptions import DataValidationError

logger = logging.getLogger(__name__)

DEFAULT_UNIT = '1'
MAX_REPORTED_ERRORS = 20


# =============================================================================
# Schema & Records
# =============================================================================

@dataclass(frozen=True)
class Schema:
    """
    Column-name map used when reading a dataset CSV.

    covariates:
        - () (default): no covariate columns are read
        - tuple of names: exactly these columns become covariates
        - None: every column that is not one of the four reserved columns
    """
    entrytime: str = 'entrytime'
    survtime: str = 'survtime'
    censorid: str = 'censorid'
    unit: str = 'unit'
    covariates: Optional[tuple] = ()

    @property
    def reserved(self):
        return (self.entrytime, self.survtime, self.censorid, self.unit)


@dataclass(frozen=True)
class PatientRecord:
    """One subject: entry time S_i, follow-up X_i, event flag and covariates Z_i."""
    entrytime: float
    survtime: float
    censorid: int = 1
    unit: str = DEFAULT_UNIT
    covariates: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.entrytime):
            raise DataValidationError(f"entrytime must be finite, got {self.entrytime!r}")
        if not math.isfinite(self.survtime) or self.survtime < 0:
            raise DataValidationError(f"survtime must be finite and >= 0, got {self.survtime!r}")
        if self.censorid not in (0, 1):
            raise DataValidationError(f"censorid must be 0 or 1, got {self.censorid!r}")

    @property
    def chronotime(self):
        """Chronological failure/censoring time T_i = S_i + X_i."""
        return self.entrytime + self.survtime


def unit_sort_key(label):
    """Numeric-looking unit labels sort numerically, everything else after them."""
    try:
        return (0, float(label), str(label))
    except (TypeError, ValueError):
        return (1, 0.0, str(label))


@dataclass(frozen=True)
class Dataset:
    """Immutable, ordered collection of PatientRecord sharing one covariate set."""
    records: tuple = ()
    covariate_names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'records', tuple(self.records))
        object.__setattr__(self, 'covariate_names', tuple(self.covariate_names))
        expected = set(self.covariate_names)
        for index, record in enumerate(self.records):
            if set(record.covariates) != expected:
                raise DataValidationError(
                    f"Record {index} carries covariates {sorted(record.covariates)}, "
                    f"expected {sorted(expected)}"
                )

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __bool__(self):
        return bool(self.records)

    # -- column views ---------------------------------------------------------

    @cached_property
    def entrytimes(self):
        return np.array([r.entrytime for r in self.records], dtype=float)

    @cached_property
    def survtimes(self):
        return np.array([r.survtime for r in self.records], dtype=float)

    @cached_property
    def censorids(self):
        return np.array([r.censorid for r in self.records], dtype=int)

    def covariate_matrix(self, names):
        """Return the (n, len(names)) covariate matrix in the order of ``names``."""
        names = tuple(names)
        missing = [name for name in names if name not in self.covariate_names]
        if missing:
            raise DataValidationError(f"Covariate(s) not present in data: {', '.join(missing)}")
        if not names:
            return np.zeros((len(self.records), 0))
        return np.array([[r.covariates[name] for name in names] for r in self.records], dtype=float)

    def outcomes(self, followup):
        """Dichotomized outcome: 1 iff the event is observed within ``followup``."""
        return ((self.survtimes <= followup) & (self.censorids == 1)).astype(int)

    @property
    def min_entrytime(self):
        return float(self.entrytimes.min()) if self.records else 0.0

    @property
    def max_entrytime(self):
        return float(self.entrytimes.max()) if self.records else 0.0

    # -- subsetting -----------------------------------------------------------

    def units(self):
        return sorted({r.unit for r in self.records}, key=unit_sort_key)

    def filter(self, predicate: Callable[[PatientRecord], bool]):
        return Dataset(tuple(r for r in self.records if predicate(r)), self.covariate_names)

    def for_unit(self, unit):
        unit = str(unit)
        return self.filter(lambda r: r.unit == unit)

    def where_entry(self, lower=None, upper=None):
        """Records with lower <= entrytime < upper (either bound optional)."""
        def keep(record):
            if lower is not None and record.entrytime < lower:
                return False
            if upper is not None and record.entrytime >= upper:
                return False
            return True
        return self.filter(keep)

    def sorted_by_entry(self):
        """Stable sort by entry time (ties keep input order)."""
        order = np.argsort(self.entrytimes, kind='stable')
        return Dataset(tuple(self.records[i] for i in order), self.covariate_names)

    def select_covariates(self, names):
        names = tuple(names)
        self.covariate_matrix(names)
        records = tuple(
            PatientRecord(r.entrytime, r.survtime, r.censorid, r.unit,
                          {name: r.covariates[name] for name in names})
            for r in self.records
        )
        return Dataset(records, names)


# =============================================================================
# CSV Import / Export
# =============================================================================

def _read_text(source):
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif hasattr(source, 'read'):
        raw = source.read()
    else:
        with open(source, 'rb') as handle:
            raw = handle.read()
    if isinstance(raw, str):
        return raw
    try:
        return raw.decode('utf-8-sig')
    except UnicodeDecodeError as exc:
        raise DataValidationError(f"Dataset is not valid UTF-8: {exc}") from exc


def _parse_number(raw, column):
    text = (raw or '').strip()
    if not text:
        raise ValueError(f"missing value in column '{column}'")
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"non-numeric value {text!r} in column '{column}'") from None
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r} in column '{column}'")
    return value


def parse_dataset(source, schema: Optional[Schema] = None):
    """
    Parse a UTF-8 CSV dataset.

    Args:
        source: bytes, a binary/text file object or a path
        schema: Column mapping (defaults to the reference column names)

    Returns:
        Dataset. censorid is filled with 1 when the column is absent and the
        unit defaults to a single implicit unit.

    Raises:
        DataValidationError listing every offending row.
    """
    schema = schema or Schema()
    reader = csv.DictReader(io.StringIO(_read_text(source)))
    header = reader.fieldnames or []

    for required in (schema.entrytime, schema.survtime):
        if required not in header:
            raise DataValidationError(f"Required column '{required}' is missing")

    if schema.covariates is None:
        covariate_names = tuple(c for c in header if c not in schema.reserved)
    else:
        covariate_names = tuple(schema.covariates)
        missing = [c for c in covariate_names if c not in header]
        if missing:
            raise DataValidationError(f"Covariate column(s) missing: {', '.join(missing)}")

    has_censorid = schema.censorid in header
    has_unit = schema.unit in header

    records = []
    errors = []
    bad_rows = []
    for row_num, row in enumerate(reader, start=2):
        try:
            entrytime = _parse_number(row.get(schema.entrytime), schema.entrytime)
            survtime = _parse_number(row.get(schema.survtime), schema.survtime)
            if survtime < 0:
                raise ValueError(f"negative survtime {survtime!r}")
            censorid = 1
            if has_censorid:
                flag = _parse_number(row.get(schema.censorid), schema.censorid)
                if flag not in (0.0, 1.0):
                    raise ValueError(f"censorid must be 0 or 1, got {flag!r}")
                censorid = int(flag)
            unit = (row.get(schema.unit) or '').strip() if has_unit else DEFAULT_UNIT
            if not unit:
                raise ValueError(f"missing value in column '{schema.unit}'")
            covariates = {name: _parse_number(row.get(name), name) for name in covariate_names}
            records.append(PatientRecord(entrytime, survtime, censorid, unit, covariates))
        except ValueError as e:
            errors.append(f"Row {row_num}: {e}")
            bad_rows.append(row_num)

    if errors:
        shown = '; '.join(errors[:MAX_REPORTED_ERRORS])
        more = f" (+{len(errors) - MAX_REPORTED_ERRORS} more)" if len(errors) > MAX_REPORTED_ERRORS else ''
        raise DataValidationError(f"Invalid dataset: {shown}{more}", rows=bad_rows)

    logger.debug("Parsed %d records with covariates %s", len(records), covariate_names)
    return Dataset(tuple(records), covariate_names)


def load_dataset(path, schema: Optional[Schema] = None):
    with open(path, 'rb') as handle:
        return parse_dataset(handle, schema)


def serialize_dataset(data: Dataset, stream=None):
    """
    Write ``data`` as CSV (entrytime,survtime,censorid,unit,<covariates>).

    Floats use their shortest round-trip repr so parse(serialize(d)) == d.
    Returns the CSV text; also writes it to ``stream`` when given.
    """
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(['entrytime', 'survtime', 'censorid', 'unit', *data.covariate_names])
    for r in data.records:
        writer.writerow([
            repr(float(r.entrytime)),
            repr(float(r.survtime)),
            r.censorid,
            r.unit,
            *(repr(float(r.covariates[name])) for name in data.covariate_names),
        ])
    text = output.getvalue()
    if stream is not None:
        stream.write(text)
    return text


# =============================================================================
# Arrival Rates
# =============================================================================

@dataclass(frozen=True)
class ArrivalEstimate:
    """Estimated homogeneous Poisson arrival rate of one unit."""
    unit: str
    psi_hat: float
    n: int
    span: float


def _unit_estimates(data: Dataset):
    """(estimates, undefined unit labels) over every unit of the dataset."""
    estimates = []
    undefined = []
    for unit in data.units():
        entries = data.for_unit(unit).entrytimes
        span = float(entries.max() - entries.min())
        if len(np.unique(entries)) < 2 or span <= 0:
            undefined.append(unit)
            continue
        estimates.append(ArrivalEstimate(unit, len(entries) / span, len(entries), span))
    return estimates, undefined


def _undefined_message(undefined):
    return (
        f"undefined arrival span for unit(s) {', '.join(undefined)}: "
        "need at least two distinct entry times"
    )


def arrival_rate(data: Dataset):
    """
    Per-unit arrival rate psi_hat = n / (max entrytime - min entrytime).

    Returns:
        list of ArrivalEstimate sorted ascending by psi_hat.

    Raises:
        DataValidationError ("undefined arrival span") for units with fewer
        than two distinct entry times.
    """
    estimates, undefined = _unit_estimates(data)
    if undefined:
        raise DataValidationError(_undefined_message(undefined))
    return sorted(estimates, key=lambda e: (e.psi_hat, unit_sort_key(e.unit)))


def pooled_arrival_rate(data: Dataset):
    """
    Mean of the per-unit arrival rates (the rate of an average unit).

    Units with an undefined span are left out of the mean with a warning.

    Raises:
        DataValidationError: no unit has a defined span
    """
    estimates, undefined = _unit_estimates(data)
    if not estimates:
        raise DataValidationError(_undefined_message(undefined))
    if undefined:
        logger.warning("Pooled arrival rate skips %s", _undefined_message(undefined))
    return float(np.mean([e.psi_hat for e in estimates]))
