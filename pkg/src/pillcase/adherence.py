"""Dose inference from successive tag weights.

The phone-side logic: it never sees pill counts, only the weight the case
last wrote to its tag.  Doses taken between two scans are the weight drop
divided by the medicine's unit weight, rounded to the nearest integer
(half away from zero).  A negative count means weight was added: a refill.

Scanning is pure: `process_scan` returns the result together with the next
session state and mutates nothing, so callers can make the commit atomic
with their own bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ndef import NdefError, TagMemory, read_tag, round_half_away_from_zero

CORRECT = "correct"
INSUFFICIENT = "insufficient"
EXCEED = "exceed"
REFILL = "refill"
CALIBRATED = "calibrated"  # not an evaluate() outcome; marks baseline scans


class AdherenceError(Exception):
    code = "adherence"


class ScanError(AdherenceError):
    """Tag unreadable at scan time (empty or corrupt)."""

    code = "scan-failed"


class SessionStateError(AdherenceError):
    code = "uncalibrated"


class InsufficientDataError(AdherenceError):
    code = "insufficient-data"


@dataclass(frozen=True)
class Verdict:
    kind: str
    count: int = 0  # pills off prescription; meaningful for insufficient/exceed

    def __post_init__(self):
        if self.kind in (INSUFFICIENT, EXCEED) and self.count < 1:
            raise ValueError(f"{self.kind} verdict needs a count >= 1")

    @property
    def message(self) -> str:
        if self.kind == CORRECT:
            return "Correct amount taken"
        if self.kind == INSUFFICIENT:
            return f"Taking {self.count} less than what should"
        if self.kind == EXCEED:
            return f"Taking {self.count} more than what should"
        if self.kind == REFILL:
            return "Refill detected"
        if self.kind == CALIBRATED:
            return "Initial weight calibrated"
        return self.kind


@dataclass(frozen=True)
class Medicine:
    medicine_id: str
    name: str
    unit_weight: float  # grams per pill

    def __post_init__(self):
        if not self.medicine_id:
            raise ValueError("medicine_id must be nonempty")
        if self.unit_weight <= 0:
            raise ValueError("unit_weight must be > 0")


class MedicineCatalog:
    def __init__(self, medicines=()):
        self._by_id: dict[str, Medicine] = {}
        for m in medicines:
            self.add(m)

    @classmethod
    def default(cls) -> "MedicineCatalog":
        return cls([Medicine("tylenol", "Tylenol", 4.45)])

    def add(self, medicine: Medicine):
        if medicine.medicine_id in self._by_id:
            raise ValueError(f"duplicate medicine id {medicine.medicine_id!r}")
        self._by_id[medicine.medicine_id] = medicine

    def get(self, medicine_id: str) -> Medicine:
        try:
            return self._by_id[medicine_id]
        except KeyError:
            raise KeyError(f"unknown medicine {medicine_id!r}") from None

    def __contains__(self, medicine_id: str) -> bool:
        return medicine_id in self._by_id

    def __iter__(self):
        return iter(self._by_id.values())


@dataclass(frozen=True)
class Prescription:
    medicine_id: str
    medicine_name: str
    unit_weight: float
    recommended_dose: int
    schedule: tuple[str, ...] = ("08:00", "20:00")

    def __post_init__(self):
        if self.unit_weight <= 0:
            raise ValueError("unit_weight must be > 0")
        if self.recommended_dose < 1:
            raise ValueError("recommended_dose must be >= 1")

    @classmethod
    def from_catalog(
        cls, catalog: MedicineCatalog, medicine_id: str, recommended_dose: int, schedule=None
    ) -> "Prescription":
        m = catalog.get(medicine_id)
        return cls(
            m.medicine_id,
            m.name,
            m.unit_weight,
            recommended_dose,
            tuple(schedule) if schedule else ("08:00", "20:00"),
        )


@dataclass(frozen=True)
class Session:
    """Per-device scan state; previous_weight None until calibrated."""

    previous_weight: float | None = None

    @property
    def calibrated(self) -> bool:
        return self.previous_weight is not None


@dataclass(frozen=True)
class ScanResult:
    timestamp: float
    previous_weight: float
    current_weight: float
    doses_taken: int
    verdict: Verdict


def compute_doses(previous_weight: float, current_weight: float, unit_weight: float) -> int:
    if unit_weight <= 0:
        raise ValueError("unit_weight must be > 0")
    return round_half_away_from_zero((previous_weight - current_weight) / unit_weight)


def evaluate(doses_taken: int, prescription: Prescription) -> Verdict:
    rec = prescription.recommended_dose
    if doses_taken < 0:
        return Verdict(REFILL)
    if doses_taken == rec:
        return Verdict(CORRECT)
    if doses_taken < rec:
        return Verdict(INSUFFICIENT, rec - doses_taken)
    return Verdict(EXCEED, doses_taken - rec)


def _read_weight(tag: TagMemory) -> float:
    try:
        return read_tag(tag).grams
    except NdefError as e:
        raise ScanError(f"tag unreadable: {e}") from e


def calibrate_initial(tag: TagMemory) -> Session:
    """First scan: record the baseline weight, judge nothing."""
    return Session(previous_weight=_read_weight(tag))


def process_scan(
    tag: TagMemory, session: Session, prescription: Prescription, now: float
) -> tuple[ScanResult, Session]:
    if not session.calibrated:
        raise SessionStateError("scan before initial calibration")
    current = _read_weight(tag)
    doses = compute_doses(session.previous_weight, current, prescription.unit_weight)
    verdict = evaluate(doses, prescription)
    result = ScanResult(now, session.previous_weight, current, doses, verdict)
    return result, Session(previous_weight=current)


def estimate_unit_weight(weights, pills_removed_per_step: int = 1) -> float:
    """Mean drop per pill over a removal series, rounded to 2 decimals."""
    weights = list(weights)
    if len(weights) < 2:
        raise InsufficientDataError("need at least two readings")
    if pills_removed_per_step < 1:
        raise ValueError("pills_removed_per_step must be >= 1")
    steps = len(weights) - 1
    mean_drop = (weights[0] - weights[-1]) / (steps * pills_removed_per_step)
    return round_half_away_from_zero(mean_drop * 100.0) / 100.0
