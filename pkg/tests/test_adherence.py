import random

import pytest

from pillcase.adherence import (
    CALIBRATED,
    CORRECT,
    EXCEED,
    INSUFFICIENT,
    REFILL,
    InsufficientDataError,
    Medicine,
    MedicineCatalog,
    Prescription,
    ScanError,
    Session,
    SessionStateError,
    Verdict,
    calibrate_initial,
    compute_doses,
    estimate_unit_weight,
    evaluate,
    process_scan,
)
from pillcase.ndef import TagMemory, WeightReading, write_tag

TYLENOL = Prescription("tylenol", "Tylenol", 4.45, 1)


def tag_with(grams: float) -> TagMemory:
    return write_tag(TagMemory.blank(), WeightReading.from_grams(grams))


def test_compute_doses_reference_cases():
    assert compute_doses(39.6, 35.2, 4.45) == 1
    assert compute_doses(22.4, 13.5, 4.45) == 2
    assert compute_doses(13.5, 22.4, 4.45) == -2
    assert compute_doses(35.2, 35.2, 4.45) == 0


def test_compute_doses_rounds_half_away():
    # drop of exactly half a unit rounds up to one dose
    assert compute_doses(10.0, 9.0, 2.0) == 1
    assert compute_doses(10.0, 7.0, 2.0) == 2  # 1.5 units
    assert compute_doses(10.0, 9.0, 2.1) == 0
    assert compute_doses(9.0, 10.0, 2.0) == -1  # symmetric toward refill


def test_evaluate_matrix():
    rx = Prescription("tylenol", "Tylenol", 4.45, 2)
    assert evaluate(2, rx) == Verdict(CORRECT)
    assert evaluate(1, rx) == Verdict(INSUFFICIENT, 1)
    assert evaluate(0, rx) == Verdict(INSUFFICIENT, 2)
    assert evaluate(3, rx) == Verdict(EXCEED, 1)
    assert evaluate(5, rx) == Verdict(EXCEED, 3)
    assert evaluate(-2, rx) == Verdict(REFILL)


def test_verdict_trichotomy():
    # exactly one verdict kind for every integer dose count
    for rec in (1, 2, 3, 4):
        rx = Prescription("tylenol", "Tylenol", 4.45, rec)
        for doses in range(-10, 11):
            v = evaluate(doses, rx)
            assert v.kind in (CORRECT, INSUFFICIENT, EXCEED, REFILL)
            assert (v.kind == CORRECT) == (doses == rec)
            assert (v.kind == REFILL) == (doses < 0)
            if v.kind in (INSUFFICIENT, EXCEED):
                assert v.count == abs(doses - rec) >= 1


def test_verdict_messages_wording():
    assert Verdict(INSUFFICIENT, 1).message == "Taking 1 less than what should"
    assert Verdict(EXCEED, 1).message == "Taking 1 more than what should"
    assert Verdict(EXCEED, 3).message == "Taking 3 more than what should"
    assert Verdict(CORRECT).message == "Correct amount taken"
    assert Verdict(REFILL).message == "Refill detected"
    assert Verdict(CALIBRATED).message == "Initial weight calibrated"
    with pytest.raises(ValueError):
        Verdict(INSUFFICIENT, 0)


def test_scan_flow_against_tag():
    session = calibrate_initial(tag_with(39.6))
    assert session.calibrated and session.previous_weight == 39.6
    result, session = process_scan(tag_with(35.2), session, TYLENOL, now=10.0)
    assert result.doses_taken == 1
    assert result.verdict == Verdict(CORRECT)
    assert result.previous_weight == 39.6
    assert result.current_weight == 35.2
    assert session.previous_weight == 35.2
    # refill: weight goes back up
    result, session = process_scan(tag_with(44.1), session, TYLENOL, now=20.0)
    assert result.doses_taken == -2
    assert result.verdict.kind == REFILL
    assert session.previous_weight == 44.1


def test_scan_before_calibration_rejected():
    with pytest.raises(SessionStateError):
        process_scan(tag_with(39.6), Session(), TYLENOL, now=0.0)


def test_scan_unreadable_tag_is_scan_error():
    session = Session(previous_weight=39.6)
    with pytest.raises(ScanError):
        process_scan(TagMemory.blank(), session, TYLENOL, now=0.0)
    corrupt = TagMemory.blank().with_block(4, b"\x03\x0c" + b"\x00" * 14)
    with pytest.raises(ScanError):
        process_scan(corrupt, session, TYLENOL, now=0.0)
    with pytest.raises(ScanError):
        calibrate_initial(TagMemory.blank())
    # the session value is untouched by a failed scan
    assert session.previous_weight == 39.6


def test_process_scan_is_pure():
    session = Session(previous_weight=39.6)
    tag = tag_with(35.2)
    r1, s1 = process_scan(tag, session, TYLENOL, now=1.0)
    r2, s2 = process_scan(tag, session, TYLENOL, now=1.0)
    assert r1 == r2 and s1 == s2
    assert session.previous_weight == 39.6


def test_estimate_unit_weight_removal_series():
    series = [39.6, 35.2, 30.7, 26.2, 21.7, 17.2, 12.8, 8.3, 3.9, -0.5]
    est = estimate_unit_weight(series)
    assert est == 4.46  # 40.1 g over 9 removals
    assert 4.40 <= est <= 4.50
    series2 = [40.2, 35.7, 31.3, 26.9, 22.4, 17.9, 13.5, 9.0, 4.5, 0.0]
    assert 4.40 <= estimate_unit_weight(series2) <= 4.50


def test_estimate_unit_weight_multi_pill_steps():
    # 8.8 g lost per step, two pills per step: 4.4 g a pill
    assert estimate_unit_weight([20.0, 11.2, 2.4], pills_removed_per_step=2) == 4.4


def test_estimate_unit_weight_needs_two_points():
    with pytest.raises(InsufficientDataError):
        estimate_unit_weight([39.6])
    with pytest.raises(InsufficientDataError):
        estimate_unit_weight([])
    with pytest.raises(ValueError):
        estimate_unit_weight([2.0, 1.0], pills_removed_per_step=0)


def test_doses_exact_when_delta_error_under_half_unit():
    rng = random.Random(11)
    for _ in range(500):
        uw = rng.uniform(0.5, 10.0)
        true_doses = rng.randint(-3, 6)
        prev = rng.uniform(30.0, 90.0)
        curr = prev - true_doses * uw
        err = rng.uniform(-0.49, 0.49) * uw  # strictly inside half a unit
        assert compute_doses(prev, curr - err, uw) == true_doses


def test_doses_exact_when_each_reading_off_under_quarter_unit():
    rng = random.Random(12)
    for _ in range(500):
        uw = rng.uniform(0.5, 10.0)
        true_doses = rng.randint(0, 6)
        prev = rng.uniform(30.0, 90.0)
        curr = prev - true_doses * uw
        e1 = rng.uniform(-0.245, 0.245) * uw
        e2 = rng.uniform(-0.245, 0.245) * uw
        assert compute_doses(prev + e1, curr + e2, uw) == true_doses


def test_quarter_unit_bound_is_tight():
    # +0.4u then -0.4u reading errors push the delta error past half a unit
    assert compute_doses(10.0 + 0.4, 9.0 - 0.4, 1.0) == 2  # truth was 1


def test_catalog_defaults_and_validation():
    cat = MedicineCatalog.default()
    tylenol = cat.get("tylenol")
    assert tylenol.name == "Tylenol" and tylenol.unit_weight == 4.45
    assert "tylenol" in cat
    cat.add(Medicine("ibuprofen", "Ibuprofen", 0.4))
    assert {m.medicine_id for m in cat} == {"tylenol", "ibuprofen"}
    with pytest.raises(ValueError):
        cat.add(Medicine("tylenol", "Other", 1.0))
    with pytest.raises(KeyError):
        cat.get("aspirin")
    with pytest.raises(ValueError):
        Medicine("x", "X", 0.0)


def test_prescription_from_catalog():
    rx = Prescription.from_catalog(MedicineCatalog.default(), "tylenol", 2)
    assert rx.medicine_name == "Tylenol"
    assert rx.unit_weight == 4.45
    assert rx.schedule == ("08:00", "20:00")
    with pytest.raises(ValueError):
        Prescription("tylenol", "Tylenol", 4.45, 0)
