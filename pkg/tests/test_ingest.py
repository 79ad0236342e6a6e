import io
import random

import pytest

from wavemine.abstraction import bmi_feature
from wavemine.errors import (
    CellConflictError,
    CohortParseError,
    CohortValidationError,
)
from wavemine.ingest import (
    PatientRecord,
    RawCohort,
    SurvivalOutcome,
    carry_forward,
    parse_cohort,
    parse_outcomes,
    write_cohort_csv,
    write_outcomes_csv,
)

SPECS = [bmi_feature()]


def _parse(cohort_csv, outcome_csv, **kwargs):
    outcomes = parse_outcomes(io.StringIO(outcome_csv))
    return parse_cohort(io.StringIO(cohort_csv), SPECS, outcomes, **kwargs)


def test_empty_data_section_gives_zero_patients():
    cohort = _parse("patient_id,wave,feature,value\n", "patient_id,time,event\n")
    assert cohort.patients == ()


def test_single_patient_three_waves():
    cohort = _parse(
        "patient_id,wave,feature,value\n"
        "p1,1,bmi,26.1\n"
        "p1,2,bmi,27.3\n"
        "p1,3,bmi,31.0\n",
        "patient_id,time,event\np1,3,1\n",
    )
    assert len(cohort.patients) == 1
    record = cohort.patients[0]
    assert record.values["bmi"] == {1: 26.1, 2: 27.3, 3: 31.0}
    assert record.outcome == SurvivalOutcome(time=3.0, event=True)


def test_unknown_feature_rejected_by_name():
    with pytest.raises(CohortValidationError, match="xyz"):
        _parse(
            "patient_id,wave,feature,value\np1,1,xyz,4\n",
            "patient_id,time,event\np1,2,0\n",
        )


def test_duplicate_cell_conflict():
    with pytest.raises(CellConflictError):
        _parse(
            "patient_id,wave,feature,value\np1,1,bmi,22\np1,1,bmi,23\n",
            "patient_id,time,event\np1,2,0\n",
        )


def test_missing_outcome_is_validation_error():
    with pytest.raises(CohortValidationError, match="p1"):
        _parse("patient_id,wave,feature,value\np1,1,bmi,22\n", "patient_id,time,event\n")


def test_malformed_row_reports_line_number():
    with pytest.raises(CohortParseError, match="line 3"):
        _parse(
            "patient_id,wave,feature,value\np1,1,bmi,22\np1,x,bmi,23\n",
            "patient_id,time,event\np1,2,0\n",
        )


def test_bad_header_rejected():
    with pytest.raises(CohortParseError):
        _parse("id,wave,feature,value\n", "patient_id,time,event\n")
    with pytest.raises(CohortParseError):
        parse_outcomes(io.StringIO("patient,time,event\n"))


def test_outcome_patient_without_rows_is_kept():
    cohort = _parse("patient_id,wave,feature,value\n", "patient_id,time,event\np9,4,0\n")
    assert [p.patient_id for p in cohort.patients] == ["p9"]
    assert cohort.patients[0].values == {}


def _cohort_one(values, time=4.0, event=False, wave_count=4):
    record = PatientRecord(
        patient_id="p1", values={"bmi": values}, outcome=SurvivalOutcome(time, event)
    )
    return RawCohort(wave_count=wave_count, features=tuple(SPECS), patients=(record,))


def test_carry_forward_fills_until_new_value():
    cohort = carry_forward(_cohort_one({1: 26.1, 3: 31.0}))
    assert cohort.patients[0].values["bmi"] == {1: 26.1, 2: 26.1, 3: 31.0, 4: 31.0}


def test_carry_forward_identity_on_fully_observed():
    values = {1: 20.0, 2: 21.0, 3: 22.0, 4: 23.0}
    cohort = carry_forward(_cohort_one(dict(values)))
    assert cohort.patients[0].values["bmi"] == values


def test_carry_forward_never_backfills():
    cohort = carry_forward(_cohort_one({3: 31.0}))
    assert cohort.patients[0].values["bmi"] == {3: 31.0, 4: 31.0}


def test_carry_forward_unobserved_feature_stays_missing():
    record = PatientRecord("p1", {}, SurvivalOutcome(4.0, False))
    cohort = RawCohort(4, tuple(SPECS), (record,))
    assert carry_forward(cohort).patients[0].values == {}


def test_carry_forward_clips_at_outcome_wave():
    cohort = carry_forward(_cohort_one({1: 26.1}, time=2.0, event=True, wave_count=4))
    assert cohort.patients[0].values["bmi"] == {1: 26.1, 2: 26.1}
    full = carry_forward(
        _cohort_one({1: 26.1}, time=2.0, event=True, wave_count=4), clip_to_outcome=False
    )
    assert full.patients[0].values["bmi"] == {1: 26.1, 2: 26.1, 3: 26.1, 4: 26.1}


def test_carry_forward_idempotent_and_preserves_observed():
    rng = random.Random(42)
    for _ in range(300):
        waves = rng.randint(1, 8)
        observed = {
            w: round(rng.uniform(15, 40), 2)
            for w in range(1, waves + 1)
            if rng.random() < 0.5
        }
        time = float(rng.randint(1, waves))
        cohort = _cohort_one(dict(observed), time=time, wave_count=waves)
        once = carry_forward(cohort)
        twice = carry_forward(once)
        assert once == twice
        filled = once.patients[0].values.get("bmi", {})
        for w, v in observed.items():
            assert filled[w] == v


def test_parse_serialize_parse_round_trip():
    cohort = _parse(
        "patient_id,wave,feature,value\n"
        "p1,1,bmi,26.1\n"
        "p1,3,bmi,31.0\n"
        "p2,2,bmi,19.5\n",
        "patient_id,time,event\np1,4,1\np2,3,0\n",
        wave_count=4,
    )
    data, outcomes = io.StringIO(), io.StringIO()
    write_cohort_csv(cohort, data)
    write_outcomes_csv(cohort.outcomes(), outcomes)
    reparsed = parse_cohort(
        io.StringIO(data.getvalue()),
        SPECS,
        parse_outcomes(io.StringIO(outcomes.getvalue())),
        wave_count=4,
    )
    assert reparsed == cohort
    assert cohort.censoring_rate == 0.5
