import random

import pytest

from wavemine.abstraction import StateInterval
from wavemine.encoding import (
    Endpoint,
    canonical_form,
    decode_intervals,
    encode,
    groups_from_payload,
    groups_to_payload,
    pattern_key,
    verify_pairing,
)
from wavemine.errors import PairingError

from util import ep


def test_encode_intervals_to_groups():
    sev = {("bmi", "Overweight"): "high", ("bmi", "Obese"): "very_high"}
    seq = encode(
        "p1",
        [StateInterval("bmi", "Overweight", 1, 3), StateInterval("bmi", "Obese", 4, 4)],
        sev,
        True,
    )
    assert [(g.time, g.endpoints) for g in seq.groups] == [
        (1, (ep("bmi", "Overweight", "+"),)),
        (3, (ep("bmi", "Overweight", "-"),)),
        (4, (ep("bmi", "Obese", "+"), ep("bmi", "Obese", "-"))),
    ]


def test_normal_levels_emit_nothing():
    sev = {("bmi", "Normal weight"): "normal"}
    seq = encode("p1", [StateInterval("bmi", "Normal weight", 1, 7)], sev, False)
    assert seq.groups == ()


def test_intra_group_canonical_order_start_block_first():
    sev = {("A", "high"): "high", ("B", "low"): "low"}
    seq = encode(
        "p1",
        [StateInterval("A", "high", 1, 2), StateInterval("B", "low", 2, 2)],
        sev,
        True,
    )
    t2 = seq.groups[1]
    assert t2.time == 2
    # Start block precedes the Finish block; each block sorted by (feature, level).
    assert t2.endpoints == (
        ep("B", "low", "+"),
        ep("A", "high", "-"),
        ep("B", "low", "-"),
    )


def test_canonical_form_collapses_simultaneous_permutations():
    a_plus, a_minus = ep("A", "x", "+"), ep("A", "x", "-")
    b_plus, b_minus = ep("B", "x", "+"), ep("B", "x", "-")
    one = canonical_form([[a_plus], [b_plus, a_minus], [b_minus]])
    two = canonical_form([[a_plus], [a_minus, b_plus], [b_minus]])
    assert one == two
    assert pattern_key(one) == pattern_key(two)


def test_canonical_form_distinct_symbols_differ():
    assert canonical_form([[ep("A", "x", "+")], [ep("A", "x", "-")]]) != canonical_form(
        [[ep("B", "x", "+")], [ep("B", "x", "-")]]
    )


def test_canonical_form_all_permutations_of_two_groups_collapse():
    a_plus, a_minus = ep("A", "x", "+"), ep("A", "x", "-")
    b_plus, b_minus = ep("B", "x", "+"), ep("B", "x", "-")
    keys = {
        canonical_form([g1, g2])
        for g1 in ([a_plus, b_plus], [b_plus, a_plus])
        for g2 in ([a_minus, b_minus], [b_minus, a_minus])
    }
    assert len(keys) == 1


def test_decode_inverts_encode():
    rng = random.Random(17)
    sev = {("A", "x"): "high", ("B", "y"): "low", ("C", "z"): "very_high"}
    for _ in range(200):
        intervals = []
        for feat, lvl in sev:
            w = 1
            while w <= 6:
                if rng.random() < 0.5:
                    span = rng.randint(0, 6 - w)
                    intervals.append(StateInterval(feat, lvl, w, w + span))
                    w += span + 2
                else:
                    w += 1
        seq = encode("p", intervals, sev, False)
        assert decode_intervals(seq) == sorted(
            intervals, key=lambda iv: (iv.feature, iv.level, iv.start)
        )


def test_verify_pairing_rejects_unmatched_finish():
    from wavemine.encoding import EndpointGroup, EndpointSequence

    bad = EndpointSequence(
        patient_id="p",
        groups=(EndpointGroup(1, (ep("A", "x", "-"),)),),
        event=False,
    )
    with pytest.raises(PairingError):
        verify_pairing(bad)


def test_verify_pairing_rejects_double_open():
    from wavemine.encoding import EndpointGroup, EndpointSequence

    bad = EndpointSequence(
        patient_id="p",
        groups=(
            EndpointGroup(1, (ep("A", "x", "+"),)),
            EndpointGroup(2, (ep("A", "x", "+"),)),
        ),
        event=False,
    )
    with pytest.raises(PairingError):
        verify_pairing(bad)


def test_groups_payload_round_trip():
    groups = canonical_form(
        [[ep("A", "x", "+"), ep("B", "y", "+")], [ep("A", "x", "-")], [ep("B", "y", "-")]]
    )
    assert groups_from_payload(groups_to_payload(groups)) == groups


def test_intervals_json_round_trip():
    import io

    from wavemine.encoding import (
        CohortIntervals,
        PatientIntervals,
        read_intervals_json,
        write_intervals_json,
    )
    from wavemine.errors import MatrixFormatError

    doc = CohortIntervals(
        wave_count=5,
        levels={"A": {"x": "high"}, "B": {"y": "low", "N": "normal"}},
        patients=(
            PatientIntervals("p1", 4.0, True, (StateInterval("A", "x", 1, 2),)),
            PatientIntervals("p2", 5.0, False, ()),
        ),
        edges={"A": [1.5, 2.5]},
    )
    buf = io.StringIO()
    write_intervals_json(doc, buf)
    back = read_intervals_json(io.StringIO(buf.getvalue()))
    assert back == doc
    assert [s.patient_id for s in back.sequences()] == ["p1", "p2"]
    with pytest.raises(MatrixFormatError):
        read_intervals_json(io.StringIO("not json"))
    with pytest.raises(MatrixFormatError):
        read_intervals_json(io.StringIO('{"wave_count": 3}'))
