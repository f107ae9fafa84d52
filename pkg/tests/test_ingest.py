import json
import math

import numpy as np
import pytest

from conftest import FRAME, make_sample, make_session
from vrsaccade.errors import (
    HeaderMismatch,
    MalformedDocument,
    MissingField,
    NonMonotonicTimestamps,
    RowArity,
    UnlabeledData,
    UnparseableNumber,
)
from vrsaccade.ingest import (
    FEATURE_COLUMNS,
    TABLE_COLUMNS,
    LabelInterval,
    apply_label_intervals,
    class_balance,
    dump_intervals,
    dump_nested_session,
    export_table,
    flatten_record,
    intervals_from_labels,
    merge_intervals,
    parse_intervals,
    parse_nested_session,
    parse_table,
)
from vrsaccade.synth import SynthConfig, generate_session


def test_table_layout():
    assert len(FEATURE_COLUMNS) == 25
    assert len(TABLE_COLUMNS) == 30
    assert len(set(TABLE_COLUMNS)) == 30


def test_single_frame_document(frame_doc):
    s = parse_nested_session(frame_doc([FRAME]))
    assert len(s) == 1
    assert s.participant_id == "p"
    assert s.rate_hz == 90.0


def test_36s_at_90hz_has_3240_samples():
    s = generate_session(SynthConfig(duration_s=36.0, rate_hz=90.0))
    assert len(s) == 3240


def test_missing_eye_block(frame, frame_doc):
    del frame["left"]
    with pytest.raises(MissingField) as exc:
        parse_nested_session(frame_doc([frame]))
    assert "left" in str(exc.value)


def test_missing_document_key():
    with pytest.raises(MissingField):
        parse_nested_session(json.dumps({"participant": "p", "frames": []}))


def test_malformed_json():
    with pytest.raises(MalformedDocument):
        parse_nested_session("{not json")


def test_direction_normalized(frame):
    s = flatten_record(frame)
    assert s.left_gaze_dir == (0.0, 0.0, 1.0)
    assert math.isclose(math.hypot(*s.right_gaze_dir), 1.0, rel_tol=0, abs_tol=1e-12)


def test_invalid_zero_direction_passes_through(frame):
    frame["left"]["valid"] = False
    frame["left"]["dir"] = {"x": 0.0, "y": 0.0, "z": 0.0}
    s = flatten_record(frame)
    assert s.left_gaze_dir == (0.0, 0.0, 0.0)
    assert s.valid_left is False


def test_valid_zero_direction_rejected(frame):
    frame["right"]["dir"] = {"x": 0.0, "y": 0.0, "z": 0.0}
    with pytest.raises(MalformedDocument):
        flatten_record(frame)


def test_key_order_irrelevant(frame):
    def reverse(obj):
        if isinstance(obj, dict):
            return {k: reverse(obj[k]) for k in reversed(list(obj))}
        return obj
    assert flatten_record(reverse(frame)) == flatten_record(frame)


def test_missing_timestamp_synthesized(frame):
    del frame["t"]
    assert flatten_record(frame, index=45, rate_hz=90.0).timestamp_s == 0.5


def test_non_boolean_flag_rejected(frame):
    frame["combined"]["valid"] = 1
    with pytest.raises(MalformedDocument):
        flatten_record(frame)


def test_timestamps_must_increase():
    with pytest.raises(NonMonotonicTimestamps):
        make_session([make_sample(t=0.1), make_sample(t=0.1)])


def test_nested_round_trip(short_synth):
    session, _ = short_synth
    again = parse_nested_session(dump_nested_session(session))
    assert again.participant_id == session.participant_id
    # ingest renormalizes valid directions, which can move the last ulp once
    a = np.array([s.features() for s in session.samples])
    b = np.array([s.features() for s in again.samples])
    assert np.abs(a - b).max() < 1e-15
    assert [s.label for s in again.samples] == [s.label for s in session.samples]
    twice = parse_nested_session(dump_nested_session(again))
    assert twice.samples == again.samples


def _timeline(n=3240, rate=90.0):
    return make_session([make_sample(t=k / rate) for k in range(n)], rate)


def test_no_intervals_means_all_false():
    s = apply_label_intervals(_timeline(50), [])
    assert not s.labels().any()


def test_interval_spanning_session():
    s = apply_label_intervals(_timeline(50), [LabelInterval(0.0, 10.0)])
    assert s.labels().all()


def test_closed_interval_91_samples():
    s = apply_label_intervals(_timeline(), [LabelInterval(1.0, 2.0)])
    labels = s.labels()
    # oracle: enumerate k/90 and test membership directly
    expected = [k for k in range(3240) if 1.0 <= k / 90.0 <= 2.0]
    assert expected == list(range(90, 181))
    assert np.flatnonzero(labels).tolist() == expected
    assert labels.sum() == 91


def test_merge_overlapping():
    merged = merge_intervals([LabelInterval(2, 3), LabelInterval(0, 1), LabelInterval(0.5, 1.5)])
    assert merged == [LabelInterval(0, 1.5), LabelInterval(2, 3)]


def test_interval_validation():
    with pytest.raises(ValueError):
        LabelInterval(2.0, 1.0)


def test_interval_file_round_trip():
    iv = [LabelInterval(0.25, 0.5), LabelInterval(1.0, 1.125)]
    assert parse_intervals(dump_intervals(iv)) == iv


def test_intervals_from_labels_recover_runs(short_synth):
    session, _ = short_synth
    again = apply_label_intervals(session, intervals_from_labels(session))
    assert (again.labels() == session.labels()).all()


def test_class_balance_166_of_1000():
    samples = [make_sample(t=k / 90, label=k < 166) for k in range(1000)]
    assert class_balance(make_session(samples)) == (0.166, 0.834)


def test_class_balance_all_saccade():
    samples = [make_sample(t=k / 90, label=True) for k in range(10)]
    assert class_balance(make_session(samples)) == (1.0, 0.0)


def test_labels_required():
    with pytest.raises(UnlabeledData):
        make_session([make_sample()]).labels()


def test_empty_session_header_only():
    text = export_table(make_session([]))
    assert text == ",".join(TABLE_COLUMNS) + "\n"
    assert len(parse_table(text)) == 0


def test_three_samples_four_lines():
    s = make_session([make_sample(t=k / 90, label=k == 1) for k in range(3)])
    assert len(export_table(s).splitlines()) == 4


def test_table_round_trip_field_exact(short_synth):
    session, _ = short_synth
    text = export_table(session)
    back = parse_table(text, participant_id=session.participant_id)
    assert back.rate_hz == session.rate_hz
    for a, b in zip(session.samples, back.samples):
        assert (a.valid_combined, a.valid_left, a.valid_right, a.label) == \
            (b.valid_combined, b.valid_left, b.valid_right, b.label)
        for x, y in zip((a.timestamp_s, *a.features()), (b.timestamp_s, *b.features())):
            assert float("%.9g" % x) == y
    # a second pass is the identity
    assert export_table(back) == text


def test_header_mismatch():
    with pytest.raises(HeaderMismatch):
        parse_table(",".join(TABLE_COLUMNS[:26]) + "\n")


def test_row_arity():
    text = ",".join(TABLE_COLUMNS) + "\n" + ",".join(["0"] * 29) + "\n"
    with pytest.raises(RowArity):
        parse_table(text)


@pytest.mark.parametrize("bad", ["abc", "nan", "inf"])
def test_unparseable_number(bad):
    row = ["0"] * 26 + ["1", "1", "1", "0"]
    row[3] = bad
    with pytest.raises(UnparseableNumber):
        parse_table(",".join(TABLE_COLUMNS) + "\n" + ",".join(row) + "\n")
