"""Session documents: parsing, flattening, labeling and the tabular format.

A capture is stored as a nested JSON document (one object per 90 Hz frame
with ``left``/``right``/``combined`` blocks).  Flattening turns each frame
into a :class:`GazeSample` whose 25 features follow the canonical column
order in :data:`FEATURE_COLUMNS`.
"""
from __future__ import annotations

import bisect
import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    HeaderMismatch,
    MalformedDocument,
    MissingField,
    NonMonotonicTimestamps,
    RowArity,
    UnlabeledData,
    UnparseableNumber,
)

Vec3 = tuple[float, float, float]
Vec2 = tuple[float, float]

FEATURE_COLUMNS = (
    "leftGazeRayDirectionX",
    "leftGazeRayDirectionY",
    "leftGazeRayDirectionZ",
    "leftGazeRayOriginX",
    "leftGazeRayOriginY",
    "leftGazeRayOriginZ",
    "leftPupilDiameter",
    "leftPositionGuideX",
    "leftPositionGuideY",
    "rightGazeRayDirectionX",
    "rightGazeRayDirectionY",
    "rightGazeRayDirectionZ",
    "rightGazeRayOriginX",
    "rightGazeRayOriginY",
    "rightGazeRayOriginZ",
    "rightPupilDiameter",
    "rightPositionGuideX",
    "rightPositionGuideY",
    "gazeRayDirectionX",
    "gazeRayDirectionY",
    "gazeRayDirectionZ",
    "gazeRayOriginX",
    "gazeRayOriginY",
    "gazeRayOriginZ",
    "convergenceDistance",
)
FLAG_COLUMNS = ("validCombined", "validLeft", "validRight")
TABLE_COLUMNS = ("timestamp",) + FEATURE_COLUMNS + FLAG_COLUMNS + ("label",)

DEFAULT_RATE_HZ = 90.0


@dataclass(frozen=True)
class GazeSample:
    """One flattened frame.  Vectors are plain tuples so samples stay hashable."""

    timestamp_s: float
    left_gaze_dir: Vec3
    left_gaze_origin: Vec3
    left_pupil_diameter: float
    left_position_guide: Vec2
    right_gaze_dir: Vec3
    right_gaze_origin: Vec3
    right_pupil_diameter: float
    right_position_guide: Vec2
    combined_gaze_dir: Vec3
    combined_gaze_origin: Vec3
    convergence_distance_m: float
    valid_combined: bool = True
    valid_left: bool = True
    valid_right: bool = True
    label: Optional[bool] = None

    @property
    def all_valid(self) -> bool:
        return self.valid_combined and self.valid_left and self.valid_right

    def features(self) -> tuple[float, ...]:
        """The 25 feature values in :data:`FEATURE_COLUMNS` order."""
        return (
            *self.left_gaze_dir,
            *self.left_gaze_origin,
            self.left_pupil_diameter,
            *self.left_position_guide,
            *self.right_gaze_dir,
            *self.right_gaze_origin,
            self.right_pupil_diameter,
            *self.right_position_guide,
            *self.combined_gaze_dir,
            *self.combined_gaze_origin,
            self.convergence_distance_m,
        )

    @classmethod
    def from_features(cls, timestamp_s, values, flags=(True, True, True), label=None):
        v = [float(x) for x in values]
        if len(v) != len(FEATURE_COLUMNS):
            raise ValueError(f"expected {len(FEATURE_COLUMNS)} feature values, got {len(v)}")
        return cls(
            timestamp_s=float(timestamp_s),
            left_gaze_dir=tuple(v[0:3]),
            left_gaze_origin=tuple(v[3:6]),
            left_pupil_diameter=v[6],
            left_position_guide=tuple(v[7:9]),
            right_gaze_dir=tuple(v[9:12]),
            right_gaze_origin=tuple(v[12:15]),
            right_pupil_diameter=v[15],
            right_position_guide=tuple(v[16:18]),
            combined_gaze_dir=tuple(v[18:21]),
            combined_gaze_origin=tuple(v[21:24]),
            convergence_distance_m=v[24],
            valid_combined=bool(flags[0]),
            valid_left=bool(flags[1]),
            valid_right=bool(flags[2]),
            label=label,
        )


@dataclass(frozen=True)
class Session:
    participant_id: str
    rate_hz: float
    samples: tuple[GazeSample, ...] = field(default_factory=tuple)
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.rate_hz > 0:
            raise ValueError(f"rate_hz must be positive, got {self.rate_hz}")
        prev = -math.inf
        for i, s in enumerate(self.samples):
            if not s.timestamp_s > prev:
                raise NonMonotonicTimestamps(
                    f"timestamp at sample {i} ({s.timestamp_s}) does not increase"
                )
            prev = s.timestamp_s

    def __len__(self):
        return len(self.samples)

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([s.timestamp_s for s in self.samples], dtype=float)

    def feature_matrix(self) -> np.ndarray:
        """n x 25 array of features in canonical column order."""
        if not self.samples:
            return np.empty((0, len(FEATURE_COLUMNS)))
        return np.array([s.features() for s in self.samples], dtype=float)

    def labels(self) -> np.ndarray:
        """Boolean label vector; raises if any sample is unlabeled."""
        if any(s.label is None for s in self.samples):
            raise UnlabeledData(f"session {self.participant_id!r} has unlabeled samples")
        return np.array([s.label for s in self.samples], dtype=bool)


@dataclass(frozen=True)
class LabelInterval:
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.start_s > self.end_s:
            raise ValueError(f"interval start {self.start_s} is after end {self.end_s}")


# ---------------------------------------------------------------------------
# nested documents


def _get(obj, key, where):
    if not isinstance(obj, dict):
        raise MalformedDocument(f"{where}: expected an object, got {type(obj).__name__}")
    try:
        return obj[key]
    except KeyError:
        raise MissingField(f"{where}: missing field {key!r}") from None


def _num(value, where) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedDocument(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise MalformedDocument(f"{where}: non-finite value {value!r}")
    return value


def _vec(obj, key, names, where):
    block = _get(obj, key, where)
    return tuple(_num(_get(block, n, f"{where}.{key}"), f"{where}.{key}.{n}") for n in names)


def _unit(v: Vec3, valid: bool, where: str) -> Vec3:
    if not valid:
        return v
    norm = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    if norm == 0.0:
        raise MalformedDocument(f"{where}: valid gaze direction has zero length")
    return (v[0] / norm, v[1] / norm, v[2] / norm)


def _flag(obj, where) -> bool:
    value = _get(obj, "valid", where)
    if not isinstance(value, bool):
        raise MalformedDocument(f"{where}.valid: expected a boolean, got {value!r}")
    return value


def _eye(frame, side, where):
    eye = _get(frame, side, where)
    w = f"{where}.{side}"
    valid = _flag(eye, w)
    direction = _unit(_vec(eye, "dir", "xyz", w), valid, f"{w}.dir")
    origin = _vec(eye, "origin", "xyz", w)
    pupil = _num(_get(eye, "pupil_mm", w), f"{w}.pupil_mm")
    guide = _vec(eye, "guide", "xy", w)
    return valid, direction, origin, pupil, guide


def flatten_record(frame: dict, index: int = 0, rate_hz: float = DEFAULT_RATE_HZ) -> GazeSample:
    """Flatten one nested frame into a :class:`GazeSample`.

    A missing ``t`` is synthesized as ``index / rate_hz``.  Direction vectors
    flagged valid are rescaled to unit length; invalid ones pass through as-is.
    """
    where = f"frame[{index}]"
    if not isinstance(frame, dict):
        raise MalformedDocument(f"{where}: expected an object")
    lv, ldir, lorig, lpup, lguide = _eye(frame, "left", where)
    rv, rdir, rorig, rpup, rguide = _eye(frame, "right", where)

    comb = _get(frame, "combined", where)
    cw = f"{where}.combined"
    cv = _flag(comb, cw)
    cdir = _unit(_vec(comb, "dir", "xyz", cw), cv, f"{cw}.dir")
    corig = _vec(comb, "origin", "xyz", cw)
    conv = _num(_get(comb, "convergence_m", cw), f"{cw}.convergence_m")

    t = frame.get("t")
    t = index / rate_hz if t is None else _num(t, f"{where}.t")
    label = frame.get("label")
    if label is not None and not isinstance(label, bool):
        raise MalformedDocument(f"{where}.label: expected a boolean, got {label!r}")

    return GazeSample(
        timestamp_s=t,
        left_gaze_dir=ldir,
        left_gaze_origin=lorig,
        left_pupil_diameter=lpup,
        left_position_guide=lguide,
        right_gaze_dir=rdir,
        right_gaze_origin=rorig,
        right_pupil_diameter=rpup,
        right_position_guide=rguide,
        combined_gaze_dir=cdir,
        combined_gaze_origin=corig,
        convergence_distance_m=conv,
        valid_combined=cv,
        valid_left=lv,
        valid_right=rv,
        label=label,
    )


def parse_nested_session(text: str, source: str = "") -> Session:
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedDocument(f"unparseable session document: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDocument("session document must be a JSON object")
    participant = _get(doc, "participant", "document")
    rate_hz = _num(_get(doc, "rate_hz", "document"), "document.rate_hz")
    if rate_hz <= 0:
        raise MalformedDocument(f"document.rate_hz must be positive, got {rate_hz}")
    frames = _get(doc, "frames", "document")
    if not isinstance(frames, list):
        raise MalformedDocument("document.frames must be an array")
    samples = [flatten_record(f, i, rate_hz) for i, f in enumerate(frames)]
    return Session(str(participant), rate_hz, tuple(samples), source)


def _frame_dict(s: GazeSample) -> dict:
    def xyz(v):
        return {"x": v[0], "y": v[1], "z": v[2]}

    def eye(valid, d, o, p, g):
        return {"valid": valid, "dir": xyz(d), "origin": xyz(o), "pupil_mm": p,
                "guide": {"x": g[0], "y": g[1]}}

    frame = {
        "t": s.timestamp_s,
        "left": eye(s.valid_left, s.left_gaze_dir, s.left_gaze_origin,
                    s.left_pupil_diameter, s.left_position_guide),
        "right": eye(s.valid_right, s.right_gaze_dir, s.right_gaze_origin,
                     s.right_pupil_diameter, s.right_position_guide),
        "combined": {"valid": s.valid_combined, "dir": xyz(s.combined_gaze_dir),
                     "origin": xyz(s.combined_gaze_origin),
                     "convergence_m": s.convergence_distance_m},
    }
    if s.label is not None:
        frame["label"] = s.label
    return frame


def dump_nested_session(session: Session, include_labels: bool = True) -> str:
    """Serialize a session back into the nested document format."""
    frames = []
    for s in session.samples:
        f = _frame_dict(s)
        if not include_labels:
            f.pop("label", None)
        frames.append(f)
    doc = {"participant": session.participant_id, "rate_hz": session.rate_hz, "frames": frames}
    return json.dumps(doc, separators=(",", ":")) + "\n"


# ---------------------------------------------------------------------------
# labels


def merge_intervals(intervals: Iterable[LabelInterval]) -> list[LabelInterval]:
    merged: list[LabelInterval] = []
    for iv in sorted(intervals, key=lambda iv: (iv.start_s, iv.end_s)):
        if merged and iv.start_s <= merged[-1].end_s:
            last = merged[-1]
            merged[-1] = LabelInterval(last.start_s, max(last.end_s, iv.end_s))
        else:
            merged.append(iv)
    return merged


def apply_label_intervals(session: Session, intervals: Sequence[LabelInterval]) -> Session:
    """Label samples inside any closed interval as saccade, everything else not."""
    merged = merge_intervals(intervals)
    starts = [iv.start_s for iv in merged]
    labeled = []
    for s in session.samples:
        i = bisect.bisect_right(starts, s.timestamp_s) - 1
        inside = i >= 0 and s.timestamp_s <= merged[i].end_s
        labeled.append(replace(s, label=inside))
    return replace(session, samples=tuple(labeled))


def intervals_from_labels(session: Session) -> list[LabelInterval]:
    """Collapse runs of saccade-labeled samples into intervals."""
    out = []
    start = prev = None
    for s in session.samples:
        if s.label:
            if start is None:
                start = s.timestamp_s
            prev = s.timestamp_s
        elif start is not None:
            out.append(LabelInterval(start, prev))
            start = None
    if start is not None:
        out.append(LabelInterval(start, prev))
    return out


def dump_intervals(intervals: Sequence[LabelInterval]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["start_s", "end_s"])
    for iv in intervals:
        w.writerow([repr(iv.start_s), repr(iv.end_s)])
    return buf.getvalue()


def parse_intervals(text: str) -> list[LabelInterval]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["start_s", "end_s"]:
        raise HeaderMismatch("interval file must start with header 'start_s,end_s'")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise RowArity(f"line {lineno}: expected 2 fields, got {len(row)}")
        out.append(LabelInterval(_parse_float(row[0], lineno), _parse_float(row[1], lineno)))
    return out


def class_balance(session: Session) -> tuple[float, float]:
    """(saccade fraction, non-saccade fraction) of a fully labeled session."""
    labels = session.labels()
    n = len(labels)
    if n == 0:
        raise UnlabeledData("class balance of an empty session is undefined")
    n_sac = int(labels.sum())
    return n_sac / n, (n - n_sac) / n


# ---------------------------------------------------------------------------
# tabular text


def _fmt(x: float) -> str:
    return "%.9g" % x


def export_table(session: Session) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for s in session.samples:
        row = [_fmt(s.timestamp_s)]
        row += [_fmt(v) for v in s.features()]
        row += [str(int(f)) for f in (s.valid_combined, s.valid_left, s.valid_right)]
        row.append("" if s.label is None else str(int(s.label)))
        w.writerow(row)
    return buf.getvalue()


def _parse_float(text: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise UnparseableNumber(f"line {lineno}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise UnparseableNumber(f"line {lineno}: non-finite value {text!r}")
    return value


def _parse_bit(text: str, lineno: int, column: str) -> bool:
    if text not in ("0", "1"):
        raise UnparseableNumber(f"line {lineno}: column {column} must be 0 or 1, got {text!r}")
    return text == "1"


def parse_table(text: str, participant_id: str = "", rate_hz: Optional[float] = None,
                source: str = "") -> Session:
    """Inverse of :func:`export_table`.

    The table carries no session metadata, so ``participant_id`` and
    ``rate_hz`` are taken from the arguments.  When ``rate_hz`` is omitted it
    is estimated from the median timestamp spacing (90 Hz if fewer than two
    samples).
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise HeaderMismatch("table is empty; expected a header row") from None
    if tuple(header) != TABLE_COLUMNS:
        raise HeaderMismatch(
            f"table header has {len(header)} columns, expected the {len(TABLE_COLUMNS)}-column "
            f"layout starting {TABLE_COLUMNS[:3]}"
        )
    n_feat = len(FEATURE_COLUMNS)
    samples = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(TABLE_COLUMNS):
            raise RowArity(f"line {lineno}: expected {len(TABLE_COLUMNS)} fields, got {len(row)}")
        t = _parse_float(row[0], lineno)
        values = [_parse_float(x, lineno) for x in row[1:1 + n_feat]]
        flags = [_parse_bit(x, lineno, c) for x, c in zip(row[1 + n_feat:4 + n_feat], FLAG_COLUMNS)]
        label = None if row[-1] == "" else _parse_bit(row[-1], lineno, "label")
        samples.append(GazeSample.from_features(t, values, flags, label))

    if rate_hz is None:
        if len(samples) >= 2:
            dt = float(np.median(np.diff([s.timestamp_s for s in samples])))
            rate_hz = float("%.6g" % (1.0 / dt)) if dt > 0 else DEFAULT_RATE_HZ
        else:
            rate_hz = DEFAULT_RATE_HZ
    return Session(participant_id, rate_hz, tuple(samples), source)
