from __future__ import annotations

import copy
import json

import pytest

from vrsaccade.ingest import GazeSample, Session
from vrsaccade.synth import SynthConfig, generate_with_script


def make_sample(t=0.0, left=(0.0, 0.0, 1.0), right=(0.0, 0.0, 1.0), flags=(True, True, True),
                label=None, pupil=3.5, conv=1.0) -> GazeSample:
    return GazeSample(
        timestamp_s=t,
        left_gaze_dir=tuple(left),
        left_gaze_origin=(-0.0315, 0.0, 0.0),
        left_pupil_diameter=pupil,
        left_position_guide=(0.5, 0.5),
        right_gaze_dir=tuple(right),
        right_gaze_origin=(0.0315, 0.0, 0.0),
        right_pupil_diameter=pupil,
        right_position_guide=(0.5, 0.5),
        combined_gaze_dir=(0.0, 0.0, 1.0),
        combined_gaze_origin=(0.0, 0.0, 0.0),
        convergence_distance_m=conv,
        valid_combined=flags[0],
        valid_left=flags[1],
        valid_right=flags[2],
        label=label,
    )


def make_session(samples, rate_hz=90.0, participant="t") -> Session:
    return Session(participant, rate_hz, tuple(samples))


FRAME = {
    "t": 0.0,
    "left": {"valid": True, "dir": {"x": 0.0, "y": 0.0, "z": 2.0},
             "origin": {"x": -0.03, "y": 0.0, "z": 0.0}, "pupil_mm": 3.4,
             "guide": {"x": 0.5, "y": 0.4}},
    "right": {"valid": True, "dir": {"x": 0.0, "y": 0.1, "z": 1.0},
              "origin": {"x": 0.03, "y": 0.0, "z": 0.0}, "pupil_mm": 3.6,
              "guide": {"x": 0.5, "y": 0.6}},
    "combined": {"valid": True, "dir": {"x": 0.0, "y": 0.0, "z": 1.0},
                 "origin": {"x": 0.0, "y": 0.0, "z": 0.0}, "convergence_m": 1.2},
}


@pytest.fixture
def frame():
    return copy.deepcopy(FRAME)


@pytest.fixture
def frame_doc():
    def build(frames, rate_hz=90.0, participant="p"):
        return json.dumps({"participant": participant, "rate_hz": rate_hz, "frames": frames})
    return build


@pytest.fixture(scope="session")
def short_synth():
    """A 6 s synthetic session with its saccade script."""
    return generate_with_script(SynthConfig(duration_s=6.0, seed=11))


@pytest.fixture(scope="session")
def default_session():
    return generate_with_script(SynthConfig())[0]
