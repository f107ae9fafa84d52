"""Synthetic labeled gaze sessions.

Sessions alternate fixations and saccades.  Saccade duration follows the
main sequence (``a * amplitude + b`` ms) and position within a saccade
follows a raised-cosine profile.  Each eye looks at the scripted 3-D
fixation point from its own origin, so the inter-eye difference is the
vergence angle plus per-eye angular noise (and an optional fixed deviation
on the left eye).  The recorder is modeled with a slow pupil drift, a
saccade-locked drop in measured pupil diameter, and random validity
dropouts.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .errors import InvalidConfig, OutOfRange
from .ingest import GazeSample, LabelInterval, Session

Range = tuple[float, float]


@dataclass(frozen=True)
class SynthConfig:
    duration_s: float = 36.0
    rate_hz: float = 90.0
    fixation_ms_range: Range = (200.0, 600.0)
    amplitude_deg_range: Range = (2.0, 20.0)
    main_sequence_a: float = 2.2  # ms per degree
    main_sequence_b: float = 21.0  # ms
    noise_deg_sigma: float = 0.1
    amblyopic_offset_deg: float = 0.0
    amblyopic_jitter_frac: float = 0.25  # jitter sigma as a fraction of the offset
    convergence_m_range: Range = (0.5, 3.0)
    interocular_m: float = 0.063
    field_deg: Range = (25.0, 20.0)  # half-extent of targets in azimuth, elevation
    pupil_mm: float = 3.5
    pupil_drift_mm: float = 0.1
    pupil_noise_mm: float = 0.02
    saccade_pupil_artifact_mm: float = 0.8
    origin_noise_m: float = 1e-4
    convergence_noise_frac: float = 0.01
    dropout_fraction: float = 0.02
    participant: str = "synthetic"
    seed: int = 0

    def __post_init__(self):
        for name in ("fixation_ms_range", "amplitude_deg_range", "convergence_m_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise InvalidConfig(f"{name} must satisfy 0 < lo <= hi, got ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if not (len(self.field_deg) == 2 and min(self.field_deg) > 0):
            raise InvalidConfig(f"field_deg must hold two positive half-extents, got {self.field_deg}")
        object.__setattr__(self, "field_deg", tuple(float(v) for v in self.field_deg))
        positive = ("duration_s", "rate_hz", "interocular_m", "pupil_mm", "main_sequence_a")
        for name in positive:
            if not getattr(self, name) > 0:
                raise InvalidConfig(f"{name} must be positive, got {getattr(self, name)}")
        non_negative = ("main_sequence_b", "noise_deg_sigma", "amblyopic_offset_deg",
                        "amblyopic_jitter_frac", "pupil_drift_mm", "pupil_noise_mm",
                        "saccade_pupil_artifact_mm", "origin_noise_m", "convergence_noise_frac")
        for name in non_negative:
            if not getattr(self, name) >= 0:
                raise InvalidConfig(f"{name} must be non-negative, got {getattr(self, name)}")
        if not 0 <= self.dropout_fraction < 1:
            raise InvalidConfig(f"dropout_fraction must be in [0, 1), got {self.dropout_fraction}")
        if self.saccade_pupil_artifact_mm >= self.pupil_mm:
            raise InvalidConfig("saccade_pupil_artifact_mm must be smaller than pupil_mm")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SynthConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise InvalidConfig("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    def saccade_duration_s(self, amplitude_deg: float) -> float:
        return (self.main_sequence_a * amplitude_deg + self.main_sequence_b) / 1000.0


@dataclass(frozen=True)
class ScriptedSaccade:
    onset_s: float
    duration_s: float
    amplitude_deg: float
    start: tuple[float, float, float]  # azimuth deg, elevation deg, convergence m
    end: tuple[float, float, float]

    @property
    def offset_s(self) -> float:
        return self.onset_s + self.duration_s

    def interval(self) -> LabelInterval:
        return LabelInterval(self.onset_s, self.offset_s)


def saccade_displacement(amplitude_deg: float, duration_s: float, t: float) -> float:
    """Raised-cosine position profile: A * (1 - cos(pi t / D)) / 2."""
    if not amplitude_deg > 0 or not duration_s > 0:
        raise OutOfRange("amplitude and duration must be positive")
    if not 0.0 <= t <= duration_s:
        raise OutOfRange(f"t={t} outside [0, {duration_s}]")
    return amplitude_deg * (1.0 - math.cos(math.pi * t / duration_s)) / 2.0


def saccade_velocity(amplitude_deg: float, duration_s: float, t: float) -> float:
    """Time derivative of :func:`saccade_displacement` (deg/s)."""
    if not 0.0 <= t <= duration_s:
        raise OutOfRange(f"t={t} outside [0, {duration_s}]")
    return amplitude_deg * math.pi / (2.0 * duration_s) * math.sin(math.pi * t / duration_s)


def direction_from_angles(az_deg, el_deg) -> np.ndarray:
    """Unit vectors (x right, y up, z forward) for azimuth/elevation in degrees."""
    az = np.radians(az_deg)
    el = np.radians(el_deg)
    return np.stack([np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)], axis=-1)


def angles_from_direction(d) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(d, dtype=float)
    az = np.degrees(np.arctan2(d[..., 0], d[..., 2]))
    el = np.degrees(np.arctan2(d[..., 1], np.hypot(d[..., 0], d[..., 2])))
    return az, el


def vergence_distance(convergence_m: float, interocular_m: float) -> float:
    """Inter-eye unit-direction distance when both eyes fixate a point straight ahead."""
    half = interocular_m / 2.0
    return 2.0 * half / math.hypot(half, convergence_m)


def _unit_rows(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def script_saccades(config: SynthConfig, rng: np.random.Generator) -> list[ScriptedSaccade]:
    """Fixation/saccade timeline covering ``config.duration_s``.

    Fixation durations are right-skewed over ``fixation_ms_range``
    (lo + (hi - lo) * Beta(1, 3)); amplitudes are uniform over
    ``amplitude_deg_range`` with a uniformly random direction, resampled
    until the target stays inside the field.
    """
    fix_lo, fix_hi = config.fixation_ms_range
    amp_lo, amp_hi = config.amplitude_deg_range
    conv_lo, conv_hi = config.convergence_m_range
    half_az, half_el = config.field_deg

    state = (0.0, 0.0, float(rng.uniform(conv_lo, conv_hi)))
    t = 0.0
    out = []
    while True:
        t += (fix_lo + (fix_hi - fix_lo) * rng.beta(1.0, 3.0)) / 1000.0
        if t >= config.duration_s:
            break
        amp = float(rng.uniform(amp_lo, amp_hi))
        az0, el0, _ = state
        for _ in range(32):
            theta = rng.uniform(0.0, 2.0 * math.pi)
            az1 = az0 + amp * math.cos(theta)
            el1 = el0 + amp * math.sin(theta)
            if abs(az1) <= half_az and abs(el1) <= half_el:
                break
        else:
            # head back toward the center, shortening if needed
            r = math.hypot(az0, el0)
            step = min(amp, r) if r > 0 else amp
            az1 = az0 - step * az0 / r if r > 0 else az0 + step
            el1 = el0 - step * el0 / r if r > 0 else el0
            amp = math.hypot(az1 - az0, el1 - el0)
        end = (az1, el1, float(rng.uniform(conv_lo, conv_hi)))
        dur = config.saccade_duration_s(amp)
        out.append(ScriptedSaccade(t, dur, amp, state, end))
        state = end
        t += dur
    return out


def _trajectory(config, saccades, times):
    """Azimuth, elevation, convergence, normalized speed and labels at each sample time."""
    n = times.size
    az = np.empty(n)
    el = np.empty(n)
    conv = np.empty(n)
    speed = np.zeros(n)
    label = np.zeros(n, dtype=bool)

    # state holds between saccades
    onsets = np.array([s.onset_s for s in saccades])
    idx = np.searchsorted(onsets, times, side="right") - 1
    for k in range(n):
        i = idx[k]
        if i < 0:
            first = saccades[0].start if saccades else (0.0, 0.0, sum(config.convergence_m_range) / 2)
            az[k], el[k], conv[k] = first
            continue
        s = saccades[i]
        dt = times[k] - s.onset_s
        if dt <= s.duration_s:
            frac = saccade_displacement(s.amplitude_deg, s.duration_s, dt) / s.amplitude_deg
            az[k] = s.start[0] + frac * (s.end[0] - s.start[0])
            el[k] = s.start[1] + frac * (s.end[1] - s.start[1])
            conv[k] = s.start[2] + frac * (s.end[2] - s.start[2])
            speed[k] = math.sin(math.pi * dt / s.duration_s)
            label[k] = True
        else:
            az[k], el[k], conv[k] = s.end
    return az, el, conv, speed, label


def _perturb(d, rng, sigma_deg, az_offset_deg=0.0, az_jitter_deg=0.0):
    if sigma_deg == 0 and az_offset_deg == 0 and az_jitter_deg == 0:
        return d
    az, el = angles_from_direction(d)
    n = az.shape[0]
    az = az + az_offset_deg + (rng.normal(0.0, az_jitter_deg, n) if az_jitter_deg > 0 else 0.0)
    if sigma_deg > 0:
        az = az + rng.normal(0.0, sigma_deg, n)
        el = el + rng.normal(0.0, sigma_deg, n)
    return direction_from_angles(az, el)


def generate_with_script(config: SynthConfig):
    """Return ``(session, saccades)`` for one seeded configuration."""
    rng = np.random.default_rng(config.seed)
    n = int(round(config.duration_s * config.rate_hz))
    times = np.arange(n) / config.rate_hz
    saccades = script_saccades(config, rng)
    az, el, conv, speed, label = _trajectory(config, saccades, times)

    half = config.interocular_m / 2.0
    left_origin = np.array([-half, 0.0, 0.0])
    right_origin = np.array([half, 0.0, 0.0])
    cyclops = direction_from_angles(az, el)
    target = cyclops * conv[:, None]

    left = _unit_rows(target - left_origin)
    right = _unit_rows(target - right_origin)
    offset = config.amblyopic_offset_deg
    left = _perturb(left, rng, config.noise_deg_sigma, offset, offset * config.amblyopic_jitter_frac)
    right = _perturb(right, rng, config.noise_deg_sigma)
    combined = _unit_rows(left + right)

    def jitter(base, scale):
        return base + (rng.normal(0.0, scale, (n, 3)) if scale > 0 else np.zeros((n, 3)))

    left_o = jitter(left_origin, config.origin_noise_m)
    right_o = jitter(right_origin, config.origin_noise_m)
    comb_o = jitter(np.zeros(3), config.origin_noise_m)
    conv_meas = conv * (1.0 + (rng.normal(0.0, config.convergence_noise_frac, n)
                               if config.convergence_noise_frac > 0 else 0.0))

    # slow common pupil drift (AR(1), ~2 s time constant) plus per-sample noise
    rho = math.exp(-1.0 / (2.0 * config.rate_hz))
    drift = np.empty(n)
    level = rng.normal(0.0, config.pupil_drift_mm)
    innov = rng.normal(0.0, config.pupil_drift_mm * math.sqrt(1 - rho * rho), n)
    for k in range(n):
        level = rho * level + innov[k]
        drift[k] = level
    artifact = config.saccade_pupil_artifact_mm * speed
    pupil_l = config.pupil_mm + drift - artifact + rng.normal(0.0, config.pupil_noise_mm, n)
    pupil_r = config.pupil_mm + drift - artifact + rng.normal(0.0, config.pupil_noise_mm, n)
    # pupils must stay positive for valid frames
    pupil_l = np.maximum(pupil_l, 0.1)
    pupil_r = np.maximum(pupil_r, 0.1)

    fit_l = rng.normal(0.0, 0.03, 2)
    fit_r = rng.normal(0.0, 0.03, 2)
    guide_l = 0.5 + fit_l + 0.15 * left[:, :2] + rng.normal(0.0, 0.003, (n, 2))
    guide_r = 0.5 + fit_r + 0.15 * right[:, :2] + rng.normal(0.0, 0.003, (n, 2))

    # validity dropouts: left eye, right eye, or everything
    valid = np.ones((n, 3), dtype=bool)  # combined, left, right
    drop = rng.random(n) < config.dropout_fraction
    kind = rng.integers(0, 3, n)
    valid[drop & (kind == 0), 1] = False
    valid[drop & (kind == 1), 2] = False
    valid[drop & (kind == 2), :] = False
    garbage = _unit_rows(rng.normal(size=(n, 3, 3)))
    for col, arr, pup in ((1, left, pupil_l), (2, right, pupil_r)):
        bad = ~valid[:, col]
        arr[bad] = garbage[bad, col]
        pup[bad] = -1.0
    bad = ~valid[:, 0]
    combined[bad] = garbage[bad, 0]
    conv_meas[bad] = -1.0

    samples = []
    for k in range(n):
        samples.append(GazeSample(
            timestamp_s=float(times[k]),
            left_gaze_dir=tuple(left[k].tolist()),
            left_gaze_origin=tuple(left_o[k].tolist()),
            left_pupil_diameter=float(pupil_l[k]),
            left_position_guide=tuple(guide_l[k].tolist()),
            right_gaze_dir=tuple(right[k].tolist()),
            right_gaze_origin=tuple(right_o[k].tolist()),
            right_pupil_diameter=float(pupil_r[k]),
            right_position_guide=tuple(guide_r[k].tolist()),
            combined_gaze_dir=tuple(combined[k].tolist()),
            combined_gaze_origin=tuple(comb_o[k].tolist()),
            convergence_distance_m=float(conv_meas[k]),
            valid_combined=bool(valid[k, 0]),
            valid_left=bool(valid[k, 1]),
            valid_right=bool(valid[k, 2]),
            label=bool(label[k]),
        ))
    session = Session(config.participant, config.rate_hz, tuple(samples),
                      source=f"synth:seed={config.seed}")
    return session, saccades


def generate_session(config: Optional[SynthConfig] = None) -> Session:
    return generate_with_script(config or SynthConfig())[0]


def generate_intervals(config: Optional[SynthConfig] = None) -> list[LabelInterval]:
    return [s.interval() for s in generate_with_script(config or SynthConfig())[1]]
