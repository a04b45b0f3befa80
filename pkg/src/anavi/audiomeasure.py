"""Recorded-audio loudness: WAV decoding, radix-2 FFT, max-dB extraction and
measured-vs-predicted comparison tables."""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acoustics import AcousticConfig, intensity_to_label, scale_action_db
from .gridmap import LISTENER_RADIUS as R_MAX
from .sensing import build_features

PCM = 1
IEEE_FLOAT = 3
EXTENSIBLE = 0xFFFE

COMPASS = {"E": 0, "NE": 45, "N": 90, "NW": 135, "W": 180, "SW": 225, "S": 270, "SE": 315}


class WavError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Waveform:
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise WavError("sample rate must be positive")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class MeasurementRecord:
    label: str
    distance: float
    direction: str
    db_measured: float
    db_predicted: float

    @property
    def error(self) -> float:
        """Measured minus predicted; positive when the model underestimates."""
        return self.db_measured - self.db_predicted


def load_wav(path) -> Waveform:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavError(f"{path}: not a RIFF/WAVE file")
    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise WavError(f"{path}: truncated {cid!r} chunk")
        if cid == b"fmt ":
            if size < 16:
                raise WavError(f"{path}: fmt chunk too short")
            tag, channels, rate, _, align, bits = struct.unpack_from("<HHIIHH", body)
            if tag == EXTENSIBLE and size >= 40:
                tag = struct.unpack_from("<H", body, 24)[0]
            fmt = (tag, channels, rate, align, bits)
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)
    if fmt is None or payload is None:
        raise WavError(f"{path}: missing fmt or data chunk")
    tag, channels, rate, align, bits = fmt
    if channels < 1:
        raise WavError(f"{path}: no channels")
    if tag == PCM and bits == 16:
        raw = np.frombuffer(payload[:len(payload) // 2 * 2], dtype="<i2").astype(float) / 32768.0
    elif tag == IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[:len(payload) // 4 * 4], dtype="<f4").astype(float)
        raw = np.clip(raw, -1.0, 1.0)
    else:
        raise WavError(f"{path}: unsupported encoding (format {tag}, {bits}-bit); "
                       "need 16-bit PCM or 32-bit float")
    n = len(raw) // channels
    frames = raw[:n * channels].reshape(n, channels)
    return Waveform(rate, frames.mean(axis=1) if channels > 1 else frames[:, 0].copy())


def write_wav(path, samples, sample_rate: int, encoding: str = "pcm16") -> None:
    """Write a WAV file; ``samples`` is (n,) mono or (n, channels)."""
    a = np.asarray(samples, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    channels = a.shape[1]
    if encoding == "pcm16":
        body = np.clip(np.round(a * 32768.0), -32768, 32767).astype("<i2").tobytes()
        tag, bits = PCM, 16
    elif encoding == "float32":
        body = a.astype("<f4").tobytes()
        tag, bits = IEEE_FLOAT, 32
    else:
        raise WavError(f"unknown encoding {encoding!r}")
    align = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, sample_rate, sample_rate * align, align, bits)
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(body)) + body
    if len(body) & 1:
        chunks += b"\0"
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks)


def next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def fft(x) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT; len(x) must be a power of two."""
    a = np.asarray(x, dtype=complex)
    n = len(a)
    if n == 0 or n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=int)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    a = a[rev]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(-1, size)
        even = blocks[:, :half].copy()
        odd = blocks[:, half:] * tw
        blocks[:, :half] = even + odd
        blocks[:, half:] = even - odd
        a = blocks.reshape(n)
        size *= 2
    return a


def spectrum(w: Waveform) -> np.ndarray:
    """Zero-padded FFT normalized by the waveform length (rectangular window)."""
    n = len(w.samples)
    if n == 0:
        raise WavError("empty waveform")
    padded = np.zeros(next_pow2(n))
    padded[:n] = w.samples
    return fft(padded) / n


def waveform_db(w: Waveform, calibration_offset: float = 0.0,
                cfg: AcousticConfig | None = None) -> float:
    """Peak spectral intensity |W(f)|^2 / (rho c) in dB (re 1e-12 W/m^2), plus offset."""
    cfg = cfg or AcousticConfig()
    W = spectrum(w)
    intensity = (W.real ** 2 + W.imag ** 2) / (cfg.air_density * cfg.sound_speed)
    return intensity_to_label(float(intensity.max())).db_max + calibration_offset


def direction_angle(direction) -> float:
    """Compass letter (E=0, N=90 deg, counterclockwise) or degrees -> radians in [0, 2pi)."""
    if isinstance(direction, str) and direction.strip().upper() in COMPASS:
        deg = COMPASS[direction.strip().upper()]
    else:
        try:
            deg = float(direction)
        except (TypeError, ValueError):
            raise ValueError(f"unknown direction {direction!r}") from None
    theta = math.radians(deg) % (2 * math.pi)
    return 0.0 if theta >= 2 * math.pi else theta


def predicted_db(y: float, source_db: float) -> float:
    return scale_action_db(y, source_db)


def compare_table(entries, model, scan, source_db: float, calibration_offset: float = 0.0,
                  base_dir=".") -> list[MeasurementRecord]:
    """One record per measurement entry.

    Entries are dicts with ``label``, ``distance``, ``direction`` and either
    ``wav`` (a recording) or ``db`` (an already-measured level); an optional
    ``y`` replaces the model prediction.
    """
    out = []
    for e in entries:
        dist = float(e["distance"])
        if not 0 < dist <= R_MAX:
            raise ValueError(f"{e.get('label')}: distance {dist} outside (0, {R_MAX}] m")
        if "y" in e:
            y = float(e["y"])
        else:
            feats = build_features(scan, dist, direction_angle(e["direction"]), model.input_layout)
            y = model.predict(feats)
        if "wav" in e:
            wav = Path(base_dir) / e["wav"]
            if not wav.exists():
                raise FileNotFoundError(f"measurement file {wav} not found")
            measured = waveform_db(load_wav(wav), calibration_offset)
        else:
            measured = float(e["db"])
        out.append(MeasurementRecord(str(e["label"]), dist, str(e["direction"]), measured,
                                     predicted_db(y, source_db)))
    return out


def load_measurements(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, list):
        doc = {"records": doc}
    if "records" not in doc:
        raise ValueError(f"{path}: expected a 'records' list")
    return doc


def write_table(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "distance", "direction", "db_measured", "db_predicted", "error"])
        for r in records:
            w.writerow([r.label, r.distance, r.direction, f"{r.db_measured:.4f}",
                        f"{r.db_predicted:.4f}", f"{r.error:.4f}"])
