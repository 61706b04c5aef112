"""Mel filterbank analysis and pseudo-inverse magnitude recovery.

The filterbank compresses magnitude spectra (not power spectra) through
triangular filters spaced uniformly on the HTK mel scale, and its
Moore-Penrose pseudo-inverse lifts mel frames back to full-resolution
magnitude estimates.  Working in the magnitude domain means the lifted
frames can serve directly as fixed-magnitude targets for phase retrieval.
"""

import struct
import threading
from dataclasses import dataclass, field

import numpy as np

MELS_MAGIC = b"MELS"
MELS_VERSION = 1


def hz_to_mel(f):
    """HTK mel scale: mel(f) = 2595 * log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass
class MelFilterbank:
    """Triangular mel filter matrix with a lazily cached pseudo-inverse.

    ``weights`` is B x F (bands by frequency bins).  The pseudo-inverse is
    computed on first use and cached; computation is guarded by a lock so
    concurrent first access still computes it exactly once.
    """

    weights: np.ndarray
    sample_rate: float
    f_min: float
    f_max: float
    _pinv: np.ndarray = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError(f"weights must be 2-D, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or w.min() < 0.0:
            raise ValueError("filter weights must be finite and nonnegative")
        self.weights = w

    @property
    def n_bands(self) -> int:
        return self.weights.shape[0]

    @property
    def n_bins(self) -> int:
        return self.weights.shape[1]

    @property
    def pseudo_inverse(self) -> np.ndarray:
        """F x B Moore-Penrose pseudo-inverse of the filter matrix."""
        if self._pinv is None:
            with self._lock:
                if self._pinv is None:
                    self._pinv = np.linalg.pinv(self.weights, rcond=1e-8)
        return self._pinv


@dataclass
class MelSpectrogram:
    """T x B nonnegative mel frames tied to the filterbank that made them."""

    frames: np.ndarray
    filterbank: MelFilterbank

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float64)
        if f.ndim != 2:
            raise ValueError(f"frames must be 2-D, got shape {f.shape}")
        if f.shape[1] != self.filterbank.n_bands:
            raise ValueError(
                f"expected {self.filterbank.n_bands} bands, got {f.shape[1]}"
            )
        if not np.all(np.isfinite(f)) or f.min() < 0.0:
            raise ValueError("mel frames must be finite and nonnegative")
        self.frames = f

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def mel_filterbank(
    sample_rate: float = 22050,
    n_fft: int = 2048,
    n_bands: int = 128,
    f_min: float = 20.0,
    f_max: float = None,
) -> MelFilterbank:
    """Build B unnormalized triangular filters on the HTK mel scale.

    Band b ramps from center b-1 up to a peak of 1 at center b and back
    down to center b+1, with the B+2 centers uniformly spaced in mel
    between f_min and f_max.  Bins outside [f_min, f_max] get no weight.
    """
    if f_max is None:
        f_max = sample_rate / 2.0
    if not (0.0 <= f_min < f_max <= sample_rate / 2.0):
        raise ValueError(
            f"need 0 <= f_min < f_max <= Nyquist, got [{f_min}, {f_max}] at {sample_rate} Hz"
        )
    if n_bands < 1:
        raise ValueError("n_bands must be >= 1")
    n_bins = n_fft // 2 + 1
    bin_freqs = np.arange(n_bins) * sample_rate / n_fft
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_bands + 2))

    lower = edges[:-2][:, None]
    center = edges[1:-1][:, None]
    upper = edges[2:][:, None]
    up = (bin_freqs[None, :] - lower) / (center - lower)
    down = (upper - bin_freqs[None, :]) / (upper - center)
    weights = np.maximum(0.0, np.minimum(up, down))

    empty = np.flatnonzero(weights.max(axis=1) == 0.0)
    if empty.size:
        raise ValueError(
            f"{empty.size} filters cover no FFT bin (first: band {empty[0]}); "
            "fewer bands or a wider frequency range is needed"
        )
    return MelFilterbank(weights, sample_rate, f_min, f_max)


def mel_spectrogram(magnitude: np.ndarray, fb: MelFilterbank) -> MelSpectrogram:
    """Compress magnitude frames through the filterbank: X = S M^T."""
    S = np.asarray(magnitude, dtype=np.float64)
    if S.ndim != 2 or S.shape[1] != fb.n_bins:
        raise ValueError(
            f"magnitude must be (frames, {fb.n_bins}), got shape {S.shape}"
        )
    return MelSpectrogram(S @ fb.weights.T, fb)


def pseudo_inverse_magnitude(mel: MelSpectrogram) -> np.ndarray:
    """Estimate full-resolution magnitudes from mel frames.

    Least-squares lift through the cached pseudo-inverse, with negative
    outputs clamped to zero: magnitudes cannot go below zero, and the
    clamped frames feed the fixed-magnitude projection directly.
    """
    lifted = mel.frames @ mel.filterbank.pseudo_inverse.T
    return np.maximum(lifted, 0.0)


def write_mels(path, mel: MelSpectrogram) -> None:
    """Store mel frames in the binary interchange format.

    Layout, all little-endian: magic "MELS", u32 version, u32 frame count,
    u32 band count, f32 sample rate, then the frames as float32 row-major.
    """
    frames = mel.frames
    header = MELS_MAGIC + struct.pack(
        "<III f", MELS_VERSION, frames.shape[0], frames.shape[1],
        float(mel.filterbank.sample_rate),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(frames, dtype="<f4").tobytes())


def read_mels(path):
    """Load a mel interchange file; returns (frames, sample_rate).

    The frames come back as float64 with negatives (float32 rounding on
    values near zero) clamped away so they revalidate as mel data.
    """
    with open(path, "rb") as fh:
        header = fh.read(20)
        if len(header) < 20 or header[:4] != MELS_MAGIC:
            raise ValueError(f"{path}: not a mel interchange file")
        version, n_frames, n_bands, sample_rate = struct.unpack("<III f", header[4:])
        if version != MELS_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        if n_frames < 1 or n_bands < 1:
            raise ValueError(f"{path}: degenerate dimensions {n_frames}x{n_bands}")
        if not np.isfinite(sample_rate) or sample_rate <= 0:
            raise ValueError(f"{path}: bad sample rate {sample_rate}")
        data = fh.read()
    expected = 4 * n_frames * n_bands
    if len(data) != expected:
        raise ValueError(
            f"{path}: payload holds {len(data)} bytes, header promises {expected}"
        )
    frames = np.frombuffer(data, dtype="<f4").astype(np.float64)
    frames = frames.reshape(n_frames, n_bands)
    if not np.all(np.isfinite(frames)):
        raise ValueError(f"{path}: non-finite mel values")
    return np.maximum(frames, 0.0), float(sample_rate)
