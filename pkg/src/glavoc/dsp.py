"""Short-time Fourier analysis and least-squares synthesis.

The analysis operator maps a real signal to a one-sided complex
spectrogram of shape (frames, n_fft//2 + 1); the synthesis operator
inverts it by squared-window-normalized overlap-add.  With the default
parameters (periodic Hann, 4x overlap) the pair reconstructs perfectly,
which every projection in :mod:`glavoc.phase` relies on.

Conventions: frames are n_fft-sample chunks of the (optionally
reflect-padded) signal taken every ``hop`` samples, multiplied by the
analysis window zero-padded centrally to n_fft, so frame ``t`` is
centered on sample ``t * hop`` when center padding is on.  All arithmetic
is double precision.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

DEFAULT_SAMPLE_RATE = 22050
NORMALIZATION_FLOOR = 1e-10


def hann_window(win_length: int) -> np.ndarray:
    """Periodic (DFT-even) Hann window of ``win_length`` samples.

    w[t] = 0.5 * (1 - cos(2*pi*t / win_length)).  The periodic convention
    keeps the squared-window overlap-add sum exactly constant at
    hop = win_length / 4, which the symmetric variant does not.
    """
    if win_length < 2:
        raise ValueError(f"win_length must be >= 2, got {win_length}")
    t = np.arange(win_length, dtype=np.float64)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * t / win_length))


@dataclass(frozen=True)
class StftParams:
    """Analysis/synthesis parameterization.

    ``window`` has ``win_length`` samples and is zero-padded centrally to
    ``n_fft`` before use.  ``center_padding`` reflect-pads the signal by
    n_fft//2 on both ends so frames align with multiples of ``hop``.
    """

    n_fft: int = 2048
    hop: int = 300
    win_length: int = 1200
    window: np.ndarray = field(default=None)
    center_padding: bool = True

    def __post_init__(self):
        if self.window is None:
            object.__setattr__(self, "window", hann_window(self.win_length))
        if self.n_fft < 1 or self.hop < 1 or self.win_length < 1:
            raise ValueError("n_fft, hop and win_length must be positive")
        if self.win_length > self.n_fft:
            raise ValueError(f"win_length {self.win_length} exceeds n_fft {self.n_fft}")
        if self.hop > self.win_length:
            raise ValueError(f"hop {self.hop} exceeds win_length {self.win_length}")
        w = np.asarray(self.window, dtype=np.float64)
        if w.shape != (self.win_length,):
            raise ValueError(f"window must have shape ({self.win_length},), got {w.shape}")
        if not np.all(np.isfinite(w)) or w.min() < 0.0 or w.max() > 1.0:
            raise ValueError("window values must be finite and lie in [0, 1]")
        object.__setattr__(self, "window", w)

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    @property
    def pad_amount(self) -> int:
        return self.n_fft // 2 if self.center_padding else 0

    def padded_window(self) -> np.ndarray:
        """Analysis window zero-padded to n_fft samples.

        Centered when ``center_padding`` is on (keeps frame t aligned with
        sample t * hop); left-aligned otherwise, so the first signal sample
        falls under the window of frame 0.
        """
        out = np.zeros(self.n_fft, dtype=np.float64)
        left = (self.n_fft - self.win_length) // 2 if self.center_padding else 0
        out[left:left + self.win_length] = self.window
        return out

    def frames_for_length(self, n_samples: int) -> int:
        """Number of analysis frames produced for a signal of ``n_samples``."""
        if n_samples < 1:
            raise ValueError("signal length must be positive")
        total = n_samples + 2 * self.pad_amount
        return max(1, math.ceil((total - self.win_length) / self.hop) + 1)

    def max_length_for_frames(self, n_frames: int) -> int:
        """Longest signal length that analyzes to exactly ``n_frames`` frames.

        Used as the synthesis target length when only a spectrogram or mel
        frame count is known.
        """
        if n_frames < 1:
            raise ValueError("n_frames must be positive")
        return max(1, (n_frames - 1) * self.hop + self.win_length - 2 * self.pad_amount)


@dataclass
class Waveform:
    """A mono time-domain signal with its sample rate."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples contain non-finite values")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self.samples = s

    def __len__(self):
        return self.samples.shape[0]


@dataclass
class ComplexSpectrogram:
    """One-sided complex spectrogram plus what is needed to invert it.

    ``origin_length`` is the time-domain sample count the spectrogram was
    computed from (or should synthesize back to by default).
    """

    frames: np.ndarray
    params: StftParams
    origin_length: int

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.complex128)
        if f.ndim != 2:
            raise ValueError(f"frames must be 2-D, got shape {f.shape}")
        if f.shape[1] != self.params.n_bins:
            raise ValueError(
                f"expected {self.params.n_bins} frequency bins, got {f.shape[1]}"
            )
        if not np.all(np.isfinite(f)):
            raise ValueError("spectrogram contains non-finite values")
        if self.origin_length < 1:
            raise ValueError("origin_length must be positive")
        self.frames = f

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.frames)

    def scaled(self, factor: complex) -> "ComplexSpectrogram":
        return ComplexSpectrogram(self.frames * factor, self.params, self.origin_length)


def _reflect_pad(x: np.ndarray, pad: int) -> np.ndarray:
    """Reflect-pad without repeating edge samples; tolerates pad >= len(x)."""
    if pad == 0:
        return x
    n = x.shape[0]
    if n == 1:
        return np.full(n + 2 * pad, x[0], dtype=x.dtype)
    idx = np.arange(-pad, n + pad)
    period = 2 * n - 2
    idx = np.abs(idx) % period
    idx = np.where(idx >= n, period - idx, idx)
    return x[idx]


def stft(y: Waveform, p: StftParams) -> ComplexSpectrogram:
    """Analyze a signal into a one-sided complex spectrogram.

    The frame count is ceil((L + pad_total - win_length) / hop) + 1 where
    pad_total is the total reflect padding.  The map is linear in ``y``.
    """
    x = y.samples
    if x.shape[0] == 0:
        raise ValueError("cannot analyze an empty signal")
    n_frames = p.frames_for_length(x.shape[0])
    x_pad = _reflect_pad(x, p.pad_amount)
    needed = (n_frames - 1) * p.hop + p.n_fft
    if x_pad.shape[0] < needed:
        x_pad = np.concatenate([x_pad, np.zeros(needed - x_pad.shape[0])])
    frames = _kernels.frame_signal(x_pad, p.padded_window(), p.hop, n_frames)
    spec = np.fft.rfft(frames, n=p.n_fft, axis=1)
    return ComplexSpectrogram(spec, p, x.shape[0])


def istft(C: ComplexSpectrogram, target_length: int | None = None) -> Waveform:
    """Synthesize a signal by squared-window-normalized overlap-add.

    The least-squares inverse of :func:`stft`: exact reconstruction
    wherever the squared-window sum is nonzero, which holds everywhere in
    the valid region for the default parameters.  Linear in ``C``.
    """
    p = C.params
    if target_length is None:
        target_length = C.origin_length
    if target_length < 1:
        raise ValueError("target_length must be positive")
    n_frames = C.n_frames
    out_len = (n_frames - 1) * p.hop + p.n_fft
    start = p.pad_amount
    if start + target_length > out_len:
        raise ValueError(
            f"target_length {target_length} exceeds reconstructable length "
            f"{out_len - start} for {n_frames} frames"
        )
    w = p.padded_window()
    time_frames = np.fft.irfft(C.frames, n=p.n_fft, axis=1)
    acc = _kernels.overlap_add(time_frames * w, p.hop, out_len)
    norm = _kernels.window_sumsq(w, p.hop, n_frames, out_len)
    region = slice(start, start + target_length)
    norm_region = norm[region]
    if norm_region.min() < NORMALIZATION_FLOOR:
        raise ValueError(
            "degenerate synthesis normalization: squared-window sum below "
            f"{NORMALIZATION_FLOOR} inside the output region"
        )
    return Waveform(acc[region] / norm_region)


def spectrogram_from_magnitude(
    magnitude: np.ndarray,
    phase: np.ndarray,
    p: StftParams,
    origin_length: int | None = None,
) -> ComplexSpectrogram:
    """Combine a magnitude array with a phase array (radians) into a spectrogram."""
    mag = np.asarray(magnitude, dtype=np.float64)
    if origin_length is None:
        origin_length = p.max_length_for_frames(mag.shape[0])
    return ComplexSpectrogram(mag * np.exp(1j * phase), p, origin_length)
