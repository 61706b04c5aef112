"""Hot inner loops shared by the analysis/synthesis transforms.

Three kernels dominate the non-FFT cost of every transform call: windowed
frame extraction, overlap-add accumulation, and the squared-window
normalization envelope.  Each has a numba-jitted implementation and a pure
numpy one.  The jitted path is used when numba imports successfully; set
the environment variable ``GLAVOC_NO_NUMBA=1`` before import to force the
numpy fallback (useful for debugging and for the paired benchmark in
``benchmarks/bench_kernels.py``).

The FFT itself always goes through numpy.
"""

import os

import numpy as np


def _frame_loop(x, window, hop, n_frames):
    n = window.shape[0]
    out = np.empty((n_frames, n), dtype=x.dtype)
    for k in range(n_frames):
        base = k * hop
        for j in range(n):
            out[k, j] = x[base + j] * window[j]
    return out


def _overlap_add_loop(frames, hop, out_len):
    n_frames, n = frames.shape
    out = np.zeros(out_len, dtype=frames.dtype)
    for k in range(n_frames):
        base = k * hop
        for j in range(n):
            out[base + j] += frames[k, j]
    return out


def _window_sumsq_loop(window, hop, n_frames, out_len):
    n = window.shape[0]
    out = np.zeros(out_len, dtype=window.dtype)
    for k in range(n_frames):
        base = k * hop
        for j in range(n):
            out[base + j] += window[j] * window[j]
    return out


def frame_signal_numpy(x, window, hop, n_frames):
    """Extract ``n_frames`` windowed frames of ``len(window)`` samples, hopping by ``hop``."""
    view = np.lib.stride_tricks.sliding_window_view(x, window.shape[0])[::hop]
    return view[:n_frames] * window


def overlap_add_numpy(frames, hop, out_len):
    """Scatter-add frames back onto a length ``out_len`` signal."""
    out = np.zeros(out_len, dtype=frames.dtype)
    n = frames.shape[1]
    for k in range(frames.shape[0]):
        base = k * hop
        out[base:base + n] += frames[k]
    return out


def window_sumsq_numpy(window, hop, n_frames, out_len):
    """Sum of squared shifted windows; the least-squares synthesis denominator."""
    out = np.zeros(out_len, dtype=window.dtype)
    wsq = window * window
    n = window.shape[0]
    for k in range(n_frames):
        base = k * hop
        out[base:base + n] += wsq
    return out


def _env_disabled():
    return os.environ.get("GLAVOC_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


NUMBA_ENABLED = False
frame_signal_numba = None
overlap_add_numba = None
window_sumsq_numba = None

if not _env_disabled():
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        frame_signal_numba = njit(cache=True)(_frame_loop)
        overlap_add_numba = njit(cache=True)(_overlap_add_loop)
        window_sumsq_numba = njit(cache=True)(_window_sumsq_loop)
        NUMBA_ENABLED = True

if NUMBA_ENABLED:
    frame_signal = frame_signal_numba
    overlap_add = overlap_add_numba
    window_sumsq = window_sumsq_numba
else:
    frame_signal = frame_signal_numpy
    overlap_add = overlap_add_numpy
    window_sumsq = window_sumsq_numpy


def backend():
    """Name of the active kernel backend, "numba" or "numpy"."""
    return "numba" if NUMBA_ENABLED else "numpy"
