"""Griffin-Lim phase retrieval.

Alternating projections between two sets of spectrograms: the consistent
ones (images of actual signals under analysis) and the ones with a
prescribed magnitude.  Plain Griffin-Lim composes the two projections;
the fast variant adds momentum on top.  Both run standalone as a vocoder
and inside the corrected sampler's early steps.
"""

from dataclasses import dataclass

import numpy as np

from .dsp import (
    DEFAULT_SAMPLE_RATE,
    ComplexSpectrogram,
    StftParams,
    Waveform,
    istft,
    spectrogram_from_magnitude,
    stft,
)

INIT_MODES = ("random", "zero", "provided")


@dataclass
class GlaConfig:
    """Iteration budget, momentum and phase initialization.

    momentum = 0 is plain Griffin-Lim; nonzero values accelerate it.
    ``init`` selects the starting phase: seeded uniform random, all-zero,
    or a caller-provided array in ``init_phase``.
    """

    iterations: int = 1000
    momentum: float = 0.99
    init: str = "random"
    seed: int = 0
    init_phase: np.ndarray = None

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.init == "provided" and self.init_phase is None:
            raise ValueError("init='provided' needs an init_phase array")


def _check_magnitude(s_hat: np.ndarray, n_frames: int, n_bins: int) -> np.ndarray:
    s = np.asarray(s_hat, dtype=np.float64)
    if s.shape != (n_frames, n_bins):
        raise ValueError(f"magnitude shape {s.shape} != ({n_frames}, {n_bins})")
    if not np.all(np.isfinite(s)) or s.min() < 0.0:
        raise ValueError("magnitude must be finite and nonnegative")
    return s


def project_consistent(C: ComplexSpectrogram) -> ComplexSpectrogram:
    """Project onto the set of spectrograms some signal produces.

    Synthesis followed by analysis.  Requires the frame count and
    origin_length to agree, otherwise re-analysis would change shape.
    """
    p = C.params
    if p.frames_for_length(C.origin_length) != C.n_frames:
        raise ValueError(
            f"origin_length {C.origin_length} analyzes to "
            f"{p.frames_for_length(C.origin_length)} frames, spectrogram has {C.n_frames}"
        )
    return stft(istft(C), p)


def project_magnitude(C: ComplexSpectrogram, s_hat: np.ndarray) -> ComplexSpectrogram:
    """Replace magnitudes, keep phases; zero entries get phase 1."""
    s = _check_magnitude(s_hat, C.n_frames, C.params.n_bins)
    mag = np.abs(C.frames)
    unit = np.where(mag == 0.0, 1.0 + 0.0j, C.frames / np.where(mag == 0.0, 1.0, mag))
    return ComplexSpectrogram(s * unit, C.params, C.origin_length)


def gla(C0: ComplexSpectrogram, s_hat: np.ndarray, iterations: int) -> ComplexSpectrogram:
    """Plain Griffin-Lim: K composed projections from C0."""
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    C = C0
    for _ in range(iterations):
        C = project_consistent(project_magnitude(C, s_hat))
    return C


def initial_spectrogram(
    s_hat: np.ndarray, params: StftParams, cfg: GlaConfig
) -> ComplexSpectrogram:
    """Starting iterate: the target magnitude under the configured phase."""
    s = np.asarray(s_hat, dtype=np.float64)
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        phase = rng.uniform(-np.pi, np.pi, size=s.shape)
    elif cfg.init == "zero":
        phase = np.zeros(s.shape)
    else:
        phase = np.asarray(cfg.init_phase, dtype=np.float64)
        if phase.shape != s.shape:
            raise ValueError(f"init_phase shape {phase.shape} != {s.shape}")
    return spectrogram_from_magnitude(s, phase, params)


def fgla(
    s_hat: np.ndarray,
    params: StftParams,
    cfg: GlaConfig,
    target_length: int = None,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> Waveform:
    """Fast Griffin-Lim vocoder: magnitude frames in, waveform out.

    Momentum update t_k = P_C(P_mag(C_{k-1})), C_k = t_k + m (t_k - t_{k-1}).
    The first step runs unaccelerated so momentum only ever differences two
    consistent iterates; kicking it off from the raw (inconsistent) init
    measurably hurts convergence.  Momentum 0 reduces exactly to plain
    Griffin-Lim.  One final magnitude projection before synthesis keeps
    the emitted signal as close to the target magnitude as the last phase
    estimate allows.
    """
    s = np.asarray(s_hat, dtype=np.float64)
    if s.ndim != 2:
        raise ValueError(f"magnitude must be 2-D, got shape {s.shape}")
    s = _check_magnitude(s, s.shape[0], params.n_bins)
    C = initial_spectrogram(s, params, cfg)
    if target_length is None:
        target_length = C.origin_length
    if cfg.iterations > 0:
        t_prev = project_consistent(project_magnitude(C, s))
        C = t_prev
        for _ in range(cfg.iterations - 1):
            t = project_consistent(project_magnitude(C, s))
            C = ComplexSpectrogram(
                t.frames + cfg.momentum * (t.frames - t_prev.frames),
                C.params,
                C.origin_length,
            )
            t_prev = t
    final = project_magnitude(C, s)
    out = istft(final, target_length)
    return Waveform(out.samples, sample_rate)
