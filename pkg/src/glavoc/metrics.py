"""Objective quality measures and the CSV evaluation report.

Magnitude-domain convergence, log-spectral distance, time-domain SNR and
spectrogram consistency.  Perceptual scores are deliberately left to the
standard external tools; the generated WAVs feed straight into them.
"""

from dataclasses import dataclass, field

import numpy as np

from .dsp import ComplexSpectrogram
from .phase import project_consistent

DEFAULT_LSD_FLOOR = 1e-5
SNR_CAP_DB = 300.0


def _as_pair(a, b, what):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {a.shape} vs {b.shape}")
    return a, b


def spectral_convergence(s_ref, s_est) -> float:
    """Relative Frobenius error of an estimated magnitude spectrogram."""
    ref, est = _as_pair(s_ref, s_est, "spectral_convergence")
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise ValueError("spectral_convergence needs a nonzero reference")
    return float(np.linalg.norm(ref - est) / denom)


def log_spectral_distance(s_ref, s_est, floor: float = DEFAULT_LSD_FLOOR) -> float:
    """RMS log-magnitude ratio in dB, floored to keep silence finite."""
    if floor <= 0.0:
        raise ValueError("floor must be positive")
    ref, est = _as_pair(s_ref, s_est, "log_spectral_distance")
    d = 20.0 * np.log10((ref + floor) / (est + floor))
    return float(np.sqrt(np.mean(d * d)))


def snr(y_ref, y_est) -> float:
    """Signal-to-error power ratio in dB, capped at 300 for exact matches."""
    ref, est = _as_pair(
        np.asarray(getattr(y_ref, "samples", y_ref)),
        np.asarray(getattr(y_est, "samples", y_est)),
        "snr",
    )
    signal = np.sum(ref * ref)
    if signal == 0.0:
        raise ValueError("snr needs a nonzero reference")
    noise = np.sum((ref - est) ** 2)
    if noise == 0.0:
        return SNR_CAP_DB
    return float(min(10.0 * np.log10(signal / noise), SNR_CAP_DB))


def consistency_error(C: ComplexSpectrogram) -> float:
    """Relative distance from the set of analyzable spectrograms."""
    total = np.linalg.norm(C.frames)
    if total == 0.0:
        return 0.0
    gap = np.linalg.norm(C.frames - project_consistent(C).frames)
    return float(gap / total)


@dataclass
class EvalReport:
    """Per-file metric values plus recomputable aggregates.

    Rows are emitted sorted by file then metric name so reports diff
    cleanly; aggregate rows (population mean and standard deviation per
    metric) come last under the reserved names __mean__ and __std__.
    """

    entries: dict = field(default_factory=dict)

    def add(self, file: str, metric: str, value: float) -> None:
        if file.startswith("__"):
            raise ValueError(f"file name {file!r} collides with aggregate rows")
        self.entries.setdefault(file, {})[metric] = float(value)

    def metrics(self):
        names = set()
        for row in self.entries.values():
            names.update(row)
        return sorted(names)

    def values(self, metric: str):
        return [row[metric] for _, row in sorted(self.entries.items()) if metric in row]

    def mean(self, metric: str) -> float:
        return float(np.mean(self.values(metric)))

    def std(self, metric: str) -> float:
        return float(np.std(self.values(metric)))

    def write_csv(self, path) -> None:
        lines = ["file,metric,value"]
        for file in sorted(self.entries):
            for metric in sorted(self.entries[file]):
                lines.append(f"{file},{metric},{self.entries[file][metric]:.6g}")
        for metric in self.metrics():
            lines.append(f"__mean__,{metric},{self.mean(metric):.6g}")
        for metric in self.metrics():
            lines.append(f"__std__,{metric},{self.std(metric):.6g}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
