"""Timing comparison of the jitted kernels against their numpy fallbacks.

Runs each hot loop (framing, overlap-add, squared-window accumulation)
on both backends, then times a full analysis/synthesis round trip and a
Griffin-Lim burst with the package temporarily pinned to each backend.

    python3 benchmarks/bench_kernels.py [--seconds 1.0] [--repeats 5]

Setting GLAVOC_NO_NUMBA=1 before launch benchmarks the numpy paths only.
"""

import argparse
import time

import numpy as np

from glavoc import _kernels
from glavoc.dsp import StftParams, Waveform, stft, istft
from glavoc.phase import GlaConfig, fgla


def timeit(fn, repeats):
    # one untimed call first: numba compiles on first use
    fn()
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def fmt(seconds):
    return f"{seconds * 1e3:9.3f} ms"


def bench_kernels(repeats):
    rng = np.random.default_rng(0)
    p = StftParams()
    n = 10 * 22050
    x = rng.standard_normal(n + p.n_fft)
    w = p.padded_window()
    n_frames = (len(x) - p.n_fft) // p.hop + 1
    frames = rng.standard_normal((n_frames, p.n_fft))

    cases = [
        ("frame_signal", lambda f: f(x, w, p.hop, n_frames),
         _kernels.frame_signal_numba, _kernels.frame_signal_numpy),
        ("overlap_add", lambda f: f(frames, p.hop, len(x)),
         _kernels.overlap_add_numba, _kernels.overlap_add_numpy),
        ("window_sumsq", lambda f: f(w, p.hop, n_frames, len(x)),
         _kernels.window_sumsq_numba, _kernels.window_sumsq_numpy),
    ]
    print(f"\nkernels on 10 s of audio ({n_frames} frames of {p.n_fft}):")
    print(f"  {'kernel':<14} {'numba':>12} {'numpy':>12}  speedup")
    for name, call, jitted, plain in cases:
        t_np = timeit(lambda: call(plain), repeats)
        if jitted is None:
            print(f"  {name:<14} {'-':>12} {fmt(t_np)}  (numba unavailable)")
            continue
        got_j, got_n = call(jitted), call(plain)
        assert np.allclose(got_j, got_n, atol=1e-12), f"{name}: backends disagree"
        t_nb = timeit(lambda: call(jitted), repeats)
        print(f"  {name:<14} {fmt(t_nb)} {fmt(t_np)}  {t_np / t_nb:6.2f}x")


BINDINGS = ("frame_signal", "overlap_add", "window_sumsq")


def pin_backend(which):
    for name in BINDINGS:
        target = getattr(_kernels, f"{name}_{which}")
        if target is None:
            return False
        setattr(_kernels, name, target)
    return True


def bench_pipeline(repeats):
    rng = np.random.default_rng(1)
    p = StftParams()
    y = Waveform(rng.standard_normal(5 * 22050))
    s_hat = np.abs(stft(y, p).frames)
    cfg = GlaConfig(iterations=32, momentum=0.0, init="random", seed=0)

    jobs = [
        ("stft + istft", lambda: istft(stft(y, p))),
        ("32-round projection burst", lambda: fgla(s_hat, p, cfg, target_length=len(y))),
    ]
    available = ["numpy"] + (["numba"] if _kernels.NUMBA_ENABLED else [])
    print("\npipeline on 5 s of audio:")
    print(f"  {'stage':<28}" + "".join(f" {b:>12}" for b in available))
    rows = {}
    for backend in available:
        pin_backend(backend)
        for name, fn in jobs:
            rows.setdefault(name, {})[backend] = timeit(fn, repeats)
    pin_backend(_kernels.backend())          # restore the import-time choice
    for name, times in rows.items():
        cells = "".join(f" {fmt(times[b])}" for b in available)
        print(f"  {name:<28}{cells}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="timed repetitions per case (best-of wins)")
    args = ap.parse_args()
    print(f"active backend: {_kernels.backend()}"
          + ("" if _kernels.NUMBA_ENABLED else "  (numba disabled or missing)"))
    bench_kernels(args.repeats)
    bench_pipeline(args.repeats)


if __name__ == "__main__":
    main()
