"""Corrected-sampler behavior: projection repair, phase ordering, equivalences."""

import numpy as np
import pytest

from signals import harmonic_signal

import glavoc.sampler as sampler_mod
from glavoc.diffusion import (
    OraclePredictor,
    ZeroPredictor,
    forward_diffuse,
    reverse_step,
    schedule_from_betas,
)
from glavoc.dsp import StftParams, Waveform, stft
from glavoc.melscale import mel_filterbank, mel_spectrogram, pseudo_inverse_magnitude
from glavoc.sampler import SamplerConfig, gla_correct, sample

P = StftParams()
FB = mel_filterbank(22050, 2048, 128, 20.0, 11025.0)
WG6 = schedule_from_betas((7e-6, 1.4e-4, 2.1e-3, 2.8e-2, 3.5e-1, 7e-1))

REF = Waveform(harmonic_signal(140.0, n=22050, seed=100))
MEL = mel_spectrogram(stft(REF, P).magnitude(), FB)
S_HAT = pseudo_inverse_magnitude(MEL)
L = 22050


def log_distance(a, b, floor=1e-5):
    d = 20.0 * np.log10((a + floor) / (b + floor))
    return float(np.sqrt(np.mean(d * d)))


# ------------------------------------------------------------------ correction

def test_correction_zero_iterations_is_round_trip():
    rng = np.random.default_rng(1)
    y = Waveform(rng.standard_normal(L))
    out = gla_correct(y, S_HAT, 0, P)
    assert np.max(np.abs(out.samples - y.samples)) < 1e-9


def test_correction_fixed_point():
    out = gla_correct(REF, stft(REF, P).magnitude(), 8, P)
    assert np.max(np.abs(out.samples - REF.samples)) < 1e-7


def test_correction_reduces_magnitude_mismatch():
    rng = np.random.default_rng(2)
    y = Waveform(rng.standard_normal(L))
    before = np.linalg.norm(stft(y, P).magnitude() - S_HAT)
    out = gla_correct(y, S_HAT, 32, P)
    after = np.linalg.norm(stft(out, P).magnitude() - S_HAT)
    assert after < before


def test_correction_shape_mismatch():
    y = Waveform(np.zeros(L))
    with pytest.raises(ValueError):
        gla_correct(y, S_HAT[:-1], 4, P)


def test_correction_is_homogeneous_in_target():
    # scaling the magnitude target scales the corrected signal: the first
    # projection discards input magnitudes and everything after is linear
    rng = np.random.default_rng(3)
    y = Waveform(rng.standard_normal(L))
    base = gla_correct(y, S_HAT, 6, P)
    scaled = gla_correct(y, 0.5 * S_HAT, 6, P)
    assert np.max(np.abs(scaled.samples - 0.5 * base.samples)) < 1e-9


def test_correction_momentum_variant_runs():
    rng = np.random.default_rng(4)
    y = Waveform(rng.standard_normal(L))
    plain = gla_correct(y, S_HAT, 8, P, momentum=0.0)
    fast = gla_correct(y, S_HAT, 8, P, momentum=0.9)
    assert np.all(np.isfinite(fast.samples))
    assert not np.array_equal(plain.samples, fast.samples)


# --------------------------------------------------------------------- sampler

def test_uncorrected_sampler_is_plain_reverse_loop():
    cfg = SamplerConfig(correction_steps=0, seed=9)
    pred = OraclePredictor(REF)
    got = sample(pred, MEL, cfg, target_length=L)

    rng = np.random.default_rng(9)
    y = Waveform(rng.standard_normal(L), 22050)
    for n in range(6, 0, -1):
        eps_hat = pred.predict(y, MEL, float(np.sqrt(WG6.alpha_bars[n - 1])))
        z = Waveform(rng.standard_normal(L), 22050) if n > 1 else None
        y = reverse_step(y, eps_hat, n, WG6, z)
    assert np.array_equal(got.samples, y.samples)


def test_sampler_chain_identity_from_noised_state():
    rng = np.random.default_rng(10)
    eps = Waveform(rng.standard_normal(L))
    y_n = forward_diffuse(REF, WG6.alpha_bars[-1], eps)
    cfg = SamplerConfig(correction_steps=0, seed=0)
    out = sample(
        OraclePredictor(REF), MEL, cfg,
        target_length=L, initial_state=y_n, inject_noise=False,
    )
    rel = np.linalg.norm(out.samples - REF.samples) / np.linalg.norm(REF.samples)
    assert rel < 1e-8


def test_correction_rescues_a_blind_predictor():
    # a predictor with no knowledge of the signal leaves the uncorrected
    # chain emitting rescaled noise; the corrected run must land far
    # closer to the target magnitudes
    pred = ZeroPredictor()
    plain = sample(pred, MEL, SamplerConfig(correction_steps=0, seed=5), target_length=L)
    fixed = sample(pred, MEL, SamplerConfig(correction_steps=3, gla_iterations=32, seed=5),
                   target_length=L)
    lsd_plain = log_distance(stft(plain, P).magnitude(), S_HAT)
    lsd_fixed = log_distance(stft(fixed, P).magnitude(), S_HAT)
    assert lsd_fixed < lsd_plain - 3.0       # not a tie: several dB better


def test_sampler_determinism_and_seed_sensitivity():
    cfg = SamplerConfig(seed=77)
    a = sample(ZeroPredictor(), MEL, cfg, target_length=L)
    b = sample(ZeroPredictor(), MEL, cfg, target_length=L)
    assert np.array_equal(a.samples, b.samples)
    c = sample(ZeroPredictor(), MEL, SamplerConfig(seed=78), target_length=L)
    assert not np.array_equal(a.samples, c.samples)


def test_sampler_output_length():
    out = sample(ZeroPredictor(), MEL, SamplerConfig(seed=1), target_length=L)
    assert len(out) == L
    assert out.sample_rate == 22050
    default_len = sample(ZeroPredictor(), MEL, SamplerConfig(seed=1))
    assert len(default_len) == P.max_length_for_frames(MEL.n_frames)


def test_sampler_rejects_inconsistent_length():
    with pytest.raises(ValueError, match="frames"):
        sample(ZeroPredictor(), MEL, SamplerConfig(), target_length=L + 5000)


def test_corrections_hit_only_the_earliest_steps(monkeypatch):
    events = []
    real_correct = sampler_mod.gla_correct

    def spy_correct(y, s_hat, iterations, params, momentum=0.0):
        events.append("corr")
        return real_correct(y, s_hat, iterations, params, momentum)

    class SpyPredictor(OraclePredictor):
        def predict(self, y_n, mel, sab):
            step = int(np.argmin(np.abs(np.sqrt(WG6.alpha_bars) - sab))) + 1
            events.append(("pred", step))
            return super().predict(y_n, mel, sab)

    monkeypatch.setattr(sampler_mod, "gla_correct", spy_correct)
    cfg = SamplerConfig(correction_steps=3, gla_iterations=2, seed=3)
    sample(SpyPredictor(REF), MEL, cfg, target_length=L)
    assert events == [
        ("pred", 6), "corr",
        ("pred", 5), "corr",
        ("pred", 4), "corr",
        ("pred", 3), ("pred", 2), ("pred", 1),
    ]


def test_shaped_prior_changes_the_run():
    white = sample(ZeroPredictor(), MEL, SamplerConfig(correction_steps=0, seed=11),
                   target_length=L)
    shaped = sample(ZeroPredictor(), MEL,
                    SamplerConfig(correction_steps=0, seed=11, noise_shaping="specgrad"),
                    target_length=L)
    assert not np.array_equal(white.samples, shaped.samples)
    assert np.all(np.isfinite(shaped.samples))
    again = sample(ZeroPredictor(), MEL,
                   SamplerConfig(correction_steps=0, seed=11, noise_shaping="specgrad"),
                   target_length=L)
    assert np.array_equal(shaped.samples, again.samples)


def test_magnitude_rescale_flag_changes_output():
    base = sample(ZeroPredictor(), MEL, SamplerConfig(correction_steps=1, seed=6),
                  target_length=L)
    rescaled = sample(ZeroPredictor(), MEL,
                      SamplerConfig(correction_steps=1, seed=6, magnitude_rescale=True),
                      target_length=L)
    assert not np.array_equal(base.samples, rescaled.samples)


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(correction_steps=7)        # more than the schedule has
    with pytest.raises(ValueError):
        SamplerConfig(correction_steps=-1)
    with pytest.raises(ValueError):
        SamplerConfig(gla_iterations=-2)
    with pytest.raises(ValueError):
        SamplerConfig(noise_shaping="pink")
    with pytest.raises(ValueError):
        SamplerConfig(gla_momentum=1.0)
