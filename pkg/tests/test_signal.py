import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.signal import get_window

from idmse.errors import ConfigError, DomainError, WavFormatError
from idmse.signal import (
    ScalingConfig,
    StftConfig,
    Waveform,
    istft,
    load_wav,
    save_wav,
    scale,
    spectral_energy,
    stft,
    unscale,
)
from idmse.tensor import to_channels, to_complex

FS = 16000


def _bin_sine(k, frame=510, n=FS):
    t = np.arange(n)
    return np.cos(2 * np.pi * k * t / frame)


def test_stft_shape_and_channels():
    x = np.random.default_rng(0).standard_normal(FS)
    spec = stft(Waveform(x, FS))
    assert spec.shape[0] == 2 and spec.shape[1] == 256
    assert spec.dtype == float


def test_sine_at_bin_center_rectangular():
    k = 40
    spec = stft(_bin_sine(k), StftConfig(510, 128, "boxcar"))
    energy = np.sum(spec**2, axis=0)[:, 10:-10]  # frames fully inside the signal
    assert np.min(energy[k] / energy.sum(axis=0)) >= 0.99


def test_sine_main_lobe_default_window():
    k = 40
    energy = np.sum(stft(_bin_sine(k)) ** 2, axis=0)[:, 10:-10]
    assert np.all(np.argmax(energy, axis=0) == k)
    assert np.min(energy[k - 1 : k + 2].sum(axis=0) / energy.sum(axis=0)) >= 0.99


def test_zero_waveform():
    spec = stft(np.zeros(4000))
    assert not np.any(spec)


def test_empty_waveform_rejected():
    with pytest.raises(DomainError):
        stft(np.zeros(0))


@pytest.mark.parametrize(
    "cfg", [StftConfig(), StftConfig(512, 128), StftConfig(256, 64, "hann"), StftConfig(400, 100, "boxcar")]
)
def test_round_trip(cfg):
    x = np.random.default_rng(1).uniform(-1, 1, FS)
    back = istft(stft(Waveform(x, FS), cfg), cfg, length=x.size)
    assert np.max(np.abs(back.samples - x)) < 1e-6


def test_linearity():
    rng = np.random.default_rng(2)
    w1, w2 = rng.standard_normal((2, 5000))
    a, b = 0.3, -1.7
    np.testing.assert_allclose(stft(a * w1 + b * w2), a * stft(w1) + b * stft(w2), atol=1e-10)


def test_parseval_ratio_constant_for_cola_window():
    # sqrt-Hann with hop = frame / 4: squared windows overlap-add to 2
    cfg = StftConfig(512, 128)
    rng = np.random.default_rng(3)
    ratios = []
    for _ in range(5):
        x = rng.standard_normal(rng.integers(3000, 9000))
        ratios.append(spectral_energy(stft(x, cfg), cfg.frame) / np.sum(x**2))
    np.testing.assert_allclose(ratios, 512 * 2, rtol=1e-6)


def test_invalid_configs(monkeypatch):
    with pytest.raises(ConfigError):
        StftConfig(128, 128)
    with pytest.raises(ConfigError):
        StftConfig(510, 128, "kaiser")
    # symmetric Hann has zeros at both ends; with hop = frame - 1 some samples are never covered
    monkeypatch.setattr(StftConfig, "window_array", lambda self: get_window("hann", self.frame, fftbins=False))
    with pytest.raises(ConfigError):
        StftConfig(4, 3, "hann")


# --- scaling --------------------------------------------------------------


def test_scale_anchor_value():
    spec = to_channels(np.array([[50.0 + 0j, 30j]]))
    out = to_complex(scale(spec, ScalingConfig(0.15, 0.5)))
    assert abs(out[0, 0]) == pytest.approx(1.0606601717798213, rel=1e-14)
    assert 0.15 * 50**0.5 == pytest.approx(1.0607, abs=1e-4)
    assert np.angle(out[0, 1]) == pytest.approx(np.pi / 2)


def test_scale_zero_bins():
    spec = np.zeros((2, 3, 4))
    assert not np.any(scale(spec)) and not np.any(unscale(spec))


@given(
    mag=st.floats(1e-4, 1e3),
    phase=st.floats(-3.14, 3.14),
    a=st.floats(0.01, 10.0),
    c=st.floats(0.05, 1.0),
)
def test_scale_bijection_and_phase(mag, phase, a, c):
    cfg = ScalingConfig(a, c)
    z = np.array([[mag * np.exp(1j * phase)]])
    scaled = to_complex(scale(to_channels(z), cfg))
    assert np.angle(scaled[0, 0]) == pytest.approx(np.angle(z[0, 0]), abs=1e-9)
    back = to_complex(unscale(scale(to_channels(z), cfg), cfg))
    assert abs(back[0, 0] - z[0, 0]) <= 1e-6 * mag


def test_scaling_config_validation():
    for a, c in [(0.0, 0.5), (0.15, 0.0), (0.15, 1.5)]:
        with pytest.raises(ConfigError):
            ScalingConfig(a, c)


# --- WAV ------------------------------------------------------------------


def test_float32_round_trip_bit_identical(tmp_path):
    x = np.random.default_rng(4).uniform(-1, 1, 1001).astype(np.float32)
    save_wav(tmp_path / "f.wav", Waveform(x, 22050), "float32")
    back = load_wav(tmp_path / "f.wav")
    assert back.sample_rate == 22050
    assert np.array_equal(back.samples, x.astype(float))


def test_pcm16_round_trip(tmp_path):
    x = np.random.default_rng(5).uniform(-1, 1, 2000)
    x[:3] = [1.0, -1.0, 0.0]
    save_wav(tmp_path / "p.wav", Waveform(x, FS), "pcm16")
    back = load_wav(tmp_path / "p.wav")
    assert np.max(np.abs(back.samples - x)) <= 2**-15


def test_matches_stdlib_wave_reader(tmp_path):
    import wave

    x = np.random.default_rng(6).uniform(-1, 1, 300)
    save_wav(tmp_path / "p.wav", Waveform(x, 8000), "pcm16")
    with wave.open(str(tmp_path / "p.wav")) as fh:
        assert (fh.getnchannels(), fh.getsampwidth(), fh.getframerate()) == (1, 2, 8000)
        ints = np.frombuffer(fh.readframes(fh.getnframes()), "<i2")
    np.testing.assert_array_equal(load_wav(tmp_path / "p.wav").samples, ints / 32768.0)


def test_truncated_file_names_offset(tmp_path):
    save_wav(tmp_path / "ok.wav", Waveform(np.zeros(100), FS), "pcm16")
    data = (tmp_path / "ok.wav").read_bytes()
    (tmp_path / "cut.wav").write_bytes(data[:-50])
    with pytest.raises(WavFormatError) as info:
        load_wav(tmp_path / "cut.wav")
    assert info.value.offset == 44 and "offset 44" in str(info.value)
    (tmp_path / "tiny.wav").write_bytes(data[:6])
    with pytest.raises(WavFormatError):
        load_wav(tmp_path / "tiny.wav")


def test_not_riff(tmp_path):
    (tmp_path / "x.wav").write_bytes(b"OggS" + bytes(40))
    with pytest.raises(WavFormatError):
        load_wav(tmp_path / "x.wav")


def _raw_wav(tag, channels, bits, payload, rate=FS):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, rate, rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", len(body)) + body


def test_multichannel_rejected_or_downmixed(tmp_path):
    frames = np.array([[1000, 3000], [-2000, 0]], dtype="<i2")
    (tmp_path / "st.wav").write_bytes(_raw_wav(1, 2, 16, frames.tobytes()))
    with pytest.raises(WavFormatError):
        load_wav(tmp_path / "st.wav")
    mono = load_wav(tmp_path / "st.wav", downmix=True)
    np.testing.assert_allclose(mono.samples, [2000 / 32768, -1000 / 32768])


def test_unsupported_encoding(tmp_path):
    (tmp_path / "24.wav").write_bytes(_raw_wav(1, 1, 24, bytes(30)))
    with pytest.raises(WavFormatError, match="unsupported"):
        load_wav(tmp_path / "24.wav")


def test_waveform_validation():
    with pytest.raises(DomainError):
        Waveform(np.array([0.0, np.inf]), FS)
    with pytest.raises(DomainError):
        Waveform(np.zeros(3), 0)
    with pytest.raises(DomainError):
        Waveform(np.zeros((2, 3)), FS)
