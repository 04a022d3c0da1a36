import numpy as np
import pytest

from chaos_sensor.datasets import WindowingConfig
from chaos_sensor.recordings import (
    WaveformRecording,
    _pole,
    build_experimental_base,
    extract_peaks,
    load_periods_csv,
    load_waveform_csv,
    lowpass,
    recording_intervals,
    save_periods_csv,
)

FS = 100_000.0


def pulse_train(peak_times, fs=FS, duration=None, width=2e-4, noise=0.0, seed=0):
    """Gaussian pulses of height 1 at ``peak_times`` (seconds)."""
    duration = peak_times[-1] + 5e-3 if duration is None else duration
    t = np.arange(int(duration * fs)) / fs
    x = np.zeros_like(t)
    for p in peak_times:
        x += np.exp(-0.5 * ((t - p) / width) ** 2)
    if noise:
        x += np.random.default_rng(seed).normal(0, noise, t.size)
    return WaveformRecording(x, fs)


def sine(freq, fs=FS, n=20000):
    t = np.arange(n) / fs
    return WaveformRecording(np.sin(2 * np.pi * freq * t), fs)


def test_recording_validation():
    with pytest.raises(ValueError):
        WaveformRecording([1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        WaveformRecording([], 10.0)


def test_lowpass_keeps_dc():
    out = lowpass(WaveformRecording(np.full(1000, 2.5), FS), 10e3)
    np.testing.assert_allclose(out.samples, 2.5, rtol=1e-9)


def test_lowpass_passband():
    out = lowpass(sine(100.0), 10e3)
    core = slice(2000, -2000)
    assert np.ptp(out.samples[core]) / 2 == pytest.approx(1.0, rel=0.01)


def test_lowpass_at_cutoff_is_half_power_per_pass():
    # two passes: amplitude response |H|^2 = 1/2 at the cutoff
    out = lowpass(sine(2e3, n=40000), 2e3)
    core = slice(5000, -5000)
    assert np.ptp(out.samples[core]) / 2 == pytest.approx(0.5, rel=0.02)


def test_lowpass_attenuates_far_above_cutoff():
    fs, fc, f = FS, 1e3, 10e3
    out = lowpass(sine(f), fc)
    w = 2 * np.pi * f / fs
    a = _pole(fc, fs)
    h2 = a**2 / abs(1 - (1 - a) * np.exp(-1j * w)) ** 2
    core = slice(2000, -2000)
    assert np.ptp(out.samples[core]) / 2 == pytest.approx(h2, rel=0.1)


def test_lowpass_bad_cutoff():
    w = sine(100.0)
    for fc in (0.0, -5.0, FS / 2, FS):
        with pytest.raises(ValueError):
            lowpass(w, fc)


def test_lowpass_very_short_signal():
    out = lowpass(WaveformRecording([1.0, 1.0, 1.0], FS), 10e3)
    np.testing.assert_allclose(out.samples, 1.0)


def test_pulse_train_peaks_within_one_sample():
    times = np.array([0.002, 0.0071, 0.0123, 0.0150, 0.0232, 0.0301])
    found = extract_peaks(pulse_train(times))
    assert found.size == times.size
    assert np.all(np.abs(found - times) <= 1 / FS)


def test_filtered_noisy_pulses():
    rng = np.random.default_rng(4)
    times = np.cumsum(rng.uniform(2e-3, 8e-3, 40))
    # noise well below the 2-sample curvature of the pulse tops
    w = pulse_train(times, noise=0.001)
    found = extract_peaks(lowpass(w, 10e3))
    assert found.size == times.size
    assert np.all(np.abs(found - times) <= 2 / FS)
    np.testing.assert_allclose(recording_intervals(w), np.diff(times), atol=3 / FS)


def test_height_threshold_drops_small_bumps():
    x = np.zeros(200)
    x[50], x[100], x[150] = 1.0, 0.1, 0.9
    found = extract_peaks(WaveformRecording(x, 1.0))
    np.testing.assert_array_equal(found, [50.0, 150.0])


def test_plateau_and_flat_signals():
    x = np.array([0, 0, 1, 1, 1, 0, 0], dtype=float)
    np.testing.assert_array_equal(extract_peaks(WaveformRecording(x, 1.0)), [2.0])
    assert extract_peaks(WaveformRecording(np.zeros(50), 1.0)).size == 0
    assert extract_peaks(WaveformRecording([1.0, 2.0], 1.0)).size == 0


def test_waveform_csv(tmp_path):
    path = tmp_path / "w.csv"
    t = np.arange(100) / 1000.0
    rows = "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(t, np.sin(t)))
    path.write_text("t,v\n" + rows + "\n")
    w = load_waveform_csv(path)
    assert w.sample_rate == pytest.approx(1000.0)
    np.testing.assert_allclose(w.samples, np.sin(t))


def test_periods_csv_round_trip(tmp_path):
    values = np.array([0.125, 0.5, 1.0 / 3.0])
    save_periods_csv(values, tmp_path / "p.csv")
    np.testing.assert_array_equal(load_periods_csv(tmp_path / "p.csv"), values)
    (tmp_path / "q.csv").write_text("1,0.2\n2,0.3\n")
    np.testing.assert_array_equal(load_periods_csv(tmp_path / "q.csv"), [0.2, 0.3])


def test_experimental_base_skips_short_sources():
    rng = np.random.default_rng(0)
    cfg = WindowingConfig(nl=10, s=1, count=None)
    with pytest.warns(UserWarning, match="short"):
        ds = build_experimental_base([("a", rng.uniform(1, 2, 25)), ("short", [1.0, 2.0])], cfg)
    assert ds.skipped == ["short"]
    assert len(ds) == 16 and set(ds.tags) == {"a"}
    assert np.all(np.isnan(ds.r))


def test_experimental_base_from_waveform():
    rng = np.random.default_rng(2)
    times = np.cumsum(rng.uniform(2e-3, 6e-3, 30))
    ds = build_experimental_base([("w", pulse_train(times))], WindowingConfig(nl=10, s=5, count=None))
    assert len(ds) == 4
    np.testing.assert_allclose(ds.values[0], np.diff(times)[:10], atol=2 / FS)


def test_experimental_base_all_short_is_empty():
    with pytest.warns(UserWarning):
        ds = build_experimental_base([("x", [1.0])], WindowingConfig(nl=5, s=1, count=None))
    assert len(ds) == 0 and ds.nl == 5
