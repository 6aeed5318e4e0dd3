//! Power spectra and short-time spectral maps.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-sided Hann-windowed power spectrum. Returns `(frequencies, power)`
/// with `len/2 + 1` bins; the signal mean is removed before windowing.
pub fn periodogram(samples: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buffer: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = hann(i, n);
            Complex64::new((v - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);

    let bins = n / 2 + 1;
    let df = 1.0 / (dt * n as f64);
    let frequencies = (0..bins).map(|k| k as f64 * df).collect();
    let power = buffer[..bins].iter().map(|c| c.norm_sqr()).collect();
    (frequencies, power)
}

fn hann(i: usize, n: usize) -> f64 {
    let phase = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
    0.5 * (1.0 - phase.cos())
}

/// Short-time spectral map with per-column normalization: each time
/// column is scaled by its own maximum so the dominant ridge is directly
/// readable. Silent columns stay zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeFrequencyMap {
    /// Column centers, seconds.
    pub times: Vec<f64>,
    /// Row frequencies, Hz.
    pub frequencies: Vec<f64>,
    /// `power[column][row]`, normalized per column.
    pub power: Vec<Vec<f64>>,
}

impl TimeFrequencyMap {
    /// Frequency of the strongest bin in each column; 0 for silent
    /// columns.
    pub fn ridge(&self) -> Vec<f64> {
        self.power
            .iter()
            .map(|column| {
                let mut best = 0usize;
                let mut best_power = 0.0;
                for (row, &p) in column.iter().enumerate() {
                    if p > best_power {
                        best_power = p;
                        best = row;
                    }
                }
                if best_power > 0.0 {
                    self.frequencies[best]
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Hann-windowed short-time Fourier map with 50% overlap.
pub fn stft(samples: &[f64], dt: f64, window_samples: usize) -> Result<TimeFrequencyMap> {
    if window_samples < 16 {
        return Err(Error::InvalidArgument(format!(
            "window of {window_samples} samples is too short for spectral analysis"
        )));
    }
    if window_samples > samples.len() {
        return Err(Error::InvalidArgument(format!(
            "window of {window_samples} samples exceeds the series length {}",
            samples.len()
        )));
    }
    let hop = (window_samples / 2).max(1);
    let bins = window_samples / 2 + 1;
    let df = 1.0 / (dt * window_samples as f64);
    let frequencies: Vec<f64> = (0..bins).map(|k| k as f64 * df).collect();
    let fft = FftPlanner::new().plan_fft_forward(window_samples);

    let mut times = Vec::new();
    let mut power = Vec::new();
    let mut start = 0;
    while start + window_samples <= samples.len() {
        let mut buffer: Vec<Complex64> = samples[start..start + window_samples]
            .iter()
            .enumerate()
            .map(|(i, &v)| Complex64::new(v * hann(i, window_samples), 0.0))
            .collect();
        fft.process(&mut buffer);
        let mut column: Vec<f64> = buffer[..bins].iter().map(|c| c.norm_sqr()).collect();
        let peak = column.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            for value in &mut column {
                *value /= peak;
            }
        }
        times.push((start as f64 + window_samples as f64 / 2.0) * dt);
        power.push(column);
        start += hop;
    }
    Ok(TimeFrequencyMap {
        times,
        frequencies,
        power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodogram_peaks_at_the_tone() {
        let fs = 100.0;
        let n = 4096;
        let samples: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 3.5 * i as f64 / fs).sin())
            .collect();
        let (freqs, power) = periodogram(&samples, 1.0 / fs);
        let peak = power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let df = freqs[1] - freqs[0];
        assert!((freqs[peak] - 3.5).abs() <= df, "peak at {}", freqs[peak]);
    }

    #[test]
    fn stationary_tone_has_a_constant_ridge() {
        let fs = 50.0;
        let n = 4096;
        let samples: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 3.5 * i as f64 / fs).sin())
            .collect();
        let map = stft(&samples, 1.0 / fs, 256).unwrap();
        let df = map.frequencies[1] - map.frequencies[0];
        for f in map.ridge() {
            assert!((f - 3.5).abs() <= df, "ridge at {f}");
        }
    }

    #[test]
    fn chirp_ridge_rises_monotonically() {
        let fs = 50.0;
        let n = 8192;
        let duration = n as f64 / fs;
        // Linear chirp 2 -> 6 Hz: phase = 2 pi (f0 t + (f1-f0) t^2 / (2 T)).
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let phase =
                    2.0 * std::f64::consts::PI * (2.0 * t + (6.0 - 2.0) * t * t / (2.0 * duration));
                phase.sin()
            })
            .collect();
        let map = stft(&samples, 1.0 / fs, 512).unwrap();
        let ridge = map.ridge();
        let df = map.frequencies[1] - map.frequencies[0];
        assert!((ridge.first().unwrap() - 2.0).abs() < 3.0 * df);
        assert!((ridge.last().unwrap() - 6.0).abs() < 3.0 * df);
        for pair in ridge.windows(2) {
            assert!(pair[1] >= pair[0] - df, "ridge dipped: {} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn silence_gives_an_all_zero_map() {
        let samples = vec![0.0; 1024];
        let map = stft(&samples, 0.01, 128).unwrap();
        assert!(map
            .power
            .iter()
            .all(|column| column.iter().all(|&p| p == 0.0)));
        assert!(map.ridge().iter().all(|&f| f == 0.0));
    }

    #[test]
    fn window_longer_than_series_is_rejected() {
        let samples = vec![0.0; 100];
        assert!(stft(&samples, 0.01, 128).is_err());
    }
}
