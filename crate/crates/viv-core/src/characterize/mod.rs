//! Response characterization: extract the three clustering features
//! (response mode order, 3rd-to-1st harmonic stress ratio, bending
//! stiffness ratio) and diagnostic time-frequency maps from measured or
//! synthetic sensor records.

mod filter;
mod spectrum;

pub use filter::{bandpass_filtfilt, design_bandpass, filtfilt, Biquad};
pub use spectrum::{periodogram, stft, TimeFrequencyMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structural::{CurrentProfile, PipeModel};

/// Half-width of the harmonic isolation bands, as a fraction of the
/// target frequency.
pub const BAND_HALF_WIDTH: f64 = 0.25;

/// Minimum fraction of total spectral power the peak (and its two
/// neighbours) must hold for the dominant frequency to be trusted.
pub const PEAK_FRACTION_THRESHOLD: f64 = 0.05;

/// Default short-time window for time-frequency maps, seconds.
pub const DEFAULT_STFT_WINDOW: f64 = 2.0;

/// Bending stress measured at one position along the pipe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensorSeries {
    /// Sensor position along the pipe, m.
    pub position: f64,
    /// Sample interval, s.
    pub dt: f64,
    /// Bending stress samples, Pa, stored as an embedded CSV block.
    #[serde(with = "crate::data::sample_csv")]
    pub samples: Vec<f64>,
}

impl SensorSeries {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidCase(format!(
                "sensor at z = {}: dt must be positive, got {}",
                self.position, self.dt
            )));
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCase(format!(
                "sensor at z = {}: non-finite sample",
                self.position
            )));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if !self.samples.is_empty() && self.samples.len() < 1024 {
            warnings.push(format!(
                "sensor at z = {}: only {} samples; at least 1024 recommended for spectral stability",
                self.position,
                self.samples.len()
            ));
        }
        warnings
    }
}

/// One test case: a pipe in a current, with measured sensor records and
/// optional per-sensor fatigue summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseRecord {
    /// File format version.
    pub schema_version: u32,
    pub name: String,
    pub pipe: PipeModel,
    pub profile: CurrentProfile,
    pub sensors: Vec<SensorSeries>,
    /// Measured damage rate per sensor, 1/year, aligned with `sensors`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_fatigue: Option<Vec<f64>>,
    /// Dominant response frequency, Hz, if already known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominant_frequency: Option<f64>,
}

/// Current case file format version.
pub const SCHEMA_VERSION: u32 = 1;

impl CaseRecord {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        self.pipe.validate()?;
        self.profile.validate(self.pipe.length)?;
        if self.sensors.len() < 2 {
            return Err(Error::InvalidCase(format!(
                "case '{}': need at least 2 sensors, got {}",
                self.name,
                self.sensors.len()
            )));
        }
        for sensor in &self.sensors {
            sensor.validate()?;
            if sensor.position < 0.0 || sensor.position > self.pipe.length {
                return Err(Error::InvalidCase(format!(
                    "case '{}': sensor position {} outside [0, {}]",
                    self.name, sensor.position, self.pipe.length
                )));
            }
        }
        let dts: Vec<f64> = self
            .sensors
            .iter()
            .filter(|s| !s.samples.is_empty())
            .map(|s| s.dt)
            .collect();
        if dts.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-12 * w[0]) {
            return Err(Error::InvalidCase(format!(
                "case '{}': sensors with samples must share the sample interval",
                self.name
            )));
        }
        if let Some(fatigue) = &self.measured_fatigue {
            if fatigue.len() != self.sensors.len() {
                return Err(Error::InvalidCase(format!(
                    "case '{}': {} fatigue entries for {} sensors",
                    self.name,
                    fatigue.len(),
                    self.sensors.len()
                )));
            }
            if fatigue.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::InvalidCase(format!(
                    "case '{}': measured fatigue must be non-negative",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut warnings = self.pipe.warnings();
        for sensor in &self.sensors {
            warnings.extend(sensor.warnings());
        }
        warnings
    }

    pub fn sensor_positions(&self) -> Vec<f64> {
        self.sensors.iter().map(|s| s.position).collect()
    }
}

/// The three clustering features of one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Response mode order.
    pub mode_order: f64,
    /// Max-over-sensors std of the 3rd-harmonic stress over that of the
    /// fundamental.
    pub stress_ratio: f64,
    /// Bending stiffness ratio of the response mode, in [0, 1].
    pub stiffness_ratio: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.mode_order, self.stress_ratio, self.stiffness_ratio]
    }

    pub fn from_array(values: [f64; 3]) -> Self {
        Self {
            mode_order: values[0],
            stress_ratio: values[1],
            stiffness_ratio: values[2],
        }
    }
}

fn std_dev(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Frequency of the largest peak of the cross-sensor averaged power
/// spectrum.
///
/// Errors when all signals are zero or when the peak does not stand out
/// of the spectrum (no dominant response).
pub fn dominant_frequency(case: &CaseRecord) -> Result<f64> {
    if let Some(f) = case.dominant_frequency {
        if f > 0.0 {
            return Ok(f);
        }
    }
    let series: Vec<&SensorSeries> = case.sensors.iter().filter(|s| !s.samples.is_empty()).collect();
    if series.is_empty() {
        return Err(Error::NoResponse);
    }
    for sensor in &series {
        if sensor.samples.len() < 256 {
            return Err(Error::InvalidCase(format!(
                "case '{}': sensor at z = {} has {} samples; dominant-frequency \
                 estimation needs at least 256",
                case.name,
                sensor.position,
                sensor.samples.len()
            )));
        }
    }
    if series
        .iter()
        .all(|s| s.samples.iter().all(|&v| v == 0.0))
    {
        return Err(Error::NoResponse);
    }

    let dt = series[0].dt;
    let shortest = series.iter().map(|s| s.samples.len()).min().unwrap();
    let mut averaged: Vec<f64> = Vec::new();
    let mut frequencies: Vec<f64> = Vec::new();
    for sensor in &series {
        let (freqs, power) = periodogram(&sensor.samples[..shortest], dt);
        if averaged.is_empty() {
            averaged = power;
            frequencies = freqs;
        } else {
            for (acc, p) in averaged.iter_mut().zip(power) {
                *acc += p;
            }
        }
    }

    // Skip the DC bin when hunting for the peak.
    let mut peak = 1;
    for k in 1..averaged.len() {
        if averaged[k] > averaged[peak] {
            peak = k;
        }
    }
    let total: f64 = averaged[1..].iter().sum();
    if total <= 0.0 {
        return Err(Error::NoResponse);
    }
    let lo = peak.saturating_sub(1).max(1);
    let hi = (peak + 1).min(averaged.len() - 1);
    let peak_fraction = averaged[lo..=hi].iter().sum::<f64>() / total;
    if peak_fraction < PEAK_FRACTION_THRESHOLD {
        return Err(Error::NoDominantPeak {
            peak_fraction,
            required: PEAK_FRACTION_THRESHOLD,
        });
    }
    Ok(frequencies[peak])
}

/// Ratio of the max-over-sensors std of stress in the third-harmonic
/// band over the fundamental band, both isolated with +-25% zero-phase
/// band-passes around `omega1` and `3 omega1` (Hz).
pub fn stress_ratio(case: &CaseRecord, omega1: f64) -> Result<f64> {
    if !(omega1 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dominant frequency must be positive, got {omega1}"
        )));
    }
    let series: Vec<&SensorSeries> = case.sensors.iter().filter(|s| !s.samples.is_empty()).collect();
    if series.is_empty() {
        return Err(Error::NoResponse);
    }
    let dt = series[0].dt;
    let nyquist = 0.5 / dt;
    let band3_high = (1.0 + BAND_HALF_WIDTH) * 3.0 * omega1;
    if band3_high >= nyquist {
        return Err(Error::NyquistViolation {
            band_low: (1.0 - BAND_HALF_WIDTH) * 3.0 * omega1,
            band_high: band3_high,
            nyquist,
        });
    }

    let mut max_fundamental: f64 = 0.0;
    let mut max_third: f64 = 0.0;
    for sensor in &series {
        let fundamental = bandpass_filtfilt(
            &sensor.samples,
            dt,
            (1.0 - BAND_HALF_WIDTH) * omega1,
            (1.0 + BAND_HALF_WIDTH) * omega1,
        )?;
        let third = bandpass_filtfilt(
            &sensor.samples,
            dt,
            (1.0 - BAND_HALF_WIDTH) * 3.0 * omega1,
            band3_high,
        )?;
        max_fundamental = max_fundamental.max(std_dev(&fundamental));
        max_third = max_third.max(std_dev(&third));
    }
    if max_fundamental <= 0.0 {
        return Err(Error::ZeroFundamental);
    }
    Ok(max_third / max_fundamental)
}

/// Natural-frequency index closest to the dominant response frequency.
pub fn mode_order(case: &CaseRecord, omega1: f64) -> Result<u32> {
    if case.sensors.len() < 4 {
        return Err(Error::InvalidCase(format!(
            "case '{}': mode-order estimation needs at least 4 sensors, got {}",
            case.name,
            case.sensors.len()
        )));
    }
    if !(omega1 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dominant frequency must be positive, got {omega1}"
        )));
    }
    // f_total is strictly increasing in the mode number, so the closest
    // index brackets the first crossing.
    let mut n = 1u32;
    loop {
        let f = case.pipe.modal_info(n)?.f_total;
        if f >= omega1 {
            if n == 1 {
                return Ok(1);
            }
            let below = case.pipe.modal_info(n - 1)?.f_total;
            return Ok(if omega1 - below <= f - omega1 { n - 1 } else { n });
        }
        n += 1;
        if n > 1_000_000 {
            return Err(Error::InvalidArgument(format!(
                "no natural frequency reaches {omega1} Hz within 1e6 modes"
            )));
        }
    }
}

/// Full feature extraction for one case: dominant frequency, mode
/// order, stress ratio, and the bending stiffness ratio of the matched
/// mode.
pub fn features(case: &CaseRecord) -> Result<FeatureVector> {
    case.validate()?;
    let omega1 = dominant_frequency(case)?;
    let n = mode_order(case, omega1)?;
    let ratio = stress_ratio(case, omega1)?;
    let info = case.pipe.modal_info(n)?;
    Ok(FeatureVector {
        mode_order: f64::from(n),
        stress_ratio: ratio,
        stiffness_ratio: info.stiffness_ratio,
    })
}

/// Short-time spectral map of one sensor series, for time-frequency
/// diagnostics.
pub fn time_frequency_map(series: &SensorSeries, window: f64) -> Result<TimeFrequencyMap> {
    series.validate()?;
    if !(window > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window must be positive, got {window}"
        )));
    }
    let window_samples = (window / series.dt).round() as usize;
    stft(&series.samples, series.dt, window_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structural::CurrentProfile;

    fn test_pipe() -> PipeModel {
        PipeModel {
            name: "ndp-like".into(),
            length: 38.0,
            outer_diameter: 0.027,
            mass_ratio: 1.632,
            mass_per_length: 0.93441,
            bending_stiffness: 37.2,
            mean_tension: 4000.0,
            stress_per_curvature: Some(2.0e9),
        }
    }

    fn sensor(position: f64, dt: f64, samples: Vec<f64>) -> SensorSeries {
        SensorSeries {
            position,
            dt,
            samples,
        }
    }

    /// Case with the same signal on every sensor.
    fn case_with_signal(samples: Vec<f64>, dt: f64, sensor_count: usize) -> CaseRecord {
        let pipe = test_pipe();
        let sensors = (0..sensor_count)
            .map(|i| {
                sensor(
                    pipe.length * (i as f64 + 0.5) / sensor_count as f64,
                    dt,
                    samples.clone(),
                )
            })
            .collect();
        CaseRecord {
            schema_version: SCHEMA_VERSION,
            name: "synthetic".into(),
            pipe,
            profile: CurrentProfile::uniform(38.0, 0.5),
            sensors,
            measured_fatigue: None,
            dominant_frequency: None,
        }
    }

    fn tone(freq: f64, amplitude: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| amplitude * (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect()
    }

    #[test]
    fn single_sinusoid_frequency_recovered_within_one_bin() {
        let fs = 50.0;
        let n = 4096;
        let case = case_with_signal(tone(3.5, 1.0, fs, n), 1.0 / fs, 4);
        let f = dominant_frequency(&case).unwrap();
        let bin = fs / n as f64;
        assert!((f - 3.5).abs() <= bin, "f = {f}");
    }

    #[test]
    fn white_noise_has_no_dominant_peak() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..4096).map(|_| rng.random::<f64>() - 0.5).collect();
        let case = case_with_signal(samples, 0.02, 4);
        match dominant_frequency(&case) {
            Err(Error::NoDominantPeak { .. }) => {}
            other => panic!("expected NoDominantPeak, got {other:?}"),
        }
    }

    #[test]
    fn stronger_of_two_tones_wins() {
        let fs = 50.0;
        let n = 8192;
        let mixed: Vec<f64> = tone(2.0, 1.0, fs, n)
            .iter()
            .zip(tone(6.0, 0.3, fs, n))
            .map(|(a, b)| a + b)
            .collect();
        let case = case_with_signal(mixed, 1.0 / fs, 4);
        let f = dominant_frequency(&case).unwrap();
        assert!((f - 2.0).abs() <= fs / n as f64, "f = {f}");
    }

    #[test]
    fn all_zero_signals_error() {
        let case = case_with_signal(vec![0.0; 2048], 0.02, 4);
        assert!(matches!(dominant_frequency(&case), Err(Error::NoResponse)));
    }

    #[test]
    fn stored_dominant_frequency_wins_over_estimation() {
        let fs = 50.0;
        let mut case = case_with_signal(tone(3.5, 1.0, fs, 4096), 1.0 / fs, 4);
        case.dominant_frequency = Some(2.2);
        assert_eq!(dominant_frequency(&case).unwrap(), 2.2);
    }

    #[test]
    fn missing_fundamental_is_an_error() {
        // Dead sensors leave nothing in the fundamental band.
        let case = case_with_signal(vec![0.0; 2048], 0.02, 4);
        assert!(matches!(
            stress_ratio(&case, 3.0),
            Err(Error::ZeroFundamental)
        ));
    }

    #[test]
    fn pure_fundamental_has_zero_stress_ratio() {
        let fs = 50.0;
        let case = case_with_signal(tone(3.0, 1.0, fs, 8192), 1.0 / fs, 4);
        let r = stress_ratio(&case, 3.0).unwrap();
        assert!(r < 0.02, "r = {r}");
    }

    #[test]
    fn two_tone_ratio_recovered() {
        let fs = 50.0;
        let n = 8192;
        let mixed: Vec<f64> = tone(3.0, 1.0, fs, n)
            .iter()
            .zip(tone(9.0, 0.25, fs, n))
            .map(|(a, b)| a + b)
            .collect();
        let case = case_with_signal(mixed, 1.0 / fs, 4);
        let r = stress_ratio(&case, 3.0).unwrap();
        assert!((r - 0.25).abs() <= 0.02, "r = {r}");
    }

    #[test]
    fn equal_tones_give_unit_ratio() {
        let fs = 50.0;
        let n = 8192;
        let mixed: Vec<f64> = tone(2.5, 0.7, fs, n)
            .iter()
            .zip(tone(7.5, 0.7, fs, n))
            .map(|(a, b)| a + b)
            .collect();
        let case = case_with_signal(mixed, 1.0 / fs, 4);
        let r = stress_ratio(&case, 2.5).unwrap();
        assert!((r - 1.0).abs() <= 0.02, "r = {r}");
    }

    #[test]
    fn stress_ratio_is_scale_invariant() {
        let fs = 50.0;
        let n = 8192;
        let mixed: Vec<f64> = tone(3.0, 1.0, fs, n)
            .iter()
            .zip(tone(9.0, 0.3, fs, n))
            .map(|(a, b)| a + b)
            .collect();
        let scaled: Vec<f64> = mixed.iter().map(|v| v * 123.4).collect();
        let r1 = stress_ratio(&case_with_signal(mixed, 1.0 / fs, 4), 3.0).unwrap();
        let r2 = stress_ratio(&case_with_signal(scaled, 1.0 / fs, 4), 3.0).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn third_harmonic_band_beyond_nyquist_errors() {
        let fs = 10.0;
        let case = case_with_signal(tone(3.0, 1.0, fs, 2048), 1.0 / fs, 4);
        assert!(matches!(
            stress_ratio(&case, 3.0),
            Err(Error::NyquistViolation { .. })
        ));
    }

    #[test]
    fn mode_order_matches_exact_natural_frequency() {
        let case = case_with_signal(vec![0.0; 256], 0.02, 4);
        let f5 = case.pipe.modal_info(5).unwrap().f_total;
        assert_eq!(mode_order(&case, f5).unwrap(), 5);
    }

    #[test]
    fn mode_order_rounds_to_the_closer_neighbour() {
        let case = case_with_signal(vec![0.0; 256], 0.02, 4);
        let f5 = case.pipe.modal_info(5).unwrap().f_total;
        let f6 = case.pipe.modal_info(6).unwrap().f_total;
        let just_past_midpoint = 0.5 * (f5 + f6) + 0.01 * (f6 - f5);
        assert_eq!(mode_order(&case, just_past_midpoint).unwrap(), 6);
    }

    #[test]
    fn ndp_band_response_sits_in_the_published_mode_range() {
        let case = case_with_signal(vec![0.0; 256], 0.02, 4);
        let n = mode_order(&case, 3.5).unwrap();
        assert!((4..=14).contains(&n), "n = {n}");
    }

    #[test]
    fn mode_order_needs_four_sensors() {
        let case = case_with_signal(vec![0.0; 256], 0.02, 3);
        assert!(mode_order(&case, 3.5).is_err());
    }

    #[test]
    fn features_compose_on_a_standing_wave_case() {
        // Mode-5 standing wave at the exact natural frequency, with a
        // third-harmonic tone at configurable amplitude ratio.
        let pipe = test_pipe();
        let f5 = pipe.modal_info(5).unwrap().f_total;
        let fs = 50.0;
        let n = 8192;
        let sensor_count = 8;
        let sensors: Vec<SensorSeries> = (0..sensor_count)
            .map(|i| {
                let z = pipe.length * (i as f64 + 0.5) / sensor_count as f64;
                let shape = (5.0 * std::f64::consts::PI * z / pipe.length).sin();
                let samples: Vec<f64> = (0..n)
                    .map(|k| {
                        let t = k as f64 / fs;
                        let w = 2.0 * std::f64::consts::PI * f5 * t;
                        shape * (w.sin() + 0.3 * (3.0 * w).sin())
                    })
                    .collect();
                SensorSeries {
                    position: z,
                    dt: 1.0 / fs,
                    samples,
                }
            })
            .collect();
        let case = CaseRecord {
            schema_version: SCHEMA_VERSION,
            name: "mode5".into(),
            pipe,
            profile: CurrentProfile::uniform(38.0, 0.5),
            sensors,
            measured_fatigue: None,
            dominant_frequency: None,
        };
        let fv = features(&case).unwrap();
        assert_eq!(fv.mode_order, 5.0);
        assert!((fv.stress_ratio - 0.3).abs() <= 0.02, "R = {}", fv.stress_ratio);
        assert!(
            (fv.stiffness_ratio - 0.0398).abs() < 1e-3,
            "F = {}",
            fv.stiffness_ratio
        );
    }

    #[test]
    fn features_are_deterministic() {
        let fs = 50.0;
        let case = case_with_signal(tone(3.0, 1.0, fs, 4096), 1.0 / fs, 4);
        let a = features(&case).unwrap();
        let b = features(&case).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_response_features_error() {
        let case = case_with_signal(vec![0.0; 4096], 0.02, 4);
        assert!(features(&case).is_err());
    }
}
