//! Persistence for cases, parameter sets and models; the bundled
//! reference pipe table; and the synthetic-case generator used as a
//! round-trip oracle for feature extraction and calibration.
//!
//! All files are JSON. Sensor sample arrays are embedded as CSV strings
//! to keep case files compact and diff-friendly. Saves are canonical
//! (stable field order, pretty-printed, trailing newline) so that
//! `save(load(x))` is byte-identical.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::characterize::{CaseRecord, SensorSeries, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::hydro::CeParameterSet;
use crate::predictor::{predict, SnCurve};
use crate::structural::{CurrentProfile, PipeModel};

/// Serde adapter storing `Vec<f64>` as a comma-separated string.
pub mod sample_csv {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(samples: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
        let mut text = String::with_capacity(samples.len() * 8);
        for (i, v) in samples.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            text.push_str(&format!("{v}"));
        }
        serializer.serialize_str(&text)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<f64>, D::Error> {
        let text = String::deserialize(deserializer)?;
        if text.is_empty() {
            return Ok(Vec::new());
        }
        text.split(',')
            .map(|token| {
                token
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| serde::de::Error::custom(format!("bad sample '{token}': {e}")))
            })
            .collect()
    }
}

/// The reference pipe table bundled with the crate.
pub fn bundled_pipes() -> Vec<PipeModel> {
    serde_json::from_str(include_str!("../data/pipes.json"))
        .expect("bundled pipe table is well-formed")
}

/// Look up a bundled pipe by (case-insensitive) name prefix.
pub fn bundled_pipe(name: &str) -> Result<PipeModel> {
    let needle = name.to_lowercase();
    bundled_pipes()
        .into_iter()
        .find(|p| p.name.to_lowercase().starts_with(&needle))
        .ok_or_else(|| Error::InvalidArgument(format!("no bundled pipe matches '{name}'")))
}

fn json_pointer(path: &serde_path_to_error::Path, message: &str) -> String {
    let mut pointer = String::new();
    for segment in path.iter() {
        use serde_path_to_error::Segment;
        match segment {
            Segment::Map { key } => {
                pointer.push('/');
                pointer.push_str(key);
            }
            Segment::Seq { index } => {
                pointer.push('/');
                pointer.push_str(&index.to_string());
            }
            Segment::Enum { variant } => {
                pointer.push('/');
                pointer.push_str(variant);
            }
            Segment::Unknown => {}
        }
    }
    // serde reports missing fields at the parent object; extend the
    // pointer with the field name so the error points at the hole.
    if let Some(rest) = message.split("missing field `").nth(1) {
        if let Some(field) = rest.split('`').next() {
            pointer.push('/');
            pointer.push_str(field);
        }
    }
    if pointer.is_empty() {
        pointer.push('/');
    }
    pointer
}

/// Parse JSON with schema errors that carry a JSON pointer to the
/// offending field.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut deserializer = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut deserializer).map_err(|e| {
        let message = e.inner().to_string();
        Error::Schema {
            pointer: json_pointer(e.path(), &message),
            message,
        }
    })
}

/// Canonical JSON form: pretty-printed with a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    from_json_str(&text)
}

pub fn save_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_canonical_json(value)?)?;
    Ok(())
}

/// Load and validate a case record.
pub fn load_case(path: impl AsRef<Path>) -> Result<CaseRecord> {
    let case: CaseRecord = load_json(path)?;
    case.validate()?;
    Ok(case)
}

pub fn save_case(case: &CaseRecord, path: impl AsRef<Path>) -> Result<()> {
    case.validate()?;
    save_json(case, path)
}

/// Load every `*.json` case in a directory, sorted by file name.
pub fn load_cases_dir(dir: impl AsRef<Path>) -> Result<Vec<CaseRecord>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    paths.iter().map(load_case).collect()
}

/// Load and validate an excitation parameter set.
pub fn load_params(path: impl AsRef<Path>) -> Result<CeParameterSet> {
    let params: CeParameterSet = load_json(path)?;
    params.validate()?;
    Ok(params)
}

/// Load and validate an S-N curve.
pub fn load_sn(path: impl AsRef<Path>) -> Result<SnCurve> {
    let sn: SnCurve = load_json(path)?;
    sn.validate()?;
    Ok(sn)
}

/// Knobs for the synthetic-case generator.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub name: String,
    /// Number of equally spaced interior sensors.
    pub sensor_count: usize,
    /// Samples per sensor series.
    pub sample_count: usize,
    /// Amplitude of the third-harmonic stress tone relative to the
    /// fundamental of the strongest zone.
    pub third_harmonic_ratio: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            sensor_count: 40,
            sample_count: 4096,
            third_harmonic_ratio: 0.0,
        }
    }
}

/// Generate a measured-looking case from a known parameter set: run the
/// predictor, build per-sensor stress series as a sum of fundamental
/// tones (one per zone) plus an optional third-harmonic tone, apply
/// multiplicative Gaussian noise, and record the predictor's fatigue as
/// measured fatigue (noise-perturbed). Deterministic per seed.
pub fn synthesize_case(
    pipe: &PipeModel,
    profile: &CurrentProfile,
    truth: &CeParameterSet,
    sn: &SnCurve,
    noise: f64,
    seed: u64,
    options: &SynthOptions,
) -> Result<CaseRecord> {
    if !(0.0..=0.5).contains(&noise) {
        return Err(Error::InvalidArgument(format!(
            "noise must lie in [0, 0.5], got {noise}"
        )));
    }
    if options.sensor_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 sensors, got {}",
            options.sensor_count
        )));
    }
    pipe.validate()?;
    let positions: Vec<f64> = (0..options.sensor_count)
        .map(|i| pipe.length * (i as f64 + 0.5) / options.sensor_count as f64)
        .collect();

    let skeleton = CaseRecord {
        schema_version: SCHEMA_VERSION,
        name: options.name.clone(),
        pipe: pipe.clone(),
        profile: profile.clone(),
        sensors: positions
            .iter()
            .map(|&z| SensorSeries {
                position: z,
                dt: 0.01,
                samples: Vec::new(),
            })
            .collect(),
        measured_fatigue: None,
        dominant_frequency: None,
    };
    let prediction = predict(&skeleton, truth, sn)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Per-zone stress std at each sensor, same modal-curvature formula
    // the predictor uses.
    let spc = pipe.stress_per_curvature.ok_or_else(|| {
        Error::InvalidPipe(format!(
            "pipe '{}' has no stress_per_curvature; cannot synthesize stress series",
            pipe.name
        ))
    })?;
    let zone_stress: Vec<Vec<f64>> = prediction
        .zones
        .iter()
        .map(|zone| {
            let mode_pi_over_l = f64::from(zone.mode) * std::f64::consts::PI / pipe.length;
            let curvature_peak =
                mode_pi_over_l.powi(2) * zone.amplitude_ratio * pipe.outer_diameter;
            positions
                .iter()
                .map(|&z| spc * curvature_peak * (mode_pi_over_l * z).sin().abs() / 2f64.sqrt())
                .collect()
        })
        .collect();

    // Strongest zone carries the configurable third harmonic.
    let dominant = zone_stress
        .iter()
        .enumerate()
        .max_by(|a, b| {
            let ma = a.1.iter().cloned().fold(0.0, f64::max);
            let mb = b.1.iter().cloned().fold(0.0, f64::max);
            ma.total_cmp(&mb)
        })
        .map(|(i, _)| i);

    let f_max = prediction
        .zones
        .iter()
        .map(|z| z.response_frequency)
        .fold(0.0, f64::max);
    let dt = if f_max > 0.0 { 1.0 / (60.0 * f_max) } else { 0.01 };

    let mut sensors = Vec::with_capacity(positions.len());
    for (i, &z) in positions.iter().enumerate() {
        let mut tones: Vec<(f64, f64, f64)> = Vec::new(); // (amplitude, frequency, phase)
        for (zi, zone) in prediction.zones.iter().enumerate() {
            let amplitude = 2f64.sqrt() * zone_stress[zi][i];
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            tones.push((amplitude, zone.response_frequency, phase));
            if Some(zi) == dominant && options.third_harmonic_ratio > 0.0 {
                let phase3: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                tones.push((
                    options.third_harmonic_ratio * amplitude,
                    3.0 * zone.response_frequency,
                    phase3,
                ));
            }
        }
        let samples: Vec<f64> = (0..options.sample_count)
            .map(|k| {
                let t = k as f64 * dt;
                let clean: f64 = tones
                    .iter()
                    .map(|&(a, f, p)| a * (std::f64::consts::TAU * f * t + p).sin())
                    .sum();
                if noise > 0.0 {
                    let g: f64 = rng.sample(StandardNormal);
                    clean * (1.0 + noise * g)
                } else {
                    clean
                }
            })
            .collect();
        sensors.push(SensorSeries {
            position: z,
            dt,
            samples,
        });
    }

    let measured_fatigue: Vec<f64> = prediction
        .damage_rate
        .iter()
        .map(|&d| {
            if noise > 0.0 {
                let g: f64 = rng.sample(StandardNormal);
                d * (noise * g).exp()
            } else {
                d
            }
        })
        .collect();

    let case = CaseRecord {
        schema_version: SCHEMA_VERSION,
        name: options.name.clone(),
        pipe: pipe.clone(),
        profile: profile.clone(),
        sensors,
        measured_fatigue: Some(measured_fatigue),
        dominant_frequency: None,
    };
    case.validate()?;
    Ok(case)
}
