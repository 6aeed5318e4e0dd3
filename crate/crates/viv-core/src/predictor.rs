//! Frequency-domain, space-sharing cross-flow VIV response and fatigue
//! prediction.
//!
//! The flow is: find the modes whose added-mass-adjusted natural
//! frequency falls in the excited non-dimensional frequency band
//! somewhere along the pipe, partition the pipe into zones where each
//! excitable location is owned by exactly one frequency, converge the
//! response amplitude of each zone by balancing power fed in by the
//! excitation coefficient against power dissipated over the rest of the
//! pipe, then turn modal curvature into stress and narrow-band fatigue
//! damage.

use serde::{Deserialize, Serialize};

use crate::characterize::CaseRecord;
use crate::error::{Error, Result};
use crate::hydro::CeParameterSet;
use crate::structural::{CurrentProfile, PipeModel, WATER_DENSITY};

/// Seconds per year used in damage-rate accumulation.
pub const SECONDS_PER_YEAR: f64 = 3.156e7;

/// Relative power residual below which the energy balance is converged.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Hard iteration cap for the amplitude bisection.
pub const MAX_BALANCE_ITERATIONS: usize = 200;

/// Single-slope S-N curve `log10(N) = log_intercept - inverse_slope * log10(S)`
/// with the stress range S in MPa.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SnCurve {
    /// Inverse slope m.
    pub inverse_slope: f64,
    /// Base-10 intercept log10(a).
    pub log_intercept: f64,
}

impl SnCurve {
    pub fn new(inverse_slope: f64, log_intercept: f64) -> Result<Self> {
        let curve = Self {
            inverse_slope,
            log_intercept,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inverse_slope > 0.0) {
            return Err(Error::InvalidSnCurve(format!(
                "inverse slope must be positive, got {}",
                self.inverse_slope
            )));
        }
        if !self.log_intercept.is_finite() {
            return Err(Error::InvalidSnCurve(format!(
                "log intercept must be finite, got {}",
                self.log_intercept
            )));
        }
        Ok(())
    }

    /// Cycles to failure at stress range `stress_mpa`.
    pub fn cycles_to_failure(&self, stress_mpa: f64) -> f64 {
        10f64.powf(self.log_intercept - self.inverse_slope * stress_mpa.log10())
    }

    /// Damage accumulated per year of narrow-band cycling at `frequency`
    /// Hz and stress range `stress_mpa`.
    pub fn damage_rate(&self, stress_mpa: f64, frequency: f64) -> f64 {
        if stress_mpa <= 0.0 || frequency <= 0.0 {
            return 0.0;
        }
        frequency * SECONDS_PER_YEAR * stress_mpa.powf(self.inverse_slope)
            / 10f64.powf(self.log_intercept)
    }
}

/// A section of pipe owned by one response frequency.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FrequencyZone {
    /// Response frequency, Hz (added-mass adjusted natural frequency).
    pub response_frequency: f64,
    /// Mode number.
    pub mode: u32,
    /// Zone start along the pipe, m.
    pub z_start: f64,
    /// Zone end along the pipe, m.
    pub z_end: f64,
    /// Converged amplitude ratio at the mode-shape maximum; zero until
    /// the energy balance has run.
    pub amplitude_ratio: f64,
}

/// Prediction output: converged zones plus per-sensor stress and damage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionResult {
    pub zones: Vec<FrequencyZone>,
    /// Sensor positions the stresses refer to, m.
    pub sensor_positions: Vec<f64>,
    /// Per-sensor fundamental stress std, Pa (root-sum-square across
    /// zones).
    pub stress_std: Vec<f64>,
    /// Per-sensor damage rate, 1/year, summed over zones.
    pub damage_rate: Vec<f64>,
    /// Largest per-sensor damage rate.
    pub max_damage_rate: f64,
}

/// Added-mass-adjusted natural frequency of mode `n`.
pub fn adjusted_frequency(pipe: &PipeModel, params: &CeParameterSet, n: u32) -> Result<f64> {
    let info = pipe.modal_info(n)?;
    let added = params.added_mass
        * WATER_DENSITY
        * std::f64::consts::PI
        * pipe.outer_diameter.powi(2)
        / 4.0;
    Ok(info.f_total * (pipe.mass_per_length / (pipe.mass_per_length + added)).sqrt())
}

/// Spatial integration grid along the pipe.
pub fn spatial_grid(pipe: &PipeModel) -> Vec<f64> {
    let from_slenderness = (pipe.length / pipe.outer_diameter / 2.0).ceil() as usize;
    let count = from_slenderness.max(200);
    (0..=count)
        .map(|i| pipe.length * i as f64 / count as f64)
        .collect()
}

fn excitable_at(params: &CeParameterSet, f_response: f64, diameter: f64, speed: f64) -> bool {
    if speed <= 0.0 {
        return false;
    }
    let fhat = f_response * diameter / speed;
    fhat >= params.fhat_min && fhat <= params.fhat_max
}

/// All modes whose added-mass-adjusted natural frequency is excitable
/// somewhere along the pipe, sorted by descending excitable length.
pub fn candidate_frequencies(
    pipe: &PipeModel,
    profile: &CurrentProfile,
    params: &CeParameterSet,
) -> Result<Vec<(u32, f64)>> {
    pipe.validate()?;
    profile.validate(pipe.length)?;
    params.validate()?;

    let max_speed = profile.max_speed();
    if max_speed <= 0.0 {
        return Ok(Vec::new());
    }
    // A mode is excitable somewhere only if fhat at the fastest flow is
    // at or below the upper band edge; adjusted frequency grows without
    // bound in n, so the scan terminates.
    let frequency_ceiling = max_speed * params.fhat_max / pipe.outer_diameter;
    let grid = spatial_grid(pipe);
    let dz = grid[1] - grid[0];

    let mut candidates: Vec<(u32, f64, f64)> = Vec::new();
    let mut n = 1u32;
    loop {
        let f = adjusted_frequency(pipe, params, n)?;
        if f > frequency_ceiling {
            break;
        }
        let excitable_length = dz
            * grid
                .iter()
                .filter(|&&z| excitable_at(params, f, pipe.outer_diameter, profile.speed_at(z)))
                .count() as f64;
        if excitable_length > 0.0 {
            candidates.push((n, f, excitable_length));
        }
        n += 1;
        if n > 10_000 {
            break;
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    Ok(candidates.into_iter().map(|(n, f, _)| (n, f)).collect())
}

/// Partition the excitable part of the pipe into zones: each location
/// goes to the candidate whose local non-dimensional frequency is
/// closest to the middle of the excitation band; contiguous runs form
/// zones and zones shorter than two diameters are dropped.
pub fn assign_zones(
    candidates: &[(u32, f64)],
    profile: &CurrentProfile,
    pipe: &PipeModel,
    params: &CeParameterSet,
) -> Vec<FrequencyZone> {
    let grid = spatial_grid(pipe);
    let band_mid = 0.5 * (params.fhat_min + params.fhat_max);

    // Winner per grid point, or None where nothing is excitable.
    let winners: Vec<Option<usize>> = grid
        .iter()
        .map(|&z| {
            let speed = profile.speed_at(z);
            let mut best: Option<(usize, f64)> = None;
            for (idx, &(_, f)) in candidates.iter().enumerate() {
                if excitable_at(params, f, pipe.outer_diameter, speed) {
                    let distance = (f * pipe.outer_diameter / speed - band_mid).abs();
                    if best.is_none_or(|(_, d)| distance < d) {
                        best = Some((idx, distance));
                    }
                }
            }
            best.map(|(idx, _)| idx)
        })
        .collect();

    let mut zones = Vec::new();
    let mut run_start: Option<(usize, usize)> = None; // (candidate, first grid index)
    for i in 0..=winners.len() {
        let winner = if i < winners.len() { winners[i] } else { None };
        if let Some((current, start)) = run_start {
            if winner != Some(current) {
                let z_start = grid[start];
                let z_end = grid[i - 1];
                if z_end - z_start >= 2.0 * pipe.outer_diameter {
                    let (mode, f) = candidates[current];
                    zones.push(FrequencyZone {
                        response_frequency: f,
                        mode,
                        z_start,
                        z_end,
                        amplitude_ratio: 0.0,
                    });
                }
                run_start = None;
            }
        }
        if run_start.is_none() {
            if let Some(c) = winner {
                run_start = Some((c, i));
            }
        }
    }
    zones
}

/// Power flows of the zone's mode at reference amplitude ratio `ad`:
/// positive excitation fed in over the zone, the magnitude of negative
/// (damping) contributions inside the zone, and dissipation over the
/// rest of the pipe. All in W, all non-negative.
#[derive(Debug, Clone, Copy)]
pub struct PowerBalance {
    pub fed_in: f64,
    pub damped_in_zone: f64,
    pub damped_outside: f64,
}

impl PowerBalance {
    pub fn residual(&self) -> f64 {
        self.fed_in - self.damped_in_zone - self.damped_outside
    }

    /// Residual relative to the gross power flow.
    pub fn relative_residual(&self) -> f64 {
        let scale = self
            .fed_in
            .max(self.damped_in_zone + self.damped_outside)
            .max(f64::MIN_POSITIVE);
        self.residual().abs() / scale
    }
}

/// Power bookkeeping of one zone at a trial amplitude ratio.
pub fn zone_power(
    zone: &FrequencyZone,
    pipe: &PipeModel,
    profile: &CurrentProfile,
    params: &CeParameterSet,
    ad: f64,
) -> PowerBalance {
    let grid = spatial_grid(pipe);
    let omega = 2.0 * std::f64::consts::PI * zone.response_frequency;
    let diameter = pipe.outer_diameter;
    let mode_pi_over_l = f64::from(zone.mode) * std::f64::consts::PI / pipe.length;

    let mut balance = PowerBalance {
        fed_in: 0.0,
        damped_in_zone: 0.0,
        damped_outside: 0.0,
    };
    for pair in grid.windows(2) {
        let dz = pair[1] - pair[0];
        for (z, weight) in [(pair[0], 0.5 * dz), (pair[1], 0.5 * dz)] {
            let speed = profile.speed_at(z);
            if speed <= 0.0 {
                continue;
            }
            let shape = (mode_pi_over_l * z).sin().abs();
            let local_ad = ad * shape;
            let velocity = omega * ad * diameter * shape;
            let base = 0.5 * WATER_DENSITY * speed * speed * diameter * velocity;
            if z >= zone.z_start && z <= zone.z_end {
                let fhat = zone.response_frequency * diameter / speed;
                let contribution = weight * base * params.ce(local_ad, fhat);
                if contribution >= 0.0 {
                    balance.fed_in += contribution;
                } else {
                    balance.damped_in_zone -= contribution;
                }
            } else {
                balance.damped_outside += weight * base * params.damping * local_ad;
            }
        }
    }
    balance
}

/// Converge the zone's reference amplitude ratio so that excitation
/// power balances dissipation. Returns 0 when the surface feeds no
/// energy at small amplitude, and saturates at 1.5x the largest
/// zero-crossing amplitude when excitation still wins there.
pub fn energy_balance(
    zone: &FrequencyZone,
    pipe: &PipeModel,
    profile: &CurrentProfile,
    params: &CeParameterSet,
) -> Result<f64> {
    let cap = 1.5 * params.max_zero_crossing();

    let probe = 1e-9 * cap;
    if zone_power(zone, pipe, profile, params, probe).residual() <= 0.0 {
        return Ok(0.0);
    }
    if zone_power(zone, pipe, profile, params, cap).residual() >= 0.0 {
        return Ok(cap);
    }

    let mut lo = probe;
    let mut hi = cap;
    for iteration in 0..MAX_BALANCE_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let balance = zone_power(zone, pipe, profile, params, mid);
        if balance.relative_residual() < RESIDUAL_TOLERANCE {
            return Ok(mid);
        }
        if balance.residual() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        // Reaching floating-point resolution without meeting the
        // residual tolerance means the residual is too steep to resolve
        // further.
        if hi - lo < f64::EPSILON * cap {
            return Err(Error::NotConverged {
                iterations: iteration + 1,
                lo,
                hi,
                residual: zone_power(zone, pipe, profile, params, 0.5 * (lo + hi))
                    .relative_residual(),
            });
        }
    }
    let balance = zone_power(zone, pipe, profile, params, 0.5 * (lo + hi));
    Err(Error::NotConverged {
        iterations: MAX_BALANCE_ITERATIONS,
        lo,
        hi,
        residual: balance.relative_residual(),
    })
}

/// Modal-curvature stress and narrow-band fatigue at the sensor
/// positions, accumulated over the converged zones.
pub fn stress_and_fatigue(
    zones: &[FrequencyZone],
    pipe: &PipeModel,
    sn: &SnCurve,
    sensor_positions: &[f64],
) -> Result<PredictionResult> {
    sn.validate()?;
    let stress_per_curvature = pipe.stress_per_curvature.ok_or_else(|| {
        Error::InvalidPipe(format!(
            "pipe '{}' has no stress_per_curvature; stress output is not available",
            pipe.name
        ))
    })?;

    let mut stress_sq = vec![0.0; sensor_positions.len()];
    let mut damage = vec![0.0; sensor_positions.len()];
    for zone in zones {
        let mode_pi_over_l = f64::from(zone.mode) * std::f64::consts::PI / pipe.length;
        let curvature_peak =
            mode_pi_over_l.powi(2) * zone.amplitude_ratio * pipe.outer_diameter;
        for (i, &z) in sensor_positions.iter().enumerate() {
            let shape = (mode_pi_over_l * z).sin().abs();
            let std_1w = stress_per_curvature * curvature_peak * shape / 2f64.sqrt();
            let range_mpa = 2.0 * 2f64.sqrt() * std_1w / 1e6;
            stress_sq[i] += std_1w * std_1w;
            damage[i] += sn.damage_rate(range_mpa, zone.response_frequency);
        }
    }
    let stress_std: Vec<f64> = stress_sq.iter().map(|v| v.sqrt()).collect();
    let max_damage_rate = damage.iter().cloned().fold(0.0, f64::max);
    Ok(PredictionResult {
        zones: zones.to_vec(),
        sensor_positions: sensor_positions.to_vec(),
        stress_std,
        damage_rate: damage,
        max_damage_rate,
    })
}

/// Full prediction for one case with the given parameter set.
pub fn predict(case: &CaseRecord, params: &CeParameterSet, sn: &SnCurve) -> Result<PredictionResult> {
    let candidates = candidate_frequencies(&case.pipe, &case.profile, params)?;
    let mut zones = assign_zones(&candidates, &case.profile, &case.pipe, params);
    for zone in &mut zones {
        zone.amplitude_ratio = energy_balance(zone, &case.pipe, &case.profile, params)?;
    }
    stress_and_fatigue(&zones, &case.pipe, sn, &case.sensor_positions())
}
