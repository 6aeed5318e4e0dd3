//! Analytic tensioned-beam model of a pipe: natural frequencies, wave
//! speeds, bending-stiffness ratio and vortex shedding frequency.
//!
//! A pinned-pinned tensioned beam has string-like and beam-like stiffness
//! contributions. The string natural frequency grows linearly with mode
//! number while the beam contribution grows quadratically, so the
//! stiffness ratio `f_beam / f_total` tells how bending-dominated a given
//! mode is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Water density used for the mass-ratio consistency check, kg/m³.
pub const WATER_DENSITY: f64 = 1000.0;

/// Default Strouhal number for a bare cylinder.
pub const DEFAULT_STROUHAL: f64 = 0.2;

/// Physical description of a test pipe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipeModel {
    pub name: String,
    /// Pipe length, m.
    pub length: f64,
    /// Outer diameter, m.
    pub outer_diameter: f64,
    /// Mass ratio m* (structural mass over displaced water mass).
    pub mass_ratio: f64,
    /// Mass per unit length, kg/m.
    pub mass_per_length: f64,
    /// Bending stiffness EI, N·m².
    pub bending_stiffness: f64,
    /// Mean tension, N.
    pub mean_tension: f64,
    /// Bending stress produced per unit curvature, Pa·m. Not derivable
    /// from the bundled test-campaign table (wall thickness unknown), so
    /// stress output errors when this is absent.
    pub stress_per_curvature: Option<f64>,
}

impl PipeModel {
    /// Hard invariants; violations are errors.
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) {
            return Err(Error::InvalidPipe(format!(
                "length must be positive, got {}",
                self.length
            )));
        }
        if !(self.outer_diameter > 0.0) {
            return Err(Error::InvalidPipe(format!(
                "outer_diameter must be positive, got {}",
                self.outer_diameter
            )));
        }
        if self.outer_diameter >= self.length {
            return Err(Error::InvalidPipe(format!(
                "outer_diameter {} must be smaller than length {}",
                self.outer_diameter, self.length
            )));
        }
        if !(self.mass_per_length > 0.0) {
            return Err(Error::InvalidPipe(format!(
                "mass_per_length must be positive, got {}",
                self.mass_per_length
            )));
        }
        if !(self.bending_stiffness >= 0.0) {
            return Err(Error::InvalidPipe(format!(
                "bending_stiffness must be non-negative, got {}",
                self.bending_stiffness
            )));
        }
        if !(self.mean_tension > 0.0) {
            return Err(Error::InvalidPipe(format!(
                "mean_tension must be positive, got {}",
                self.mean_tension
            )));
        }
        if let Some(spc) = self.stress_per_curvature {
            if !(spc > 0.0) {
                return Err(Error::InvalidPipe(format!(
                    "stress_per_curvature must be positive when given, got {spc}"
                )));
            }
        }
        Ok(())
    }

    /// Soft consistency checks; violations are reported, not fatal.
    pub fn warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if self.mass_ratio > 0.0 && self.mass_per_length > 0.0 {
            let displaced = WATER_DENSITY * std::f64::consts::PI * self.outer_diameter.powi(2) / 4.0;
            let implied = self.mass_ratio * displaced;
            let deviation = (self.mass_per_length - implied).abs() / self.mass_per_length;
            if deviation > 0.05 {
                warnings.push(format!(
                    "pipe '{}': mass_per_length {:.4} kg/m deviates {:.1}% from \
                     mass_ratio * rho_w * pi D^2/4 = {:.4} kg/m",
                    self.name,
                    self.mass_per_length,
                    deviation * 100.0,
                    implied
                ));
            }
        }
        warnings
    }

    /// Travel speeds of a tensioned string and an un-tensioned beam at
    /// angular frequency `omega` (rad/s). The string speed is
    /// `sqrt(T/m)`; the beam speed is `(omega^2 EI / m)^(1/4)`.
    pub fn wave_speeds(&self, omega: f64) -> Result<(f64, f64)> {
        if !(self.mass_per_length > 0.0) {
            return Err(Error::InvalidPipe(format!(
                "mass_per_length must be positive, got {}",
                self.mass_per_length
            )));
        }
        if !(omega > 0.0) && self.bending_stiffness > 0.0 {
            return Err(Error::InvalidArgument(format!(
                "omega must be positive for the beam wave speed, got {omega}"
            )));
        }
        let string = (self.mean_tension / self.mass_per_length).sqrt();
        let beam = (omega.powi(2) * self.bending_stiffness / self.mass_per_length).powf(0.25);
        Ok((string, beam))
    }

    /// Natural frequencies and wave speeds of mode `n` for the
    /// pinned-pinned tensioned beam.
    pub fn modal_info(&self, n: u32) -> Result<ModalInfo> {
        if n < 1 {
            return Err(Error::InvalidArgument(
                "mode number must be at least 1".into(),
            ));
        }
        self.validate()?;
        let length = self.length;
        let n_f = f64::from(n);
        let f_string =
            n_f / (2.0 * length) * (self.mean_tension / self.mass_per_length).sqrt();
        let f_beam = n_f.powi(2) * std::f64::consts::PI / (2.0 * length.powi(2))
            * (self.bending_stiffness / self.mass_per_length).sqrt();
        let f_total = f_string.hypot(f_beam);
        let stiffness_ratio = if f_total > 0.0 { f_beam / f_total } else { 0.0 };
        let omega = 2.0 * std::f64::consts::PI * f_total;
        let (wave_speed_string, wave_speed_beam) = if self.bending_stiffness > 0.0 {
            self.wave_speeds(omega)?
        } else {
            ((self.mean_tension / self.mass_per_length).sqrt(), 0.0)
        };
        Ok(ModalInfo {
            mode: n,
            f_string,
            f_beam,
            f_total,
            stiffness_ratio,
            wave_speed_string,
            wave_speed_beam,
        })
    }
}

/// Natural-frequency breakdown of one mode.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModalInfo {
    pub mode: u32,
    /// String (tension only) natural frequency, Hz.
    pub f_string: f64,
    /// Beam (bending only) natural frequency, Hz.
    pub f_beam: f64,
    /// Tensioned-beam natural frequency, Hz.
    pub f_total: f64,
    /// Bending-stiffness ratio `f_beam / f_total`, in [0, 1].
    pub stiffness_ratio: f64,
    /// String wave speed at the modal frequency, m/s.
    pub wave_speed_string: f64,
    /// Beam wave speed at the modal frequency, m/s.
    pub wave_speed_beam: f64,
}

/// Vortex shedding frequency `St * U / D` in Hz.
pub fn shedding_frequency(flow_speed: f64, diameter: f64, strouhal: f64) -> Result<f64> {
    if !(diameter > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "diameter must be positive, got {diameter}"
        )));
    }
    if !(flow_speed >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "flow speed must be non-negative, got {flow_speed}"
        )));
    }
    if !(strouhal > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Strouhal number must be positive, got {strouhal}"
        )));
    }
    Ok(strouhal * flow_speed / diameter)
}

/// Current speed sampled along the pipe, linearly interpolated between
/// samples. `z` runs from one end of the pipe to the other.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurrentProfile {
    /// Ordered `(z, U)` samples; z strictly increasing from 0 to the pipe
    /// length, U in m/s.
    pub samples: Vec<(f64, f64)>,
}

impl CurrentProfile {
    pub fn uniform(length: f64, speed: f64) -> Self {
        Self {
            samples: vec![(0.0, speed), (length, speed)],
        }
    }

    /// Linearly sheared current from `speed_at_zero` at z = 0 to
    /// `speed_at_length` at z = L.
    pub fn linear(length: f64, speed_at_zero: f64, speed_at_length: f64) -> Self {
        Self {
            samples: vec![(0.0, speed_at_zero), (length, speed_at_length)],
        }
    }

    pub fn validate(&self, pipe_length: f64) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::InvalidProfile(format!(
                "need at least two samples, got {}",
                self.samples.len()
            )));
        }
        let first = self.samples.first().unwrap().0;
        let last = self.samples.last().unwrap().0;
        if first != 0.0 {
            return Err(Error::InvalidProfile(format!(
                "first sample must sit at z = 0, got {first}"
            )));
        }
        let tol = 1e-9 * pipe_length.max(1.0);
        if (last - pipe_length).abs() > tol {
            return Err(Error::InvalidProfile(format!(
                "last sample must sit at z = L = {pipe_length}, got {last}"
            )));
        }
        for pair in self.samples.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::InvalidProfile(format!(
                    "z must be strictly increasing, got {} after {}",
                    pair[1].0, pair[0].0
                )));
            }
        }
        if let Some((z, u)) = self.samples.iter().find(|(_, u)| !(*u >= 0.0)) {
            return Err(Error::InvalidProfile(format!(
                "speed must be non-negative, got {u} at z = {z}"
            )));
        }
        Ok(())
    }

    /// Linearly interpolated speed at `z`; clamped to the end samples
    /// outside the sampled range.
    pub fn speed_at(&self, z: f64) -> f64 {
        let samples = &self.samples;
        if z <= samples[0].0 {
            return samples[0].1;
        }
        if z >= samples[samples.len() - 1].0 {
            return samples[samples.len() - 1].1;
        }
        // Binary search for the segment containing z.
        let idx = samples.partition_point(|&(zs, _)| zs <= z);
        let (z0, u0) = samples[idx - 1];
        let (z1, u1) = samples[idx];
        let t = (z - z0) / (z1 - z0);
        u0 + t * (u1 - u0)
    }

    /// Largest sampled speed.
    pub fn max_speed(&self) -> f64 {
        self.samples.iter().map(|&(_, u)| u).fold(0.0, f64::max)
    }

    /// Resample at doubled resolution; the piecewise-linear interpolant
    /// is unchanged.
    pub fn refined(&self) -> Self {
        let mut samples = Vec::with_capacity(self.samples.len() * 2 - 1);
        for pair in self.samples.windows(2) {
            let (z0, u0) = pair[0];
            let (z1, u1) = pair[1];
            samples.push((z0, u0));
            samples.push((0.5 * (z0 + z1), 0.5 * (u0 + u1)));
        }
        samples.push(*self.samples.last().unwrap());
        Self { samples }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// NDP high-mode test pipe with the mass per length implied by the
    /// published mass ratio.
    fn ndp_pipe() -> PipeModel {
        let mass_ratio = 1.632;
        let diameter = 0.027;
        let mass = mass_ratio * WATER_DENSITY * std::f64::consts::PI * diameter * diameter / 4.0;
        PipeModel {
            name: "NDP high mode test".into(),
            length: 38.0,
            outer_diameter: diameter,
            mass_ratio,
            mass_per_length: mass,
            bending_stiffness: 37.2,
            mean_tension: 4000.0,
            stress_per_curvature: None,
        }
    }

    #[test]
    fn string_wave_speed_matches_hand_value() {
        let pipe = ndp_pipe();
        let (c_s, _) = pipe.wave_speeds(1.0).unwrap();
        // Hand evaluation: sqrt(4000 / (1.632 * 1000 * pi * 0.027^2 / 4)).
        let m = 1.632 * 1000.0 * std::f64::consts::PI * 0.027f64.powi(2) / 4.0;
        assert_relative_eq!(c_s, (4000.0 / m).sqrt(), max_relative = 1e-14);
        assert!((c_s - 65.43).abs() < 0.01, "c_s = {c_s}");
    }

    #[test]
    fn zero_stiffness_gives_zero_beam_speed() {
        let mut pipe = ndp_pipe();
        pipe.bending_stiffness = 0.0;
        let (_, c_b) = pipe.wave_speeds(7.0).unwrap();
        assert_eq!(c_b, 0.0);
    }

    #[test]
    fn unit_tension_over_mass_gives_unit_string_speed() {
        let mut pipe = ndp_pipe();
        pipe.mean_tension = pipe.mass_per_length;
        let (c_s, _) = pipe.wave_speeds(1.0).unwrap();
        assert_relative_eq!(c_s, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn beam_speed_scales_as_sqrt_omega() {
        let pipe = ndp_pipe();
        let (_, c1) = pipe.wave_speeds(3.0).unwrap();
        let (_, c2) = pipe.wave_speeds(6.0).unwrap();
        assert_relative_eq!(c2 / c1, 2.0_f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn non_positive_mass_is_an_error() {
        let mut pipe = ndp_pipe();
        pipe.mass_per_length = 0.0;
        assert!(pipe.wave_speeds(1.0).is_err());
    }

    #[test]
    fn ndp_mode_one_matches_hand_values() {
        let pipe = ndp_pipe();
        let info = pipe.modal_info(1).unwrap();
        assert!((info.f_string - 0.861).abs() < 1e-3, "f_string = {}", info.f_string);
        assert!((info.f_beam - 0.00686).abs() < 1e-4, "f_beam = {}", info.f_beam);
        assert!(
            (info.stiffness_ratio - 0.0080).abs() < 1e-4,
            "F = {}",
            info.stiffness_ratio
        );
    }

    #[test]
    fn zero_stiffness_is_the_string_limit() {
        let mut pipe = ndp_pipe();
        pipe.bending_stiffness = 0.0;
        let info = pipe.modal_info(3).unwrap();
        assert_eq!(info.f_beam, 0.0);
        assert_eq!(info.stiffness_ratio, 0.0);
        assert_relative_eq!(info.f_total, info.f_string, max_relative = 1e-15);
    }

    #[test]
    fn vanishing_tension_approaches_the_beam_limit() {
        let mut pipe = ndp_pipe();
        pipe.mean_tension = 1e-9;
        let info = pipe.modal_info(2).unwrap();
        assert!(info.stiffness_ratio > 0.999999);
    }

    #[test]
    fn total_frequency_recombines_components() {
        let pipe = ndp_pipe();
        for n in 1..=30 {
            let info = pipe.modal_info(n).unwrap();
            let recombined = (info.f_string.powi(2) + info.f_beam.powi(2)).sqrt();
            assert_relative_eq!(info.f_total, recombined, max_relative = 1e-12);
        }
    }

    #[test]
    fn stiffness_ratio_is_nondecreasing_in_mode() {
        let pipe = ndp_pipe();
        let mut previous = 0.0;
        for n in 1..=60 {
            let ratio = pipe.modal_info(n).unwrap().stiffness_ratio;
            assert!(ratio >= previous, "F dropped at mode {n}");
            previous = ratio;
        }
        // F -> 1 as n grows.
        assert!(pipe.modal_info(2000).unwrap().stiffness_ratio > 0.99);
    }

    #[test]
    fn mode_zero_is_rejected() {
        assert!(ndp_pipe().modal_info(0).is_err());
    }

    #[test]
    fn shedding_frequency_examples() {
        assert_relative_eq!(
            shedding_frequency(1.0, 0.027, 0.2).unwrap(),
            7.407407407407407,
            max_relative = 1e-12
        );
        assert_eq!(shedding_frequency(0.0, 0.027, 0.2).unwrap(), 0.0);
        // St * U = D numerically -> 1 Hz.
        assert_relative_eq!(
            shedding_frequency(0.5, 0.1, 0.2).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(shedding_frequency(1.0, 0.0, 0.2).is_err());
    }

    #[test]
    fn shedding_frequency_is_linear_in_speed_and_strouhal() {
        let base = shedding_frequency(0.7, 0.03, 0.2).unwrap();
        assert_relative_eq!(
            shedding_frequency(1.4, 0.03, 0.2).unwrap(),
            2.0 * base,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            shedding_frequency(0.7, 0.03, 0.4).unwrap(),
            2.0 * base,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            shedding_frequency(0.7, 0.06, 0.2).unwrap(),
            0.5 * base,
            max_relative = 1e-12
        );
    }

    #[test]
    fn mass_ratio_mismatch_is_a_warning_not_an_error() {
        let mut pipe = ndp_pipe();
        pipe.mass_per_length *= 1.2;
        assert!(pipe.validate().is_ok());
        assert_eq!(pipe.warnings().len(), 1);
        assert!(ndp_pipe().warnings().is_empty());
    }

    #[test]
    fn profile_interpolates_linearly() {
        let profile = CurrentProfile::linear(10.0, 0.0, 1.0);
        profile.validate(10.0).unwrap();
        assert_relative_eq!(profile.speed_at(2.5), 0.25, max_relative = 1e-15);
        assert_eq!(profile.speed_at(-1.0), 0.0);
        assert_eq!(profile.speed_at(11.0), 1.0);
    }

    #[test]
    fn refined_profile_keeps_the_interpolant() {
        let profile = CurrentProfile {
            samples: vec![(0.0, 0.2), (4.0, 0.8), (10.0, 0.5)],
        };
        let refined = profile.refined();
        refined.validate(10.0).unwrap();
        for i in 0..=100 {
            let z = 10.0 * f64::from(i) / 100.0;
            assert_relative_eq!(profile.speed_at(z), refined.speed_at(z), epsilon = 1e-12);
        }
    }

    #[test]
    fn profile_validation_rejects_bad_inputs() {
        assert!(CurrentProfile { samples: vec![(0.0, 1.0)] }.validate(1.0).is_err());
        assert!(CurrentProfile {
            samples: vec![(0.5, 1.0), (1.0, 1.0)]
        }
        .validate(1.0)
        .is_err());
        assert!(CurrentProfile {
            samples: vec![(0.0, 1.0), (0.4, 1.0)]
        }
        .validate(1.0)
        .is_err());
        assert!(CurrentProfile {
            samples: vec![(0.0, 1.0), (0.4, -0.3), (1.0, 1.0)]
        }
        .validate(1.0)
        .is_err());
    }
}
