//! Parameterized cross-flow excitation-coefficient surface plus damping
//! and added-mass constants.
//!
//! The surface is described by two boundary curves pinned at the lower
//! and upper non-dimensional frequencies of the excitation range. Each
//! curve is a piecewise quadratic in the amplitude ratio A/D: it starts
//! at `ce_zero_amplitude`, peaks with zero slope at
//! (`amplitude_peak`, `ce_peak`) and crosses zero at
//! `amplitude_zero_crossing`, continuing with the same quadratic into
//! negative values. Between the boundary frequencies the four anchors
//! are interpolated linearly; outside the range the coefficient is pure
//! damping, `-damping * A/D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One boundary curve of the excitation surface: the coefficient as a
/// function of amplitude ratio at a fixed non-dimensional frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    /// Coefficient at vanishing amplitude ratio.
    pub ce_zero_amplitude: f64,
    /// Amplitude ratio of the coefficient peak.
    pub amplitude_peak: f64,
    /// Peak coefficient value.
    pub ce_peak: f64,
    /// Amplitude ratio where the coefficient crosses zero.
    pub amplitude_zero_crossing: f64,
}

impl BoundaryCurve {
    pub fn new(
        ce_zero_amplitude: f64,
        amplitude_peak: f64,
        ce_peak: f64,
        amplitude_zero_crossing: f64,
    ) -> Result<Self> {
        let curve = Self {
            ce_zero_amplitude,
            amplitude_peak,
            ce_peak,
            amplitude_zero_crossing,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_peak > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "amplitude_peak must be positive, got {}",
                self.amplitude_peak
            )));
        }
        if !(self.amplitude_zero_crossing > self.amplitude_peak) {
            return Err(Error::InvalidParameters(format!(
                "amplitude_zero_crossing {} must exceed amplitude_peak {}",
                self.amplitude_zero_crossing, self.amplitude_peak
            )));
        }
        if !(self.ce_peak > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "ce_peak must be positive, got {}",
                self.ce_peak
            )));
        }
        // ce_zero_amplitude >= 0 keeps the curve single-lobed: exactly one
        // zero crossing in amplitude ratio.
        if !(self.ce_zero_amplitude >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "ce_zero_amplitude must be non-negative, got {}",
                self.ce_zero_amplitude
            )));
        }
        if self.ce_peak < self.ce_zero_amplitude {
            return Err(Error::InvalidParameters(format!(
                "ce_peak {} must be at least ce_zero_amplitude {}",
                self.ce_peak, self.ce_zero_amplitude
            )));
        }
        Ok(())
    }

    /// Piecewise-quadratic coefficient at amplitude ratio `ad`.
    fn evaluate(&self, ad: f64) -> f64 {
        if ad <= self.amplitude_peak {
            let u = (ad - self.amplitude_peak) / self.amplitude_peak;
            self.ce_peak - (self.ce_peak - self.ce_zero_amplitude) * u * u
        } else {
            let w = (ad - self.amplitude_peak)
                / (self.amplitude_zero_crossing - self.amplitude_peak);
            self.ce_peak * (1.0 - w * w)
        }
    }

    fn lerp(a: &Self, b: &Self, t: f64) -> Self {
        let mix = |x: f64, y: f64| x + t * (y - x);
        Self {
            ce_zero_amplitude: mix(a.ce_zero_amplitude, b.ce_zero_amplitude),
            amplitude_peak: mix(a.amplitude_peak, b.amplitude_peak),
            ce_peak: mix(a.ce_peak, b.ce_peak),
            amplitude_zero_crossing: mix(a.amplitude_zero_crossing, b.amplitude_zero_crossing),
        }
    }
}

/// Excitation-coefficient surface plus added-mass and damping constants;
/// the object being calibrated per response cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeParameterSet {
    /// Lower bound of the excited non-dimensional frequency range.
    pub fhat_min: f64,
    /// Upper bound of the excited non-dimensional frequency range.
    pub fhat_max: f64,
    /// Boundary curve at `fhat_min`.
    pub low: BoundaryCurve,
    /// Boundary curve at `fhat_max`.
    pub high: BoundaryCurve,
    /// Added-mass coefficient.
    pub added_mass: f64,
    /// Damping coefficient outside the excitation range and over the
    /// non-excited part of the pipe.
    pub damping: f64,
}

/// Number of scalars in the flattened parameter vector.
pub const PARAMETER_COUNT: usize = 12;

impl CeParameterSet {
    pub fn new(
        fhat_min: f64,
        fhat_max: f64,
        low: BoundaryCurve,
        high: BoundaryCurve,
        added_mass: f64,
        damping: f64,
    ) -> Result<Self> {
        let params = Self {
            fhat_min,
            fhat_max,
            low,
            high,
            added_mass,
            damping,
        };
        params.validate()?;
        Ok(params)
    }

    /// A single-lobe surface of the shape commonly published for bare
    /// cylinders: excitation between non-dimensional frequencies 0.125
    /// and 0.3, peak coefficient toward the upper boundary.
    pub fn reference() -> Self {
        Self {
            fhat_min: 0.125,
            fhat_max: 0.3,
            low: BoundaryCurve {
                ce_zero_amplitude: 0.05,
                amplitude_peak: 0.45,
                ce_peak: 0.45,
                amplitude_zero_crossing: 0.85,
            },
            high: BoundaryCurve {
                ce_zero_amplitude: 0.1,
                amplitude_peak: 0.55,
                ce_peak: 0.8,
                amplitude_zero_crossing: 1.0,
            },
            added_mass: 1.0,
            damping: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fhat_min > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "fhat_min must be positive, got {}",
                self.fhat_min
            )));
        }
        if !(self.fhat_max > self.fhat_min) {
            return Err(Error::InvalidParameters(format!(
                "fhat_max {} must exceed fhat_min {}",
                self.fhat_max, self.fhat_min
            )));
        }
        self.low.validate()?;
        self.high.validate()?;
        if !(self.added_mass >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "added_mass must be non-negative, got {}",
                self.added_mass
            )));
        }
        if !(self.damping >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "damping must be non-negative, got {}",
                self.damping
            )));
        }
        Ok(())
    }

    /// Anchor curve at `fhat`, linearly interpolated between the two
    /// boundary curves. Only meaningful inside the excitation range.
    pub fn boundary_at(&self, fhat: f64) -> BoundaryCurve {
        let t = (fhat - self.fhat_min) / (self.fhat_max - self.fhat_min);
        BoundaryCurve::lerp(&self.low, &self.high, t)
    }

    /// Excitation coefficient at amplitude ratio `ad` and
    /// non-dimensional frequency `fhat`.
    pub fn ce(&self, ad: f64, fhat: f64) -> f64 {
        if fhat < self.fhat_min || fhat > self.fhat_max {
            return -self.damping * ad;
        }
        self.boundary_at(fhat).evaluate(ad)
    }

    /// True where the coefficient feeds energy into the vibration.
    pub fn is_exciting(&self, ad: f64, fhat: f64) -> bool {
        self.ce(ad, fhat) > 0.0
    }

    /// Largest zero-crossing amplitude ratio of the two boundary curves;
    /// interpolated curves stay at or below it.
    pub fn max_zero_crossing(&self) -> f64 {
        self.low
            .amplitude_zero_crossing
            .max(self.high.amplitude_zero_crossing)
    }

    /// Flatten to the calibration vector. Order: fhat_min, fhat_max,
    /// then the low and high boundary anchors, then added mass and
    /// damping.
    pub fn to_vector(&self) -> [f64; PARAMETER_COUNT] {
        [
            self.fhat_min,
            self.fhat_max,
            self.low.ce_zero_amplitude,
            self.low.amplitude_peak,
            self.low.ce_peak,
            self.low.amplitude_zero_crossing,
            self.high.ce_zero_amplitude,
            self.high.amplitude_peak,
            self.high.ce_peak,
            self.high.amplitude_zero_crossing,
            self.added_mass,
            self.damping,
        ]
    }

    /// Rebuild from the calibration vector, enforcing all invariants.
    pub fn from_vector(v: &[f64; PARAMETER_COUNT]) -> Result<Self> {
        Self::new(
            v[0],
            v[1],
            BoundaryCurve {
                ce_zero_amplitude: v[2],
                amplitude_peak: v[3],
                ce_peak: v[4],
                amplitude_zero_crossing: v[5],
            },
            BoundaryCurve {
                ce_zero_amplitude: v[6],
                amplitude_peak: v[7],
                ce_peak: v[8],
                amplitude_zero_crossing: v[9],
            },
            v[10],
            v[11],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn anchors_hold_exactly_at_both_boundaries() {
        let p = CeParameterSet::reference();
        for (fhat, curve) in [(p.fhat_min, p.low), (p.fhat_max, p.high)] {
            assert_relative_eq!(
                p.ce(curve.amplitude_peak, fhat),
                curve.ce_peak,
                max_relative = 1e-15
            );
            assert!(p.ce(curve.amplitude_zero_crossing, fhat).abs() < 1e-15);
            assert_relative_eq!(
                p.ce(0.0, fhat),
                curve.ce_zero_amplitude,
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn outside_the_range_is_pure_damping() {
        let p = CeParameterSet::reference();
        assert_relative_eq!(p.ce(0.6, 0.05), -p.damping * 0.6, max_relative = 1e-15);
        assert_relative_eq!(p.ce(0.6, 0.5), -p.damping * 0.6, max_relative = 1e-15);
        assert!(!p.is_exciting(0.6, 0.05));
    }

    #[test]
    fn excitation_region_flags() {
        let p = CeParameterSet::reference();
        assert!(p.is_exciting(p.low.amplitude_peak, p.fhat_min));
        assert!(!p.is_exciting(p.low.amplitude_zero_crossing + 0.05, p.fhat_min));
    }

    /// Independent re-implementation of the two-stage interpolation used
    /// as the oracle for a midrange evaluation.
    fn ce_oracle(p: &CeParameterSet, ad: f64, fhat: f64) -> f64 {
        let t = (fhat - p.fhat_min) / (p.fhat_max - p.fhat_min);
        let ce0 = p.low.ce_zero_amplitude + t * (p.high.ce_zero_amplitude - p.low.ce_zero_amplitude);
        let adp = p.low.amplitude_peak + t * (p.high.amplitude_peak - p.low.amplitude_peak);
        let cem = p.low.ce_peak + t * (p.high.ce_peak - p.low.ce_peak);
        let adz = p.low.amplitude_zero_crossing
            + t * (p.high.amplitude_zero_crossing - p.low.amplitude_zero_crossing);
        if ad <= adp {
            let u = (ad - adp) / adp;
            cem - (cem - ce0) * u * u
        } else {
            let w = (ad - adp) / (adz - adp);
            cem * (1.0 - w * w)
        }
    }

    #[test]
    fn midrange_value_matches_independent_interpolation() {
        let p = CeParameterSet::reference();
        let fhat = 0.5 * (p.fhat_min + p.fhat_max);
        let mid = p.boundary_at(fhat);
        let ad = 0.5 * (mid.amplitude_peak + mid.amplitude_zero_crossing);
        assert_relative_eq!(p.ce(ad, fhat), ce_oracle(&p, ad, fhat), max_relative = 1e-14);
        // Dense cross-check over the whole surface.
        for i in 0..=40 {
            let fhat = p.fhat_min + (p.fhat_max - p.fhat_min) * f64::from(i) / 40.0;
            for j in 0..=40 {
                let ad = 1.4 * f64::from(j) / 40.0;
                assert_relative_eq!(
                    p.ce(ad, fhat),
                    ce_oracle(&p, ad, fhat),
                    max_relative = 1e-12,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn continuous_in_amplitude_everywhere() {
        let p = CeParameterSet::reference();
        // Adjacent differences on a dense amplitude grid stay bounded by
        // a Lipschitz constant times the step, for frequencies inside and
        // outside the excitation range.
        for fhat in [0.05, 0.125, 0.2, 0.3, 0.45] {
            let n = 20_000;
            let step = 1.6 / n as f64;
            for i in 0..n {
                let a = i as f64 * step;
                let d = (p.ce(a + step, fhat) - p.ce(a, fhat)).abs();
                assert!(d < 20.0 * step, "jump {d} at ad {a}, fhat {fhat}");
            }
        }
    }

    #[test]
    fn continuous_in_frequency_within_each_regime() {
        let p = CeParameterSet::reference();
        let n = 20_000;
        for ad in [0.0, 0.3, 0.55, 0.9, 1.3] {
            // Inside the excitation range.
            let step = (p.fhat_max - p.fhat_min) / n as f64;
            for i in 0..n {
                let f = p.fhat_min + i as f64 * step;
                let d = (p.ce(ad, f + step) - p.ce(ad, f)).abs();
                assert!(d < 40.0 * step, "jump {d} at fhat {f}, ad {ad}");
            }
            // Outside it the coefficient is constant in frequency.
            assert_eq!(p.ce(ad, 0.01), p.ce(ad, 0.1));
            assert_eq!(p.ce(ad, 0.31), p.ce(ad, 2.0));
        }
    }

    #[test]
    fn increasing_peak_never_decreases_ce_in_the_excitation_region() {
        let p = CeParameterSet::reference();
        let mut boosted = p.clone();
        boosted.low.ce_peak += 0.2;
        boosted.high.ce_peak += 0.2;
        boosted.validate().unwrap();
        for i in 0..=60 {
            let fhat = p.fhat_min + (p.fhat_max - p.fhat_min) * f64::from(i) / 60.0;
            for j in 0..=60 {
                let ad = 1.4 * f64::from(j) / 60.0;
                if p.is_exciting(ad, fhat) {
                    assert!(boosted.ce(ad, fhat) >= p.ce(ad, fhat) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn vector_round_trip() {
        let p = CeParameterSet::reference();
        let rebuilt = CeParameterSet::from_vector(&p.to_vector()).unwrap();
        assert_eq!(p, rebuilt);
    }

    #[test]
    fn invalid_parameters_fail_at_construction() {
        let p = CeParameterSet::reference();
        let mut v = p.to_vector();
        v[0] = 0.4; // fhat_min above fhat_max
        assert!(CeParameterSet::from_vector(&v).is_err());
        let mut v = p.to_vector();
        v[3] = 0.9;
        v[5] = 0.8; // peak beyond zero crossing
        assert!(CeParameterSet::from_vector(&v).is_err());
        let mut v = p.to_vector();
        v[4] = -0.1; // negative peak coefficient
        assert!(CeParameterSet::from_vector(&v).is_err());
    }

    proptest! {
        /// For every in-range frequency the curve has exactly one sign
        /// change in amplitude ratio, at the interpolated zero crossing.
        #[test]
        fn single_sign_change_at_interpolated_zero(t in 0.0f64..=1.0, scale in 0.5f64..1.5) {
            let mut p = CeParameterSet::reference();
            p.low.ce_peak *= scale;
            p.high.ce_peak *= scale;
            prop_assume!(p.validate().is_ok());
            let fhat = p.fhat_min + t * (p.fhat_max - p.fhat_min);
            let anchors = p.boundary_at(fhat);
            let zero = anchors.amplitude_zero_crossing;
            let n = 2000;
            let mut crossings = 0;
            let mut previous = p.ce(1e-9, fhat);
            for i in 1..=n {
                let ad = 2.5 * i as f64 / n as f64;
                let value = p.ce(ad, fhat);
                if previous > 0.0 && value <= 0.0 {
                    crossings += 1;
                    prop_assert!((ad - zero).abs() < 2.5 / n as f64 * 2.0 + 1e-9);
                }
                prop_assert!(!(previous <= 0.0 && value > 0.0), "sign change back to positive");
                previous = value;
            }
            prop_assert_eq!(crossings, 1);
        }
    }
}
