//! Zero-phase band isolation: a 4-pole Butterworth band-pass run
//! forward and backward over odd-reflection padding.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// One second-order section in direct form II transposed.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn run(&self, x: &mut [f64]) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for v in x.iter_mut() {
            let input = *v;
            let output = self.b0 * input + s1;
            s1 = self.b1 * input - self.a1 * output + s2;
            s2 = self.b2 * input - self.a2 * output;
            *v = output;
        }
    }

    fn response_at(&self, theta: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -theta);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }
}

/// Design a 4-pole Butterworth band-pass with -3 dB edges at `f_low`
/// and `f_high` Hz for sample rate `fs`, normalized to unit gain at the
/// geometric band center.
pub fn design_bandpass(f_low: f64, f_high: f64, fs: f64) -> Result<[Biquad; 2]> {
    let nyquist = fs / 2.0;
    if !(f_low > 0.0 && f_high > f_low) {
        return Err(Error::InvalidArgument(format!(
            "band edges must satisfy 0 < {f_low} < {f_high}"
        )));
    }
    if f_high >= nyquist {
        return Err(Error::NyquistViolation {
            band_low: f_low,
            band_high: f_high,
            nyquist,
        });
    }

    // Pre-warped analog edges for the bilinear transform.
    let fs2 = 2.0 * fs;
    let w1 = fs2 * (std::f64::consts::PI * f_low / fs).tan();
    let w2 = fs2 * (std::f64::consts::PI * f_high / fs).tan();
    let w0_sq = w1 * w2;
    let bandwidth = w2 - w1;

    // Order-2 Butterworth prototype pole in the upper half plane; the
    // band transform s -> (s^2 + w0^2) / (bw s) splits it into two
    // band-pass poles, whose conjugates complete the four.
    let proto = Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
    let bp = proto * bandwidth;
    let disc = (bp * bp - 4.0 * w0_sq).sqrt();
    let analog_poles = [(bp + disc) / 2.0, (bp - disc) / 2.0];

    let mut sections = [Biquad {
        b0: 1.0,
        b1: 0.0,
        b2: -1.0,
        a1: 0.0,
        a2: 0.0,
    }; 2];
    for (section, pole) in sections.iter_mut().zip(analog_poles) {
        let z = (fs2 + pole) / (fs2 - pole);
        section.a1 = -2.0 * z.re;
        section.a2 = z.norm_sqr();
        debug_assert!(z.norm() < 1.0, "unstable pole");
    }

    // Unit gain at the geometric center of the pass band.
    let theta = 2.0 * std::f64::consts::PI * (f_low * f_high).sqrt() / fs;
    let gain: f64 = sections
        .iter()
        .map(|s| s.response_at(theta).norm())
        .product();
    let correction = (1.0 / gain).sqrt();
    for section in &mut sections {
        section.b0 *= correction;
        section.b2 *= correction;
    }
    Ok(sections)
}

/// Apply `sections` forward and backward, giving a zero-phase result.
/// The input is extended on both sides by odd reflection so that the
/// filter transient decays inside the padding.
pub fn filtfilt(samples: &[f64], sections: &[Biquad], pad: usize) -> Vec<f64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = pad.min(n - 1);
    let mut extended = Vec::with_capacity(n + 2 * pad);
    let first = samples[0];
    let last = samples[n - 1];
    for i in 0..pad {
        extended.push(2.0 * first - samples[pad - i]);
    }
    extended.extend_from_slice(samples);
    for i in 0..pad {
        extended.push(2.0 * last - samples[n - 2 - i]);
    }

    for section in sections {
        section.run(&mut extended);
    }
    extended.reverse();
    for section in sections {
        section.run(&mut extended);
    }
    extended.reverse();

    extended[pad..pad + n].to_vec()
}

/// Zero-phase band-pass of a uniformly sampled signal.
pub fn bandpass_filtfilt(samples: &[f64], dt: f64, f_low: f64, f_high: f64) -> Result<Vec<f64>> {
    let fs = 1.0 / dt;
    let sections = design_bandpass(f_low, f_high, fs)?;
    // Eight periods of the lower band edge comfortably covers the
    // transient of the band-pass.
    let pad = (8.0 * fs / f_low).ceil() as usize;
    Ok(filtfilt(samples, &sections, pad))
}
