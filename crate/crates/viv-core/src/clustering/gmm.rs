//! Full-covariance Gaussian mixture fitted by expectation-maximization,
//! initialized from a k-means partition.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::kmeans::lloyd;

/// Covariance regularization added after every M step.
pub const COVARIANCE_REGULARIZATION: f64 = 1e-6;

/// Stop when the log-likelihood improves by less than this.
pub const LOG_LIKELIHOOD_TOLERANCE: f64 = 1e-7;

/// EM iteration cap.
pub const MAX_ITERATIONS: usize = 500;

pub(crate) struct GmmFit {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    pub labels: Vec<usize>,
    /// Log-likelihood after the initial parameters and after each
    /// accepted EM iteration.
    pub log_likelihood: Vec<f64>,
}

struct Components {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covariances: Vec<DMatrix<f64>>,
}

struct PreparedComponent {
    log_weight: f64,
    mean: DVector<f64>,
    cholesky: Cholesky<f64, nalgebra::Dyn>,
    log_det: f64,
}

fn prepare(components: &Components) -> Result<Vec<PreparedComponent>> {
    components
        .weights
        .iter()
        .zip(&components.means)
        .zip(&components.covariances)
        .enumerate()
        .map(|(idx, ((&weight, mean), covariance))| {
            let cholesky = Cholesky::new(covariance.clone())
                .ok_or(Error::SingularComponent(idx))?;
            let log_det = 2.0 * cholesky.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            Ok(PreparedComponent {
                log_weight: weight.max(f64::MIN_POSITIVE).ln(),
                mean: mean.clone(),
                cholesky,
                log_det,
            })
        })
        .collect()
}

fn log_density(prepared: &PreparedComponent, point: &DVector<f64>) -> f64 {
    let dims = point.len() as f64;
    let centered = point - &prepared.mean;
    let solved = prepared.cholesky.l().solve_lower_triangular(&centered).unwrap();
    let quad = solved.norm_squared();
    -0.5 * (dims * (2.0 * std::f64::consts::PI).ln() + prepared.log_det + quad)
}

/// Responsibilities and total log-likelihood of the data under the
/// current components.
fn e_step(points: &[DVector<f64>], components: &Components) -> Result<(Vec<Vec<f64>>, f64)> {
    let prepared = prepare(components)?;
    let mut responsibilities = Vec::with_capacity(points.len());
    let mut log_likelihood = 0.0;
    for point in points {
        let scores: Vec<f64> = prepared
            .iter()
            .map(|c| c.log_weight + log_density(c, point))
            .collect();
        let peak = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = scores.iter().map(|s| (s - peak).exp()).sum();
        let log_norm = peak + sum_exp.ln();
        log_likelihood += log_norm;
        responsibilities.push(scores.iter().map(|s| (s - log_norm).exp()).collect());
    }
    Ok((responsibilities, log_likelihood))
}

fn m_step(points: &[DVector<f64>], responsibilities: &[Vec<f64>], k: usize) -> Components {
    let n = points.len();
    let dims = points[0].len();
    let mut weights = vec![0.0; k];
    let mut means = vec![DVector::zeros(dims); k];
    let mut covariances = vec![DMatrix::zeros(dims, dims); k];

    for component in 0..k {
        let total: f64 = responsibilities.iter().map(|r| r[component]).sum();
        let safe_total = total.max(f64::MIN_POSITIVE);
        let mut mean = DVector::zeros(dims);
        for (point, r) in points.iter().zip(responsibilities) {
            mean += point * r[component];
        }
        mean /= safe_total;
        let mut covariance = DMatrix::zeros(dims, dims);
        for (point, r) in points.iter().zip(responsibilities) {
            let centered = point - &mean;
            covariance += (&centered * centered.transpose()) * r[component];
        }
        covariance /= safe_total;
        for d in 0..dims {
            covariance[(d, d)] += COVARIANCE_REGULARIZATION;
        }
        weights[component] = total / n as f64;
        means[component] = mean;
        covariances[component] = covariance;
    }
    Components {
        weights,
        means,
        covariances,
    }
}

fn initial_components(points: &[DVector<f64>], k: usize, rng: &mut ChaCha8Rng) -> Result<Components> {
    let raw: Vec<Vec<f64>> = points.iter().map(|p| p.iter().cloned().collect()).collect();
    let seeded = lloyd(&raw, k, rng)?;
    let hard: Vec<Vec<f64>> = seeded
        .labels
        .iter()
        .map(|&label| {
            let mut row = vec![0.0; k];
            row[label] = 1.0;
            row
        })
        .collect();
    Ok(m_step(points, &hard, k))
}

fn run_em(points: &[DVector<f64>], k: usize, rng: &mut ChaCha8Rng) -> Result<GmmFit> {
    let mut components = initial_components(points, k, rng)?;
    let (mut responsibilities, mut log_likelihood) = e_step(points, &components)?;
    let mut trace = vec![log_likelihood];

    for _ in 0..MAX_ITERATIONS {
        let updated = m_step(points, &responsibilities, k);
        let (new_responsibilities, new_log_likelihood) = e_step(points, &updated)?;
        if new_log_likelihood < log_likelihood - 1e-12 {
            // The regularized M step is not the exact maximizer; at
            // convergence scale it can nudge the likelihood down. Keep
            // the previous parameters and stop.
            break;
        }
        components = updated;
        responsibilities = new_responsibilities;
        trace.push(new_log_likelihood);
        let gain = new_log_likelihood - log_likelihood;
        log_likelihood = new_log_likelihood;
        if gain < LOG_LIKELIHOOD_TOLERANCE {
            break;
        }
    }

    let labels = responsibilities
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap()
        })
        .collect();
    Ok(GmmFit {
        weights: components.weights,
        means: components.means,
        covariances: components.covariances,
        labels,
        log_likelihood: trace,
    })
}

/// EM fit with one re-seed attempt if a component collapses.
pub(crate) fn fit(points: &[DVector<f64>], k: usize, rng: &mut ChaCha8Rng) -> Result<GmmFit> {
    match run_em(points, k, rng) {
        Err(Error::SingularComponent(_)) => run_em(points, k, rng),
        other => other,
    }
}

/// Posterior probabilities of a point under stored mixture parameters.
pub(crate) fn posteriors(
    weights: &[f64],
    means: &[DVector<f64>],
    covariances: &[DMatrix<f64>],
    point: &DVector<f64>,
) -> Result<Vec<f64>> {
    let components = Components {
        weights: weights.to_vec(),
        means: means.to_vec(),
        covariances: covariances.to_vec(),
    };
    let prepared = prepare(&components)?;
    let scores: Vec<f64> = prepared
        .iter()
        .map(|c| c.log_weight + log_density(c, point))
        .collect();
    let peak = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum_exp: f64 = scores.iter().map(|s| (s - peak).exp()).sum();
    let log_norm = peak + sum_exp.ln();
    Ok(scores.iter().map(|s| (s - log_norm).exp()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn single_component_matches_sample_moments() {
        let mut r = rng(3);
        let points: Vec<DVector<f64>> = (0..400)
            .map(|_| {
                DVector::from_vec(vec![
                    0.5 + 0.1 * (r.random::<f64>() - 0.5),
                    -0.2 + 0.3 * (r.random::<f64>() - 0.5),
                ])
            })
            .collect();
        let fit = fit(&points, 1, &mut rng(4)).unwrap();

        let n = points.len() as f64;
        let mean = points.iter().fold(DVector::zeros(2), |acc, p| acc + p) / n;
        let mut covariance = DMatrix::zeros(2, 2);
        for p in &points {
            let c = p - &mean;
            covariance += &c * c.transpose();
        }
        covariance /= n;

        assert!((fit.means[0].clone() - mean).norm() < 1e-9);
        // The fitted covariance is the sample covariance plus the
        // regularization diagonal.
        for i in 0..2 {
            for j in 0..2 {
                let expected = covariance[(i, j)]
                    + if i == j { COVARIANCE_REGULARIZATION } else { 0.0 };
                assert!((fit.covariances[0][(i, j)] - expected).abs() <= 1e-6 * 1.001);
            }
        }
        assert!((fit.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_is_monotone() {
        let mut r = rng(8);
        let mut points = Vec::new();
        for center in [[0.1, 0.1], [0.8, 0.2], [0.5, 0.9]] {
            for _ in 0..60 {
                points.push(DVector::from_vec(vec![
                    center[0] + 0.04 * (r.random::<f64>() - 0.5),
                    center[1] + 0.04 * (r.random::<f64>() - 0.5),
                ]));
            }
        }
        let fit = fit(&points, 3, &mut rng(9)).unwrap();
        assert!(fit.log_likelihood.len() >= 2);
        for pair in fit.log_likelihood.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "log-likelihood dropped: {pair:?}");
        }
    }
}
