//! Min-max scaling, three clustering algorithms over response features,
//! and posterior classification of new cases through the fitted
//! Gaussian mixture.

mod gmm;
mod kmeans;
mod metrics;
mod spectral;

pub use gmm::{COVARIANCE_REGULARIZATION, LOG_LIKELIHOOD_TOLERANCE};
pub use metrics::adjusted_rand_index;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::characterize::FeatureVector;
use crate::error::{Error, Result};

/// Default number of clusters used throughout the workflow.
pub const DEFAULT_CLUSTER_COUNT: usize = 3;

/// Per-feature min-max scaling fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl ScalerParams {
    pub fn fit(data: &[FeatureVector]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        let mut mins = vec![f64::INFINITY; 3];
        let mut maxs = vec![f64::NEG_INFINITY; 3];
        for fv in data {
            for (i, v) in fv.as_array().iter().enumerate() {
                mins[i] = mins[i].min(*v);
                maxs[i] = maxs[i].max(*v);
            }
        }
        Ok(Self { mins, maxs })
    }

    /// Scale one point; degenerate features (max = min) map to 0, and
    /// values outside the training range land outside [0, 1].
    pub fn apply(&self, fv: &FeatureVector) -> Vec<f64> {
        fv.as_array()
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    (v - lo) / (hi - lo)
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn apply_all(&self, data: &[FeatureVector]) -> Vec<Vec<f64>> {
        data.iter().map(|fv| self.apply(fv)).collect()
    }
}

/// Which algorithm produced a [`ClusterModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Kmeans,
    Gmm,
    Spectral,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "kmeans" => Ok(Self::Kmeans),
            "gmm" => Ok(Self::Gmm),
            "spectral" => Ok(Self::Spectral),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm '{other}' (expected kmeans, gmm or spectral)"
            ))),
        }
    }
}

/// Centroids of a k-means fit, in scaled feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansState {
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

/// Parameters of a fitted Gaussian mixture, in scaled feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmState {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Full covariance matrices, row-major per component.
    pub covariances: Vec<Vec<Vec<f64>>>,
    /// Log-likelihood after initialization and each accepted EM
    /// iteration.
    pub log_likelihood: Vec<f64>,
}

/// A fitted clustering model: the scaler, the training labels, and the
/// algorithm-specific state needed to classify new points (gmm only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub algorithm: Algorithm,
    pub k: usize,
    pub rng_seed: u64,
    pub scaler: ScalerParams,
    pub labels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmeans: Option<KmeansState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gmm: Option<GmmState>,
}

impl ClusterModel {
    /// Invariants of a well-formed model, checked on load.
    pub fn validate(&self) -> Result<()> {
        if let Some(gmm) = &self.gmm {
            let weight_sum: f64 = gmm.weights.iter().sum();
            if (weight_sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "mixture weights sum to {weight_sum}, expected 1"
                )));
            }
            if gmm.weights.iter().any(|&w| w < 0.0) {
                return Err(Error::InvalidArgument(
                    "mixture weights must be non-negative".into(),
                ));
            }
            for (idx, covariance) in gmm.covariances.iter().enumerate() {
                let dims = covariance.len();
                let matrix = DMatrix::from_fn(dims, dims, |i, j| covariance[i][j]);
                if (matrix.clone() - matrix.transpose()).abs().max() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "covariance {idx} is not symmetric"
                    )));
                }
                let eigen = SymmetricEigen::new(matrix);
                if eigen.eigenvalues.iter().any(|&v| v < 1e-8) {
                    return Err(Error::SingularComponent(idx));
                }
            }
        }
        Ok(())
    }
}

/// Fit the min-max scaler. Kept as a standalone step so the scaled
/// space can be inspected independently of any clustering run.
pub fn fit_scaler(data: &[FeatureVector]) -> Result<ScalerParams> {
    ScalerParams::fit(data)
}

pub fn apply_scaler(scaler: &ScalerParams, data: &[FeatureVector]) -> Vec<Vec<f64>> {
    scaler.apply_all(data)
}

/// K-means clustering of the scaled features.
pub fn kmeans(data: &[FeatureVector], k: usize, seed: u64) -> Result<ClusterModel> {
    let scaler = ScalerParams::fit(data)?;
    let scaled = scaler.apply_all(data);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = kmeans::lloyd(&scaled, k, &mut rng)?;
    Ok(ClusterModel {
        algorithm: Algorithm::Kmeans,
        k,
        rng_seed: seed,
        scaler,
        labels: fit.labels,
        kmeans: Some(KmeansState {
            centroids: fit.centroids,
            inertia: fit.inertia,
        }),
        gmm: None,
    })
}

/// Gaussian-mixture clustering of the scaled features.
pub fn gmm_fit(data: &[FeatureVector], k: usize, seed: u64) -> Result<ClusterModel> {
    let dims = 3;
    if data.len() < k * (dims + 1) {
        return Err(Error::TooFewPoints {
            needed: k * (dims + 1),
            got: data.len(),
        });
    }
    let scaler = ScalerParams::fit(data)?;
    let scaled: Vec<DVector<f64>> = scaler
        .apply_all(data)
        .into_iter()
        .map(DVector::from_vec)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = gmm::fit(&scaled, k, &mut rng)?;
    Ok(ClusterModel {
        algorithm: Algorithm::Gmm,
        k,
        rng_seed: seed,
        scaler,
        labels: fit.labels,
        kmeans: None,
        gmm: Some(GmmState {
            weights: fit.weights,
            means: fit.means.iter().map(|m| m.iter().cloned().collect()).collect(),
            covariances: fit
                .covariances
                .iter()
                .map(|c| {
                    (0..c.nrows())
                        .map(|i| (0..c.ncols()).map(|j| c[(i, j)]).collect())
                        .collect()
                })
                .collect(),
            log_likelihood: fit.log_likelihood,
        }),
    })
}

/// Spectral clustering of the scaled features.
pub fn spectral(data: &[FeatureVector], k: usize, seed: u64) -> Result<ClusterModel> {
    let scaler = ScalerParams::fit(data)?;
    let scaled = scaler.apply_all(data);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = spectral::fit(&scaled, k, &mut rng)?;
    Ok(ClusterModel {
        algorithm: Algorithm::Spectral,
        k,
        rng_seed: seed,
        scaler,
        labels,
        kmeans: None,
        gmm: None,
    })
}

/// Classify a new point with a fitted mixture model: scale it with the
/// stored scaler and return the maximum-posterior cluster plus the full
/// posterior vector.
pub fn classify(model: &ClusterModel, point: &FeatureVector) -> Result<(usize, Vec<f64>)> {
    let state = model.gmm.as_ref().ok_or(Error::NotAMixtureModel)?;
    let scaled = DVector::from_vec(model.scaler.apply(point));
    let means: Vec<DVector<f64>> = state
        .means
        .iter()
        .map(|m| DVector::from_vec(m.clone()))
        .collect();
    let covariances: Vec<DMatrix<f64>> = state
        .covariances
        .iter()
        .map(|c| {
            let dims = c.len();
            DMatrix::from_fn(dims, dims, |i, j| c[i][j])
        })
        .collect();
    let posteriors = gmm::posteriors(&state.weights, &means, &covariances, &scaled)?;
    let winner = posteriors
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    Ok((winner, posteriors))
}
