//! Spectral clustering: RBF affinity with median-heuristic bandwidth,
//! symmetric normalized Laplacian, k-means in the row-normalized
//! eigenvector embedding.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::kmeans::{lloyd, squared_distance};

/// Affinities below this are treated as absent when checking graph
/// connectivity.
const CONNECTIVITY_FLOOR: f64 = 1e-12;

fn connected_components(affinity: &DMatrix<f64>) -> usize {
    let n = affinity.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if affinity[(i, j)] > CONNECTIVITY_FLOOR {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Median of the positive pairwise distances; the RBF bandwidth.
fn median_bandwidth(points: &[Vec<f64>]) -> f64 {
    let mut distances = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for b in points.iter().skip(i + 1) {
            let d = squared_distance(a, b).sqrt();
            if d > 0.0 {
                distances.push(d);
            }
        }
    }
    if distances.is_empty() {
        return 1.0;
    }
    distances.sort_by(f64::total_cmp);
    distances[distances.len() / 2]
}

pub(crate) fn fit(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let n = points.len();
    if n < k {
        return Err(Error::TooFewPoints { needed: k, got: n });
    }
    if k == 1 {
        return Ok(vec![0; n]);
    }

    let sigma = median_bandwidth(points);
    let mut affinity = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let value = (-squared_distance(&points[i], &points[j]) / (2.0 * sigma * sigma)).exp();
            affinity[(i, j)] = value;
            affinity[(j, i)] = value;
        }
    }

    let components = connected_components(&affinity);
    if components > 1 && components < k {
        return Err(Error::DisconnectedGraph { components, k });
    }

    let degrees: Vec<f64> = (0..n).map(|i| affinity.row(i).sum()).collect();
    if degrees.iter().any(|&d| d <= CONNECTIVITY_FLOOR) {
        return Err(Error::DisconnectedGraph {
            components: components.max(2),
            k,
        });
    }

    // L_sym = I - D^{-1/2} W D^{-1/2}
    let mut laplacian = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                laplacian[(i, j)] = -affinity[(i, j)] / (degrees[i] * degrees[j]).sqrt();
            }
        }
    }

    let eigen = SymmetricEigen::new(laplacian);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));

    // Row-normalized embedding on the k smallest eigenvectors.
    let embedding: Vec<Vec<f64>> = (0..n)
        .map(|row| {
            let mut coords: Vec<f64> = order[..k]
                .iter()
                .map(|&col| eigen.eigenvectors[(row, col)])
                .collect();
            let norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in &mut coords {
                    *v /= norm;
                }
            }
            coords
        })
        .collect();

    Ok(lloyd(&embedding, k, rng)?.labels)
}
