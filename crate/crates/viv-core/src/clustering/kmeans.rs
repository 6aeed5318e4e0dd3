//! Lloyd iterations with k-means++ seeding, shared by the public
//! k-means entry point, GMM initialization, and the spectral embedding.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub(crate) struct KmeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Within-cluster sum of squares after each assignment step; read
    /// by the monotonicity tests.
    #[cfg_attr(not(test), allow(dead_code))]
    pub inertia_trace: Vec<f64>,
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut seen: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !seen.contains(&p) {
            seen.push(p);
        }
    }
    seen.len()
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())].clone());
    let mut distances: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = distances.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &d) in distances.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[next].clone());
        for (d, p) in distances.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, centroids.last().unwrap()));
        }
    }
    centroids
}

/// Lloyd iterations until the assignment is fixed or 300 iterations.
pub(crate) fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Result<KmeansFit> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(Error::TooManyClusters { k, distinct });
    }
    let dims = points[0].len();
    let mut centroids = kmeans_plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; points.len()];
    let mut inertia = f64::INFINITY;
    let mut inertia_trace = Vec::new();

    for _ in 0..300 {
        // Assignment; ties go to the lowest centroid index.
        let mut changed = false;
        let mut new_inertia = 0.0;
        for (i, point) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_distance = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = squared_distance(point, centroid);
                if d < best_distance {
                    best_distance = d;
                    best = c;
                }
            }
            new_inertia += best_distance;
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        debug_assert!(new_inertia <= inertia * (1.0 + 1e-12) || inertia.is_infinite());
        inertia = new_inertia;
        inertia_trace.push(inertia);
        if !changed {
            break;
        }

        // Update.
        let mut sums = vec![vec![0.0; dims]; k];
        let mut counts = vec![0usize; k];
        for (point, &label) in points.iter().zip(&labels) {
            counts[label] += 1;
            for (s, v) in sums[label].iter_mut().zip(point) {
                *s += v;
            }
        }
        for (c, (sum, &count)) in sums.iter().zip(&counts).enumerate() {
            if count > 0 {
                centroids[c] = sum.iter().map(|v| v / count as f64).collect();
            }
        }
        // Re-seed any empty cluster at the point farthest from its
        // assigned centroid.
        for c in 0..k {
            if counts[c] == 0 {
                let farthest = points
                    .iter()
                    .enumerate()
                    .max_by(|a, b| {
                        squared_distance(a.1, &centroids[labels[a.0]])
                            .total_cmp(&squared_distance(b.1, &centroids[labels[b.0]]))
                    })
                    .map(|(i, _)| i)
                    .unwrap();
                centroids[c] = points[farthest].clone();
            }
        }
    }
    Ok(KmeansFit {
        centroids,
        labels,
        inertia,
        inertia_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn two_separated_pairs_form_two_clusters() {
        let points = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![5.0, 5.0],
            vec![5.1, 5.0],
        ];
        let fit = lloyd(&points, 2, &mut rng(1)).unwrap();
        assert_eq!(fit.labels[0], fit.labels[1]);
        assert_eq!(fit.labels[2], fit.labels[3]);
        assert_ne!(fit.labels[0], fit.labels[2]);
    }

    #[test]
    fn k_equal_to_points_gives_zero_inertia() {
        let points = vec![vec![0.0], vec![1.0], vec![2.0]];
        let fit = lloyd(&points, 3, &mut rng(5)).unwrap();
        assert_eq!(fit.inertia, 0.0);
        let mut sorted = fit.labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 3);
    }

    #[test]
    fn k_beyond_distinct_points_is_rejected() {
        let points = vec![vec![1.0], vec![1.0], vec![2.0]];
        assert!(matches!(
            lloyd(&points, 3, &mut rng(0)),
            Err(Error::TooManyClusters { k: 3, distinct: 2 })
        ));
    }

    #[test]
    fn inertia_never_increases() {
        let mut r = rng(9);
        let points: Vec<Vec<f64>> = (0..120)
            .map(|_| vec![r.random::<f64>(), r.random::<f64>()])
            .collect();
        let fit = lloyd(&points, 4, &mut rng(10)).unwrap();
        for pair in fit.inertia_trace.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "inertia rose: {pair:?}");
        }
    }
}
