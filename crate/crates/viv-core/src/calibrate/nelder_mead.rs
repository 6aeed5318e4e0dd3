//! Bounded Nelder-Mead simplex with deterministic restart-on-stall.
//!
//! Points outside the box (or rejected by the objective itself) score
//! infinity, which steers the simplex back inside. The search is fully
//! deterministic: the initial simplex and every restart are built from
//! fixed offsets, so a given starting point and budget always produce
//! the same result.

/// Search outcome: best point, its objective, and the best objective
/// after each evaluation (for convergence logs).
pub struct MinimizeResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub history: Vec<f64>,
}

struct Tracker<'a, F> {
    objective: &'a F,
    lower: &'a [f64],
    upper: &'a [f64],
    evaluations: usize,
    budget: usize,
    best_point: Vec<f64>,
    best_value: f64,
    history: Vec<f64>,
}

impl<'a, F: Fn(&[f64]) -> f64> Tracker<'a, F> {
    fn evaluate(&mut self, x: &[f64]) -> f64 {
        if self.evaluations >= self.budget {
            return f64::INFINITY;
        }
        self.evaluations += 1;
        let inside = x
            .iter()
            .zip(self.lower.iter().zip(self.upper))
            .all(|(&v, (&lo, &hi))| v >= lo && v <= hi);
        let value = if inside {
            (self.objective)(x)
        } else {
            f64::INFINITY
        };
        if value < self.best_value {
            self.best_value = value;
            self.best_point = x.to_vec();
        }
        self.history.push(self.best_value);
        value
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for (v, (&lo, &hi)) in x.iter_mut().zip(lower.iter().zip(upper)) {
        *v = v.clamp(lo, hi);
    }
}

/// Build a simplex around `center`: vertex i offsets dimension i by
/// `scale` times the box width, flipping direction when that leaves the
/// box.
fn build_simplex(center: &[f64], lower: &[f64], upper: &[f64], scale: f64) -> Vec<Vec<f64>> {
    let dims = center.len();
    let mut simplex = Vec::with_capacity(dims + 1);
    simplex.push(center.to_vec());
    for d in 0..dims {
        let width = upper[d] - lower[d];
        let step = scale * width.max(1e-12);
        let mut vertex = center.to_vec();
        vertex[d] = if center[d] + step <= upper[d] {
            center[d] + step
        } else {
            center[d] - step
        };
        clamp(&mut vertex, lower, upper);
        simplex.push(vertex);
    }
    simplex
}

/// Minimize `objective` inside `[lower, upper]` starting at `start`,
/// spending at most `budget` evaluations.
pub fn minimize<F: Fn(&[f64]) -> f64>(
    objective: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    budget: usize,
) -> MinimizeResult {
    let dims = start.len();
    assert_eq!(lower.len(), dims);
    assert_eq!(upper.len(), dims);

    const REFLECTION: f64 = 1.0;
    const EXPANSION: f64 = 2.0;
    const CONTRACTION: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let mut tracker = Tracker {
        objective: &objective,
        lower,
        upper,
        evaluations: 0,
        budget,
        best_point: start.to_vec(),
        best_value: f64::INFINITY,
        history: Vec::with_capacity(budget),
    };

    // Restart scales shrink deterministically.
    let restart_scales = [0.1, 0.05, 0.2, 0.02, 0.1];
    let mut restart_index = 0;
    let mut center = start.to_vec();
    let mut simplex_scale = 0.15;

    'outer: while !tracker.exhausted() {
        let simplex = build_simplex(&center, lower, upper, simplex_scale);
        let mut vertices: Vec<(Vec<f64>, f64)> = simplex
            .into_iter()
            .map(|v| {
                let value = tracker.evaluate(&v);
                (v, value)
            })
            .collect();

        loop {
            if tracker.exhausted() {
                break 'outer;
            }
            vertices.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = vertices[0].1;
            let worst = vertices[dims].1;

            // Stalled: the simplex is numerically flat or stuck outside
            // the feasible region.
            let flat = worst.is_finite() && (worst - best).abs() <= 1e-12 * best.abs().max(1.0);
            let spread: f64 = (0..dims)
                .map(|d| {
                    let lo = vertices.iter().map(|(v, _)| v[d]).fold(f64::INFINITY, f64::min);
                    let hi = vertices
                        .iter()
                        .map(|(v, _)| v[d])
                        .fold(f64::NEG_INFINITY, f64::max);
                    hi - lo
                })
                .sum();
            if flat || spread < 1e-10 || !best.is_finite() {
                // Restart around the best point seen so far.
                center = tracker.best_point.clone();
                simplex_scale = restart_scales[restart_index % restart_scales.len()];
                restart_index += 1;
                continue 'outer;
            }

            // Centroid of all but the worst vertex.
            let mut centroid = vec![0.0; dims];
            for (vertex, _) in &vertices[..dims] {
                for (c, v) in centroid.iter_mut().zip(vertex) {
                    *c += v;
                }
            }
            for c in &mut centroid {
                *c /= dims as f64;
            }

            let worst_point = vertices[dims].0.clone();
            let direction: Vec<f64> = centroid
                .iter()
                .zip(&worst_point)
                .map(|(&c, &w)| c - w)
                .collect();

            let reflect: Vec<f64> = centroid
                .iter()
                .zip(&direction)
                .map(|(&c, &d)| c + REFLECTION * d)
                .collect();
            let reflect_value = tracker.evaluate(&reflect);

            if reflect_value < vertices[0].1 {
                // Try to expand further.
                let expand: Vec<f64> = centroid
                    .iter()
                    .zip(&direction)
                    .map(|(&c, &d)| c + EXPANSION * d)
                    .collect();
                let expand_value = tracker.evaluate(&expand);
                vertices[dims] = if expand_value < reflect_value {
                    (expand, expand_value)
                } else {
                    (reflect, reflect_value)
                };
                continue;
            }
            if reflect_value < vertices[dims - 1].1 {
                vertices[dims] = (reflect, reflect_value);
                continue;
            }

            // Contract toward the centroid, outside or inside.
            let contract: Vec<f64> = if reflect_value < worst {
                centroid
                    .iter()
                    .zip(&direction)
                    .map(|(&c, &d)| c + CONTRACTION * d)
                    .collect()
            } else {
                centroid
                    .iter()
                    .zip(&direction)
                    .map(|(&c, &d)| c - CONTRACTION * d)
                    .collect()
            };
            let contract_value = tracker.evaluate(&contract);
            if contract_value < worst.min(reflect_value) {
                vertices[dims] = (contract, contract_value);
                continue;
            }

            // Shrink toward the best vertex.
            let anchor = vertices[0].0.clone();
            for slot in vertices.iter_mut().skip(1) {
                let shrunk: Vec<f64> = anchor
                    .iter()
                    .zip(&slot.0)
                    .map(|(&a, &v)| a + SHRINK * (v - a))
                    .collect();
                let value = tracker.evaluate(&shrunk);
                *slot = (shrunk, value);
                if tracker.exhausted() {
                    break 'outer;
                }
            }
        }
    }

    MinimizeResult {
        best_point: tracker.best_point,
        best_value: tracker.best_value,
        evaluations: tracker.evaluations,
        history: tracker.history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_shifted_quadratic() {
        let target = [0.3, -0.7, 1.2];
        let objective = |x: &[f64]| -> f64 {
            x.iter()
                .zip(&target)
                .map(|(v, t)| (v - t) * (v - t))
                .sum()
        };
        let start = [1.0, 1.0, 0.0];
        let lower = [-2.0, -2.0, -2.0];
        let upper = [2.0, 2.0, 2.0];
        let result = minimize(objective, &start, &lower, &upper, 2000);
        assert!(result.best_value < 1e-8, "value = {}", result.best_value);
        for (v, t) in result.best_point.iter().zip(&target) {
            assert!((v - t).abs() < 1e-3);
        }
    }

    #[test]
    fn respects_the_box() {
        // Unconstrained minimum at 2, box caps at 1.
        let objective = |x: &[f64]| (x[0] - 2.0) * (x[0] - 2.0);
        let result = minimize(objective, &[0.5], &[0.0], &[1.0], 500);
        assert!(result.best_point[0] <= 1.0);
        assert!((result.best_point[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn result_never_worse_than_start() {
        let objective = |x: &[f64]| x.iter().map(|v| v.cos()).sum::<f64>();
        let start = [0.1, 0.2];
        let start_value = objective(&start);
        let result = minimize(objective, &start, &[-3.0, -3.0], &[3.0, 3.0], 300);
        assert!(result.best_value <= start_value);
    }

    #[test]
    fn larger_budget_never_hurts() {
        let rosenbrock = |x: &[f64]| {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        };
        let start = [-1.2, 1.0];
        let small = minimize(rosenbrock, &start, &[-5.0, -5.0], &[5.0, 5.0], 200);
        let large = minimize(rosenbrock, &start, &[-5.0, -5.0], &[5.0, 5.0], 2000);
        assert!(large.best_value <= small.best_value);
    }

    #[test]
    fn deterministic_for_fixed_budget() {
        let objective = |x: &[f64]| x[0].sin() * x[1].cos() + 0.1 * x[0] * x[0];
        let a = minimize(objective, &[1.0, 1.0], &[-4.0, -4.0], &[4.0, 4.0], 700);
        let b = minimize(objective, &[1.0, 1.0], &[-4.0, -4.0], &[4.0, 4.0], 700);
        assert_eq!(a.best_point, b.best_point);
        assert_eq!(a.best_value, b.best_value);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn history_is_monotone_best_so_far() {
        let objective = |x: &[f64]| (x[0] + 0.4).powi(2);
        let result = minimize(objective, &[1.0], &[-2.0], &[2.0], 200);
        for pair in result.history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
    }
}
