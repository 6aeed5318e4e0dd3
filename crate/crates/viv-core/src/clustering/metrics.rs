//! Clustering agreement metrics. Labels are permutation-equivalent, so
//! comparisons go through the adjusted Rand index rather than raw label
//! equality.

use std::collections::BTreeMap;

fn comb2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same points: 1 for
/// identical partitions, ~0 for independent ones. Degenerate cases
/// where the expected index equals the maximum (e.g. both partitions
/// all-singletons) return 1 when the partitions agree.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same points");
    let n = a.len() as f64;
    if a.is_empty() {
        return 1.0;
    }

    let mut contingency: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, f64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *contingency.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }

    let index: f64 = contingency.values().map(|&v| comb2(v)).sum();
    let row_sum: f64 = rows.values().map(|&v| comb2(v)).sum();
    let col_sum: f64 = cols.values().map(|&v| comb2(v)).sum();
    let expected = row_sum * col_sum / comb2(n);
    let max_index = 0.5 * (row_sum + col_sum);
    if (max_index - expected).abs() < 1e-12 {
        return if index == max_index { 1.0 } else { 0.0 };
    }
    (index - expected) / (max_index - expected)
}
