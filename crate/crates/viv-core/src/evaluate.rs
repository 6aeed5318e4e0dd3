//! Accuracy reporting: predicted-vs-measured fatigue ratios and
//! within-factor-of-N statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The factor thresholds reported by every evaluation.
pub const REPORTED_FACTORS: [u32; 2] = [3, 5];

/// One case's measured and predicted maximum fatigue damage rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CasePair {
    pub name: String,
    /// Measured maximum damage rate, 1/year.
    pub measured: f64,
    /// Predicted maximum damage rate, 1/year.
    pub predicted: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub name: String,
    pub measured: f64,
    pub predicted: f64,
    /// predicted / measured.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub cases: Vec<CaseOutcome>,
    /// Fraction of cases with 1/k <= ratio <= k, keyed by k.
    pub fraction_within_factor: BTreeMap<u32, f64>,
    pub worst_overprediction_factor: f64,
    pub worst_underprediction_factor: f64,
    pub case_count: usize,
}

impl EvaluationReport {
    pub fn fraction_within(&self, factor: u32) -> f64 {
        self.fraction_within_factor.get(&factor).copied().unwrap_or(0.0)
    }
}

/// Ratio statistics over measured/predicted pairs.
pub fn evaluate(pairs: &[CasePair]) -> Result<EvaluationReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "evaluation needs at least one case".into(),
        ));
    }
    for pair in pairs {
        if !(pair.measured > 0.0) || !(pair.predicted > 0.0) {
            return Err(Error::NonPositiveDamage(
                pair.name.clone(),
                pair.measured,
                pair.predicted,
            ));
        }
    }
    let cases: Vec<CaseOutcome> = pairs
        .iter()
        .map(|p| CaseOutcome {
            name: p.name.clone(),
            measured: p.measured,
            predicted: p.predicted,
            ratio: p.predicted / p.measured,
        })
        .collect();

    let mut fraction_within_factor = BTreeMap::new();
    for factor in REPORTED_FACTORS {
        let k = f64::from(factor);
        let within = cases
            .iter()
            .filter(|c| c.ratio >= 1.0 / k && c.ratio <= k)
            .count();
        fraction_within_factor.insert(factor, within as f64 / cases.len() as f64);
    }
    let worst_overprediction_factor = cases.iter().map(|c| c.ratio).fold(1.0, f64::max);
    let worst_underprediction_factor = cases.iter().map(|c| 1.0 / c.ratio).fold(1.0, f64::max);
    Ok(EvaluationReport {
        case_count: cases.len(),
        cases,
        fraction_within_factor,
        worst_overprediction_factor,
        worst_underprediction_factor,
    })
}

/// Side-by-side accuracy of two strategies over the same cases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyComparison {
    /// Per factor: (single, adaptive, adaptive - single).
    pub fractions: BTreeMap<u32, (f64, f64, f64)>,
    pub case_count: usize,
}

pub fn compare_strategies(
    single: &EvaluationReport,
    adaptive: &EvaluationReport,
) -> Result<StrategyComparison> {
    let mut a: Vec<&str> = single.cases.iter().map(|c| c.name.as_str()).collect();
    let mut b: Vec<&str> = adaptive.cases.iter().map(|c| c.name.as_str()).collect();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(Error::MismatchedCases(format!(
            "{} vs {} cases with differing names",
            a.len(),
            b.len()
        )));
    }
    let mut fractions = BTreeMap::new();
    for factor in REPORTED_FACTORS {
        let s = single.fraction_within(factor);
        let d = adaptive.fraction_within(factor);
        fractions.insert(factor, (s, d, d - s));
    }
    Ok(StrategyComparison {
        fractions,
        case_count: single.case_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(name: &str, measured: f64, predicted: f64) -> CasePair {
        CasePair {
            name: name.into(),
            measured,
            predicted,
        }
    }

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        let pairs = vec![pair("a", 0.5, 0.5), pair("b", 2.0, 2.0)];
        let report = evaluate(&pairs).unwrap();
        assert_eq!(report.fraction_within(3), 1.0);
        assert_eq!(report.fraction_within(5), 1.0);
        assert_eq!(report.worst_overprediction_factor, 1.0);
        assert_eq!(report.worst_underprediction_factor, 1.0);
    }

    #[test]
    fn hand_counted_fractions() {
        let pairs = vec![
            pair("a", 1.0, 2.0),
            pair("b", 1.0, 4.0),
            pair("c", 1.0, 6.0),
        ];
        let report = evaluate(&pairs).unwrap();
        assert!((report.fraction_within(3) - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.fraction_within(5) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn extreme_overprediction_is_flagged() {
        let pairs = vec![pair("mild", 1.0, 1.5), pair("wild", 1.0, 52.0)];
        let report = evaluate(&pairs).unwrap();
        assert_eq!(report.worst_overprediction_factor, 52.0);
        assert!((report.fraction_within(5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn underprediction_counts_symmetrically() {
        // ratio 1/4 is within factor 5, outside factor 3.
        let pairs = vec![pair("a", 4.0, 1.0)];
        let report = evaluate(&pairs).unwrap();
        assert_eq!(report.fraction_within(3), 0.0);
        assert_eq!(report.fraction_within(5), 1.0);
        assert_eq!(report.worst_underprediction_factor, 4.0);
    }

    #[test]
    fn non_positive_damage_names_the_case() {
        let pairs = vec![pair("fine", 1.0, 1.0), pair("broken", 0.0, 1.0)];
        match evaluate(&pairs) {
            Err(Error::NonPositiveDamage(name, ..)) => assert_eq!(name, "broken"),
            other => panic!("expected NonPositiveDamage, got {other:?}"),
        }
    }

    #[test]
    fn scale_invariance() {
        let base = vec![pair("a", 1.0, 2.5), pair("b", 3.0, 1.0), pair("c", 0.2, 1.3)];
        let scaled: Vec<CasePair> = base
            .iter()
            .map(|p| pair(&p.name, p.measured * 1e4, p.predicted * 1e4))
            .collect();
        let r1 = evaluate(&base).unwrap();
        let r2 = evaluate(&scaled).unwrap();
        assert_eq!(r1.fraction_within(3), r2.fraction_within(3));
        assert_eq!(r1.fraction_within(5), r2.fraction_within(5));
        assert!((r1.worst_overprediction_factor - r2.worst_overprediction_factor).abs() < 1e-12);
    }

    #[test]
    fn fractions_are_monotone_in_the_factor() {
        let pairs = vec![
            pair("a", 1.0, 2.0),
            pair("b", 1.0, 4.0),
            pair("c", 1.0, 10.0),
        ];
        let report = evaluate(&pairs).unwrap();
        assert!(report.fraction_within(5) >= report.fraction_within(3));
    }

    #[test]
    fn identical_reports_compare_with_zero_deltas() {
        let pairs = vec![pair("a", 1.0, 2.0), pair("b", 1.0, 0.5)];
        let report = evaluate(&pairs).unwrap();
        let comparison = compare_strategies(&report, &report).unwrap();
        for (_, (_, _, delta)) in comparison.fractions {
            assert_eq!(delta, 0.0);
        }
    }

    #[test]
    fn uniformly_better_strategy_has_positive_deltas() {
        let single = evaluate(&[pair("a", 1.0, 4.0), pair("b", 1.0, 6.0)]).unwrap();
        let adaptive = evaluate(&[pair("a", 1.0, 1.2), pair("b", 1.0, 0.9)]).unwrap();
        let comparison = compare_strategies(&single, &adaptive).unwrap();
        for (_, (_, _, delta)) in comparison.fractions {
            assert!(delta > 0.0);
        }
    }

    #[test]
    fn mismatched_case_sets_are_rejected() {
        let single = evaluate(&[pair("a", 1.0, 1.0)]).unwrap();
        let adaptive = evaluate(&[pair("b", 1.0, 1.0)]).unwrap();
        assert!(matches!(
            compare_strategies(&single, &adaptive),
            Err(Error::MismatchedCases(_))
        ));
    }
}
