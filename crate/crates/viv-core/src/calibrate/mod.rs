//! Derivative-free calibration of excitation parameters per data
//! cluster against measured fatigue.
//!
//! The objective is the mean squared error between predicted and
//! measured per-sensor fatigue in log10 space: raw damage rates span
//! decades, and a raw-space MSE would be dominated by the single worst
//! case.

mod nelder_mead;

pub use nelder_mead::{minimize, MinimizeResult};

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::characterize::CaseRecord;
use crate::error::{Error, Result};
use crate::hydro::{CeParameterSet, PARAMETER_COUNT};
use crate::predictor::{predict, SnCurve};

/// Damage rates are floored here (1/year) before taking logs; modal
/// node sensors produce exact zeros.
pub const DAMAGE_FLOOR: f64 = 1e-12;

/// Box constraints: each parameter may move within this factor range of
/// its initial value.
pub const BOX_LOWER_FACTOR: f64 = 0.2;
pub const BOX_UPPER_FACTOR: f64 = 5.0;

/// Smallest evaluation budget worth spending.
pub const MIN_BUDGET: usize = 200;

/// Mean squared error between predicted and measured per-sensor fatigue
/// in log10 space, over all sensors of all cases.
pub fn fatigue_mse(params: &CeParameterSet, cases: &[CaseRecord], sn: &SnCurve) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument(
            "fatigue MSE needs at least one case".into(),
        ));
    }
    let per_case: Vec<Result<(f64, usize)>> = cases
        .par_iter()
        .map(|case| {
            let measured = case
                .measured_fatigue
                .as_ref()
                .ok_or_else(|| Error::MissingMeasuredFatigue(case.name.clone()))?;
            let prediction = predict(case, params, sn)?;
            let sum = prediction
                .damage_rate
                .iter()
                .zip(measured)
                .map(|(&pred, &meas)| {
                    let diff =
                        pred.max(DAMAGE_FLOOR).log10() - meas.max(DAMAGE_FLOOR).log10();
                    diff * diff
                })
                .sum::<f64>();
            Ok((sum, measured.len()))
        })
        .collect();

    let mut total = 0.0;
    let mut count = 0usize;
    for entry in per_case {
        let (sum, n) = entry?;
        total += sum;
        count += n;
    }
    Ok(total / count as f64)
}

/// Everything a calibration run produced.
#[derive(Debug, Clone)]
pub struct CalibrationOutcome {
    pub params: CeParameterSet,
    /// Objective at the returned parameters.
    pub objective: f64,
    pub evaluations: usize,
    /// Best objective after each evaluation.
    pub history: Vec<f64>,
}

/// Calibrate one cluster: Nelder-Mead over the 12 surface parameters
/// inside a box of [0.2x, 5x] around the initial values, with invalid
/// parameter combinations rejected. The result never scores worse than
/// the initial set.
pub fn calibrate_cluster(
    cases: &[CaseRecord],
    init: &CeParameterSet,
    sn: &SnCurve,
    budget: usize,
) -> Result<CalibrationOutcome> {
    if cases.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: cases.len(),
        });
    }
    if budget < MIN_BUDGET {
        return Err(Error::InvalidArgument(format!(
            "budget must be at least {MIN_BUDGET}, got {budget}"
        )));
    }
    init.validate()?;
    for case in cases {
        if case.measured_fatigue.is_none() {
            return Err(Error::MissingMeasuredFatigue(case.name.clone()));
        }
    }

    let start = init.to_vector();
    if start.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameters(
            "calibration needs strictly positive initial parameters to build the box".into(),
        ));
    }
    let lower: Vec<f64> = start.iter().map(|v| v * BOX_LOWER_FACTOR).collect();
    let upper: Vec<f64> = start.iter().map(|v| v * BOX_UPPER_FACTOR).collect();

    let objective = |x: &[f64]| -> f64 {
        let mut vector = [0.0; PARAMETER_COUNT];
        vector.copy_from_slice(x);
        let Ok(candidate) = CeParameterSet::from_vector(&vector) else {
            return f64::INFINITY;
        };
        fatigue_mse(&candidate, cases, sn).unwrap_or(f64::INFINITY)
    };

    let result = minimize(objective, &start, &lower, &upper, budget);
    if !result.best_value.is_finite() {
        return Err(Error::NoFeasiblePoint);
    }
    let mut vector = [0.0; PARAMETER_COUNT];
    vector.copy_from_slice(&result.best_point);
    let params = CeParameterSet::from_vector(&vector)?;
    Ok(CalibrationOutcome {
        params,
        objective: result.best_value,
        evaluations: result.evaluations,
        history: result.history,
    })
}

/// Per-cluster calibration over a labeled case map. Clusters with fewer
/// than 3 usable cases are skipped with a reason instead of failing the
/// whole run.
#[derive(Debug, Clone, Default)]
pub struct CalibrationReport {
    pub calibrated: BTreeMap<usize, CalibrationOutcome>,
    pub skipped: Vec<(usize, String)>,
}

pub fn calibrate_all(
    clusters: &BTreeMap<usize, Vec<CaseRecord>>,
    init: &CeParameterSet,
    sn: &SnCurve,
    budget: usize,
) -> Result<CalibrationReport> {
    let mut report = CalibrationReport::default();
    for (&cluster, cases) in clusters {
        let usable: Vec<CaseRecord> = cases
            .iter()
            .filter(|c| c.measured_fatigue.is_some())
            .cloned()
            .collect();
        if usable.len() < 3 {
            report.skipped.push((
                cluster,
                format!(
                    "only {} of {} cases carry measured fatigue; need 3",
                    usable.len(),
                    cases.len()
                ),
            ));
            continue;
        }
        let outcome = calibrate_cluster(&usable, init, sn, budget)?;
        report.calibrated.insert(cluster, outcome);
    }
    Ok(report)
}
