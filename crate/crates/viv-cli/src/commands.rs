//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use viv_core::calibrate::{calibrate_all, CalibrationReport};
use viv_core::characterize::{self, CaseRecord, FeatureVector};
use viv_core::clustering::{self, Algorithm, ClusterModel};
use viv_core::data;
use viv_core::evaluate::{compare_strategies, evaluate, CasePair, EvaluationReport};
use viv_core::hydro::CeParameterSet;
use viv_core::predictor::{predict, PredictionResult, SnCurve};
use viv_core::structural::{CurrentProfile, PipeModel};

use crate::Command;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<viv_core::Error> for CliError {
    fn from(e: viv_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Parse `m=<slope>,loga=<intercept>`.
pub fn parse_sn(text: &str) -> std::result::Result<SnCurve, String> {
    let mut slope = None;
    let mut intercept = None;
    for part in text.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got '{part}'"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| format!("bad number in '{part}': {e}"))?;
        match key.trim() {
            "m" => slope = Some(value),
            "loga" => intercept = Some(value),
            other => return Err(format!("unknown S-N key '{other}' (expected m, loga)")),
        }
    }
    let slope = slope.ok_or("missing m=<inverse slope>")?;
    let intercept = intercept.ok_or("missing loga=<log10 intercept>")?;
    SnCurve::new(slope, intercept).map_err(|e| e.to_string())
}

/// Run `body` inside a rayon pool of the requested size so that every
/// internal `par_iter` honors --jobs.
fn with_pool<T>(jobs: Option<usize>, body: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match jobs {
        None => body(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
            pool.install(body)
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn expect_header(lines: &[String], expected: &str, path: &Path) -> Result<()> {
    match lines.first() {
        Some(header) if header == expected => Ok(()),
        Some(header) => Err(CliError::Data(format!(
            "{}: expected header '{expected}', found '{header}'",
            path.display()
        ))),
        None => Err(CliError::Data(format!("{}: empty file", path.display()))),
    }
}

fn parse_field<T: std::str::FromStr>(token: &str, what: &str, path: &Path) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    token.trim().parse().map_err(|e| {
        CliError::Data(format!("{}: bad {what} '{token}': {e}", path.display()))
    })
}

fn read_features_csv(path: &Path) -> Result<Vec<(String, FeatureVector)>> {
    let lines = read_lines(path)?;
    expect_header(&lines, "case,n,R31,F", path)?;
    lines[1..]
        .iter()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(CliError::Data(format!(
                    "{}: expected 4 fields, got {}: '{line}'",
                    path.display(),
                    fields.len()
                )));
            }
            Ok((
                fields[0].trim().to_string(),
                FeatureVector {
                    mode_order: parse_field(fields[1], "mode order", path)?,
                    stress_ratio: parse_field(fields[2], "stress ratio", path)?,
                    stiffness_ratio: parse_field(fields[3], "stiffness ratio", path)?,
                },
            ))
        })
        .collect()
}

fn read_labels_csv(path: &Path) -> Result<BTreeMap<String, usize>> {
    let lines = read_lines(path)?;
    expect_header(&lines, "case,label", path)?;
    let mut labels = BTreeMap::new();
    for line in &lines[1..] {
        let (name, label) = line.split_once(',').ok_or_else(|| {
            CliError::Data(format!("{}: expected 2 fields: '{line}'", path.display()))
        })?;
        labels.insert(name.trim().to_string(), parse_field(label, "label", path)?);
    }
    Ok(labels)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn print_warnings(case: &CaseRecord) {
    for warning in case.warnings() {
        eprintln!("warning: {warning}");
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Characterize { cases, out, jobs } => {
            with_pool(jobs.jobs, || characterize_cmd(&cases, &out))
        }
        Command::Cluster {
            features,
            algo,
            k,
            seed,
            out,
            model,
        } => cluster_cmd(&features, &algo, k, seed, &out, &model),
        Command::Classify {
            model,
            mode_order,
            stress_ratio,
            stiffness_ratio,
            out,
        } => classify_cmd(&model, mode_order, stress_ratio, stiffness_ratio, out.as_deref()),
        Command::Calibrate {
            cases,
            labels,
            params,
            budget,
            out_dir,
            sn,
            jobs,
        } => with_pool(jobs.jobs, || {
            calibrate_cmd(&cases, &labels, &params, budget, &out_dir, &sn.sn)
        }),
        Command::Predict {
            case,
            cases,
            params,
            params_dir,
            labels,
            out,
            csv,
            sn,
            jobs,
        } => with_pool(jobs.jobs, || {
            predict_cmd(
                case.as_deref(),
                cases.as_deref(),
                params.as_deref(),
                params_dir.as_deref(),
                labels.as_deref(),
                &out,
                csv.as_deref(),
                &sn.sn,
            )
        }),
        Command::Evaluate {
            pairs,
            out,
            scatter,
            baseline,
        } => evaluate_cmd(&pairs, &out, scatter.as_deref(), baseline.as_deref()),
        Command::Synth {
            pipe,
            params,
            speeds,
            profile,
            noise,
            seed,
            sensors,
            samples,
            ratio3,
            stress_per_curvature,
            out_dir,
            sn,
        } => synth_cmd(
            &pipe,
            params.as_deref(),
            &speeds,
            &profile,
            noise,
            seed,
            sensors,
            samples,
            ratio3,
            stress_per_curvature,
            &out_dir,
            &sn.sn,
        ),
        Command::CeGrid {
            params,
            out,
            fhat_points,
            ad_points,
        } => ce_grid_cmd(&params, &out, fhat_points, ad_points),
    }
}

fn characterize_cmd(cases_dir: &Path, out: &Path) -> Result<()> {
    use rayon::prelude::*;
    let cases = data::load_cases_dir(cases_dir)?;
    if cases.is_empty() {
        return Err(CliError::Data(format!(
            "no case files in {}",
            cases_dir.display()
        )));
    }
    for case in &cases {
        print_warnings(case);
    }
    let rows: Vec<std::result::Result<(String, FeatureVector), viv_core::Error>> = cases
        .par_iter()
        .map(|case| characterize::features(case).map(|fv| (case.name.clone(), fv)))
        .collect();

    let mut csv = String::from("case,n,R31,F\n");
    for row in rows {
        let (name, fv) = row.map_err(|e| CliError::Data(e.to_string()))?;
        writeln!(
            csv,
            "{name},{},{},{}",
            fv.mode_order, fv.stress_ratio, fv.stiffness_ratio
        )
        .unwrap();
    }
    write_file(out, &csv)?;
    println!("wrote features for {} cases to {}", cases.len(), out.display());
    Ok(())
}

fn cluster_cmd(
    features_path: &Path,
    algo: &str,
    k: usize,
    seed: u64,
    out: &Path,
    model_path: &Path,
) -> Result<()> {
    let algorithm: Algorithm = algo
        .parse()
        .map_err(|e: viv_core::Error| CliError::Usage(e.to_string()))?;
    let rows = read_features_csv(features_path)?;
    let features: Vec<FeatureVector> = rows.iter().map(|(_, fv)| *fv).collect();
    let model = match algorithm {
        Algorithm::Kmeans => clustering::kmeans(&features, k, seed)?,
        Algorithm::Gmm => clustering::gmm_fit(&features, k, seed)?,
        Algorithm::Spectral => clustering::spectral(&features, k, seed)?,
    };

    let mut csv = String::from("case,label\n");
    for ((name, _), label) in rows.iter().zip(&model.labels) {
        writeln!(csv, "{name},{label}").unwrap();
    }
    write_file(out, &csv)?;
    data::save_json(&model, model_path)?;
    println!(
        "clustered {} cases into {} groups with {algo}; labels in {}, model in {}",
        rows.len(),
        k,
        out.display(),
        model_path.display()
    );
    Ok(())
}

fn classify_cmd(
    model_path: &Path,
    mode_order: f64,
    stress_ratio: f64,
    stiffness_ratio: f64,
    out: Option<&Path>,
) -> Result<()> {
    let model: ClusterModel = data::load_json(model_path)?;
    model.validate()?;
    let point = FeatureVector {
        mode_order,
        stress_ratio,
        stiffness_ratio,
    };
    let (cluster, posteriors) = clustering::classify(&model, &point)?;
    let output = serde_json::json!({
        "cluster": cluster,
        "posteriors": posteriors,
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&output).unwrap());
    match out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn calibrate_cmd(
    cases_dir: &Path,
    labels_path: &Path,
    params_path: &Path,
    budget: usize,
    out_dir: &Path,
    sn: &SnCurve,
) -> Result<()> {
    let cases = data::load_cases_dir(cases_dir)?;
    let labels = read_labels_csv(labels_path)?;
    let init = data::load_params(params_path)?;

    let mut clusters: BTreeMap<usize, Vec<CaseRecord>> = BTreeMap::new();
    for case in cases {
        let label = labels.get(&case.name).ok_or_else(|| {
            CliError::Data(format!("case '{}' has no entry in the labels CSV", case.name))
        })?;
        clusters.entry(*label).or_default().push(case);
    }

    let report: CalibrationReport = calibrate_all(&clusters, &init, sn, budget)?;
    std::fs::create_dir_all(out_dir)?;

    let mut log = String::from("cluster,evaluation,best_objective\n");
    for (cluster, outcome) in &report.calibrated {
        let path = out_dir.join(format!("cluster_{cluster}.json"));
        data::save_json(&outcome.params, &path)?;
        for (i, best) in outcome.history.iter().enumerate() {
            writeln!(log, "{cluster},{},{best}", i + 1).unwrap();
        }
        println!(
            "cluster {cluster}: objective {:.6} after {} evaluations -> {}",
            outcome.objective,
            outcome.evaluations,
            path.display()
        );
    }
    for (cluster, reason) in &report.skipped {
        println!("cluster {cluster}: skipped ({reason})");
    }
    write_file(&out_dir.join("convergence.csv"), &log)?;
    Ok(())
}

fn load_cluster_params(dir: &Path, cluster: usize) -> Result<CeParameterSet> {
    let path = dir.join(format!("cluster_{cluster}.json"));
    if !path.exists() {
        return Err(CliError::Data(format!(
            "no parameter file for cluster {cluster} at {}",
            path.display()
        )));
    }
    Ok(data::load_params(&path)?)
}

#[allow(clippy::too_many_arguments)]
fn predict_cmd(
    case: Option<&Path>,
    cases: Option<&Path>,
    params: Option<&Path>,
    params_dir: Option<&Path>,
    labels: Option<&Path>,
    out: &Path,
    csv: Option<&Path>,
    sn: &SnCurve,
) -> Result<()> {
    use rayon::prelude::*;
    match (case, cases) {
        (Some(case_path), None) => {
            let params_path = params.ok_or_else(|| {
                CliError::Usage("single-case prediction needs --params".into())
            })?;
            let case = data::load_case(case_path)?;
            print_warnings(&case);
            let parameter_set = data::load_params(params_path)?;
            let result = predict(&case, &parameter_set, sn)?;
            data::save_json(&result, out)?;
            if let Some(csv_path) = csv {
                write_file(csv_path, &per_sensor_csv(&result))?;
            }
            println!(
                "predicted {} zones, max damage rate {:.6e} 1/year -> {}",
                result.zones.len(),
                result.max_damage_rate,
                out.display()
            );
            Ok(())
        }
        (None, Some(cases_dir)) => {
            let loaded = data::load_cases_dir(cases_dir)?;
            if loaded.is_empty() {
                return Err(CliError::Data(format!(
                    "no case files in {}",
                    cases_dir.display()
                )));
            }
            // Resolve each case's parameter set up front.
            let mut resolved: Vec<(CaseRecord, CeParameterSet)> = Vec::new();
            match (params, params_dir) {
                (Some(path), None) => {
                    let shared = data::load_params(path)?;
                    for case in loaded {
                        resolved.push((case, shared.clone()));
                    }
                }
                (None, Some(dir)) => {
                    let labels_path = labels.ok_or_else(|| {
                        CliError::Usage("--params-dir needs --labels to map cases to clusters".into())
                    })?;
                    let labels = read_labels_csv(labels_path)?;
                    for case in loaded {
                        let label = labels.get(&case.name).ok_or_else(|| {
                            CliError::Data(format!(
                                "case '{}' has no entry in the labels CSV",
                                case.name
                            ))
                        })?;
                        let params = load_cluster_params(dir, *label)?;
                        resolved.push((case, params));
                    }
                }
                _ => {
                    return Err(CliError::Usage(
                        "batch prediction needs exactly one of --params or --params-dir".into(),
                    ))
                }
            }

            let rows: Vec<std::result::Result<String, viv_core::Error>> = resolved
                .par_iter()
                .map(|(case, params)| {
                    let result = predict(case, params, sn)?;
                    let measured = case
                        .measured_fatigue
                        .as_ref()
                        .map(|f| f.iter().cloned().fold(0.0, f64::max).to_string())
                        .unwrap_or_default();
                    Ok(format!("{},{},{}", case.name, measured, result.max_damage_rate))
                })
                .collect();
            let mut csv_text = String::from("case,measured,predicted\n");
            for row in rows {
                let line = row.map_err(|e| CliError::Data(e.to_string()))?;
                csv_text.push_str(&line);
                csv_text.push('\n');
            }
            write_file(out, &csv_text)?;
            println!("wrote predictions for {} cases to {}", resolved.len(), out.display());
            Ok(())
        }
        _ => Err(CliError::Usage(
            "predict needs exactly one of --case or --cases".into(),
        )),
    }
}

fn per_sensor_csv(result: &PredictionResult) -> String {
    let mut csv = String::from("z,stress_std,damage_rate\n");
    for ((z, stress), damage) in result
        .sensor_positions
        .iter()
        .zip(&result.stress_std)
        .zip(&result.damage_rate)
    {
        writeln!(csv, "{z},{stress},{damage}").unwrap();
    }
    csv
}

fn evaluate_cmd(
    pairs_path: &Path,
    out: &Path,
    scatter: Option<&Path>,
    baseline: Option<&Path>,
) -> Result<()> {
    let lines = read_lines(pairs_path)?;
    expect_header(&lines, "case,measured,predicted", pairs_path)?;
    let mut pairs = Vec::new();
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::Data(format!(
                "{}: expected 3 fields: '{line}'",
                pairs_path.display()
            )));
        }
        if fields[1].trim().is_empty() {
            return Err(CliError::Data(format!(
                "case '{}' has no measured value; cannot evaluate",
                fields[0]
            )));
        }
        pairs.push(CasePair {
            name: fields[0].trim().to_string(),
            measured: parse_field(fields[1], "measured damage", pairs_path)?,
            predicted: parse_field(fields[2], "predicted damage", pairs_path)?,
        });
    }
    let report = evaluate(&pairs)?;
    data::save_json(&report, out)?;
    if let Some(scatter_path) = scatter {
        let mut csv = String::from("case,measured,predicted,ratio\n");
        for case in &report.cases {
            writeln!(csv, "{},{},{},{}", case.name, case.measured, case.predicted, case.ratio)
                .unwrap();
        }
        write_file(scatter_path, &csv)?;
    }
    println!(
        "{} cases: within factor 3 {:.1}%, within factor 5 {:.1}%, worst over {:.2}, worst under {:.2}",
        report.case_count,
        100.0 * report.fraction_within(3),
        100.0 * report.fraction_within(5),
        report.worst_overprediction_factor,
        report.worst_underprediction_factor
    );
    if let Some(baseline_path) = baseline {
        let single: EvaluationReport = data::load_json(baseline_path)?;
        let comparison = compare_strategies(&single, &report)?;
        println!(
            "{}",
            serde_json::to_string_pretty(&comparison).expect("comparison serializes")
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn synth_cmd(
    pipe_arg: &str,
    params: Option<&Path>,
    speeds: &[f64],
    profile_arg: &str,
    noise: f64,
    seed: u64,
    sensors: usize,
    samples: usize,
    ratio3: f64,
    stress_per_curvature: Option<f64>,
    out_dir: &Path,
    sn: &SnCurve,
) -> Result<()> {
    let mut pipe: PipeModel = if Path::new(pipe_arg).exists() {
        data::load_json(Path::new(pipe_arg))?
    } else {
        data::bundled_pipe(pipe_arg)?
    };
    if let Some(spc) = stress_per_curvature {
        pipe.stress_per_curvature = Some(spc);
    }
    if pipe.stress_per_curvature.is_none() {
        return Err(CliError::Usage(format!(
            "pipe '{}' carries no stress_per_curvature; pass --stress-per-curvature <Pa*m>",
            pipe.name
        )));
    }
    pipe.validate()?;

    let truth = match params {
        Some(path) => data::load_params(path)?,
        None => CeParameterSet::reference(),
    };

    let shear_floor = if profile_arg == "uniform" {
        None
    } else if let Some(floor) = profile_arg.strip_prefix("shear:") {
        let floor: f64 = floor
            .parse()
            .map_err(|e| CliError::Usage(format!("bad shear floor '{floor}': {e}")))?;
        if !(0.0..1.0).contains(&floor) {
            return Err(CliError::Usage(format!(
                "shear floor must be in [0, 1), got {floor}"
            )));
        }
        Some(floor)
    } else {
        return Err(CliError::Usage(format!(
            "unknown profile '{profile_arg}' (expected uniform or shear:<floor>)"
        )));
    };

    std::fs::create_dir_all(out_dir)?;
    for (i, &speed) in speeds.iter().enumerate() {
        let profile = match shear_floor {
            None => CurrentProfile::uniform(pipe.length, speed),
            Some(floor) => CurrentProfile::linear(pipe.length, floor * speed, speed),
        };
        let options = data::SynthOptions {
            name: format!("synth-{i:03}"),
            sensor_count: sensors,
            sample_count: samples,
            third_harmonic_ratio: ratio3,
        };
        let case = data::synthesize_case(&pipe, &profile, &truth, sn, noise, seed + i as u64, &options)?;
        let path = out_dir.join(format!("synth-{i:03}.json"));
        data::save_case(&case, &path)?;
        let peak = case
            .measured_fatigue
            .as_ref()
            .map(|f| f.iter().cloned().fold(0.0, f64::max))
            .unwrap_or(0.0);
        println!(
            "{}: U = {speed} m/s, max measured damage {peak:.4e} 1/year",
            path.display()
        );
    }
    Ok(())
}

fn ce_grid_cmd(params_path: &Path, out: &Path, fhat_points: usize, ad_points: usize) -> Result<()> {
    if fhat_points < 2 || ad_points < 2 {
        return Err(CliError::Usage(
            "grid needs at least 2 points per axis".into(),
        ));
    }
    let params = data::load_params(params_path)?;
    let fhat_lo = 0.8 * params.fhat_min;
    let fhat_hi = 1.2 * params.fhat_max;
    let ad_hi = 1.5 * params.max_zero_crossing();
    let mut csv = String::from("fhat,ad,ce\n");
    for i in 0..fhat_points {
        let fhat = fhat_lo + (fhat_hi - fhat_lo) * i as f64 / (fhat_points - 1) as f64;
        for j in 0..ad_points {
            let ad = ad_hi * j as f64 / (ad_points - 1) as f64;
            writeln!(csv, "{fhat},{ad},{}", params.ce(ad, fhat)).unwrap();
        }
    }
    write_file(out, &csv)?;
    println!(
        "wrote {} x {} coefficient grid to {}",
        fhat_points,
        ad_points,
        out.display()
    );
    Ok(())
}
