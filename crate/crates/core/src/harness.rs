//! Monte Carlo experiment runner: generates replicated synthetic datasets,
//! runs the requested estimators on each, and aggregates selection and
//! estimation metrics into a report.
//!
//! Replications are independent pure computations over seeds derived from the
//! master seed, so runs are bit-reproducible and the report is independent of
//! the worker count: results are always folded in replication-index order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::basis::{make_bspline_basis, sobolev_penalty_matrix, PenaltyMatrix, SplineBasis};
use crate::data::{
    build_centered_design, derive_seed, generate, Dataset, SimulationScenario, TrueModel,
};
use crate::error::{Error, Result};
use crate::glasso::{fit_adaptive_aic, fit_path_aic, FitOptions, PathGrid};
use crate::mgb::{grid_eval, MgbCandidate, LAMBDA1_FACTOR_GRID, LAMBDA2_TILDE_GRID};
use crate::refit::{
    additive_from_groups, fit_penalized_gcv, fit_penalized_gcv_per_component, fit_sieve, predict,
    AdditiveFit, BasisSpec, FitMethod, GcvGrid,
};

const CONFIG_SCHEMA_VERSION: &str = "1";

/// Report CSV header, fixed by contract.
pub const REPORT_CSV_HEADER: &str =
    "estimator,nv_mean,nv_sd,fp_mean,fp_sd,fn_mean,fn_sd,emse_mean,emse_sd";

/// The estimators the runner knows how to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    /// One-step group Lasso with AIC-selected penalty.
    #[serde(rename = "GL")]
    Gl,
    /// Sieve (unpenalized) refit on the group-Lasso selection.
    #[serde(rename = "GL-SL")]
    GlSl,
    /// Penalized refit with GCV smoothing on the group-Lasso selection.
    #[serde(rename = "GL-PL")]
    GlPl,
    /// Penalized refit on the known true support.
    #[serde(rename = "ORACLE")]
    Oracle,
    /// Double-penalization competitor over its fixed tuning grid.
    #[serde(rename = "MGB-GRID")]
    MgbGrid,
    /// Two-stage adaptive group Lasso, both stages tuned by AIC.
    #[serde(rename = "ADAPTIVE")]
    Adaptive,
}

impl Estimator {
    /// The name used in report rows.
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::Gl => "GL",
            Estimator::GlSl => "GL-SL",
            Estimator::GlPl => "GL-PL",
            Estimator::Oracle => "ORACLE",
            Estimator::MgbGrid => "MGB-GRID",
            Estimator::Adaptive => "ADAPTIVE",
        }
    }
}

fn default_workers() -> usize {
    1
}

/// Selection-step options: the AIC penalty grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct FirstStepConfig {
    pub n_lambda: usize,
    pub ratio: f64,
}

impl Default for FirstStepConfig {
    fn default() -> Self {
        let g = PathGrid::default();
        FirstStepConfig {
            n_lambda: g.n_lambda,
            ratio: g.ratio,
        }
    }
}

impl FirstStepConfig {
    pub fn grid(&self) -> PathGrid {
        PathGrid {
            n_lambda: self.n_lambda,
            ratio: self.ratio,
        }
    }
}

/// Refit options: the GCV smoothing grid and the per-component toggle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SecondStepConfig {
    pub gcv_points: usize,
    pub gcv_log_range: (f64, f64),
    /// Tune a separate smoothing level per component instead of one shared
    /// level.
    pub per_component: bool,
}

impl Default for SecondStepConfig {
    fn default() -> Self {
        let g = GcvGrid::default();
        SecondStepConfig {
            gcv_points: g.n_points,
            gcv_log_range: g.log_range,
            per_component: false,
        }
    }
}

impl SecondStepConfig {
    pub fn grid(&self) -> GcvGrid {
        GcvGrid {
            n_points: self.gcv_points,
            log_range: self.gcv_log_range,
        }
    }
}

/// Full experiment layout. The scenario's seed is the master seed from which
/// every replication derives its own.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Config schema version; must be "1".
    pub version: String,
    pub scenario: SimulationScenario,
    pub replications: usize,
    pub estimators: Vec<Estimator>,
    #[serde(default)]
    pub first_step: FirstStepConfig,
    #[serde(default)]
    pub second_step: SecondStepConfig,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// When set, failed replications are recorded and excluded instead of
    /// aborting the run.
    #[serde(default)]
    pub tolerate_failures: bool,
    /// When set, each estimator with a persistable fit is also scored on an
    /// independently generated test design of the same size.
    #[serde(default)]
    pub evaluate_out_of_sample: bool,
}

impl ExperimentConfig {
    /// A ready-to-run layout with defaults for everything but the scenario.
    pub fn new(
        scenario: SimulationScenario,
        replications: usize,
        estimators: Vec<Estimator>,
    ) -> Self {
        ExperimentConfig {
            version: CONFIG_SCHEMA_VERSION.to_string(),
            scenario,
            replications,
            estimators,
            first_step: FirstStepConfig::default(),
            second_step: SecondStepConfig::default(),
            workers: 1,
            tolerate_failures: false,
            evaluate_out_of_sample: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported config version '{}', expected '{CONFIG_SCHEMA_VERSION}'",
                self.version
            )));
        }
        self.scenario.validate()?;
        if self.replications < 1 {
            return Err(Error::InvalidArgument(
                "need at least one replication".into(),
            ));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument(
                "estimator set must be non-empty".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.estimators {
            if !seen.insert(*e) {
                return Err(Error::InvalidArgument(format!(
                    "estimator {} listed twice",
                    e.label()
                )));
            }
        }
        if self.workers < 1 {
            return Err(Error::InvalidArgument("workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Load a config from a JSON file.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Load {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let cfg: ExperimentConfig = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Load {
                path: path.display().to_string(),
                reason: format!("invalid experiment config: {e}"),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Aggregated metrics for one estimator (or one tuning candidate).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricSummary {
    pub nv_mean: f64,
    pub nv_sd: f64,
    pub fp_mean: f64,
    pub fp_sd: f64,
    pub fn_mean: f64,
    pub fn_sd: f64,
    pub emse_mean: f64,
    pub emse_sd: f64,
    /// Out-of-sample EMSE, present only when the experiment evaluated it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emse_test_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emse_test_sd: Option<f64>,
}

/// One labeled report row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    #[serde(flatten)]
    pub metrics: MetricSummary,
}

/// Aggregates for one tuning candidate of the double-penalized competitor.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CandidateSummary {
    pub lambda1_factor: f64,
    pub lambda2_tilde: f64,
    #[serde(flatten)]
    pub metrics: MetricSummary,
}

impl CandidateSummary {
    /// Report-row label, e.g. `MGB(0.12,0.005)`.
    pub fn label(&self) -> String {
        format!("MGB({},{})", self.lambda1_factor, self.lambda2_tilde)
    }
}

/// A replication that failed under failure tolerance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FailedReplication {
    pub replication: usize,
    pub seed: u64,
    pub message: String,
}

/// The aggregated experiment report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct McReport {
    pub estimators: Vec<EstimatorSummary>,
    /// Per-candidate aggregates, present when MGB-GRID was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mgb_candidates: Option<Vec<CandidateSummary>>,
    /// Index into `mgb_candidates` of the aggregate-EMSE minimizer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mgb_ideal: Option<usize>,
    pub replications_used: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<FailedReplication>,
}

impl McReport {
    /// The ideal candidate's aggregates, when the grid was evaluated.
    pub fn ideal_candidate(&self) -> Option<&CandidateSummary> {
        match (&self.mgb_candidates, self.mgb_ideal) {
            (Some(rows), Some(i)) => rows.get(i),
            _ => None,
        }
    }

    /// The summary row for one estimator, when it was requested.
    pub fn estimator(&self, which: Estimator) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|row| row.estimator == which)
    }
}

/// Per-replication raw metrics for one estimator.
#[derive(Debug, Clone, Copy)]
struct RepMetrics {
    nv: usize,
    fp: usize,
    fn_: usize,
    sq_err: f64,
    sq_err_test: Option<f64>,
}

/// All metrics produced by one replication.
struct RepOutcome {
    per_estimator: Vec<RepMetrics>,
    mgb: Option<Vec<RepMetrics>>,
}

fn selection_metrics(active: &[usize], truth: &TrueModel) -> (usize, usize, usize) {
    let t_star = &truth.active_set;
    let fp = active.iter().filter(|j| !t_star.contains(j)).count();
    let fn_ = t_star.iter().filter(|j| !active.contains(j)).count();
    let nv = active.len();
    debug_assert_eq!(nv, fp + t_star.len() - fn_);
    (nv, fp, fn_)
}

fn mean_squared_difference(fitted: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    let n = fitted.len();
    let mut acc = 0.0;
    for i in 0..n {
        let diff = fitted[i] - mu[i];
        acc += diff * diff;
    }
    acc / n as f64
}

/// Score a persistable fit on the held-out design, if one is present.
fn test_error(fit: &AdditiveFit, test: Option<&(Dataset, TrueModel)>) -> Option<f64> {
    let (data, truth) = test?;
    let pred = predict(fit, &data.z).ok()?;
    Some(mean_squared_difference(&pred, &truth.mu))
}

fn run_replication(config: &ExperimentConfig, replication: usize) -> Result<RepOutcome> {
    let mut scenario = config.scenario.clone();
    scenario.seed = derive_seed(config.scenario.seed, replication as u64);
    let (data, truth) = generate(&scenario)?;
    let test_pair = if config.evaluate_out_of_sample {
        let mut test_scenario = config.scenario.clone();
        test_scenario.seed = derive_seed(
            config.scenario.seed,
            (config.replications + replication) as u64,
        );
        Some(generate(&test_scenario)?)
    } else {
        None
    };

    let first_spec = BasisSpec::first_step_default();
    let second_spec = BasisSpec::second_step_default();
    let needs_selection = config
        .estimators
        .iter()
        .any(|e| matches!(e, Estimator::Gl | Estimator::GlSl | Estimator::GlPl));
    let needs_design = needs_selection
        || config
            .estimators
            .iter()
            .any(|e| matches!(e, Estimator::Adaptive | Estimator::MgbGrid));

    let mut basis: Option<SplineBasis> = None;
    let mut design = None;
    if needs_design {
        let b = make_bspline_basis(
            first_spec.degree,
            first_spec.n_interior,
            first_spec.placement,
            None,
        )?;
        design = Some(build_centered_design(&data, &b)?);
        basis = Some(b);
    }
    let mut gl_fit = None;
    if needs_selection {
        let (fit, _) = fit_path_aic(design.as_ref().unwrap(), &data.y, &config.first_step.grid())?;
        gl_fit = Some(fit);
    }
    let gcv_grid = config.second_step.grid();
    let refit_by_gcv = |t_hat: &[usize]| -> Result<AdditiveFit> {
        if config.second_step.per_component {
            fit_penalized_gcv_per_component(&data, t_hat, &second_spec, &gcv_grid, 2)
        } else {
            fit_penalized_gcv(&data, t_hat, &second_spec, &gcv_grid)
        }
    };

    let mut per_estimator = Vec::with_capacity(config.estimators.len());
    let mut mgb = None;
    for est in &config.estimators {
        let metrics = match est {
            Estimator::Gl => {
                let fit = gl_fit.as_ref().unwrap();
                let (nv, fp, fn_) = selection_metrics(&fit.coefficients.active_set, &truth);
                let sq_err = mean_squared_difference(&fit.fitted, &truth.mu);
                let sq_err_test = test_pair.as_ref().and_then(|_| {
                    let additive = additive_from_groups(
                        basis.as_ref().unwrap(),
                        design.as_ref().unwrap().column_means(),
                        &fit.coefficients,
                        fit.intercept,
                        FitMethod::Gl,
                        None,
                    );
                    test_error(&additive, test_pair.as_ref())
                });
                RepMetrics {
                    nv,
                    fp,
                    fn_,
                    sq_err,
                    sq_err_test,
                }
            }
            Estimator::GlSl => {
                let t_hat = &gl_fit.as_ref().unwrap().coefficients.active_set;
                let fit = fit_sieve(&data, t_hat, &first_spec)?;
                let (nv, fp, fn_) = selection_metrics(&fit.active_set, &truth);
                let sq_err = mean_squared_difference(fit.fitted.as_ref().unwrap(), &truth.mu);
                let sq_err_test = test_error(&fit, test_pair.as_ref());
                RepMetrics {
                    nv,
                    fp,
                    fn_,
                    sq_err,
                    sq_err_test,
                }
            }
            Estimator::GlPl => {
                let t_hat = &gl_fit.as_ref().unwrap().coefficients.active_set;
                let fit = refit_by_gcv(t_hat)?;
                let (nv, fp, fn_) = selection_metrics(&fit.active_set, &truth);
                let sq_err = mean_squared_difference(fit.fitted.as_ref().unwrap(), &truth.mu);
                let sq_err_test = test_error(&fit, test_pair.as_ref());
                RepMetrics {
                    nv,
                    fp,
                    fn_,
                    sq_err,
                    sq_err_test,
                }
            }
            Estimator::Oracle => {
                let fit = refit_by_gcv(&truth.active_set)?;
                let (nv, fp, fn_) = selection_metrics(&fit.active_set, &truth);
                let sq_err = mean_squared_difference(fit.fitted.as_ref().unwrap(), &truth.mu);
                let sq_err_test = test_error(&fit, test_pair.as_ref());
                RepMetrics {
                    nv,
                    fp,
                    fn_,
                    sq_err,
                    sq_err_test,
                }
            }
            Estimator::Adaptive => {
                let (adaptive, _, _) =
                    fit_adaptive_aic(design.as_ref().unwrap(), &data.y, &config.first_step.grid())?;
                let fit = &adaptive.fit;
                let (nv, fp, fn_) = selection_metrics(&fit.coefficients.active_set, &truth);
                let sq_err = mean_squared_difference(&fit.fitted, &truth.mu);
                let sq_err_test = test_pair.as_ref().and_then(|_| {
                    let additive = additive_from_groups(
                        basis.as_ref().unwrap(),
                        design.as_ref().unwrap().column_means(),
                        &fit.coefficients,
                        fit.intercept,
                        FitMethod::Adaptive,
                        None,
                    );
                    test_error(&additive, test_pair.as_ref())
                });
                RepMetrics {
                    nv,
                    fp,
                    fn_,
                    sq_err,
                    sq_err_test,
                }
            }
            Estimator::MgbGrid => {
                let b = basis.as_ref().unwrap();
                let penalty: PenaltyMatrix = sobolev_penalty_matrix(b, first_spec.nu)?;
                let rows: Vec<MgbCandidate> = grid_eval(
                    design.as_ref().unwrap(),
                    &penalty,
                    &data.y,
                    &truth,
                    &FitOptions::default(),
                )?;
                mgb = Some(
                    rows.iter()
                        .map(|c| RepMetrics {
                            nv: c.n_variables,
                            fp: c.false_positives,
                            fn_: c.false_negatives,
                            sq_err: c.squared_error,
                            sq_err_test: None,
                        })
                        .collect(),
                );
                // The grid is reported through its candidate rows; the
                // estimator slot carries the per-replication best candidate
                // purely as a placeholder and is not emitted in reports.
                let best = rows
                    .iter()
                    .min_by(|a, b| a.squared_error.total_cmp(&b.squared_error))
                    .unwrap();
                RepMetrics {
                    nv: best.n_variables,
                    fp: best.false_positives,
                    fn_: best.false_negatives,
                    sq_err: best.squared_error,
                    sq_err_test: None,
                }
            }
        };
        per_estimator.push(metrics);
    }
    Ok(RepOutcome { per_estimator, mgb })
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, var.sqrt())
}

fn summarize(rows: &[RepMetrics]) -> MetricSummary {
    let nv: Vec<f64> = rows.iter().map(|r| r.nv as f64).collect();
    let fp: Vec<f64> = rows.iter().map(|r| r.fp as f64).collect();
    let fn_: Vec<f64> = rows.iter().map(|r| r.fn_ as f64).collect();
    let sq: Vec<f64> = rows.iter().map(|r| r.sq_err).collect();
    let (nv_mean, nv_sd) = mean_and_sd(&nv);
    let (fp_mean, fp_sd) = mean_and_sd(&fp);
    let (fn_mean, fn_sd) = mean_and_sd(&fn_);
    let (emse_mean, emse_sd) = mean_and_sd(&sq);
    let tests: Vec<f64> = rows.iter().filter_map(|r| r.sq_err_test).collect();
    let (emse_test_mean, emse_test_sd) = if tests.len() == rows.len() && !tests.is_empty() {
        let (m, s) = mean_and_sd(&tests);
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    MetricSummary {
        nv_mean,
        nv_sd,
        fp_mean,
        fp_sd,
        fn_mean,
        fn_sd,
        emse_mean,
        emse_sd,
        emse_test_mean,
        emse_test_sd,
    }
}

/// Run the full experiment and aggregate its report.
pub fn run(config: &ExperimentConfig) -> Result<McReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("could not build worker pool: {e}")))?;
    let outcomes: Vec<(usize, Result<RepOutcome>)> = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|r| (r, run_replication(config, r)))
            .collect()
    });

    let mut kept: Vec<&RepOutcome> = Vec::with_capacity(config.replications);
    let mut failed = Vec::new();
    for (r, outcome) in &outcomes {
        match outcome {
            Ok(o) => kept.push(o),
            Err(e) => {
                let seed = derive_seed(config.scenario.seed, *r as u64);
                if config.tolerate_failures {
                    failed.push(FailedReplication {
                        replication: *r,
                        seed,
                        message: e.to_string(),
                    });
                } else {
                    return Err(Error::InvalidArgument(format!(
                        "replication {r} (seed {seed}) failed: {e}; \
                         set the failure-tolerance flag to continue past failures"
                    )));
                }
            }
        }
    }
    if kept.is_empty() {
        return Err(Error::InvalidArgument(
            "every replication failed; nothing to aggregate".into(),
        ));
    }

    let mut estimators = Vec::new();
    let mut mgb_candidates = None;
    let mut mgb_ideal = None;
    for (slot, est) in config.estimators.iter().enumerate() {
        if *est == Estimator::MgbGrid {
            let n_cands = LAMBDA1_FACTOR_GRID.len() * LAMBDA2_TILDE_GRID.len();
            let mut rows = Vec::with_capacity(n_cands);
            let mut k = 0;
            for &l2t in &LAMBDA2_TILDE_GRID {
                for &factor in &LAMBDA1_FACTOR_GRID {
                    let cand: Vec<RepMetrics> = kept
                        .iter()
                        .map(|o| o.mgb.as_ref().expect("MGB metrics present")[k])
                        .collect();
                    rows.push(CandidateSummary {
                        lambda1_factor: factor,
                        lambda2_tilde: l2t,
                        metrics: summarize(&cand),
                    });
                    k += 1;
                }
            }
            let ideal = rows
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.metrics.emse_mean.total_cmp(&b.1.metrics.emse_mean))
                .map(|(i, _)| i);
            mgb_candidates = Some(rows);
            mgb_ideal = ideal;
        } else {
            let per: Vec<RepMetrics> = kept.iter().map(|o| o.per_estimator[slot]).collect();
            estimators.push(EstimatorSummary {
                estimator: *est,
                metrics: summarize(&per),
            });
        }
    }
    Ok(McReport {
        estimators,
        mgb_candidates,
        mgb_ideal,
        replications_used: kept.len(),
        failed,
    })
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

fn csv_row(
    writer: &mut csv::Writer<impl Write>,
    label: &str,
    m: &MetricSummary,
) -> csv::Result<()> {
    writer.write_record([
        label,
        &m.nv_mean.to_string(),
        &m.nv_sd.to_string(),
        &m.fp_mean.to_string(),
        &m.fp_sd.to_string(),
        &m.fn_mean.to_string(),
        &m.fn_sd.to_string(),
        &m.emse_mean.to_string(),
        &m.emse_sd.to_string(),
    ])
}

/// Write a report to `path` as CSV (one row per estimator and per grid
/// candidate, plus an `MGB-IDEAL` row) or as JSON with full precision.
/// Candidate labels contain a comma and are quoted, keeping nine columns.
pub fn write_report(report: &McReport, path: &Path, format: ReportFormat) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(out);
            let to_err = |e: csv::Error| Error::Model(format!("could not write report: {e}"));
            writer
                .write_record(REPORT_CSV_HEADER.split(','))
                .map_err(to_err)?;
            for row in &report.estimators {
                csv_row(&mut writer, row.estimator.label(), &row.metrics).map_err(to_err)?;
            }
            if let Some(cands) = &report.mgb_candidates {
                for cand in cands {
                    csv_row(&mut writer, &cand.label(), &cand.metrics).map_err(to_err)?;
                }
                if let Some(ideal) = report.ideal_candidate() {
                    csv_row(&mut writer, "MGB-IDEAL", &ideal.metrics).map_err(to_err)?;
                }
            }
            writer.flush()?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)
                .map_err(|e| Error::Model(format!("could not serialize report: {e}")))?;
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Convenience: squared-error comparison of fitted values against the truth
/// on an explicit design, for callers assembling their own studies.
pub fn empirical_mse(fitted: &DVector<f64>, mu: &DVector<f64>) -> Result<f64> {
    if fitted.len() != mu.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: fitted {} vs truth {}",
            fitted.len(),
            mu.len()
        )));
    }
    Ok(mean_squared_difference(fitted, mu))
}

/// Evaluate a stored additive fit on a design matrix against known truth.
pub fn out_of_sample_mse(fit: &AdditiveFit, z: &DMatrix<f64>, mu: &DVector<f64>) -> Result<f64> {
    let pred = predict(fit, z)?;
    empirical_mse(&pred, mu)
}
