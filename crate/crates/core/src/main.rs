//! Thin command-line front end: fit additive models from CSV data, run
//! Monte Carlo experiments from config files, compute design diagnostics,
//! and predict from stored model files. All logic lives in the library; this
//! binary parses flags, wires files to library calls, and maps failures to
//! exit codes (0 success, 1 runtime failure, 2 usage or config error).

use clap::{Parser, Subcommand, ValueEnum};
use std::fmt::Display;
use std::path::{Path, PathBuf};

use samfit::basis::{make_bspline_basis, sobolev_penalty_matrix};
use samfit::data::{
    build_centered_design, build_population_whitened_design, load_csv, load_csv_matrix, Dataset,
    RescaleMap, ResponseColumn,
};
use samfit::diagnostics::{diagnose_design, DiagnosticsRequest, DEFAULT_SUBSET_BUDGET};
use samfit::glasso::{self, fit_adaptive, fit_adaptive_aic, fit_path_aic, PathGrid};
use samfit::harness::{run as run_experiment, write_report, ExperimentConfig, ReportFormat};
use samfit::mgb::fit_mgb;
use samfit::refit::{
    additive_from_groups, fit_penalized, fit_penalized_gcv, fit_penalized_gcv_per_component,
    fit_sieve, load_model, predict, save_model, AdditiveFit, BasisSpec, FitMethod, GcvGrid,
};

#[derive(Parser)]
#[command(
    name = "samfit",
    version,
    about = "Two-step sparse additive model estimation",
    long_about = "Fit sparse additive models from CSV data by group-Lasso selection and \
                  penalized refitting, run Monte Carlo studies, and inspect design quality."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print resolved options and where each value came from (flag, config,
    /// or default).
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an additive model to a CSV file and write a JSON model file.
    Fit(FitArgs),
    /// Run a Monte Carlo experiment described by a JSON config file.
    Simulate(SimulateArgs),
    /// Compute design-quality diagnostics for a CSV file.
    Diagnose(DiagnoseArgs),
    /// Print the smallest penalty level with an all-zero selection fit.
    #[command(name = "lambda-max")]
    LambdaMax(LambdaMaxArgs),
    /// Evaluate a stored model file on new covariate rows.
    Predict(PredictArgs),
}

#[derive(clap::Args)]
struct FitArgs {
    /// Input CSV file (optional header; response plus covariate columns).
    data: PathBuf,
    /// Response column, by header name or 0-based index.
    #[arg(long)]
    response: String,
    /// Estimator to fit.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Fixed selection penalty λ₁ (conflicts with --aic).
    #[arg(long, conflicts_with = "aic")]
    lambda1: Option<f64>,
    /// Choose λ₁ by AIC along a warm-started path (the default).
    #[arg(long)]
    aic: bool,
    /// Fixed smoothing level λ₂ for gl-pl (conflicts with --gcv).
    #[arg(long, conflicts_with = "gcv")]
    lambda2: Option<f64>,
    /// Choose λ₂ by generalized cross-validation (the default for gl-pl).
    #[arg(long)]
    gcv: bool,
    /// Per-component GCV smoothing instead of one shared level (gl-pl only).
    #[arg(long)]
    per_component: bool,
    /// Stage-2 penalty λ_A for --method adaptive with a fixed --lambda1
    /// (default 0: unpenalized least squares on the stage-1 support).
    #[arg(long)]
    lambda_a: Option<f64>,
    /// Selection-blend penalty λ̃₁ (required for --method mgb).
    #[arg(long)]
    lambda1_tilde: Option<f64>,
    /// Roughness-blend weight λ̃₂ (required for --method mgb).
    #[arg(long)]
    lambda2_tilde: Option<f64>,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Min–max rescale covariates onto [0,1], storing the maps in the model.
    #[arg(long)]
    rescale: bool,
    /// Exit 1 instead of warning when the solver does not converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// One-step group Lasso.
    Gl,
    /// Group Lasso plus unpenalized sieve refit.
    GlSl,
    /// Group Lasso plus Sobolev-penalized refit.
    GlPl,
    /// Two-stage adaptive group Lasso.
    Adaptive,
    /// Double-penalization competitor.
    Mgb,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Experiment config file (JSON, schema version "1").
    #[arg(long)]
    config: PathBuf,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    /// Report format; defaults to json when --out ends in .json, else csv.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Master seed override (flag > config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker-thread override (flag > config).
    #[arg(long)]
    workers: Option<usize>,
    /// Replication-count override (flag > config).
    #[arg(long)]
    replications: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct DiagnoseArgs {
    /// Input CSV file.
    data: PathBuf,
    /// Response column, by header name or 0-based index.
    #[arg(long)]
    response: String,
    /// Group-sparsity levels s for the sparse maximum (comma-separated).
    #[arg(long, value_delimiter = ',')]
    s: Vec<usize>,
    /// Index set T for the sparse minimum (comma-separated group indices).
    #[arg(long, value_delimiter = ',')]
    t: Vec<usize>,
    /// Candidate support T* for the restricted-eigenvalue upper bound.
    #[arg(long, value_delimiter = ',')]
    t_star: Vec<usize>,
    /// Subset-enumeration budget for the exact sparse maximum.
    #[arg(long)]
    budget: Option<u64>,
    /// Random restarts for the restricted-eigenvalue search.
    #[arg(long)]
    restarts: Option<usize>,
    /// Seed for the restricted-eigenvalue restarts.
    #[arg(long)]
    seed: Option<u64>,
    /// Smoothness order ν for the rate quantity δ.
    #[arg(long)]
    nu: Option<usize>,
    /// Min–max rescale covariates onto [0,1] before analysis.
    #[arg(long)]
    rescale: bool,
    /// Emit the full report as JSON instead of human-readable lines.
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct LambdaMaxArgs {
    /// Input CSV file.
    data: PathBuf,
    /// Response column, by header name or 0-based index.
    #[arg(long)]
    response: String,
    /// Min–max rescale covariates onto [0,1] before analysis.
    #[arg(long)]
    rescale: bool,
}

#[derive(clap::Args)]
struct PredictArgs {
    /// Stored model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// CSV file of covariate rows, laid out like the training file.
    #[arg(long)]
    data: PathBuf,
    /// Response column present in the file to skip, by name or 0-based index.
    #[arg(long)]
    response: Option<String>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Display) -> Self {
        CliError {
            code: 2,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl Display) -> Self {
        CliError {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl From<samfit::Error> for CliError {
    fn from(e: samfit::Error) -> Self {
        CliError::runtime(e)
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args, cli.verbose),
        Command::Simulate(args) => cmd_simulate(args, cli.verbose),
        Command::Diagnose(args) => cmd_diagnose(args, cli.verbose),
        Command::LambdaMax(args) => cmd_lambda_max(args),
        Command::Predict(args) => cmd_predict(args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

/// How a tuning value was decided, for --verbose provenance lines.
fn provenance(verbose: bool, name: &str, value: impl Display, source: &str) {
    if verbose {
        println!("option {name} = {value} ({source})");
    }
}

fn load_dataset(
    path: &Path,
    response: &str,
    rescale: bool,
) -> Result<(Dataset, Option<RescaleMap>), CliError> {
    let response = ResponseColumn::parse(response);
    Ok(load_csv(path, response, rescale)?)
}

fn cmd_fit(args: FitArgs, verbose: bool) -> Result<(), CliError> {
    let (data, rescale_map) = load_dataset(&args.data, &args.response, args.rescale)?;
    let first_spec = BasisSpec::first_step_default();
    let second_spec = BasisSpec::second_step_default();
    let needs_selection = matches!(
        args.method,
        MethodArg::Gl | MethodArg::GlSl | MethodArg::GlPl | MethodArg::Adaptive | MethodArg::Mgb
    );
    let basis = make_bspline_basis(
        first_spec.degree,
        first_spec.n_interior,
        first_spec.placement,
        None,
    )?;
    let design = if needs_selection {
        Some(build_centered_design(&data, &basis)?)
    } else {
        None
    };

    let mut warnings: Vec<String> = Vec::new();
    let mut converged = true;
    let mut summary: Vec<String> = Vec::new();

    // Selection step shared by gl, gl-sl, and gl-pl.
    let select = |warnings: &mut Vec<String>,
                  summary: &mut Vec<String>,
                  converged: &mut bool|
     -> Result<(glasso::GlassoFit, &'static str), CliError> {
        let design = design.as_ref().unwrap();
        let (fit, source) = match args.lambda1 {
            Some(l1) => {
                provenance(verbose, "lambda1", l1, "flag");
                (
                    glasso::fit(design, &data.y, l1, glasso::FitOptions::default())?,
                    "flag",
                )
            }
            None => {
                let source = if args.aic { "flag" } else { "default" };
                provenance(verbose, "lambda1", "AIC path", source);
                let (fit, _) = fit_path_aic(design, &data.y, &PathGrid::default())?;
                (fit, "AIC")
            }
        };
        if fit.coefficients.active_set.is_empty() {
            warnings
                .push("selection penalty at or above lambda_max: intercept-only model".to_string());
        }
        *converged = *converged && fit.converged;
        summary.push(format!("lambda1: {} ({source})", fit.lambda1));
        Ok((fit, source))
    };

    let model: AdditiveFit = match args.method {
        MethodArg::Gl => {
            let (fit, _) = select(&mut warnings, &mut summary, &mut converged)?;
            summary.push(format!("objective: {}", fit.objective));
            summary.push(format!("kkt residual: {:.3e}", fit.kkt_residual));
            let mut model = additive_from_groups(
                &basis,
                design.as_ref().unwrap().column_means(),
                &fit.coefficients,
                fit.intercept,
                FitMethod::Gl,
                Some(fit.fitted.clone()),
            );
            model.lambda2 = 0.0;
            model
        }
        MethodArg::GlSl => {
            let (fit, _) = select(&mut warnings, &mut summary, &mut converged)?;
            let refit = fit_sieve(&data, &fit.coefficients.active_set, &first_spec)?;
            if let Some(inf) = &refit.influence {
                summary.push(format!("rss: {}", inf.rss));
                summary.push(format!("effective df: {:.3}", inf.trace_h));
            }
            warnings.extend(refit.warnings.iter().cloned());
            refit
        }
        MethodArg::GlPl => {
            let (fit, _) = select(&mut warnings, &mut summary, &mut converged)?;
            let t_hat = &fit.coefficients.active_set;
            let refit = match args.lambda2 {
                Some(l2) => {
                    provenance(verbose, "lambda2", l2, "flag");
                    summary.push(format!("lambda2: {l2} (flag)"));
                    fit_penalized(&data, t_hat, &second_spec, l2)?
                }
                None => {
                    let source = if args.gcv { "flag" } else { "default" };
                    provenance(verbose, "lambda2", "GCV grid", source);
                    let refit = if args.per_component {
                        fit_penalized_gcv_per_component(
                            &data,
                            t_hat,
                            &second_spec,
                            &GcvGrid::default(),
                            2,
                        )?
                    } else {
                        fit_penalized_gcv(&data, t_hat, &second_spec, &GcvGrid::default())?
                    };
                    summary.push(format!("lambda2: {} (GCV)", refit.lambda2));
                    if let Some(g) = refit.gcv {
                        summary.push(format!("gcv: {g}"));
                    }
                    refit
                }
            };
            if let Some(inf) = &refit.influence {
                summary.push(format!("rss: {}", inf.rss));
                summary.push(format!("effective df: {:.3}", inf.trace_h));
            }
            warnings.extend(refit.warnings.iter().cloned());
            refit
        }
        MethodArg::Adaptive => {
            let design = design.as_ref().unwrap();
            let adaptive = match args.lambda1 {
                Some(l1) => {
                    let lambda_a = args.lambda_a.unwrap_or(0.0);
                    provenance(verbose, "lambda1", l1, "flag");
                    provenance(
                        verbose,
                        "lambda_a",
                        lambda_a,
                        if args.lambda_a.is_some() {
                            "flag"
                        } else {
                            "default"
                        },
                    );
                    fit_adaptive(design, &data.y, l1, lambda_a)?
                }
                None => {
                    let source = if args.aic { "flag" } else { "default" };
                    provenance(verbose, "lambda1", "AIC path (both stages)", source);
                    let (fit, _, _) = fit_adaptive_aic(design, &data.y, &PathGrid::default())?;
                    fit
                }
            };
            if adaptive.stage1_empty {
                warnings.push("stage 1 selected nothing: intercept-only model".to_string());
            }
            converged = converged && adaptive.fit.converged;
            summary.push(format!("stage-1 lambda1: {}", adaptive.lambda1_init));
            summary.push(format!("lambda_a: {}", adaptive.lambda_a));
            summary.push(format!("objective: {}", adaptive.fit.objective));
            summary.push(format!("kkt residual: {:.3e}", adaptive.fit.kkt_residual));
            additive_from_groups(
                &basis,
                design.column_means(),
                &adaptive.fit.coefficients,
                adaptive.fit.intercept,
                FitMethod::Adaptive,
                Some(adaptive.fit.fitted.clone()),
            )
        }
        MethodArg::Mgb => {
            let (Some(l1t), Some(l2t)) = (args.lambda1_tilde, args.lambda2_tilde) else {
                return Err(CliError::usage(
                    "--method mgb requires --lambda1-tilde and --lambda2-tilde",
                ));
            };
            provenance(verbose, "lambda1_tilde", l1t, "flag");
            provenance(verbose, "lambda2_tilde", l2t, "flag");
            let design = design.as_ref().unwrap();
            let penalty = sobolev_penalty_matrix(&basis, first_spec.nu)?;
            let fit = fit_mgb(
                design,
                &penalty,
                &data.y,
                l1t,
                l2t,
                &glasso::FitOptions::default(),
            )?;
            converged = converged && fit.converged;
            summary.push(format!("lambda1_tilde: {l1t} (flag)"));
            summary.push(format!("lambda2_tilde: {l2t} (flag)"));
            summary.push(format!("objective: {}", fit.objective));
            summary.push(format!("kkt residual: {:.3e}", fit.kkt_residual));
            if fit.coefficients.active_set.is_empty() {
                warnings.push("penalty at or above its threshold: intercept-only model".into());
            }
            additive_from_groups(
                &basis,
                design.column_means(),
                &fit.coefficients,
                fit.intercept,
                FitMethod::Mgb,
                Some(fit.fitted.clone()),
            )
        }
    };

    let mut model = model;
    model.rescale = rescale_map;
    save_model(&model, &args.out)?;

    println!("method: {}", method_name(args.method));
    println!("active set: {:?}", model.active_set);
    for line in &summary {
        println!("{line}");
    }
    for warning in &warnings {
        println!("WARN: {warning}");
    }
    if !converged {
        if args.strict {
            return Err(CliError::runtime(
                "solver did not converge within its iteration budget (strict mode)",
            ));
        }
        println!("WARN: solver did not converge within its iteration budget");
    }
    println!("model written to {}", args.out.display());
    Ok(())
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Gl => "gl",
        MethodArg::GlSl => "gl-sl",
        MethodArg::GlPl => "gl-pl",
        MethodArg::Adaptive => "adaptive",
        MethodArg::Mgb => "mgb",
    }
}

fn cmd_simulate(args: SimulateArgs, verbose: bool) -> Result<(), CliError> {
    let mut config = ExperimentConfig::from_json_file(&args.config)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.config.display())))?;
    match args.seed {
        Some(seed) => {
            config.scenario.seed = seed;
            provenance(verbose, "seed", seed, "flag");
        }
        None => provenance(verbose, "seed", config.scenario.seed, "config"),
    }
    match args.workers {
        Some(w) => {
            config.workers = w;
            provenance(verbose, "workers", w, "flag");
        }
        None => provenance(verbose, "workers", config.workers, "config"),
    }
    match args.replications {
        Some(r) => {
            config.replications = r;
            provenance(verbose, "replications", r, "flag");
        }
        None => provenance(verbose, "replications", config.replications, "config"),
    }
    config
        .validate()
        .map_err(|e| CliError::usage(format!("invalid config after overrides: {e}")))?;

    let format = match args.format {
        Some(FormatArg::Csv) => {
            provenance(verbose, "format", "csv", "flag");
            ReportFormat::Csv
        }
        Some(FormatArg::Json) => {
            provenance(verbose, "format", "json", "flag");
            ReportFormat::Json
        }
        None => {
            let by_ext = if args.out.extension().is_some_and(|e| e == "json") {
                ReportFormat::Json
            } else {
                ReportFormat::Csv
            };
            provenance(
                verbose,
                "format",
                if by_ext == ReportFormat::Json {
                    "json"
                } else {
                    "csv"
                },
                "default",
            );
            by_ext
        }
    };

    let report = run_experiment(&config)?;
    write_report(&report, &args.out, format)?;

    println!(
        "{:<18} {:>14} {:>14} {:>14} {:>18}",
        "estimator", "nv", "fp", "fn", "emse"
    );
    let fmt_pair = |mean: f64, sd: f64| format!("{mean:.3} ({sd:.3})");
    for row in &report.estimators {
        let m = &row.metrics;
        println!(
            "{:<18} {:>14} {:>14} {:>14} {:>18}",
            row.estimator.label(),
            fmt_pair(m.nv_mean, m.nv_sd),
            fmt_pair(m.fp_mean, m.fp_sd),
            fmt_pair(m.fn_mean, m.fn_sd),
            fmt_pair(m.emse_mean, m.emse_sd),
        );
    }
    if let Some(cands) = &report.mgb_candidates {
        for cand in cands {
            let m = &cand.metrics;
            println!(
                "{:<18} {:>14} {:>14} {:>14} {:>18}",
                cand.label(),
                fmt_pair(m.nv_mean, m.nv_sd),
                fmt_pair(m.fp_mean, m.fp_sd),
                fmt_pair(m.fn_mean, m.fn_sd),
                fmt_pair(m.emse_mean, m.emse_sd),
            );
        }
        if let Some(ideal) = report.ideal_candidate() {
            let m = &ideal.metrics;
            println!(
                "{:<18} {:>14} {:>14} {:>14} {:>18}",
                "MGB-IDEAL",
                fmt_pair(m.nv_mean, m.nv_sd),
                fmt_pair(m.fp_mean, m.fp_sd),
                fmt_pair(m.fn_mean, m.fn_sd),
                fmt_pair(m.emse_mean, m.emse_sd),
            );
        }
    }
    if !report.failed.is_empty() {
        println!(
            "WARN: {} of {} replications failed and were excluded",
            report.failed.len(),
            config.replications
        );
        for f in &report.failed {
            println!(
                "WARN: replication {} (seed {}): {}",
                f.replication, f.seed, f.message
            );
        }
    }
    println!("report written to {}", args.out.display());
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs, verbose: bool) -> Result<(), CliError> {
    let (data, _) = load_dataset(&args.data, &args.response, args.rescale)?;
    let spec = BasisSpec::first_step_default();
    let basis = make_bspline_basis(spec.degree, spec.n_interior, spec.placement, None)?;
    // Diagnostics run on the population-orthonormalized design, where the
    // well-behavedness and eigenvalue quantities measure the sample rather
    // than the raw spline family's conditioning; the penalty threshold that
    // follows belongs to the estimation problem, which uses the raw blocks.
    let design = build_population_whitened_design(&data, &basis)?;

    let phi_max_sizes = if args.s.is_empty() {
        vec![1, 2]
    } else {
        args.s.clone()
    };
    provenance(
        verbose,
        "s",
        format!("{phi_max_sizes:?}"),
        if args.s.is_empty() { "default" } else { "flag" },
    );
    let request = DiagnosticsRequest {
        phi_max_sizes,
        phi_min_sets: if args.t.is_empty() {
            Vec::new()
        } else {
            vec![args.t.clone()]
        },
        t_star: if args.t_star.is_empty() {
            None
        } else {
            Some(args.t_star.clone())
        },
        budget: args.budget.unwrap_or(DEFAULT_SUBSET_BUDGET),
        restarts: args.restarts.unwrap_or(8),
        seed: args.seed.unwrap_or(0),
        nu: args.nu.unwrap_or(2),
    };
    let report = diagnose_design(&design, &request)?;
    let raw_design = build_centered_design(&data, &basis)?;
    let lam_max = glasso::lambda_max(&raw_design, &data.y)?;

    if args.json {
        let combined = serde_json::json!({
            "diagnostics": report,
            "lambda_max": lam_max,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&combined).expect("report serializes")
        );
        return Ok(());
    }
    println!(
        "omega0 holds: {} (max per-group deviation {:.4})",
        report.omega0_holds,
        report
            .per_group_deviation
            .iter()
            .copied()
            .fold(0.0_f64, f64::max)
    );
    if verbose || report.per_group_deviation.len() <= 20 {
        println!("per-group deviations: {:?}", report.per_group_deviation);
    }
    for (s, v) in &report.phi_max {
        println!("phi_max({s}) = {v:.6}");
    }
    for (t, v) in &report.phi_min {
        println!("phi_min({t:?}) = {v:.6}");
    }
    if let Some(k) = report.kappa_upper_bound {
        println!("kappa upper bound = {k:.6} (local search; not certified)");
    }
    println!(
        "delta(n={}, d={}, nu={}) = {:.6}",
        data.n, data.d, request.nu, report.delta
    );
    println!("lambda_max = {lam_max}");
    Ok(())
}

fn cmd_lambda_max(args: LambdaMaxArgs) -> Result<(), CliError> {
    let (data, _) = load_dataset(&args.data, &args.response, args.rescale)?;
    let spec = BasisSpec::first_step_default();
    let basis = make_bspline_basis(spec.degree, spec.n_interior, spec.placement, None)?;
    let design = build_centered_design(&data, &basis)?;
    let lam_max = glasso::lambda_max(&design, &data.y)?;
    println!("lambda_max = {lam_max}");
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let response = args.response.as_deref().map(ResponseColumn::parse);
    let (z, _) = load_csv_matrix(&args.data, response)?;
    let predictions = predict(&model, &z)?;
    let mut text = String::from("prediction\n");
    for v in predictions.iter() {
        text.push_str(&format!("{v}\n"));
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| {
                CliError::runtime(format!("could not write {}: {e}", path.display()))
            })?;
            println!("predictions written to {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
