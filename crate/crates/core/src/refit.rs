//! Second-step estimation on a selected index set: Sobolev-penalized least
//! squares with GCV smoothing selection, its unpenalized sieve special case,
//! prediction, and JSON model persistence.
//!
//! Given a selected set T̂, each component gets a fresh centered spline
//! expansion and the stacked problem
//!   min_θ (1/2n)‖y − ȳ·1 − Bθ‖² + Σ_j λ₂²·θ_jᵀΩ_jθ_j
//! is solved through its normal equations (BᵀB/n + 2P)θ = Bᵀ(y − ȳ·1)/n with
//! P = blockdiag(λ₂²Ω_j). Setting λ₂ = 0 recovers sieve least squares on the
//! same code path.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::basis::{make_bspline_basis, sobolev_penalty_matrix, Placement, SplineBasis};
use crate::data::{Dataset, RescaleMap};
use crate::error::{Error, Result};
use crate::glasso::GroupCoefficients;
use crate::linalg::{sym_pinv, EIGEN_CLIP};

/// Recipe for building one second-step (or first-step) spline basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub degree: usize,
    pub n_interior: usize,
    pub placement: Placement,
    /// Derivative order of the roughness penalty.
    pub nu: usize,
}

impl BasisSpec {
    /// The selection-step basis: cubic, four evenly spaced interior knots
    /// (seven functions per component).
    pub fn first_step_default() -> Self {
        BasisSpec {
            degree: 3,
            n_interior: 4,
            placement: Placement::Even,
            nu: 2,
        }
    }

    /// The richer refitting basis: cubic, seven interior knots at empirical
    /// quantiles (ten functions per component).
    pub fn second_step_default() -> Self {
        BasisSpec {
            degree: 3,
            n_interior: 7,
            placement: Placement::Quantile,
            nu: 2,
        }
    }

    /// Functions per component this spec produces.
    pub fn dim(&self) -> usize {
        self.degree + self.n_interior
    }

    fn build(&self, column: &[f64]) -> Result<SplineBasis> {
        make_bspline_basis(self.degree, self.n_interior, self.placement, Some(column))
    }
}

/// How a stored additive model was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    /// Sobolev-penalized refit.
    Penalized,
    /// Unpenalized sieve refit.
    Sieve,
    /// One-step group Lasso kept as the final model.
    Gl,
    /// Adaptive group Lasso kept as the final model.
    Adaptive,
    /// Doubly-penalized competitor kept as the final model.
    Mgb,
}

/// One fitted component: its basis, the training column means of the basis
/// values, and the coefficients.
#[derive(Debug, Clone)]
pub struct FitComponent {
    pub basis: SplineBasis,
    pub column_means: DVector<f64>,
    pub coefficients: DVector<f64>,
}

/// Effective degrees of freedom and residual sum of squares of a fit.
#[derive(Debug, Clone, Copy)]
pub struct InfluenceSummary {
    /// tr H including the intercept's one degree of freedom.
    pub trace_h: f64,
    pub rss: f64,
}

/// A fitted additive model.
#[derive(Debug, Clone)]
pub struct AdditiveFit {
    pub intercept: f64,
    /// Per-covariate components, keyed by covariate index.
    pub components: BTreeMap<usize, FitComponent>,
    /// Sorted component keys.
    pub active_set: Vec<usize>,
    /// Shared smoothing level (0 for sieve and selection-step models).
    pub lambda2: f64,
    /// GCV score at the chosen smoothing level, when GCV drove the choice.
    pub gcv: Option<f64>,
    /// Per-component smoothing levels when the per-component mode was used.
    pub lambda2_per_component: Option<BTreeMap<usize, f64>>,
    pub method: FitMethod,
    /// In-sample fitted values (not persisted).
    pub fitted: Option<DVector<f64>>,
    pub influence: Option<InfluenceSummary>,
    /// Total fitted roughness Σ_j θ_jᵀΩ_jθ_j, for second-step fits.
    pub roughness: Option<f64>,
    /// Covariate rescaling maps carried over from data loading, if any.
    pub rescale: Option<RescaleMap>,
    /// Human-readable caveats (rank-deficient solve, skipped grid points, …).
    pub warnings: Vec<String>,
}

impl AdditiveFit {
    fn intercept_only(y_bar: f64, n: usize, method: FitMethod, warning: &str) -> AdditiveFit {
        AdditiveFit {
            intercept: y_bar,
            components: BTreeMap::new(),
            active_set: Vec::new(),
            lambda2: 0.0,
            gcv: None,
            lambda2_per_component: None,
            method,
            fitted: Some(DVector::from_element(n, y_bar)),
            influence: None,
            roughness: None,
            rescale: None,
            warnings: vec![warning.to_string()],
        }
    }
}

/// Assemble an AdditiveFit from selection-step group coefficients, so that
/// one-step estimators can be persisted and used for prediction with the same
/// machinery as the refits.
pub fn additive_from_groups(
    basis: &SplineBasis,
    column_means: &DMatrix<f64>,
    coefficients: &GroupCoefficients,
    intercept: f64,
    method: FitMethod,
    fitted: Option<DVector<f64>>,
) -> AdditiveFit {
    let m = basis.m();
    let mut components = BTreeMap::new();
    for &j in &coefficients.active_set {
        components.insert(
            j,
            FitComponent {
                basis: basis.clone(),
                column_means: DVector::from_fn(m, |k, _| column_means[(j, k)]),
                coefficients: coefficients.group_vec(j),
            },
        );
    }
    AdditiveFit {
        intercept,
        components,
        active_set: coefficients.active_set.clone(),
        lambda2: 0.0,
        gcv: None,
        lambda2_per_component: None,
        method,
        fitted,
        influence: None,
        roughness: None,
        rescale: None,
        warnings: Vec::new(),
    }
}

/// The assembled second-step problem, reused across smoothing levels.
struct SecondStepProblem {
    t_hat: Vec<usize>,
    bases: Vec<SplineBasis>,
    col_means: Vec<DVector<f64>>,
    omegas: Vec<DMatrix<f64>>,
    /// Stacked centered design, n × (|T̂|·m₂).
    b: DMatrix<f64>,
    /// BᵀB/n.
    g: DMatrix<f64>,
    /// Bᵀ(y − ȳ·1)/n.
    rhs: DVector<f64>,
    y0: DVector<f64>,
    y_bar: f64,
    n: usize,
    m: usize,
}

/// One solved smoothing level.
struct SecondStepSolution {
    theta: DVector<f64>,
    fitted: DVector<f64>,
    rss: f64,
    trace_h: f64,
    roughness: f64,
    min_norm: bool,
}

impl SecondStepProblem {
    fn build(dataset: &Dataset, t_hat: &[usize], spec: &BasisSpec) -> Result<Self> {
        let mut t_hat: Vec<usize> = t_hat.to_vec();
        t_hat.sort_unstable();
        t_hat.dedup();
        if let Some(&bad) = t_hat.iter().find(|&&j| j >= dataset.d) {
            return Err(Error::InvalidArgument(format!(
                "selected index {bad} out of range for d={}",
                dataset.d
            )));
        }
        let n = dataset.n;
        let m = spec.dim();
        let y_bar = dataset.y.sum() / n as f64;
        let y0 = dataset.y.map(|v| v - y_bar);
        let mut bases = Vec::with_capacity(t_hat.len());
        let mut col_means = Vec::with_capacity(t_hat.len());
        let mut omegas = Vec::with_capacity(t_hat.len());
        let mut b = DMatrix::zeros(n, t_hat.len() * m);
        let mut col = vec![0.0; n];
        for (slot, &j) in t_hat.iter().enumerate() {
            for i in 0..n {
                col[i] = dataset.z[(i, j)];
            }
            let basis = spec.build(&col)?;
            let mut block = basis.evaluate_column(&col)?;
            let mut means = DVector::zeros(m);
            for k in 0..m {
                let mean = block.column(k).sum() / n as f64;
                means[k] = mean;
                for i in 0..n {
                    block[(i, k)] -= mean;
                }
            }
            let omega = sobolev_penalty_matrix(&basis, spec.nu)?.omega;
            b.view_mut((0, slot * m), (n, m)).copy_from(&block);
            bases.push(basis);
            col_means.push(means);
            omegas.push(omega);
        }
        let g = b.transpose() * &b / n as f64;
        let rhs = b.transpose() * &y0 / n as f64;
        Ok(SecondStepProblem {
            t_hat,
            bases,
            col_means,
            omegas,
            b,
            g,
            rhs,
            y0,
            y_bar,
            n,
            m,
        })
    }

    /// Solve the normal equations at per-component smoothing levels
    /// `lambdas[slot]` (one per selected component, in t_hat order).
    fn solve(&self, lambdas: &[f64]) -> SecondStepSolution {
        let mut k = self.g.clone();
        for (slot, &lam) in lambdas.iter().enumerate() {
            let scale = 2.0 * lam * lam;
            if scale > 0.0 {
                let off = slot * self.m;
                for r in 0..self.m {
                    for c in 0..self.m {
                        k[(off + r, off + c)] += scale * self.omegas[slot][(r, c)];
                    }
                }
            }
        }
        let (theta, kg, min_norm) = match Cholesky::new(k.clone()) {
            Some(ch) => (ch.solve(&self.rhs), ch.solve(&self.g), false),
            None => {
                let kp = sym_pinv(&k, EIGEN_CLIP);
                (&kp * &self.rhs, &kp * &self.g, true)
            }
        };
        let trace_h = 1.0 + kg.trace();
        let signal = &self.b * &theta;
        let fitted = DVector::from_fn(self.n, |i, _| self.y_bar + signal[i]);
        let rss = (&self.y0 - &signal).norm_squared();
        let mut roughness = 0.0;
        for slot in 0..self.t_hat.len() {
            let t = theta.rows(slot * self.m, self.m);
            roughness += (t.transpose() * &self.omegas[slot] * t)[(0, 0)];
        }
        SecondStepSolution {
            theta,
            fitted,
            rss,
            trace_h,
            roughness,
            min_norm,
        }
    }

    fn to_fit(
        &self,
        sol: SecondStepSolution,
        lambda2: f64,
        gcv: Option<f64>,
        per_component: Option<Vec<f64>>,
        method: FitMethod,
        mut warnings: Vec<String>,
    ) -> AdditiveFit {
        if sol.min_norm {
            warnings.push(
                "normal equations were singular; coefficients are the minimum-norm solution"
                    .to_string(),
            );
        }
        let mut components = BTreeMap::new();
        for (slot, &j) in self.t_hat.iter().enumerate() {
            components.insert(
                j,
                FitComponent {
                    basis: self.bases[slot].clone(),
                    column_means: self.col_means[slot].clone(),
                    coefficients: sol.theta.rows(slot * self.m, self.m).into_owned(),
                },
            );
        }
        let lambda2_per_component = per_component.map(|ls| {
            self.t_hat
                .iter()
                .copied()
                .zip(ls)
                .collect::<BTreeMap<usize, f64>>()
        });
        AdditiveFit {
            intercept: self.y_bar,
            components,
            active_set: self.t_hat.clone(),
            lambda2,
            gcv,
            lambda2_per_component,
            method,
            fitted: Some(sol.fitted),
            influence: Some(InfluenceSummary {
                trace_h: sol.trace_h,
                rss: sol.rss,
            }),
            roughness: Some(sol.roughness),
            rescale: None,
            warnings,
        }
    }
}

/// Sobolev-penalized least squares on the selected set at a fixed shared λ₂.
pub fn fit_penalized(
    dataset: &Dataset,
    t_hat: &[usize],
    spec: &BasisSpec,
    lambda2: f64,
) -> Result<AdditiveFit> {
    if !(lambda2 >= 0.0) || !lambda2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda2 must be finite and >= 0, got {lambda2}"
        )));
    }
    if t_hat.is_empty() {
        let y_bar = dataset.y.sum() / dataset.n as f64;
        return Ok(AdditiveFit::intercept_only(
            y_bar,
            dataset.n,
            FitMethod::Penalized,
            "empty selected set: intercept-only model",
        ));
    }
    let problem = SecondStepProblem::build(dataset, t_hat, spec)?;
    let lambdas = vec![lambda2; problem.t_hat.len()];
    let sol = problem.solve(&lambdas);
    Ok(problem.to_fit(sol, lambda2, None, None, FitMethod::Penalized, Vec::new()))
}

/// Unpenalized sieve least squares on the selected set: the λ₂ = 0 case of
/// the penalized refit, tagged as a sieve fit.
pub fn fit_sieve(dataset: &Dataset, t_hat: &[usize], spec: &BasisSpec) -> Result<AdditiveFit> {
    let mut fit = fit_penalized(dataset, t_hat, spec, 0.0)?;
    fit.method = FitMethod::Sieve;
    Ok(fit)
}

/// λ₂ grid for GCV: `n_points` log-spaced multipliers of the rate anchor
/// n^{−ν/(2ν+1)} between `log_range.0` and `log_range.1`.
#[derive(Debug, Clone, Copy)]
pub struct GcvGrid {
    pub n_points: usize,
    pub log_range: (f64, f64),
}

impl Default for GcvGrid {
    fn default() -> Self {
        GcvGrid {
            n_points: 30,
            log_range: (1e-4, 10.0),
        }
    }
}

impl GcvGrid {
    fn validate(&self) -> Result<()> {
        if self.n_points < 1 {
            return Err(Error::InvalidArgument(
                "GCV grid needs at least one point".into(),
            ));
        }
        let (lo, hi) = self.log_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidArgument(format!(
                "GCV grid bounds must satisfy 0 < lo <= hi, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    /// Materialize the λ₂ values for a sample size and penalty order.
    fn levels(&self, n: usize, nu: usize) -> Vec<f64> {
        let anchor = (n as f64).powf(-(nu as f64) / (2.0 * nu as f64 + 1.0));
        if self.n_points == 1 {
            return vec![self.log_range.0 * anchor];
        }
        let (lo, hi) = (self.log_range.0.ln(), self.log_range.1.ln());
        (0..self.n_points)
            .map(|k| anchor * (lo + (hi - lo) * k as f64 / (self.n_points as f64 - 1.0)).exp())
            .collect()
    }
}

/// GCV score n·RSS/(n − tr H)²; `None` when tr H ≥ n (the point is skipped).
fn gcv_score(n: usize, rss: f64, trace_h: f64) -> Option<f64> {
    let denom = n as f64 - trace_h;
    if denom <= 0.0 {
        return None;
    }
    Some(n as f64 * rss / (denom * denom))
}

/// Penalized refit with the shared smoothing level chosen by GCV over a
/// log-spaced grid; ties go to the larger (smoother) λ₂.
pub fn fit_penalized_gcv(
    dataset: &Dataset,
    t_hat: &[usize],
    spec: &BasisSpec,
    grid: &GcvGrid,
) -> Result<AdditiveFit> {
    grid.validate()?;
    if t_hat.is_empty() {
        let y_bar = dataset.y.sum() / dataset.n as f64;
        return Ok(AdditiveFit::intercept_only(
            y_bar,
            dataset.n,
            FitMethod::Penalized,
            "empty selected set: intercept-only model",
        ));
    }
    let problem = SecondStepProblem::build(dataset, t_hat, spec)?;
    let levels = grid.levels(problem.n, spec.nu);
    let mut warnings = Vec::new();
    let mut best: Option<(f64, f64, SecondStepSolution)> = None;
    for &lam in &levels {
        let sol = problem.solve(&vec![lam; problem.t_hat.len()]);
        match gcv_score(problem.n, sol.rss, sol.trace_h) {
            Some(score) => {
                // Ascending grid plus non-strict comparison puts ties on the
                // larger λ₂.
                let better = best.as_ref().map_or(true, |(_, s, _)| score <= *s);
                if better {
                    best = Some((lam, score, sol));
                }
            }
            None => warnings.push(format!(
                "skipped lambda2={lam:.6e}: effective degrees of freedom reached n"
            )),
        }
    }
    let (lam, score, sol) = best.ok_or_else(|| {
        Error::InvalidArgument("every GCV grid point was skipped (tr H >= n throughout)".into())
    })?;
    Ok(problem.to_fit(sol, lam, Some(score), None, FitMethod::Penalized, warnings))
}

/// Penalized refit with per-component smoothing levels: start from the shared
/// GCV choice, then coordinate-descend GCV over each component's λ_{2,j} for
/// `cycles` passes.
pub fn fit_penalized_gcv_per_component(
    dataset: &Dataset,
    t_hat: &[usize],
    spec: &BasisSpec,
    grid: &GcvGrid,
    cycles: usize,
) -> Result<AdditiveFit> {
    grid.validate()?;
    if t_hat.is_empty() {
        let y_bar = dataset.y.sum() / dataset.n as f64;
        return Ok(AdditiveFit::intercept_only(
            y_bar,
            dataset.n,
            FitMethod::Penalized,
            "empty selected set: intercept-only model",
        ));
    }
    let problem = SecondStepProblem::build(dataset, t_hat, spec)?;
    let levels = grid.levels(problem.n, spec.nu);
    let t = problem.t_hat.len();
    let mut warnings = Vec::new();

    // Shared-level start.
    let mut best_shared: Option<(f64, f64)> = None;
    for &lam in &levels {
        let sol = problem.solve(&vec![lam; t]);
        if let Some(score) = gcv_score(problem.n, sol.rss, sol.trace_h) {
            if best_shared.map_or(true, |(_, s)| score <= s) {
                best_shared = Some((lam, score));
            }
        }
    }
    let (shared_lam, mut best_score) = best_shared.ok_or_else(|| {
        Error::InvalidArgument("every GCV grid point was skipped (tr H >= n throughout)".into())
    })?;
    let mut lambdas = vec![shared_lam; t];

    for _ in 0..cycles {
        for slot in 0..t {
            let mut best_here = (lambdas[slot], best_score);
            for &lam in &levels {
                let mut trial = lambdas.clone();
                trial[slot] = lam;
                let sol = problem.solve(&trial);
                if let Some(score) = gcv_score(problem.n, sol.rss, sol.trace_h) {
                    if score <= best_here.1 {
                        best_here = (lam, score);
                    }
                }
            }
            lambdas[slot] = best_here.0;
            best_score = best_here.1;
        }
    }
    let sol = problem.solve(&lambdas);
    if gcv_score(problem.n, sol.rss, sol.trace_h).is_none() {
        warnings.push("final per-component solution has tr H >= n".to_string());
    }
    let all_equal = lambdas.iter().all(|&l| l == lambdas[0]);
    let shared_value = if all_equal { lambdas[0] } else { shared_lam };
    Ok(problem.to_fit(
        sol,
        shared_value,
        Some(best_score),
        Some(lambdas),
        FitMethod::Penalized,
        warnings,
    ))
}

/// Predict at new covariate points. When the fit carries rescale maps the
/// input is taken on the raw scale and mapped first; entries must land in
/// [0,1].
pub fn predict(fit: &AdditiveFit, z_new: &DMatrix<f64>) -> Result<DVector<f64>> {
    let z = match &fit.rescale {
        Some(map) => map.apply(z_new)?,
        None => z_new.clone(),
    };
    if let Some(&max_idx) = fit.active_set.iter().max() {
        if z.ncols() <= max_idx {
            return Err(Error::InvalidArgument(format!(
                "prediction input has {} columns but the model uses covariate {}",
                z.ncols(),
                max_idx
            )));
        }
    }
    // Report out-of-domain entries (at most a handful) before evaluating.
    let mut offenders = Vec::new();
    for &j in &fit.active_set {
        for i in 0..z.nrows() {
            let v = z[(i, j)];
            if !(0.0..=1.0).contains(&v) {
                if offenders.len() < 5 {
                    offenders.push(format!("row {i}, covariate {j}: {v}"));
                }
            }
        }
    }
    if !offenders.is_empty() {
        return Err(Error::OutOfDomain(format!(
            "covariate values outside [0,1]: {}",
            offenders.join("; ")
        )));
    }
    let mut out = DVector::from_element(z.nrows(), fit.intercept);
    for (&j, comp) in &fit.components {
        for i in 0..z.nrows() {
            let psi = crate::basis::eval_basis(&comp.basis, z[(i, j)])?;
            let mut acc = 0.0;
            for k in 0..psi.len() {
                acc += (psi[k] - comp.column_means[k]) * comp.coefficients[k];
            }
            out[i] += acc;
        }
    }
    Ok(out)
}

const MODEL_SCHEMA_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
struct ComponentFile {
    index: usize,
    degree: usize,
    knots: Vec<f64>,
    column_means: Vec<f64>,
    coefficients: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: String,
    intercept: f64,
    lambda2: f64,
    method: FitMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    gcv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda2_per_component: Option<BTreeMap<usize, f64>>,
    components: Vec<ComponentFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rescale: Option<RescaleMap>,
}

/// Write a fit to a JSON model file (schema version "1").
pub fn save_model(fit: &AdditiveFit, path: &Path) -> Result<()> {
    let file = ModelFile {
        version: MODEL_SCHEMA_VERSION.to_string(),
        intercept: fit.intercept,
        lambda2: fit.lambda2,
        method: fit.method,
        gcv: fit.gcv,
        lambda2_per_component: fit.lambda2_per_component.clone(),
        components: fit
            .components
            .iter()
            .map(|(&j, c)| ComponentFile {
                index: j,
                degree: c.basis.degree(),
                knots: c.basis.interior_knots().to_vec(),
                column_means: c.column_means.iter().copied().collect(),
                coefficients: c.coefficients.iter().copied().collect(),
            })
            .collect(),
        rescale: fit.rescale.clone(),
    };
    let out = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(out), &file)
        .map_err(|e| Error::Model(format!("could not serialize model: {e}")))?;
    Ok(())
}

/// Read a JSON model file written by [`save_model`].
pub fn load_model(path: &Path) -> Result<AdditiveFit> {
    let file = std::fs::File::open(path)?;
    let parsed: ModelFile = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::Model(format!("could not parse model file: {e}")))?;
    if parsed.version != MODEL_SCHEMA_VERSION {
        return Err(Error::Model(format!(
            "unsupported model schema version '{}', expected '{MODEL_SCHEMA_VERSION}'",
            parsed.version
        )));
    }
    let mut components = BTreeMap::new();
    let mut active_set = Vec::new();
    for c in parsed.components {
        let basis = SplineBasis::from_parts(c.degree, c.knots)?;
        if c.column_means.len() != basis.m() || c.coefficients.len() != basis.m() {
            return Err(Error::Model(format!(
                "component {} has {} means and {} coefficients for a basis of dimension {}",
                c.index,
                c.column_means.len(),
                c.coefficients.len(),
                basis.m()
            )));
        }
        active_set.push(c.index);
        components.insert(
            c.index,
            FitComponent {
                basis,
                column_means: DVector::from_vec(c.column_means),
                coefficients: DVector::from_vec(c.coefficients),
            },
        );
    }
    active_set.sort_unstable();
    Ok(AdditiveFit {
        intercept: parsed.intercept,
        components,
        active_set,
        lambda2: parsed.lambda2,
        gcv: parsed.gcv,
        lambda2_per_component: parsed.lambda2_per_component,
        method: parsed.method,
        fitted: None,
        influence: None,
        roughness: None,
        rescale: parsed.rescale,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    const NORMAL_EQ_TOL: f64 = 1e-10;
    const PREDICT_TOL: f64 = 1e-10;
    const LINEAR_LIMIT_TOL: f64 = 1e-4;

    fn toy_dataset(n: usize) -> Dataset {
        let d = 3;
        let mut z = DMatrix::zeros(n, d);
        for i in 0..n {
            for j in 0..d {
                z[(i, j)] = ((i as f64 + 0.5) * (j as f64 * 0.37 + 0.61)).fract();
            }
        }
        let y = DVector::from_fn(n, |i, _| {
            let a = z[(i, 0)];
            let b = z[(i, 1)];
            1.5 + (2.0 * std::f64::consts::PI * a).sin()
                + (2.0 * b - 1.0).powi(2)
                + 0.05 * ((i * 7919) % 13) as f64 / 13.0
        });
        Dataset::new(y, z).unwrap()
    }

    /// Rebuild the stacked centered design, penalty blocks, and coefficient
    /// vector of a fit, for checking its optimality conditions from scratch.
    fn reconstruct(
        dataset: &Dataset,
        fit: &AdditiveFit,
        nu: usize,
    ) -> (DMatrix<f64>, Vec<DMatrix<f64>>, DVector<f64>) {
        let n = dataset.n;
        let p: usize = fit
            .active_set
            .iter()
            .map(|j| fit.components[j].basis.m())
            .sum();
        let mut b = DMatrix::zeros(n, p);
        let mut omegas = Vec::new();
        let mut theta = DVector::zeros(p);
        let mut off = 0;
        for &j in &fit.active_set {
            let comp = &fit.components[&j];
            let col: Vec<f64> = (0..n).map(|i| dataset.z[(i, j)]).collect();
            let vals = comp.basis.evaluate_column(&col).unwrap();
            let m = comp.basis.m();
            for k in 0..m {
                for i in 0..n {
                    b[(i, off + k)] = vals[(i, k)] - comp.column_means[k];
                }
                theta[off + k] = comp.coefficients[k];
            }
            omegas.push(sobolev_penalty_matrix(&comp.basis, nu).unwrap().omega);
            off += m;
        }
        (b, omegas, theta)
    }

    fn penalized_objective(
        dataset: &Dataset,
        fit: &AdditiveFit,
        b: &DMatrix<f64>,
        omegas: &[DMatrix<f64>],
        theta: &DVector<f64>,
    ) -> f64 {
        let n = dataset.n as f64;
        let y0 = dataset.y.map(|v| v - fit.intercept);
        let rss = (&y0 - b * theta).norm_squared();
        let mut pen = 0.0;
        let mut off = 0;
        for om in omegas {
            let m = om.nrows();
            let t = theta.rows(off, m);
            pen += fit.lambda2 * fit.lambda2 * (t.transpose() * om * t)[(0, 0)];
            off += m;
        }
        rss / (2.0 * n) + pen
    }

    #[test]
    fn normal_equations_hold_at_solution() {
        let data = toy_dataset(30);
        let spec = BasisSpec {
            degree: 3,
            n_interior: 2,
            placement: Placement::Even,
            nu: 2,
        };
        let fit = fit_penalized(&data, &[0, 1], &spec, 0.1).unwrap();
        let (b, omegas, theta) = reconstruct(&data, &fit, spec.nu);
        let n = data.n as f64;
        let y0 = data.y.map(|v| v - fit.intercept);
        let g = b.transpose() * &b / n;
        let rhs = b.transpose() * &y0 / n;
        let mut k = g;
        let mut off = 0;
        for om in &omegas {
            let m = om.nrows();
            for r in 0..m {
                for c in 0..m {
                    k[(off + r, off + c)] += 2.0 * fit.lambda2 * fit.lambda2 * om[(r, c)];
                }
            }
            off += m;
        }
        let resid = &k * &theta - rhs;
        assert!(
            resid.amax() <= NORMAL_EQ_TOL,
            "normal-equation residual {}",
            resid.amax()
        );
    }

    #[test]
    fn solution_beats_random_perturbations() {
        let data = toy_dataset(40);
        let spec = BasisSpec {
            degree: 3,
            n_interior: 2,
            placement: Placement::Even,
            nu: 2,
        };
        let fit = fit_penalized(&data, &[0, 1], &spec, 0.05).unwrap();
        let (b, omegas, theta) = reconstruct(&data, &fit, spec.nu);
        let base = penalized_objective(&data, &fit, &b, &omegas, &theta);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let delta =
                DVector::from_fn(theta.len(), |_, _| 1e-4 * (rng.random::<f64>() * 2.0 - 1.0));
            let perturbed = &theta + delta;
            let obj = penalized_objective(&data, &fit, &b, &omegas, &perturbed);
            assert!(
                obj >= base - 1e-14,
                "perturbation improved objective: {obj} < {base}"
            );
        }
    }

    #[test]
    fn sieve_is_penalized_at_zero() {
        let data = toy_dataset(50);
        let spec = BasisSpec::first_step_default();
        let sieve = fit_sieve(&data, &[0, 1], &spec).unwrap();
        let pen = fit_penalized(&data, &[0, 1], &spec, 0.0).unwrap();
        assert_eq!(sieve.method, FitMethod::Sieve);
        assert_eq!(pen.method, FitMethod::Penalized);
        for &j in &sieve.active_set {
            let a = &sieve.components[&j].coefficients;
            let b = &pen.components[&j].coefficients;
            for k in 0..a.len() {
                assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
        let fa = sieve.fitted.as_ref().unwrap();
        let fb = pen.fitted.as_ref().unwrap();
        for i in 0..data.n {
            assert_eq!(fa[i].to_bits(), fb[i].to_bits());
        }
    }

    #[test]
    fn huge_lambda2_collapses_to_linear_regression() {
        let data = toy_dataset(60);
        let spec = BasisSpec {
            degree: 3,
            n_interior: 3,
            placement: Placement::Even,
            nu: 2,
        };
        // Large enough that the remaining curvature is far below the check
        // tolerance, small enough that the normal equations stay well
        // conditioned; pushing higher only adds round-off, not fidelity.
        let fit = fit_penalized(&data, &[0, 1], &spec, 1e3).unwrap();
        // Explicit least squares of y on {1, z0, z1}.
        let n = data.n;
        let mut x = DMatrix::zeros(n, 3);
        for i in 0..n {
            x[(i, 0)] = 1.0;
            x[(i, 1)] = data.z[(i, 0)];
            x[(i, 2)] = data.z[(i, 1)];
        }
        let coef = x.clone().svd(true, true).solve(&data.y, 1e-12).unwrap();
        let lin_fitted = x * coef;
        let fitted = fit.fitted.as_ref().unwrap();
        for i in 0..n {
            assert!(
                (fitted[i] - lin_fitted[i]).abs() <= LINEAR_LIMIT_TOL,
                "row {i}: {} vs {}",
                fitted[i],
                lin_fitted[i]
            );
        }
        assert!(fit.roughness.unwrap() < 1e-6);
    }

    #[test]
    fn empty_selection_gives_intercept_only() {
        let data = toy_dataset(25);
        let spec = BasisSpec::second_step_default();
        let fit = fit_penalized(&data, &[], &spec, 0.3).unwrap();
        let y_bar = data.y.sum() / data.n as f64;
        assert!(fit.components.is_empty());
        assert!((fit.intercept - y_bar).abs() < 1e-12);
        assert!(!fit.warnings.is_empty());
        let fitted = fit.fitted.as_ref().unwrap();
        for i in 0..data.n {
            assert!((fitted[i] - y_bar).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_selection_is_rejected() {
        let data = toy_dataset(25);
        let spec = BasisSpec::second_step_default();
        let err = fit_penalized(&data, &[0, 7], &spec, 0.3).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn duplicate_and_unsorted_selection_is_normalized() {
        let data = toy_dataset(40);
        let spec = BasisSpec::first_step_default();
        let fit = fit_penalized(&data, &[1, 0, 1], &spec, 0.1).unwrap();
        assert_eq!(fit.active_set, vec![0, 1]);
    }

    #[test]
    fn predict_reproduces_training_fit() {
        let data = toy_dataset(45);
        let spec = BasisSpec::second_step_default();
        let fit = fit_penalized(&data, &[0, 1], &spec, 0.2).unwrap();
        let pred = predict(&fit, &data.z).unwrap();
        let fitted = fit.fitted.as_ref().unwrap();
        for i in 0..data.n {
            assert!((pred[i] - fitted[i]).abs() <= PREDICT_TOL);
        }
    }

    #[test]
    fn predict_rejects_out_of_domain_points() {
        let data = toy_dataset(30);
        let spec = BasisSpec::first_step_default();
        let fit = fit_penalized(&data, &[0], &spec, 0.1).unwrap();
        let mut z = data.z.clone();
        z[(3, 0)] = 1.5;
        let err = predict(&fit, &z).unwrap_err();
        match err {
            Error::OutOfDomain(msg) => {
                assert!(msg.contains("row 3"), "message was: {msg}");
                assert!(msg.contains("1.5"), "message was: {msg}");
            }
            other => panic!("expected OutOfDomain, got {other:?}"),
        }
    }

    #[test]
    fn predict_intercept_only_returns_mean() {
        let data = toy_dataset(20);
        let spec = BasisSpec::first_step_default();
        let fit = fit_penalized(&data, &[], &spec, 0.0).unwrap();
        let pred = predict(&fit, &data.z).unwrap();
        let y_bar = data.y.sum() / data.n as f64;
        for i in 0..data.n {
            assert!((pred[i] - y_bar).abs() < 1e-12);
        }
    }

    #[test]
    fn component_contributions_are_centered_in_sample() {
        let data = toy_dataset(50);
        let spec = BasisSpec::second_step_default();
        let fit = fit_penalized(&data, &[0, 1, 2], &spec, 0.05).unwrap();
        for &j in &fit.active_set {
            let comp = &fit.components[&j];
            let mut total = 0.0;
            for i in 0..data.n {
                let psi = crate::basis::eval_basis(&comp.basis, data.z[(i, j)]).unwrap();
                for k in 0..psi.len() {
                    total += (psi[k] - comp.column_means[k]) * comp.coefficients[k];
                }
            }
            assert!(
                total.abs() <= 1e-8 * data.n as f64,
                "component {j} in-sample sum {total}"
            );
        }
    }

    #[test]
    fn model_file_round_trips() {
        let data = toy_dataset(40);
        let spec = BasisSpec::second_step_default();
        let fit = fit_penalized_gcv(&data, &[0, 1], &spec, &GcvGrid::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&fit, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.active_set, fit.active_set);
        assert_eq!(loaded.method, fit.method);
        assert_eq!(loaded.lambda2.to_bits(), fit.lambda2.to_bits());
        assert_eq!(loaded.gcv.unwrap().to_bits(), fit.gcv.unwrap().to_bits());
        let pred_orig = predict(&fit, &data.z).unwrap();
        let pred_loaded = predict(&loaded, &data.z).unwrap();
        for i in 0..data.n {
            assert_eq!(pred_orig[i].to_bits(), pred_loaded[i].to_bits());
        }
    }

    #[test]
    fn model_file_version_is_checked() {
        let data = toy_dataset(20);
        let spec = BasisSpec::first_step_default();
        let fit = fit_penalized(&data, &[0], &spec, 0.1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&fit, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let bumped = text.replacen("\"version\": \"1\"", "\"version\": \"2\"", 1);
        assert_ne!(text, bumped);
        std::fs::write(&path, bumped).unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), Error::Model(_)));
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), Error::Model(_)));
    }

    #[test]
    fn single_point_gcv_grid_matches_fixed_fit() {
        let data = toy_dataset(35);
        let spec = BasisSpec::first_step_default();
        let grid = GcvGrid {
            n_points: 1,
            log_range: (0.5, 0.5),
        };
        let via_gcv = fit_penalized_gcv(&data, &[0, 1], &spec, &grid).unwrap();
        let anchor = (data.n as f64).powf(-(spec.nu as f64) / (2.0 * spec.nu as f64 + 1.0));
        let fixed = fit_penalized(&data, &[0, 1], &spec, 0.5 * anchor).unwrap();
        assert_eq!(via_gcv.lambda2.to_bits(), fixed.lambda2.to_bits());
        for &j in &via_gcv.active_set {
            let a = &via_gcv.components[&j].coefficients;
            let b = &fixed.components[&j].coefficients;
            for k in 0..a.len() {
                assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
        assert!(via_gcv.gcv.is_some());
    }

    #[test]
    fn roughness_decreases_along_smoothing_grid() {
        let data = toy_dataset(60);
        let spec = BasisSpec::second_step_default();
        let mut last = f64::INFINITY;
        for &lam in &[0.0, 0.01, 0.1, 1.0, 10.0] {
            let fit = fit_penalized(&data, &[0, 1], &spec, lam).unwrap();
            let rough = fit.roughness.unwrap();
            assert!(
                rough <= last + 1e-10,
                "roughness rose from {last} to {rough} at lambda2={lam}"
            );
            last = rough;
        }
    }

    #[test]
    fn gcv_fit_has_valid_influence_summary() {
        let data = toy_dataset(55);
        let spec = BasisSpec::second_step_default();
        let fit = fit_penalized_gcv(&data, &[0, 1], &spec, &GcvGrid::default()).unwrap();
        let inf = fit.influence.unwrap();
        assert!(inf.trace_h >= 1.0 - 1e-12);
        assert!(inf.trace_h <= data.n as f64);
        assert!(inf.rss >= 0.0);
        assert!(fit.gcv.unwrap().is_finite());
    }

    #[test]
    fn per_component_mode_does_not_worsen_gcv() {
        let data = toy_dataset(70);
        let spec = BasisSpec::second_step_default();
        let grid = GcvGrid {
            n_points: 12,
            log_range: (1e-3, 10.0),
        };
        let shared = fit_penalized_gcv(&data, &[0, 1], &spec, &grid).unwrap();
        let per = fit_penalized_gcv_per_component(&data, &[0, 1], &spec, &grid, 2).unwrap();
        assert!(per.gcv.unwrap() <= shared.gcv.unwrap() + 1e-12);
        assert_eq!(per.lambda2_per_component.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn group_conversion_preserves_predictions() {
        use crate::data::build_centered_design;
        let data = toy_dataset(40);
        let basis = make_bspline_basis(3, 2, Placement::Even, None).unwrap();
        let design = build_centered_design(&data, &basis).unwrap();
        let fit = crate::glasso::fit(&design, &data.y, 0.01, crate::glasso::FitOptions::default())
            .unwrap();
        let additive = additive_from_groups(
            &basis,
            design.column_means(),
            &fit.coefficients,
            fit.intercept,
            FitMethod::Gl,
            Some(fit.fitted.clone()),
        );
        let pred = predict(&additive, &data.z).unwrap();
        for i in 0..data.n {
            assert!(
                (pred[i] - fit.fitted[i]).abs() <= 1e-8,
                "row {i}: {} vs {}",
                pred[i],
                fit.fitted[i]
            );
        }
    }
}
