//! First-step group-penalized selection: the group-Lasso solver with
//! within-group orthonormalization, its penalty path with AIC selection, and
//! the two-stage adaptive variant.
//!
//! The problem solved is
//!   min_β (1/2n)‖y − ȳ·1 − Σ_j X̃_j β_j‖² + (√m·λ₁/n)·Σ_j ‖Σ̂_j^{1/2} β_j‖,
//! with the intercept concentrated out as ĉ = ȳ. In the transformed
//! coordinates γ_j = Σ̂_j^{1/2} β_j the per-group Gram becomes an orthogonal
//! projector, so every block update of the coordinate-descent engine is an
//! exact group soft-threshold; β is recovered through the generalized inverse,
//! which zeroes any component in the null space of a rank-deficient Σ̂_j
//! (the minimum-norm convention).

use nalgebra::{DMatrix, DVector};

use crate::data::CenteredDesign;
use crate::error::{Error, Result};
use crate::groupcd::{self, GroupCdOptions, GroupCdResult};

/// Blockwise coefficient vector with exact group sparsity.
#[derive(Debug, Clone)]
pub struct GroupCoefficients {
    /// Concatenated coefficients, d groups of m entries each.
    pub beta: DVector<f64>,
    /// Group size m.
    pub m: usize,
    /// Groups with nonzero Euclidean norm, ascending.
    pub active_set: Vec<usize>,
}

impl GroupCoefficients {
    /// Assemble from per-group vectors; the active set is derived, so the
    /// sparsity invariant holds by construction.
    pub fn from_groups(groups: &[DVector<f64>]) -> Self {
        let m = groups.first().map_or(0, |g| g.len());
        let mut beta = DVector::zeros(m * groups.len());
        let mut active_set = Vec::new();
        for (j, g) in groups.iter().enumerate() {
            if g.iter().any(|&v| v != 0.0) {
                active_set.push(j);
                beta.rows_mut(j * m, m).copy_from(g);
            }
        }
        GroupCoefficients {
            beta,
            m,
            active_set,
        }
    }

    /// Number of groups.
    pub fn n_groups(&self) -> usize {
        if self.m == 0 {
            0
        } else {
            self.beta.len() / self.m
        }
    }

    /// Coefficient slice of group j.
    pub fn group(&self, j: usize) -> &[f64] {
        &self.beta.as_slice()[j * self.m..(j + 1) * self.m]
    }

    /// Group j as an owned vector.
    pub fn group_vec(&self, j: usize) -> DVector<f64> {
        DVector::from_column_slice(self.group(j))
    }
}

/// A fitted group Lasso at one penalty level.
#[derive(Debug, Clone)]
pub struct GlassoFit {
    pub coefficients: GroupCoefficients,
    /// Concentrated intercept ĉ = ȳ.
    pub intercept: f64,
    pub lambda1: f64,
    /// Penalized objective at the solution.
    pub objective: f64,
    /// Sweeps used by the solver.
    pub n_iterations: usize,
    /// Stationarity violation at the returned solution.
    pub kkt_residual: f64,
    /// In-sample fitted values including the intercept.
    pub fitted: DVector<f64>,
    /// False when the sweep budget ran out before the tolerance was met.
    pub converged: bool,
}

/// Options for a single fit.
#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Relative objective decrease per sweep below which iteration stops
    /// (solver default 1e-7 when unset).
    pub tol: Option<f64>,
    /// Sweep budget (solver default 10,000 when unset).
    pub max_iter: Option<usize>,
    /// Previous coefficients to start from.
    pub warm_start: Option<GroupCoefficients>,
}

impl FitOptions {
    pub(crate) fn engine(&self) -> GroupCdOptions {
        let base = GroupCdOptions::default();
        GroupCdOptions {
            tol: self.tol.unwrap_or(base.tol),
            max_iter: self.max_iter.unwrap_or(base.max_iter),
        }
    }
}

/// Penalty grid for path fitting: geometric from λ_max down to ratio·λ_max.
#[derive(Debug, Clone, Copy)]
pub struct PathGrid {
    pub n_lambda: usize,
    pub ratio: f64,
}

impl Default for PathGrid {
    fn default() -> Self {
        PathGrid {
            n_lambda: 50,
            ratio: 0.01,
        }
    }
}

/// One evaluated point of a penalty path.
#[derive(Debug, Clone, Copy)]
pub struct PathPoint {
    pub lambda1: f64,
    pub n_active: usize,
    pub aic: f64,
    pub converged: bool,
}

/// Result of the two-stage adaptive fit.
#[derive(Debug, Clone)]
pub struct AdaptiveFit {
    /// The stage-2 fit; `lambda1` holds the stage-2 level λ_A.
    pub fit: GlassoFit,
    /// Groups selected by the identity-normalized first stage.
    pub stage1_active: Vec<usize>,
    /// Per-group weights 1/‖β̂⁰_j‖ (infinite for unselected groups).
    pub weights: Vec<f64>,
    /// True when stage 1 selected nothing and the result is intercept-only.
    pub stage1_empty: bool,
    pub lambda1_init: f64,
    pub lambda_a: f64,
}

fn center(y: &DVector<f64>) -> (DVector<f64>, f64) {
    let y_bar = y.sum() / y.len() as f64;
    (y.map(|v| v - y_bar), y_bar)
}

fn check_y(design: &CenteredDesign, y: &DVector<f64>) -> Result<()> {
    if y.len() != design.n() {
        return Err(Error::InvalidArgument(format!(
            "response length {} does not match design rows {}",
            y.len(),
            design.n()
        )));
    }
    Ok(())
}

/// Smallest λ₁ at which the all-zero solution is optimal:
/// max_j (n/√m)·‖(1/n)·x̌_jᵀ(y − ȳ)‖.
pub fn lambda_max(design: &CenteredDesign, y: &DVector<f64>) -> Result<f64> {
    check_y(design, y)?;
    let (y0, _) = center(y);
    let n = design.n() as f64;
    let m = design.m() as f64;
    let mut worst: f64 = 0.0;
    for j in 0..design.d() {
        let score = design.whitened(j).transpose() * &y0 / n;
        worst = worst.max(score.norm());
    }
    // Nudged up by a few ulps: converting back and forth between the two
    // penalty normalizations is not exact in floating point, and the value
    // must stay on the all-zero side of the threshold when fitted at.
    Ok(worst * n / m.sqrt() * (1.0 + 4.0 * f64::EPSILON))
}

/// Fit the group Lasso at a single penalty level.
pub fn fit(
    design: &CenteredDesign,
    y: &DVector<f64>,
    lambda1: f64,
    opts: FitOptions,
) -> Result<GlassoFit> {
    check_y(design, y)?;
    if !(lambda1 >= 0.0) || !lambda1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda1 must be finite and >= 0, got {lambda1}"
        )));
    }
    let d = design.d();
    let n = design.n();
    let kappa = vec![lambda_tilde(design, lambda1); d];
    let (y0, y_bar) = center(y);
    let warm: Option<Vec<DVector<f64>>> = opts.warm_start.as_ref().map(|gc| {
        (0..d)
            .map(|j| design.gram_sqrt(j) * gc.group_vec(j))
            .collect()
    });
    let engine_opts = opts.engine();
    let res = groupcd::solve(
        design.whitened_blocks(),
        &kappa,
        &y0,
        warm.as_deref(),
        &engine_opts,
    );
    Ok(finish_whitened_fit(
        design, res, &kappa, &y0, y_bar, lambda1, n,
    ))
}

/// Per-group penalty multiplier λ̃ = √m·λ₁/n in the transformed coordinates.
fn lambda_tilde(design: &CenteredDesign, lambda1: f64) -> f64 {
    (design.m() as f64).sqrt() * lambda1 / design.n() as f64
}

/// Convert an engine solution in whitened coordinates into a GlassoFit.
/// `y0` is the centered response the engine ran against.
fn finish_whitened_fit(
    design: &CenteredDesign,
    res: GroupCdResult,
    kappa: &[f64],
    y0: &DVector<f64>,
    y_bar: f64,
    lambda1: f64,
    n: usize,
) -> GlassoFit {
    let kkt = groupcd::kkt_residual(
        design.whitened_blocks(),
        kappa,
        &res.gamma,
        &res.residual,
        n,
    );
    let betas: Vec<DVector<f64>> = res
        .gamma
        .iter()
        .enumerate()
        .map(|(j, g)| {
            if g.iter().all(|&v| v == 0.0) {
                DVector::zeros(design.m())
            } else {
                design.gram_sqrt_pinv(j) * g
            }
        })
        .collect();
    // fitted = ȳ + (y0 − residual), the signal part plus the intercept.
    let fitted = DVector::from_fn(n, |i, _| y_bar + y0[i] - res.residual[i]);
    GlassoFit {
        coefficients: GroupCoefficients::from_groups(&betas),
        intercept: y_bar,
        lambda1,
        objective: res.objective,
        n_iterations: res.n_iterations,
        kkt_residual: kkt,
        fitted,
        converged: res.converged,
    }
}

/// Stationarity violation of an existing fit, recomputed from scratch.
pub fn kkt_residual(design: &CenteredDesign, y: &DVector<f64>, fit: &GlassoFit) -> Result<f64> {
    check_y(design, y)?;
    let n = design.n();
    let d = design.d();
    let (y0, _) = center(y);
    let mut residual = y0;
    let mut gamma = Vec::with_capacity(d);
    for j in 0..d {
        let beta_j = fit.coefficients.group_vec(j);
        if beta_j.iter().any(|&v| v != 0.0) {
            residual -= design.block(j) * &beta_j;
            gamma.push(design.gram_sqrt(j) * beta_j);
        } else {
            gamma.push(DVector::zeros(design.m()));
        }
    }
    let kappa = vec![lambda_tilde(design, fit.lambda1); d];
    Ok(groupcd::kkt_residual(
        design.whitened_blocks(),
        &kappa,
        &gamma,
        &residual,
        n,
    ))
}

/// Penalized objective of arbitrary coefficients in the original β-form.
pub fn objective_value(
    design: &CenteredDesign,
    y: &DVector<f64>,
    coefficients: &GroupCoefficients,
    lambda1: f64,
) -> f64 {
    let n = design.n();
    let (y0, _) = center(y);
    let mut residual = y0;
    let mut penalty = 0.0;
    for j in 0..design.d() {
        let beta_j = coefficients.group_vec(j);
        if beta_j.iter().any(|&v| v != 0.0) {
            residual -= design.block(j) * &beta_j;
            penalty += (design.gram_sqrt(j) * beta_j).norm();
        }
    }
    residual.norm_squared() / (2.0 * n as f64) + lambda_tilde(design, lambda1) * penalty
}

fn validate_grid(grid: &PathGrid) -> Result<()> {
    if grid.n_lambda < 1 {
        return Err(Error::InvalidArgument(
            "path needs at least one grid point".into(),
        ));
    }
    if !(grid.ratio > 0.0 && grid.ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "path ratio must lie in (0,1), got {}",
            grid.ratio
        )));
    }
    Ok(())
}

fn geometric_grid(top: f64, grid: &PathGrid) -> Vec<f64> {
    if grid.n_lambda == 1 {
        return vec![top];
    }
    (0..grid.n_lambda)
        .map(|k| top * grid.ratio.powf(k as f64 / (grid.n_lambda as f64 - 1.0)))
        .collect()
}

/// AIC with the per-group dimension m as the parameter count per selected
/// group: n·log(RSS/n) + 2·m·|active|.
fn aic(n: usize, m: usize, rss: f64, n_active: usize) -> f64 {
    n as f64 * (rss / n as f64).max(1e-300).ln() + 2.0 * (m * n_active) as f64
}

/// Shared warm-started descent over a penalty grid with AIC tracking; the
/// caller interprets the winning engine solution. Ties prefer the earlier
/// (larger-penalty, sparser) grid point.
fn engine_aic_path(
    blocks: &[DMatrix<f64>],
    y0: &DVector<f64>,
    n: usize,
    m: usize,
    lambdas: &[f64],
    kappa_of: &dyn Fn(f64) -> Vec<f64>,
    opts: &GroupCdOptions,
) -> (usize, GroupCdResult, Vec<PathPoint>) {
    let mut path = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Vec<DVector<f64>>> = None;
    let mut best: Option<(usize, f64, GroupCdResult)> = None;
    for (k, &lam) in lambdas.iter().enumerate() {
        let kappa = kappa_of(lam);
        let res = groupcd::solve(blocks, &kappa, y0, warm.as_deref(), opts);
        let n_active = res
            .gamma
            .iter()
            .filter(|g| g.iter().any(|&v| v != 0.0))
            .count();
        let rss = res.residual.norm_squared();
        let a = aic(n, m, rss, n_active);
        path.push(PathPoint {
            lambda1: lam,
            n_active,
            aic: a,
            converged: res.converged,
        });
        warm = Some(res.gamma.clone());
        let better = match &best {
            None => true,
            Some((_, best_aic, _)) => a < *best_aic,
        };
        if better {
            best = Some((k, a, res));
        }
    }
    let (k, _, res) = best.expect("at least one grid point");
    (k, res, path)
}

/// Fit along a geometric penalty grid from λ_max and select by AIC.
///
/// Returns the AIC-minimizing fit and the whole path summary; AIC ties go to
/// the larger (sparser) penalty.
pub fn fit_path_aic(
    design: &CenteredDesign,
    y: &DVector<f64>,
    grid: &PathGrid,
) -> Result<(GlassoFit, Vec<PathPoint>)> {
    check_y(design, y)?;
    validate_grid(grid)?;
    let n = design.n();
    let m = design.m();
    let top = lambda_max(design, y)?;
    let (y0, y_bar) = center(y);
    if top <= 0.0 {
        // Degenerate response: the all-zero fit at λ₁ = 0 is already optimal.
        let fit = fit(design, y, 0.0, FitOptions::default())?;
        let point = PathPoint {
            lambda1: 0.0,
            n_active: fit.coefficients.active_set.len(),
            aic: aic(n, m, y0.norm_squared(), 0),
            converged: fit.converged,
        };
        return Ok((fit, vec![point]));
    }
    let lambdas = geometric_grid(top, grid);
    let opts = GroupCdOptions::default();
    let kappa_of = |lam: f64| vec![(m as f64).sqrt() * lam / n as f64; design.d()];
    let (k, res, path) = engine_aic_path(
        design.whitened_blocks(),
        &y0,
        n,
        m,
        &lambdas,
        &kappa_of,
        &opts,
    );
    let kappa = kappa_of(lambdas[k]);
    Ok((
        finish_whitened_fit(design, res, &kappa, &y0, y_bar, lambdas[k], n),
        path,
    ))
}

/// Two-stage adaptive fit at explicit penalty levels.
///
/// Stage 1 solves the selection problem with the within-group normalization
/// replaced by the identity; stage 2 re-solves on the stage-1 support with
/// per-group penalties λ_A·w_j‖β_j‖, w_j = 1/‖β̂⁰_j‖. Groups outside the
/// stage-1 support are exactly zero in the result.
pub fn fit_adaptive(
    design: &CenteredDesign,
    y: &DVector<f64>,
    lambda1_init: f64,
    lambda_a: f64,
) -> Result<AdaptiveFit> {
    check_y(design, y)?;
    if !(lambda1_init >= 0.0) || !(lambda_a >= 0.0) {
        return Err(Error::InvalidArgument(
            "adaptive penalty levels must be >= 0".into(),
        ));
    }
    let (y0, y_bar) = center(y);
    let opts = GroupCdOptions::default();
    let kappa1 = vec![lambda_tilde(design, lambda1_init); design.d()];
    let stage1 = groupcd::solve(design.centered_blocks(), &kappa1, &y0, None, &opts);
    finish_adaptive(design, &y0, y_bar, stage1, lambda1_init, lambda_a, &opts)
}

/// Complete the adaptive fit from a finished stage-1 solution.
fn finish_adaptive(
    design: &CenteredDesign,
    y0: &DVector<f64>,
    y_bar: f64,
    stage1: GroupCdResult,
    lambda1_init: f64,
    lambda_a: f64,
    opts: &GroupCdOptions,
) -> Result<AdaptiveFit> {
    let n = design.n();
    let d = design.d();
    let m = design.m();
    let stage1_active: Vec<usize> = (0..d)
        .filter(|&j| stage1.gamma[j].iter().any(|&v| v != 0.0))
        .collect();
    let weights: Vec<f64> = (0..d)
        .map(|j| {
            let norm = stage1.gamma[j].norm();
            if norm > 0.0 {
                1.0 / norm
            } else {
                f64::INFINITY
            }
        })
        .collect();
    if stage1_active.is_empty() {
        let zeros: Vec<DVector<f64>> = (0..d).map(|_| DVector::zeros(m)).collect();
        let fit = GlassoFit {
            coefficients: GroupCoefficients::from_groups(&zeros),
            intercept: y_bar,
            lambda1: lambda_a,
            objective: y0.norm_squared() / (2.0 * n as f64),
            n_iterations: stage1.n_iterations,
            kkt_residual: 0.0,
            fitted: DVector::from_element(n, y_bar),
            converged: stage1.converged,
        };
        return Ok(AdaptiveFit {
            fit,
            stage1_active,
            weights,
            stage1_empty: true,
            lambda1_init,
            lambda_a,
        });
    }
    let sub_blocks: Vec<DMatrix<f64>> = stage1_active
        .iter()
        .map(|&j| design.block(j).clone())
        .collect();
    let kappa2: Vec<f64> = stage1_active
        .iter()
        .map(|&j| lambda_a * weights[j])
        .collect();
    let stage2 = groupcd::solve(&sub_blocks, &kappa2, y0, None, opts);
    let kkt = groupcd::kkt_residual(&sub_blocks, &kappa2, &stage2.gamma, &stage2.residual, n);
    let mut groups: Vec<DVector<f64>> = (0..d).map(|_| DVector::zeros(m)).collect();
    for (slot, &j) in stage1_active.iter().enumerate() {
        groups[j] = stage2.gamma[slot].clone();
    }
    let mut fitted = DVector::from_element(n, y_bar);
    for i in 0..n {
        fitted[i] += y0[i] - stage2.residual[i];
    }
    let fit = GlassoFit {
        coefficients: GroupCoefficients::from_groups(&groups),
        intercept: y_bar,
        lambda1: lambda_a,
        objective: stage2.objective,
        n_iterations: stage1.n_iterations + stage2.n_iterations,
        kkt_residual: kkt,
        fitted,
        converged: stage1.converged && stage2.converged,
    };
    Ok(AdaptiveFit {
        fit,
        stage1_active,
        weights,
        stage1_empty: false,
        lambda1_init,
        lambda_a,
    })
}

/// Adaptive fit with both levels chosen by AIC: stage 1 over the
/// identity-normalized penalty path, stage 2 over a geometric λ_A grid from
/// the level at which every weighted group is zero.
pub fn fit_adaptive_aic(
    design: &CenteredDesign,
    y: &DVector<f64>,
    grid: &PathGrid,
) -> Result<(AdaptiveFit, Vec<PathPoint>, Vec<PathPoint>)> {
    check_y(design, y)?;
    validate_grid(grid)?;
    let n = design.n();
    let d = design.d();
    let m = design.m();
    let (y0, y_bar) = center(y);
    let opts = GroupCdOptions::default();

    // Stage 1: identity-normalized path. The zero threshold there is
    // max_j ‖(1/n)X̃_jᵀy0‖ in engine units, i.e. (n/√m)·that in λ₁ units.
    let mut top1: f64 = 0.0;
    for j in 0..d {
        let score = design.block(j).transpose() * &y0 / n as f64;
        top1 = top1.max(score.norm());
    }
    let top1 = top1 * n as f64 / (m as f64).sqrt();
    if top1 <= 0.0 {
        let fit = fit_adaptive(design, y, 0.0, 0.0)?;
        return Ok((fit, Vec::new(), Vec::new()));
    }
    let lambdas1 = geometric_grid(top1, grid);
    let kappa_of1 = |lam: f64| vec![(m as f64).sqrt() * lam / n as f64; d];
    let (k1, stage1, path1) = engine_aic_path(
        design.centered_blocks(),
        &y0,
        n,
        m,
        &lambdas1,
        &kappa_of1,
        &opts,
    );
    let lambda1_init = lambdas1[k1];

    let stage1_active: Vec<usize> = (0..d)
        .filter(|&j| stage1.gamma[j].iter().any(|&v| v != 0.0))
        .collect();
    if stage1_active.is_empty() {
        let adaptive = finish_adaptive(design, &y0, y_bar, stage1, lambda1_init, 0.0, &opts)?;
        return Ok((adaptive, path1, Vec::new()));
    }
    let weights: Vec<f64> = stage1_active
        .iter()
        .map(|&j| 1.0 / stage1.gamma[j].norm())
        .collect();

    // Stage 2: grid over λ_A down from the all-zero threshold
    // max_{j∈Ť} ‖(1/n)X̃_jᵀy0‖/w_j.
    let sub_blocks: Vec<DMatrix<f64>> = stage1_active
        .iter()
        .map(|&j| design.block(j).clone())
        .collect();
    let mut top2: f64 = 0.0;
    for (slot, b) in sub_blocks.iter().enumerate() {
        let score = b.transpose() * &y0 / n as f64;
        top2 = top2.max(score.norm() / weights[slot]);
    }
    let lambdas2 = geometric_grid(top2, grid);
    let weights_ref = &weights;
    let kappa_of2 = move |lam: f64| weights_ref.iter().map(|&w| lam * w).collect::<Vec<f64>>();
    let (k2, stage2, path2) = engine_aic_path(&sub_blocks, &y0, n, m, &lambdas2, &kappa_of2, &opts);
    let lambda_a = lambdas2[k2];

    let kappa2 = kappa_of2(lambda_a);
    let kkt = groupcd::kkt_residual(&sub_blocks, &kappa2, &stage2.gamma, &stage2.residual, n);
    let mut groups: Vec<DVector<f64>> = (0..d).map(|_| DVector::zeros(m)).collect();
    for (slot, &j) in stage1_active.iter().enumerate() {
        groups[j] = stage2.gamma[slot].clone();
    }
    let mut fitted = DVector::from_element(n, y_bar);
    for i in 0..n {
        fitted[i] += y0[i] - stage2.residual[i];
    }
    let full_weights: Vec<f64> = {
        let mut w = vec![f64::INFINITY; d];
        for (slot, &j) in stage1_active.iter().enumerate() {
            w[j] = weights[slot];
        }
        w
    };
    let fit = GlassoFit {
        coefficients: GroupCoefficients::from_groups(&groups),
        intercept: y_bar,
        lambda1: lambda_a,
        objective: stage2.objective,
        n_iterations: stage1.n_iterations + stage2.n_iterations,
        kkt_residual: kkt,
        fitted,
        converged: stage1.converged && stage2.converged,
    };
    Ok((
        AdaptiveFit {
            fit,
            stage1_active,
            weights: full_weights,
            stage1_empty: false,
            lambda1_init,
            lambda_a,
        },
        path1,
        path2,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{make_bspline_basis, Placement};
    use crate::data::{build_centered_design, Dataset};

    /// Small synthetic regression problem with one strong component.
    fn toy_problem(n: usize, d: usize, seed: u64) -> (CenteredDesign, DVector<f64>) {
        let mut state = seed | 1;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let z = DMatrix::from_fn(n, d, |_, _| next());
        let y = DVector::from_fn(n, |i, _| {
            2.5 * (2.0 * z[(i, 0)] - 1.0).powi(2)
                + 1.5 * z[(i, 1.min(d - 1))]
                + 0.3 * (next() - 0.5)
        });
        let data = Dataset::new(y.clone(), z).unwrap();
        let basis = make_bspline_basis(2, 0, Placement::Even, None).unwrap();
        (build_centered_design(&data, &basis).unwrap(), y)
    }

    #[test]
    fn constant_response_has_zero_lambda_max() {
        let (design, _) = toy_problem(20, 3, 1);
        let y = DVector::from_element(20, 4.2);
        // The sample mean of identical values can carry one rounding step,
        // leaving a residual at the 1e-16 scale rather than exactly zero.
        assert!(lambda_max(&design, &y).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn lambda_max_is_homogeneous_in_centered_response() {
        let (design, y) = toy_problem(25, 3, 2);
        let top = lambda_max(&design, &y).unwrap();
        let y_bar = y.sum() / y.len() as f64;
        let doubled = y.map(|v| y_bar + 2.0 * (v - y_bar));
        let top2 = lambda_max(&design, &doubled).unwrap();
        assert!((top2 - 2.0 * top).abs() <= 1e-10 * top);
    }

    #[test]
    fn threshold_separates_zero_from_nonzero() {
        let (design, y) = toy_problem(20, 3, 3);
        let top = lambda_max(&design, &y).unwrap();
        let above = fit(&design, &y, 1.0001 * top, FitOptions::default()).unwrap();
        assert!(above.coefficients.active_set.is_empty());
        let y_bar = y.sum() / y.len() as f64;
        assert!(above.fitted.iter().all(|&v| (v - y_bar).abs() <= 1e-12));
        let centered_ss: f64 = y.iter().map(|v| (v - y_bar).powi(2)).sum();
        let expected_obj = centered_ss / (2.0 * y.len() as f64);
        assert!((above.objective - expected_obj).abs() <= 1e-10 * expected_obj);
        assert!(above.kkt_residual <= 1e-12);

        let below = fit(&design, &y, 0.999 * top, FitOptions::default()).unwrap();
        assert!(!below.coefficients.active_set.is_empty());
    }

    #[test]
    fn unpenalized_fit_is_least_squares() {
        let (design, y) = toy_problem(40, 3, 4);
        let opts = FitOptions {
            tol: Some(1e-13),
            max_iter: Some(200_000),
            warm_start: None,
        };
        let res = fit(&design, &y, 0.0, opts).unwrap();
        assert!(res.converged);
        assert!(res.kkt_residual <= 1e-8, "kkt {}", res.kkt_residual);
        let n = design.n();
        let m = design.m();
        let mut stacked = DMatrix::zeros(n, design.d() * m);
        for j in 0..design.d() {
            stacked
                .view_mut((0, j * m), (n, m))
                .copy_from(design.block(j));
        }
        let y_bar = y.sum() / n as f64;
        let y0 = y.map(|v| v - y_bar);
        let sol = stacked.clone().svd(true, true).solve(&y0, 1e-12).unwrap();
        let fitted_ls = &stacked * &sol;
        for i in 0..n {
            assert!((res.fitted[i] - y_bar - fitted_ls[i]).abs() <= 1e-6);
        }
    }

    #[test]
    fn objective_consistent_between_parameterizations() {
        let (design, y) = toy_problem(30, 4, 5);
        let top = lambda_max(&design, &y).unwrap();
        let res = fit(&design, &y, 0.3 * top, FitOptions::default()).unwrap();
        let recomputed = objective_value(&design, &y, &res.coefficients, res.lambda1);
        assert!(
            (recomputed - res.objective).abs() <= 1e-10 * res.objective.abs().max(1.0),
            "beta-form {recomputed} vs engine {}",
            res.objective
        );
    }

    #[test]
    fn solution_scales_with_response_and_penalty() {
        let (design, y) = toy_problem(30, 3, 6);
        let top = lambda_max(&design, &y).unwrap();
        let lam = 0.2 * top;
        let base = fit(&design, &y, lam, FitOptions::default()).unwrap();
        let scaled = fit(&design, &(&y * 3.0), 3.0 * lam, FitOptions::default()).unwrap();
        let diff = (&scaled.coefficients.beta - &base.coefficients.beta * 3.0).norm();
        assert!(
            diff <= 1e-8 * base.coefficients.beta.norm().max(1.0),
            "diff {diff}"
        );
    }

    #[test]
    fn perturbing_solution_raises_kkt_residual() {
        let (design, y) = toy_problem(30, 3, 7);
        let top = lambda_max(&design, &y).unwrap();
        let opts = FitOptions {
            tol: Some(1e-11),
            max_iter: None,
            warm_start: None,
        };
        let res = fit(&design, &y, 0.3 * top, opts).unwrap();
        let clean = kkt_residual(&design, &y, &res).unwrap();
        let mut bumped = res.clone();
        let j = bumped.coefficients.active_set[0];
        bumped.coefficients.beta[j * design.m()] += 1e-3;
        bumped.coefficients.active_set = (0..design.d())
            .filter(|&g| bumped.coefficients.group(g).iter().any(|&v| v != 0.0))
            .collect();
        let dirty = kkt_residual(&design, &y, &bumped).unwrap();
        assert!(dirty > clean, "clean {clean} dirty {dirty}");
    }

    #[test]
    fn path_objective_monotone_in_lambda() {
        let (design, y) = toy_problem(35, 4, 8);
        let grid = PathGrid {
            n_lambda: 12,
            ratio: 0.05,
        };
        let (_, path) = fit_path_aic(&design, &y, &grid).unwrap();
        assert_eq!(path.len(), 12);
        // Refit each grid point cold and check the optimal objectives decrease
        // as the penalty decreases.
        let mut last = f64::INFINITY;
        for p in &path {
            let f = fit(&design, &y, p.lambda1, FitOptions::default()).unwrap();
            assert!(f.objective <= last + 1e-10, "objective rose along the path");
            last = f.objective;
        }
    }

    #[test]
    fn single_point_grid_is_allowed() {
        let (design, y) = toy_problem(20, 3, 9);
        let grid = PathGrid {
            n_lambda: 1,
            ratio: 0.5,
        };
        let (chosen, path) = fit_path_aic(&design, &y, &grid).unwrap();
        assert_eq!(path.len(), 1);
        let top = lambda_max(&design, &y).unwrap();
        assert!((chosen.lambda1 - top).abs() <= 1e-12 * top);
    }

    #[test]
    fn adaptive_empty_stage1_gives_intercept_only() {
        let (design, y) = toy_problem(25, 3, 10);
        let res = fit_adaptive(&design, &y, 1e9, 0.1).unwrap();
        assert!(res.stage1_empty);
        assert!(res.fit.coefficients.active_set.is_empty());
        assert!(res.weights.iter().all(|w| w.is_infinite()));
        let y_bar = y.sum() / y.len() as f64;
        assert!(res.fit.fitted.iter().all(|&v| (v - y_bar).abs() <= 1e-12));
    }

    #[test]
    fn adaptive_zero_lambda_a_is_least_squares_on_support() {
        let (design, y) = toy_problem(40, 3, 11);
        let top = lambda_max(&design, &y).unwrap();
        let res = fit_adaptive(&design, &y, 0.05 * top, 0.0).unwrap();
        assert!(!res.stage1_empty);
        // Direct least squares on the stage-1 support.
        let n = design.n();
        let m = design.m();
        let cols: usize = res.stage1_active.len() * m;
        let mut stacked = DMatrix::zeros(n, cols);
        for (slot, &j) in res.stage1_active.iter().enumerate() {
            stacked
                .view_mut((0, slot * m), (n, m))
                .copy_from(design.block(j));
        }
        let y_bar = y.sum() / n as f64;
        let y0 = y.map(|v| v - y_bar);
        let sol = stacked.clone().svd(true, true).solve(&y0, 1e-12).unwrap();
        let fitted_ls = &stacked * &sol;
        for i in 0..n {
            assert!((res.fit.fitted[i] - y_bar - fitted_ls[i]).abs() <= 1e-5);
        }
    }

    #[test]
    fn adaptive_support_shrinks_only() {
        let (design, y) = toy_problem(30, 4, 12);
        let top = lambda_max(&design, &y).unwrap();
        let res = fit_adaptive(&design, &y, 0.1 * top, 0.05).unwrap();
        for j in &res.fit.coefficients.active_set {
            assert!(res.stage1_active.contains(j));
        }
        for j in 0..design.d() {
            if !res.stage1_active.contains(&j) {
                assert!(res.fit.coefficients.group(j).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn adaptive_aic_selects_signal_groups() {
        let (design, y) = toy_problem(60, 5, 13);
        let grid = PathGrid {
            n_lambda: 20,
            ratio: 0.01,
        };
        let (res, path1, path2) = fit_adaptive_aic(&design, &y, &grid).unwrap();
        assert!(!path1.is_empty());
        assert!(!path2.is_empty());
        assert!(res.fit.coefficients.active_set.contains(&0));
    }
}
