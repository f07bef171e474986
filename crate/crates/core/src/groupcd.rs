//! Shared blockwise coordinate-descent engine for group-separable penalties.
//!
//! Minimizes (1/2n)‖y₀ − Σ_j A_j γ_j‖² + Σ_j κ_j‖γ_j‖ for per-group penalty
//! levels κ_j ≥ 0. Every block update is exact: the group is zeroed when its
//! score norm is at most κ_j, and otherwise the stationarity system
//! (Q_j + κ_j/‖γ‖·I)γ = ρ_j is solved in the eigenbasis of Q_j = A_jᵀA_j/n by
//! a safeguarded Newton iteration on the scalar secular equation for ‖γ‖.
//! Because ρ_j lies in the range of Q_j, null directions of a rank-deficient
//! block carry no score and the resulting γ_j is the minimum-norm choice.
//!
//! The first-step selection solver, its identity-normalized variant, the
//! adaptive second stage, and the doubly-penalized competitor all reduce to
//! this problem for different block matrices and κ values.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{sym_eigen, EIGEN_CLIP};

/// Convergence tolerance on the secular equation |g(t) − 1|.
const SECULAR_TOL: f64 = 1e-12;
/// Iteration cap for one scalar secular solve; safeguarded Newton on a convex
/// decreasing function converges in far fewer steps.
const SECULAR_MAX_ITER: usize = 200;

/// Options of one engine run.
#[derive(Debug, Clone)]
pub(crate) struct GroupCdOptions {
    /// Relative objective decrease over a sweep below which a phase stops.
    pub tol: f64,
    /// Maximum number of sweeps (full or active-set) in total.
    pub max_iter: usize,
}

impl Default for GroupCdOptions {
    fn default() -> Self {
        GroupCdOptions {
            tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

/// Result of one engine run, in the block parameterization it was given.
#[derive(Debug, Clone)]
pub(crate) struct GroupCdResult {
    pub gamma: Vec<DVector<f64>>,
    /// y₀ − Σ_j A_j γ_j at the solution.
    pub residual: DVector<f64>,
    pub objective: f64,
    /// Number of sweeps performed (full and active-set combined).
    pub n_iterations: usize,
    pub converged: bool,
}

/// Eigenfactorization of one block's Gram matrix, reused across sweeps.
struct BlockFactor {
    evals: DVector<f64>,
    evecs: DMatrix<f64>,
}

/// Run blockwise coordinate descent with the active-set sweep strategy:
/// a full sweep, then active-set sweeps until stable, then a full
/// confirmation sweep; the run converges when the confirmation sweep itself
/// makes no further relative progress.
pub(crate) fn solve(
    blocks: &[DMatrix<f64>],
    kappa: &[f64],
    y0: &DVector<f64>,
    warm_start: Option<&[DVector<f64>]>,
    opts: &GroupCdOptions,
) -> GroupCdResult {
    let d = blocks.len();
    let n = y0.len();
    assert_eq!(kappa.len(), d, "one penalty level per block");
    let factors: Vec<BlockFactor> = blocks
        .iter()
        .map(|a| {
            let gram = a.transpose() * a / n as f64;
            let (evals, evecs) = sym_eigen(&gram);
            BlockFactor { evals, evecs }
        })
        .collect();

    let mut gamma: Vec<DVector<f64>> = match warm_start {
        Some(g) => g.to_vec(),
        None => blocks.iter().map(|a| DVector::zeros(a.ncols())).collect(),
    };
    let mut residual = y0.clone();
    for (j, g) in gamma.iter().enumerate() {
        if g.iter().any(|&v| v != 0.0) {
            residual -= &blocks[j] * g;
        }
    }

    let mut objective = eval_objective(&residual, &gamma, kappa, n);
    let mut n_iterations = 0usize;
    let mut converged = false;

    while n_iterations < opts.max_iter {
        // Active-set phase: iterate on the currently nonzero groups.
        loop {
            let active: Vec<usize> = (0..d)
                .filter(|&j| gamma[j].iter().any(|&v| v != 0.0))
                .collect();
            if active.is_empty() || n_iterations >= opts.max_iter {
                break;
            }
            let before = objective;
            for &j in &active {
                update_block(
                    &blocks[j],
                    &factors[j],
                    kappa[j],
                    &mut gamma[j],
                    &mut residual,
                    n,
                );
            }
            objective = eval_objective(&residual, &gamma, kappa, n);
            n_iterations += 1;
            if before - objective <= opts.tol * before.abs().max(1e-12) {
                break;
            }
        }
        if n_iterations >= opts.max_iter {
            break;
        }
        // Confirmation sweep over all groups; no further progress means done.
        let before = objective;
        for j in 0..d {
            update_block(
                &blocks[j],
                &factors[j],
                kappa[j],
                &mut gamma[j],
                &mut residual,
                n,
            );
        }
        objective = eval_objective(&residual, &gamma, kappa, n);
        n_iterations += 1;
        if before - objective <= opts.tol * before.abs().max(1e-12) {
            converged = true;
            break;
        }
    }

    GroupCdResult {
        gamma,
        residual,
        objective,
        n_iterations,
        converged,
    }
}

/// (1/2n)‖r‖² + Σ_j κ_j‖γ_j‖.
pub(crate) fn eval_objective(
    residual: &DVector<f64>,
    gamma: &[DVector<f64>],
    kappa: &[f64],
    n: usize,
) -> f64 {
    let rss = residual.norm_squared();
    let penalty: f64 = gamma.iter().zip(kappa).map(|(g, &k)| k * g.norm()).sum();
    rss / (2.0 * n as f64) + penalty
}

/// Stationarity violation of a candidate solution: for active groups the norm
/// of score − κ·γ/‖γ‖, for inactive groups the excess of the score norm over
/// κ; zero at an exact minimizer. For κ = 0 the score itself must vanish.
pub(crate) fn kkt_residual(
    blocks: &[DMatrix<f64>],
    kappa: &[f64],
    gamma: &[DVector<f64>],
    residual: &DVector<f64>,
    n: usize,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, a) in blocks.iter().enumerate() {
        let score = a.transpose() * residual / n as f64;
        let gnorm = gamma[j].norm();
        let violation = if gnorm > 0.0 {
            (score - &gamma[j] * (kappa[j] / gnorm)).norm()
        } else {
            (score.norm() - kappa[j]).max(0.0)
        };
        worst = worst.max(violation);
    }
    worst
}

/// Exactly minimize the objective over one block, updating γ_j and the shared
/// residual in place.
fn update_block(
    a: &DMatrix<f64>,
    factor: &BlockFactor,
    kappa: f64,
    gamma_j: &mut DVector<f64>,
    residual: &mut DVector<f64>,
    n: usize,
) {
    let had_value = gamma_j.iter().any(|&v| v != 0.0);
    if had_value {
        *residual += a * &*gamma_j;
    }
    let rho = a.transpose() * &*residual / n as f64;
    let new_gamma = block_minimizer(factor, kappa, &rho);
    if let Some(g) = new_gamma {
        *residual -= a * &g;
        *gamma_j = g;
    } else {
        gamma_j.fill(0.0);
    }
}

/// Minimizer of (1/2)γᵀQγ − ρᵀγ + κ‖γ‖ in the eigenbasis of Q; `None` encodes
/// the exact zero solution.
fn block_minimizer(factor: &BlockFactor, kappa: f64, rho: &DVector<f64>) -> Option<DVector<f64>> {
    let m = rho.len();
    let rho_t = factor.evecs.transpose() * rho;
    // Components along (numerically) null eigendirections are rounding noise:
    // the score always lies in the range of Q.
    let kept: Vec<usize> = (0..m).filter(|&i| factor.evals[i] > EIGEN_CLIP).collect();
    if kappa == 0.0 {
        // Unpenalized block: minimum-norm least squares.
        let mut g_t = DVector::zeros(m);
        for &i in &kept {
            g_t[i] = rho_t[i] / factor.evals[i];
        }
        if g_t.iter().all(|&v| v == 0.0) {
            return None;
        }
        return Some(&factor.evecs * g_t);
    }
    let norm_kept: f64 = kept
        .iter()
        .map(|&i| rho_t[i] * rho_t[i])
        .sum::<f64>()
        .sqrt();
    if norm_kept <= kappa {
        return None;
    }
    let d_min = kept
        .iter()
        .map(|&i| factor.evals[i])
        .fold(f64::INFINITY, f64::min);
    let d_max = kept.iter().map(|&i| factor.evals[i]).fold(0.0, f64::max);
    let t = solve_secular(factor, kappa, &rho_t, &kept, norm_kept, d_min, d_max);
    let mut g_t = DVector::zeros(m);
    for &i in &kept {
        g_t[i] = rho_t[i] * t / (factor.evals[i] * t + kappa);
    }
    Some(&factor.evecs * g_t)
}

/// Solve g(t) = Σ_i ρ̃_i²/(d_i·t + κ)² = 1 for t = ‖γ‖ > 0. g is convex and
/// strictly decreasing on t ≥ 0 with g(0) > 1, so the root is unique; Newton
/// from the lower end approaches it monotonically, and a bisection bracket
/// guards against floating-point stalls.
fn solve_secular(
    factor: &BlockFactor,
    kappa: f64,
    rho_t: &DVector<f64>,
    kept: &[usize],
    norm_kept: f64,
    d_min: f64,
    d_max: f64,
) -> f64 {
    // (d_min·t* + κ)² ≤ ‖ρ̃‖² and (d_max·t* + κ)² ≥ ‖ρ̃‖² bracket the root.
    let mut lo = (norm_kept - kappa) / d_max;
    let mut hi = (norm_kept - kappa) / d_min;
    let g_and_slope = |t: f64| -> (f64, f64) {
        let mut g = 0.0;
        let mut slope = 0.0;
        for &i in kept {
            let denom = factor.evals[i] * t + kappa;
            let term = (rho_t[i] / denom).powi(2);
            g += term;
            slope -= 2.0 * term * factor.evals[i] / denom;
        }
        (g, slope)
    };
    let mut t = lo;
    for _ in 0..SECULAR_MAX_ITER {
        let (g, slope) = g_and_slope(t);
        if (g - 1.0).abs() <= SECULAR_TOL {
            return t;
        }
        if g > 1.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - (g - 1.0) / slope;
        t = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= f64::EPSILON * hi.abs() {
            return t;
        }
    }
    t
}
