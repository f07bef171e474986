//! Design-quality diagnostics: per-group Gram conditioning, group-sparse
//! extreme singular values, a cone-restricted eigenvalue bound, and the
//! theoretical rate quantity they calibrate against.
//!
//! All quantities are computed on the centered design. The group-sparse
//! maximum is exact by subset enumeration when the subset count fits a
//! budget; a sampled variant returns a lower bound flagged by its type. The
//! cone-restricted minimum is nonconvex, so only an upper bound from
//! projected local minimization is ever reported.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::data::CenteredDesign;
use crate::error::{Error, Result};
use crate::linalg::sym_eigen;

/// Default cap on the number of subsets the exact enumeration may visit.
pub const DEFAULT_SUBSET_BUDGET: u64 = 1_000_000;

/// Cone opening constant in the restricted-eigenvalue feasible set.
pub const DEFAULT_CONE_CONSTANT: f64 = 21.0;

const RE_MAX_ITER: usize = 300;
const RE_BACKTRACK: usize = 20;

/// Per-group deviation of Σ̂_j^{1/2} from the identity, with the overall
/// well-behavedness verdict at operator-norm threshold 0.5.
#[derive(Debug, Clone, Serialize)]
pub struct Omega0Report {
    pub holds: bool,
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

/// Check ‖Σ̂_j^{1/2} − I‖ ≤ 0.5 for every group.
pub fn omega0_check(design: &CenteredDesign) -> Omega0Report {
    let mut deviations = Vec::with_capacity(design.d());
    for j in 0..design.d() {
        let (vals, _) = sym_eigen(design.gram(j));
        let dev = vals
            .iter()
            .map(|&l| (l.max(0.0).sqrt() - 1.0).abs())
            .fold(0.0_f64, f64::max);
        deviations.push(dev);
    }
    let max_deviation = deviations.iter().copied().fold(0.0_f64, f64::max);
    Omega0Report {
        holds: max_deviation <= 0.5,
        deviations,
        max_deviation,
    }
}

/// C(d, s), saturating at `cap + 1` as soon as the count exceeds `cap`.
fn binomial_capped(d: u64, s: u64, cap: u128) -> u128 {
    if s > d {
        return 0;
    }
    let s = s.min(d - s);
    let mut acc: u128 = 1;
    for k in 0..s {
        acc = acc * (d - k) as u128 / (k + 1) as u128;
        if acc > cap {
            return cap + 1;
        }
    }
    acc
}

/// Visit every size-s subset of {0..d} in lexicographic order.
fn for_each_combination(d: usize, s: usize, mut visit: impl FnMut(&[usize])) {
    if s == 0 || s > d {
        return;
    }
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        visit(&idx);
        let mut i = s as isize - 1;
        while i >= 0 && idx[i as usize] == i as usize + d - s {
            i -= 1;
        }
        if i < 0 {
            return;
        }
        let i = i as usize;
        idx[i] += 1;
        for k in i + 1..s {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

/// Assemble the cross-group Gram restricted to `subset`, in subset order.
fn subset_gram(design: &CenteredDesign, subset: &[usize]) -> DMatrix<f64> {
    let m = design.m();
    let n = design.n() as f64;
    let sm = subset.len() * m;
    let mut g = DMatrix::zeros(sm, sm);
    for (a, &ja) in subset.iter().enumerate() {
        for (b, &jb) in subset.iter().enumerate().skip(a) {
            let cross = design.block(ja).transpose() * design.block(jb) / n;
            g.view_mut((a * m, b * m), (m, m)).copy_from(&cross);
            if b != a {
                g.view_mut((b * m, a * m), (m, m))
                    .copy_from(&cross.transpose());
            }
        }
    }
    g
}

fn max_singular_value_of_subset(design: &CenteredDesign, subset: &[usize]) -> f64 {
    let (vals, _) = sym_eigen(&subset_gram(design, subset));
    vals.iter().copied().fold(0.0_f64, f64::max).max(0.0).sqrt()
}

/// Exact s-group-sparse maximum singular value of Σ̂^{1/2}:
/// max ‖Σ̂^{1/2}α‖ over unit α supported on at most s groups.
///
/// # Arguments
/// * `s` - group-support budget, 1 ≤ s ≤ d.
/// * `budget` - largest subset count the enumeration may visit; exceeded
///   counts produce an error pointing at the sampled variant.
pub fn group_sparse_max_eigenvalue(design: &CenteredDesign, s: usize, budget: u64) -> Result<f64> {
    let d = design.d();
    if s == 0 || s > d {
        return Err(Error::InvalidArgument(format!(
            "group sparsity level must be in 1..={d}, got {s}"
        )));
    }
    let count = binomial_capped(d as u64, s as u64, budget as u128);
    if count > budget as u128 {
        return Err(Error::BudgetExceeded(format!(
            "enumerating C({d}, {s}) subsets exceeds the budget of {budget}; \
             use group_sparse_max_eigenvalue_sampled for a flagged lower bound"
        )));
    }
    let mut best: f64 = 0.0;
    for_each_combination(d, s, |subset| {
        best = best.max(max_singular_value_of_subset(design, subset));
    });
    Ok(best)
}

/// A sampled lower bound on the group-sparse maximum singular value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SampledLowerBound {
    /// Best value over the sampled subsets; a lower bound on the exact
    /// maximum, not the maximum itself.
    pub value: f64,
    pub n_subsets: usize,
}

/// Randomized variant of [`group_sparse_max_eigenvalue`]: evaluates
/// `n_subsets` uniformly drawn subsets and returns the best value seen.
pub fn group_sparse_max_eigenvalue_sampled(
    design: &CenteredDesign,
    s: usize,
    n_subsets: usize,
    seed: u64,
) -> Result<SampledLowerBound> {
    let d = design.d();
    if s == 0 || s > d {
        return Err(Error::InvalidArgument(format!(
            "group sparsity level must be in 1..={d}, got {s}"
        )));
    }
    if n_subsets == 0 {
        return Err(Error::InvalidArgument(
            "need at least one sampled subset".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..n_subsets {
        let mut subset: Vec<usize> = rand::seq::index::sample(&mut rng, d, s).into_vec();
        subset.sort_unstable();
        best = best.max(max_singular_value_of_subset(design, &subset));
    }
    Ok(SampledLowerBound {
        value: best,
        n_subsets,
    })
}

/// Smallest singular value of Σ̂^{1/2} restricted to the groups in `t`.
/// Returns 0 when |T|·m > n, where the restriction is rank-deficient.
pub fn sparse_min_eigenvalue(design: &CenteredDesign, t: &[usize]) -> Result<f64> {
    let d = design.d();
    let mut t: Vec<usize> = t.to_vec();
    t.sort_unstable();
    t.dedup();
    if t.is_empty() {
        return Err(Error::InvalidArgument("index set must be non-empty".into()));
    }
    if let Some(&bad) = t.iter().find(|&&j| j >= d) {
        return Err(Error::InvalidArgument(format!(
            "group index {bad} out of range for d={d}"
        )));
    }
    if t.len() * design.m() > design.n() {
        return Ok(0.0);
    }
    let (vals, _) = sym_eigen(&subset_gram(design, &t));
    Ok(vals
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
        .sqrt())
}

/// Upper bound on the cone-restricted minimum of ‖Σ̂^{1/2}α‖ over unit α
/// with Σ_{j∉T*}‖α_j‖ ≤ c0·Σ_{j∈T*}‖α_j‖, from projected local minimization
/// with multiple restarts. The problem is nonconvex; the returned value is
/// only an upper bound on the true restricted eigenvalue.
pub fn restricted_eigenvalue_upper(
    design: &CenteredDesign,
    t_star: &[usize],
    c0: f64,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    let d = design.d();
    let m = design.m();
    let n = design.n() as f64;
    let mut t_star: Vec<usize> = t_star.to_vec();
    t_star.sort_unstable();
    t_star.dedup();
    if t_star.is_empty() {
        return Err(Error::InvalidArgument("T* must be non-empty".into()));
    }
    if let Some(&bad) = t_star.iter().find(|&&j| j >= d) {
        return Err(Error::InvalidArgument(format!(
            "group index {bad} out of range for d={d}"
        )));
    }
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cone constant must be positive, got {c0}"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    let mut in_cone_set = vec![false; d];
    for &j in &t_star {
        in_cone_set[j] = true;
    }

    let value = |alpha: &DVector<f64>| -> f64 {
        let mut image = DVector::zeros(design.n());
        for j in 0..d {
            image += design.block(j) * alpha.rows(j * m, m);
        }
        image.norm_squared() / n
    };
    let gradient = |alpha: &DVector<f64>| -> DVector<f64> {
        let mut image = DVector::zeros(design.n());
        for j in 0..d {
            image += design.block(j) * alpha.rows(j * m, m);
        }
        let mut g = DVector::zeros(d * m);
        for j in 0..d {
            let gj = design.block(j).transpose() * &image * (2.0 / n);
            g.rows_mut(j * m, m).copy_from(&gj);
        }
        g
    };
    // Pull a point into the cone (shrinking the out-of-T* groups if needed)
    // and onto the unit sphere; degenerate points map to None.
    let make_feasible = |alpha: &DVector<f64>| -> Option<DVector<f64>> {
        let mut a = alpha.clone();
        let mut s_in = 0.0;
        let mut s_out = 0.0;
        for j in 0..d {
            let nj = a.rows(j * m, m).norm();
            if in_cone_set[j] {
                s_in += nj;
            } else {
                s_out += nj;
            }
        }
        if s_out > c0 * s_in {
            let scale = if s_out > 0.0 { c0 * s_in / s_out } else { 0.0 };
            for j in 0..d {
                if !in_cone_set[j] {
                    a.rows_mut(j * m, m).scale_mut(scale);
                }
            }
        }
        let norm = a.norm();
        if norm <= 1e-14 {
            return None;
        }
        Some(a / norm)
    };

    let mut starts: Vec<DVector<f64>> = Vec::new();
    // Deterministic start: the least eigenvector of the T*-restricted Gram,
    // embedded with zeros outside the cone's favored groups.
    let (vals, vecs) = sym_eigen(&subset_gram(design, &t_star));
    let min_pos = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut embedded = DVector::zeros(d * m);
    for (slot, &j) in t_star.iter().enumerate() {
        embedded
            .rows_mut(j * m, m)
            .copy_from(&vecs.column(min_pos).rows(slot * m, m));
    }
    starts.push(embedded);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        starts.push(DVector::from_fn(d * m, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        }));
    }

    let mut best = f64::INFINITY;
    for start in &starts {
        let Some(mut alpha) = make_feasible(start) else {
            continue;
        };
        let mut fv = value(&alpha);
        let mut step = 1.0;
        for _ in 0..RE_MAX_ITER {
            let g = gradient(&alpha);
            let mut improved = false;
            for _ in 0..RE_BACKTRACK {
                if let Some(cand) = make_feasible(&(&alpha - &g * step)) {
                    let fc = value(&cand);
                    if fc < fv - 1e-15 {
                        alpha = cand;
                        fv = fc;
                        step *= 1.5;
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.min(fv);
    }
    if !best.is_finite() {
        return Err(Error::InvalidArgument(
            "no feasible unit vector found for the restricted-eigenvalue search".into(),
        ));
    }
    Ok(best.max(0.0).sqrt())
}

/// Rate quantity δ(n, d, ν) = max(n^{−ν/(2ν+1)}, √(ln d / n)).
pub fn delta(n: usize, d: usize, nu: usize) -> Result<f64> {
    if n < 2 || d < 2 {
        return Err(Error::InvalidArgument(format!(
            "delta needs n >= 2 and d >= 2, got n={n}, d={d}"
        )));
    }
    if nu == 0 {
        return Err(Error::InvalidArgument(
            "smoothness order must be >= 1".into(),
        ));
    }
    let nf = n as f64;
    let smooth = nf.powf(-(nu as f64) / (2.0 * nu as f64 + 1.0));
    let dim = ((d as f64).ln() / nf).sqrt();
    Ok(smooth.max(dim))
}

/// What to compute in a combined diagnostics pass.
#[derive(Debug, Clone)]
pub struct DiagnosticsRequest {
    /// Sparsity levels s at which to compute the group-sparse maximum.
    pub phi_max_sizes: Vec<usize>,
    /// Index sets T at which to compute the sparse minimum.
    pub phi_min_sets: Vec<Vec<usize>>,
    /// When given, the restricted-eigenvalue upper bound is computed at this
    /// candidate true support.
    pub t_star: Option<Vec<usize>>,
    pub budget: u64,
    pub restarts: usize,
    pub seed: u64,
    /// Smoothness order for the rate quantity.
    pub nu: usize,
}

impl Default for DiagnosticsRequest {
    fn default() -> Self {
        DiagnosticsRequest {
            phi_max_sizes: vec![1, 2],
            phi_min_sets: Vec::new(),
            t_star: None,
            budget: DEFAULT_SUBSET_BUDGET,
            restarts: 8,
            seed: 0,
            nu: 2,
        }
    }
}

/// Combined design diagnostics, serializable for reporting.
#[derive(Debug, Clone, Serialize)]
pub struct DesignDiagnostics {
    pub omega0_holds: bool,
    pub per_group_deviation: Vec<f64>,
    /// s ↦ exact group-sparse maximum singular value.
    pub phi_max: BTreeMap<usize, f64>,
    /// (T, value) pairs for the requested index sets.
    pub phi_min: Vec<(Vec<usize>, f64)>,
    /// Upper bound from local search; absent when no T* was requested.
    pub kappa_upper_bound: Option<f64>,
    pub delta: f64,
}

/// Run every requested diagnostic on one design.
pub fn diagnose_design(
    design: &CenteredDesign,
    req: &DiagnosticsRequest,
) -> Result<DesignDiagnostics> {
    let omega0 = omega0_check(design);
    let mut phi_max = BTreeMap::new();
    for &s in &req.phi_max_sizes {
        phi_max.insert(s, group_sparse_max_eigenvalue(design, s, req.budget)?);
    }
    let mut phi_min = Vec::new();
    for t in &req.phi_min_sets {
        phi_min.push((t.clone(), sparse_min_eigenvalue(design, t)?));
    }
    let kappa_upper_bound = match &req.t_star {
        Some(t_star) => Some(restricted_eigenvalue_upper(
            design,
            t_star,
            DEFAULT_CONE_CONSTANT,
            req.restarts,
            req.seed,
        )?),
        None => None,
    };
    Ok(DesignDiagnostics {
        omega0_holds: omega0.holds,
        per_group_deviation: omega0.deviations,
        phi_max,
        phi_min,
        kappa_upper_bound,
        delta: delta(design.n(), design.d(), req.nu)?,
    })
}
