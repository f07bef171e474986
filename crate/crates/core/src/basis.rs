//! Univariate B-spline bases on [0,1] and their roughness penalty matrices.
//!
//! A basis is built from a degree and a set of interior knots (clamped at the
//! boundary), and exposes all but the last function of the full B-spline
//! family. Dropping one function removes the constant direction from the span:
//! together with the empirical centering applied downstream, this makes the
//! additive components identifiable without constraining the optimization.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Rule for positioning interior knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Knots at k/(n_interior+1), k = 1..n_interior.
    Even,
    /// Knots at empirical quantiles of a data column.
    Quantile,
}

/// A clamped B-spline basis on [0,1] with the last function excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    degree: usize,
    interior_knots: Vec<f64>,
    boundary: (f64, f64),
    m: usize,
    full_dim: usize,
    /// Indices of interior knots that were moved to break quantile ties.
    nudged_knots: Vec<usize>,
    /// Full clamped knot vector: degree+1 zeros, interior knots, degree+1 ones.
    knots: Vec<f64>,
}

/// Roughness penalty matrix Ω with Ω_kl = ∫₀¹ ψ_k^(ν)(z) ψ_l^(ν)(z) dz over the
/// exposed basis functions.
#[derive(Debug, Clone)]
pub struct PenaltyMatrix {
    /// Derivative order ν of the roughness functional.
    pub nu: usize,
    /// Symmetric positive semidefinite m×m matrix.
    pub omega: DMatrix<f64>,
}

/// Build a spline basis with `m = degree + n_interior` exposed functions.
///
/// `data_column` is required for quantile placement and ignored otherwise.
/// Quantile ties are broken by nudging duplicate knots to the midpoint of
/// their neighbors; the indices of moved knots are recorded on the basis.
pub fn make_bspline_basis(
    degree: usize,
    n_interior: usize,
    placement: Placement,
    data_column: Option<&[f64]>,
) -> Result<SplineBasis> {
    if degree < 1 {
        return Err(Error::InvalidArgument(
            "spline degree must be at least 1".into(),
        ));
    }
    let (interior, nudged) = match placement {
        Placement::Even => {
            let k = n_interior as f64 + 1.0;
            ((1..=n_interior).map(|i| i as f64 / k).collect(), Vec::new())
        }
        Placement::Quantile => {
            let col = data_column.ok_or_else(|| {
                Error::InvalidArgument("quantile placement requires a data column".into())
            })?;
            if col.is_empty() {
                return Err(Error::InvalidArgument(
                    "quantile placement requires a non-empty data column".into(),
                ));
            }
            if let Some(bad) = col
                .iter()
                .find(|v| !(0.0..=1.0).contains(*v) || !v.is_finite())
            {
                return Err(Error::InvalidArgument(format!(
                    "quantile placement data value {bad} outside [0,1]"
                )));
            }
            let raw = empirical_quantile_knots(col, n_interior);
            repair_knots(&raw)?
        }
    };
    SplineBasis::from_parts_with_nudges(degree, interior, nudged)
}

/// Evaluate the exposed basis functions at `z`, returning (ψ₁(z), …, ψ_m(z)).
///
/// Evaluation at z = 1 uses the right-closed convention, so no value is lost
/// at the boundary. Values outside [0,1] are an error; there is no extrapolation.
pub fn eval_basis(basis: &SplineBasis, z: f64) -> Result<DVector<f64>> {
    let full = basis.eval_full(z)?;
    Ok(DVector::from_fn(basis.m, |i, _| full[i]))
}

/// Compute the roughness penalty matrix of derivative order `nu`.
///
/// The integrand ψ_k^(ν)ψ_l^(ν) is piecewise polynomial of degree 2(degree−ν)
/// on each knot interval, so per-interval Gauss–Legendre quadrature with
/// degree−ν+1 nodes integrates it exactly.
pub fn sobolev_penalty_matrix(basis: &SplineBasis, nu: usize) -> Result<PenaltyMatrix> {
    if nu < 1 || nu > basis.degree {
        return Err(Error::InvalidArgument(format!(
            "penalty order nu={nu} must satisfy 1 <= nu <= degree={}",
            basis.degree
        )));
    }
    let nodes = basis.degree - nu + 1;
    Ok(basis.penalty_with_nodes(nu, nodes))
}

impl SplineBasis {
    /// Reconstruct a basis from a degree and explicit interior knots
    /// (used when deserializing model files).
    pub fn from_parts(degree: usize, interior_knots: Vec<f64>) -> Result<Self> {
        Self::from_parts_with_nudges(degree, interior_knots, Vec::new())
    }

    fn from_parts_with_nudges(
        degree: usize,
        interior_knots: Vec<f64>,
        nudged_knots: Vec<usize>,
    ) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidArgument(
                "spline degree must be at least 1".into(),
            ));
        }
        for w in interior_knots.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "interior knots must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if interior_knots.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::InvalidArgument(
                "interior knots must lie strictly inside (0,1)".into(),
            ));
        }
        let full_dim = degree + 1 + interior_knots.len();
        let mut knots = Vec::with_capacity(full_dim + degree + 1);
        knots.extend(std::iter::repeat(0.0).take(degree + 1));
        knots.extend_from_slice(&interior_knots);
        knots.extend(std::iter::repeat(1.0).take(degree + 1));
        Ok(SplineBasis {
            degree,
            interior_knots,
            boundary: (0.0, 1.0),
            m: full_dim - 1,
            full_dim,
            nudged_knots,
            knots,
        })
    }

    /// Polynomial degree of the basis.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Interior knots, strictly increasing inside (0,1).
    pub fn interior_knots(&self) -> &[f64] {
        &self.interior_knots
    }

    /// Boundary of the support interval (always (0,1)).
    pub fn boundary(&self) -> (f64, f64) {
        self.boundary
    }

    /// Number of exposed basis functions (one less than the full family).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Size of the full B-spline family before the exclusion.
    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    /// Interior-knot indices that were moved to break quantile ties.
    pub fn nudged_knots(&self) -> &[usize] {
        &self.nudged_knots
    }

    /// Greville abscissae ξ_i of the full family; the coefficients of the
    /// identity function z in the full basis.
    pub fn greville_abscissae(&self) -> Vec<f64> {
        (0..self.full_dim)
            .map(|i| self.knots[i + 1..=i + self.degree].iter().sum::<f64>() / self.degree as f64)
            .collect()
    }

    /// First two moments of the exposed functions under Uniform[0,1]: the
    /// Gram matrix ∫ψψᵀ and the mean vector ∫ψ, both exact via per-interval
    /// Gauss–Legendre quadrature.
    pub fn uniform_moments(&self) -> (DMatrix<f64>, DVector<f64>) {
        let rule = gauss_legendre(self.degree + 1);
        let mut breaks = Vec::with_capacity(self.interior_knots.len() + 2);
        breaks.push(0.0);
        breaks.extend_from_slice(&self.interior_knots);
        breaks.push(1.0);

        let mut gram = DMatrix::zeros(self.m, self.m);
        let mut mean = DVector::zeros(self.m);
        let mut vals = vec![0.0; self.degree + 1];
        for w in breaks.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            for &(x, wt) in &rule {
                let z = mid + half * x;
                let span = self.find_span(z).expect("node inside [0,1]");
                basis_values(&self.knots, span, self.degree, z, &mut vals);
                let scale = wt * half;
                for (r, &vr) in vals.iter().enumerate() {
                    let k = span - self.degree + r;
                    if k >= self.m {
                        continue;
                    }
                    mean[k] += scale * vr;
                    for (c, &vc) in vals.iter().enumerate() {
                        let l = span - self.degree + c;
                        if l < self.m {
                            gram[(k, l)] += scale * vr * vc;
                        }
                    }
                }
            }
        }
        (gram, mean)
    }

    /// Evaluate all exposed functions at every value of a column; rows are
    /// observations, columns are basis functions.
    pub fn evaluate_column(&self, zs: &[f64]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(zs.len(), self.m);
        let mut scratch = vec![0.0; self.degree + 1];
        for (i, &z) in zs.iter().enumerate() {
            let span = self.find_span(z)?;
            basis_values(&self.knots, span, self.degree, z, &mut scratch);
            for (r, &v) in scratch.iter().enumerate() {
                let idx = span - self.degree + r;
                if idx < self.m {
                    out[(i, idx)] = v;
                }
            }
        }
        Ok(out)
    }

    /// Values of the full (unexcluded) family at `z`.
    pub fn eval_full(&self, z: f64) -> Result<DVector<f64>> {
        let span = self.find_span(z)?;
        let mut vals = vec![0.0; self.degree + 1];
        basis_values(&self.knots, span, self.degree, z, &mut vals);
        let mut out = DVector::zeros(self.full_dim);
        for (r, &v) in vals.iter().enumerate() {
            out[span - self.degree + r] = v;
        }
        Ok(out)
    }

    /// Index s of the knot span [t_s, t_{s+1}) containing z; z = 1 maps to the
    /// last non-degenerate span (right-closed convention).
    fn find_span(&self, z: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&z) || !z.is_finite() {
            return Err(Error::OutOfDomain(format!(
                "evaluation point {z} outside [0,1]"
            )));
        }
        if z >= 1.0 {
            return Ok(self.degree + self.interior_knots.len());
        }
        let inside = self.interior_knots.partition_point(|&t| t <= z);
        Ok(self.degree + inside)
    }

    /// Matrix expressing the ν-th derivatives of the full family as linear
    /// combinations of the degree−ν B-spline family over the same knot vector.
    fn derivative_coeffs(&self, nu: usize) -> DMatrix<f64> {
        let p = self.degree;
        let mut c = DMatrix::identity(self.full_dim, self.full_dim);
        for k in 0..nu {
            let q = p - k;
            let n_cur = self.full_dim + k;
            let n_next = n_cur + 1;
            let mut step = DMatrix::zeros(n_cur, n_next);
            for i in 0..n_cur {
                let d1 = self.knots[i + q] - self.knots[i];
                if d1 > 0.0 {
                    step[(i, i)] = q as f64 / d1;
                }
                let d2 = self.knots[i + q + 1] - self.knots[i + 1];
                if d2 > 0.0 {
                    step[(i, i + 1)] = -(q as f64) / d2;
                }
            }
            c *= step;
        }
        c
    }

    /// Penalty matrix with an explicit per-interval node count (the public
    /// entry point picks the smallest exact count).
    fn penalty_with_nodes(&self, nu: usize, n_nodes: usize) -> PenaltyMatrix {
        let coeffs = self.derivative_coeffs(nu);
        let q_low = self.degree - nu;
        let n_low = self.full_dim + nu;
        let rule = gauss_legendre(n_nodes);

        let mut breaks = Vec::with_capacity(self.interior_knots.len() + 2);
        breaks.push(0.0);
        breaks.extend_from_slice(&self.interior_knots);
        breaks.push(1.0);

        let mut omega_full = DMatrix::zeros(self.full_dim, self.full_dim);
        let mut low_vals = vec![0.0; q_low + 1];
        let mut low_full = DVector::zeros(n_low);
        for w in breaks.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            for &(x, wt) in &rule {
                let z = mid + half * x;
                // Gauss nodes are interior, so the span lookup cannot fail.
                let span = self.find_span(z).expect("node inside [0,1]");
                basis_values(&self.knots, span, q_low, z, &mut low_vals);
                low_full.fill(0.0);
                for (r, &v) in low_vals.iter().enumerate() {
                    low_full[span - q_low + r] = v;
                }
                let deriv = &coeffs * &low_full;
                let scale = wt * half;
                for k in 0..self.full_dim {
                    if deriv[k] == 0.0 {
                        continue;
                    }
                    for l in k..self.full_dim {
                        omega_full[(k, l)] += scale * deriv[k] * deriv[l];
                    }
                }
            }
        }
        for k in 0..self.full_dim {
            for l in 0..k {
                omega_full[(k, l)] = omega_full[(l, k)];
            }
        }
        let omega = omega_full.view((0, 0), (self.m, self.m)).into_owned();
        PenaltyMatrix { nu, omega }
    }
}

/// Values of the q+1 B-splines of degree `q` that are nonzero on span `s`,
/// written into `out[0..=q]` (function indices s−q..s). Degenerate supports
/// contribute zero via the 0/0 = 0 convention.
fn basis_values(knots: &[f64], s: usize, q: usize, z: f64, out: &mut [f64]) {
    out[0] = 1.0;
    let mut left = vec![0.0; q + 1];
    let mut right = vec![0.0; q + 1];
    for j in 1..=q {
        left[j] = z - knots[s + 1 - j];
        right[j] = knots[s + j] - z;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let tmp = if denom != 0.0 { out[r] / denom } else { 0.0 };
            out[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        out[j] = saved;
    }
}

/// Interior knots at the quantiles k/(n_interior+1) of a data column,
/// using linear interpolation between order statistics.
fn empirical_quantile_knots(col: &[f64], n_interior: usize) -> Vec<f64> {
    let mut sorted = col.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    (1..=n_interior)
        .map(|k| {
            let q = k as f64 / (n_interior as f64 + 1.0);
            let h = q * (n as f64 - 1.0);
            let lo = h.floor() as usize;
            let frac = h - lo as f64;
            if lo + 1 < n {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            } else {
                sorted[lo]
            }
        })
        .collect()
}

/// Make a raw quantile sequence strictly increasing inside (0,1), nudging
/// offending knots to the midpoint of their neighbors (boundaries count as
/// neighbors). Returns the repaired knots and the indices that moved.
fn repair_knots(raw: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    let k = raw.len();
    let mut knots = raw.to_vec();
    let mut nudged = std::collections::BTreeSet::new();
    for _ in 0..k + 2 {
        let mut changed = false;
        for i in 0..k {
            let lo = if i == 0 { 0.0 } else { knots[i - 1] };
            let hi = if i + 1 < k {
                knots[i + 1].min(1.0)
            } else {
                1.0
            };
            if !(knots[i] > lo && knots[i] < hi) {
                let hi_eff = if hi > lo { hi } else { 1.0 };
                knots[i] = 0.5 * (lo + hi_eff);
                nudged.insert(i);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let ok = knots.windows(2).all(|w| w[0] < w[1]) && knots.iter().all(|&t| t > 0.0 && t < 1.0);
    if !ok {
        return Err(Error::InvalidArgument(
            "could not separate tied quantile knots inside (0,1)".into(),
        ));
    }
    Ok((knots, nudged.into_iter().collect()))
}

/// Gauss–Legendre nodes and weights on [−1,1]; exact for polynomials of
/// degree ≤ 2q−1. Nodes are found by Newton iteration from the Chebyshev
/// initial guess.
fn gauss_legendre(q: usize) -> Vec<(f64, f64)> {
    assert!(q >= 1);
    let mut rule = vec![(0.0, 0.0); q];
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            dp = if q == 1 {
                1.0
            } else {
                q as f64 * (x * p1 - p0) / (x * x - 1.0)
            };
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule[i] = (-x, w);
        rule[q - 1 - i] = (x, w);
    }
    rule
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic_even() -> SplineBasis {
        make_bspline_basis(3, 4, Placement::Even, None).unwrap()
    }

    #[test]
    fn even_knot_layout() {
        let b = cubic_even();
        assert_eq!(b.m(), 7);
        assert_eq!(b.full_dim(), 8);
        let expected = [0.2, 0.4, 0.6, 0.8];
        for (a, e) in b.interior_knots().iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn smallest_legal_basis_is_hat_complement() {
        let b = make_bspline_basis(1, 0, Placement::Even, None).unwrap();
        assert_eq!(b.m(), 1);
        // The surviving degree-1 function on [0,1] is 1−z.
        for z in [0.0, 0.3, 0.7, 1.0] {
            let v = eval_basis(&b, z).unwrap();
            assert!((v[0] - (1.0 - z)).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_of_unity_on_grid() {
        let b = cubic_even();
        for i in 0..=1000 {
            let z = i as f64 / 1000.0;
            let full = b.eval_full(z).unwrap();
            assert!((full.sum() - 1.0).abs() <= 1e-12, "z={z}");
            assert!(full.iter().all(|&v| (-1e-15..=1.0 + 1e-12).contains(&v)));
        }
    }

    #[test]
    fn right_closed_at_one() {
        let b = cubic_even();
        let full = b.eval_full(1.0).unwrap();
        assert!((full[b.full_dim() - 1] - 1.0).abs() < 1e-15);
        assert!((full.sum() - 1.0).abs() < 1e-15);
        // The exposed basis therefore vanishes at 1 for this family.
        let v = eval_basis(&b, 1.0).unwrap();
        assert!(v.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn out_of_domain_rejected() {
        let b = cubic_even();
        assert!(eval_basis(&b, -0.001).is_err());
        assert!(eval_basis(&b, 1.001).is_err());
        assert!(eval_basis(&b, f64::NAN).is_err());
    }

    #[test]
    fn penalty_kills_linear_functions() {
        let b = cubic_even();
        let pen = sobolev_penalty_matrix(&b, 2).unwrap();
        // Functions 1 and z, written in the full family (coefficients 1 and the
        // Greville abscissae), projected into the exposed span by subtracting
        // the multiple of the constant that zeroes the excluded coordinate.
        let greville = b.greville_abscissae();
        for full_coef in [vec![1.0; b.full_dim()], greville] {
            let c_last = full_coef[b.full_dim() - 1];
            let theta = DVector::from_fn(b.m(), |i, _| full_coef[i] - c_last);
            let q = (theta.transpose() * &pen.omega * &theta)[(0, 0)];
            assert!(q.abs() <= 1e-10, "quadratic form {q}");
        }
    }

    #[test]
    fn penalty_nullspace_dimension_is_one() {
        // Within the exposed span the only curvature-free functions are the
        // multiples of z−1, so exactly one eigenvalue of Ω vanishes.
        let b = cubic_even();
        let pen = sobolev_penalty_matrix(&b, 2).unwrap();
        let mut eigs: Vec<f64> = pen
            .omega
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(eigs[0].abs() <= 1e-10);
        assert!(eigs[1] > 1e-6, "second eigenvalue {}", eigs[1]);
        assert!(eigs.iter().all(|&e| e >= -1e-10));
    }

    #[test]
    fn penalty_matches_analytic_cubic() {
        // Basis with no interior knots spans all cubics; g(z) = z³ − 1 lies in
        // the exposed span with Bernstein-form coefficients (−1,−1,−1), and
        // ∫₀¹ (g″)² = ∫₀¹ 36 z² dz = 12.
        let b = make_bspline_basis(3, 0, Placement::Even, None).unwrap();
        let pen = sobolev_penalty_matrix(&b, 2).unwrap();
        let theta = DVector::from_vec(vec![-1.0, -1.0, -1.0]);
        let q = (theta.transpose() * &pen.omega * &theta)[(0, 0)];
        assert!((q - 12.0).abs() < 1e-10, "got {q}");
    }

    #[test]
    fn penalty_psd_on_random_directions() {
        let b = cubic_even();
        let pen = sobolev_penalty_matrix(&b, 2).unwrap();
        // Deterministic pseudo-random directions are enough here.
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..100 {
            let theta = DVector::from_fn(b.m(), |_, _| next());
            let q = (theta.transpose() * &pen.omega * &theta)[(0, 0)];
            assert!(q >= -1e-12);
        }
    }

    #[test]
    fn penalty_invariant_to_extra_nodes() {
        let b = cubic_even();
        let exact = b.penalty_with_nodes(2, 2);
        for extra in [3, 5, 8] {
            let more = b.penalty_with_nodes(2, extra);
            let diff = (&more.omega - &exact.omega).abs().max();
            // Extra nodes change only the floating-point summation order.
            assert!(diff <= 1e-9, "nodes={extra} diff={diff}");
        }
    }

    #[test]
    fn penalty_order_must_not_exceed_degree() {
        let b = cubic_even();
        assert!(sobolev_penalty_matrix(&b, 4).is_err());
        assert!(sobolev_penalty_matrix(&b, 0).is_err());
        assert!(sobolev_penalty_matrix(&b, 3).is_ok());
    }

    #[test]
    fn quantile_placement_follows_data() {
        let col: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let b = make_bspline_basis(3, 3, Placement::Quantile, Some(&col)).unwrap();
        let expected = [0.25, 0.5, 0.75];
        for (a, e) in b.interior_knots().iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!(b.nudged_knots().is_empty());
    }

    #[test]
    fn quantile_ties_are_nudged_and_reported() {
        let col = vec![0.5; 40];
        let b = make_bspline_basis(3, 3, Placement::Quantile, Some(&col)).unwrap();
        assert!(!b.nudged_knots().is_empty());
        let k = b.interior_knots();
        assert!(k.windows(2).all(|w| w[0] < w[1]));
        assert!(k.iter().all(|&t| t > 0.0 && t < 1.0));
    }

    #[test]
    fn invalid_knots_rejected() {
        assert!(SplineBasis::from_parts(3, vec![0.4, 0.2]).is_err());
        assert!(SplineBasis::from_parts(3, vec![0.0, 0.5]).is_err());
        assert!(SplineBasis::from_parts(3, vec![0.5, 1.0]).is_err());
        assert!(SplineBasis::from_parts(0, vec![]).is_err());
    }

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        for q in 1..=8 {
            let rule = gauss_legendre(q);
            for pow in 0..=(2 * q - 1) {
                let approx: f64 = rule.iter().map(|&(x, w)| w * x.powi(pow as i32)).sum();
                let exact = if pow % 2 == 0 {
                    2.0 / (pow as f64 + 1.0)
                } else {
                    0.0
                };
                assert!((approx - exact).abs() < 1e-13, "q={q} pow={pow}");
            }
        }
    }
}
