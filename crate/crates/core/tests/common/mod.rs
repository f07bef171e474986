//! Shared oracles for the integration suites: an independent long-run
//! proximal-gradient group-Lasso solver, a naive recursive B-spline
//! evaluator, and a generator of small seeded problem instances.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use samfit::basis::{make_bspline_basis, SplineBasis};
use samfit::data::{build_centered_design, CenteredDesign, Dataset};

/// A small seeded instance: data, its whitened design, and a penalty level.
pub struct TinyInstance {
    pub dataset: Dataset,
    pub design: CenteredDesign,
    pub basis: SplineBasis,
    pub lambda1: f64,
}

/// Deterministic small problems spanning n in 20..=40, d in 3..=5 and
/// basis dimension m in {2, 3}, with the penalty placed at a seed-dependent
/// fraction of the all-zero threshold.
pub fn tiny_instances(count: usize) -> Vec<TinyInstance> {
    (0..count as u64)
        .map(|seed| {
            let mut rng = ChaCha12Rng::seed_from_u64(0x7A57_1E5E ^ seed);
            let n = 20 + (seed as usize * 7) % 21;
            let d = 3 + (seed as usize) % 3;
            let (degree, n_interior) = if seed % 2 == 0 { (2, 0) } else { (2, 1) };
            let z = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>());
            // Response with signal in the first two covariates plus noise, so
            // both active and inactive groups appear at moderate penalties.
            let y = DVector::from_fn(n, |i, _| {
                let z0 = z[(i, 0)];
                let z1 = z[(i, 1)];
                (2.0 * std::f64::consts::PI * z0).sin()
                    + (2.0 * z1 - 1.0).powi(2)
                    + 0.5 * rng.random::<f64>()
            });
            let dataset = Dataset::new(y, z).unwrap();
            let basis =
                make_bspline_basis(degree, n_interior, samfit::basis::Placement::Even, None)
                    .unwrap();
            let design = build_centered_design(&dataset, &basis).unwrap();
            let lam_max = samfit::glasso::lambda_max(&design, &dataset.y).unwrap();
            let fraction = [0.3, 0.15, 0.5, 0.08][seed as usize % 4];
            TinyInstance {
                dataset,
                design,
                basis,
                lambda1: fraction * lam_max,
            }
        })
        .collect()
}

/// Group-Lasso solution in whitened coordinates from a long proximal-gradient
/// run: minimizes (1/2n)‖y₀ − Σ_j W_j γ_j‖² + λ̃ Σ_j ‖γ_j‖ with fixed step
/// 1/L, L the largest eigenvalue of the stacked Gram.
pub struct ProxSolution {
    pub gamma: Vec<DVector<f64>>,
    pub objective: f64,
}

/// Runs `iterations` proximal-gradient steps on the whitened problem and
/// returns the iterate with its objective.
pub fn prox_gradient_oracle(
    design: &CenteredDesign,
    y: &DVector<f64>,
    lambda1: f64,
    iterations: usize,
) -> ProxSolution {
    let n = design.n();
    let d = design.d();
    let m = design.m();
    let nf = n as f64;
    let lambda_tilde = (m as f64).sqrt() * lambda1 / nf;
    let y0 = DVector::from_fn(n, |i, _| y[i] - design.y_bar());

    // Stack the whitened blocks once; precompute Q = WᵀW/n and b = Wᵀy₀/n so
    // each iteration is a dense (d·m)² matvec instead of an n-row product.
    let p = d * m;
    let mut w = DMatrix::zeros(n, p);
    for j in 0..d {
        w.view_mut((0, j * m), (n, m)).copy_from(design.whitened(j));
    }
    let q = w.transpose() * &w / nf;
    let b = w.transpose() * &y0 / nf;
    let y0_sq = y0.norm_squared();

    let lip = q
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let step = 1.0 / lip;

    let mut gamma = DVector::<f64>::zeros(p);
    for _ in 0..iterations {
        // Gradient of the smooth part: Qγ − b.
        let grad = &q * &gamma - &b;
        let mut next = &gamma - step * grad;
        // Blockwise soft threshold at level step·λ̃.
        for j in 0..d {
            let mut block = next.rows_mut(j * m, m);
            let norm = block.norm();
            let thr = step * lambda_tilde;
            if norm <= thr {
                block.fill(0.0);
            } else {
                block *= 1.0 - thr / norm;
            }
        }
        gamma = next;
    }

    // Objective from the precomputed quadratic form:
    // (1/2n)‖y₀‖² − bᵀγ + (1/2)γᵀQγ + λ̃ Σ‖γ_j‖.
    let mut penalty = 0.0;
    let mut blocks = Vec::with_capacity(d);
    for j in 0..d {
        let g = DVector::from_column_slice(gamma.rows(j * m, m).as_slice());
        penalty += g.norm();
        blocks.push(g);
    }
    let objective = y0_sq / (2.0 * nf) - b.dot(&gamma)
        + 0.5 * (&q * &gamma).dot(&gamma)
        + lambda_tilde * penalty;
    ProxSolution {
        gamma: blocks,
        objective,
    }
}

/// Textbook recursive B-spline evaluation on an open knot vector: order-1
/// indicators refined by the two-term recurrence, with the right boundary
/// closed so bases sum to one on all of [a, b].
pub fn naive_bspline_value(knots: &[f64], degree: usize, i: usize, z: f64) -> f64 {
    if degree == 0 {
        let last_interval = knots[i + 1] >= knots[knots.len() - 1];
        let in_half_open = knots[i] <= z && z < knots[i + 1];
        let at_closed_end =
            last_interval && (z - knots[i + 1]).abs() == 0.0 && knots[i] < knots[i + 1];
        return if in_half_open || at_closed_end {
            1.0
        } else {
            0.0
        };
    }
    let mut value = 0.0;
    let denom_left = knots[i + degree] - knots[i];
    if denom_left > 0.0 {
        value += (z - knots[i]) / denom_left * naive_bspline_value(knots, degree - 1, i, z);
    }
    let denom_right = knots[i + degree + 1] - knots[i + 1];
    if denom_right > 0.0 {
        value += (knots[i + degree + 1] - z) / denom_right
            * naive_bspline_value(knots, degree - 1, i + 1, z);
    }
    value
}

/// Full open knot vector for a basis on [0, 1]: repeated boundary knots
/// around the interior sequence.
pub fn open_knot_vector(degree: usize, interior: &[f64]) -> Vec<f64> {
    let mut knots = vec![0.0; degree + 1];
    knots.extend_from_slice(interior);
    knots.extend(std::iter::repeat(1.0).take(degree + 1));
    knots
}

/// Maximum absolute partial-derivative violation of the group-Lasso
/// optimality conditions at whitened coefficients `gamma`.
pub fn kkt_residual_of_gamma(
    design: &CenteredDesign,
    y: &DVector<f64>,
    lambda1: f64,
    gamma: &[DVector<f64>],
) -> f64 {
    let n = design.n();
    let nf = n as f64;
    let m = design.m();
    let lambda_tilde = (m as f64).sqrt() * lambda1 / nf;
    let mut residual = DVector::from_fn(n, |i, _| y[i] - design.y_bar());
    for (j, g) in gamma.iter().enumerate() {
        if g.iter().any(|&v| v != 0.0) {
            residual -= design.whitened(j) * g;
        }
    }
    let mut worst = 0.0_f64;
    for (j, g) in gamma.iter().enumerate() {
        let score = design.whitened(j).transpose() * &residual / nf;
        let norm = g.norm();
        let violation = if norm > 0.0 {
            (&score - lambda_tilde * g / norm).norm()
        } else {
            (score.norm() - lambda_tilde).max(0.0)
        };
        worst = worst.max(violation);
    }
    worst
}

/// Uniform covariates with a held-out smooth response, for tests that need a
/// plain regression dataset rather than the simulation generator.
pub fn synthetic_dataset(seed: u64, n: usize, d: usize) -> Dataset {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>());
    let y = DVector::from_fn(n, |i, _| {
        let z0 = z[(i, 0)];
        let z1 = z[(i, 1 % d)];
        1.5 + (2.0 * std::f64::consts::PI * z0).sin()
            + (2.0 * z1 - 1.0).powi(2)
            + 0.3 * (rng.random::<f64>() - 0.5)
    });
    Dataset::new(y, z).unwrap()
}
