//! The double-penalization competitor: one stage blending the selection
//! penalty with a roughness term inside each group norm,
//! λ̃₁·Σ_j √(β_jᵀΣ̂_jβ_j + λ̃₂·β_jᵀΩβ_j). A single fit is shown first,
//! then the fixed 4×4 tuning grid is scored against the known truth to
//! expose the sparsity/error trade-off.
//!
//! ```bash
//! cargo run --example double_penalty_blend
//! ```

use samfit::basis::{make_bspline_basis, sobolev_penalty_matrix, Placement};
use samfit::data::{build_centered_design, generate, ModelId, SimulationScenario};
use samfit::glasso::FitOptions;
use samfit::mgb::{fit_mgb, grid_eval, lambda1_tilde_max};

fn main() -> samfit::Result<()> {
    let scenario = SimulationScenario {
        model_id: ModelId::Model1,
        n: 400,
        d: 40,
        t: 0.0,
        noise_sd: 1.3,
        seed: 99,
    };
    let (data, truth) = generate(&scenario)?;
    let basis = make_bspline_basis(3, 4, Placement::Even, None)?;
    let design = build_centered_design(&data, &basis)?;
    let penalty = sobolev_penalty_matrix(&basis, 2)?;

    // A single fit at one tuning pair.
    let lambda2_tilde = 0.05;
    let top = lambda1_tilde_max(&design, &penalty, &data.y, lambda2_tilde)?;
    let fit = fit_mgb(
        &design,
        &penalty,
        &data.y,
        0.3 * top,
        lambda2_tilde,
        &FitOptions::default(),
    )?;
    println!(
        "single fit at lambda1_tilde = {:.5} (30% of its threshold {top:.5}):",
        fit.lambda1_tilde
    );
    println!("  selected {:?}", fit.coefficients.active_set);
    println!("  true set {:?}\n", truth.active_set);

    // The full grid, scored against the truth. Larger lambda1 factors give
    // sparser fits; the roughness weight trades error for smoothness.
    let rows = grid_eval(&design, &penalty, &data.y, &truth, &FitOptions::default())?;
    println!(
        "{:>8} {:>8} {:>6} {:>6} {:>6} {:>10}",
        "factor", "l2~", "nv", "fp", "fn", "train err"
    );
    for row in &rows {
        println!(
            "{:>8} {:>8} {:>6} {:>6} {:>6} {:>10.4}",
            row.lambda1_factor,
            row.lambda2_tilde,
            row.n_variables,
            row.false_positives,
            row.false_negatives,
            row.squared_error
        );
    }
    let ideal = rows
        .iter()
        .min_by(|a, b| a.squared_error.total_cmp(&b.squared_error))
        .expect("grid is non-empty");
    println!(
        "\nbest training error: factor {} at lambda2_tilde {} ({} variables)",
        ideal.lambda1_factor, ideal.lambda2_tilde, ideal.n_variables
    );
    Ok(())
}
