//! Walk the selection penalty from its all-zero threshold downward and
//! watch the active set grow: the path is warm-started, each point reports
//! an AIC score, and the AIC minimum marks the returned fit.
//!
//! ```bash
//! cargo run --example regularization_path
//! ```

use samfit::basis::{make_bspline_basis, Placement};
use samfit::data::{build_centered_design, generate, ModelId, SimulationScenario};
use samfit::glasso::{fit, fit_path_aic, lambda_max, FitOptions, PathGrid};

fn main() -> samfit::Result<()> {
    let scenario = SimulationScenario {
        model_id: ModelId::Model1,
        n: 250,
        d: 12,
        t: 0.0,
        noise_sd: 1.3,
        seed: 77,
    };
    let (data, truth) = generate(&scenario)?;

    let basis = make_bspline_basis(3, 4, Placement::Even, None)?;
    let design = build_centered_design(&data, &basis)?;

    // The threshold above which the selection fit is exactly empty.
    let top = lambda_max(&design, &data.y)?;
    println!("all-zero threshold lambda_max = {top:.5}");
    let at_top = fit(&design, &data.y, top, FitOptions::default())?;
    println!(
        "fit at the threshold selects {:?}\n",
        at_top.coefficients.active_set
    );

    // A 20-point geometric path down to 2% of the threshold.
    let grid = PathGrid {
        n_lambda: 20,
        ratio: 0.02,
    };
    let (best, path) = fit_path_aic(&design, &data.y, &grid)?;

    println!("{:>10}  {:>8}  {:>12}", "lambda1", "active", "AIC");
    for point in &path {
        let marker = if (point.lambda1 - best.lambda1).abs() < 1e-12 {
            "  <- chosen"
        } else {
            ""
        };
        println!(
            "{:>10.5}  {:>8}  {:>12.2}{marker}",
            point.lambda1, point.n_active, point.aic
        );
    }
    println!(
        "\nchosen support {:?} vs truth {:?}",
        best.coefficients.active_set, truth.active_set
    );
    Ok(())
}
