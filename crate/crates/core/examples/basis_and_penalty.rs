//! Build a centered B-spline basis, evaluate it, and inspect the roughness
//! penalty matrix: the full family sums to one everywhere, the reduced
//! family drops one function to stay identifiable next to an intercept, and
//! linear functions cost nothing under the second-order penalty.
//!
//! ```bash
//! cargo run --example basis_and_penalty
//! ```

use nalgebra::DVector;
use samfit::basis::{eval_basis, make_bspline_basis, sobolev_penalty_matrix, Placement};

fn main() -> samfit::Result<()> {
    // Cubic splines with four evenly spaced interior knots: an eight-member
    // family, of which seven are exposed after dropping the last one.
    let basis = make_bspline_basis(3, 4, Placement::Even, None)?;
    println!(
        "degree {}, interior knots {:?}",
        basis.degree(),
        basis.interior_knots()
    );
    println!(
        "full family size {}, exposed size {}",
        basis.full_dim(),
        basis.m()
    );

    for z in [0.0, 0.37, 0.5, 0.99] {
        let full_sum: f64 = basis.eval_full(z)?.sum();
        let reduced = eval_basis(&basis, z)?;
        println!(
            "z = {z:<5} full-family sum = {full_sum:.12}  exposed values = {:?}",
            reduced
                .iter()
                .map(|v| (v * 1e3).round() / 1e3)
                .collect::<Vec<_>>()
        );
    }

    // The second-order penalty integrates squared second derivatives, so any
    // linear function in the exposed span has zero cost. The greville
    // abscissae give its coefficients directly.
    let penalty = sobolev_penalty_matrix(&basis, 2)?;
    let greville = basis.greville_abscissae();
    let linear = DVector::from_fn(basis.m(), |k, _| greville[k] - 1.0);
    let cost = (linear.transpose() * &penalty.omega * &linear)[(0, 0)];
    println!("roughness of the linear function z - 1: {cost:.2e}");

    // A wiggly coefficient vector pays for its curvature.
    let wiggly = DVector::from_fn(basis.m(), |k, _| if k % 2 == 0 { 1.0 } else { -1.0 });
    let wiggly_cost = (wiggly.transpose() * &penalty.omega * &wiggly)[(0, 0)];
    println!("roughness of an alternating coefficient vector: {wiggly_cost:.3}");

    // First-order penalties only charge for slope, so the same linear
    // function now has cost equal to its squared slope integrated over [0,1].
    let gradient = sobolev_penalty_matrix(&basis, 1)?;
    let slope_cost = (linear.transpose() * &gradient.omega * &linear)[(0, 0)];
    println!("slope energy of z - 1 under the first-order penalty: {slope_cost:.6}");
    Ok(())
}
