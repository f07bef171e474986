//! Two-step estimation of high-dimensional sparse additive models.
//!
//! The model is y = c + Σ_j g_j(z_j) + ε with covariates in [0,1] and only a
//! few nonzero component functions among many candidates. Estimation runs in
//! two steps:
//!
//! 1. **Selection** ([`glasso`]): each component is expanded in a centered
//!    B-spline basis ([`basis`], [`data`]) and a group Lasso over the blocks
//!    picks the active components, with the penalty level chosen by AIC along
//!    a warm-started path.
//! 2. **Refitting** ([`refit`]): on the selected set, a richer basis is fit
//!    by Sobolev-penalized least squares with the smoothing level chosen by
//!    generalized cross-validation (setting the penalty to zero gives the
//!    unpenalized sieve refit).
//!
//! Alongside the main estimator the crate ships an adaptive (two-stage
//! reweighted) group Lasso, a double-penalization competitor that blends the
//! selection and smoothing penalties in one stage ([`mgb`]), design-quality
//! diagnostics ([`diagnostics`]), and a deterministic Monte Carlo harness
//! ([`harness`]) that reproduces the accompanying simulation study at
//! configurable scale.
//!
//! ```
//! use samfit::basis::{make_bspline_basis, Placement};
//! use samfit::data::{build_centered_design, generate, ModelId, SimulationScenario};
//! use samfit::glasso::{fit_path_aic, PathGrid};
//! use samfit::refit::{fit_penalized_gcv, BasisSpec, GcvGrid};
//!
//! let scenario = SimulationScenario {
//!     model_id: ModelId::Model1,
//!     n: 120,
//!     d: 10,
//!     t: 0.0,
//!     noise_sd: 0.7,
//!     seed: 1,
//! };
//! let (data, _truth) = generate(&scenario)?;
//!
//! // Step 1: group-Lasso selection with AIC-tuned penalty.
//! let basis = make_bspline_basis(3, 4, Placement::Even, None)?;
//! let design = build_centered_design(&data, &basis)?;
//! let (selected, _path) = fit_path_aic(&design, &data.y, &PathGrid::default())?;
//!
//! // Step 2: penalized refit on the selected components.
//! let refit = fit_penalized_gcv(
//!     &data,
//!     &selected.coefficients.active_set,
//!     &BasisSpec::second_step_default(),
//!     &GcvGrid::default(),
//! )?;
//! println!("active set: {:?}", refit.active_set);
//! # Ok::<(), samfit::Error>(())
//! ```
//!
//! The `examples/` directory walks through every major capability; the
//! `samfit` binary wraps fitting, simulation, diagnostics, and prediction
//! for CSV files.

pub mod basis;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod glasso;
mod groupcd;
pub mod harness;
pub mod linalg;
pub mod mgb;
pub mod refit;

pub use error::{Error, Result};
