//! Data ingestion, synthetic additive designs, and the centered blockwise
//! spline design consumed by the first-step solvers.
//!
//! The generator reproduces a family of additive signals over covariates
//! z_{ij} = (w_{ij} + t·u_i)/(1 + t) with u_i, w_{ij} i.i.d. uniform on [0,1]:
//! the scalar t ≥ 0 controls the common-factor correlation between columns
//! (t = 1 gives population correlation 1/2). All randomness flows through a
//! counter-derived per-replication seed so parallel schedules cannot change
//! results.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use crate::basis::SplineBasis;
use crate::error::{Error, Result};
use crate::linalg::{sym_sqrt_and_pinv, EIGEN_CLIP};

/// A regression sample: response `y` and covariates `z` with entries in [0,1].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub y: DVector<f64>,
    /// n×d covariate matrix, all entries in [0,1].
    pub z: DMatrix<f64>,
    pub n: usize,
    pub d: usize,
}

impl Dataset {
    /// Validate and wrap a response/covariate pair.
    pub fn new(y: DVector<f64>, z: DMatrix<f64>) -> Result<Self> {
        let (n, d) = z.shape();
        if y.len() != n {
            return Err(Error::InvalidArgument(format!(
                "response length {} does not match {} covariate rows",
                y.len(),
                n
            )));
        }
        if n < 2 || d < 1 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 rows and 1 covariate, got n={n}, d={d}"
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "response contains non-finite values".into(),
            ));
        }
        if z.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "covariates must lie in [0,1]; rescale before constructing a Dataset".into(),
            ));
        }
        Ok(Dataset { y, z, n, d })
    }
}

/// Which synthetic signal to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    /// Four active components with amplitudes (5, 3, 4, 6).
    Model1,
    /// Eight active components, the four-shape pattern repeated with
    /// amplitudes (3.5, 2.1, 2.8, 4.2).
    Model2,
}

fn default_noise_sd() -> f64 {
    1.74f64.sqrt()
}

/// Full description of one synthetic data draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationScenario {
    pub model_id: ModelId,
    pub n: usize,
    pub d: usize,
    /// Correlation parameter t ≥ 0; 0 gives independent columns.
    pub t: f64,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    pub seed: u64,
}

impl SimulationScenario {
    /// Check the cross-field invariants.
    pub fn validate(&self) -> Result<()> {
        let min_d = match self.model_id {
            ModelId::Model1 => 4,
            ModelId::Model2 => 8,
        };
        if self.d < min_d {
            return Err(Error::InvalidArgument(format!(
                "{:?} requires d >= {min_d}, got {}",
                self.model_id, self.d
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "need n >= 2, got {}",
                self.n
            )));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "t must be finite and >= 0, got {}",
                self.t
            )));
        }
        if !(self.noise_sd > 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise_sd must be finite and > 0, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

/// Shape of one univariate component of the synthetic signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentShape {
    /// z itself.
    Identity,
    /// (2z − 1)², a symmetric bowl.
    CenteredQuadratic,
    /// sin(2πz)/(2 − sin(2πz)), an asymmetric wave.
    SineRatio,
    /// 0.1·sin + 0.2·cos + 0.3·sin² + 0.4·cos³ + 0.5·sin⁴, all at 2πz.
    HarmonicMix,
}

impl ComponentShape {
    /// Evaluate the shape at z.
    pub fn eval(&self, z: f64) -> f64 {
        let a = 2.0 * PI * z;
        match self {
            ComponentShape::Identity => z,
            ComponentShape::CenteredQuadratic => (2.0 * z - 1.0).powi(2),
            ComponentShape::SineRatio => a.sin() / (2.0 - a.sin()),
            ComponentShape::HarmonicMix => {
                let (s, c) = (a.sin(), a.cos());
                0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c * c * c + 0.5 * s * s * s * s
            }
        }
    }
}

/// One additive term: `coefficient · shape(z[:, column])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentFunction {
    pub column: usize,
    pub coefficient: f64,
    pub shape: ComponentShape,
}

/// Ground truth attached to a generated dataset.
#[derive(Debug, Clone)]
pub struct TrueModel {
    /// Indices (0-based) of the active covariates.
    pub active_set: Vec<usize>,
    pub component_functions: Vec<ComponentFunction>,
    /// Noiseless signal at the generated design points.
    pub mu: DVector<f64>,
}

fn model_components(model_id: ModelId) -> Vec<ComponentFunction> {
    use ComponentShape::*;
    let pattern = [Identity, CenteredQuadratic, SineRatio, HarmonicMix];
    match model_id {
        ModelId::Model1 => [5.0, 3.0, 4.0, 6.0]
            .iter()
            .zip(pattern)
            .enumerate()
            .map(|(j, (&c, shape))| ComponentFunction {
                column: j,
                coefficient: c,
                shape,
            })
            .collect(),
        ModelId::Model2 => [3.5, 2.1, 2.8, 4.2, 3.5, 2.1, 2.8, 4.2]
            .iter()
            .zip(pattern.iter().cycle())
            .enumerate()
            .map(|(j, (&c, &shape))| ComponentFunction {
                column: j,
                coefficient: c,
                shape,
            })
            .collect(),
    }
}

/// The `replication`-th derived seed of a master seed: one output of the
/// SplitMix64 sequence started at the master. Distinct replications get
/// well-separated, platform-independent streams.
pub fn derive_seed(master: u64, replication: u64) -> u64 {
    let mut x = master.wrapping_add((replication + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Draw one dataset and its ground truth. Deterministic in the seed: the draw
/// order is fixed (common factor u, then w row by row, then noise), and the
/// common factor is drawn even at t = 0 so varying t does not reshuffle w.
pub fn generate(scenario: &SimulationScenario) -> Result<(Dataset, TrueModel)> {
    scenario.validate()?;
    let (n, d, t) = (scenario.n, scenario.d, scenario.t);
    let mut rng = ChaCha12Rng::seed_from_u64(scenario.seed);
    let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut z = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            let w: f64 = rng.random();
            z[(i, j)] = (w + t * u[i]) / (1.0 + t);
        }
    }
    let components = model_components(scenario.model_id);
    let mu = DVector::from_fn(n, |i, _| {
        components
            .iter()
            .map(|c| c.coefficient * c.shape.eval(z[(i, c.column)]))
            .sum()
    });
    let y = DVector::from_fn(n, |i, _| {
        let eps: f64 = rng.sample(StandardNormal);
        mu[i] + scenario.noise_sd * eps
    });
    let active_set = components.iter().map(|c| c.column).collect();
    let dataset = Dataset::new(y, z)?;
    Ok((
        dataset,
        TrueModel {
            active_set,
            component_functions: components,
            mu,
        },
    ))
}

/// Affine per-column maps taking raw covariates onto [0,1]; stored with a
/// model so predictions can be made on raw-scale inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleMap {
    /// Column minima on the training data.
    pub mins: Vec<f64>,
    /// Column ranges (max − min); constant columns store 1 so the map stays
    /// defined (their training values land on 0).
    pub spans: Vec<f64>,
}

impl RescaleMap {
    /// Apply the stored maps columnwise: (v − min_j)/span_j.
    pub fn apply(&self, z_raw: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z_raw.ncols() != self.mins.len() {
            return Err(Error::InvalidArgument(format!(
                "rescale map covers {} columns but input has {}",
                self.mins.len(),
                z_raw.ncols()
            )));
        }
        Ok(DMatrix::from_fn(z_raw.nrows(), z_raw.ncols(), |i, j| {
            (z_raw[(i, j)] - self.mins[j]) / self.spans[j]
        }))
    }
}

/// How the response column of a CSV file is identified.
#[derive(Debug, Clone)]
pub enum ResponseColumn<'a> {
    Name(&'a str),
    Index(usize),
}

impl<'a> ResponseColumn<'a> {
    /// Interpret a CLI-style string: a name if it matches nothing numeric,
    /// otherwise a 0-based column index.
    pub fn parse(s: &'a str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s),
        }
    }
}

/// Load a CSV file (UTF-8, comma-separated, optional header row) into a
/// Dataset, extracting the response column by name or 0-based index.
///
/// Covariates must already lie in [0,1] unless `rescale` is set, in which case
/// each covariate column is min–max scaled onto [0,1] and the maps returned
/// for later prediction. Non-numeric or non-finite cells are rejected with
/// their location.
pub fn load_csv(
    path: &Path,
    response: ResponseColumn<'_>,
    rescale: bool,
) -> Result<(Dataset, Option<RescaleMap>)> {
    let loc = |reason: String| Error::Load {
        path: path.display().to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| loc(e.to_string()))?;
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        rows.push(rec.map_err(|e| loc(e.to_string()))?);
    }
    if rows.is_empty() {
        return Err(loc("file contains no rows".into()));
    }
    let first_is_numeric = rows[0].iter().all(|c| c.trim().parse::<f64>().is_ok());
    let (header, first_data_row) = if first_is_numeric {
        (None, 0)
    } else {
        (Some(&rows[0]), 1)
    };
    if rows.len() == first_data_row {
        return Err(loc("file contains a header but no data rows".into()));
    }
    let ncols = rows[first_data_row].len();
    if ncols < 2 {
        return Err(loc(
            "need at least two columns (response plus one covariate)".into(),
        ));
    }

    let response_idx = match response {
        ResponseColumn::Index(i) => {
            if i >= ncols {
                return Err(loc(format!(
                    "response index {i} out of range for {ncols} columns"
                )));
            }
            i
        }
        ResponseColumn::Name(name) => match header {
            Some(h) => h
                .iter()
                .position(|c| c.trim() == name)
                .ok_or_else(|| loc(format!("response column '{name}' not found in header")))?,
            None => {
                return Err(loc(format!(
                    "file has no header row; select the response by index, not by name '{name}'"
                )))
            }
        },
    };
    let col_label = |j: usize| -> String {
        match header {
            Some(h) => format!("'{}'", h.get(j).unwrap_or("").trim()),
            None => format!("{j}"),
        }
    };

    let n = rows.len() - first_data_row;
    let d = ncols - 1;
    let mut y = DVector::zeros(n);
    let mut z = DMatrix::zeros(n, d);
    for (i, row) in rows[first_data_row..].iter().enumerate() {
        if row.len() != ncols {
            return Err(loc(format!(
                "row {} has {} fields, expected {ncols}",
                first_data_row + i + 1,
                row.len()
            )));
        }
        let mut k = 0;
        for (j, cell) in row.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                loc(format!(
                    "non-numeric value '{}' at row {}, column {}",
                    cell.trim(),
                    first_data_row + i + 1,
                    col_label(j)
                ))
            })?;
            if !v.is_finite() {
                return Err(loc(format!(
                    "non-finite value at row {}, column {}",
                    first_data_row + i + 1,
                    col_label(j)
                )));
            }
            if j == response_idx {
                y[i] = v;
            } else {
                z[(i, k)] = v;
                k += 1;
            }
        }
    }

    let covariate_label = |k: usize| -> String {
        // k-th covariate in file order, skipping the response column.
        let j = if k < response_idx { k } else { k + 1 };
        col_label(j)
    };
    let map = if rescale {
        let mut mins = Vec::with_capacity(d);
        let mut spans = Vec::with_capacity(d);
        for k in 0..d {
            let col = z.column(k);
            let min = col.min();
            let max = col.max();
            let span = if max > min { max - min } else { 1.0 };
            for i in 0..n {
                z[(i, k)] = (z[(i, k)] - min) / span;
            }
            mins.push(min);
            spans.push(span);
        }
        Some(RescaleMap { mins, spans })
    } else {
        for k in 0..d {
            let col = z.column(k);
            if col.min() < 0.0 || col.max() > 1.0 {
                return Err(loc(format!(
                    "covariate column {} has range [{}, {}] outside [0,1]; pass the rescale flag \
                     to map it affinely onto [0,1]",
                    covariate_label(k),
                    col.min(),
                    col.max()
                )));
            }
        }
        None
    };
    Ok((Dataset::new(y, z)?, map))
}

/// Load a CSV file as a plain numeric matrix with no range validation,
/// optionally splitting off a response column. Prediction inputs arrive on
/// the raw scale (a stored model may carry its own rescale maps), so the
/// [0,1] covariate check of [`load_csv`] does not apply here.
pub fn load_csv_matrix(
    path: &Path,
    response: Option<ResponseColumn<'_>>,
) -> Result<(DMatrix<f64>, Option<DVector<f64>>)> {
    let loc = |reason: String| Error::Load {
        path: path.display().to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| loc(e.to_string()))?;
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        rows.push(rec.map_err(|e| loc(e.to_string()))?);
    }
    if rows.is_empty() {
        return Err(loc("file contains no rows".into()));
    }
    let first_is_numeric = rows[0].iter().all(|c| c.trim().parse::<f64>().is_ok());
    let (header, first_data_row) = if first_is_numeric {
        (None, 0)
    } else {
        (Some(&rows[0]), 1)
    };
    if rows.len() == first_data_row {
        return Err(loc("file contains a header but no data rows".into()));
    }
    let ncols = rows[first_data_row].len();
    let response_idx = match response {
        None => None,
        Some(ResponseColumn::Index(i)) => {
            if i >= ncols {
                return Err(loc(format!(
                    "response index {i} out of range for {ncols} columns"
                )));
            }
            Some(i)
        }
        Some(ResponseColumn::Name(name)) => match header {
            Some(h) => Some(
                h.iter()
                    .position(|c| c.trim() == name)
                    .ok_or_else(|| loc(format!("response column '{name}' not found in header")))?,
            ),
            None => {
                return Err(loc(format!(
                    "file has no header row; select the response by index, not by name '{name}'"
                )))
            }
        },
    };
    let d = ncols - usize::from(response_idx.is_some());
    if d == 0 {
        return Err(loc("no covariate columns remain".into()));
    }
    let n = rows.len() - first_data_row;
    let mut z = DMatrix::zeros(n, d);
    let mut y = response_idx.map(|_| DVector::zeros(n));
    for (i, row) in rows[first_data_row..].iter().enumerate() {
        if row.len() != ncols {
            return Err(loc(format!(
                "row {} has {} fields, expected {ncols}",
                first_data_row + i + 1,
                row.len()
            )));
        }
        let mut k = 0;
        for (j, cell) in row.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                loc(format!(
                    "non-numeric value '{}' at row {}, column {j}",
                    cell.trim(),
                    first_data_row + i + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(loc(format!(
                    "non-finite value at row {}, column {j}",
                    first_data_row + i + 1
                )));
            }
            if Some(j) == response_idx {
                y.as_mut().unwrap()[i] = v;
            } else {
                z[(i, k)] = v;
                k += 1;
            }
        }
    }
    Ok((z, y))
}

/// The centered blockwise design: per covariate, basis values minus their
/// column means, with the per-group Gram matrices and their square-root
/// factors precomputed.
///
/// Everything is immutable after construction; solvers share it freely across
/// threads.
#[derive(Debug, Clone)]
pub struct CenteredDesign {
    blocks: Vec<DMatrix<f64>>,
    column_means: DMatrix<f64>,
    gram: Vec<DMatrix<f64>>,
    gram_sqrt: Vec<DMatrix<f64>>,
    gram_sqrt_pinv: Vec<DMatrix<f64>>,
    whitened: Vec<DMatrix<f64>>,
    y_bar: f64,
    n: usize,
    m: usize,
}

impl CenteredDesign {
    /// Build from raw (uncentered) basis blocks and the response mean; the
    /// general constructor behind [`build_centered_design`].
    pub fn from_raw_blocks(raw_blocks: Vec<DMatrix<f64>>, y_bar: f64) -> Result<Self> {
        if raw_blocks.is_empty() {
            return Err(Error::InvalidArgument(
                "need at least one covariate block".into(),
            ));
        }
        let n = raw_blocks[0].nrows();
        let m = raw_blocks[0].ncols();
        if raw_blocks.iter().any(|b| b.nrows() != n || b.ncols() != m) {
            return Err(Error::InvalidArgument(
                "all blocks must share the same shape".into(),
            ));
        }
        if n < 2 || m < 1 {
            return Err(Error::InvalidArgument(format!(
                "blocks must be at least 2×1, got {n}×{m}"
            )));
        }
        let d = raw_blocks.len();
        let mut column_means = DMatrix::zeros(d, m);
        let mut blocks = Vec::with_capacity(d);
        let mut gram = Vec::with_capacity(d);
        let mut gram_sqrt = Vec::with_capacity(d);
        let mut gram_sqrt_pinv = Vec::with_capacity(d);
        let mut whitened = Vec::with_capacity(d);
        for (j, raw) in raw_blocks.into_iter().enumerate() {
            let mut block = raw;
            for k in 0..m {
                let mean = block.column(k).sum() / n as f64;
                column_means[(j, k)] = mean;
                for i in 0..n {
                    block[(i, k)] -= mean;
                }
            }
            let g = block.transpose() * &block / n as f64;
            let (sqrt, pinv) = sym_sqrt_and_pinv(&g, EIGEN_CLIP);
            whitened.push(&block * &pinv);
            blocks.push(block);
            gram.push(g);
            gram_sqrt.push(sqrt);
            gram_sqrt_pinv.push(pinv);
        }
        Ok(CenteredDesign {
            blocks,
            column_means,
            gram,
            gram_sqrt,
            gram_sqrt_pinv,
            whitened,
            y_bar,
            n,
            m,
        })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of covariate groups.
    pub fn d(&self) -> usize {
        self.blocks.len()
    }

    /// Basis functions per group.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Mean of the response this design was built against.
    pub fn y_bar(&self) -> f64 {
        self.y_bar
    }

    /// Centered basis block for group j (n×m, zero column sums).
    pub fn block(&self, j: usize) -> &DMatrix<f64> {
        &self.blocks[j]
    }

    /// Column means removed from each block (d×m).
    pub fn column_means(&self) -> &DMatrix<f64> {
        &self.column_means
    }

    /// Per-group Gram matrix Σ̂_j = (1/n)·X̃_jᵀX̃_j.
    pub fn gram(&self, j: usize) -> &DMatrix<f64> {
        &self.gram[j]
    }

    /// Symmetric PSD square root of Σ̂_j.
    pub fn gram_sqrt(&self, j: usize) -> &DMatrix<f64> {
        &self.gram_sqrt[j]
    }

    /// Generalized inverse of the square root (eigenvalues clipped at 1e-10).
    pub fn gram_sqrt_pinv(&self, j: usize) -> &DMatrix<f64> {
        &self.gram_sqrt_pinv[j]
    }

    /// Whitened block x̌_j = X̃_j·Σ̂_j^{−1/2}; its Gram is the orthogonal
    /// projector onto the range of Σ̂_j.
    pub fn whitened(&self, j: usize) -> &DMatrix<f64> {
        &self.whitened[j]
    }

    /// All centered blocks as a slice.
    pub fn centered_blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// All whitened blocks as a slice.
    pub fn whitened_blocks(&self) -> &[DMatrix<f64>] {
        &self.whitened
    }
}

/// Evaluate `basis` on every covariate column of `dataset`, center the blocks,
/// and precompute the per-group Gram factors.
pub fn build_centered_design(dataset: &Dataset, basis: &SplineBasis) -> Result<CenteredDesign> {
    let mut raw = Vec::with_capacity(dataset.d);
    let mut col = vec![0.0; dataset.n];
    for j in 0..dataset.d {
        for i in 0..dataset.n {
            col[i] = dataset.z[(i, j)];
        }
        raw.push(basis.evaluate_column(&col)?);
    }
    let y_bar = dataset.y.sum() / dataset.n as f64;
    CenteredDesign::from_raw_blocks(raw, y_bar)
}

/// Like [`build_centered_design`], but with the basis first orthonormalized
/// against the Uniform[0,1] law, so that for uniformly distributed covariates
/// the per-group population covariance is exactly the identity.
///
/// This is the normalization under which the design-quality diagnostics are
/// meaningful: with it, per-group deviations measure sampling noise rather
/// than the raw spline family's conditioning, and they vanish as n grows.
pub fn build_population_whitened_design(
    dataset: &Dataset,
    basis: &SplineBasis,
) -> Result<CenteredDesign> {
    let (gram, mean) = basis.uniform_moments();
    let centered_cov = &gram - &mean * mean.transpose();
    let (_, transform) = sym_sqrt_and_pinv(&centered_cov, EIGEN_CLIP);
    let mut raw = Vec::with_capacity(dataset.d);
    let mut col = vec![0.0; dataset.n];
    for j in 0..dataset.d {
        for i in 0..dataset.n {
            col[i] = dataset.z[(i, j)];
        }
        raw.push(basis.evaluate_column(&col)? * &transform);
    }
    let y_bar = dataset.y.sum() / dataset.n as f64;
    CenteredDesign::from_raw_blocks(raw, y_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{make_bspline_basis, Placement};
    use std::io::Write;

    fn scenario(model_id: ModelId, n: usize, d: usize, t: f64, seed: u64) -> SimulationScenario {
        SimulationScenario {
            model_id,
            n,
            d,
            t,
            noise_sd: default_noise_sd(),
            seed,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let sc = scenario(ModelId::Model1, 60, 6, 0.5, 42);
        let (a, ta) = generate(&sc).unwrap();
        let (b, tb) = generate(&sc).unwrap();
        assert_eq!(a.y.as_slice(), b.y.as_slice());
        assert_eq!(a.z.as_slice(), b.z.as_slice());
        assert_eq!(ta.mu.as_slice(), tb.mu.as_slice());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..1000u64 {
            assert!(seen.insert(derive_seed(7, r)));
        }
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    #[test]
    fn shape_values_at_known_points() {
        assert!((ComponentShape::SineRatio.eval(0.25) - 1.0).abs() < 1e-12);
        assert!((ComponentShape::HarmonicMix.eval(0.0) - 0.6).abs() < 1e-12);
        assert!((ComponentShape::Identity.eval(0.3) - 0.3).abs() < 1e-15);
        assert!((ComponentShape::CenteredQuadratic.eval(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn signal_matches_component_sum() {
        let sc = scenario(ModelId::Model2, 20, 9, 1.0, 11);
        let (data, truth) = generate(&sc).unwrap();
        assert_eq!(truth.active_set, (0..8).collect::<Vec<_>>());
        for i in 0..5 {
            let manual: f64 = truth
                .component_functions
                .iter()
                .map(|c| c.coefficient * c.shape.eval(data.z[(i, c.column)]))
                .sum();
            assert!((truth.mu[i] - manual).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_columns_nearly_uncorrelated() {
        let sc = scenario(ModelId::Model1, 400, 6, 0.0, 3);
        let (data, _) = generate(&sc).unwrap();
        for (a, b) in [(0, 1), (2, 5), (3, 4)] {
            let r = pearson(
                &data.z.column(a).into_owned(),
                &data.z.column(b).into_owned(),
            );
            assert!(r.abs() <= 0.15, "corr({a},{b}) = {r}");
        }
    }

    #[test]
    fn correlated_design_near_half() {
        let sc = scenario(ModelId::Model1, 400, 6, 1.0, 9);
        let (data, _) = generate(&sc).unwrap();
        let r = pearson(
            &data.z.column(0).into_owned(),
            &data.z.column(4).into_owned(),
        );
        assert!((r - 0.5).abs() <= 0.1, "corr = {r}");
    }

    fn pearson(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.sum() / n, b.sum() / n);
        let (mut num, mut va, mut vb) = (0.0, 0.0, 0.0);
        for i in 0..a.len() {
            let (da, db) = (a[i] - ma, b[i] - mb);
            num += da * db;
            va += da * da;
            vb += db * db;
        }
        num / (va * vb).sqrt()
    }

    #[test]
    fn scenario_dimension_floors_enforced() {
        assert!(generate(&scenario(ModelId::Model1, 50, 3, 0.0, 1)).is_err());
        assert!(generate(&scenario(ModelId::Model2, 50, 7, 0.0, 1)).is_err());
        assert!(generate(&scenario(ModelId::Model1, 50, 4, 0.0, 1)).is_ok());
    }

    #[test]
    fn blocks_are_centered_and_factors_consistent() {
        let sc = scenario(ModelId::Model1, 50, 5, 0.0, 123);
        let (data, _) = generate(&sc).unwrap();
        let basis = make_bspline_basis(3, 4, Placement::Even, None).unwrap();
        let design = build_centered_design(&data, &basis).unwrap();
        for j in 0..design.d() {
            for k in 0..design.m() {
                let s = design.block(j).column(k).sum();
                assert!(
                    s.abs() <= 1e-10 * design.n() as f64,
                    "group {j} col {k} sum {s}"
                );
            }
            let recomposed = design.gram_sqrt(j) * design.gram_sqrt(j);
            let diff = (&recomposed - design.gram(j)).abs().max();
            assert!(diff <= 1e-10, "group {j} sqrt recomposition off by {diff}");
            // pinv·sqrt is the orthogonal projector onto the range of the Gram.
            let proj = design.gram_sqrt_pinv(j) * design.gram_sqrt(j);
            let idem = (&proj * &proj - &proj).abs().max();
            assert!(idem <= 1e-8, "group {j} projector defect {idem}");
        }
    }

    #[test]
    fn population_whitening_concentrates_the_gram_at_identity() {
        // Uniform covariates in a large sample: the per-group Gram of the
        // orthonormalized basis should sit within sampling error of I,
        // whereas the raw spline family's Gram never does.
        let sc = scenario(ModelId::Model1, 4000, 4, 0.0, 31);
        let (data, _) = generate(&sc).unwrap();
        let basis = make_bspline_basis(3, 4, Placement::Even, None).unwrap();
        let whitened = build_population_whitened_design(&data, &basis).unwrap();
        for j in 0..whitened.d() {
            let gap = (whitened.gram(j) - DMatrix::<f64>::identity(7, 7))
                .abs()
                .max();
            assert!(
                gap <= 0.25,
                "group {j} whitened Gram is {gap} from identity"
            );
        }
        let raw = build_centered_design(&data, &basis).unwrap();
        let raw_gap = (raw.gram(0) - DMatrix::<f64>::identity(7, 7)).abs().max();
        assert!(
            raw_gap >= 0.5,
            "raw Gram unexpectedly near identity ({raw_gap})"
        );
    }

    #[test]
    fn constant_covariate_column_collapses_to_zero() {
        let n = 30;
        let y = DVector::from_fn(n, |i, _| i as f64);
        let mut z = DMatrix::from_fn(n, 2, |i, _| (i as f64 + 0.5) / n as f64);
        for i in 0..n {
            z[(i, 1)] = 0.5;
        }
        let data = Dataset::new(y, z).unwrap();
        let basis = make_bspline_basis(2, 1, Placement::Even, None).unwrap();
        let design = build_centered_design(&data, &basis).unwrap();
        assert!(design.block(1).abs().max() <= 1e-12);
        assert!(design.gram(1).abs().max() <= 1e-12);
        assert!(design.gram_sqrt_pinv(1).abs().max() <= 1e-12);
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn csv_loads_with_header_by_name() {
        let f = write_temp("resp,a,b\n1.0,0.1,0.9\n2.0,0.5,0.4\n3.0,0.2,0.3\n");
        let (data, map) = load_csv(f.path(), ResponseColumn::Name("resp"), false).unwrap();
        assert_eq!((data.n, data.d), (3, 2));
        assert!(map.is_none());
        assert_eq!(data.y[1], 2.0);
        assert_eq!(data.z[(1, 1)], 0.4);
    }

    #[test]
    fn csv_loads_headerless_by_index() {
        let f = write_temp("1.0,0.1\n2.0,0.5\n3.0,0.2\n");
        let (data, _) = load_csv(f.path(), ResponseColumn::Index(0), false).unwrap();
        assert_eq!((data.n, data.d), (3, 1));
        assert_eq!(data.y[2], 3.0);
    }

    #[test]
    fn csv_out_of_range_without_rescale_names_column() {
        let f = write_temp("resp,a,b\n1.0,-1.0,0.9\n2.0,1.0,0.4\n");
        let err = load_csv(f.path(), ResponseColumn::Name("resp"), false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("'a'"), "message was: {msg}");
    }

    #[test]
    fn csv_rescale_stores_affine_map() {
        let f = write_temp("resp,a\n1.0,10.0\n2.0,20.0\n3.0,15.0\n");
        let (data, map) = load_csv(f.path(), ResponseColumn::Name("resp"), true).unwrap();
        let map = map.unwrap();
        assert_eq!(map.mins, vec![10.0]);
        assert_eq!(map.spans, vec![10.0]);
        assert_eq!(data.z[(0, 0)], 0.0);
        assert_eq!(data.z[(1, 0)], 1.0);
        assert_eq!(data.z[(2, 0)], 0.5);
    }

    #[test]
    fn csv_non_numeric_cell_reports_location() {
        let f = write_temp("resp,a\n1.0,0.1\n2.0,oops\n");
        let err = load_csv(f.path(), ResponseColumn::Name("resp"), false).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("oops") && msg.contains("row 3"),
            "message was: {msg}"
        );
    }

    #[test]
    fn uniform_margins_pass_ks_check() {
        let sc = scenario(ModelId::Model1, 10_000, 4, 0.0, 77);
        let (data, _) = generate(&sc).unwrap();
        for j in 0..4 {
            let mut col: Vec<f64> = data.z.column(j).iter().copied().collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = col.len() as f64;
            let mut ks: f64 = 0.0;
            for (i, &x) in col.iter().enumerate() {
                ks = ks
                    .max((x - i as f64 / n).abs())
                    .max((x - (i as f64 + 1.0) / n).abs());
            }
            assert!(ks <= 0.02, "column {j} KS statistic {ks}");
        }
    }
}
