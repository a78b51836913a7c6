//! Standard scaling and PCA.
//!
//! Scaling is the usual z = (x - mu) / sigma with per-column mean and
//! population (1/m) standard deviation. PCA eigenvectors come from a
//! one-sided Jacobi SVD of the centered data matrix, so the only numerics
//! involved are plane rotations; at nine features this converges in a
//! handful of sweeps and is deterministic down to the bit.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

/// Per-feature mean and standard deviation learned from data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams {
    mu: Array1<f64>,
    sigma: Array1<f64>,
    constant: Vec<bool>,
}

impl ScalerParams {
    pub fn mu(&self) -> &Array1<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &Array1<f64> {
        &self.sigma
    }

    /// Columns whose variance was zero at fit time (sigma replaced by 1).
    pub fn constant_columns(&self) -> Vec<usize> {
        self.constant
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| c.then_some(i))
            .collect()
    }

    pub fn has_constant_columns(&self) -> bool {
        self.constant.iter().any(|&c| c)
    }
}

/// Column means and population standard deviations of `x`.
///
/// A zero-variance column gets sigma = 1 and is flagged instead of failing,
/// which keeps the pipeline total on degenerate training subsets.
pub fn fit_scaler(x: &Array2<f64>) -> Result<ScalerParams> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidArg("fit_scaler on an empty matrix".into()));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArg(format!("non-finite feature value {v}")));
    }
    let m = x.nrows() as f64;
    let mu = x.mean_axis(Axis(0)).expect("non-empty");
    let mut sigma = Array1::zeros(x.ncols());
    let mut constant = vec![false; x.ncols()];
    for (j, col) in x.columns().into_iter().enumerate() {
        let var = col.iter().map(|&v| (v - mu[j]) * (v - mu[j])).sum::<f64>() / m;
        let sd = var.sqrt();
        if sd == 0.0 {
            sigma[j] = 1.0;
            constant[j] = true;
        } else {
            sigma[j] = sd;
        }
    }
    Ok(ScalerParams { mu, sigma, constant })
}

/// Applies z = (x - mu) / sigma columnwise.
pub fn apply_scaler(p: &ScalerParams, x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != p.mu.len() {
        return Err(Error::DimMismatch {
            context: "apply_scaler columns",
            expected: p.mu.len(),
            actual: x.ncols(),
        });
    }
    let mut z = x.clone();
    for mut row in z.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - p.mu[j]) / p.sigma[j];
        }
    }
    Ok(z)
}

/// Mean vector plus k orthonormal principal axes with their eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Array1<f64>,
    components: Array2<f64>, // k x n, rows are unit-norm axes
    explained_variance: Array1<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &Array1<f64> {
        &self.explained_variance
    }

    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.components.ncols()
    }
}

/// Top-k eigenpairs of the population covariance of `x`.
///
/// Centers internally, orthogonalizes the columns with Jacobi rotations,
/// orders eigenvalues descending (original column order breaks ties), and
/// flips each axis so its largest-magnitude entry is positive.
pub fn fit_pca(x: &Array2<f64>, k: usize) -> Result<PcaModel> {
    let (m, n) = (x.nrows(), x.ncols());
    if m < 2 {
        return Err(Error::InvalidArg(format!(
            "fit_pca needs at least 2 rows, got {m}"
        )));
    }
    if k < 1 || k > n {
        return Err(Error::InvalidArg(format!(
            "pca dimension {k} out of range 1..={n}"
        )));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let mut a = x.clone();
    for mut row in a.rows_mut() {
        row -= &mean;
    }

    let v = jacobi_orthogonalize(&mut a)?;

    // singular value sigma_j = ||col_j||; covariance eigenvalue = sigma_j^2 / m
    let mut pairs: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let s2: f64 = a.column(j).iter().map(|&v| v * v).sum();
            (s2 / m as f64, j)
        })
        .collect();
    // stable sort keeps original index order among equal eigenvalues
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("eigenvalues are finite"));

    let mut components = Array2::zeros((k, n));
    let mut explained = Array1::zeros(k);
    for (row, &(lambda, j)) in pairs.iter().take(k).enumerate() {
        explained[row] = lambda;
        let axis = v.column(j);
        // sign convention: largest-magnitude entry positive, first index wins ties
        let mut dominant = 0usize;
        for (i, &value) in axis.iter().enumerate() {
            if value.abs() > axis[dominant].abs() {
                dominant = i;
            }
        }
        let flip = if axis[dominant] < 0.0 { -1.0 } else { 1.0 };
        for (i, &value) in axis.iter().enumerate() {
            components[[row, i]] = flip * value;
        }
    }

    Ok(PcaModel { mean, components, explained_variance: explained })
}

/// One-sided Jacobi: rotates column pairs of `a` until the implicit Gram
/// matrix is diagonal; returns the accumulated rotation matrix V whose
/// columns are the right singular vectors of the input.
fn jacobi_orthogonalize(a: &mut Array2<f64>) -> Result<Array2<f64>> {
    let n = a.ncols();
    let mut v = Array2::eye(n);
    // convergence: off-diagonal Frobenius norm below 1e-12 relative to the
    // Gram matrix's own Frobenius norm
    const TOL: f64 = 1e-12;
    const MAX_SWEEPS: usize = 64;

    for _ in 0..MAX_SWEEPS {
        let mut off_sq = 0.0;
        let mut total_sq = 0.0;
        for i in 0..n {
            let d: f64 = a.column(i).iter().map(|&x| x * x).sum();
            total_sq += d * d;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let c: f64 = a.column(i).iter().zip(a.column(j)).map(|(&p, &q)| p * q).sum();
                off_sq += 2.0 * c * c;
            }
        }
        total_sq += off_sq;
        if off_sq.sqrt() <= TOL * total_sq.sqrt().max(f64::MIN_POSITIVE) {
            return Ok(v);
        }

        for i in 0..n {
            for j in (i + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for r in 0..a.nrows() {
                    let p = a[[r, i]];
                    let q = a[[r, j]];
                    alpha += p * p;
                    beta += q * q;
                    gamma += p * q;
                }
                if gamma == 0.0 {
                    continue;
                }
                // rotation zeroing the (i, j) Gram entry
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;
                for r in 0..a.nrows() {
                    let p = a[[r, i]];
                    let q = a[[r, j]];
                    a[[r, i]] = cos * p - sin * q;
                    a[[r, j]] = sin * p + cos * q;
                }
                for r in 0..n {
                    let p = v[[r, i]];
                    let q = v[[r, j]];
                    v[[r, i]] = cos * p - sin * q;
                    v[[r, j]] = sin * p + cos * q;
                }
            }
        }
    }
    Err(Error::InvalidArg(
        "jacobi rotation sweeps did not converge".into(),
    ))
}

/// Projects rows of `x` onto the model's axes: (x - mean) * components^T.
pub fn project(model: &PcaModel, x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != model.mean.len() {
        return Err(Error::DimMismatch {
            context: "project columns",
            expected: model.mean.len(),
            actual: x.ncols(),
        });
    }
    let mut centered = x.clone();
    for mut row in centered.rows_mut() {
        row -= &model.mean;
    }
    Ok(centered.dot(&model.components.t()))
}

/// JSON document persisting a fitted scaler + PCA pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessDoc {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub k: usize,
}

impl PreprocessDoc {
    pub fn new(scaler: &ScalerParams, pca: &PcaModel) -> Self {
        PreprocessDoc {
            mu: scaler.mu.to_vec(),
            sigma: scaler.sigma.to_vec(),
            mean: pca.mean.to_vec(),
            components: pca
                .components
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            explained_variance: pca.explained_variance.to_vec(),
            k: pca.k(),
        }
    }

    pub fn into_models(self) -> Result<(ScalerParams, PcaModel)> {
        if self.mu.len() != self.sigma.len() {
            return Err(Error::DimMismatch {
                context: "preprocess doc mu vs sigma",
                expected: self.mu.len(),
                actual: self.sigma.len(),
            });
        }
        if self.components.len() != self.k || self.explained_variance.len() != self.k {
            return Err(Error::InvalidArg(
                "preprocess doc k disagrees with components".into(),
            ));
        }
        let n = self.mean.len();
        let mut flat = Vec::with_capacity(self.k * n);
        for row in &self.components {
            if row.len() != n {
                return Err(Error::DimMismatch {
                    context: "preprocess doc component width",
                    expected: n,
                    actual: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        // constant-column flags are a fit-time diagnostic and are not persisted
        let constant = vec![false; self.sigma.len()];
        let scaler = ScalerParams {
            mu: Array1::from_vec(self.mu),
            sigma: Array1::from_vec(self.sigma),
            constant,
        };
        let pca = PcaModel {
            mean: Array1::from_vec(self.mean),
            components: Array2::from_shape_vec((self.k, n), flat).expect("checked widths"),
            explained_variance: Array1::from_vec(self.explained_variance),
        };
        Ok((scaler, pca))
    }
}
