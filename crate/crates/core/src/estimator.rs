//! PLS path-model estimation.
//!
//! Lohmöller-style simultaneous sweeps: every outer weight starts at 1, each
//! sweep forms standardized outer scores `Y_j = X_j w_j`, builds inner proxies
//! `Z_j` from adjacent scores under the chosen scheme, and updates the weights
//! (Mode A: correlations with `Z_j`; Mode B: regression of `Z_j` on `X_j`).
//! Iteration stops when no normalized weight moves by more than `tol`.
//! Path coefficients are then OLS betas among the final standardized scores.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::Serialize;

use crate::dataset::{standardize_matrix, ColumnStats, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, spd_solve};
use crate::model::{InnerScheme, MeasurementMode, ModelSpec};

/// Manifest variables of a model, inverted where requested and standardized,
/// with columns laid out block after block.
#[derive(Debug, Clone)]
pub struct ManifestMatrix {
    names: Vec<String>,
    raw: Array2<f64>,
    x: Array2<f64>,
    stats: Vec<ColumnStats>,
}

impl ManifestMatrix {
    /// Pull the model's manifest columns out of a dataset. Inverted columns are
    /// negated before standardization.
    pub fn from_dataset(d: &Dataset, m: &ModelSpec) -> Result<Self> {
        let names = m.manifest_names();
        let mut raw = d.select(&names)?;
        for (j, inv) in m.manifest_inverts().into_iter().enumerate() {
            if inv {
                raw.column_mut(j).mapv_inplace(|v| -v);
            }
        }
        Self::from_raw(raw, names)
    }

    /// Wrap an already oriented matrix (columns in model manifest order).
    pub fn from_raw(raw: Array2<f64>, names: Vec<String>) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InsufficientObservations(
                "manifest matrix contains missing values; run complete_cases first".into(),
            ));
        }
        let (x, stats) = standardize_matrix(&raw, &names)?;
        Ok(Self { names, raw, x, stats })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Standardized data.
    pub fn standardized(&self) -> &Array2<f64> {
        &self.x
    }

    /// Oriented but unstandardized data.
    pub fn raw(&self) -> &Array2<f64> {
        &self.raw
    }

    pub fn stats(&self) -> &[ColumnStats] {
        &self.stats
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    /// Same variables on a resampled set of rows.
    pub fn resample(&self, rows: &[usize]) -> Result<Self> {
        Self::from_raw(self.raw.select(Axis(0), rows), self.names.clone())
    }
}

/// Output of [`fit`].
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub blocks: Vec<String>,
    pub manifests: Vec<Vec<String>>,
    /// Outer weights per block, scaled so that `X_j w_j` has unit variance.
    pub outer_weights: Vec<Vec<f64>>,
    /// Correlation of each manifest with its own block score.
    pub loadings: Vec<Vec<f64>>,
    /// Standardized latent scores, one column per block.
    pub scores: Array2<f64>,
    /// `B[j, i]`: coefficient of block i in the regression for block j.
    pub path_coefficients: Array2<f64>,
    /// Classical OLS standard errors, same layout as `path_coefficients`.
    pub path_std_errors: Array2<f64>,
    /// R² per block; `None` for exogenous blocks.
    pub r_squared: Vec<Option<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Number of zero correlations the centroid scheme resolved as +1.
    pub sign_ties: usize,
}

impl FitResult {
    pub fn block_index(&self, name: &str) -> Result<usize> {
        self.blocks
            .iter()
            .position(|b| b == name)
            .ok_or_else(|| Error::NoSuchBlock(name.to_string()))
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Reverse the orientation of one block (score, weights, loadings) and the
    /// affected path coefficients.
    pub(crate) fn flip_block(&mut self, j: usize) {
        self.scores.column_mut(j).mapv_inplace(|v| -v);
        self.outer_weights[j].iter_mut().for_each(|w| *w = -*w);
        self.loadings[j].iter_mut().for_each(|l| *l = -*l);
        self.path_coefficients.row_mut(j).mapv_inplace(|v| -v);
        self.path_coefficients.column_mut(j).mapv_inplace(|v| -v);
    }
}

/// Inner-model regression output.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEstimates {
    pub coefficients: Array2<f64>,
    pub std_errors: Array2<f64>,
    pub r_squared: Vec<Option<f64>>,
}

fn corr_matrix(y: ArrayView2<f64>) -> Array2<f64> {
    y.t().dot(&y) / y.nrows() as f64
}

/// OLS of each endogenous score on its predecessors' scores.
///
/// Scores must be standardized. Standard errors are classical, with
/// `n - k - 1` residual degrees of freedom.
pub fn path_coefficients(scores: ArrayView2<f64>, m: &ModelSpec) -> Result<PathEstimates> {
    let n = scores.nrows();
    let q = m.n_blocks();
    let r = corr_matrix(scores);
    let mut coefficients = Array2::zeros((q, q));
    let mut std_errors = Array2::zeros((q, q));
    let mut r_squared = vec![None; q];
    for (j, preds) in m.predecessors().into_iter().enumerate() {
        if preds.is_empty() {
            continue;
        }
        let k = preds.len();
        if n <= k + 1 {
            return Err(Error::InsufficientObservations(format!(
                "block `{}` has {k} predecessors but only {n} observations",
                m.blocks[j].name
            )));
        }
        let rpp = r.select(Axis(0), &preds).select(Axis(1), &preds);
        let rpj = Array1::from_iter(preds.iter().map(|&i| r[[i, j]]));
        let singular = || {
            Error::Singular(format!(
                "predecessor scores of `{}` are collinear",
                m.blocks[j].name
            ))
        };
        let beta = spd_solve(rpp.view(), rpj.view()).ok_or_else(singular)?;
        let inv = spd_inverse(rpp.view()).ok_or_else(singular)?;
        let r2 = beta.dot(&rpj).clamp(0.0, 1.0);
        let sigma2 = n as f64 * (1.0 - r2) / (n - k - 1) as f64;
        for (a, &i) in preds.iter().enumerate() {
            coefficients[[j, i]] = beta[a];
            std_errors[[j, i]] = (sigma2 * inv[[a, a]] / n as f64).sqrt();
        }
        r_squared[j] = Some(r2);
    }
    Ok(PathEstimates {
        coefficients,
        std_errors,
        r_squared,
    })
}

/// Inner weights `e[j, i]` linking block j to its neighbours.
///
/// Returns the matrix and the number of zero correlations that the centroid
/// rule resolved as +1.
pub fn inner_weights(scores: ArrayView2<f64>, m: &ModelSpec, scheme: InnerScheme) -> Result<(Array2<f64>, usize)> {
    let q = m.n_blocks();
    let r = corr_matrix(scores);
    let mut e = Array2::zeros((q, q));
    let mut ties = 0;
    let edges = m.edges();
    match scheme {
        InnerScheme::Centroid | InnerScheme::Factorial => {
            for &(f, t) in &edges {
                let c = r[[f, t]];
                let v = if scheme == InnerScheme::Factorial {
                    c
                } else if c == 0.0 {
                    ties += 1;
                    1.0
                } else {
                    c.signum()
                };
                e[[f, t]] = v;
                e[[t, f]] = v;
            }
        }
        InnerScheme::Path => {
            for (j, preds) in m.predecessors().into_iter().enumerate() {
                if preds.is_empty() {
                    continue;
                }
                let rpp = r.select(Axis(0), &preds).select(Axis(1), &preds);
                let rpj = Array1::from_iter(preds.iter().map(|&i| r[[i, j]]));
                let beta = spd_solve(rpp.view(), rpj.view()).ok_or_else(|| {
                    Error::Singular(format!("predecessor scores of `{}` are collinear", m.blocks[j].name))
                })?;
                for (a, &i) in preds.iter().enumerate() {
                    e[[j, i]] = beta[a];
                }
            }
            for &(f, t) in &edges {
                // f precedes t: from f's side, t is a successor.
                e[[f, t]] = r[[f, t]];
            }
        }
    }
    Ok((e, ties))
}

fn standardize_in_place(v: &mut Array1<f64>) -> Option<()> {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    v.mapv_inplace(|x| x - mean);
    let sd = (v.dot(v) / n).sqrt();
    if !(sd > 1e-12) {
        return None;
    }
    v.mapv_inplace(|x| x / sd);
    Some(())
}

/// Block scores for the given weights (columns standardized).
fn outer_scores(x: &Array2<f64>, ranges: &[std::ops::Range<usize>], weights: &[Array1<f64>]) -> Result<Array2<f64>> {
    let mut y = Array2::zeros((x.nrows(), ranges.len()));
    for (j, r) in ranges.iter().enumerate() {
        let mut col = x.slice(s![.., r.clone()]).dot(&weights[j]);
        standardize_in_place(&mut col)
            .ok_or_else(|| Error::Singular(format!("block {j} score has zero variance")))?;
        y.column_mut(j).assign(&col);
    }
    Ok(y)
}

/// Rescale weights so the block composite has unit variance.
fn normalize_weights(x: &Array2<f64>, range: &std::ops::Range<usize>, w: Array1<f64>) -> Result<Array1<f64>> {
    let comp = x.slice(s![.., range.clone()]).dot(&w);
    let n = comp.len() as f64;
    let mean = comp.sum() / n;
    let sd = (comp.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd > 1e-12) {
        return Err(Error::Singular("outer composite has zero variance".into()));
    }
    Ok(w / sd)
}

/// One simultaneous outer/inner sweep starting from `weights`.
/// Returns updated weights and the centroid tie count.
pub fn sweep(data: &ManifestMatrix, m: &ModelSpec, weights: &[Array1<f64>]) -> Result<(Vec<Array1<f64>>, usize)> {
    let x = &data.x;
    let n = x.nrows() as f64;
    let ranges = m.block_ranges();
    let y = outer_scores(x, &ranges, weights)?;
    let (e, ties) = inner_weights(y.view(), m, m.scheme)?;
    let mut out = Vec::with_capacity(ranges.len());
    for (j, r) in ranges.iter().enumerate() {
        let xj = x.slice(s![.., r.clone()]);
        if r.len() == 1 {
            out.push(Array1::ones(1));
            continue;
        }
        let mut z = y.dot(&e.row(j));
        if standardize_in_place(&mut z).is_none() {
            // Isolated block (or proxies cancelling out): use its own score.
            z = y.column(j).to_owned();
        }
        let w = match m.blocks[j].mode {
            MeasurementMode::A => xj.t().dot(&z) / n,
            MeasurementMode::B => {
                let xtx = xj.t().dot(&xj) / n;
                let xtz = xj.t().dot(&z) / n;
                spd_solve(xtx.view(), xtz.view()).ok_or_else(|| {
                    Error::Singular(format!("Mode B block `{}` has collinear manifests", m.blocks[j].name))
                })?
            }
        };
        out.push(normalize_weights(x, r, w)?);
    }
    Ok((out, ties))
}

/// Estimate a PLS path model.
///
/// Non-convergence is not an error: the result comes back with
/// `converged = false` and the weights of the last sweep.
pub fn fit(data: &ManifestMatrix, m: &ModelSpec) -> Result<FitResult> {
    m.validate()?;
    let names = m.manifest_names();
    if data.names != names {
        return Err(Error::InvalidModel(
            "manifest matrix columns do not match the model's manifest order".into(),
        ));
    }
    let x = &data.x;
    let n = x.nrows();
    let max_preds = m.predecessors().iter().map(Vec::len).max().unwrap_or(0);
    if n < 3 || n <= max_preds + 1 {
        return Err(Error::InsufficientObservations(format!(
            "{n} observations for a model with up to {max_preds} predecessors per block"
        )));
    }
    let ranges = m.block_ranges();
    let mut weights = ranges
        .iter()
        .map(|r| normalize_weights(x, r, Array1::ones(r.len())))
        .collect::<Result<Vec<_>>>()?;

    let mut converged = false;
    let mut iterations = 0;
    let mut sign_ties = 0;
    while iterations < m.max_iter {
        iterations += 1;
        let (next, ties) = sweep(data, m, &weights)?;
        sign_ties = ties;
        let delta = next
            .iter()
            .zip(&weights)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(u, v)| (u - v).abs()))
            .fold(0.0, f64::max);
        weights = next;
        if delta < m.tol {
            converged = true;
            break;
        }
    }

    let mut scores = outer_scores(x, &ranges, &weights)?;
    let mut loadings = Vec::with_capacity(ranges.len());
    for (j, r) in ranges.iter().enumerate() {
        if r.len() == 1 {
            // A lone indicator is its own score.
            scores.column_mut(j).assign(&x.column(r.start));
            weights[j] = Array1::ones(1);
            loadings.push(vec![1.0]);
            continue;
        }
        let yj = scores.column(j).to_owned();
        let mut l: Vec<f64> = r
            .clone()
            .map(|k| (x.column(k).dot(&yj) / n as f64).clamp(-1.0, 1.0))
            .collect();
        if l.iter().sum::<f64>() < 0.0 {
            scores.column_mut(j).mapv_inplace(|v| -v);
            weights[j].mapv_inplace(|v| -v);
            l.iter_mut().for_each(|v| *v = -*v);
        }
        loadings.push(l);
    }

    let inner = path_coefficients(scores.view(), m)?;
    Ok(FitResult {
        blocks: m.block_names(),
        manifests: m.blocks.iter().map(|b| b.manifest.iter().map(|mv| mv.column.clone()).collect()).collect(),
        outer_weights: weights.into_iter().map(|w| w.to_vec()).collect(),
        loadings,
        scores,
        path_coefficients: inner.coefficients,
        path_std_errors: inner.std_errors,
        r_squared: inner.r_squared,
        iterations,
        converged,
        sign_ties,
    })
}
