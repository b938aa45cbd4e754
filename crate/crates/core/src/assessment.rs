//! Measurement- and structural-model validation.
//!
//! Unidimensionality (Cronbach's alpha, Dillon-Goldstein's rho, eigenvalues of
//! the block correlation matrix), communality and redundancy, AVE,
//! cross-loadings for discriminant validity, the global GoF index, and the
//! rule-of-thumb screen that turns these into verdicts.

use ndarray::{s, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{FitResult, ManifestMatrix};
use crate::linalg::{cross_corr, symmetric_eigenvalues};
use crate::model::{MeasurementMode, ModelSpec};
use crate::stats::pearson;

pub const ALPHA_MIN: f64 = 0.7;
pub const RHO_MIN: f64 = 0.7;
pub const LOADING_MIN: f64 = 0.7;
pub const LOADING_RELAXED_MIN: f64 = 0.4;
pub const COMMUNALITY_MIN: f64 = 0.5;
pub const AVE_MIN: f64 = 0.5;
pub const R_SQUARED_MIN: f64 = 0.1;
pub const GOF_MIN: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reliability {
    pub value: f64,
    /// Set for single-manifest blocks, where the index is 1 by convention.
    pub degenerate: bool,
}

fn block_corr(block: ArrayView2<f64>) -> ndarray::Array2<f64> {
    cross_corr(block, block)
}

/// Standardized Cronbach's alpha, `p r / (1 + (p - 1) r)` with `r` the mean
/// off-diagonal correlation.
pub fn cronbach_alpha(block: ArrayView2<f64>) -> Reliability {
    let p = block.ncols();
    if p < 2 {
        return Reliability {
            value: 1.0,
            degenerate: true,
        };
    }
    let r = block_corr(block);
    let mut sum = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                sum += r[[i, j]];
            }
        }
    }
    Reliability {
        value: alpha_from_mean_corr(p, sum / (p * (p - 1)) as f64),
        degenerate: false,
    }
}

pub fn alpha_from_mean_corr(p: usize, mean_corr: f64) -> f64 {
    let p = p as f64;
    p * mean_corr / (1.0 + (p - 1.0) * mean_corr)
}

/// Dillon-Goldstein's rho: `(sum l)^2 / ((sum l)^2 + sum(1 - l^2))`.
pub fn dillon_goldstein_rho(loadings: &[f64]) -> f64 {
    let s: f64 = loadings.iter().sum();
    let err: f64 = loadings.iter().map(|l| 1.0 - l * l).sum();
    s * s / (s * s + err)
}

/// All eigenvalues of the block's correlation matrix, largest first.
pub fn correlation_eigenvalues(block: ArrayView2<f64>) -> Vec<f64> {
    symmetric_eigenvalues(block_corr(block).view())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEigen {
    pub eig1: f64,
    pub eig2: f64,
    pub unidimensional: bool,
}

/// Two leading eigenvalues of the block correlation matrix (`eig2 = 0` for a
/// lone manifest). Unidimensional means `eig1 > 1` and `eig2 < 1`.
pub fn block_eigenvalues(block: ArrayView2<f64>) -> BlockEigen {
    let e = correlation_eigenvalues(block);
    let eig1 = e[0];
    let eig2 = e.get(1).copied().unwrap_or(0.0).max(0.0);
    BlockEigen {
        eig1,
        eig2,
        unidimensional: eig1 > 1.0 && eig2 < 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnidimReport {
    pub block: String,
    pub mode: MeasurementMode,
    pub mv_count: usize,
    pub cronbach_alpha: f64,
    pub dg_rho: f64,
    pub eig1: f64,
    pub eig2: f64,
    pub degenerate: bool,
}

pub fn unidimensionality(fit: &FitResult, data: &ManifestMatrix, m: &ModelSpec) -> Vec<UnidimReport> {
    let x = data.standardized();
    m.block_ranges()
        .into_iter()
        .enumerate()
        .map(|(j, r)| {
            let block = x.slice(s![.., r.clone()]);
            let alpha = cronbach_alpha(block);
            let eig = block_eigenvalues(block);
            let rho = if alpha.degenerate {
                1.0
            } else {
                dillon_goldstein_rho(&fit.loadings[j])
            };
            UnidimReport {
                block: m.blocks[j].name.clone(),
                mode: m.blocks[j].mode,
                mv_count: r.len(),
                cronbach_alpha: alpha.value,
                dg_rho: rho,
                eig1: eig.eig1,
                eig2: eig.eig2,
                degenerate: alpha.degenerate,
            }
        })
        .collect()
}

pub fn communality(loading: f64) -> f64 {
    loading * loading
}

pub fn redundancy(loading: f64, r_squared: f64) -> f64 {
    communality(loading) * r_squared
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestQuality {
    pub name: String,
    pub weight: f64,
    pub loading: f64,
    pub communality: f64,
    /// Absent for exogenous blocks.
    pub redundancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockQuality {
    pub block: String,
    pub endogenous: bool,
    pub manifests: Vec<ManifestQuality>,
    pub avg_communality: f64,
    /// Equal to the average communality for standardized manifests.
    pub ave: f64,
    pub r_squared: Option<f64>,
    pub avg_redundancy: Option<f64>,
}

impl BlockQuality {
    pub fn mv_count(&self) -> usize {
        self.manifests.len()
    }
}

pub fn communality_redundancy(fit: &FitResult) -> Vec<BlockQuality> {
    (0..fit.n_blocks())
        .map(|j| {
            let r2 = fit.r_squared[j];
            let manifests: Vec<ManifestQuality> = fit.manifests[j]
                .iter()
                .enumerate()
                .map(|(k, name)| {
                    let l = fit.loadings[j][k];
                    ManifestQuality {
                        name: name.clone(),
                        weight: fit.outer_weights[j][k],
                        loading: l,
                        communality: communality(l),
                        redundancy: r2.map(|r2| redundancy(l, r2)),
                    }
                })
                .collect();
            let p = manifests.len() as f64;
            let avg_communality = manifests.iter().map(|q| q.communality).sum::<f64>() / p;
            let avg_redundancy = r2.map(|_| manifests.iter().filter_map(|q| q.redundancy).sum::<f64>() / p);
            BlockQuality {
                block: fit.blocks[j].clone(),
                endogenous: r2.is_some(),
                manifests,
                avg_communality,
                ave: avg_communality,
                r_squared: r2,
                avg_redundancy,
            }
        })
        .collect()
}

/// `sqrt(mean communality * mean R^2)` from already aggregated parts.
pub fn gof_from_parts(block_communalities: &[f64], r_squared: &[f64]) -> f64 {
    let c = block_communalities.iter().sum::<f64>() / block_communalities.len() as f64;
    let r = r_squared.iter().sum::<f64>() / r_squared.len() as f64;
    (c * r).sqrt()
}

/// Global goodness of fit. Communalities are averaged over blocks with at
/// least two manifests; R² over endogenous blocks. `None` when either set is
/// empty.
pub fn goodness_of_fit(quality: &[BlockQuality]) -> Option<f64> {
    let comm: Vec<f64> = quality
        .iter()
        .filter(|q| q.mv_count() >= 2)
        .map(|q| q.avg_communality)
        .collect();
    let r2: Vec<f64> = quality.iter().filter_map(|q| q.r_squared).collect();
    if comm.is_empty() || r2.is_empty() {
        return None;
    }
    Some(gof_from_parts(&comm, &r2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossLoadings {
    pub manifests: Vec<String>,
    pub blocks: Vec<String>,
    /// Block each manifest belongs to.
    pub own_block: Vec<usize>,
    /// `corr(manifest, score)` for every manifest x block.
    pub matrix: ndarray::Array2<f64>,
    /// Own-block loading strictly largest in absolute value.
    pub discriminant_ok: Vec<bool>,
}

pub fn cross_loadings(fit: &FitResult, data: &ManifestMatrix) -> CrossLoadings {
    let x = data.standardized();
    let matrix = cross_corr(x.view(), fit.scores.view()).mapv(|v| v.clamp(-1.0, 1.0));
    let own_block: Vec<usize> = fit
        .manifests
        .iter()
        .enumerate()
        .flat_map(|(j, mvs)| std::iter::repeat_n(j, mvs.len()))
        .collect();
    let discriminant_ok = own_block
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let own = matrix[[k, j]].abs();
            (0..fit.n_blocks()).all(|b| b == j || matrix[[k, b]].abs() < own)
        })
        .collect();
    CrossLoadings {
        manifests: data.names().to_vec(),
        blocks: fit.blocks.clone(),
        own_block,
        matrix,
        discriminant_ok,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPair {
    pub first: String,
    pub second: String,
    pub corr: f64,
    /// One of the residuals is identically zero; `corr` is reported as 0.
    pub degenerate: bool,
}

/// Pairwise correlations of the outer residuals `x_k - loading_k * score`
/// within one block. Near-zero values support the assumption that the
/// manifests share nothing beyond the latent variable.
pub fn residual_orthogonality(fit: &FitResult, data: &ManifestMatrix, block: &str) -> Result<Vec<ResidualPair>> {
    let j = fit.block_index(block)?;
    let names = &fit.manifests[j];
    if names.len() < 2 {
        return Err(Error::InvalidModel(format!("block `{block}` needs at least two manifests")));
    }
    let x = data.standardized();
    let start = fit.manifests[..j].iter().map(Vec::len).sum::<usize>();
    let score = fit.scores.column(j);
    let residuals: Vec<Vec<f64>> = (0..names.len())
        .map(|k| {
            let l = fit.loadings[j][k];
            x.column(start + k).iter().zip(score.iter()).map(|(xv, y)| xv - l * y).collect()
        })
        .collect();
    let flat = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-9 * (r.len() as f64).sqrt();
    let mut out = Vec::new();
    for a in 0..names.len() {
        for b in a + 1..names.len() {
            let degenerate = flat(&residuals[a]) || flat(&residuals[b]);
            let corr = if degenerate {
                0.0
            } else {
                pearson(&residuals[a], &residuals[b]).unwrap_or(0.0)
            };
            out.push(ResidualPair {
                first: names[a].clone(),
                second: names[b].clone(),
                corr,
                degenerate,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    CronbachAlpha,
    DillonGoldsteinRho,
    Eigenvalues,
    Unidimensionality,
    Loading,
    Communality,
    Ave,
    RSquared,
    GoodnessOfFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub rule: Rule,
    pub subject: String,
    pub value: f64,
    pub threshold: f64,
    pub status: Status,
    pub note: Option<String>,
}

/// Everything the screen looks at.
#[derive(Debug, Clone, Copy)]
pub struct ScreenInput<'a> {
    pub unidim: &'a [UnidimReport],
    pub quality: &'a [BlockQuality],
    pub gof: Option<f64>,
}

fn at_least(v: f64, t: f64) -> Status {
    if v >= t {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Apply the usual PLS-PM rules of thumb.
///
/// When alpha and rho disagree, rho decides block acceptance: it is computed
/// from the fitted loadings rather than raw inter-item correlations.
pub fn threshold_screen(input: ScreenInput<'_>) -> Vec<Verdict> {
    let mut out = Vec::new();
    let mut push = |rule, subject: &str, value, threshold, status, note: Option<String>| {
        out.push(Verdict {
            rule,
            subject: subject.to_string(),
            value,
            threshold,
            status,
            note,
        })
    };
    for u in input.unidim {
        if u.degenerate {
            let note = || Some("single manifest".to_string());
            push(Rule::CronbachAlpha, &u.block, u.cronbach_alpha, ALPHA_MIN, Status::Pass, note());
            push(Rule::DillonGoldsteinRho, &u.block, u.dg_rho, RHO_MIN, Status::Pass, note());
            push(Rule::Eigenvalues, &u.block, u.eig1, 1.0, Status::Pass, note());
            push(Rule::Unidimensionality, &u.block, u.dg_rho, RHO_MIN, Status::Pass, note());
            continue;
        }
        let alpha = at_least(u.cronbach_alpha, ALPHA_MIN);
        let rho = at_least(u.dg_rho, RHO_MIN);
        let eig = if u.eig1 > 1.0 && u.eig2 < 1.0 {
            Status::Pass
        } else {
            Status::Fail
        };
        push(Rule::CronbachAlpha, &u.block, u.cronbach_alpha, ALPHA_MIN, alpha, None);
        push(Rule::DillonGoldsteinRho, &u.block, u.dg_rho, RHO_MIN, rho, None);
        push(Rule::Eigenvalues, &u.block, u.eig2, 1.0, eig, Some(format!("eig1 {:.3}, eig2 {:.3}", u.eig1, u.eig2)));
        let (status, note) = match (alpha, rho, eig) {
            (_, Status::Pass, Status::Pass) if alpha == Status::Fail => (
                Status::Pass,
                Some("alpha below threshold; accepted on Dillon-Goldstein rho".to_string()),
            ),
            (_, Status::Pass, Status::Pass) => (Status::Pass, None),
            _ => (Status::Fail, None),
        };
        push(Rule::Unidimensionality, &u.block, u.dg_rho, RHO_MIN, status, note);
    }
    for q in input.quality {
        for mv in &q.manifests {
            push(Rule::Loading, &mv.name, mv.loading, LOADING_MIN, loading_status(mv.loading), None);
            push(Rule::Communality, &mv.name, mv.communality, COMMUNALITY_MIN, at_least(mv.communality, COMMUNALITY_MIN), None);
        }
        push(Rule::Ave, &q.block, q.ave, AVE_MIN, at_least(q.ave, AVE_MIN), None);
        if let Some(r2) = q.r_squared {
            push(Rule::RSquared, &q.block, r2, R_SQUARED_MIN, at_least(r2, R_SQUARED_MIN), None);
        }
    }
    if let Some(g) = input.gof {
        push(Rule::GoodnessOfFit, "model", g, GOF_MIN, at_least(g, GOF_MIN), None);
    }
    out
}

/// Pass at 0.7, warn between 0.4 and 0.7, fail below 0.4.
pub fn loading_status(loading: f64) -> Status {
    if loading >= LOADING_MIN {
        Status::Pass
    } else if loading >= LOADING_RELAXED_MIN {
        Status::Warn
    } else {
        Status::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    /// Standardized two-column data with sample correlation exactly `r`.
    fn pair_with_corr(r: f64) -> Array2<f64> {
        let u = [1.0, -1.0, 1.0, -1.0];
        let v = [1.0, 1.0, -1.0, -1.0];
        let mut x = Array2::zeros((4, 2));
        for i in 0..4 {
            x[[i, 0]] = u[i];
            x[[i, 1]] = r * u[i] + (1.0 - r * r).sqrt() * v[i];
        }
        x
    }

    #[test]
    fn alpha_closed_forms() {
        assert!((cronbach_alpha(pair_with_corr(1.0).view()).value - 1.0).abs() < 1e-12);
        assert!((alpha_from_mean_corr(3, 0.5) - 0.75).abs() < 1e-12);
        let one = cronbach_alpha(array![[1.0], [-1.0]].view());
        assert_eq!(one, Reliability { value: 1.0, degenerate: true });
    }

    #[test]
    fn three_items_at_half() {
        // Equicorrelated 3-item block with r = 0.5: factor + independent parts.
        let f = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let e = [
            [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0],
            [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0],
        ];
        let x = Array2::from_shape_fn((8, 3), |(i, k)| 0.5f64.sqrt() * f[i] + 0.5f64.sqrt() * e[k][i]);
        assert!((cronbach_alpha(x.view()).value - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rho_closed_forms() {
        assert!((dillon_goldstein_rho(&[1.0, 1.0]) - 1.0).abs() < 1e-15);
        let expect = 2.1f64.powi(2) / (2.1f64.powi(2) + 3.0 * 0.51);
        assert!((dillon_goldstein_rho(&[0.7, 0.7, 0.7]) - expect).abs() < 1e-12);
        assert!((expect - 0.742).abs() < 5e-4);
    }

    #[test]
    fn eigen_examples() {
        let e = block_eigenvalues(pair_with_corr(0.43).view());
        assert!((e.eig1 - 1.43).abs() < 1e-12 && (e.eig2 - 0.57).abs() < 1e-12);
        assert!(e.unidimensional);
        let single = block_eigenvalues(array![[1.0], [-1.0]].view());
        assert_eq!((single.eig1, single.eig2), (1.0, 0.0));
        let flat = block_eigenvalues(pair_with_corr(0.0).view());
        assert!((flat.eig1 - 1.0).abs() < 1e-12 && (flat.eig2 - 1.0).abs() < 1e-12);
        assert!(!flat.unidimensional);
    }

    #[test]
    fn communality_and_redundancy_examples() {
        assert!((communality(0.930) - 0.865).abs() < 5e-4);
        assert!((redundancy(0.930, 0.752) - 0.651).abs() < 1e-3);
        assert_eq!(communality(1.0), 1.0);
        assert_eq!(redundancy(1.0, 0.506), 0.506);
        assert_eq!((communality(0.0), redundancy(0.0, 0.7)), (0.0, 0.0));
    }

    #[test]
    fn gof_closed_forms() {
        assert!((gof_from_parts(&[1.0, 1.0], &[1.0]) - 1.0).abs() < 1e-15);
        assert!((gof_from_parts(&[0.64], &[0.25]) - 0.4).abs() < 1e-15);
    }

    fn quality(block: &str, loadings: &[f64], r2: Option<f64>) -> BlockQuality {
        let manifests: Vec<ManifestQuality> = loadings
            .iter()
            .enumerate()
            .map(|(k, &l)| ManifestQuality {
                name: format!("{block}{k}"),
                weight: 0.5,
                loading: l,
                communality: communality(l),
                redundancy: r2.map(|r| redundancy(l, r)),
            })
            .collect();
        let avg = manifests.iter().map(|m| m.communality).sum::<f64>() / manifests.len() as f64;
        BlockQuality {
            block: block.into(),
            endogenous: r2.is_some(),
            manifests,
            avg_communality: avg,
            ave: avg,
            r_squared: r2,
            avg_redundancy: None,
        }
    }

    #[test]
    fn gof_ignores_single_manifest_communality() {
        let base = vec![quality("A", &[0.8, 0.9], None), quality("B", &[0.7, 0.75], Some(0.4))];
        let g = goodness_of_fit(&base).unwrap();
        let mut more = base.clone();
        more.push(quality("C", &[1.0], None));
        assert_eq!(goodness_of_fit(&more).unwrap(), g);
        assert!(goodness_of_fit(&base[..1]).is_none());
    }

    fn report(block: &str, alpha: f64, rho: f64, eig1: f64) -> UnidimReport {
        UnidimReport {
            block: block.into(),
            mode: MeasurementMode::A,
            mv_count: 2,
            cronbach_alpha: alpha,
            dg_rho: rho,
            eig1,
            eig2: 2.0 - eig1,
            degenerate: false,
        }
    }

    #[test]
    fn rho_governs_block_acceptance() {
        let u = [report("Socio-economic", 0.598, 0.833, 1.43)];
        let v = threshold_screen(ScreenInput { unidim: &u, quality: &[], gof: None });
        let get = |r| v.iter().find(|x| x.rule == r).unwrap().status;
        assert_eq!(get(Rule::CronbachAlpha), Status::Fail);
        assert_eq!(get(Rule::DillonGoldsteinRho), Status::Pass);
        assert_eq!(get(Rule::Unidimensionality), Status::Pass);
    }

    #[test]
    fn loading_rules() {
        assert_eq!(loading_status(0.844), Status::Pass);
        assert_eq!(loading_status(0.55), Status::Warn);
        assert_eq!(loading_status(0.35), Status::Fail);
    }

    #[test]
    fn screen_is_pure() {
        let u = [report("A", 0.8, 0.9, 1.7)];
        let q = [quality("A", &[0.9, 0.6], Some(0.05))];
        let input = ScreenInput { unidim: &u, quality: &q, gof: Some(0.65) };
        let a = threshold_screen(input);
        assert_eq!(a, threshold_screen(input));
        let find = |rule, subject: &str| a.iter().find(|v| v.rule == rule && v.subject == subject).unwrap().status;
        assert_eq!(find(Rule::Loading, "A1"), Status::Warn);
        assert_eq!(find(Rule::Communality, "A1"), Status::Fail);
        assert_eq!(find(Rule::RSquared, "A"), Status::Fail);
        assert_eq!(find(Rule::GoodnessOfFit, "model"), Status::Fail);
    }
}
