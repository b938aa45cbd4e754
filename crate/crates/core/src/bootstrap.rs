//! Nonparametric bootstrap over observations: percentile intervals for path
//! coefficients, total effects and loadings.
//!
//! Replicate `r` draws its resample from a ChaCha stream keyed by `(seed, r)`,
//! so replicates can run in any order on any number of threads and still give
//! identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effects::{decompose_effects, total_effects};
use crate::error::{Error, Result};
use crate::estimator::{fit, FitResult, ManifestMatrix};
use crate::model::ModelSpec;
use crate::stats::quantile_sorted;

/// Share of replicates allowed to fail before the run is abandoned.
const MAX_FAILURE_SHARE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootSpec {
    pub replicates: usize,
    pub ci_level: f64,
    pub seed: u64,
}

impl BootSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            replicates: 500,
            ci_level: 0.95,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < 100 {
            return Err(Error::InvalidBootSpec(format!(
                "{} replicates (at least 100 needed for intervals)",
                self.replicates
            )));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidBootSpec(format!("ci_level {} not in (0, 1)", self.ci_level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    Path,
    Total,
    Loading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootParam {
    pub kind: ParamKind,
    /// `from -> to` for paths and effects, the manifest name for loadings.
    pub name: String,
    pub estimate: f64,
    pub boot_mean: f64,
    pub boot_sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Zero lies outside the interval.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootResult {
    pub params: Vec<BootParam>,
    pub replicates: usize,
    pub valid_replicates: usize,
    pub ci_level: f64,
    pub seed: u64,
}

impl BootResult {
    pub fn get(&self, kind: ParamKind, name: &str) -> Option<&BootParam> {
        self.params.iter().find(|p| p.kind == kind && p.name == name)
    }
}

struct Layout {
    paths: Vec<(usize, usize, String)>,
    totals: Vec<(usize, usize, String)>,
    loadings: Vec<(usize, usize, String)>,
}

impl Layout {
    fn of(original: &FitResult, m: &ModelSpec) -> Self {
        let names = &original.blocks;
        let paths = m
            .edges()
            .into_iter()
            .map(|(f, t)| (t, f, format!("{} -> {}", names[f], names[t])))
            .collect();
        let order = m.topological_indices();
        let effects = decompose_effects(&original.path_coefficients, &order, names);
        let totals = effects
            .rows
            .iter()
            .map(|r| {
                let f = m.block_index(&r.from).unwrap();
                let t = m.block_index(&r.to).unwrap();
                (t, f, format!("{} -> {}", r.from, r.to))
            })
            .collect();
        let loadings = original
            .manifests
            .iter()
            .enumerate()
            .flat_map(|(j, mvs)| mvs.iter().enumerate().map(move |(k, n)| (j, k, n.clone())))
            .collect();
        Self { paths, totals, loadings }
    }

    fn extract(&self, f: &FitResult) -> Vec<f64> {
        let total = total_effects(&f.path_coefficients);
        self.paths
            .iter()
            .map(|&(t, s, _)| f.path_coefficients[[t, s]])
            .chain(self.totals.iter().map(|&(t, s, _)| total[[t, s]]))
            .chain(self.loadings.iter().map(|&(j, k, _)| f.loadings[j][k]))
            .collect()
    }
}

/// Flip replicate blocks whose loadings point away from the original ones.
fn align(rep: &mut FitResult, original: &FitResult) {
    for j in 0..original.n_blocks() {
        let dot: f64 = rep.loadings[j].iter().zip(&original.loadings[j]).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            rep.flip_block(j);
        }
    }
}

fn replicate_rows(seed: u64, r: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

fn run_replicate(data: &ManifestMatrix, m: &ModelSpec, original: &FitResult, seed: u64, r: usize) -> Result<FitResult> {
    let rows = replicate_rows(seed, r, data.n_rows());
    let sample = data.resample(&rows)?;
    let mut rep = fit(&sample, m)?;
    if !rep.converged {
        return Err(Error::NotConverged(rep.iterations));
    }
    align(&mut rep, original);
    Ok(rep)
}

/// Bootstrap a fitted model.
pub fn bootstrap(data: &ManifestMatrix, m: &ModelSpec, spec: &BootSpec) -> Result<BootResult> {
    spec.validate()?;
    let original = fit(data, m)?;
    if !original.converged {
        return Err(Error::NotConverged(original.iterations));
    }
    let layout = Layout::of(&original, m);

    let outcomes: Vec<Result<Vec<f64>>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| run_replicate(data, m, &original, spec.seed, r).map(|f| layout.extract(&f)))
        .collect();

    let mut draws = Vec::with_capacity(spec.replicates);
    let mut first_failure = None;
    for o in outcomes {
        match o {
            Ok(v) => draws.push(v),
            Err(e) => {
                first_failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let failed = spec.replicates - draws.len();
    if failed as f64 > MAX_FAILURE_SHARE * spec.replicates as f64 {
        return Err(Error::BootstrapFailures {
            failed,
            total: spec.replicates,
            first_failure: first_failure.unwrap_or_default(),
        });
    }

    let estimates = layout.extract(&original);
    let lo_p = (1.0 - spec.ci_level) / 2.0;
    let hi_p = (1.0 + spec.ci_level) / 2.0;
    let kinds = layout
        .paths
        .iter()
        .map(|p| (ParamKind::Path, &p.2))
        .chain(layout.totals.iter().map(|p| (ParamKind::Total, &p.2)))
        .chain(layout.loadings.iter().map(|p| (ParamKind::Loading, &p.2)));
    let params = kinds
        .enumerate()
        .map(|(i, (kind, name))| {
            let mut vals: Vec<f64> = draws.iter().map(|d| d[i]).collect();
            let b = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / b;
            let sd = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0)).sqrt()
            } else {
                0.0
            };
            vals.sort_by(f64::total_cmp);
            let ci_low = quantile_sorted(&vals, lo_p);
            let ci_high = quantile_sorted(&vals, hi_p);
            BootParam {
                kind,
                name: name.clone(),
                estimate: estimates[i],
                boot_mean: mean,
                boot_sd: sd,
                ci_low,
                ci_high,
                significant: !(ci_low <= 0.0 && 0.0 <= ci_high),
            }
        })
        .collect();

    Ok(BootResult {
        params,
        replicates: spec.replicates,
        valid_replicates: draws.len(),
        ci_level: spec.ci_level,
        seed: spec.seed,
    })
}
