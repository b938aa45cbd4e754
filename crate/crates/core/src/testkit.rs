//! Synthetic panels with known latent structure.
//!
//! Latent variables are drawn in topological order: exogenous blocks are
//! standard normal, endogenous blocks are `sum(beta * parent) + disturbance`
//! with the disturbance scaled so that every latent has unit variance.
//! Manifests are `loading * latent + noise`, noise variance `1 - loading^2`
//! unless an explicit noise sd is given.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, EntityKey};
use crate::error::{Error, Result};
use crate::model::{BlockSpec, ManifestSpec, MeasurementMode, ModelSpec, PathSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthBlock {
    pub name: String,
    /// Manifest column names; defaults to `<block>_<k>` when empty.
    #[serde(default)]
    pub manifests: Vec<String>,
    pub loadings: Vec<f64>,
    /// Per-manifest noise sd; `sqrt(1 - loading^2)` when absent.
    #[serde(default)]
    pub noise_sd: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPath {
    pub from: String,
    pub to: String,
    pub beta: f64,
}

/// Extra correlation between the noise terms of two manifests of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualCorrelation {
    pub block: String,
    pub first: usize,
    pub second: usize,
    pub corr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub blocks: Vec<SynthBlock>,
    #[serde(default)]
    pub paths: Vec<SynthPath>,
    #[serde(default)]
    pub residual_corr: Vec<ResidualCorrelation>,
    pub seed: u64,
}

/// What the generator actually used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Truth {
    pub blocks: Vec<String>,
    pub loadings: BTreeMap<String, f64>,
    pub paths: Vec<SynthPath>,
    /// Model-implied latent correlation matrix (row-major, blocks order).
    pub latent_corr: Vec<Vec<f64>>,
    /// Drawn latent scores, one column per block.
    #[serde(skip)]
    pub latent: Array2<f64>,
}

impl SynthBlock {
    fn manifest_names(&self) -> Vec<String> {
        if self.manifests.is_empty() {
            (1..=self.loadings.len()).map(|k| format!("{}_{k}", self.name)).collect()
        } else {
            self.manifests.clone()
        }
    }
}

impl SynthSpec {
    /// The reflective model whose structure this spec generates.
    pub fn model(&self) -> Result<ModelSpec> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| BlockSpec {
                name: b.name.clone(),
                mode: MeasurementMode::A,
                manifest: b
                    .manifest_names()
                    .into_iter()
                    .map(|column| ManifestSpec { column, invert: false })
                    .collect(),
            })
            .collect();
        let paths = self
            .paths
            .iter()
            .map(|p| PathSpec {
                from: p.from.clone(),
                to: p.to.clone(),
            })
            .collect();
        ModelSpec::new(blocks, paths)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidSynthSpec(format!("n = {} (need at least 10)", self.n)));
        }
        for b in &self.blocks {
            if b.loadings.is_empty() {
                return Err(Error::InvalidSynthSpec(format!("block `{}` has no loadings", b.name)));
            }
            if !b.manifests.is_empty() && b.manifests.len() != b.loadings.len() {
                return Err(Error::InvalidSynthSpec(format!("block `{}`: manifest/loading count mismatch", b.name)));
            }
            if let Some(sd) = &b.noise_sd {
                if sd.len() != b.loadings.len() || sd.iter().any(|s| *s < 0.0 || !s.is_finite()) {
                    return Err(Error::InvalidSynthSpec(format!("block `{}`: bad noise_sd", b.name)));
                }
            }
            for (name, l) in b.manifest_names().iter().zip(&b.loadings) {
                if !(l.abs() <= 1.0) {
                    return Err(Error::NegativeResidualVariance(name.clone()));
                }
            }
        }
        Ok(())
    }
}

/// Draw a dataset and its truth record. Deterministic in `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<(Dataset, Truth)> {
    spec.validate()?;
    let model = spec.model()?;
    let q = model.n_blocks();
    let n = spec.n;
    let mut beta = Array2::<f64>::zeros((q, q));
    for p in &spec.paths {
        let f = model.block_index(&p.from).expect("validated");
        let t = model.block_index(&p.to).expect("validated");
        beta[[t, f]] = p.beta;
    }
    let preds = model.predecessors();
    let order = model.topological_indices();

    // Implied latent correlations, filled in topological order.
    let mut sigma = Array2::<f64>::eye(q);
    let mut disturbance_sd = vec![1.0; q];
    for (pos, &j) in order.iter().enumerate() {
        if preds[j].is_empty() {
            continue;
        }
        let mut explained = 0.0;
        for &a in &preds[j] {
            for &b in &preds[j] {
                explained += beta[[j, a]] * beta[[j, b]] * sigma[[a, b]];
            }
        }
        if !(explained < 1.0) {
            return Err(Error::InvalidSynthSpec(format!(
                "paths into `{}` explain {explained:.3} >= 1 of its variance",
                model.blocks[j].name
            )));
        }
        disturbance_sd[j] = (1.0 - explained).sqrt();
        for &k in &order[..pos] {
            let c: f64 = preds[j].iter().map(|&a| beta[[j, a]] * sigma[[a, k]]).sum();
            sigma[[j, k]] = c;
            sigma[[k, j]] = c;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draw = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    let mut latent = Array2::<f64>::zeros((n, q));
    for &j in &order {
        for i in 0..n {
            let mean: f64 = preds[j].iter().map(|&a| beta[[j, a]] * latent[[i, a]]).sum();
            latent[[i, j]] = mean + disturbance_sd[j] * draw(&mut rng);
        }
    }

    let names = model.manifest_names();
    let ranges = model.block_ranges();
    let mut values = Array2::<f64>::zeros((n, names.len()));
    let mut loadings = BTreeMap::new();
    for (j, b) in spec.blocks.iter().enumerate() {
        let sds: Vec<f64> = match &b.noise_sd {
            Some(sd) => sd.clone(),
            None => b.loadings.iter().map(|l| (1.0 - l * l).max(0.0).sqrt()).collect(),
        };
        let mut noise = Array2::<f64>::zeros((n, b.loadings.len()));
        for k in 0..b.loadings.len() {
            for i in 0..n {
                noise[[i, k]] = draw(&mut rng);
            }
        }
        for rc in spec.residual_corr.iter().filter(|rc| rc.block == b.name) {
            let len = b.loadings.len();
            if rc.first >= len || rc.second >= len || rc.first == rc.second || !(rc.corr.abs() <= 1.0) {
                return Err(Error::InvalidSynthSpec(format!("bad residual correlation in `{}`", b.name)));
            }
            if rc.corr != 0.0 && (sds[rc.first] == 0.0 || sds[rc.second] == 0.0) {
                let col = ranges[j].start + if sds[rc.first] == 0.0 { rc.first } else { rc.second };
                return Err(Error::NegativeResidualVariance(names[col].clone()));
            }
            // Shared factor with weight sqrt(|rho|) gives the two unit noises correlation rho.
            let a = rc.corr.abs().sqrt();
            let rest = (1.0 - rc.corr.abs()).sqrt();
            let sign = rc.corr.signum();
            for i in 0..n {
                let common = draw(&mut rng);
                noise[[i, rc.first]] = a * common + rest * noise[[i, rc.first]];
                noise[[i, rc.second]] = sign * a * common + rest * noise[[i, rc.second]];
            }
        }
        for (k, (&l, &sd)) in b.loadings.iter().zip(&sds).enumerate() {
            let col = ranges[j].start + k;
            for i in 0..n {
                values[[i, col]] = l * latent[[i, j]] + sd * noise[[i, k]];
            }
            loadings.insert(names[col].clone(), l);
        }
    }

    let entities = (0..n).map(|i| EntityKey::new(format!("S{:05}", i + 1), None)).collect();
    let data = Dataset::new(entities, names, values)?;
    let truth = Truth {
        blocks: model.block_names(),
        loadings,
        paths: spec.paths.clone(),
        latent_corr: sigma.rows().into_iter().map(|r| r.to_vec()).collect(),
        latent,
    };
    Ok((data, truth))
}

impl Truth {
    pub fn latent_column(&self, block: &str) -> Option<Array1<f64>> {
        let j = self.blocks.iter().position(|b| b == block)?;
        Some(self.latent.column(j).to_owned())
    }
}

/// Five-block topology of the human-capital model: socio-economic context,
/// household size, education, health, human capital, with the eight paths of
/// the sensitivity specification where education feeds health.
pub fn human_capital_spec(n: usize, seed: u64, loadings: [[f64; 2]; 4]) -> SynthSpec {
    let block = |name: &str, cols: &[&str], l: &[f64]| SynthBlock {
        name: name.into(),
        manifests: cols.iter().map(|c| c.to_string()).collect(),
        loadings: l.to_vec(),
        noise_sd: None,
    };
    let p = |from: &str, to: &str, beta: f64| SynthPath {
        from: from.into(),
        to: to.into(),
        beta,
    };
    SynthSpec {
        n,
        blocks: vec![
            block("Socio-economic", &["VAAS", "GNI"], &loadings[0]),
            block("Household size", &["FR"], &[1.0]),
            block("Health status", &["LE", "MR"], &loadings[1]),
            block("Educ. achievements", &["AYE", "SPR"], &loadings[2]),
            block("Human capital", &["EC", "PP"], &loadings[3]),
        ],
        paths: vec![
            p("Socio-economic", "Household size", -0.712),
            p("Household size", "Educ. achievements", -0.511),
            p("Socio-economic", "Educ. achievements", 0.360),
            p("Household size", "Health status", -0.166),
            p("Socio-economic", "Health status", 0.309),
            p("Educ. achievements", "Health status", 0.494),
            p("Health status", "Human capital", 0.461),
            p("Educ. achievements", "Human capital", 0.445),
        ],
        residual_corr: vec![],
        seed,
    }
}

/// Two blocks with two manifests each and a single path.
pub fn two_block_spec(n: usize, seed: u64, loadings: [f64; 4], beta: f64) -> SynthSpec {
    SynthSpec {
        n,
        blocks: vec![
            SynthBlock {
                name: "A".into(),
                manifests: vec!["a1".into(), "a2".into()],
                loadings: loadings[..2].to_vec(),
                noise_sd: None,
            },
            SynthBlock {
                name: "B".into(),
                manifests: vec!["b1".into(), "b2".into()],
                loadings: loadings[2..].to_vec(),
                noise_sd: None,
            },
        ],
        paths: vec![SynthPath {
            from: "A".into(),
            to: "B".into(),
            beta,
        }],
        residual_corr: vec![],
        seed,
    }
}
