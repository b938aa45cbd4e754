//! 0–100 composite indices built from a fitted block, and rank agreement
//! between index variants.

use std::collections::{BTreeSet, HashMap};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::{scale_0_100, Dataset, EntityKey};
use crate::error::{Error, Result};
use crate::estimator::FitResult;
use crate::model::ModelSpec;
use crate::stats::{correlation_p_value, spearman};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub entity: EntityKey,
    pub score: f64,
    pub rank: usize,
}

/// Index scores sorted by rank (ties keep input order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexTable {
    pub label: String,
    pub block: String,
    /// Normalized weights (summing to 1), in manifest order.
    pub weights: Vec<f64>,
    pub rows: Vec<IndexRow>,
    /// Some entities share a rank.
    pub ties: bool,
}

impl IndexTable {
    pub fn score_of(&self, entity: &EntityKey) -> Option<f64> {
        self.rows.iter().find(|r| &r.entity == entity).map(|r| r.score)
    }
}

/// Build the index of `block`.
///
/// `scaled_mvs` holds the block's manifests on the 0–100 scale (best at 100),
/// one column per manifest in model order and one row per entity.
pub fn build_index(
    fit: &FitResult,
    scaled_mvs: ArrayView2<f64>,
    block: &str,
    entities: &[EntityKey],
    label: &str,
) -> Result<IndexTable> {
    let j = fit.block_index(block)?;
    let w = &fit.outer_weights[j];
    if scaled_mvs.ncols() != w.len() || scaled_mvs.nrows() != entities.len() {
        return Err(Error::InvalidModel(format!(
            "index matrix is {:?}, expected {} rows x {} manifests",
            scaled_mvs.dim(),
            entities.len(),
            w.len()
        )));
    }
    let sum: f64 = w.iter().sum();
    let weights: Vec<f64> = w.iter().map(|v| v / sum).collect();
    if let Some(k) = weights.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::NegativeIndexWeight {
            block: block.to_string(),
            manifest: fit.manifests[j][k].clone(),
        });
    }

    let raw: Vec<f64> = scaled_mvs
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&weights).map(|(x, w)| x * w).sum())
        .collect();
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::DegenerateRange(format!("index of {block}")));
    }
    let scores: Vec<f64> = raw.iter().map(|r| r / max * 100.0).collect();
    let (ranks, ties) = dense_ranks_desc(&scores);

    let mut rows: Vec<IndexRow> = entities
        .iter()
        .zip(scores.iter().zip(ranks))
        .map(|(e, (&score, rank))| IndexRow {
            entity: e.clone(),
            score,
            rank,
        })
        .collect();
    rows.sort_by_key(|r| r.rank);
    Ok(IndexTable {
        label: label.to_string(),
        block: block.to_string(),
        weights,
        rows,
        ties,
    })
}

/// Scale the block's manifests from `d` (honouring invert flags) and build
/// its index.
pub fn index_from_dataset(fit: &FitResult, d: &Dataset, m: &ModelSpec, block: &str, label: &str) -> Result<IndexTable> {
    let j = m.block_index(block).ok_or_else(|| Error::NoSuchBlock(block.to_string()))?;
    let spec = &m.blocks[j];
    let cols: Vec<&str> = spec.manifest.iter().map(|mv| mv.column.as_str()).collect();
    let inv: Vec<bool> = spec.manifest.iter().map(|mv| mv.invert).collect();
    let scaled = scale_0_100(d, &cols, &inv)?;
    build_index(fit, scaled.view(), block, d.entities(), label)
}

fn dense_ranks_desc(scores: &[f64]) -> (Vec<usize>, bool) {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0; scores.len()];
    let mut rank = 0;
    let mut ties = false;
    let mut prev = None;
    for &i in &idx {
        if prev == Some(scores[i]) {
            ties = true;
        } else {
            rank += 1;
            prev = Some(scores[i]);
        }
        ranks[i] = rank;
    }
    (ranks, ties)
}

/// Pairwise Spearman agreement between index variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCorrelation {
    pub labels: Vec<String>,
    pub rho: Array2<f64>,
    pub p_value: Array2<f64>,
    /// Size of the common entity set.
    pub n: usize,
}

/// Spearman rho between every pair of tables over the entities they all share.
pub fn compare_indices(tables: &[IndexTable]) -> Result<RankCorrelation> {
    let maps: Vec<HashMap<&EntityKey, f64>> = tables
        .iter()
        .map(|t| t.rows.iter().map(|r| (&r.entity, r.score)).collect())
        .collect();
    let Some(first) = tables.first() else {
        return Err(Error::InvalidModel("no index tables to compare".into()));
    };
    let common: BTreeSet<&EntityKey> = first
        .rows
        .iter()
        .map(|r| &r.entity)
        .filter(|e| maps.iter().all(|m| m.contains_key(e)))
        .collect();
    if common.is_empty() {
        return Err(Error::DisjointEntities);
    }
    let n = common.len();
    if n < 3 {
        return Err(Error::InsufficientObservations(format!(
            "{n} shared entities; rank correlation needs at least 3"
        )));
    }
    let series: Vec<Vec<f64>> = maps.iter().map(|m| common.iter().map(|e| m[e]).collect()).collect();
    let q = tables.len();
    let mut rho = Array2::from_elem((q, q), f64::NAN);
    let mut p = Array2::from_elem((q, q), f64::NAN);
    for a in 0..q {
        for b in a..q {
            let r = spearman(&series[a], &series[b]).unwrap_or(f64::NAN);
            let r = if a == b && r.is_finite() { 1.0 } else { r };
            let pv = if r.is_nan() { f64::NAN } else { correlation_p_value(r, n) };
            rho[[a, b]] = r;
            rho[[b, a]] = r;
            p[[a, b]] = pv;
            p[[b, a]] = pv;
        }
    }
    Ok(RankCorrelation {
        labels: tables.iter().map(|t| t.label.clone()).collect(),
        rho,
        p_value: p,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn fake_fit(weights: Vec<f64>) -> FitResult {
        let k = weights.len();
        FitResult {
            blocks: vec!["HC".into()],
            manifests: vec![(0..k).map(|i| format!("m{i}")).collect()],
            outer_weights: vec![weights],
            loadings: vec![vec![1.0; k]],
            scores: Array2::zeros((0, 1)),
            path_coefficients: Array2::zeros((1, 1)),
            path_std_errors: Array2::zeros((1, 1)),
            r_squared: vec![None],
            iterations: 1,
            converged: true,
            sign_ties: 0,
        }
    }

    fn keys(n: usize) -> Vec<EntityKey> {
        (0..n).map(|i| EntityKey::new(format!("E{i}"), None)).collect()
    }

    #[test]
    fn entity_at_both_maxima_scores_100() {
        let x = array![[100.0, 100.0], [40.0, 10.0], [0.0, 0.0], [70.0, 20.0]];
        let t = build_index(&fake_fit(vec![0.6, 0.6]), x.view(), "HC", &keys(4), "m").unwrap();
        assert_eq!(t.rows[0].entity.country, "E0");
        assert_eq!(t.rows[0].score, 100.0);
        assert_eq!(t.rows[0].rank, 1);
        assert_eq!(t.weights, vec![0.5, 0.5]);
        assert!(!t.ties);
        let ranks: Vec<usize> = t.rows.iter().map(|r| r.rank).collect();
        assert_eq!(ranks, vec![1, 2, 3, 4]);
    }

    #[test]
    fn single_manifest_is_identity() {
        let x = array![[100.0], [25.0], [0.0]];
        let t = build_index(&fake_fit(vec![1.0]), x.view(), "HC", &keys(3), "m").unwrap();
        let scores: Vec<f64> = t.rows.iter().map(|r| r.score).collect();
        assert_eq!(scores, vec![100.0, 25.0, 0.0]);

        let x = array![[50.0], [25.0], [0.0]];
        let t = build_index(&fake_fit(vec![1.0]), x.view(), "HC", &keys(3), "m").unwrap();
        assert_eq!(t.rows[1].score, 50.0);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let err = build_index(&fake_fit(vec![0.9, -0.2]), x.view(), "HC", &keys(2), "m").unwrap_err();
        assert!(matches!(err, Error::NegativeIndexWeight { ref manifest, .. } if manifest == "m1"));
    }

    #[test]
    fn dense_ties() {
        let (r, ties) = dense_ranks_desc(&[5.0, 7.0, 5.0, 1.0]);
        assert_eq!(r, vec![2, 1, 2, 3]);
        assert!(ties);
    }

    fn table(label: &str, scores: &[f64]) -> IndexTable {
        let x = Array2::from_shape_vec((scores.len(), 1), scores.to_vec()).unwrap();
        build_index(&fake_fit(vec![1.0]), x.view(), "HC", &keys(scores.len()), label).unwrap()
    }

    #[test]
    fn self_and_reversed() {
        let a = table("a", &[10.0, 20.0, 30.0, 40.0, 50.0]);
        let b = table("b", &[50.0, 40.0, 30.0, 20.0, 10.0]);
        let c = compare_indices(&[a.clone(), a.clone(), b]).unwrap();
        assert!((c.rho[[0, 1]] - 1.0).abs() < 1e-12);
        assert!((c.rho[[0, 2]] + 1.0).abs() < 1e-12);
        assert_eq!(c.rho[[2, 0]], c.rho[[0, 2]]);
        assert_eq!(c.n, 5);
    }

    #[test]
    fn disjoint_sets() {
        let a = table("a", &[1.0, 2.0, 3.0]);
        let mut b = a.clone();
        for r in &mut b.rows {
            r.entity.country.push('x');
        }
        assert!(matches!(compare_indices(&[a, b]), Err(Error::DisjointEntities)));
    }

    proptest! {
        #[test]
        fn raising_one_value_never_lowers_its_score(
            vals in prop::collection::vec(0.0f64..100.0, 12),
            w in (0.05f64..1.0, 0.05f64..1.0),
            who in 0usize..6,
            col in 0usize..2,
            bump in 0.0f64..50.0,
        ) {
            let mut x = Array2::from_shape_vec((6, 2), vals).unwrap();
            x[[0, 0]] = 100.0;
            let fit = fake_fit(vec![w.0, w.1]);
            let before = build_index(&fit, x.view(), "HC", &keys(6), "m").unwrap();
            x[[who, col]] = (x[[who, col]] + bump).min(100.0);
            let after = build_index(&fit, x.view(), "HC", &keys(6), "m").unwrap();
            let e = &keys(6)[who];
            prop_assert!(after.score_of(e).unwrap() >= before.score_of(e).unwrap() - 1e-12);
            let top = after.rows.iter().map(|r| r.score).fold(0.0, f64::max);
            prop_assert_eq!(top, 100.0);
        }
    }
}
