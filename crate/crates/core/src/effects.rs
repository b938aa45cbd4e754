//! Direct, indirect and total effects between latent blocks.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub from: String,
    pub to: String,
    pub direct: f64,
    pub indirect: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectsTable {
    pub rows: Vec<EffectRow>,
}

impl EffectsTable {
    pub fn get(&self, from: &str, to: &str) -> Option<&EffectRow> {
        self.rows.iter().find(|r| r.from == from && r.to == to)
    }
}

/// `sum_{k=1}^{q-1} B^k`: entry `[j, i]` is the total effect of block i on j.
pub fn total_effects(b: &Array2<f64>) -> Array2<f64> {
    let q = b.nrows();
    let mut total = Array2::zeros((q, q));
    let mut power = b.clone();
    for _ in 1..q {
        total += &power;
        power = power.dot(b);
    }
    total
}

/// Decompose the inner model.
///
/// `b[j, i]` is the path coefficient of block i in the equation for block j.
/// Rows cover every ordered pair with a nonzero direct or total effect, sorted
/// by the target's then the source's position in `order`.
pub fn decompose_effects(b: &Array2<f64>, order: &[usize], names: &[String]) -> EffectsTable {
    let total = total_effects(b);
    let mut rows = Vec::new();
    for &to in order {
        for &from in order {
            let direct = b[[to, from]];
            let tot = total[[to, from]];
            if direct == 0.0 && tot == 0.0 {
                continue;
            }
            rows.push(EffectRow {
                from: names[from].clone(),
                to: names[to].clone(),
                direct,
                indirect: tot - direct,
                total: tot,
            });
        }
    }
    EffectsTable { rows }
}
