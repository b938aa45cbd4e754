//! Declarative latent-variable model: blocks of manifest variables, the inner
//! DAG between blocks, and solver settings.

use std::collections::{HashMap, HashSet};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MeasurementMode {
    /// Reflective.
    #[default]
    A,
    /// Formative.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InnerScheme {
    #[default]
    Centroid,
    Factorial,
    Path,
}

impl std::str::FromStr for InnerScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "centroid" => Ok(Self::Centroid),
            "factorial" => Ok(Self::Factorial),
            "path" => Ok(Self::Path),
            other => Err(Error::InvalidModel(format!("unknown inner scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSpec {
    pub column: String,
    /// Reverse the column so that larger is better (e.g. mortality).
    #[serde(default)]
    pub invert: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub name: String,
    #[serde(default)]
    pub mode: MeasurementMode,
    pub manifest: Vec<ManifestSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSpec {
    pub from: String,
    pub to: String,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    300
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub blocks: Vec<BlockSpec>,
    #[serde(default)]
    pub paths: Vec<PathSpec>,
    #[serde(default)]
    pub scheme: InnerScheme,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

/// Read and validate a JSON model file.
pub fn parse_model(path: impl AsRef<Path>) -> Result<ModelSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ModelSpec::from_json(&text)
}

impl ModelSpec {
    /// Build and validate a model with default solver settings.
    pub fn new(blocks: Vec<BlockSpec>, paths: Vec<PathSpec>) -> Result<Self> {
        let m = Self {
            blocks,
            paths,
            scheme: InnerScheme::default(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelSpec = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidModel("no blocks declared".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidModel("tol must be positive and max_iter at least 1".into()));
        }
        let mut names = HashSet::new();
        let mut manifests = HashSet::new();
        for b in &self.blocks {
            if !names.insert(b.name.as_str()) {
                return Err(Error::InvalidModel(format!("duplicate block `{}`", b.name)));
            }
            if b.manifest.is_empty() {
                return Err(Error::InvalidModel(format!("block `{}` has no manifest variables", b.name)));
            }
            for mv in &b.manifest {
                if !manifests.insert(mv.column.as_str()) {
                    return Err(Error::DuplicateManifest(mv.column.clone()));
                }
            }
        }
        let mut seen = HashSet::new();
        for p in &self.paths {
            for end in [&p.from, &p.to] {
                if !names.contains(end.as_str()) {
                    return Err(Error::UnknownBlock(end.clone()));
                }
            }
            if p.from == p.to {
                return Err(Error::Cycle(vec![p.from.clone(), p.to.clone()]));
            }
            if !seen.insert((p.from.as_str(), p.to.as_str())) {
                return Err(Error::InvalidModel(format!("duplicate path {} -> {}", p.from, p.to)));
            }
        }
        if let Some(cycle) = self.find_cycle() {
            return Err(Error::Cycle(cycle));
        }
        if self.blocks.iter().all(|b| self.paths.iter().any(|p| p.to == b.name)) {
            return Err(Error::InvalidModel("no exogenous block".into()));
        }
        Ok(())
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn block_names(&self) -> Vec<String> {
        self.blocks.iter().map(|b| b.name.clone()).collect()
    }

    /// Manifest column names in block order.
    pub fn manifest_names(&self) -> Vec<String> {
        self.blocks
            .iter()
            .flat_map(|b| b.manifest.iter().map(|m| m.column.clone()))
            .collect()
    }

    pub fn manifest_inverts(&self) -> Vec<bool> {
        self.blocks.iter().flat_map(|b| b.manifest.iter().map(|m| m.invert)).collect()
    }

    /// Column ranges of each block within the block-ordered manifest matrix.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|b| {
                let r = start..start + b.manifest.len();
                start = r.end;
                r
            })
            .collect()
    }

    /// Index pairs `(from, to)` of the inner paths.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let idx: HashMap<&str, usize> = self.blocks.iter().enumerate().map(|(i, b)| (b.name.as_str(), i)).collect();
        self.paths.iter().map(|p| (idx[p.from.as_str()], idx[p.to.as_str()])).collect()
    }

    /// Predecessor indices of each block, ascending.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.n_blocks()];
        for (f, t) in self.edges() {
            preds[t].push(f);
        }
        preds.iter_mut().for_each(|p| p.sort_unstable());
        preds
    }

    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.n_blocks()];
        for (f, t) in self.edges() {
            succ[f].push(t);
        }
        succ.iter_mut().for_each(|s| s.sort_unstable());
        succ
    }

    pub fn is_endogenous(&self, block: usize) -> bool {
        let name = &self.blocks[block].name;
        self.paths.iter().any(|p| &p.to == name)
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        let idx: HashMap<&str, usize> = self.blocks.iter().enumerate().map(|(i, b)| (b.name.as_str(), i)).collect();
        let mut succ = vec![Vec::new(); self.blocks.len()];
        for p in &self.paths {
            if let (Some(&f), Some(&t)) = (idx.get(p.from.as_str()), idx.get(p.to.as_str())) {
                succ[f].push(t);
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.blocks.len()];
        let mut stack = Vec::new();
        fn visit(v: usize, succ: &[Vec<usize>], state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
            state[v] = 1;
            stack.push(v);
            for &w in &succ[v] {
                if state[w] == 1 {
                    let start = stack.iter().position(|&s| s == w).unwrap();
                    let mut cyc = stack[start..].to_vec();
                    cyc.push(w);
                    return Some(cyc);
                }
                if state[w] == 0 {
                    if let Some(c) = visit(w, succ, state, stack) {
                        return Some(c);
                    }
                }
            }
            stack.pop();
            state[v] = 2;
            None
        }
        for v in 0..self.blocks.len() {
            if state[v] == 0 {
                if let Some(c) = visit(v, &succ, &mut state, &mut stack) {
                    return Some(c.into_iter().map(|i| self.blocks[i].name.clone()).collect());
                }
            }
        }
        None
    }

    /// Block indices in topological order; ties go to the earlier-declared block.
    pub fn topological_indices(&self) -> Vec<usize> {
        let q = self.n_blocks();
        let mut indegree = vec![0usize; q];
        let succ = self.successors();
        for s in &succ {
            for &t in s {
                indegree[t] += 1;
            }
        }
        let mut done = vec![false; q];
        let mut order = Vec::with_capacity(q);
        while order.len() < q {
            let next = (0..q)
                .find(|&i| !done[i] && indegree[i] == 0)
                .expect("validated model is acyclic");
            done[next] = true;
            order.push(next);
            for &t in &succ[next] {
                indegree[t] -= 1;
            }
        }
        order
    }
}

/// Block names in topological order.
pub fn topological_order(m: &ModelSpec) -> Vec<String> {
    m.topological_indices().into_iter().map(|i| m.blocks[i].name.clone()).collect()
}

/// Convenience constructor for a reflective block.
pub fn reflective(name: &str, columns: &[&str]) -> BlockSpec {
    BlockSpec {
        name: name.to_string(),
        mode: MeasurementMode::A,
        manifest: columns
            .iter()
            .map(|c| ManifestSpec {
                column: c.to_string(),
                invert: false,
            })
            .collect(),
    }
}

pub fn path(from: &str, to: &str) -> PathSpec {
    PathSpec {
        from: from.to_string(),
        to: to.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HCI_MODEL: &str = r#"{
      "blocks": [
        {"name": "Socio-economic", "mode": "A", "manifest": [{"column": "VAAS"}, {"column": "GNI"}]},
        {"name": "Household size", "mode": "A", "manifest": [{"column": "FR", "invert": false}]},
        {"name": "Health status", "mode": "A", "manifest": [{"column": "LE"}, {"column": "MR", "invert": true}]},
        {"name": "Educ. achievements", "mode": "A", "manifest": [{"column": "AYE"}, {"column": "SPR"}]},
        {"name": "Human capital", "mode": "A", "manifest": [{"column": "EC"}, {"column": "PP"}]}
      ],
      "paths": [
        {"from": "Socio-economic", "to": "Household size"},
        {"from": "Household size", "to": "Educ. achievements"},
        {"from": "Socio-economic", "to": "Educ. achievements"},
        {"from": "Household size", "to": "Health status"},
        {"from": "Socio-economic", "to": "Health status"},
        {"from": "Educ. achievements", "to": "Health status"},
        {"from": "Health status", "to": "Human capital"},
        {"from": "Educ. achievements", "to": "Human capital"}
      ]
    }"#;

    #[test]
    fn hci_model_parses_with_defaults() {
        let m = ModelSpec::from_json(HCI_MODEL).unwrap();
        assert_eq!(m.paths.len(), 8);
        assert_eq!(m.scheme, InnerScheme::Centroid);
        assert_eq!(m.tol, 1e-6);
        assert_eq!(m.max_iter, 300);
        assert!(m.blocks[2].manifest[1].invert);
        assert_eq!(
            topological_order(&m),
            ["Socio-economic", "Household size", "Educ. achievements", "Health status", "Human capital"]
        );
    }

    #[test]
    fn minimal_two_block() {
        let m = ModelSpec::new(vec![reflective("A", &["a"]), reflective("B", &["b"])], vec![path("A", "B")]).unwrap();
        assert_eq!(topological_order(&m), ["A", "B"]);
    }

    #[test]
    fn two_cycle_named() {
        let err = ModelSpec::new(
            vec![reflective("A", &["a"]), reflective("B", &["b"])],
            vec![path("A", "B"), path("B", "A")],
        )
        .unwrap_err();
        match err {
            Error::Cycle(c) => {
                assert!(c.contains(&"A".to_string()) && c.contains(&"B".to_string()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_block_in_path() {
        let err = ModelSpec::new(vec![reflective("A", &["a"])], vec![path("A", "Z")]).unwrap_err();
        assert!(matches!(err, Error::UnknownBlock(b) if b == "Z"));
    }

    #[test]
    fn duplicate_manifest() {
        let err = ModelSpec::new(vec![reflective("A", &["a"]), reflective("B", &["a"])], vec![]).unwrap_err();
        assert!(matches!(err, Error::DuplicateManifest(c) if c == "a"));
    }

    #[test]
    fn single_block_order() {
        let m = ModelSpec::new(vec![reflective("Only", &["a", "b"])], vec![]).unwrap();
        assert_eq!(topological_order(&m), ["Only"]);
    }

    #[test]
    fn chain_declared_backwards() {
        let m = ModelSpec::new(
            vec![reflective("C", &["c"]), reflective("B", &["b"]), reflective("A", &["a"])],
            vec![path("A", "B"), path("B", "C")],
        )
        .unwrap();
        assert_eq!(topological_order(&m), ["A", "B", "C"]);
    }

    #[test]
    fn longer_cycle_reported() {
        let err = ModelSpec::new(
            vec![reflective("R", &["r"]), reflective("A", &["a"]), reflective("B", &["b"]), reflective("C", &["c"])],
            vec![path("R", "A"), path("A", "B"), path("B", "C"), path("C", "A")],
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "cycle detected among blocks: A -> B -> C -> A");
    }

    fn random_dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<usize>)> {
        (1usize..7).prop_flat_map(|q| {
            let pairs: Vec<(usize, usize)> = (0..q).flat_map(|i| (i + 1..q).map(move |j| (i, j))).collect();
            let n = pairs.len();
            (
                Just(q),
                prop::sample::subsequence(pairs, 0..=n),
                Just((0..q).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
    }

    fn build(q: usize, edges: &[(usize, usize)], labels: &[usize]) -> ModelSpec {
        let blocks = (0..q).map(|i| reflective(&format!("L{}", labels[i]), &[&format!("x{i}")])).collect();
        let paths = edges.iter().map(|&(f, t)| path(&format!("L{}", labels[f]), &format!("L{}", labels[t]))).collect();
        ModelSpec::new(blocks, paths).unwrap()
    }

    proptest! {
        #[test]
        fn json_round_trip((q, edges, labels) in random_dag(), scheme in 0usize..3, tol in 1e-9f64..1e-2, iters in 1usize..1000) {
            let mut m = build(q, &edges, &labels);
            m.scheme = [InnerScheme::Centroid, InnerScheme::Factorial, InnerScheme::Path][scheme];
            m.tol = tol;
            m.max_iter = iters;
            prop_assert_eq!(ModelSpec::from_json(&m.to_json()).unwrap(), m);
        }

        #[test]
        fn order_respects_edges_and_ignores_path_order((q, edges, labels) in random_dag(), seed in any::<u64>()) {
            let m = build(q, &edges, &labels);
            let order = topological_order(&m);
            let pos = |n: &str| order.iter().position(|o| o == n).unwrap();
            for p in &m.paths {
                prop_assert!(pos(&p.from) < pos(&p.to));
            }
            let mut shuffled = m.clone();
            let len = shuffled.paths.len();
            if len > 1 {
                shuffled.paths.rotate_left((seed as usize) % len);
                shuffled.paths.reverse();
            }
            prop_assert_eq!(topological_order(&shuffled), order);
        }
    }
}
