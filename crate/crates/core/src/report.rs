//! Report tables: a small cell-based table type with text, CSV and JSON
//! renderings, plus builders for the standard PLS-PM report layouts.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize, Serializer};

use crate::assessment::{BlockQuality, CrossLoadings, ResidualPair, Status, UnidimReport, Verdict};
use crate::bootstrap::{BootResult, ParamKind};
use crate::econometrics::{CorrelationMatrix, RegressionResult};
use crate::effects::EffectsTable;
use crate::error::{Error, Result};
use crate::estimator::FitResult;
use crate::index::{IndexTable, RankCorrelation};
use crate::model::MeasurementMode;

/// Marks a bootstrap interval that excludes zero.
pub const SIGNIFICANT_MARK: &str = "†";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Marked { value: f64, mark: String },
    Empty,
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        match self {
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Marked { value, mark } if value.is_finite() => {
                let mut st = s.serialize_struct("Cell", 2)?;
                st.serialize_field("value", value)?;
                st.serialize_field("mark", mark)?;
                st.end()
            }
            _ => s.serialize_unit(),
        }
    }
}

impl Cell {
    pub fn num(v: f64) -> Cell {
        if v.is_finite() {
            Cell::Num(v)
        } else {
            Cell::Empty
        }
    }

    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::num)
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    pub fn marked(v: f64, mark: &str) -> Cell {
        if v.is_finite() {
            Cell::Marked {
                value: v,
                mark: mark.to_string(),
            }
        } else {
            Cell::Empty
        }
    }

    fn is_numeric(&self) -> bool {
        matches!(self, Cell::Int(_) | Cell::Num(_) | Cell::Marked { .. })
    }

    fn render_text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{v:.3}"),
            Cell::Text(t) => t.clone(),
            Cell::Marked { value, mark } => format!("{value:.3}{mark}"),
            Cell::Empty => String::new(),
        }
    }

    fn render_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Text(t) => t.clone(),
            Cell::Marked { value, mark } => format!("{value}{mark}"),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, title: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        let j = self.columns.iter().position(|c| c == column)?;
        self.rows.get(row)?.get(j)
    }

    /// Fixed-width text, numbers to 3 decimals.
    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::render_text).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].chars().count())
                    .chain(std::iter::once(self.columns[j].chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let numeric: Vec<bool> = (0..self.columns.len())
            .map(|j| self.rows.iter().any(|r| r[j].is_numeric()))
            .collect();
        let line = |vals: &[String]| {
            let mut s = String::new();
            for (j, v) in vals.iter().enumerate() {
                if j > 0 {
                    s.push_str("  ");
                }
                let pad = widths[j] - v.chars().count();
                if numeric[j] {
                    s.extend(std::iter::repeat_n(' ', pad));
                    s.push_str(v);
                } else {
                    s.push_str(v);
                    s.extend(std::iter::repeat_n(' ', pad));
                }
            }
            s.trim_end().to_string()
        };
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let header = line(&self.columns);
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{}", "-".repeat(header.chars().count()));
        for r in &cells {
            let _ = writeln!(out, "{}", line(r));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |source| Error::Csv {
            path: format!("<{}>", self.name).into(),
            source,
        };
        w.write_record(&self.columns).map_err(err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render_csv)).map_err(err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: format!("<{}>", self.name).into(),
            source,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn mode_label(m: MeasurementMode) -> &'static str {
    match m {
        MeasurementMode::A => "Reflective",
        MeasurementMode::B => "Formative",
    }
}

/// Block-level unidimensionality: alpha, Dillon-Goldstein rho, eigenvalues.
pub fn unidimensionality_table(reports: &[UnidimReport]) -> Table {
    let mut t = Table::new(
        "unidimensionality",
        "Unidimensionality of the blocks",
        &["Block", "Mode", "MV", "Cronbach", "Dillon-Goldstein", "First Eigenvalues", "Second Eigenvalues"],
    );
    for r in reports {
        t.push(vec![
            Cell::text(&r.block),
            Cell::text(mode_label(r.mode)),
            Cell::Int(r.mv_count as i64),
            Cell::num(r.cronbach_alpha),
            Cell::num(r.dg_rho),
            Cell::num(r.eig1),
            Cell::num(r.eig2),
        ]);
    }
    t
}

/// Weights, loadings, communalities and redundancies per manifest.
pub fn outer_model_table(quality: &[BlockQuality]) -> Table {
    let mut t = Table::new(
        "outer_model",
        "Outer model",
        &["VM", "Block", "Weights", "Loadings", "Communality", "Redundancy"],
    );
    for b in quality {
        for mv in &b.manifests {
            t.push(vec![
                Cell::text(&mv.name),
                Cell::text(&b.block),
                Cell::num(mv.weight),
                Cell::num(mv.loading),
                Cell::num(mv.communality),
                Cell::opt(mv.redundancy),
            ]);
        }
    }
    t
}

/// Correlation of every manifest with every block score.
pub fn cross_loadings_table(c: &CrossLoadings) -> Table {
    let mut cols = vec!["VM", "Block"];
    cols.extend(c.blocks.iter().map(String::as_str));
    cols.push("Discriminant");
    let mut t = Table::new("cross_loadings", "Cross-loadings", &cols);
    for (i, name) in c.manifests.iter().enumerate() {
        let mut row = vec![Cell::text(name), Cell::text(&c.blocks[c.own_block[i]])];
        row.extend(c.matrix.row(i).iter().map(|v| Cell::num(*v)));
        row.push(Cell::text(if c.discriminant_ok[i] { "ok" } else { "no" }));
        t.push(row);
    }
    t
}

/// Block summary: R², average communality and redundancy, AVE, then GoF.
pub fn inner_model_table(quality: &[BlockQuality], gof: Option<f64>) -> Table {
    let mut t = Table::new(
        "inner_model",
        "Inner model",
        &["Block", "Type", "R^2", "Av. Commu.", "Av. Redun.", "AVE"],
    );
    for b in quality {
        t.push(vec![
            Cell::text(&b.block),
            Cell::text(if b.endogenous { "Endogenous" } else { "Exogenous" }),
            Cell::opt(b.r_squared),
            Cell::num(b.avg_communality),
            Cell::opt(b.avg_redundancy),
            Cell::num(b.ave),
        ]);
    }
    t.push(vec![
        Cell::text("GoF"),
        Cell::Empty,
        Cell::opt(gof),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
    ]);
    t
}

/// Structural model: path coefficients with standard errors, the
/// direct/indirect/total decomposition, then R² per endogenous block.
pub fn structural_table(fit: &FitResult, effects: &EffectsTable) -> Table {
    let mut t = Table::new(
        "structural",
        "Structural model and effects",
        &["From", "To", "Coefficient", "Std. Error", "Direct", "Indirect", "Total"],
    );
    for r in &effects.rows {
        let (coef, se) = match (fit.block_index(&r.from), fit.block_index(&r.to)) {
            (Ok(f), Ok(to)) if r.direct != 0.0 => (
                Cell::num(fit.path_coefficients[[to, f]]),
                Cell::num(fit.path_std_errors[[to, f]]),
            ),
            _ => (Cell::Empty, Cell::Empty),
        };
        t.push(vec![
            Cell::text(&r.from),
            Cell::text(&r.to),
            coef,
            se,
            Cell::num(r.direct),
            Cell::num(r.indirect),
            Cell::num(r.total),
        ]);
    }
    for (b, r2) in fit.blocks.iter().zip(&fit.r_squared) {
        if let Some(r2) = r2 {
            t.push(vec![
                Cell::text("R^2"),
                Cell::text(b),
                Cell::num(*r2),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
            ]);
        }
    }
    t
}

/// Bootstrap summary. Intervals excluding zero carry [`SIGNIFICANT_MARK`].
pub fn bootstrap_table(b: &BootResult) -> Table {
    let pct = format!("{:.0}%", b.ci_level * 100.0);
    let lo = format!("{pct} low");
    let hi = format!("{pct} high");
    let mut t = Table::new(
        "bootstrap",
        &format!(
            "Bootstrap ({} of {} replicates, seed {})",
            b.valid_replicates, b.replicates, b.seed
        ),
        &["Kind", "Parameter", "Estimate", "Boot mean", "Boot SD", &lo, &hi, "Sig"],
    );
    for p in &b.params {
        let kind = match p.kind {
            ParamKind::Path => "path",
            ParamKind::Total => "total",
            ParamKind::Loading => "loading",
        };
        t.push(vec![
            Cell::text(kind),
            Cell::text(&p.name),
            Cell::num(p.estimate),
            Cell::num(p.boot_mean),
            Cell::num(p.boot_sd),
            Cell::num(p.ci_low),
            Cell::num(p.ci_high),
            Cell::text(if p.significant { SIGNIFICANT_MARK } else { "" }),
        ]);
    }
    t
}

/// Index scores, one row per entity and model, sorted by rank.
pub fn index_table(tables: &[IndexTable]) -> Table {
    let mut t = Table::new("index", "Index scores (0-100)", &["model", "entity", "score", "rank"]);
    for it in tables {
        for r in &it.rows {
            t.push(vec![
                Cell::text(&it.label),
                Cell::text(r.entity.to_string()),
                Cell::num(r.score),
                Cell::Int(r.rank as i64),
            ]);
        }
    }
    t
}

/// Rank agreement between index variants; `a` marks significance at 1%.
pub fn rank_correlation_table(c: &RankCorrelation) -> Table {
    let mut cols = vec![""];
    cols.extend(c.labels.iter().map(String::as_str));
    let mut t = Table::new("index_comparison", &format!("Spearman's rho between indices (n = {})", c.n), &cols);
    for (i, l) in c.labels.iter().enumerate() {
        let mut row = vec![Cell::text(l)];
        for j in 0..c.labels.len() {
            let mark = if i != j && c.p_value[[i, j]] < 0.01 { "a" } else { "" };
            row.push(Cell::marked(c.rho[[i, j]], mark));
        }
        t.push(row);
    }
    t
}

/// Spearman matrix, lower triangle, `a` marking significance at 1%.
pub fn spearman_table(c: &CorrelationMatrix) -> Table {
    let mut cols = vec![""];
    cols.extend(c.columns.iter().map(String::as_str));
    let mut t = Table::new("spearman", &format!("Spearman's rho (n = {})", c.n), &cols);
    for (i, name) in c.columns.iter().enumerate() {
        let mut row = vec![Cell::text(name)];
        for j in 0..c.columns.len() {
            row.push(if j <= i { Cell::marked(c.rho[[i, j]], c.mark(i, j)) } else { Cell::Empty });
        }
        t.push(row);
    }
    t
}

/// Regressions side by side: one column per model, a coefficient row (with
/// stars) and a standard-error row per term, then controls, R² and N.
pub fn regression_table(results: &[RegressionResult]) -> Table {
    let heads: Vec<String> = results
        .iter()
        .enumerate()
        .map(|(i, r)| r.label.clone().unwrap_or_else(|| format!("({})", i + 1)))
        .collect();
    let mut cols = vec!["Variable"];
    cols.extend(heads.iter().map(String::as_str));
    let dep = results.first().map(|r| r.dependent.as_str()).unwrap_or("");
    let mut t = Table::new("regression", &format!("Dependent variable: {dep}"), &cols);

    let mut names: Vec<&str> = Vec::new();
    for r in results {
        for term in r.terms.iter().filter(|t| !t.control) {
            if !names.contains(&term.name.as_str()) {
                names.push(&term.name);
            }
        }
    }
    let se_label = if results.iter().all(|r| r.covariance == "classical") {
        "  (s.e.)"
    } else {
        "  (robust s.e.)"
    };
    let rows_for = |name: &str, t: &mut Table, pick: &dyn Fn(&RegressionResult) -> Option<crate::econometrics::Term>| {
        let mut coef = vec![Cell::text(name)];
        let mut se = vec![Cell::text(se_label)];
        for r in results {
            match pick(r) {
                Some(term) => {
                    coef.push(Cell::marked(term.coefficient, &term.stars));
                    se.push(Cell::num(term.std_error));
                }
                None => {
                    coef.push(Cell::Empty);
                    se.push(Cell::Empty);
                }
            }
        }
        t.push(coef);
        t.push(se);
    };
    for name in &names {
        rows_for(name, &mut t, &|r| r.term(name).cloned());
    }
    rows_for("Constant", &mut t, &|r| Some(r.intercept.clone()));

    let mut controls = vec![Cell::text("Controls")];
    let mut r2 = vec![Cell::text("R^2")];
    let mut n = vec![Cell::text("N")];
    for r in results {
        controls.push(Cell::text(if r.terms.iter().any(|t| t.control) { "yes" } else { "no" }));
        r2.push(Cell::num(r.r_squared));
        n.push(Cell::Int(r.n as i64));
    }
    t.push(controls);
    t.push(r2);
    t.push(n);
    t
}

/// Outer-residual correlations, one row per manifest pair.
pub fn residuals_table(blocks: &[(String, Vec<ResidualPair>)]) -> Table {
    let mut t = Table::new(
        "residuals",
        "Outer residual correlations",
        &["Block", "MV 1", "MV 2", "Correlation", "Degenerate"],
    );
    for (block, pairs) in blocks {
        for p in pairs {
            t.push(vec![
                Cell::text(block),
                Cell::text(&p.first),
                Cell::text(&p.second),
                Cell::num(p.corr),
                Cell::text(if p.degenerate { "yes" } else { "no" }),
            ]);
        }
    }
    t
}

/// Rule-of-thumb verdicts.
pub fn screen_table(verdicts: &[Verdict]) -> Table {
    let mut t = Table::new(
        "screen",
        "Threshold screen",
        &["Rule", "Subject", "Value", "Threshold", "Status", "Note"],
    );
    for v in verdicts {
        t.push(vec![
            Cell::text(format!("{:?}", v.rule)),
            Cell::text(&v.subject),
            Cell::num(v.value),
            Cell::num(v.threshold),
            Cell::text(match v.status {
                Status::Pass => "pass",
                Status::Warn => "warn",
                Status::Fail => "fail",
            }),
            Cell::text(v.note.clone().unwrap_or_default()),
        ]);
    }
    t
}

/// A set of tables rendered as one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tables: Vec<Table>,
}

impl Report {
    pub fn to_text(&self) -> String {
        self.tables.iter().map(Table::to_text).collect::<Vec<_>>().join("\n")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}
