//! OLS with heteroskedasticity-robust standard errors, and Spearman tables.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::{correlation_p_value, midranks, pearson, stars, t_two_sided_p};

/// A regressor column, optionally entered as its natural log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RegressorRepr")]
pub struct Regressor {
    pub column: String,
    pub log: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RegressorRepr {
    Name(String),
    Full {
        column: String,
        #[serde(default)]
        log: bool,
    },
}

impl From<RegressorRepr> for Regressor {
    fn from(r: RegressorRepr) -> Self {
        match r {
            RegressorRepr::Name(column) => Self { column, log: false },
            RegressorRepr::Full { column, log } => Self { column, log },
        }
    }
}

impl Regressor {
    pub fn new(column: &str) -> Self {
        Self {
            column: column.to_string(),
            log: false,
        }
    }

    pub fn ln(column: &str) -> Self {
        Self {
            column: column.to_string(),
            log: true,
        }
    }

    pub fn label(&self) -> String {
        if self.log {
            format!("ln({})", self.column)
        } else {
            self.column.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Hc {
    Hc0,
    #[default]
    Hc1,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub dependent: Regressor,
    pub regressors: Vec<Regressor>,
    #[serde(default)]
    pub controls: Vec<Regressor>,
    #[serde(default = "yes")]
    pub robust: bool,
    #[serde(default)]
    pub hc: Hc,
}

impl RegressionSpec {
    pub fn new(dependent: Regressor, regressors: Vec<Regressor>) -> Self {
        Self {
            label: None,
            dependent,
            regressors,
            controls: Vec::new(),
            robust: true,
            hc: Hc::Hc1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t: f64,
    pub p_value: f64,
    pub stars: String,
    pub control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub label: Option<String>,
    pub dependent: String,
    pub intercept: Term,
    pub terms: Vec<Term>,
    pub r_squared: f64,
    pub n: usize,
    /// `"HC0"`, `"HC1"` or `"classical"`.
    pub covariance: String,
}

impl RegressionResult {
    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }
}

/// Rows with a finite value in every listed column, and the transformed
/// values (logs taken where requested).
fn design_columns(data: &Dataset, cols: &[&Regressor]) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let raw = cols
        .iter()
        .map(|c| data.column(&c.column))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<usize> = (0..data.n_rows())
        .filter(|&i| raw.iter().all(|c| c[i].is_finite()))
        .collect();
    let mut out = Vec::with_capacity(cols.len());
    for (c, col) in cols.iter().zip(&raw) {
        let mut v = Vec::with_capacity(rows.len());
        for &i in &rows {
            let x = col[i];
            if c.log {
                if x <= 0.0 {
                    return Err(Error::NonPositiveLog {
                        column: c.column.clone(),
                        row: i + 1,
                        value: x,
                    });
                }
                v.push(x.ln());
            } else {
                v.push(x);
            }
        }
        out.push(v);
    }
    Ok((rows, out))
}

/// Least squares with HC0/HC1 (or classical) standard errors.
///
/// Rows missing any used column are dropped. p-values use the t distribution
/// with `n - k` degrees of freedom, `k` counting the intercept.
pub fn ols_robust(data: &Dataset, spec: &RegressionSpec) -> Result<RegressionResult> {
    let rhs: Vec<&Regressor> = spec.regressors.iter().chain(&spec.controls).collect();
    if rhs.is_empty() {
        return Err(Error::InvalidRegression("no regressors".into()));
    }
    for (i, r) in rhs.iter().enumerate() {
        if r.column == spec.dependent.column {
            return Err(Error::InvalidRegression(format!(
                "dependent `{}` also appears as a regressor",
                r.column
            )));
        }
        if rhs[..i].iter().any(|o| o.column == r.column && o.log == r.log) {
            return Err(Error::InvalidRegression(format!("`{}` listed twice", r.label())));
        }
    }
    let mut all = vec![&spec.dependent];
    all.extend(rhs.iter().copied());
    let (_, cols) = design_columns(data, &all)?;
    let n = cols[0].len();
    let k = rhs.len() + 1;
    if n <= k {
        return Err(Error::InsufficientObservations(format!(
            "{n} complete rows for {k} parameters"
        )));
    }

    let y = DVector::from_column_slice(&cols[0]);
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { cols[j][i] });
    let names: Vec<String> = std::iter::once("(intercept)".to_string())
        .chain(rhs.iter().map(|r| r.label()))
        .collect();

    let qr = x.clone().qr();
    let r = qr.r();
    let collinear: Vec<String> = (0..k)
        .filter(|&j| {
            let norm = x.column(j).norm();
            r[(j, j)].abs() <= 1e-10 * norm.max(f64::MIN_POSITIVE)
        })
        .map(|j| names[j].clone())
        .collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient(collinear));
    }
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("upper-triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Singular("upper-triangular solve failed".into()))?;
    let bread = &r_inv * r_inv.transpose();

    let resid = &y - &x * &beta;
    let ybar = y.mean();
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    if !(sst > 0.0) {
        return Err(Error::ZeroVariance(spec.dependent.label()));
    }
    let ssr = resid.norm_squared();
    let r_squared = (1.0 - ssr / sst).clamp(0.0, 1.0);

    let df = (n - k) as f64;
    let (cov, covariance) = if spec.robust {
        let mut meat = DMatrix::zeros(k, k);
        for i in 0..n {
            let xi = x.row(i).transpose();
            meat += (&xi * xi.transpose()) * resid[i].powi(2);
        }
        let sandwich = &bread * meat * &bread;
        match spec.hc {
            Hc::Hc0 => (sandwich, "HC0"),
            Hc::Hc1 => (sandwich * (n as f64 / df), "HC1"),
        }
    } else {
        (bread * (ssr / df), "classical")
    };

    let mut terms: Vec<Term> = (0..k)
        .map(|j| {
            let se = cov[(j, j)].max(0.0).sqrt();
            let coef = beta[j];
            let t = coef / se;
            let p = if se == 0.0 && coef == 0.0 { f64::NAN } else { t_two_sided_p(t, df) };
            Term {
                name: names[j].clone(),
                coefficient: coef,
                std_error: se,
                t,
                p_value: p,
                stars: if p.is_nan() { String::new() } else { stars(p).to_string() },
                control: j > spec.regressors.len(),
            }
        })
        .collect();
    let intercept = terms.remove(0);
    Ok(RegressionResult {
        label: spec.label.clone(),
        dependent: spec.dependent.label(),
        intercept,
        terms,
        r_squared,
        n,
        covariance: covariance.to_string(),
    })
}

/// Spearman correlations between columns. Undefined entries (constant
/// columns) are NaN and the column is listed in `constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub columns: Vec<String>,
    pub rho: Array2<f64>,
    pub p_value: Array2<f64>,
    pub n: usize,
    pub constant: Vec<String>,
}

impl CorrelationMatrix {
    /// `"a"` when the pair is significant at 1%.
    pub fn mark(&self, i: usize, j: usize) -> &'static str {
        if i != j && self.p_value[[i, j]] < 0.01 {
            "a"
        } else {
            ""
        }
    }
}

/// Midrank Spearman matrix over rows complete in every listed column.
pub fn spearman_matrix(data: &Dataset, columns: &[impl AsRef<str>]) -> Result<CorrelationMatrix> {
    let regs: Vec<Regressor> = columns.iter().map(|c| Regressor::new(c.as_ref())).collect();
    let refs: Vec<&Regressor> = regs.iter().collect();
    let (_, cols) = design_columns(data, &refs)?;
    let n = cols.first().map_or(0, Vec::len);
    if n < 5 {
        return Err(Error::InsufficientObservations(format!(
            "{n} complete rows; Spearman table needs at least 5"
        )));
    }
    let ranks: Vec<Vec<f64>> = cols.iter().map(|c| midranks(c)).collect();
    let q = cols.len();
    let constant: Vec<String> = (0..q)
        .filter(|&j| ranks[j].iter().all(|r| *r == ranks[j][0]))
        .map(|j| regs[j].column.clone())
        .collect();
    let mut rho = Array2::from_elem((q, q), f64::NAN);
    let mut p = Array2::from_elem((q, q), f64::NAN);
    for a in 0..q {
        for b in a..q {
            let r = pearson(&ranks[a], &ranks[b]).unwrap_or(f64::NAN);
            let r = if a == b && r.is_finite() { 1.0 } else { r };
            let pv = if r.is_nan() { f64::NAN } else { correlation_p_value(r, n) };
            rho[[a, b]] = r;
            rho[[b, a]] = r;
            p[[a, b]] = pv;
            p[[b, a]] = pv;
        }
    }
    Ok(CorrelationMatrix {
        columns: regs.into_iter().map(|r| r.column).collect(),
        rho,
        p_value: p,
        n,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::EntityKey;
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(cols: &[(&str, Vec<f64>)]) -> Dataset {
        let n = cols[0].1.len();
        let mut v = Array2::zeros((n, cols.len()));
        for (j, (_, c)) in cols.iter().enumerate() {
            for i in 0..n {
                v[[i, j]] = c[i];
            }
        }
        Dataset::new(
            (0..n).map(|i| EntityKey::new(format!("E{i}"), None)).collect(),
            cols.iter().map(|c| c.0.to_string()).collect(),
            v,
        )
        .unwrap()
    }

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let d = dataset(&[("y", y), ("x", x)]);
        let r = ols_robust(&d, &RegressionSpec::new(Regressor::new("y"), vec![Regressor::new("x")])).unwrap();
        let t = r.term("x").unwrap();
        assert!((t.coefficient - 2.0).abs() < 1e-12);
        assert!((r.intercept.coefficient - 1.0).abs() < 1e-12);
        assert!(t.std_error < 1e-12);
        assert_eq!(r.r_squared, 1.0);
        assert_eq!(r.covariance, "HC1");
    }

    #[test]
    fn single_regressor_r2_is_r_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| v + rng.random::<f64>()).collect();
        let r = pearson(&x, &y).unwrap();
        let d = dataset(&[("y", y), ("x", x)]);
        let res = ols_robust(&d, &RegressionSpec::new(Regressor::new("y"), vec![Regressor::new("x")])).unwrap();
        assert!((res.r_squared - r * r).abs() < 1e-12);
    }

    #[test]
    fn homoskedastic_hc1_equals_classical() {
        // residuals of +-1 orthogonal to the design
        let x = vec![1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0];
        let e = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0];
        let y: Vec<f64> = x.iter().zip(e).map(|(x, e)| 0.5 + 3.0 * x + e).collect();
        let d = dataset(&[("y", y), ("x", x)]);
        let mut spec = RegressionSpec::new(Regressor::new("y"), vec![Regressor::new("x")]);
        let robust = ols_robust(&d, &spec).unwrap();
        spec.robust = false;
        let classical = ols_robust(&d, &spec).unwrap();
        assert!((robust.terms[0].coefficient - 3.0).abs() < 1e-12);
        assert!((robust.terms[0].std_error - classical.terms[0].std_error).abs() < 1e-9);
        assert!((robust.intercept.std_error - classical.intercept.std_error).abs() < 1e-9);
    }

    #[test]
    fn log_needs_positive_values() {
        let d = dataset(&[("y", vec![1.0, 2.0, 3.0, 4.0]), ("x", vec![1.0, 0.0, 2.0, 3.0])]);
        let err = ols_robust(&d, &RegressionSpec::new(Regressor::new("y"), vec![Regressor::ln("x")])).unwrap_err();
        assert!(matches!(err, Error::NonPositiveLog { row: 2, .. }));
    }

    #[test]
    fn collinear_columns_are_named() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let z: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let d = dataset(&[("y", y), ("x", x), ("z", z)]);
        let spec = RegressionSpec::new(Regressor::new("y"), vec![Regressor::new("x"), Regressor::new("z")]);
        match ols_robust(&d, &spec) {
            Err(Error::RankDeficient(cols)) => assert_eq!(cols, vec!["z".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dependent_as_regressor() {
        let d = dataset(&[("y", vec![1.0, 2.0, 3.0, 4.0])]);
        let spec = RegressionSpec::new(Regressor::new("y"), vec![Regressor::ln("y")]);
        assert!(matches!(ols_robust(&d, &spec), Err(Error::InvalidRegression(_))));
    }

    #[test]
    fn spec_accepts_plain_names() {
        let s: RegressionSpec =
            serde_json::from_str(r#"{"dependent":"GDP","regressors":[{"column":"AYE","log":true},"HCI"]}"#).unwrap();
        assert_eq!(s.regressors[0], Regressor::ln("AYE"));
        assert_eq!(s.regressors[1], Regressor::new("HCI"));
        assert!(s.robust);
        assert_eq!(s.hc, Hc::Hc1);
    }

    #[test]
    fn spearman_reversal_and_constant() {
        let d = dataset(&[
            ("a", vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            ("b", vec![5.0, 4.0, 3.0, 2.0, 1.0]),
            ("c", vec![2.0; 5]),
        ]);
        let m = spearman_matrix(&d, &["a", "b", "c"]).unwrap();
        assert!((m.rho[[0, 1]] + 1.0).abs() < 1e-12);
        assert_eq!(m.rho[[0, 0]], 1.0);
        assert!(m.rho[[0, 2]].is_nan());
        assert_eq!(m.constant, vec!["c".to_string()]);
        assert_eq!(m.mark(0, 1), "a");
    }

    #[test]
    fn spearman_needs_five_rows() {
        let d = dataset(&[("a", vec![1.0, 2.0, 3.0, 4.0]), ("b", vec![1.0, 2.0, 3.0, 4.0])]);
        assert!(matches!(spearman_matrix(&d, &["a", "b"]), Err(Error::InsufficientObservations(_))));
    }

    proptest! {
        #[test]
        fn spearman_rank_invariant(xs in prop::collection::vec(-50.0f64..50.0, 8), ys in prop::collection::vec(-50.0f64..50.0, 8)) {
            let d1 = dataset(&[("x", xs.clone()), ("y", ys.clone())]);
            let d2 = dataset(&[("x", xs.iter().map(|v| v.exp()).collect()), ("y", ys)]);
            let a = spearman_matrix(&d1, &["x", "y"]).unwrap();
            let b = spearman_matrix(&d2, &["x", "y"]).unwrap();
            prop_assert!((a.rho[[0, 1]] - b.rho[[0, 1]]).abs() < 1e-12 || (a.rho[[0, 1]].is_nan() && b.rho[[0, 1]].is_nan()));
        }

        #[test]
        fn r2_affine_invariant(seed in 0u64..1000, scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
            let z: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..20).map(|i| x[i] - z[i] + rng.random::<f64>()).collect();
            let x2: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            let spec = RegressionSpec::new(Regressor::new("y"), vec![Regressor::new("x"), Regressor::new("z")]);
            let a = ols_robust(&dataset(&[("y", y.clone()), ("x", x), ("z", z.clone())]), &spec).unwrap();
            let b = ols_robust(&dataset(&[("y", y), ("x", x2), ("z", z)]), &spec).unwrap();
            prop_assert!((a.r_squared - b.r_squared).abs() < 1e-10);
        }
    }
}
