use std::collections::HashMap;
use std::fs;
use std::path::Path;

use latentpath::assessment::{
    communality_redundancy, cross_loadings, goodness_of_fit, residual_orthogonality, threshold_screen,
    unidimensionality, ScreenInput,
};
use latentpath::bootstrap::{bootstrap, BootSpec};
use latentpath::dataset::{complete_cases, load_csv, Dataset};
use latentpath::econometrics::{ols_robust, spearman_matrix, RegressionSpec};
use latentpath::effects::decompose_effects;
use latentpath::estimator::{fit, FitResult, ManifestMatrix};
use latentpath::index::{compare_indices, index_from_dataset, IndexTable};
use latentpath::model::{parse_model, MeasurementMode, ModelSpec};
use latentpath::report::{self, Report};
use latentpath::testkit::{generate, SynthSpec};
use latentpath::Error;
use ndarray::Array1;
use serde::Deserialize;

use crate::args::{BootArgs, DataArgs, FitArgs, IndexArgs, ModelArgs, RegressArgs, SimulateArgs};
use crate::output::emit;
use crate::Failure;

/// Attach the offending file to a library error.
fn at(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| Failure::from(e).context(path)
}

fn load_data(a: &DataArgs) -> Result<Dataset, Failure> {
    let d = match &a.entity_cols {
        Some(cols) => {
            let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
            load_csv(&a.data, &cols, a.year)
        }
        None => match load_csv(&a.data, &["country", "year"], a.year) {
            Err(Error::MissingColumn(c)) if c == "year" => load_csv(&a.data, &["country"], a.year),
            other => other,
        },
    };
    d.map_err(at(&a.data))
}

fn load_model(path: &Path, a: &ModelArgs) -> Result<ModelSpec, Failure> {
    let mut m = parse_model(path).map_err(at(path))?;
    if let Some(s) = a.scheme {
        m.scheme = s.into();
    }
    if let Some(t) = a.tol {
        m.tol = t;
    }
    if let Some(n) = a.max_iter {
        m.max_iter = n;
    }
    m.validate().map_err(at(path))?;
    Ok(m)
}

struct Fitted {
    data: ManifestMatrix,
    rows: Dataset,
    fit: FitResult,
}

fn fit_model(d: &Dataset, m: &ModelSpec, data_path: &Path) -> Result<Fitted, Failure> {
    let (rows, dropped) = complete_cases(d, &m.manifest_names()).map_err(at(data_path))?;
    if dropped > 0 {
        eprintln!("note: dropped {dropped} rows with missing manifest values");
    }
    let data = ManifestMatrix::from_dataset(&rows, m).map_err(at(data_path))?;
    let fit = fit(&data, m)?;
    Ok(Fitted { data, rows, fit })
}

fn not_converged(f: &FitResult) -> Failure {
    Failure::Numeric(format!(
        "estimation did not converge after {} iterations; tables show the last iterate",
        f.iterations
    ))
}

fn fit_tables(f: &Fitted, m: &ModelSpec) -> Vec<report::Table> {
    let quality = communality_redundancy(&f.fit);
    let effects = decompose_effects(&f.fit.path_coefficients, &m.topological_indices(), &f.fit.blocks);
    vec![
        report::outer_model_table(&quality),
        report::unidimensionality_table(&unidimensionality(&f.fit, &f.data, m)),
        report::inner_model_table(&quality, goodness_of_fit(&quality)),
        report::cross_loadings_table(&cross_loadings(&f.fit, &f.data)),
        report::structural_table(&f.fit, &effects),
    ]
}

pub fn cmd_fit(a: &FitArgs) -> Result<(), Failure> {
    let d = load_data(&a.data)?;
    let m = load_model(&a.model.model, &a.model)?;
    let f = fit_model(&d, &m, &a.data.data)?;
    emit(&Report { tables: fit_tables(&f, &m) }, &a.out)?;
    if f.fit.converged {
        Ok(())
    } else {
        Err(not_converged(&f.fit))
    }
}

pub fn cmd_assess(a: &FitArgs) -> Result<(), Failure> {
    let d = load_data(&a.data)?;
    let m = load_model(&a.model.model, &a.model)?;
    let f = fit_model(&d, &m, &a.data.data)?;
    let unidim = unidimensionality(&f.fit, &f.data, &m);
    let quality = communality_redundancy(&f.fit);
    let verdicts = threshold_screen(ScreenInput {
        unidim: &unidim,
        quality: &quality,
        gof: goodness_of_fit(&quality),
    });
    let mut residuals = Vec::new();
    for b in m.blocks.iter().filter(|b| b.mode == MeasurementMode::A && b.manifest.len() > 1) {
        residuals.push((b.name.clone(), residual_orthogonality(&f.fit, &f.data, &b.name)?));
    }
    let tables = vec![report::screen_table(&verdicts), report::residuals_table(&residuals)];
    emit(&Report { tables }, &a.out)?;
    if f.fit.converged {
        Ok(())
    } else {
        Err(not_converged(&f.fit))
    }
}

pub fn cmd_bootstrap(a: &BootArgs) -> Result<(), Failure> {
    let d = load_data(&a.data)?;
    let m = load_model(&a.model.model, &a.model)?;
    let (rows, dropped) = complete_cases(&d, &m.manifest_names()).map_err(at(&a.data.data))?;
    if dropped > 0 {
        eprintln!("note: dropped {dropped} rows with missing manifest values");
    }
    let data = ManifestMatrix::from_dataset(&rows, &m).map_err(at(&a.data.data))?;
    let spec = BootSpec {
        replicates: a.boot,
        ci_level: a.ci,
        seed: a.seed,
    };
    let result = bootstrap(&data, &m, &spec)?;
    emit(
        &Report {
            tables: vec![report::bootstrap_table(&result)],
        },
        &a.out,
    )?;
    Ok(())
}

fn default_block(m: &ModelSpec) -> String {
    let last = *m.topological_indices().last().expect("validated models have blocks");
    m.blocks[last].name.clone()
}

fn index_for(d: &Dataset, m: &ModelSpec, data_path: &Path, block: &str, label: &str) -> Result<IndexTable, Failure> {
    let f = fit_model(d, m, data_path)?;
    if !f.fit.converged {
        return Err(not_converged(&f.fit));
    }
    Ok(index_from_dataset(&f.fit, &f.rows, m, block, label)?)
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn cmd_index(a: &IndexArgs) -> Result<(), Failure> {
    let d = load_data(&a.data)?;
    let m = load_model(&a.model.model, &a.model)?;
    let block = a.block.clone().unwrap_or_else(|| default_block(&m));
    let mut tables = vec![index_for(&d, &m, &a.data.data, &block, &a.label)?];
    for path in &a.compare {
        let other = load_model(path, &a.model)?;
        tables.push(index_for(&d, &other, &a.data.data, &block, &stem(path))?);
    }
    let mut out = vec![report::index_table(&tables)];
    if tables.len() > 1 {
        out.push(report::rank_correlation_table(&compare_indices(&tables)?));
    }
    emit(&Report { tables: out }, &a.out)?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegressFile {
    models: Vec<RegressionSpec>,
    #[serde(default)]
    spearman: Vec<String>,
}

fn read_regress_file(path: &Path) -> Result<RegressFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure::from(Error::from(e)).context(path))?;
    let parsed = if value.get("models").is_some() {
        serde_json::from_str(&text)
    } else {
        serde_json::from_str::<RegressionSpec>(&text).map(|s| RegressFile {
            models: vec![s],
            spearman: Vec::new(),
        })
    };
    parsed.map_err(|e| Failure::from(Error::from(e)).context(path))
}

pub fn cmd_regress(a: &RegressArgs) -> Result<(), Failure> {
    let file = read_regress_file(&a.spec)?;
    let mut d = load_data(&a.data)?;
    if let Some(path) = &a.model {
        let m = load_model(
            path,
            &ModelArgs {
                model: path.clone(),
                scheme: None,
                tol: None,
                max_iter: None,
            },
        )?;
        let block = a.block.clone().unwrap_or_else(|| default_block(&m));
        let t = index_for(&d, &m, &a.data.data, &block, &a.label)?;
        let scores: HashMap<_, _> = t.rows.iter().map(|r| (&r.entity, r.score)).collect();
        let col: Array1<f64> = d
            .entities()
            .iter()
            .map(|e| scores.get(e).copied().unwrap_or(f64::NAN))
            .collect();
        d = d.with_column(&a.label, col).map_err(at(&a.data.data))?;
    }
    let mut results = Vec::new();
    for spec in &file.models {
        results.push(ols_robust(&d, spec).map_err(at(&a.spec))?);
    }
    let mut tables = Vec::new();
    if !results.is_empty() {
        tables.push(report::regression_table(&results));
    }
    if !file.spearman.is_empty() {
        tables.push(report::spearman_table(&spearman_matrix(&d, &file.spearman).map_err(at(&a.spec))?));
    }
    emit(&Report { tables }, &a.out)?;
    Ok(())
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.spec).map_err(|e| Failure::Input(format!("{}: {e}", a.spec.display())))?;
    let mut spec: SynthSpec = serde_json::from_str(&text).map_err(|e| Failure::from(Error::from(e)).context(&a.spec))?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let (d, truth) = generate(&spec).map_err(at(&a.spec))?;
    let model = spec.model().map_err(at(&a.spec))?;
    fs::create_dir_all(&a.out).map_err(|e| Failure::Input(format!("{}: {e}", a.out.display())))?;
    let write = |name: &str, bytes: &[u8]| {
        let p = a.out.join(name);
        fs::write(&p, bytes).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
    };
    let mut csv = Vec::new();
    d.write_csv(&mut csv)?;
    write("data.csv", &csv)?;
    let truth = serde_json::to_string_pretty(&truth).map_err(Error::from)?;
    write("truth.json", format!("{truth}\n").as_bytes())?;
    write("model.json", format!("{}\n", model.to_json()).as_bytes())?;
    Ok(())
}
