use std::fs;
use std::io::{self, Write};
use std::path::Path;

use latentpath::report::Report;

use crate::args::{Format, OutArgs};
use crate::Failure;

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Render `report` to stdout or, with `--out`, one file per table (a single
/// `report.json` for JSON).
pub fn emit(report: &Report, out: &OutArgs) -> Result<(), Failure> {
    let Some(dir) = &out.out else {
        let text = match out.format {
            Format::Text => report.to_text(),
            Format::Csv => report
                .tables
                .iter()
                .map(|t| format!("# {}\n{}", t.name, t.to_csv()))
                .collect::<Vec<_>>()
                .join("\n"),
            Format::Json => report.to_json() + "\n",
        };
        let mut stdout = io::stdout().lock();
        return stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| Failure::Input(format!("stdout: {e}")));
    };
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    match out.format {
        Format::Json => write_file(&dir.join("report.json"), &(report.to_json() + "\n")),
        Format::Text => {
            for t in &report.tables {
                write_file(&dir.join(format!("{}.txt", t.name)), &t.to_text())?;
            }
            Ok(())
        }
        Format::Csv => {
            for t in &report.tables {
                write_file(&dir.join(format!("{}.csv", t.name)), &t.to_csv())?;
            }
            Ok(())
        }
    }
}
