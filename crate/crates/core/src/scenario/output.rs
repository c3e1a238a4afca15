use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::ScenarioConfig;
use super::run::{derived_constants, RunOutput};
use super::{RunSummary, ScenarioError};

/// One CSV file: a header row and rows of numbers in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Per-curve facts recorded in the manifest next to the file name.
    pub meta: Value,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn io_err(path: &Path, e: std::io::Error) -> ScenarioError {
    ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write(path: &Path, text: &str) -> Result<(), ScenarioError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub(crate) fn write_run(
    config: &ScenarioConfig,
    output: &RunOutput,
) -> Result<RunSummary, ScenarioError> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut files: Vec<PathBuf> = Vec::new();
    let mut curves = Vec::new();
    for table in &output.tables {
        let path = dir.join(&table.file);
        write(&path, &table.to_csv())?;
        curves.push(json!({ "file": table.file, "meta": table.meta }));
        files.push(path);
    }
    for (name, value) in &output.documents {
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(value).expect("json values serialise");
        write(&path, &(text + "\n"))?;
        files.push(path);
    }

    let manifest = json!({
        "tool": "acmag",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": config.scenario.id(),
        "seed": config.seed,
        "config": config,
        "derived": derived_constants(config),
        "curves": curves,
        "files": files
            .iter()
            .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect::<Vec<_>>(),
    });
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("json values serialise");
    write(&manifest_path, &(text + "\n"))?;
    Ok(RunSummary {
        files,
        manifest: manifest_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_significant_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-1.9008e-5), "-1.9008000000000002e-5");
        assert_eq!(format_number(0.0), "0.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_layout() {
        let t = Table {
            file: "a.csv".into(),
            header: vec!["x_s".into(), "y".into()],
            rows: vec![vec![1.0, 2.0], vec![3.0, f64::NAN]],
            meta: Value::Null,
        };
        assert_eq!(
            t.to_csv(),
            "x_s,y\n1.0000000000000000e0,2.0000000000000000e0\n3.0000000000000000e0,NaN\n"
        );
    }
}
