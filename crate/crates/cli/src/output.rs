//! Artifact writers. Floats go out with 17 significant digits so that every
//! file reads back to the exact binary64 value; files are written to a
//! temporary name and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nonparaxial::ComplexField;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const GIT_DESCRIBE: &str = match option_env!("NONPARAXIAL_GIT_DESCRIBE") {
    Some(v) => v,
    None => "unknown",
};

/// `d.dddddddddddddddde±x`: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let io = |e: std::io::Error, p: &Path| CliError::Io(format!("{}: {e}", p.display()));
    fs::write(&tmp, contents).map_err(|e| io(e, &tmp))?;
    fs::rename(&tmp, path).map_err(|e| io(e, path))
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(&fmt_f64(*v));
            }
            s.push('\n');
        }
        s
    }
}

pub fn field_table(field: &ComplexField) -> Table {
    let mut t = Table::new(&["x", "re", "im", "abs2"]);
    for (i, v) in field.values().iter().enumerate() {
        t.push(vec![field.grid().x(i), v.re, v.im, v.norm_sqr()]);
    }
    t
}

fn gnuplot_script(csv: &str, table: &Table, x_col: usize, y_cols: &[usize]) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    let _ = write!(s, "set xlabel '{}'\nplot ", table.header[x_col]);
    let parts: Vec<String> =
        y_cols.iter().map(|c| format!("'{csv}' using {}:{} with lines", x_col + 1, c + 1)).collect();
    s.push_str(&parts.join(", \\\n     "));
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Sidecar<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    git_describe: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    files: &'a [String],
    warnings: &'a [String],
    results: &'a Value,
}

/// Collects the files of one run under `dir/prefix*`.
pub struct Artifacts {
    dir: PathBuf,
    prefix: String,
    gnuplot: bool,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

impl Artifacts {
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let dir = cfg.output.dir.clone();
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            prefix: cfg.output.prefix.clone(),
            gnuplot: cfg.output.gnuplot,
            files: Vec::new(),
            warnings: Vec::new(),
        })
    }

    fn put(&mut self, name: String, contents: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(&name), contents)?;
        self.files.push(name);
        Ok(())
    }

    /// Writes `prefix{suffix}.csv`, plotting `y_cols` against `x_col` when scripts are on.
    pub fn csv(&mut self, suffix: &str, table: &Table, x_col: usize, y_cols: &[usize]) -> Result<(), CliError> {
        let name = format!("{}{suffix}.csv", self.prefix);
        self.put(name.clone(), table.to_csv().as_bytes())?;
        if self.gnuplot {
            let script = gnuplot_script(&name, table, x_col, y_cols);
            self.put(format!("{}{suffix}.gp", self.prefix), script.as_bytes())?;
        }
        Ok(())
    }

    /// Writes the metadata sidecar `prefix.json` and returns its path.
    pub fn finish(mut self, cfg: &RunConfig, results: &Value) -> Result<PathBuf, CliError> {
        let name = format!("{}.json", self.prefix);
        let path = self.dir.join(&name);
        self.files.push(name);
        let sidecar = Sidecar {
            schema_version: SCHEMA_VERSION,
            tool: "nonparaxial",
            version: env!("CARGO_PKG_VERSION"),
            git_describe: GIT_DESCRIBE,
            command: cfg.command.name(),
            config: cfg,
            files: &self.files,
            warnings: &self.warnings,
            results,
        };
        let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
