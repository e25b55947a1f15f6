//! Output directory: CSV tables, DPMF arrays and the run manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use densmap::dpmf::DpmfArray;

use crate::config::RunConfig;
use crate::error::CliError;

/// CSV cell: numbers use the shortest representation that round-trips.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

pub struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.display().to_string(), source })?;
        Ok(Output { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn target(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn fail(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Output { path: path.display().to_string(), source }
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> Result<(), CliError> {
        let path = self.target(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| CliError::Output { path: path.display().to_string(), source: e.into() })?;
        let to_io = |e: csv::Error| CliError::Output { path: path.display().to_string(), source: e.into() };
        w.write_record(header).map_err(to_io)?;
        for row in rows {
            w.write_record(row.iter().map(Cell::render)).map_err(to_io)?;
        }
        w.flush().map_err(Output::fail(&path))
    }

    /// Two-column `quantity,value` table.
    pub fn summary(&mut self, name: &str, rows: Vec<(&str, Cell)>) -> Result<(), CliError> {
        self.csv(name, &["quantity", "value"], rows.into_iter().map(|(k, v)| vec![Cell::from(k), v]).collect())
    }

    pub fn dpmf(&mut self, name: &str, array: &DpmfArray) -> Result<(), CliError> {
        let path = self.target(name);
        let file = File::create(&path).map_err(Output::fail(&path))?;
        let mut w = BufWriter::new(file);
        array.write_to(&mut w).map_err(|e| CliError::Numerical(format!("{}: {e}", path.display())))?;
        w.flush().map_err(Output::fail(&path))
    }

    pub fn manifest(
        &mut self,
        command: &str,
        cfg: &RunConfig,
        elapsed: Duration,
        status: &str,
    ) -> Result<(), CliError> {
        let mut files = self.written.clone();
        let path = self.target("manifest.txt");
        let mut text = format!(
            "densmap {}\ncommand = {command}\nstatus = {status}\nwall_time_s = {:.6}\n",
            env!("CARGO_PKG_VERSION"),
            elapsed.as_secs_f64()
        );
        files.sort();
        text.push_str(&format!("outputs = {}\n\n[config]\n", files.join(", ")));
        text.push_str(&cfg.echo());
        fs::write(&path, text).map_err(Output::fail(&path))
    }
}
